"""Exact joint states of the algorithm registers (Q, P, W) and the oracle register F.

A basis state ``|x, p, w>|f>`` is stored as a flat integer tuple
``(x, p, w_0, ..., w_{s-1}, f_0, ..., f_{M-1})``.  Entries of ``f`` range over
``0..N`` where the value ``N`` stands for the empty symbol (no recorded value).
Flat tuples compare lexicographically, which is the canonical component order.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Iterable, Iterator, NamedTuple, Sequence

import numpy as np

PRUNE_EPS = 1e-14
UNITARY_TOL = 1e-10
DENSE_LIMIT = 2**24
INDEX_LIMIT = 2**63 - 1


class LayoutError(ValueError):
    pass


@dataclass(frozen=True)
class RegisterLayout:
    """Register sizes: domain ``M``, range/phase modulus ``N``, workspace slot alphabets."""

    M: int
    N: int
    slots: tuple[int, ...] = ()

    def __post_init__(self):
        if not (isinstance(self.M, (int, np.integer)) and self.M >= 1):
            raise LayoutError(f"M must be a positive integer, got {self.M!r}")
        if not (isinstance(self.N, (int, np.integer)) and self.N >= 1):
            raise LayoutError(f"N must be a positive integer, got {self.N!r}")
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "slots", tuple(int(s) for s in self.slots))
        if any(s < 1 for s in self.slots):
            raise LayoutError(f"slot alphabets must be non-empty, got {self.slots}")
        if self.size > INDEX_LIMIT:
            raise LayoutError(f"basis space of {self.size} states does not fit a 64-bit index")

    @classmethod
    def collision(cls, M: int, N: int, K: int, scratch: Sequence[int] = ()) -> "RegisterLayout":
        """Layout whose first ``3K`` slots hold the output triples (x1, x2, y)."""
        return cls(M, N, (M, M, N + 1) * K + tuple(scratch))

    @classmethod
    def ksearch(cls, M: int, K: int, scratch: Sequence[int] = ()) -> "RegisterLayout":
        """Binary-range layout whose first ``K`` slots hold output positions."""
        return cls(M, 2, (M,) * K + tuple(scratch))

    @property
    def bot(self) -> int:
        return self.N

    @property
    def f_offset(self) -> int:
        return 2 + len(self.slots)

    @property
    def width(self) -> int:
        return 2 + len(self.slots) + self.M

    @property
    def w_size(self) -> int:
        return math.prod(self.slots)

    @property
    def size(self) -> int:
        return self.M * self.N * self.w_size * (self.N + 1) ** self.M

    @property
    def dense_shape(self) -> tuple[int, ...]:
        return (self.M, self.N, *self.slots) + (self.N + 1,) * self.M

    @property
    def dense_feasible(self) -> bool:
        return self.size <= DENSE_LIMIT

    def register_sizes(self) -> tuple[int, ...]:
        return (self.M, self.N, *self.slots) + (self.N + 1,) * self.M

    def position(self, name: str) -> int:
        """Key position of a register named ``Q``, ``P``, ``W<i>`` or ``F<x>``."""
        if name == "Q":
            return 0
        if name == "P":
            return 1
        kind, idx = name[:1], name[1:]
        if kind in ("W", "F") and idx.isdigit():
            i = int(idx)
            if kind == "W" and i < len(self.slots):
                return 2 + i
            if kind == "F" and i < self.M:
                return self.f_offset + i
        raise LayoutError(f"unknown register {name!r} for layout {self}")

    def size_of(self, name: str) -> int:
        return self.register_sizes()[self.position(name)]

    def to_json(self) -> dict:
        return {"M": self.M, "N": self.N, "slots": list(self.slots)}

    @classmethod
    def from_json(cls, data: dict) -> "RegisterLayout":
        return cls(data["M"], data["N"], tuple(data.get("slots", ())))


class BasisComponent(NamedTuple):
    x: int
    p: int
    w: tuple
    f: tuple

    @property
    def key(self) -> tuple:
        return (self.x, self.p, *self.w, *self.f)

    @classmethod
    def from_key(cls, layout: RegisterLayout, key: Sequence[int]) -> "BasisComponent":
        o = layout.f_offset
        return cls(key[0], key[1], tuple(key[2:o]), tuple(key[o:]))


class QueryState:
    """Sparse superposition: map from flat basis keys to complex amplitudes.

    Treated as immutable; every operation returns a new state.  Amplitudes with
    magnitude below ``PRUNE_EPS`` are dropped on construction.
    """

    __slots__ = ("layout", "amplitudes")

    def __init__(self, layout: RegisterLayout, amplitudes: dict, prune: bool = True):
        self.layout = layout
        if prune:
            self.amplitudes = {k: a for k, a in amplitudes.items() if abs(a) >= PRUNE_EPS}
        else:
            self.amplitudes = dict(amplitudes)

    @classmethod
    def from_components(cls, layout: RegisterLayout, items) -> "QueryState":
        amps: dict = {}
        for comp, amp in items:
            key = comp.key if isinstance(comp, BasisComponent) else tuple(comp)
            _check_key(layout, key)
            amps[key] = amps.get(key, 0j) + complex(amp)
        return cls(layout, amps)

    def __len__(self):
        return len(self.amplitudes)

    def __repr__(self):
        return f"QueryState({self.layout}, {len(self)} components, norm={self.norm():.12g})"

    def items(self):
        return self.amplitudes.items()

    def components(self) -> Iterator[tuple[BasisComponent, complex]]:
        """Components in canonical order."""
        for key in sorted(self.amplitudes):
            yield BasisComponent.from_key(self.layout, key), self.amplitudes[key]

    def amplitude(self, comp) -> complex:
        key = comp.key if isinstance(comp, BasisComponent) else tuple(comp)
        return self.amplitudes.get(key, 0j)

    def norm(self) -> float:
        return math.sqrt(sum(abs(a) ** 2 for a in self.amplitudes.values()))

    def validate(self) -> None:
        for key in self.amplitudes:
            _check_key(self.layout, key)


def _check_key(layout: RegisterLayout, key: tuple) -> None:
    if len(key) != layout.width:
        raise LayoutError(f"key {key} has width {len(key)}, expected {layout.width}")
    for v, s in zip(key, layout.register_sizes()):
        if not 0 <= v < s:
            raise LayoutError(f"key {key} out of range for layout {layout}")


def init_recording_state(layout: RegisterLayout) -> QueryState:
    """|0>_Q |0>_P |0>_W |empty^M>_F with amplitude 1."""
    key = (0, 0) + (0,) * len(layout.slots) + (layout.bot,) * layout.M
    return QueryState(layout, {key: 1.0 + 0j})


def check_unitary(U: np.ndarray, tol: float = UNITARY_TOL) -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if U.ndim != 2 or U.shape[0] != U.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {U.shape}")
    err = np.max(np.abs(U.conj().T @ U - np.eye(U.shape[0]))) if U.size else 0.0
    if err > tol:
        raise ValueError(f"matrix is not unitary: max|U^H U - I| = {err:.3e} > {tol:g}")
    return U


def _targets(layout: RegisterLayout, target) -> tuple[tuple[int, ...], tuple[int, ...]]:
    names = (target,) if isinstance(target, str) else tuple(target)
    if not names:
        raise LayoutError("empty register selection")
    positions = tuple(layout.position(n) for n in names)
    if len(set(positions)) != len(positions):
        raise LayoutError(f"repeated register in {names}")
    sizes = tuple(layout.register_sizes()[p] for p in positions)
    return positions, sizes


def _digits(i: int, sizes: Sequence[int]) -> tuple[int, ...]:
    out = []
    for s in reversed(sizes):
        i, r = divmod(i, s)
        out.append(r)
    return tuple(reversed(out))


def _columns_from_matrix(U: np.ndarray, sizes) -> list:
    cols = []
    for i in range(U.shape[1]):
        nz = np.nonzero(np.abs(U[:, i]) > 0)[0]
        cols.append([(_digits(int(j), sizes), complex(U[j, i])) for j in nz])
    return cols


def _apply_columns(state: QueryState, positions, sizes, columns) -> QueryState:
    out: dict = {}
    get = out.get
    if len(positions) == 1:
        pos = positions[0]
        for key, amp in state.amplitudes.items():
            head, tail = key[:pos], key[pos + 1:]
            for (d,), c in columns[key[pos]]:
                k = head + (d,) + tail
                out[k] = get(k, 0j) + amp * c
        return QueryState(state.layout, out)
    for key, amp in state.amplitudes.items():
        i = 0
        for pos, s in zip(positions, sizes):
            i = i * s + key[pos]
        base = list(key)
        for digits, c in columns[i]:
            for pos, d in zip(positions, digits):
                base[pos] = d
            k = tuple(base)
            out[k] = get(k, 0j) + amp * c
    return QueryState(state.layout, out)


def apply_local_unitary(state: QueryState, target, U) -> QueryState:
    """Apply ``U`` to the named register(s), identity elsewhere.

    ``target`` is a register name or a sequence of names; a joint target acts on
    the product alphabet in the given register order (first name most significant).
    """
    positions, sizes = _targets(state.layout, target)
    U = check_unitary(U)
    if U.shape[0] != math.prod(sizes):
        raise ValueError(f"matrix dimension {U.shape[0]} does not match target size {math.prod(sizes)}")
    return _apply_columns(state, positions, sizes, _columns_from_matrix(U, sizes))


def apply_permutation(state: QueryState, target, perm: Sequence[int]) -> QueryState:
    """Basis permutation ``|i> -> |perm[i]>`` on the joint target alphabet."""
    positions, sizes = _targets(state.layout, target)
    perm = np.asarray(perm, dtype=np.int64)
    n = math.prod(sizes)
    if perm.shape != (n,) or not np.array_equal(np.sort(perm), np.arange(n)):
        raise ValueError("not a permutation of the target alphabet")
    out: dict = {}
    base_digits: dict = {}
    for key, amp in state.amplitudes.items():
        i = 0
        for pos, s in zip(positions, sizes):
            i = i * s + key[pos]
        digits = base_digits.get(i)
        if digits is None:
            digits = base_digits[i] = _digits(int(perm[i]), sizes)
        k = list(key)
        for pos, d in zip(positions, digits):
            k[pos] = d
        k = tuple(k)
        out[k] = out.get(k, 0j) + amp
    return QueryState(state.layout, out)


def norm(state: QueryState) -> float:
    return state.norm()


def _same_layout(a: QueryState, b: QueryState) -> None:
    if a.layout != b.layout:
        raise LayoutError(f"layout mismatch: {a.layout} vs {b.layout}")


def inner_product(a: QueryState, b: QueryState) -> complex:
    """<a|b>, conjugate-linear in ``a``."""
    _same_layout(a, b)
    small, large = (a, b) if len(a) <= len(b) else (b, a)
    total = 0j
    for key, amp in small.amplitudes.items():
        other = large.amplitudes.get(key)
        if other is not None:
            total += amp.conjugate() * other if small is a else other.conjugate() * amp
    return total


def project(state: QueryState, predicate: Callable[[BasisComponent], bool]) -> QueryState:
    """Keep components satisfying ``predicate``; no renormalisation."""
    layout = state.layout
    kept = {
        k: a for k, a in state.amplitudes.items() if predicate(BasisComponent.from_key(layout, k))
    }
    return QueryState(layout, kept, prune=False)


def add(a: QueryState, b: QueryState, scale: complex = 1.0) -> QueryState:
    """a + scale * b."""
    _same_layout(a, b)
    out = dict(a.amplitudes)
    for k, v in b.amplitudes.items():
        out[k] = out.get(k, 0j) + scale * v
    return QueryState(a.layout, out)


def distance(a: QueryState, b: QueryState) -> float:
    return add(a, b, -1.0).norm() if (len(a) or len(b)) else 0.0


def random_state(layout: RegisterLayout, n_components: int, rng: np.random.Generator,
                 max_recorded: int | None = None) -> QueryState:
    """Normalised state on ``n_components`` random basis keys (Gaussian amplitudes).

    ``max_recorded`` caps the number of non-empty ``f`` entries per component.
    """
    if n_components > layout.size:
        raise ValueError(f"cannot draw {n_components} distinct keys from {layout.size} basis states")
    sizes = layout.register_sizes()
    o = layout.f_offset
    amps: dict = {}
    while len(amps) < n_components:
        head = tuple(int(rng.integers(s)) for s in sizes[:o])
        f = [int(rng.integers(layout.N + 1)) for _ in range(layout.M)]
        if max_recorded is not None:
            filled = [i for i, v in enumerate(f) if v != layout.bot]
            for i in filled[max_recorded:]:
                f[i] = layout.bot
        key = head + tuple(f)
        amps[key] = complex(rng.normal(), rng.normal())
    s = math.sqrt(sum(abs(a) ** 2 for a in amps.values()))
    return QueryState(layout, {k: a / s for k, a in amps.items()})


def to_dense(state: QueryState) -> np.ndarray:
    layout = state.layout
    if not layout.dense_feasible:
        raise LayoutError(f"dense size {layout.size} exceeds {DENSE_LIMIT}")
    arr = np.zeros(layout.dense_shape, dtype=complex)
    if state.amplitudes:
        keys = np.array(list(state.amplitudes.keys()), dtype=np.int64)
        arr[tuple(keys.T)] = np.fromiter(state.amplitudes.values(), dtype=complex, count=len(keys))
    return arr


def from_dense(layout: RegisterLayout, arr: np.ndarray) -> QueryState:
    idx = np.nonzero(np.abs(arr) >= PRUNE_EPS)
    vals = arr[idx]
    keys = zip(*(i.tolist() for i in idx))
    return QueryState(layout, dict(zip(keys, vals.tolist())), prune=False)


def dump_jsonl(state: QueryState, fp) -> None:
    """One component per line in canonical order; ``f`` uses ``N`` for the empty symbol."""
    for comp, amp in state.components():
        fp.write(json.dumps({
            "x": comp.x, "p": comp.p, "w": list(comp.w), "f": list(comp.f),
            "re": amp.real, "im": amp.imag,
        }) + "\n")


def load_jsonl(layout: RegisterLayout, lines: Iterable[str]) -> QueryState:
    items = []
    for line in lines:
        line = line.strip()
        if not line:
            continue
        d = json.loads(line)
        comp = BasisComponent(d["x"], d["p"], tuple(d["w"]), tuple(d["f"]))
        items.append((comp, complex(d["re"], d["im"])))
    return QueryState.from_components(layout, items)
