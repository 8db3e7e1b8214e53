"""Phase oracle, sampling unitaries and the recording query operator."""
from __future__ import annotations

import json
import math
from functools import lru_cache
from typing import Sequence

import numpy as np

from . import dense
from .relations import OutputRelation
from .state import LayoutError, QueryState, UNITARY_TOL, check_unitary, to_dense


@lru_cache(maxsize=None)
def phase_table(N: int) -> np.ndarray:
    """omega_N^j = exp(2 pi i j / N) for j in [N]; powers are looked up mod N."""
    return np.exp(2j * np.pi * np.arange(N) / N)


class SamplingUnitary:
    """Per-position (N+1)x(N+1) unitaries over the alphabet (0, ..., N-1, empty).

    Column ``N`` of each matrix is the initial oracle state of that position.
    A single matrix is shared by every position; a sequence gives one per position.
    """

    def __init__(self, matrices, name: str = "custom", params: dict | None = None,
                 probabilities=None):
        arr = np.asarray(matrices, dtype=complex)
        if arr.ndim == 2:
            self._shared = check_unitary(arr)
            self._per_x = None
            mats = [self._shared]
        elif arr.ndim == 3:
            self._shared = None
            self._per_x = [check_unitary(m) for m in arr]
            mats = self._per_x
        else:
            raise ValueError("expected a matrix or a stack of matrices")
        self.N = mats[0].shape[0] - 1
        if self.N < 1 or any(m.shape != mats[0].shape for m in mats):
            raise ValueError("inconsistent sampling unitary shapes")
        for x, m in enumerate(mats):
            if abs(m[self.N, self.N]) > UNITARY_TOL:
                raise ValueError(f"position {x}: S|empty> must have no empty component")
            if probabilities is not None:
                probs = np.asarray(probabilities[x] if self._per_x else probabilities, dtype=float)
                if np.max(np.abs(np.abs(m[: self.N, self.N]) ** 2 - probs)) > 1e-10:
                    raise ValueError(f"position {x}: S|empty> does not encode the given distribution")
        self.name = name
        self.params = dict(params or {})

    @property
    def per_position(self) -> bool:
        return self._per_x is not None

    def matrix(self, x: int) -> np.ndarray:
        if self._per_x is None:
            return self._shared
        return self._per_x[x]

    def n_positions(self) -> int | None:
        return None if self._per_x is None else len(self._per_x)

    def check_layout(self, layout) -> None:
        if self.N != layout.N:
            raise LayoutError(f"sampling unitary range {self.N} does not match layout N={layout.N}")
        if self._per_x is not None and len(self._per_x) != layout.M:
            raise LayoutError(f"{len(self._per_x)} sampling unitaries for M={layout.M}")

    def to_json(self):
        def enc(m):
            return [[[float(v.real), float(v.imag)] for v in row] for row in m]
        if self._per_x is None:
            return enc(self._shared)
        return [enc(m) for m in self._per_x]

    @classmethod
    def from_json(cls, data, name: str = "custom") -> "SamplingUnitary":
        arr = np.asarray(data, dtype=float)
        return cls(arr[..., 0] + 1j * arr[..., 1], name=name)

    def dumps(self) -> str:
        return json.dumps(self.to_json())


def build_uniform_sampling_unitary(N: int) -> SamplingUnitary:
    """Swap |empty> with the uniform superposition, fix the other Fourier vectors."""
    if N < 1:
        raise ValueError("N must be positive")
    dim = N + 1
    bot = np.zeros(dim)
    bot[N] = 1.0
    S = np.zeros((dim, dim), dtype=complex)
    omega = phase_table(N)
    fourier = []
    for p in range(N):
        v = np.zeros(dim, dtype=complex)
        v[:N] = omega[(p * np.arange(N)) % N] / math.sqrt(N)
        fourier.append(v)
    S += np.outer(fourier[0], bot) + np.outer(bot, fourier[0].conj())
    for v in fourier[1:]:
        S += np.outer(v, v.conj())
    return SamplingUnitary(S, name="uniform", params={"N": N})


def build_bernoulli_sampling_unitary(K: int, N: int) -> SamplingUnitary:
    """Range {0, 1} with Pr[1] = K/N: |empty> <-> |+>, |-> fixed."""
    if not 1 <= K <= N:
        raise ValueError(f"need 1 <= K <= N, got K={K}, N={N}")
    alpha, beta = math.sqrt(1 - K / N), math.sqrt(K / N)
    plus = np.array([alpha, beta, 0.0])
    minus = np.array([beta, -alpha, 0.0])
    bot = np.array([0.0, 0.0, 1.0])
    S = np.outer(plus, bot) + np.outer(bot, plus) + np.outer(minus, minus)
    return SamplingUnitary(S, name="bernoulli", params={"K": K, "N": N, "alpha": alpha, "beta": beta})


def build_product_sampling_unitary(distributions: Sequence[Sequence[float]]) -> SamplingUnitary:
    """Per-position Householder reflections swapping |empty> with sqrt(D_x)."""
    mats, probs = [], []
    for d in distributions:
        d = np.asarray(d, dtype=float)
        if np.any(d < 0) or abs(d.sum() - 1) > 1e-12:
            raise ValueError("each distribution must be non-negative and sum to 1")
        N = len(d)
        v = np.append(np.sqrt(d), 0.0)
        e = np.zeros(N + 1)
        e[N] = 1.0
        u = e - v
        mats.append(np.eye(N + 1) - 2 * np.outer(u, u) / (u @ u))
        probs.append(d)
    return SamplingUnitary(np.array(mats), name="product", probabilities=probs)


def build_point_sampling_unitary(values: Sequence[int], N: int) -> SamplingUnitary:
    """Fixed input f: S_x swaps |empty> and |f(x)>."""
    mats = []
    for v in values:
        if not 0 <= v < N:
            raise ValueError(f"value {v} outside [0, {N})")
        m = np.eye(N + 1)
        m[[v, N]] = m[[N, v]]
        mats.append(m)
    return SamplingUnitary(np.array(mats), name="point", params={"values": list(values)})


def apply_standard_oracle(state: QueryState) -> QueryState:
    """Multiply each component by omega^{p f(x)}; an empty f(x) leaves it unchanged."""
    layout = state.layout
    N, o, bot = layout.N, layout.f_offset, layout.bot
    omega = phase_table(N)
    out = {}
    for key, amp in state.amplitudes.items():
        p, v = key[1], key[o + key[0]]
        out[key] = amp if (p == 0 or v == bot) else amp * omega[(p * v) % N]
    return QueryState(layout, out)


def _apply_on_queried_cell(state: QueryState, column) -> QueryState:
    """Replace F_x (x = the query register) by ``column(x, p, f(x))``; None means identity."""
    o = state.layout.f_offset
    out: dict = {}
    get = out.get
    cache: dict = {}
    for key, amp in state.amplitudes.items():
        x = key[0]
        pos = o + x
        ck = (x, key[1], key[pos])
        col = cache.get(ck, False)
        if col is False:
            col = cache[ck] = column(*ck)
        if col is None:
            out[key] = get(key, 0j) + amp
            continue
        head, tail = key[:pos], key[pos + 1:]
        for j, c in col:
            k = head + (j,) + tail
            out[k] = get(k, 0j) + amp * c
    return QueryState(state.layout, out)


def _nonzero_column(vec) -> list:
    return [(int(j), complex(vec[j])) for j in np.nonzero(np.abs(vec) > 0)[0]]


def recording_matrix(S: np.ndarray, p: int) -> np.ndarray:
    """S^dagger diag(omega^{p y}, 1) S on a single cell."""
    N = S.shape[0] - 1
    D = np.append(phase_table(N)[(p * np.arange(N)) % N], 1.0)
    return S.conj().T @ (D[:, None] * S)


def apply_recording_oracle_generic(state: QueryState, family: SamplingUnitary) -> QueryState:
    family.check_layout(state.layout)
    mats: dict = {}

    def column(x, p, v):
        key = (x if family.per_position else 0, p)
        R = mats.get(key)
        if R is None:
            R = mats[key] = recording_matrix(family.matrix(x), p)
        return _nonzero_column(R[:, v])

    return _apply_on_queried_cell(state, column)


def uniform_closed_form_column(N: int, p: int, v: int, bot_scale: str = "sqrt") -> list | None:
    """Closed-form image of |v> on the queried cell for the uniform family.

    ``bot_scale="printed"`` uses omega^{pv}/N for the empty-symbol coefficient
    instead of omega^{pv}/sqrt(N); the former is not norm preserving and is
    exposed only to demonstrate that.
    """
    if p % N == 0:
        return None
    omega = phase_table(N)
    if v == N:
        return [(y, omega[(p * y) % N] / math.sqrt(N)) for y in range(N)]
    w = omega[(p * v) % N]
    col = [(N, w / (math.sqrt(N) if bot_scale == "sqrt" else N))]
    for y in range(N):
        if y == v:
            col.append((y, (1 + w * (N - 2)) / N))
        else:
            col.append((y, (1 - omega[(p * y) % N] - w) / N))
    return col


def bernoulli_closed_form_column(alpha: float, beta: float, p: int, v: int) -> list | None:
    if p % 2 == 0:
        return None
    a, b = alpha, beta
    rows = {
        2: ((2, 1 - 2 * b**2), (0, 2 * a * b**2), (1, -2 * a**2 * b)),
        0: ((2, 2 * a * b**2), (0, 1 - 2 * a**2 * b**2), (1, 2 * a**3 * b)),
        1: ((2, -2 * a**2 * b), (0, 2 * a**3 * b), (1, 1 - 2 * a**4)),
    }
    return [(j, complex(c)) for j, c in rows[v]]


def apply_recording_oracle_uniform_closed_form(state: QueryState) -> QueryState:
    N = state.layout.N
    return _apply_on_queried_cell(state, lambda x, p, v: uniform_closed_form_column(N, p, v))


def apply_recording_oracle_bernoulli_closed_form(state: QueryState, K: int, N: int) -> QueryState:
    if state.layout.N != 2:
        raise LayoutError("the Bernoulli recording oracle needs a binary range (layout N=2)")
    if not 1 <= K <= N:
        raise ValueError(f"need 1 <= K <= N, got K={K}, N={N}")
    a, b = math.sqrt(1 - K / N), math.sqrt(K / N)
    return _apply_on_queried_cell(state, lambda x, p, v: bernoulli_closed_form_column(a, b, p, v))


def apply_translation_T(state, family: SamplingUnitary, adjoint: bool = False) -> np.ndarray:
    """Apply S_x on every oracle cell; returns the dense array."""
    if isinstance(state, QueryState):
        layout = state.layout
        if not layout.dense_feasible:
            raise LayoutError(
                f"dense size {layout.size} too large for the translation map; "
                "use success_projection_recording instead")
        arr = to_dense(state)
    else:
        raise TypeError("apply_translation_T expects a QueryState; use dense.apply_translation for arrays")
    family.check_layout(layout)
    return dense.apply_translation(layout, arr, family, adjoint=adjoint)


def success_projection_recording(state: QueryState, relation: OutputRelation,
                                 family: SamplingUnitary) -> float:
    """||Pi_succ T |phi>||^2 without materialising T|phi>.

    Components that agree on (x, p, w) and on f outside the output positions are
    summed coherently, weighted by prod <y_x|S_x|f(x)> over the output positions;
    distinct groups are orthogonal after T.
    """
    layout = state.layout
    family.check_layout(layout)
    relation.check_layout(layout)
    o, bot = layout.f_offset, layout.bot
    groups: dict = {}
    for key, amp in state.amplitudes.items():
        req = relation.required_values(key[2:o], bot)
        if req is None:
            continue
        factor = amp
        f = list(key[o:])
        for x, y in req.items():
            factor *= family.matrix(x)[y, f[x]]
            f[x] = -1
            if factor == 0:
                break
        if factor == 0:
            continue
        g = key[:o] + tuple(f)
        groups[g] = groups.get(g, 0j) + factor
    return float(sum(abs(v) ** 2 for v in groups.values()))
