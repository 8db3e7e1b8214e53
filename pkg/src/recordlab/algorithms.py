"""Query algorithms as data, run in the standard or the recording oracle model."""
from __future__ import annotations

import itertools
import json
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.stats import unitary_group

from . import dense
from .oracles import (
    SamplingUnitary,
    apply_recording_oracle_bernoulli_closed_form,
    apply_recording_oracle_generic,
    apply_recording_oracle_uniform_closed_form,
    apply_standard_oracle,
    success_projection_recording,
)
from .relations import OutputRelation
from .state import (
    LayoutError,
    QueryState,
    RegisterLayout,
    _targets,
    apply_local_unitary,
    apply_permutation,
    check_unitary,
    init_recording_state,
    to_dense,
)

__all__ = [
    "OutputRelation", "Unitary", "Permutation", "Query", "OutputMark", "QueryAlgorithm",
    "qft", "add_gate", "swap_gate", "shift_gate", "classical_gate", "read_gadget", "read_into",
    "run", "success_probability", "build_grover_ksearch", "build_classical_reader", "random_algorithm",
    "emulate_algorithm2", "sliced_run", "mixed_start_success",
]


@dataclass(frozen=True)
class Unitary:
    target: tuple
    matrix: np.ndarray = field(compare=False)


@dataclass(frozen=True)
class Permutation:
    target: tuple
    perm: tuple


@dataclass(frozen=True)
class Query:
    pass


@dataclass(frozen=True)
class OutputMark:
    """Annotates that the preceding gates finalised these output groups."""

    groups: tuple = ()


class QueryAlgorithm:
    """Interleaved register-local gates and oracle calls on a fixed layout."""

    def __init__(self, layout: RegisterLayout, steps: Sequence, T: int | None = None):
        self.layout = layout
        self.steps = list(steps)
        n_queries = sum(isinstance(s, Query) for s in self.steps)
        if T is not None and T != n_queries:
            raise ValueError(f"declared T={T} but the algorithm has {n_queries} queries")
        self.T = n_queries
        for s in self.steps:
            if isinstance(s, Unitary):
                _, sizes = _targets(layout, s.target)
                U = check_unitary(s.matrix)
                if U.shape[0] != math.prod(sizes):
                    raise ValueError(f"gate on {s.target} has dimension {U.shape[0]}, expected {math.prod(sizes)}")
            elif isinstance(s, Permutation):
                _, sizes = _targets(layout, s.target)
                if sorted(s.perm) != list(range(math.prod(sizes))):
                    raise ValueError(f"invalid permutation on {s.target}")
            elif not isinstance(s, (Query, OutputMark)):
                raise TypeError(f"unknown step {s!r}")

    def __repr__(self):
        return f"QueryAlgorithm({self.layout}, {len(self.steps)} steps, T={self.T})"

    def to_json(self) -> dict:
        def enc(s):
            if isinstance(s, Unitary):
                m = np.asarray(s.matrix, dtype=complex)
                return {"op": "unitary", "target": list(s.target),
                        "matrix": [[[float(v.real), float(v.imag)] for v in row] for row in m]}
            if isinstance(s, Permutation):
                return {"op": "permutation", "target": list(s.target), "perm": list(s.perm)}
            if isinstance(s, Query):
                return {"op": "query"}
            return {"op": "output_mark", "groups": list(s.groups)}
        return {"layout": self.layout.to_json(), "T": self.T, "steps": [enc(s) for s in self.steps]}

    @classmethod
    def from_json(cls, data: dict) -> "QueryAlgorithm":
        steps = []
        for d in data["steps"]:
            op = d["op"]
            if op == "unitary":
                a = np.asarray(d["matrix"], dtype=float)
                steps.append(Unitary(tuple(d["target"]), a[..., 0] + 1j * a[..., 1]))
            elif op == "permutation":
                steps.append(Permutation(tuple(d["target"]), tuple(d["perm"])))
            elif op == "query":
                steps.append(Query())
            elif op == "output_mark":
                steps.append(OutputMark(tuple(d.get("groups", ()))))
            else:
                raise ValueError(f"unknown op {op!r}")
        return cls(RegisterLayout.from_json(data["layout"]), steps, data.get("T"))

    def dumps(self) -> str:
        return json.dumps(self.to_json())


# -- gate helpers -----------------------------------------------------------

def qft(n: int) -> np.ndarray:
    j = np.arange(n)
    return np.exp(2j * np.pi * np.outer(j, j) / n) / math.sqrt(n)


def _joint_permutation(layout: RegisterLayout, target, image: Callable[[tuple], tuple]) -> Permutation:
    target = (target,) if isinstance(target, str) else tuple(target)
    _, sizes = _targets(layout, target)
    perm = []
    for digits in itertools.product(*(range(s) for s in sizes)):
        out = image(digits)
        idx = 0
        for d, s in zip(out, sizes):
            idx = idx * s + d
        perm.append(idx)
    return Permutation(target, tuple(perm))


def classical_gate(layout: RegisterLayout, inputs: Sequence[str], outputs: Sequence[str],
                   fn: Callable[[tuple], Sequence[int]]) -> Permutation:
    """outputs[i] += fn(inputs)[i] modulo each output alphabet."""
    inputs, outputs = tuple(inputs), tuple(outputs)
    _targets(layout, inputs + outputs)
    in_sizes = [layout.size_of(i) for i in inputs]
    out_sizes = [layout.size_of(o) for o in outputs]
    n_out = math.prod(out_sizes)
    out_digits = np.indices(out_sizes).reshape(len(out_sizes), -1)
    radix = np.array([math.prod(out_sizes[j + 1:]) for j in range(len(out_sizes))], dtype=np.int64)
    blocks = []
    for i, d in enumerate(itertools.product(*(range(s) for s in in_sizes))):
        vals = np.asarray(fn(d), dtype=np.int64).reshape(-1, 1)
        shifted = (out_digits + vals) % np.array(out_sizes)[:, None]
        blocks.append(i * n_out + radix @ shifted)
    return Permutation(inputs + outputs, tuple(np.concatenate(blocks).tolist()))


def add_gate(layout: RegisterLayout, src: str, dst: str) -> Permutation:
    """dst += src (mod |dst|)."""
    return classical_gate(layout, (src,), (dst,), lambda v: (v[0],))


def swap_gate(layout: RegisterLayout, a: str, b: str) -> Permutation:
    if layout.size_of(a) != layout.size_of(b):
        raise LayoutError(f"cannot swap {a} and {b} of different sizes")
    return _joint_permutation(layout, (a, b), lambda d: (d[1], d[0]))


def shift_gate(layout: RegisterLayout, reg: str, amount: int) -> Permutation:
    n = layout.size_of(reg)
    return _joint_permutation(layout, (reg,), lambda d: ((d[0] + amount) % n,))


def read_gadget(layout: RegisterLayout, copy_to: str | None = None) -> list:
    """Phase-kickback read of f(x) into P (1 query).

    With ``copy_to``, the value is added into that slot and P is returned to 0
    with a second query (2 queries).
    """
    F = qft(layout.N)
    steps = [Unitary(("P",), F), Query(), Unitary(("P",), F.conj().T)]
    if copy_to is not None:
        steps += [
            add_gate(layout, "P", copy_to),
            Unitary(("P",), F),
            shift_negate(layout),
            Query(),
            Unitary(("P",), F.conj().T),
        ]
    return steps


def shift_negate(layout: RegisterLayout) -> Permutation:
    N = layout.N
    return _joint_permutation(layout, ("P",), lambda d: ((-d[0]) % N,))


def read_into(layout: RegisterLayout, slot: str) -> list:
    """1-query read of f(Q) into an all-zero slot of size N (P ends at 0)."""
    return read_gadget(layout) + [swap_gate(layout, "P", slot)]


# -- running ----------------------------------------------------------------

def _initial_standard_sparse(layout: RegisterLayout, family: SamplingUnitary,
                             initial: QueryState | None) -> QueryState:
    state = initial if initial is not None else init_recording_state(layout)
    for x in range(layout.M):
        state = apply_local_unitary(state, f"F{x}", family.matrix(x))
    return state


def _dense_permutation(layout, arr, target, perm):
    positions, sizes = _targets(layout, target)
    moved = np.moveaxis(arr, positions, range(len(positions)))
    shape = moved.shape
    flat = moved.reshape(math.prod(sizes), -1)
    out = np.empty_like(flat)
    out[list(perm)] = flat
    return np.moveaxis(out.reshape(shape), range(len(positions)), positions)


def _recording_step(family: SamplingUnitary, oracle: str):
    if oracle == "generic":
        return lambda s: apply_recording_oracle_generic(s, family)
    if oracle == "closed":
        if family.name == "uniform":
            return apply_recording_oracle_uniform_closed_form
        if family.name == "bernoulli":
            K, N = family.params["K"], family.params["N"]
            return lambda s: apply_recording_oracle_bernoulli_closed_form(s, K, N)
        raise ValueError(f"no closed form for the {family.name!r} family")
    raise ValueError(f"unknown oracle route {oracle!r}")


def run(algorithm: QueryAlgorithm, mode: str, family: SamplingUnitary, route: str = "sparse",
        capture: bool = False, oracle: str = "generic", initial: QueryState | None = None):
    """Run ``algorithm`` with the standard (``O``) or recording (``S^dagger O S``) oracle.

    ``route="sparse"`` returns QueryState objects, ``route="dense"`` numpy arrays.
    The standard model starts from |0>|init> = T|0>|empty^M>.  With ``capture``
    the result is the list of snapshots taken before each query plus the final
    state (length T + 1).  ``initial`` replaces |0>|empty^M> (e.g. a sampled
    workspace).
    """
    layout = algorithm.layout
    family.check_layout(layout)
    if mode not in ("standard", "recording"):
        raise ValueError(f"unknown mode {mode!r}")
    if route == "dense":
        if not layout.dense_feasible:
            raise LayoutError(f"dense size {layout.size} is infeasible; run the recording model sparsely")
        state = to_dense(initial if initial is not None else init_recording_state(layout))
        if mode == "standard":
            state = dense.apply_translation(layout, state, family)
            query = lambda a: dense.apply_standard_oracle(layout, a)  # noqa: E731
        else:
            if oracle != "generic":
                raise ValueError("the dense route only implements the generic recording operator")
            query = lambda a: dense.apply_recording_oracle(layout, a, family)  # noqa: E731
        unitary = lambda a, s: dense.apply_local_unitary(layout, a, s.target, s.matrix)  # noqa: E731
        permute = lambda a, s: _dense_permutation(layout, a, s.target, s.perm)  # noqa: E731
    elif route == "sparse":
        if mode == "standard":
            state = _initial_standard_sparse(layout, family, initial)
            query = apply_standard_oracle
        else:
            state = initial if initial is not None else init_recording_state(layout)
            query = _recording_step(family, oracle)
        unitary = lambda a, s: apply_local_unitary(a, s.target, s.matrix)  # noqa: E731
        permute = lambda a, s: apply_permutation(a, s.target, s.perm)  # noqa: E731
    else:
        raise ValueError(f"unknown route {route!r}")

    snapshots = []
    for step in algorithm.steps:
        if isinstance(step, Query):
            if capture:
                snapshots.append(state)
            state = query(state)
        elif isinstance(step, Unitary):
            state = unitary(state, step)
        elif isinstance(step, Permutation):
            state = permute(state, step)
    if capture:
        snapshots.append(state)
        return snapshots
    return state


def _dense_success(layout: RegisterLayout, arr: np.ndarray, relation: OutputRelation) -> float:
    probs = np.abs(arr) ** 2
    nz = relation.n_slots
    w_axes = tuple(range(2, 2 + len(layout.slots)))
    other = (0, 1) + tuple(a for a in w_axes if not relation.offset <= a - 2 < relation.offset + nz)
    reduced = probs.sum(axis=other)  # axes: z slots, then f
    total = 0.0
    for z in itertools.product(*(range(s) for s in layout.slots[relation.offset: relation.offset + nz])):
        w = (0,) * relation.offset + z
        req = relation.required_values(w, layout.bot)
        if req is None:
            continue
        idx = [slice(None)] * layout.M
        for x, v in req.items():
            idx[x] = v
        total += float(reduced[z][tuple(idx)].sum())
    return total


def success_probability(state, relation: OutputRelation, mode: str,
                        family: SamplingUnitary | None = None) -> float:
    """sigma = ||Pi_succ psi_T||^2 (standard) or ||Pi_succ T phi_T||^2 (recording)."""
    if mode == "recording":
        if family is None:
            raise ValueError("the recording model needs the sampling family")
        return success_projection_recording(state, relation, family)
    if mode != "standard":
        raise ValueError(f"unknown mode {mode!r}")
    if isinstance(state, np.ndarray):
        raise TypeError("pass the layout via dense_success_probability for arrays")
    layout = state.layout
    relation.check_layout(layout)
    o, bot = layout.f_offset, layout.bot
    return float(sum(abs(a) ** 2 for k, a in state.amplitudes.items()
                     if relation.satisfied(k[2:o], k[o:], bot)))


def dense_success_probability(layout: RegisterLayout, arr: np.ndarray, relation: OutputRelation) -> float:
    relation.check_layout(layout)
    return _dense_success(layout, arr, relation)


# -- concrete algorithms ----------------------------------------------------

def build_grover_ksearch(M: int, T: int) -> QueryAlgorithm:
    """Grover search for a single 1 on a binary range; the answer is copied to slot W0."""
    layout = RegisterLayout.ksearch(M, 1)
    u = np.full(M, 1 / math.sqrt(M))
    diffusion = 2 * np.outer(u, u) - np.eye(M)
    steps: list = [Unitary(("Q",), qft(M)), shift_gate(layout, "P", 1)]
    for _ in range(T):
        steps += [Query(), Unitary(("Q",), diffusion)]
    steps += [add_gate(layout, "Q", "W0"), OutputMark((0,))]
    return QueryAlgorithm(layout, steps, T)


def random_unitary(d: int, rng: np.random.Generator) -> np.ndarray:
    if d == 1:
        return np.array([[np.exp(2j * np.pi * rng.random())]])
    return unitary_group.rvs(d, random_state=rng)


def random_algorithm(layout: RegisterLayout, T: int, rng: np.random.Generator,
                     relation: OutputRelation | None = None) -> QueryAlgorithm:
    """Haar-random gates on (Q, P) and on each scratch slot between T queries.

    Scratch slots are the workspace slots after the output substring.  When a
    relation is given, its output slots are filled at the end by addition gates
    from Q, P and the scratch slots of size M (a scratch slot of size M is
    additionally loaded from Q after every query).
    """
    n_out = relation.n_slots if relation is not None else 0
    if relation is not None:
        relation.check_layout(layout)
        if relation.offset != 0:
            raise ValueError("random_algorithm expects the output substring at slot 0")
    scratch = [f"W{i}" for i in range(n_out, len(layout.slots))]
    memory = [s for s in scratch if layout.size_of(s) == layout.M]

    def layer():
        out = [Unitary(("Q", "P"), random_unitary(layout.M * layout.N, rng))]
        for s in scratch:
            out.append(Unitary((s,), random_unitary(layout.size_of(s), rng)))
        return out

    steps = layer()
    for t in range(T):
        steps.append(Query())
        if memory:
            steps.append(add_gate(layout, "Q", memory[t % len(memory)]))
        steps += layer()
    if relation is not None:
        x_sources = memory + ["Q"]
        i = 0
        for g in range(relation.K):
            if relation.kind == "collision":
                base = 3 * g
                steps.append(add_gate(layout, x_sources[i % len(x_sources)], f"W{base}"))
                steps.append(add_gate(layout, x_sources[(i + 1) % len(x_sources)], f"W{base + 1}"))
                steps.append(add_gate(layout, "P", f"W{base + 2}"))
                i += 2
            else:
                steps.append(add_gate(layout, x_sources[i % len(x_sources)], f"W{g}"))
                i += 1
        steps.append(OutputMark(tuple(range(relation.K))))
    return QueryAlgorithm(layout, steps, T)


def build_classical_reader(M: int, N: int, K: int, kind: str = "collision",
                           reads: int | None = None) -> QueryAlgorithm:
    """Read f(0), ..., f(reads-1) classically (one query each), then answer greedily.

    Collision: pair up equal values among the read positions into at most K
    disjoint triples.  K-search (N must be 2): report read positions holding 1,
    padded with unread positions as guesses.  Unfilled collision triples stay
    at (0, 0, 0), which is never valid.
    """
    reads = M if reads is None else reads
    if not 0 <= reads <= M:
        raise ValueError(f"reads must lie in [0, {M}]")
    if kind == "collision":
        layout = RegisterLayout.collision(M, N, K, scratch=(N,) * reads)
        first = 3 * K
    elif kind == "ksearch":
        if N != 2:
            raise ValueError("the K-search reader needs a binary range")
        if K > M:
            raise ValueError("K must not exceed M")
        layout = RegisterLayout.ksearch(M, K, scratch=(N,) * reads)
        first = K
    else:
        raise ValueError(f"unknown relation kind {kind!r}")
    mem = [f"W{first + i}" for i in range(reads)]
    steps: list = []
    for i in range(reads):
        if i:
            steps.append(shift_gate(layout, "Q", 1))
        steps += read_into(layout, mem[i])

    def answer(vals):
        if kind == "collision":
            groups: dict = {}
            for x, v in enumerate(vals):
                groups.setdefault(v, []).append(x)
            out = []
            for v in sorted(groups):
                xs = groups[v]
                for j in range(0, len(xs) - 1, 2):
                    out += [xs[j], xs[j + 1], v]
            out = out[: 3 * K]
            return out + [0] * (3 * K - len(out))
        ones = [x for x, v in enumerate(vals) if v == 1]
        rest = [x for x in range(M) if x not in ones and (x >= reads)]
        rest += [x for x in range(M) if x not in ones and x not in rest]
        return (ones + rest)[:K]

    outs = [f"W{i}" for i in range(first)]
    if reads:
        steps.append(classical_gate(layout, mem, outs, answer))
    else:
        steps.append(classical_gate(layout, ("Q",), outs, lambda _: answer(())))
    steps.append(OutputMark(tuple(range(K))))
    return QueryAlgorithm(layout, steps, reads)


# -- Algorithm 2 emulation --------------------------------------------------

@dataclass
class Emulation:
    N: int
    K: int
    S: int
    seed: int
    queries_used: int
    collisions_found: list
    rounds: int

    @property
    def success(self) -> bool:
        return len(self.collisions_found) >= self.K


def grover_cost(domain: int, marked: int) -> int:
    return math.ceil(math.pi / 4 * math.sqrt(domain / max(1, marked)))


def emulate_algorithm2(N: int, K: int, S: int, seed: int, max_rounds: int | None = None) -> Emulation:
    """Classical emulation of the table-plus-search collision finder with idealised Grover.

    Each round samples S positions (S queries), then repeatedly searches the
    rest of the domain for a partner of the table, charging
    ceil(pi/4 sqrt(domain / remaining marked)) queries per element found and one
    empty search when a round is exhausted.  Stops once K distinct collision
    pairs are known or after ``max_rounds`` rounds.
    """
    if not 1 <= S < N:
        raise ValueError(f"need 1 <= S < N, got S={S}, N={N}")
    lo, hi = math.log2(N), K ** (2 / 3) * N ** (1 / 3)
    if not lo <= S <= hi:
        warnings.warn(f"S={S} outside [{lo:.3g}, {hi:.3g}]", stacklevel=2)
    rng = np.random.default_rng(seed)
    f = rng.integers(0, N, size=N)
    if max_rounds is None:
        max_rounds = 4 * math.ceil(K / S) * math.ceil(math.log2(N))
    found: set = set()
    order: list = []
    queries = 0
    rounds = 0
    domain = N - S
    while rounds < max_rounds and len(found) < K:
        rounds += 1
        G = rng.choice(N, size=S, replace=False)
        queries += S
        table: dict = {}
        for x in G.tolist():
            table.setdefault(int(f[x]), []).append(x)
        in_g = np.zeros(N, dtype=bool)
        in_g[G] = True
        marked = np.flatnonzero(~in_g & np.isin(f, f[G]))
        rng.shuffle(marked)
        remaining = len(marked)
        for x in marked.tolist():
            queries += grover_cost(domain, remaining)
            remaining -= 1
            for xp in table[int(f[x])]:
                pair = (min(x, xp), max(x, xp))
                if pair not in found:
                    found.add(pair)
                    order.append(pair)
            if len(found) >= K:
                break
        else:
            queries += grover_cost(domain, 0)
    return Emulation(N, K, S, seed, queries, order, rounds)


# -- sliced runs ------------------------------------------------------------

@dataclass
class SlicedResult:
    counts: list
    short_last: bool


def _max_disjoint(pairs: Sequence[tuple]) -> int:
    pairs = list(set(pairs))
    for r in range(len(pairs), 0, -1):
        for combo in itertools.combinations(pairs, r):
            pts = [p for pair in combo for p in pair]
            if len(set(pts)) == len(pts):
                return r
    return 0


def sliced_run(algorithm: QueryAlgorithm, slice_length: int, family: SamplingUnitary,
               relation: OutputRelation, route: str = "sparse") -> SlicedResult:
    """Expected number of distinct disjoint collisions emitted in each slice.

    A slice is ``slice_length`` consecutive queries; an output mark issued after
    q queries belongs to slice ceil(q / slice_length) - 1 (marks before the first
    query go to slice 0).  The expectation is taken over the standard-model
    final state, i.e. over the input distribution and the measurement.
    """
    if relation.kind != "collision":
        raise ValueError("sliced runs count collision outputs")
    if slice_length < 1:
        raise ValueError("slice_length must be positive")
    T = algorithm.T
    n_slices = max(1, math.ceil(T / slice_length))
    short_last = T % slice_length != 0
    if short_last:
        warnings.warn(f"slice length {slice_length} does not divide T={T}; last slice is shorter", stacklevel=2)
    groups_by_slice: list[list[int]] = [[] for _ in range(n_slices)]
    q = 0
    for step in algorithm.steps:
        if isinstance(step, Query):
            q += 1
        elif isinstance(step, OutputMark):
            j = max(0, math.ceil(q / slice_length) - 1)
            groups_by_slice[min(j, n_slices - 1)].extend(step.groups)
    layout = algorithm.layout
    final = run(algorithm, "standard", family, route=route)
    if route == "dense":
        from .state import from_dense
        final = from_dense(layout, final)
    o, bot = layout.f_offset, layout.bot
    counts = [0.0] * n_slices
    for key, amp in final.amplitudes.items():
        prob = abs(amp) ** 2
        w, f = key[2:o], key[o:]
        for j, groups in enumerate(groups_by_slice):
            pairs = []
            for g in groups:
                x1, x2, y = w[relation.offset + 3 * g: relation.offset + 3 * g + 3]
                if y != bot and x1 != x2 and f[x1] == y and f[x2] == y:
                    pairs.append((min(x1, x2), max(x1, x2)))
            if pairs:
                counts[j] += prob * _max_disjoint(pairs)
    return SlicedResult(counts, short_last)


def mixed_start_success(algorithm: QueryAlgorithm, relation: OutputRelation, family: SamplingUnitary,
                        slots: Sequence[str], n_samples: int, seed: int) -> float:
    """Average recording-model success over uniformly random basis values of ``slots``.

    Estimates the success probability when the listed memory starts in the
    completely mixed state.
    """
    layout = algorithm.layout
    rng = np.random.default_rng(seed)
    positions = [layout.position(s) for s in slots]
    base = list(next(iter(init_recording_state(layout).amplitudes)))
    total = 0.0
    for _ in range(n_samples):
        key = list(base)
        for pos in positions:
            key[pos] = int(rng.integers(layout.register_sizes()[pos]))
        start = QueryState(layout, {tuple(key): 1.0 + 0j})
        final = run(algorithm, "recording", family, initial=start)
        total += success_projection_recording(final, relation, family)
    return total / n_samples
