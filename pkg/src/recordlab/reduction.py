"""Collision finding via Element Distinctness on hashed subsets, with event Monte Carlo."""
from __future__ import annotations

import math
import warnings
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
from statsmodels.stats.proportion import proportion_confint

C0 = 40
C1 = 1e-4
C2 = 8
PRIME_WINDOW = 10_000


def _is_prime(n: int) -> bool:
    if n < 2:
        return False
    if n % 2 == 0:
        return n == 2
    r = math.isqrt(n)
    return all(n % k for k in range(3, r + 1, 2))


def next_prime(n: int, window: int = PRIME_WINDOW) -> int:
    """Smallest prime >= n, searching at most ``window`` candidates."""
    for q in range(max(n, 2), max(n, 2) + window):
        if _is_prime(q):
            return q
    raise ValueError(f"no prime in [{n}, {n + window})")


@dataclass(frozen=True)
class FourWiseHash:
    """h(i) = (a3 i^3 + a2 i^2 + a1 i + a0 mod q) mod R on the domain [d]."""

    q: int
    coeffs: tuple  # (a0, a1, a2, a3)
    d: int
    R: int

    def __call__(self, i):
        return eval_hash(self, i)

    def values(self) -> np.ndarray:
        return eval_hash(self, np.arange(self.d))


def _field_values(q: int, coeffs: np.ndarray, xs: np.ndarray) -> np.ndarray:
    """Horner evaluation; coeffs has shape (..., 4), result (..., len(xs))."""
    xs = np.asarray(xs, dtype=np.int64)
    acc = np.zeros(coeffs.shape[:-1] + xs.shape, dtype=np.int64)
    for j in (3, 2, 1, 0):
        acc = (acc * xs + coeffs[..., j, None]) % q
    return acc


def eval_hash(h: FourWiseHash, i):
    v = _field_values(h.q, np.asarray(h.coeffs, dtype=np.int64), np.atleast_1d(i)) % h.R
    return int(v[0]) if np.ndim(i) == 0 else v


def hash_modulus(d: int, R: int) -> int:
    return next_prime(max(R, d + 1))


def _sample_coeffs(rng: np.random.Generator, q: int, d: int, R: int, n: int) -> tuple[np.ndarray, np.ndarray]:
    """n coefficient vectors, each resampled until every value on [d] is below floor(q/R) R."""
    limit = (q // R) * R
    xs = np.arange(d)
    coeffs = rng.integers(0, q, size=(n, 4))
    vals = _field_values(q, coeffs, xs)
    bad = np.flatnonzero((vals >= limit).any(axis=1))
    while bad.size:
        coeffs[bad] = rng.integers(0, q, size=(bad.size, 4))
        vals[bad] = _field_values(q, coeffs[bad], xs)
        bad = bad[(vals[bad] >= limit).any(axis=1)]
    return coeffs, vals % R


def sample_hash(d: int, R: int, seed) -> FourWiseHash:
    """A random member of the degree-3 family on [d] -> [R]; ``seed`` may be a Generator."""
    if d < 1 or R < 1:
        raise ValueError("d and R must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    q = hash_modulus(d, R)
    coeffs, _ = _sample_coeffs(rng, q, d, R, 1)
    return FourWiseHash(q, tuple(int(c) for c in coeffs[0]), d, R)


def sample_hash_values(d: int, R: int, n: int, seed) -> np.ndarray:
    """Values on [d] of n independent hash functions, shape (n, d)."""
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return _sample_coeffs(rng, hash_modulus(d, R), d, R, n)[1]


def enumerate_hash_tuples(q: int, d: int, R: int) -> Counter:
    """Counts of (h(0), ..., h(min(d,4)-1)) over every accepted coefficient vector."""
    limit = (q // R) * R
    grid = np.stack(np.meshgrid(*[np.arange(q)] * 4, indexing="ij"), axis=-1).reshape(-1, 4)
    vals = _field_values(q, grid, np.arange(d))
    keep = ~(vals >= limit).any(axis=1)
    vals = vals[keep][:, : min(d, 4)] % R
    return Counter(map(tuple, vals.tolist()))


def first_collision_rows(values: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Lexicographically smallest (i, j), i < j, with equal entries, for every row.

    Returns (found, i, j); i and j are -1 where a row has no repeated value.
    """
    values = np.atleast_2d(values)
    if values.shape[1] <= 1:
        none = np.full(values.shape[0], -1)
        return np.zeros(values.shape[0], dtype=bool), none, none.copy()
    n = values.shape[1]
    # sorting value * n + index orders by value with ties broken by index
    key = np.sort(values.astype(np.int64) * n + np.arange(n), axis=1)
    order, sv = key % n, key // n
    eq = sv[:, 1:] == sv[:, :-1]
    big = values.shape[1]
    first = np.where(eq, order[:, :-1], big)
    k = np.argmin(first, axis=1)
    rows = np.arange(values.shape[0])
    found = eq[rows, k]
    i = np.where(found, order[rows, k], -1)
    j = np.where(found, order[rows, k + 1], -1)
    return found, i, j


def classical_ed_solver(fh) -> tuple[int, int] | None:
    """Smallest (i, j) in lexicographic order with i < j and fh[i] == fh[j], else None."""
    arr = np.asarray(fh)
    if arr.size < 2:
        return None
    found, i, j = first_collision_rows(arr.reshape(1, -1))
    return (int(i[0]), int(j[0])) if found[0] else None


def collision_pairs(f) -> int:
    return sum(m * (m - 1) // 2 for m in Counter(np.asarray(f).tolist()).values())


def multicollision_profile(f) -> dict:
    """Preimage-size histogram of f over its image, with max multiplicity and implied collisions."""
    mult = Counter(Counter(np.asarray(f).tolist()).values())
    return {
        "histogram": {int(m): int(c) for m, c in sorted(mult.items())},
        "max_multiplicity": max(mult) if mult else 0,
        "disjoint_collisions": sum((m // 2) * c for m, c in mult.items()),
        "collision_pairs": sum(m * (m - 1) // 2 * c for m, c in mult.items()),
    }


def _check_input(f: np.ndarray, D: int, N: int) -> None:
    if f.shape != (D,):
        raise ValueError(f"f must have D={D} entries, got shape {f.shape}")
    if f.size and (f.min() < 0 or f.max() >= N):
        raise ValueError(f"f values must lie in [0, {N})")
    pairs = collision_pairs(f)
    if pairs < C0 * N:
        warnings.warn(f"f has {pairs} collision pairs, fewer than c0 N = {C0 * N}", stacklevel=3)


@dataclass
class _Batch:
    h: np.ndarray          # (rows, d) hash values
    a_ok: np.ndarray       # h injective
    c_ok: np.ndarray       # f o h has a collision with distinct h values
    found: np.ndarray      # solver found a pair
    a: np.ndarray
    b: np.ndarray


def _round_batch(f: np.ndarray, rng: np.random.Generator, q: int, d: int, D: int, n: int,
                 events: bool = True) -> _Batch:
    _, h = _sample_coeffs(rng, q, d, D, n)
    fh = f[h]
    found, i, j = first_collision_rows(fh)
    rows = np.arange(n)
    a = np.where(found, h[rows, np.maximum(i, 0)], -1)
    b = np.where(found, h[rows, np.maximum(j, 0)], -1)
    output = found & (a != b)
    if not events:
        return _Batch(h, None, None, output, np.minimum(a, b), np.maximum(a, b))
    a_ok = ~first_collision_rows(h)[0]
    # C: a collision of f o h between distinct points of the domain of f
    key = fh.astype(np.int64) * (D + 1) + h
    sk = np.sort(key, axis=1)
    same_f = (sk[:, 1:] // (D + 1)) == (sk[:, :-1] // (D + 1))
    diff_h = (sk[:, 1:] % (D + 1)) != (sk[:, :-1] % (D + 1))
    c_ok = (same_f & diff_h).any(axis=1)
    return _Batch(h, a_ok, c_ok, output, np.minimum(a, b), np.maximum(a, b))


BATCH = 4096


def run_algorithm1(f, D: int, N: int, seed, rounds: int | None = None) -> list[tuple[int, int]]:
    """c2 N rounds of: hash [ceil(sqrt D)] -> [D], solve ED on f o h, output (h(i), h(j)) if distinct.

    ED is solved classically (smallest pair).  Returns every output in round
    order, duplicates included, each as (a, b) with a < b.
    """
    f = np.asarray(f, dtype=np.int64)
    _check_input(f, D, N)
    rounds = C2 * N if rounds is None else rounds
    rng = np.random.default_rng(seed)
    d = math.isqrt(D - 1) + 1 if D > 1 else 1
    q = hash_modulus(d, D)
    out: list = []
    done = 0
    while done < rounds:
        n = min(BATCH, rounds - done)
        bt = _round_batch(f, rng, q, d, D, n, events=False)
        a, b = bt.a[bt.found], bt.b[bt.found]
        bad = (f[a] != f[b]) | (a == b)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            raise AssertionError(f"invalid collision ({a[k]}, {b[k]})")
        out.extend(zip(a.tolist(), b.tolist()))
        done += n
    return out


EVENTS = ("A", "B", "C", "D", "ABCD")


def event_bounds(c0: float = C0, c1: float = C1) -> dict:
    r = 1 + 2 * c0
    return {"A": 0.5, "B": 1 - c1, "C": 1 - 4 * (1 + math.sqrt(r)) / r, "D": None, "ABCD": 1 / 250}


@dataclass
class EventTally:
    """Round counts of A (h injective), B (no remembered collision inside the image of h),
    C (f o h collides on distinct points), D (a collision is output) and their conjunction."""

    total: int = 0
    counts: dict = field(default_factory=lambda: {e: 0 for e in EVENTS})
    distinct: int = 0
    tau: int | None = None  # rounds until ceil(c1 N) distinct collisions were output

    def freq(self, event: str) -> float:
        return self.counts[event] / self.total if self.total else float("nan")

    def standard_error(self, event: str) -> float:
        p = self.freq(event)
        return math.sqrt(p * (1 - p) / self.total) if self.total else float("nan")

    def wilson(self, event: str, alpha: float = 0.05) -> tuple[float, float]:
        lo, hi = proportion_confint(self.counts[event], self.total, alpha=alpha, method="wilson")
        return float(lo), float(hi)

    def report(self, bounds: dict | None = None) -> dict:
        bounds = event_bounds() if bounds is None else bounds
        rep = {}
        for e in EVENTS:
            lo, hi = self.wilson(e)
            b = bounds.get(e)
            rep[e] = {"count": self.counts[e], "total": self.total, "freq": self.freq(e),
                      "wilson_lo": lo, "wilson_hi": hi, "bound": b,
                      "pass": True if b is None else hi >= b}
        return rep


def monte_carlo_events(f, D: int, N: int, rounds: int, seed) -> EventTally:
    """Event frequencies over ``rounds`` rounds of the reduction.

    Only the first ceil(c1 N) distinct collisions output are remembered for
    event B, matching the memory the reduction is allowed to keep.
    """
    f = np.asarray(f, dtype=np.int64)
    _check_input(f, D, N)
    rng = np.random.default_rng(seed)
    d = math.isqrt(D - 1) + 1 if D > 1 else 1
    q = hash_modulus(d, D)
    cap = math.ceil(C1 * N)
    memory: list = []
    seen: set = set()
    tally = EventTally()
    done = 0
    while done < rounds:
        n = min(BATCH, rounds - done)
        bt = _round_batch(f, rng, q, d, D, n)
        b_ok = np.ones(n, dtype=bool)
        start = 0
        # sequential while the memory is still filling, then vectorised
        while start < n and len(memory) < cap:
            row = set(bt.h[start].tolist())
            b_ok[start] = not any(a in row and b in row for a, b in memory)
            if bt.found[start]:
                pair = (int(bt.a[start]), int(bt.b[start]))
                if pair not in seen:
                    seen.add(pair)
                    memory.append(pair)
                    if len(memory) == cap and tally.tau is None:
                        tally.tau = done + start + 1
            start += 1
        for a, b in memory:
            rest = bt.h[start:]
            b_ok[start:] &= ~((rest == a).any(axis=1) & (rest == b).any(axis=1))
        for a, b in zip(bt.a[start:][bt.found[start:]].tolist(), bt.b[start:][bt.found[start:]].tolist()):
            seen.add((a, b))
        ev = {"A": bt.a_ok, "B": b_ok, "C": bt.c_ok, "D": bt.found}
        ev["ABCD"] = bt.a_ok & b_ok & bt.c_ok & bt.found
        for e, mask in ev.items():
            tally.counts[e] += int(mask.sum())
        tally.total += n
        done += n
    tally.distinct = len(seen)
    return tally


def random_function(D: int, N: int, seed) -> np.ndarray:
    return np.random.default_rng(seed).integers(0, N, size=D)
