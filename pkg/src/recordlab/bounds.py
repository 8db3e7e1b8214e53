"""Closed-form bound evaluators and the sorting-reduction instance builder."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class BoundRangeWarning(UserWarning):
    pass


def _check_nonneg(**kw):
    for name, v in kw.items():
        if v < 0:
            raise ValueError(f"{name} must be non-negative, got {v}")


def _log_binomial_power(t: int, k: int, log_base: float) -> float:
    """log(C(t, k) * base^k); -inf when the value is zero."""
    if k > t:
        return -math.inf
    if k == 0:
        return 0.0
    if log_base == -math.inf:
        return -math.inf
    return math.lgamma(t + 1) - math.lgamma(k + 1) - math.lgamma(t - k + 1) + k * log_base


def _exp(logv: float) -> float:
    if logv == -math.inf:
        return 0.0
    return math.exp(logv) if logv < 709.0 else math.inf


def log_collision_progress_bound(t: int, k: int, N: int) -> float:
    _check_nonneg(t=t, k=k)
    if N < 1:
        raise ValueError("N must be positive")
    base = 4 * math.sqrt(t / N)
    return _log_binomial_power(t, k, math.log(base) if base > 0 else -math.inf)


def collision_progress_bound(t: int, k: int, N: int) -> float:
    """C(t, k) (4 sqrt(t) / sqrt(N))^k, evaluated in the log domain."""
    return _exp(log_collision_progress_bound(t, k, N))


def log_ksearch_progress_bound(t: int, k: int, K: int, N: int) -> float:
    _check_nonneg(t=t, k=k)
    if K < 1 or N < 1:
        raise ValueError("K and N must be positive")
    return _log_binomial_power(t, k, math.log(4 * math.sqrt(K / N)))


def ksearch_progress_bound(t: int, k: int, K: int, N: int) -> float:
    """C(t, k) (4 sqrt(K) / sqrt(N))^k, evaluated in the log domain."""
    return _exp(log_ksearch_progress_bound(t, k, K, N))


def collision_progress_bound_direct(t: int, k: int, N: int) -> float:
    return math.comb(t, k) * (4 * math.sqrt(t / N)) ** k


def ksearch_progress_bound_direct(t: int, k: int, K: int, N: int) -> float:
    return math.comb(t, k) * (4 * math.sqrt(K / N)) ** k


def half_ceil(K: int) -> int:
    return (K + 1) // 2


def _range_check(K: int, N: int) -> None:
    if not 1 <= K <= N / 8:
        warnings.warn(f"K={K} outside the range 1 <= K <= N/8 (N={N})", BoundRangeWarning, stacklevel=3)


@dataclass(frozen=True)
class SuccessBound:
    """2u^2 + 2v^2 where u bounds the progress part and v the guessing part."""

    u: float
    v: float

    @property
    def raw(self) -> float:
        return 2 * self.u**2 + 2 * self.v**2

    @property
    def clamped(self) -> float:
        return min(1.0, self.raw)


def collision_success_terms(T: int, K: int, N: int) -> SuccessBound:
    _check_nonneg(T=T)
    _range_check(K, N)
    k = half_ceil(K)
    u = collision_progress_bound(T, k, N)
    v = N * (2 * K / N) ** k
    return SuccessBound(u, v)


def ksearch_success_terms(T: int, K: int, N: int) -> SuccessBound:
    _check_nonneg(T=T)
    _range_check(K, N)
    k = half_ceil(K)
    u = ksearch_progress_bound(T, k, K, N)
    v = 3 ** (K / 2) * (K / N) ** (k / 2)
    return SuccessBound(u, v)


def collision_success_bound(T: int, K: int, N: int) -> float:
    """Raw bound on the probability of outputting K disjoint collisions after T queries."""
    return collision_success_terms(T, K, N).raw


def ksearch_success_bound(T: int, K: int, N: int) -> float:
    """Raw bound on the probability of outputting K ones of a Bernoulli(K/N) input."""
    return ksearch_success_terms(T, K, N).raw


DEFAULT_CONSTANTS = {
    "collision-lower": {"c_lower": 1.0, "outputs_per_slice": 3.0, "c_time": 1.0},
    "collision-upper": {"c_upper": 1.0},
    "collision-conjecture": {"c_conj": 1.0},
    "sorting-lower": {"c_sort": 1.0, "slice_fraction": 0.25},
}


@dataclass
class Curve:
    kind: str
    constants: dict
    rows: list[dict] = field(default_factory=list)

    def metadata(self) -> dict:
        return {"kind": self.kind, "constants": dict(self.constants), "points": len(self.rows)}


def _required_time(kind: str, S: float, N: float, K: float, c: dict) -> float:
    if kind == "collision-lower":
        # slices of S^{2/3} N^{1/3} queries each emit at most outputs_per_slice * S collisions
        sliced = K / (c["outputs_per_slice"] * S) * S ** (2 / 3) * N ** (1 / 3)
        time_only = c["c_time"] * K ** (2 / 3) * N ** (1 / 3)
        return c["c_lower"] * max(sliced, time_only)
    if kind == "collision-upper":
        return c["c_upper"] * K * math.sqrt(N / S)
    if kind == "collision-conjecture":
        return c["c_conj"] * K * math.sqrt(N / S)
    if kind == "sorting-lower":
        # N/S slices of slice_fraction * sqrt(S N) queries
        return c["c_sort"] * (N / S) * c["slice_fraction"] * math.sqrt(S * N)
    raise ValueError(f"unknown curve kind {kind!r}")


def tradeoff_curves(kind: str, S_values: Sequence[float], N: float, K: float | None = None,
                    constants: dict | None = None) -> Curve:
    """(S, T_required) pairs for one curve; unspecified constants default to 1."""
    if kind not in DEFAULT_CONSTANTS:
        raise ValueError(f"unknown curve kind {kind!r}")
    c = {**DEFAULT_CONSTANTS[kind], **(constants or {})}
    if kind != "sorting-lower" and K is None:
        raise ValueError(f"{kind} needs K")
    curve = Curve(kind, c)
    for S in S_values:
        if S <= 0:
            raise ValueError("S must be positive")
        curve.rows.append({"kind": kind, "N": N, "K": K if K is not None else "", "S": S,
                           "T": _required_time(kind, S, N, K or 0, c)})
    return curve


def build_sorting_instance(g: Sequence[int], r: int, N: int) -> list[int]:
    """f on positions 1..N (returned 0-based): 2 before rank r, then g, then 0.

    ``g`` is indexed 1..N/2, so f(x) = g(x - r + 1) for r <= x < r + N/2.
    """
    if N % 2:
        raise ValueError("N must be even")
    if not 1 <= r <= N // 2:
        raise ValueError(f"rank r={r} must lie in [1, N/2]")
    if len(g) != N // 2:
        raise ValueError(f"g must have N/2 = {N // 2} entries")
    f = []
    for x in range(1, N + 1):
        if x < r:
            f.append(2)
        elif x < r + N // 2:
            f.append(int(g[x - r]))
        else:
            f.append(0)
    return f


def sample_sorting_g(N: int, S: int, rng: np.random.Generator) -> list[int]:
    """g on [N/2] with Pr[g(x) = 1] = 2S / (N/4)."""
    p = 2 * S / (N / 4)
    if p > 1:
        raise ValueError("2S must not exceed N/4")
    return [int(v) for v in (rng.random(N // 2) < p)]
