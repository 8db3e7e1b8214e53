"""Progress measures q_{t,k} on recording-model states and their recurrences."""
from __future__ import annotations

import csv
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

from .state import QueryState

MODES = ("disjoint-collisions", "ones")
RECURRENCE_TOL = 1e-8


def count_statistic(f: Sequence[int], mode: str, bot: int) -> int:
    """Disjoint collision pairs (sum of floor(m_y/2)) or number of ones; empty entries ignored."""
    if mode == "disjoint-collisions":
        return sum(m // 2 for y, m in Counter(f).items() if y != bot)
    if mode == "ones":
        return sum(1 for v in f if v == 1)
    raise ValueError(f"unknown mode {mode!r}")


def _statistics(state: QueryState, mode: str):
    o, bot = state.layout.f_offset, state.layout.bot
    cache: dict = {}
    for key, amp in state.amplitudes.items():
        f = key[o:]
        s = cache.get(f)
        if s is None:
            s = cache[f] = count_statistic(f, mode, bot)
        yield key, amp, s


def progress_measure(state: QueryState, k: int, mode: str) -> float:
    """||Pi_{>=k} state||."""
    return math.sqrt(sum(abs(a) ** 2 for _, a, s in _statistics(state, mode) if s >= k))


def progress_profile(state: QueryState, mode: str, k_max: int) -> list[float]:
    """[q_0, ..., q_{k_max}] from a single pass over the state."""
    shells = [0.0] * (k_max + 2)
    for _, a, s in _statistics(state, mode):
        shells[min(s, k_max + 1)] += abs(a) ** 2
    out, acc = [], 0.0
    for k in range(k_max + 1, -1, -1):
        acc += shells[k]
        out.append(math.sqrt(acc))
    out.reverse()
    return out[: k_max + 1]


CLASSES = ("bot", "value", "one", "zero")


def project_classified(state: QueryState, k: int, cls: str, mode: str, y: int | None = None) -> QueryState:
    """Exactly-k components with an active phase and the queried cell in class ``cls``.

    Collision mode accepts ``bot`` and ``value`` (with ``y``) and requires p != 0.
    Ones mode accepts ``bot``, ``zero`` and ``one`` and requires p == 1.
    """
    if mode == "disjoint-collisions":
        if cls not in ("bot", "value"):
            raise ValueError(f"class {cls!r} is not defined in collision mode")
        if cls == "value" and y is None:
            raise ValueError("class 'value' needs y")
    elif mode == "ones":
        if cls not in ("bot", "zero", "one"):
            raise ValueError(f"class {cls!r} is not defined in ones mode")
    else:
        raise ValueError(f"unknown mode {mode!r}")
    layout = state.layout
    o, bot = layout.f_offset, layout.bot
    target = {"bot": bot, "value": y, "zero": 0, "one": 1}[cls]
    kept = {}
    for key, amp, s in _statistics(state, mode):
        p = key[1]
        active = p != 0 if mode == "disjoint-collisions" else p == 1
        if s == k and active and key[o + key[0]] == target:
            kept[key] = amp
    return QueryState(layout, kept, prune=False)


def default_k_max(T: int, M: int, mode: str) -> int:
    return min(T, M // 2) if mode == "disjoint-collisions" else min(T, M)


@dataclass
class ProgressTable:
    """q[t][k] for t = 0..T, k = 0..k_max."""

    mode: str
    q: list[list[float]]

    @property
    def T(self) -> int:
        return len(self.q) - 1

    @property
    def k_max(self) -> int:
        return len(self.q[0]) - 1

    @classmethod
    def from_states(cls, states: Sequence[QueryState], mode: str, k_max: int | None = None) -> "ProgressTable":
        if k_max is None:
            k_max = default_k_max(len(states) - 1, states[0].layout.M, mode)
        return cls(mode, [progress_profile(s, mode, k_max) for s in states])


def collision_step(t: int, N: int) -> float:
    return 4 * math.sqrt(t / N)


def ksearch_step(K: int, N: int) -> float:
    return 4 * math.sqrt(K / N)


@dataclass
class Cell:
    t: int
    k: int
    q: float
    bound: float
    slack: float
    binomial: float
    binomial_slack: float


@dataclass
class RecurrenceReport:
    mode: str
    cells: list[Cell] = field(default_factory=list)

    @property
    def min_slack(self) -> float:
        return min(c.slack for c in self.cells)

    @property
    def min_binomial_slack(self) -> float:
        return min(c.binomial_slack for c in self.cells)

    @property
    def ok(self) -> bool:
        return self.min_slack >= -RECURRENCE_TOL and self.min_binomial_slack >= -RECURRENCE_TOL

    def write_csv(self, fp, prefix: dict | None = None) -> None:
        prefix = prefix or {}
        w = csv.writer(fp, lineterminator="\n")
        w.writerow([*prefix, "t", "k", "q", "bound", "slack"])
        for c in self.cells:
            w.writerow([*prefix.values(), c.t, c.k, c.q, c.bound, c.slack])


def check_recurrence(table: ProgressTable, N: int, K: int | None = None) -> RecurrenceReport:
    """Slack of the one-step recurrence and of the binomial bound at every cell.

    Cell (t+1, k+1) is bounded by q[t][k+1] + c_t q[t][k] with c_t = 4 sqrt(t/N)
    (collisions) or 4 sqrt(K/N) (ones).  Row t=0 is bounded by the initial
    values (1, 0, 0, ...) and column k=0 by the previous norm.  ``N`` and ``K``
    are the distribution parameters, not the phase modulus.
    """
    from .bounds import collision_progress_bound, ksearch_progress_bound

    if table.mode == "ones" and K is None:
        raise ValueError("ones mode needs the distribution parameter K")
    q = table.q
    report = RecurrenceReport(table.mode)
    for t in range(table.T + 1):
        for k in range(table.k_max + 1):
            if t == 0:
                bound = 1.0 if k == 0 else 0.0
            elif k == 0:
                bound = q[t - 1][0]
            else:
                c = collision_step(t - 1, N) if table.mode == "disjoint-collisions" else ksearch_step(K, N)
                bound = q[t - 1][k] + c * q[t - 1][k - 1]
            if table.mode == "disjoint-collisions":
                binom = collision_progress_bound(t, k, N)
            else:
                binom = ksearch_progress_bound(t, k, K, N)
            v = q[t][k]
            report.cells.append(Cell(t, k, v, bound, bound - v, binom, binom - v))
    return report
