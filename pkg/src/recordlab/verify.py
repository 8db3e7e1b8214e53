"""Invariant suites shared by the CLI and the acceptance tests."""
from __future__ import annotations

import itertools
import warnings
from dataclasses import dataclass, field

import numpy as np

from .algorithms import (
    OutputRelation,
    build_classical_reader,
    random_algorithm,
    run,
    success_probability,
)
from .bounds import BoundRangeWarning, collision_success_bound, ksearch_success_bound
from .oracles import (
    bernoulli_closed_form_column,
    build_bernoulli_sampling_unitary,
    build_uniform_sampling_unitary,
    apply_translation_T,
    recording_matrix,
    uniform_closed_form_column,
)
from .progress import ProgressTable, check_recurrence
from .reduction import enumerate_hash_tuples
from .state import RegisterLayout

SUITES = ("oracle-equivalence", "indistinguishability", "support", "unitarity",
          "recurrences", "bounds-domination", "hash-exactness")

EQUIV_TOL = 1e-12
STATE_TOL = 1e-9
NORM_TOL = 1e-9
BOUND_TOL = 1e-8


@dataclass
class SuiteReport:
    suite: str
    assertions: list = field(default_factory=list)

    def check(self, name: str, value: float, tolerance: float, ok: bool, **extra) -> None:
        self.assertions.append({"check": name, "value": value, "tolerance": tolerance,
                                "pass": bool(ok), **extra})

    @property
    def passed(self) -> bool:
        return all(a["pass"] for a in self.assertions)

    def to_json(self) -> dict:
        return {"suite": self.suite, "pass": self.passed, "assertions": self.assertions}


def _column_vector(col, dim: int) -> np.ndarray:
    v = np.zeros(dim, dtype=complex)
    for j, c in col:
        v[j] += c
    return v


def closed_form_deviation(N_max: int = 8) -> tuple[float, float]:
    """Max per-amplitude gap between closed-form and generic columns (uniform, Bernoulli)."""
    worst_u = 0.0
    for N in range(1, N_max + 1):
        S = build_uniform_sampling_unitary(N).matrix(0)
        for p in range(N):
            R = recording_matrix(S, p)
            for v in range(N + 1):
                col = uniform_closed_form_column(N, p, v)
                got = np.eye(N + 1)[:, v] if col is None else _column_vector(col, N + 1)
                worst_u = max(worst_u, float(np.max(np.abs(got - R[:, v]))))
    worst_b = 0.0
    for Nd in range(1, N_max + 1):
        for K in range(1, Nd + 1):
            fam = build_bernoulli_sampling_unitary(K, Nd)
            a, b = fam.params["alpha"], fam.params["beta"]
            for p in range(2):
                R = recording_matrix(fam.matrix(0), p)
                for v in range(3):
                    col = bernoulli_closed_form_column(a, b, p, v)
                    got = np.eye(3)[:, v] if col is None else _column_vector(col, 3)
                    worst_b = max(worst_b, float(np.max(np.abs(got - R[:, v]))))
    return worst_u, worst_b


def printed_scale_norm_gap(N_max: int = 8) -> float:
    """Largest | ||column|| - 1 | when the empty-symbol coefficient is scaled by 1/N."""
    gap = 0.0
    for N in range(2, N_max + 1):
        for p in range(1, N):
            for v in range(N):
                col = _column_vector(uniform_closed_form_column(N, p, v, bot_scale="printed"), N + 1)
                gap = max(gap, abs(np.linalg.norm(col) - 1))
    return gap


def suite_oracle_equivalence() -> SuiteReport:
    rep = SuiteReport("oracle-equivalence")
    wu, wb = closed_form_deviation()
    rep.check("uniform closed form vs generic", wu, EQUIV_TOL, wu <= EQUIV_TOL)
    rep.check("bernoulli closed form vs generic", wb, EQUIV_TOL, wb <= EQUIV_TOL)
    gap = printed_scale_norm_gap()
    rep.check("1/N empty coefficient breaks unitarity", gap, 1e-6, gap > 1e-6)
    return rep


# -- runs shared by the indistinguishability, support and recurrence suites --

def indistinguishability_cases(T_max: int = 4) -> list[tuple]:
    """(family, M, N, T, K, N_dist): uniform over M, N in {2,3,4}; Bernoulli(1, N_dist) on N=2."""
    cases = []
    for M, N, T in itertools.product((2, 3, 4), (2, 3, 4), range(T_max + 1)):
        cases.append(("uniform", M, N, T, None, N))
    for M, Nd, T in itertools.product((2, 3, 4), (2, 3, 4), range(T_max + 1)):
        cases.append(("bernoulli", M, 2, T, 1, Nd))
    return cases


def family_for(case):
    name, M, N, T, K, Nd = case
    return build_uniform_sampling_unitary(N) if name == "uniform" else build_bernoulli_sampling_unitary(K, Nd)


@dataclass
class RunRecord:
    case: tuple
    deviations: list
    support_violations: int
    norms: list
    table: ProgressTable


def run_case(case, seed: int, index: int) -> RunRecord:
    name, M, N, T, K, Nd = case
    rng = np.random.default_rng([seed, index])
    fam = family_for(case)
    layout = RegisterLayout(M, N, (2,))
    alg = random_algorithm(layout, T, rng)
    psi = run(alg, "standard", fam, route="dense", capture=True)
    phi = run(alg, "recording", fam, capture=True)
    o, bot = layout.f_offset, layout.bot
    devs, norms, violations = [], [], 0
    for t, (a, b) in enumerate(zip(psi, phi)):
        devs.append(float(np.linalg.norm((a - apply_translation_T(b, fam)).ravel())))
        norms.append(b.norm())
        norms.append(float(np.linalg.norm(a.ravel())))
        violations += sum(1 for key in b.amplitudes if sum(v != bot for v in key[o:]) > t)
    mode = "disjoint-collisions" if name == "uniform" else "ones"
    return RunRecord(case, devs, violations, norms, ProgressTable.from_states(phi, mode))


def run_all_cases(seed: int = 0, T_max: int = 4) -> list[RunRecord]:
    return [run_case(c, seed, i) for i, c in enumerate(indistinguishability_cases(T_max))]


def suite_indistinguishability(records) -> SuiteReport:
    rep = SuiteReport("indistinguishability")
    worst = max(max(r.deviations) for r in records)
    rep.check("max_t ||psi_t - T phi_t||", worst, STATE_TOL, worst <= STATE_TOL, runs=len(records))
    return rep


def suite_support(records) -> SuiteReport:
    rep = SuiteReport("support")
    bad = sum(r.support_violations for r in records)
    rep.check("components with more than t recorded entries", bad, 0, bad == 0, runs=len(records))
    return rep


def recurrence_slack(record: RunRecord) -> float:
    name, M, N, T, K, Nd = record.case
    rr = check_recurrence(record.table, Nd, K) if name == "bernoulli" else check_recurrence(record.table, N)
    return min(rr.min_slack, rr.min_binomial_slack)


def suite_recurrences(records) -> SuiteReport:
    rep = SuiteReport("recurrences")
    worst = min(recurrence_slack(r) for r in records)
    rep.check("min recurrence / binomial slack", worst, -BOUND_TOL, worst >= -BOUND_TOL, runs=len(records))
    return rep


def suite_unitarity(records=None) -> SuiteReport:
    rep = SuiteReport("unitarity")
    worst = 0.0
    for N in range(1, 9):
        fams = [build_uniform_sampling_unitary(N)] + [build_bernoulli_sampling_unitary(K, N) for K in range(1, N + 1)]
        for fam in fams:
            S = fam.matrix(0)
            d = S.shape[0]
            for p in range(fam.N):
                R = recording_matrix(S, p)
                worst = max(worst, float(np.max(np.abs(R.conj().T @ R - np.eye(d)))))
    rep.check("recording operator unitary", worst, 1e-10, worst <= 1e-10)
    if records is None:
        records = [run_case(c, 0, i) for i, c in enumerate(indistinguishability_cases(2)) if c[1] <= 3]
    nworst = max(abs(n - 1) for r in records for n in r.norms)
    rep.check("state norms preserved", nworst, NORM_TOL, nworst <= NORM_TOL, runs=len(records))
    return rep


# -- success bounds -------------------------------------------------------

def bounds_cases(T_max: int = 4) -> list[tuple]:
    """(kind, K, M, N_layout, N_dist, T, reader) for the bounds-domination grid."""
    cases = []
    for M, N, T in itertools.product((2, 3, 4), (2, 3, 4), range(T_max + 1)):
        cases.append(("collision", 1, M, N, N, T, False))
    for N, T in itertools.product((2, 3, 4), range(T_max + 1)):
        cases.append(("collision", 2, 4, N, N, T, False))
    for K, M, Nd, T in itertools.product((1, 2), (2, 3, 4), (2, 3, 4), range(T_max + 1)):
        if K <= M:
            cases.append(("ksearch", K, M, 2, Nd, T, False))
    for M, N in itertools.product((2, 3, 4), (2, 3, 4)):
        cases.append(("collision", 1, M, N, N, M, True))
    for N in (2, 3, 4):
        cases.append(("collision", 2, 4, N, N, 4, True))
    for K, M, Nd in itertools.product((1, 2), (2, 3, 4), (2, 3, 4)):
        if K <= M:
            cases.append(("ksearch", K, M, 2, Nd, M, True))
    return cases


def bound_check(case, seed: int, index: int) -> dict:
    kind, K, M, N, Nd, T, reader = case
    rel = OutputRelation(kind, K)
    if kind == "collision":
        fam = build_uniform_sampling_unitary(N)
    else:
        fam = build_bernoulli_sampling_unitary(K, Nd)
    if reader:
        alg = build_classical_reader(M, N, K, kind, reads=T)
    else:
        rng = np.random.default_rng([seed, index])
        if kind == "collision":
            layout = RegisterLayout.collision(M, N, K, scratch=(M,))
        else:
            layout = RegisterLayout.ksearch(M, K, scratch=(M,))
        alg = random_algorithm(layout, T, rng, rel)
    phi = run(alg, "recording", fam)
    sigma = success_probability(phi, rel, "recording", fam)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundRangeWarning)
        bound = collision_success_bound(T, K, Nd) if kind == "collision" else ksearch_success_bound(T, K, Nd)
    return {"kind": kind, "K": K, "M": M, "N": N, "N_dist": Nd, "T": T, "reader": reader,
            "sigma": sigma, "bound": bound, "pass": sigma <= bound + BOUND_TOL}


def suite_bounds_domination(seed: int = 0, T_max: int = 4) -> SuiteReport:
    rep = SuiteReport("bounds-domination")
    rows = [bound_check(c, seed, i) for i, c in enumerate(bounds_cases(T_max))]
    worst = max(r["sigma"] - r["bound"] for r in rows)
    rep.check("max sigma - bound", worst, BOUND_TOL, all(r["pass"] for r in rows), runs=len(rows),
              vacuous=sum(r["bound"] >= 1 for r in rows))
    return rep


def suite_hash_exactness() -> SuiteReport:
    rep = SuiteReport("hash-exactness")
    for R in (4, 5):
        counts = enumerate_hash_tuples(5, 4, R)
        expected = R**4
        spread = max(counts.values()) - min(counts.values())
        ok = len(counts) == expected and spread == 0
        rep.check(f"4-wise uniform, q=5 d=4 R={R}", spread, 0, ok, tuples=len(counts))
    return rep


def run_suite(name: str, seed: int = 0) -> SuiteReport:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {', '.join(SUITES)}")
    if name == "oracle-equivalence":
        return suite_oracle_equivalence()
    if name == "hash-exactness":
        return suite_hash_exactness()
    if name == "bounds-domination":
        return suite_bounds_domination(seed)
    if name == "unitarity":
        return suite_unitarity()
    records = run_all_cases(seed)
    return {"indistinguishability": suite_indistinguishability,
            "support": suite_support,
            "recurrences": suite_recurrences}[name](records)

