import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recordlab.reduction import (
    C0,
    EVENTS,
    FourWiseHash,
    classical_ed_solver,
    collision_pairs,
    enumerate_hash_tuples,
    event_bounds,
    eval_hash,
    first_collision_rows,
    monte_carlo_events,
    multicollision_profile,
    next_prime,
    random_function,
    run_algorithm1,
    sample_hash,
    sample_hash_values,
)


def brute_force_pair(values):
    for i, j in itertools.combinations(range(len(values)), 2):
        if values[i] == values[j]:
            return (i, j)
    return None


def test_next_prime():
    assert [next_prime(n) for n in (0, 2, 4, 5, 90, 100000)] == [2, 2, 5, 5, 97, 100003]
    with pytest.raises(ValueError):
        next_prime(24, window=5)


@pytest.mark.parametrize("R", [4, 5])
def test_hash_family_exactly_four_wise_uniform(R):
    counts = enumerate_hash_tuples(5, 4, R)
    assert len(counts) == R**4
    assert set(counts.values()) == {1}


def test_hash_pairs_uniform_by_enumeration():
    counts = enumerate_hash_tuples(5, 4, 4)
    pairs = {}
    for t, c in counts.items():
        pairs[t[:2]] = pairs.get(t[:2], 0) + c
    assert len(pairs) == 16 and set(pairs.values()) == {16}


def test_constant_polynomial_is_constant():
    h = FourWiseHash(7, (3, 0, 0, 0), 6, 7)
    assert list(h.values()) == [3] * 6
    assert eval_hash(h, 4) == 3 and h(2) == 3


def test_hash_evaluation_formula():
    h = FourWiseHash(11, (1, 2, 3, 4), 10, 5)
    for i in range(10):
        assert h(i) == ((4 * i**3 + 3 * i**2 + 2 * i + 1) % 11) % 5


def test_sample_hash_deterministic_and_in_range():
    a, b = sample_hash(317, 10**5, 42), sample_hash(317, 10**5, 42)
    assert a == b
    assert a.q == 100003
    v = a.values()
    assert v.min() >= 0 and v.max() < 10**5


@pytest.mark.parametrize("d,R", [(4, 10), (50, 100), (20, 7)])
def test_pairwise_collision_rate(d, R):
    v = sample_hash_values(d, R, 100_000, 7)
    freq = np.mean(v[:, 0] == v[:, 1])
    se = math.sqrt((1 / R) * (1 - 1 / R) / len(v))
    assert abs(freq - 1 / R) <= 3 * se


def test_ed_solver_examples():
    assert classical_ed_solver([5, 3, 5]) == (0, 2)
    assert classical_ed_solver([1, 2, 3]) is None
    assert classical_ed_solver([]) is None
    assert classical_ed_solver([4, 1, 1, 4]) == (0, 3)
    assert classical_ed_solver([2, 7, 7, 2, 7]) == (0, 3)


def test_ed_solver_agrees_with_quadratic_scan():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(0, 30))
        vals = rng.integers(0, int(rng.integers(1, 40)), size=n)
        assert classical_ed_solver(vals) == brute_force_pair(vals.tolist())


@settings(max_examples=50, deadline=None)
@given(rows=st.lists(st.lists(st.integers(0, 6), min_size=5, max_size=5), min_size=1, max_size=8))
def test_batched_solver_matches_rowwise(rows):
    found, i, j = first_collision_rows(np.array(rows))
    for r, row in enumerate(rows):
        ref = brute_force_pair(row)
        assert bool(found[r]) == (ref is not None)
        if ref is not None:
            assert (i[r], j[r]) == ref


def test_multicollision_profile_examples():
    assert multicollision_profile([0, 1, 2, 3]) == {
        "histogram": {1: 4}, "max_multiplicity": 1, "disjoint_collisions": 0, "collision_pairs": 0}
    prof = multicollision_profile([7] * 5)
    assert prof["histogram"] == {5: 1} and prof["max_multiplicity"] == 5
    assert prof["disjoint_collisions"] == 2 and prof["collision_pairs"] == 10
    assert collision_pairs([1, 1, 2, 2, 2]) == 4


def test_multiplicity_of_random_functions():
    # log-size multi-collisions: max preimage <= 2 ln N holds for D = N but not for D = 10N
    N = 10**4
    small = [multicollision_profile(random_function(N, N, s))["max_multiplicity"] for s in range(30)]
    assert max(small) <= 2 * math.log(N)
    big = [multicollision_profile(random_function(10 * N, N, s))["max_multiplicity"] for s in range(30)]
    assert min(big) > 2 * math.log(N)


def test_algorithm1_constant_and_injective():
    D, N = 400, 400
    f = np.zeros(D, dtype=int)
    out = run_algorithm1(f, D, N, 0, rounds=500)
    assert len(out) >= 490  # only rounds where h(0) = h(1) output nothing
    assert all(a != b and f[a] == f[b] for a, b in out)
    with pytest.warns(UserWarning):
        assert run_algorithm1(np.arange(D), D, N, 0, rounds=200) == []


def test_algorithm1_outputs_are_collisions():
    N = 1000
    f = random_function(10 * N, N, 3)
    out = run_algorithm1(f, 10 * N, N, 4, rounds=2000)
    assert out and all(a < b and f[a] == f[b] for a, b in out)


def test_event_bounds():
    b = event_bounds()
    assert b["C"] == pytest.approx(1 - 40 / 81)
    assert b["ABCD"] == 1 / 250 and b["B"] == 1 - 1e-4


def test_injective_hash_probability_bonferroni():
    # h: [100] -> [10^4]; pairwise and 4-wise independence make both terms exact
    N = 100
    D = N * N
    d = 100
    f = random_function(D, N, 0)
    tally = monte_carlo_events(f, D, N, 20_000, 1)
    s1 = math.comb(d, 2) / D
    s2 = math.comb(math.comb(d, 2), 2) / D**2
    se = tally.standard_error("A")
    assert 1 - s1 - 3 * se <= tally.freq("A") <= 1 - s1 + s2 + 3 * se


def test_threshold_input_meets_c_bound():
    # 500 values of multiplicity 9 and 400 of multiplicity 10: exactly 40 N pairs
    N = 900
    f = np.repeat(np.arange(N), [9] * 500 + [10] * 400)
    D = len(f)
    assert collision_pairs(f) == C0 * N
    f = np.random.default_rng(0).permutation(f)
    tally = monte_carlo_events(f, D, N, 20_000, 2)
    lo, hi = tally.wilson("C")
    assert hi >= 1 - 4 * (1 + 9) / 81
    for e in EVENTS:
        assert tally.counts["ABCD"] <= tally.counts[e]


def test_monte_carlo_deterministic():
    N = 500
    f = random_function(10 * N, N, 0)
    a = monte_carlo_events(f, 10 * N, N, 3000, 9)
    b = monte_carlo_events(f, 10 * N, N, 3000, 9)
    assert a == b
    rep = a.report()
    assert set(rep) == set(EVENTS)
    assert rep["D"]["bound"] is None and rep["D"]["pass"]
