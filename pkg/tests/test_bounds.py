import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from recordlab.bounds import (
    BoundRangeWarning,
    collision_progress_bound,
    collision_progress_bound_direct,
    collision_success_bound,
    collision_success_terms,
    half_ceil,
    ksearch_progress_bound,
    ksearch_progress_bound_direct,
    ksearch_success_bound,
    build_sorting_instance,
    sample_sorting_g,
    tradeoff_curves,
)


def test_half_ceil():
    assert [half_ceil(K) for K in range(1, 7)] == [1, 1, 2, 2, 3, 3]


def test_progress_bound_values():
    # C(10,3) (4 sqrt(10/100))^3, evaluated independently at 40 digits
    assert collision_progress_bound(10, 3, 100) == pytest.approx(242.8629243009315, rel=1e-12)
    assert ksearch_progress_bound(6, 2, 3, 300) == pytest.approx(2.4, rel=1e-12)
    assert collision_progress_bound(0, 0, 5) == 1
    assert collision_progress_bound(2, 3, 5) == 0
    assert collision_progress_bound(0, 1, 5) == 0


@given(t=st.integers(0, 60), k=st.integers(0, 60), N=st.integers(1, 10**6), K=st.integers(1, 50))
def test_log_domain_matches_direct(t, k, N, K):
    assert collision_progress_bound(t, k, N) == pytest.approx(collision_progress_bound_direct(t, k, N), rel=1e-9)
    assert ksearch_progress_bound(t, k, K, N) == pytest.approx(ksearch_progress_bound_direct(t, k, K, N), rel=1e-9)


def test_log_domain_survives_overflow():
    v = collision_progress_bound(5000, 2000, 2)
    assert v == math.inf
    with pytest.raises(OverflowError):
        collision_progress_bound_direct(5000, 2000, 2)


def test_negative_inputs_rejected():
    with pytest.raises(ValueError):
        collision_progress_bound(-1, 0, 4)
    with pytest.raises(ValueError):
        ksearch_progress_bound(1, 1, 0, 4)


def test_success_bound_values():
    # independent 40-digit evaluations of 2u^2 + 2v^2
    assert collision_success_bound(8, 2, 2**20) == pytest.approx(32.015625, rel=1e-12)
    assert collision_success_bound(8, 3, 2**20) == pytest.approx(2.336737816222012e-05, rel=1e-12)
    assert ksearch_success_bound(4, 2, 1024) == pytest.approx(1.03515625, rel=1e-12)


def test_success_bound_range_warning():
    with pytest.warns(BoundRangeWarning):
        collision_success_bound(1, 2, 8)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        collision_success_bound(1, 2, 16)
    terms = collision_success_terms(0, 1, 64)
    assert terms.u == 0 and terms.v == 2
    assert terms.clamped == 1.0 and terms.raw == 8


def test_success_bound_vacuous_at_desk_scale():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BoundRangeWarning)
        for N in (2, 3, 4):
            for T in range(5):
                assert collision_success_bound(T, 1, N) >= 1
                assert ksearch_success_bound(T, 1, N) >= 1


def test_curves_monotone_and_metadata():
    S = [4, 8, 16, 32, 64]
    for kind in ("collision-upper", "collision-conjecture"):
        T = [r["T"] for r in tradeoff_curves(kind, S, 2**16, 16).rows]
        assert all(a > b for a, b in zip(T, T[1:]))
    T = [r["T"] for r in tradeoff_curves("sorting-lower", S, 2**16).rows]
    assert all(a > b for a, b in zip(T, T[1:]))
    c = tradeoff_curves("collision-lower", S, 2**16, 16, {"c_lower": 2.0})
    assert c.metadata()["constants"]["c_lower"] == 2.0
    assert c.metadata()["points"] == 5
    T = [r["T"] for r in c.rows]
    assert all(a >= b for a, b in zip(T, T[1:]))
    with pytest.raises(ValueError):
        tradeoff_curves("collision-upper", S, 16)
    with pytest.raises(ValueError):
        tradeoff_curves("nope", S, 16, 1)


def test_upper_meets_time_floor_at_balance_point():
    # at S = K^{2/3} N^{1/3} the upper curve equals K^{2/3} N^{1/3}
    N, K = 2**18, 8
    S = K ** (2 / 3) * N ** (1 / 3)
    up = tradeoff_curves("collision-upper", [S], N, K).rows[0]["T"]
    assert up == pytest.approx(K ** (2 / 3) * N ** (1 / 3), rel=1e-12)


def test_sorting_instance_example():
    assert build_sorting_instance((1, 0, 1, 0), 3, 8) == [2, 2, 1, 0, 1, 0, 0, 0]
    assert build_sorting_instance((1, 1), 1, 4) == [1, 1, 0, 0]
    with pytest.raises(ValueError):
        build_sorting_instance((1, 0, 1, 0), 5, 8)
    with pytest.raises(ValueError):
        build_sorting_instance((1, 0), 1, 8)


def test_sorting_g_density():
    rng = np.random.default_rng(0)
    N, S = 4096, 16
    g = sample_sorting_g(N, S, rng)
    p = 2 * S / (N / 4)
    assert abs(np.mean(g) - p) < 4 * math.sqrt(p * (1 - p) / len(g))
    with pytest.raises(ValueError):
        sample_sorting_g(64, 16, rng)
