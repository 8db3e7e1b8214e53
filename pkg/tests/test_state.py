import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recordlab import dense
from recordlab.state import (
    BasisComponent,
    LayoutError,
    QueryState,
    RegisterLayout,
    add,
    apply_local_unitary,
    apply_permutation,
    distance,
    dump_jsonl,
    from_dense,
    init_recording_state,
    inner_product,
    load_jsonl,
    project,
    random_state,
    to_dense,
)


def haar(d, rng):
    z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    q, r = np.linalg.qr(z)
    return q * (np.diag(r) / np.abs(np.diag(r)))


def test_layout_sizes_and_positions():
    lay = RegisterLayout.collision(3, 2, 1, scratch=(4,))
    assert lay.slots == (3, 3, 3, 4)
    assert lay.bot == 2
    assert lay.width == 2 + 4 + 3
    assert lay.size == 3 * 2 * 108 * 27
    assert lay.position("Q") == 0 and lay.position("P") == 1
    assert lay.position("W3") == 5 and lay.position("F0") == 6
    assert lay.size_of("F2") == 3
    with pytest.raises(LayoutError):
        lay.position("W4")
    with pytest.raises(LayoutError):
        lay.position("X")


def test_layout_rejects_bad_sizes():
    with pytest.raises(LayoutError):
        RegisterLayout(0, 2)
    with pytest.raises(LayoutError):
        RegisterLayout(2, 2, (0,))
    with pytest.raises(LayoutError):
        RegisterLayout(200, 200)  # (N+1)^M overflows a 64-bit index


def test_layout_json_roundtrip():
    lay = RegisterLayout.ksearch(4, 2, scratch=(3,))
    assert RegisterLayout.from_json(lay.to_json()) == lay
    assert lay.N == 2 and lay.slots == (4, 4, 3)


def test_initial_state():
    lay = RegisterLayout(2, 3, (2,))
    s = init_recording_state(lay)
    ((comp, amp),) = list(s.components())
    assert comp == BasisComponent(0, 0, (0,), (3, 3))
    assert amp == 1
    assert s.norm() == 1


def test_component_keys_validated():
    lay = RegisterLayout(2, 2)
    with pytest.raises(LayoutError):
        QueryState.from_components(lay, [((0, 0, 3, 0), 1.0)])
    with pytest.raises(LayoutError):
        QueryState.from_components(lay, [((0, 0, 0), 1.0)])


def test_dense_roundtrip_and_jsonl():
    rng = np.random.default_rng(3)
    lay = RegisterLayout(2, 2, (3,))
    s = random_state(lay, 12, rng)
    assert distance(from_dense(lay, to_dense(s)), s) < 1e-15
    buf = io.StringIO()
    dump_jsonl(s, buf)
    back = load_jsonl(lay, buf.getvalue().splitlines())
    assert distance(back, s) == 0
    keys = [(d["x"], d["p"], *d["w"], *d["f"]) for d in map(json.loads, buf.getvalue().splitlines())]
    assert keys == sorted(keys)


def test_random_state_recorded_cap():
    rng = np.random.default_rng(0)
    lay = RegisterLayout(4, 2)
    s = random_state(lay, 30, rng, max_recorded=1)
    assert all(sum(v != 2 for v in c.f) <= 1 for c, _ in s.components())
    assert math.isclose(s.norm(), 1.0)


def test_inner_product_conjugate_linear():
    rng = np.random.default_rng(1)
    lay = RegisterLayout(2, 2)
    a, b = random_state(lay, 5, rng), random_state(lay, 7, rng)
    scaled = QueryState(lay, {k: 2j * v for k, v in a.amplitudes.items()})
    assert abs(inner_product(scaled, b) - (-2j) * inner_product(a, b)) < 1e-14
    assert abs(inner_product(a, b) - np.conj(inner_product(b, a))) < 1e-14
    assert abs(inner_product(a, a) - 1) < 1e-14


def test_project_and_add():
    rng = np.random.default_rng(2)
    lay = RegisterLayout(2, 2)
    s = random_state(lay, 20, rng)
    yes = project(s, lambda c: c.x == 0)
    no = project(s, lambda c: c.x != 0)
    assert distance(add(yes, no), s) < 1e-15
    assert math.isclose(yes.norm() ** 2 + no.norm() ** 2, 1.0)


def test_unitary_rejected_when_not_unitary():
    s = init_recording_state(RegisterLayout(2, 2))
    with pytest.raises(ValueError):
        apply_local_unitary(s, "Q", np.array([[1, 1], [0, 1]]))
    with pytest.raises(ValueError):
        apply_local_unitary(s, "Q", np.eye(3))
    with pytest.raises(LayoutError):
        apply_local_unitary(s, ("Q", "Q"), np.eye(4))


def test_joint_target_order():
    lay = RegisterLayout(2, 3)
    s = init_recording_state(lay)
    # map |q=0, p=0> to |q=1, p=2> on the joint (Q, P) alphabet, index = q*3 + p
    perm = list(range(6))
    perm[0], perm[5] = 5, 0
    out = apply_permutation(s, ("Q", "P"), perm)
    ((comp, _),) = list(out.components())
    assert (comp.x, comp.p) == (1, 2)
    # on (P, Q) the index is p*2 + q, so index 5 is again p=2, q=1
    out = apply_permutation(s, ("P", "Q"), perm)
    ((comp, _),) = list(out.components())
    assert (comp.x, comp.p) == (1, 2)
    perm = list(range(6))
    perm[0], perm[1] = 1, 0
    ((comp, _),) = list(apply_permutation(s, ("P", "Q"), perm).components())
    assert (comp.x, comp.p) == (1, 0)
    ((comp, _),) = list(apply_permutation(s, ("Q", "P"), perm).components())
    assert (comp.x, comp.p) == (0, 1)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), target=st.sampled_from(["Q", "P", "W0", "F1", ("Q", "W0"), ("F0", "P")]))
def test_local_unitary_matches_dense_route(seed, target):
    rng = np.random.default_rng(seed)
    lay = RegisterLayout(2, 2, (3,))
    s = random_state(lay, 10, rng)
    names = (target,) if isinstance(target, str) else target
    d = math.prod(lay.size_of(n) for n in names)
    U = haar(d, rng)
    sparse = to_dense(apply_local_unitary(s, target, U))
    ref = dense.apply_local_unitary(lay, to_dense(s), target, U)
    assert np.max(np.abs(sparse - ref)) < 1e-12
    assert math.isclose(np.linalg.norm(sparse), 1.0, abs_tol=1e-12)
