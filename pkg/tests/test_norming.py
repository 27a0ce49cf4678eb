import numpy as np
import pytest

from pnormlab.core import FiniteOperator, lp_norm, psi
from pnormlab.errors import (
    DegenerateNormingSet,
    EmptyNormingSet,
    FullSpan,
    PreconditionViolated,
)
from pnormlab.norming import (
    NormingSet,
    annihilator_basis,
    block_leakage_probe,
    disjoint_support_transfer_check,
    interval_property_check,
    norming_set,
    norming_span_dim,
    p4_symmetry_gap,
    segment_norming_check,
    sign_compatible,
)


def _op(matrix, p):
    return FiniteOperator.from_matrix(np.asarray(matrix, dtype=float), p)


def _ns(members, p=3.0):
    m = np.atleast_2d(np.asarray(members, dtype=float))
    return NormingSet(
        members=m,
        residuals=np.zeros(m.shape[0]),
        op_norm=1.0,
        complete_heuristic=True,
        cluster_radius=1e-4,
        p=p,
    )


def test_norming_set_unique_max_diagonal():
    ns = norming_set(_op(np.diag([1.0, 0.5, 1 / 3]), 3.0), budget=96, seed=0)
    assert len(ns) == 1
    np.testing.assert_allclose(ns.members[0], [1.0, 0.0, 0.0], atol=1e-12)
    assert ns.op_norm == pytest.approx(1.0, abs=1e-12)
    assert ns.complete_heuristic


def test_norming_set_isometry_degenerate():
    with pytest.raises(DegenerateNormingSet):
        norming_set(_op(np.eye(3), 3.0), budget=128, seed=0)


def test_norming_set_zero_operator_degenerate():
    with pytest.raises(DegenerateNormingSet):
        norming_set(_op(np.zeros((2, 2)), 3.0), budget=16, seed=0)


def test_norming_set_mirror_pair_separated():
    # two symmetric maxima: members are sign-normalized and well separated
    S = _op([[1.0, 0.0], [0.0, 1.0], [0.0, 0.0]], 3.0)
    with pytest.raises(DegenerateNormingSet):
        # isometric embedding: a continuum again
        norming_set(S, budget=128, seed=1)


def test_members_pairwise_separated():
    S = _op(np.diag([1.0, 1.0, 0.3]), 3.0)
    try:
        ns = norming_set(S, budget=128, seed=2)
    except DegenerateNormingSet:
        return  # span(e0, e1) is isometric; acceptable signal
    for i in range(len(ns)):
        for j in range(i + 1, len(ns)):
            assert lp_norm(ns.members[i] - ns.members[j], 3.0) > ns.cluster_radius


def test_norming_span_dim():
    assert norming_span_dim(_ns([[1.0, 0.0]])) == 1
    two = [[1.0, 0.0], [2 ** (-1 / 3), 2 ** (-1 / 3)]]
    assert norming_span_dim(_ns(two)) == 2
    with pytest.raises(EmptyNormingSet):
        norming_span_dim(_ns(np.zeros((0, 2))))


def test_annihilator_basis():
    basis = annihilator_basis(_ns([[1.0, 0.0]]), 2)
    assert basis.shape == (1, 2)
    assert abs(abs(basis[0, 1]) - 1.0) <= 1e-12
    diag = 2 ** (-1 / 3)
    basis = annihilator_basis(_ns([[diag, diag]]), 2)
    want = np.array([1.0, -1.0]) / np.sqrt(2)
    assert min(np.linalg.norm(basis[0] - want), np.linalg.norm(basis[0] + want)) <= 1e-12
    with pytest.raises(FullSpan):
        annihilator_basis(_ns(np.eye(2)), 2)


def test_interval_property_check():
    S = _op(np.eye(4), 3.0)
    assert interval_property_check(S, _ns([[0.9, 0.43, 0.0, 0.0]]))
    assert not interval_property_check(S, _ns([[0.9, 0.0, 0.43, 0.0]]))
    assert not interval_property_check(S, _ns([[0.0, 0.9, 0.43, 0.0]]))


def test_sign_compatible():
    D = _op(np.diag([1.0, 0.5]), 3.0)
    x = np.array([0.7, 0.2])
    assert sign_compatible(D, x, x)
    assert not sign_compatible(D, x, -x)
    assert sign_compatible(D, [1.0, 0.0], [0.0, 1.0])


def test_disjoint_support_transfer_diagonal_and_permutation():
    D = _op(np.diag([1.0, 0.5]), 3.0)
    assert disjoint_support_transfer_check(D, [1.0, 0.0], [0.0, 1.0])
    P = _op([[0.0, 1.0], [1.0, 0.0]], 3.0)
    assert disjoint_support_transfer_check(P, [1.0, 0.0], [0.0, 1.0])


def test_disjoint_support_transfer_preconditions():
    D = _op(np.diag([1.0, 0.5]), 3.0)
    with pytest.raises(PreconditionViolated):
        disjoint_support_transfer_check(D, [1.0, 0.1], [0.3, 1.0])  # overlap
    with pytest.raises(PreconditionViolated):
        disjoint_support_transfer_check(D, [0.0, 1.0], [1.0, 0.0])  # not norming
    D2 = _op(np.diag([1.0, 0.5]), 2.0)
    with pytest.raises(PreconditionViolated):
        disjoint_support_transfer_check(D2, [1.0, 0.0], [0.0, 1.0])  # p <= 2


def test_segment_norming_identity_and_isometric_span():
    t = np.linspace(0.0, 10.0, 50)
    I = _op(np.eye(2), 3.0)
    assert segment_norming_check(I, [1.0, 0.0], [0.0, 1.0], t) <= 1e-14
    D = _op(np.diag([1.0, 1.0, 0.5]), 3.0)
    assert segment_norming_check(D, [1, 0, 0], [0, 1, 0], t) <= 1e-14


def test_segment_norming_preconditions():
    D = _op(np.diag([1.0, 0.5]), 3.0)
    with pytest.raises(PreconditionViolated):
        segment_norming_check(D, [1, 0], [0, 1], [0.0, 1.0])  # y not norming
    I4 = _op(np.eye(2), 4.0)
    with pytest.raises(PreconditionViolated):
        segment_norming_check(I4, [1, 0], [0, 1], [0.0])  # p != 3
    I = _op(np.eye(2), 3.0)
    with pytest.raises(PreconditionViolated):
        segment_norming_check(I, [1, 0], [0, 1], [-1.0])  # negative t


def test_p4_symmetry_identity_cases():
    grid = [(s, t) for s in (-2, -1, 0, 1, 2) for t in (-2, -1, 0.5, 1, 2)]
    I = _op(np.eye(2), 4.0)
    assert p4_symmetry_gap(I, [1, 0], [0, 1], grid) <= 1e-13
    D = _op(np.diag([1.0, 1.0, 0.6]), 4.0)
    assert p4_symmetry_gap(D, [1, 0, 0], [0, 1, 0], grid) <= 1e-13


def test_block_leakage_zero_extension():
    z = np.array([0.6, -0.8])
    z /= lp_norm(z, 3.0)
    v = np.array([0.9, 0.7])
    v /= lp_norm(v, 3.0)
    B = np.outer(v, psi(z, 3.0))
    T = np.zeros((4, 4))
    T[:2, :2] = B
    lhs, bound = block_leakage_probe(_op(B, 3.0), _op(T, 3.0), 0.05)
    assert lhs <= 1e-18
    assert bound > 0.0


def test_block_leakage_bound_shrinks_with_delta():
    z = np.array([0.6, -0.8])
    z /= lp_norm(z, 3.0)
    v = np.array([0.9, 0.7])
    v /= lp_norm(v, 3.0)
    B = np.outer(v, psi(z, 3.0))
    T = np.zeros((4, 4))
    T[:2, :2] = B
    bounds = []
    for delta in (0.2, 0.05, 0.01):
        _, bound = block_leakage_probe(_op(B, 3.0), _op(T, 3.0), delta)
        bounds.append(bound)
    assert bounds[0] > bounds[1] > bounds[2] > 0.0
