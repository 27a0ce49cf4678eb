import numpy as np
import pytest
from hypothesis import given, seed, settings
from hypothesis import strategies as st

from pnormlab.core import (
    FiniteOperator,
    duality_map,
    is_norming,
    kan_gap,
    lp_norm,
    opnorm_estimate,
    opnorm_oracle,
    psi,
)
from pnormlab.errors import (
    DimensionTooLarge,
    ExponentOutOfRange,
    NonFiniteInput,
    OperatorNotUnitNorm,
    ZeroVector,
)

# ground truth frozen from the angular-grid oracle (resolutions 128/192/320 agree)
FROZEN_3X3_P3 = 2.875810704511687
FROZEN_3X3_MATRIX = [
    [-0.7344280746968657, 0.9024216231792002, -0.2632766051403162],
    [0.8439767742615593, 1.7411247440419209, 0.12950329417762993],
    [-0.9256998395355682, -1.788521203526788, 0.8245098623814946],
]
# seeded 2x2 at p = 2: the oracle agrees with the exact top singular value
FROZEN_2X2_MATRIX = [
    [0.127516475752807, 0.6342797210900557],
    [-1.6872338453080904, 0.6037226088952067],
]
FROZEN_2X2_SVD = 1.794793245871973


def test_lp_norm_values():
    assert lp_norm([3, 4], 2) == pytest.approx(5.0, abs=1e-14)
    assert lp_norm([1, 1, 1], 3) == pytest.approx(3 ** (1 / 3), rel=1e-15)
    assert lp_norm([0, 0], 2.5) == 0.0


def test_lp_norm_scaling_robust():
    assert lp_norm([1e200, 1e200], 4) == pytest.approx(1e200 * 2**0.25, rel=1e-14)


def test_lp_norm_errors():
    with pytest.raises(ExponentOutOfRange):
        lp_norm([1.0], 1.0)
    with pytest.raises(NonFiniteInput):
        lp_norm([np.nan], 2.0)


def test_duality_map_values():
    np.testing.assert_allclose(duality_map([1, 0], 3), [1, 0])
    np.testing.assert_allclose(duality_map([1, -1], 3), [1, -1])
    np.testing.assert_allclose(duality_map([2, 0], 3), [4, 0])


@seed(7)
@settings(max_examples=200, deadline=None)
@given(
    st.lists(st.floats(-50, 50), min_size=1, max_size=6),
    st.sampled_from([1.5, 2.0, 3.0, 4.0]),
)
def test_duality_identities(coords, p):
    x = np.asarray(coords)
    j = duality_map(x, p)
    q = p / (p - 1)
    nx = lp_norm(x, p)
    if nx == 0.0:
        assert np.all(j == 0.0)
        return
    assert j @ x == pytest.approx(nx**p, rel=1e-10)
    assert lp_norm(j, q) == pytest.approx(nx ** (p - 1), rel=1e-10)


def test_duality_identities_batch():
    rng = np.random.default_rng(5)
    for p in (1.5, 2.0, 3.0, 4.0):
        X = rng.standard_normal((10_000, 5))
        q = p / (p - 1)
        J = psi(X, p)
        pair = np.sum(J * X, axis=1)
        npx = np.sum(np.abs(X) ** p, axis=1) ** (1 / p)
        nj = np.sum(np.abs(J) ** q, axis=1) ** (1 / q)
        assert np.max(np.abs(pair - npx**p) / npx**p) <= 1e-10
        assert np.max(np.abs(nj - npx ** (p - 1)) / npx ** (p - 1)) <= 1e-10


def test_kan_gap_values():
    assert kan_gap(1, 0, 3) == pytest.approx(0.0, abs=1e-15)
    assert kan_gap(0, 1, 3) == pytest.approx(2.0, rel=1e-15)
    assert kan_gap(1, 1, 4) == pytest.approx(10.0, rel=1e-15)


def test_kan_gap_rejects_small_p():
    with pytest.raises(ExponentOutOfRange):
        kan_gap(1, 1, 2.0)


@seed(11)
@settings(max_examples=300, deadline=None)
@given(
    st.floats(-100, 100),
    st.floats(-100, 100),
    st.sampled_from([2.5, 3.0, 4.0, 6.0]),
)
def test_kan_gap_nonnegative(u, v, p):
    assert kan_gap(u, v, p) >= -1e-9 * max(1.0, abs(u), abs(v)) ** p


def _op(matrix, p):
    return FiniteOperator.from_matrix(np.asarray(matrix, dtype=float), p)


def test_opnorm_identity():
    est = opnorm_estimate(_op(np.eye(4), 3.0), restarts=4, seed=0)
    assert est.value == pytest.approx(1.0, abs=1e-12)
    assert est.converged
    assert lp_norm(est.argmax, 3.0) == pytest.approx(1.0, abs=1e-10)


def test_opnorm_diagonal():
    est = opnorm_estimate(_op(np.diag([0.8, 0.5]), 3.0), restarts=4, seed=1)
    assert est.value == pytest.approx(0.8, abs=1e-12)


@pytest.mark.parametrize("p", [1.5, 2.0, 3.0, 4.0])
def test_opnorm_all_ones(p):
    est = opnorm_estimate(_op(np.ones((2, 2)), p), restarts=4, seed=0)
    assert est.value == pytest.approx(2.0, abs=1e-11)


def test_opnorm_zero_operator():
    est = opnorm_estimate(_op(np.zeros((3, 2)), 3.0), restarts=2, seed=0)
    assert est.value == 0.0
    assert est.converged
    np.testing.assert_allclose(est.argmax, [1.0, 0.0])


def test_opnorm_matches_frozen_oracle():
    S = _op(FROZEN_3X3_MATRIX, 3.0)
    est = opnorm_estimate(S, restarts=12, seed=3)
    assert est.value == pytest.approx(FROZEN_3X3_P3, rel=1e-9)
    assert opnorm_oracle(S, 192) == pytest.approx(FROZEN_3X3_P3, rel=1e-12)


def test_oracle_matches_exact_svd_at_p2():
    S = _op(FROZEN_2X2_MATRIX, 2.0)
    assert opnorm_oracle(S, 4096) == pytest.approx(FROZEN_2X2_SVD, rel=1e-12)
    est = opnorm_estimate(S, restarts=8, seed=0)
    assert est.value == pytest.approx(FROZEN_2X2_SVD, rel=1e-10)


def test_estimate_never_exceeds_oracle():
    rng = np.random.default_rng(17)
    for k in range(20):
        n = 2 if k % 2 == 0 else 3
        p = [1.5, 2.0, 3.0, 4.0][k % 4]
        S = _op(rng.standard_normal((n, n)), p)
        est = opnorm_estimate(S, restarts=12, seed=k)
        res = 4096 if n == 2 else 192
        assert est.value <= opnorm_oracle(S, res) + 1e-9


def test_oracle_trivials():
    assert opnorm_oracle(_op(np.diag([1.0, 0.5]), 3.0), 2000) == pytest.approx(1.0, abs=1e-10)
    assert opnorm_oracle(_op(np.eye(3), 3.0), 64) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(DimensionTooLarge):
        opnorm_oracle(_op(np.zeros((2, 9)) + 1.0, 3.0), 100)


def test_oracle_dense_mode_deterministic():
    S = _op(np.random.default_rng(0).standard_normal((6, 6)), 3.0)
    assert opnorm_oracle(S, 100_000, seed=5) == opnorm_oracle(S, 100_000, seed=5)


def test_is_norming_trivials():
    I = _op(np.eye(3), 3.0)
    ok, res = is_norming(I, [0.2, -0.5, 1.0])
    assert ok and res <= 1e-12
    D = _op(np.diag([1.0, 0.5]), 3.0)
    ok0, _ = is_norming(D, [1.0, 0.0])
    ok1, _ = is_norming(D, [0.0, 1.0])
    assert ok0 and not ok1


def test_is_norming_diag_axis_exactness():
    # unique max diagonal: membership holds exactly on the top axis
    D = _op(np.diag([1.0, 0.7, 0.4]), 3.0)
    for j, expected in [(0, True), (1, False), (2, False)]:
        z = np.zeros(3)
        z[j] = 1.0
        ok, _ = is_norming(D, z)
        assert ok is expected
        ok, _ = is_norming(D, -z)
        assert ok is expected


def test_is_norming_errors():
    D = _op(np.diag([1.0, 0.5]), 3.0)
    with pytest.raises(ZeroVector):
        is_norming(D, [0.0, 0.0])
    big = _op(np.diag([2.0, 0.5]), 3.0)
    with pytest.raises(OperatorNotUnitNorm):
        is_norming(big, [1.0, 0.0])
    with pytest.raises(OperatorNotUnitNorm):
        is_norming(D, [1.0, 0.0], op_norm=0.5)


def test_monotone_ascent_across_seeds():
    # the kernels track the quotient along every iteration; any drop
    # beyond tol_eval would raise MonotoneAscentError here
    rng = np.random.default_rng(23)
    for k in range(40):
        n = int(rng.integers(2, 6))
        m = int(rng.integers(2, 8))
        p = float(rng.choice([1.5, 2.0, 2.5, 3.0, 4.0]))
        S = _op(rng.standard_normal((m, n)), p)
        opnorm_estimate(S, restarts=4, seed=k)


def test_operator_validation():
    with pytest.raises(ExponentOutOfRange):
        _op(np.eye(2), 1.0)
    with pytest.raises(NonFiniteInput):
        _op([[np.inf]], 3.0)
    S = _op(np.eye(2), 3.0)
    with pytest.raises(ValueError):
        S.entries[0, 0] = 5.0
