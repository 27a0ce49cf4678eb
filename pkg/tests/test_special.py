import numpy as np
import pytest
from itertools import combinations

from pnormlab.core import FiniteOperator, opnorm_estimate, opnorm_oracle
from pnormlab.errors import CountTooSmall, PreconditionViolated
from pnormlab.norming import norming_set
from pnormlab.special import is_special, pairwise_family, special_build
from pnormlab.suites import random_contraction


def test_pairwise_family_small():
    fam = pairwise_family(3, 0)
    assert [sorted(s) for s in fam.sets] == [[1, 2], [1, 3], [2, 3]]
    fam = pairwise_family(2, 5)
    assert [sorted(s) for s in fam.sets] == [[6], [6]]


def test_pairwise_family_sizes():
    for count in range(2, 13):
        fam = pairwise_family(count, 10)
        assert all(len(s) == count - 1 for s in fam.sets)
        for a, b in combinations(range(count), 2):
            assert len(fam.sets[a] & fam.sets[b]) == 1
        for a, b, c in combinations(range(count), 3):
            assert not (fam.sets[a] & fam.sets[b] & fam.sets[c])
        assert all(min(s) > 10 for s in fam.sets)


def test_pairwise_family_count_too_small():
    with pytest.raises(CountTooSmall):
        pairwise_family(1, 0)


def test_special_build_zero_input():
    A = FiniteOperator.from_matrix([[0.0]], 3.0)
    sp = special_build(A, 0, 0.5, seed=1)
    assert sp.R == 1
    ok, reason = is_special(sp.op, sp.R)
    assert ok, reason
    # checked against the two-variable exhaustive oracle
    assert opnorm_oracle(sp.op, 3000) == pytest.approx(1.0, abs=1e-7)
    err = np.sum(np.abs(sp.op.entries[:1, 0])) + 0.0
    assert float(np.sum(np.abs(sp.op.entries[:, 0]) ** 3) ** (1 / 3)) < 0.5
    ns = norming_set(sp.op, budget=64, seed=2)
    assert all(np.all(np.abs(m) > 1e-7) for m in ns.members)


def test_special_build_random_contractions():
    rng = np.random.default_rng(9)
    for i, (n0, p) in enumerate([(0, 3.0), (1, 3.0), (2, 3.0), (1, 2.5), (1, 4.0)]):
        A = random_contraction(rng, n0 + 2, n0 + 1, p)
        sp = special_build(A, n0, 0.3, seed=i)
        S = sp.op
        est = opnorm_estimate(S, restarts=16, tol=1e-13, seed=i)
        assert est.value == pytest.approx(1.0, abs=1e-7)
        for n in range(n0 + 1):
            ref = np.zeros(S.rows)
            ref[: A.rows] = A.entries[:, n]
            err = float(np.sum(np.abs(S.column(n) - ref) ** p) ** (1 / p))
            assert err < 0.3
        ok, reason = is_special(S, sp.R)
        assert ok, reason
        # every certified norming direction has full support
        ns = norming_set(S, budget=max(128, 32 * S.cols), seed=i)
        assert len(ns) >= 1
        assert all(np.all(np.abs(m) > 1e-7) for m in ns.members)


def test_is_special_rejects_identity():
    ok, reason = is_special(FiniteOperator.from_matrix(np.eye(3), 3.0), 0)
    assert not ok
    assert "empty tail" in reason


def test_is_special_rejects_perturbed_tail():
    # N0 = 1 gives two tail entries per column, so perturbing one breaks
    # the equal-coefficient pattern inside that column
    A = FiniteOperator.from_matrix(np.zeros((2, 2)), 3.0)
    sp = special_build(A, 1, 0.4, seed=3)
    M = np.array(sp.op.entries)
    col = 0
    tail_rows = [r for r in range(sp.R + 1, sp.op.rows) if abs(M[r, col]) > 1e-9]
    assert len(tail_rows) >= 2
    M[tail_rows[0], col] += 1e-3
    ok, reason = is_special(FiniteOperator.from_matrix(M, 3.0), sp.R)
    assert not ok
    assert "unequal" in reason


def test_special_build_preconditions():
    A = FiniteOperator.from_matrix([[0.0]], 3.0)
    with pytest.raises(PreconditionViolated):
        special_build(A, 0, 1.5, seed=0)
    A2 = FiniteOperator.from_matrix([[0.0]], 2.0)
    with pytest.raises(PreconditionViolated):
        special_build(A2, 0, 0.5, seed=0)
