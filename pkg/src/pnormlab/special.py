"""Shared-tail operator patterns built from pairwise-intersecting set families.

The tail rows of these operators follow the pattern
(I - P_R) S e_n = alpha_n * sum_{j in Lambda_n} e_j where the index sets
Lambda_n intersect pairwise but never three at a time. Any operator of
this shape forces every norming vector to have full support, which is
what makes it the right seed for the span construction.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .core import FiniteOperator, lp_norm, opnorm_estimate
from .errors import (
    AlphaCollapse,
    BisectionFailure,
    CountTooSmall,
    InvalidInput,
    PreconditionViolated,
)
from .tolerances import DEFAULT, Tolerances


@dataclass(frozen=True)
class IntersectingFamily:
    """Finite integer sets, pairwise intersecting but never 3-by-3."""

    sets: tuple
    offset: int

    def __post_init__(self):
        sets = tuple(frozenset(int(j) for j in s) for s in self.sets)
        object.__setattr__(self, "sets", sets)
        for s in sets:
            if any(j <= self.offset for j in s):
                raise ValueError("all elements must exceed the offset")
        for a, b in combinations(range(len(sets)), 2):
            if not sets[a] & sets[b]:
                raise ValueError(f"sets {a} and {b} do not intersect")
        for a, b, c in combinations(range(len(sets)), 3):
            if sets[a] & sets[b] & sets[c]:
                raise ValueError(f"sets {a}, {b}, {c} intersect 3-by-3")

    def __len__(self) -> int:
        return len(self.sets)


def pairwise_family(count: int, R: int) -> IntersectingFamily:
    """The canonical family: one fresh integer per 2-element subset.

    The 2-element subsets {n, n'} of {0, ..., count-1} are enumerated in
    lexicographic order and assigned R+1, R+2, ...; Lambda_n collects the
    integers of all pairs containing n, so |Lambda_n ∩ Lambda_n'| = 1
    exactly and no integer lies in three sets.
    """
    if count < 2:
        raise CountTooSmall(f"need at least 2 sets, got {count}")
    sets = [set() for _ in range(count)]
    k = R
    for a, b in combinations(range(count), 2):
        k += 1
        sets[a].add(k)
        sets[b].add(k)
    return IntersectingFamily(sets=tuple(sets), offset=R)


@dataclass(frozen=True)
class SpecialOperator:
    """A unit-norm operator whose tail rows follow the shared-tail pattern."""

    op: FiniteOperator
    family: IntersectingFamily
    alphas: tuple
    R: int

    def __post_init__(self):
        if any(a == 0.0 for a in self.alphas):
            raise ValueError("tail coefficients must be nonzero")
        ok, reason = is_special(self.op, self.R, DEFAULT.supp_tol)
        if not ok:
            raise ValueError(f"tail pattern violated: {reason}")


def is_special(
    S: FiniteOperator, R: int, supp_tol: float = DEFAULT.supp_tol
) -> tuple[bool, str]:
    """Check the shared-tail pattern by reconstructing it from rows > R.

    Each column must have equal nonzero entries (within 1e-9) on its tail
    support, and the reconstructed index sets must intersect pairwise but
    never 3-by-3. A False return carries the diagnostic reason.
    """
    if R < 0 or R >= S.rows:
        return False, f"offset {R} outside row range"
    tail = S.entries[R + 1 :, :]
    lambdas = []
    for n in range(S.cols):
        idx = np.flatnonzero(np.abs(tail[:, n]) > supp_tol)
        if idx.size == 0:
            return False, f"column {n} has an empty tail"
        vals = tail[idx, n]
        if np.max(vals) - np.min(vals) > 1e-9:
            return False, f"column {n} has unequal tail entries"
        lambdas.append(set((idx + R + 1).tolist()))
    for a, b in combinations(range(S.cols), 2):
        if not lambdas[a] & lambdas[b]:
            return False, f"tail sets {a} and {b} do not intersect"
    for a, b, c in combinations(range(S.cols), 3):
        if lambdas[a] & lambdas[b] & lambdas[c]:
            return False, f"tail sets {a}, {b}, {c} intersect 3-by-3"
    return True, "ok"


def special_build(
    A: FiniteOperator,
    N0: int,
    eps: float,
    seed: int = 0,
    *,
    tols: Tolerances = DEFAULT,
    norm_restarts: int = 12,
    bisect_steps: int = 60,
) -> SpecialOperator:
    """Build a unit-norm shared-tail operator on E_{N0+1} close to A.

    Columns n <= N0 are (1 - eps/2) A e_n plus a uniform tail alpha on
    Lambda_n; the extra column N0+1 is a free tail beta on Lambda_{N0+1}.
    alpha is halved from eps / (2 (N0+1)^(1/p) (N0+1)^(1/q)) until both
    ||S P_{N0}|| < 1 (certified through a triangle/Hoelder upper bound)
    and every column error stays below eps; beta is then bisected to the
    largest value keeping ||S|| <= 1, which is valid because the norm is
    nondecreasing in beta (only the free column grows, and the norm is a
    convex even function of beta).
    """
    if not 0.0 < eps < 1.0:
        raise PreconditionViolated(f"eps must lie in (0,1), got {eps}")
    if not A.p > 2.0:
        raise PreconditionViolated(f"requires p > 2, got {A.p}")
    if A.cols < N0 + 1:
        raise PreconditionViolated(f"A must have at least {N0 + 1} columns")
    p = A.p
    q = p / (p - 1.0)
    est_a = opnorm_estimate(A, restarts=norm_restarts, seed=seed, tols=tols)
    if est_a.value > 1.0 + tols.tol_norm:
        raise InvalidInput(f"||A|| = {est_a.value} exceeds 1")

    R = A.rows
    count = N0 + 2
    family = pairwise_family(count, R)
    npairs = count * (count - 1) // 2
    rows_total = R + 1 + npairs
    head = (1.0 - eps / 2.0) * A.entries[:, : N0 + 1]

    tail_size = N0 + 1  # |Lambda_n| = count - 1
    alpha = eps / (2.0 * tail_size ** (1.0 / p) * tail_size ** (1.0 / q))
    while True:
        # ||S P_N0|| <= (1 - eps/2)||A|| + alpha (N0+1); Hoelder over columns
        norm_ok = (1.0 - eps / 2.0) + alpha * tail_size < 1.0
        col_err_ok = True
        for n in range(N0 + 1):
            err = ((eps / 2.0) ** p * lp_norm(A.entries[:, n], p) ** p
                   + alpha**p * tail_size) ** (1.0 / p)
            if err >= eps:
                col_err_ok = False
                break
        if norm_ok and col_err_ok:
            break
        alpha /= 2.0
        if alpha < 1e-12:
            raise AlphaCollapse("tail coefficient underflow: eps too small")

    def assemble(beta: float) -> FiniteOperator:
        M = np.zeros((rows_total, N0 + 2))
        M[: A.rows, : N0 + 1] = head
        for n in range(N0 + 1):
            for j in family.sets[n]:
                M[j, n] = alpha
        for j in family.sets[N0 + 1]:
            M[j, N0 + 1] = beta
        return FiniteOperator.from_matrix(M, p)

    def norm_at(beta: float) -> float:
        return opnorm_estimate(
            assemble(beta), restarts=norm_restarts, seed=seed, tols=tols
        ).value

    lo, hi = 0.0, 2.0 * (N0 + 1)
    if norm_at(lo) > 1.0:
        raise BisectionFailure("norm already above 1 with a zero free column")
    if norm_at(hi) <= 1.0:
        raise BisectionFailure("bracket top does not exceed norm 1")
    for _ in range(bisect_steps):
        mid = 0.5 * (lo + hi)
        if norm_at(mid) <= 1.0:
            lo = mid
        else:
            hi = mid
    beta = lo

    S = assemble(beta)
    value = opnorm_estimate(S, restarts=norm_restarts, seed=seed, tols=tols).value
    if abs(value - 1.0) > tols.tol_norm:
        raise BisectionFailure(f"final norm {value} not within tol_norm of 1")
    alphas = tuple([alpha] * (N0 + 1) + [beta])
    return SpecialOperator(op=S, family=family, alphas=alphas, R=R)
