"""Norming-direction enumeration and the structural predicates built on it.

A norming vector of S is a nonzero z with ||Sz|| = ||S|| ||z||. For the
operators studied here the unit norming directions form a finite set
(once supports are prefixes of the coordinates), which multistart
maximization can enumerate: every maximizer that reaches the certified
norm within tolerance is clustered, sign-normalized and certified
through the fixed-point membership test.
"""

from dataclasses import dataclass

import numpy as np

from .core import (
    FiniteOperator,
    TAG_NORMING,
    _rng,
    batch_quotients,
    conjugate,
    coordinate_starts,
    is_norming,
    lp_norm,
    opnorm_estimate,
    psi,
    sign_normalize,
    _unitize,
)
from . import _backend
from .errors import (
    DegenerateNormingSet,
    EmptyNormingSet,
    ExponentOutOfRange,
    FullSpan,
    PreconditionViolated,
)
from .tolerances import DEFAULT, Tolerances

NORMING_CLUSTER_CAP = 64


def _newton_refine(entries, p, x0, iters=60, gtol=1e-14):
    """Finish a candidate on the exact fixed-point system.

    Solves S^T psi_p(Sx) = mu psi_p(x), ||x||_p^p = 1 for (x, mu) by a
    damped Newton method. Power iterates stall once the quotient surface
    is flat to within their step tolerance, which happens systematically
    when an operator is within ~1e-11 of one with a norming continuum;
    the Newton solve separates exact stationary directions from such
    stalled near-norming points. Requires p > 2 so the Jacobian terms
    |t|^(p-2) stay bounded at zero coordinates.

    Returns (x, converged).
    """
    x = np.array(x0, dtype=np.float64)
    n = x.size
    nx = lp_norm(x, p)
    if nx == 0.0:
        return x, False
    x /= nx
    y = entries @ x
    mu = float(np.sum(np.abs(y) ** p))

    def residual(x, mu):
        y = entries @ x
        g1 = entries.T @ psi(y, p) - mu * psi(x, p)
        g2 = np.sum(np.abs(x) ** p) - 1.0
        return np.concatenate([g1, [g2]])

    g = residual(x, mu)
    gn = float(np.linalg.norm(g))
    scale = max(1.0, abs(mu))
    if gn <= gtol * scale:
        return x, True
    for _ in range(iters):
        y = entries @ x
        J = np.empty((n + 1, n + 1))
        J[:n, :n] = (p - 1.0) * (
            (entries.T * np.abs(y) ** (p - 2.0)) @ entries
            - mu * np.diag(np.abs(x) ** (p - 2.0))
        )
        J[:n, n] = -psi(x, p)
        J[n, :n] = p * psi(x, p)
        J[n, n] = 0.0
        try:
            step = np.linalg.solve(J, -g)
        except np.linalg.LinAlgError:
            return x, False
        t = 1.0
        for _ in range(12):
            xn = x + t * step[:n]
            mun = mu + t * step[n]
            g_new = residual(xn, mun)
            gn_new = float(np.linalg.norm(g_new))
            if gn_new < gn:
                break
            t *= 0.5
        else:
            return x, False
        x, mu, g, gn = xn, mun, g_new, gn_new
        if gn <= gtol * max(1.0, abs(mu)):
            nx = lp_norm(x, p)
            if nx == 0.0:
                return x, False
            return x / nx, True
    return x, False


@dataclass(frozen=True)
class NormingSet:
    """Deduplicated unit norming directions of one operator.

    members: (k, n) array, one sign-normalized unit direction per row,
    pairwise lp distance above cluster_radius. residuals holds the
    fixed-point residual of each member under S/op_norm.
    complete_heuristic is advisory only: the final quarter of the search
    budget produced no new cluster.
    """

    members: np.ndarray
    residuals: np.ndarray
    op_norm: float
    complete_heuristic: bool
    cluster_radius: float
    p: float

    def __post_init__(self):
        m = np.atleast_2d(np.asarray(self.members, dtype=np.float64))
        m.setflags(write=False)
        object.__setattr__(self, "members", m)
        r = np.asarray(self.residuals, dtype=np.float64)
        r.setflags(write=False)
        object.__setattr__(self, "residuals", r)

    def __len__(self) -> int:
        return self.members.shape[0]


def norming_set(
    S: FiniteOperator,
    budget: int = 256,
    seed: int = 0,
    *,
    tols: Tolerances = DEFAULT,
    cap: int = NORMING_CLUSTER_CAP,
    extra_starts=None,
    norm_restarts: int = 16,
    iter_tol: float = 1e-13,
    maxiter: int = 600,
) -> NormingSet:
    """Enumerate unit norming directions by seeded multistart maximization.

    The operator norm is certified first (opnorm_estimate); maximizers
    whose quotient reaches (1 - tol_norming) of it are kept, clustered at
    cluster_radius after sign normalization, and certified one by one.
    Raises DegenerateNormingSet when the distinct clusters exceed `cap`,
    which signals a continuum of norming directions (an isometry-like
    operator); callers must then treat the span as everything reachable.
    """
    n = S.cols
    if budget < n:
        raise ValueError(f"budget {budget} < cols {n}")
    est = opnorm_estimate(S, restarts=norm_restarts, tol=iter_tol, seed=seed, tols=tols)
    if est.value == 0.0:
        raise DegenerateNormingSet("zero operator: every direction is norming")
    S1 = S.scaled(1.0 / est.value)

    blocks = [coordinate_starts(n)]
    if extra_starts is not None and len(extra_starts) > 0:
        blocks.append(np.column_stack([_unitize(v, S.p) for v in extra_starts]))
    fixed = int(sum(b.shape[1] for b in blocks))
    n_random = max(budget - fixed, 0)
    if n_random:
        R = np.empty((n, n_random))
        for k in range(n_random):
            R[:, k] = _unitize(_rng(seed, TAG_NORMING, k).standard_normal(n), S.p)
        blocks.append(R)
    X0 = np.hstack(blocks)
    total = X0.shape[1]

    values, Xf, _, _, _ = _backend.multi_power_iterate(S1.entries, X0, S.p, iter_tol, maxiter)
    hits = np.flatnonzero(values >= 1.0 - tols.tol_norming)

    # Newton-finish each hit. Power iterates stall wherever the quotient
    # surface is flat to within their step tolerance, which happens
    # systematically when the operator is within ~1e-9 of one with a
    # norming continuum; only candidates that the exact fixed-point solve
    # accepts may enter the set. On a genuine continuum every point is an
    # exact fixed point, so the solve keeps them all and the cluster cap
    # still detects the degeneracy.
    if S.p > 2.0:
        kept = []
        for k in hits:
            xr, ok = _newton_refine(S1.entries, S.p, Xf[:, k])
            if not ok:
                continue
            vr = lp_norm(S1.entries @ xr, S.p)
            if vr < 1.0 - tols.tol_norming:
                continue
            values[k] = vr
            Xf[:, k] = xr
            kept.append(k)
        hits = np.array(kept, dtype=int)

    reps: list[np.ndarray] = []
    created_at: list[int] = []
    cluster_best: list[tuple[float, np.ndarray]] = []
    for k in hits:
        x = sign_normalize(_unitize(Xf[:, k], S.p))
        assigned = False
        for c, r in enumerate(reps):
            if lp_norm(x - r, S.p) <= tols.cluster_radius:
                if values[k] > cluster_best[c][0]:
                    cluster_best[c] = (values[k], x)
                assigned = True
                break
        if not assigned:
            if len(reps) >= cap:
                raise DegenerateNormingSet(
                    f"more than {cap} norming clusters found: continuum suspected",
                    clusters=len(reps) + 1,
                )
            reps.append(x)
            created_at.append(int(k))
            cluster_best.append((values[k], x))

    members = []
    residuals = []
    for _, x in cluster_best:
        ok, res = is_norming(S1, x, tols.tol_norming, tols=tols)
        if ok:
            members.append(x)
            residuals.append(res)
    if members:
        order = sorted(range(len(members)), key=lambda i: tuple(members[i]))
        members = [members[i] for i in order]
        residuals = [residuals[i] for i in order]

    window = total - budget // 4
    complete = bool(created_at) and max(created_at) < window
    return NormingSet(
        members=np.array(members) if members else np.zeros((0, n)),
        residuals=np.array(residuals),
        op_norm=float(est.value),
        complete_heuristic=complete,
        cluster_radius=tols.cluster_radius,
        p=S.p,
    )


def norming_span_dim(ns: NormingSet, rank_tol: float = DEFAULT.rank_tol) -> int:
    """Numerical rank of the member matrix."""
    if len(ns) == 0:
        raise EmptyNormingSet("no members")
    s = np.linalg.svd(ns.members, compute_uv=False)
    return int(np.sum(s > rank_tol * s[0]))


def annihilator_basis(
    ns: NormingSet, n_source: int, rank_tol: float = DEFAULT.rank_tol
) -> np.ndarray:
    """Euclidean-orthonormal functionals vanishing on every member.

    Returns (L, n_source) rows with L = n_source - rank. Raises FullSpan
    when the members already span everything, which callers treat as
    success of the surrounding construction.
    """
    if len(ns) == 0:
        raise EmptyNormingSet("no members")
    if ns.members.shape[1] != n_source:
        raise ValueError("member dimension does not match n_source")
    _, s, vt = np.linalg.svd(ns.members)
    rank = int(np.sum(s > rank_tol * s[0]))
    if rank >= n_source:
        raise FullSpan("norming directions already span the source space")
    basis = vt[rank:]
    gap = float(np.max(np.abs(ns.members @ basis.T)))
    if gap > rank_tol * max(1.0, float(s[0])):
        raise ValueError(f"annihilator defect {gap:.3e} above rank_tol")
    return basis


def support(x, supp_tol: float = DEFAULT.supp_tol) -> np.ndarray:
    return np.flatnonzero(np.abs(np.asarray(x, dtype=np.float64)) > supp_tol)


def _is_prefix(idx: np.ndarray) -> bool:
    return idx.size > 0 and idx[0] == 0 and idx[-1] == idx.size - 1


def interval_property_check(
    S: FiniteOperator, ns: NormingSet, supp_tol: float = DEFAULT.supp_tol
) -> bool:
    """True iff every member's support is a prefix {0, ..., a} of the coordinates."""
    return all(_is_prefix(support(x, supp_tol)) for x in ns.members)


def sign_compatible(
    S: FiniteOperator, x, y, supp_tol: float = DEFAULT.supp_tol
) -> bool:
    """No strictly opposite signs, coordinatewise, for (x, y) and (Sx, Sy)."""
    xv = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    if np.any(xv * yv < -supp_tol):
        return False
    return not np.any((S.apply(xv)) * (S.apply(yv)) < -supp_tol)


def disjoint_support_transfer_check(
    S: FiniteOperator,
    x,
    y,
    supp_tol: float = DEFAULT.supp_tol,
    *,
    tols: Tolerances = DEFAULT,
) -> bool:
    """Whether disjointness of supports transfers through a unit-norm S.

    Preconditions (checked): p > 2, x norming for S, supp(x) and supp(y)
    disjoint. A False return is a genuine counterexample to the
    disjoint-support transfer law, i.e. a test failure, not an error.
    """
    if not S.p > 2.0:
        raise PreconditionViolated(f"requires p > 2, got {S.p}")
    xv = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    if np.intersect1d(support(xv, supp_tol), support(yv, supp_tol)).size:
        raise PreconditionViolated("supp(x) and supp(y) must be disjoint")
    ok, res = is_norming(S, xv, tols.tol_norming, tols=tols)
    if not ok:
        raise PreconditionViolated(f"x is not norming (residual {res:.3e})")
    sx = support(S.apply(xv), supp_tol)
    sy = support(S.apply(yv), supp_tol)
    return np.intersect1d(sx, sy).size == 0


def segment_norming_check(
    S: FiniteOperator,
    x,
    y,
    t_samples,
    *,
    tols: Tolerances = DEFAULT,
) -> float:
    """Max relative gap | ||S(x+ty)||^3 - ||x+ty||^3 | / ||x+ty||^3 over t >= 0.

    At p = 3, two sign-compatible norming vectors force the whole ray
    x + ty, t >= 0 to stay norming, so the returned deviation must
    vanish. Preconditions are checked and raise PreconditionViolated.
    """
    if abs(S.p - 3.0) > 1e-12:
        raise PreconditionViolated(f"requires p = 3, got {S.p}")
    t = np.asarray(t_samples, dtype=np.float64)
    if np.any(t < 0.0):
        raise PreconditionViolated("t samples must be >= 0")
    xv = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    for name, v in (("x", xv), ("y", yv)):
        ok, res = is_norming(S, v, tols.tol_norming, tols=tols)
        if not ok:
            raise PreconditionViolated(f"{name} is not norming (residual {res:.3e})")
    if not sign_compatible(S, xv, yv, tols.supp_tol):
        raise PreconditionViolated("x and y are not sign-compatible")
    X = xv[:, None] + t[None, :] * yv[:, None]
    src = np.sum(np.abs(X) ** 3, axis=0)
    img = np.sum(np.abs(S.entries @ X) ** 3, axis=0)
    return float(np.max(np.abs(img - src) / src))


def p4_symmetry_gap(
    S: FiniteOperator,
    x,
    y,
    grid,
    *,
    tols: Tolerances = DEFAULT,
) -> float:
    """Max |phi(s,t) - c s^2 t^2| over the grid, phi(s,t) = ||sx+ty||^4 - ||S(sx+ty)||^4.

    At p = 4 with x, y norming for a unit-norm S the gap function is
    exactly c s^2 t^2 with c = phi(1,1), so the returned maximum
    deviation must vanish.
    """
    if abs(S.p - 4.0) > 1e-12:
        raise PreconditionViolated(f"requires p = 4, got {S.p}")
    xv = np.asarray(x, dtype=np.float64)
    yv = np.asarray(y, dtype=np.float64)
    for name, v in (("x", xv), ("y", yv)):
        ok, res = is_norming(S, v, tols.tol_norming, tols=tols)
        if not ok:
            raise PreconditionViolated(f"{name} is not norming (residual {res:.3e})")

    def phi(s, t):
        w = s * xv[:, None] + t * yv[:, None]
        return np.sum(w**4, axis=0) - np.sum((S.entries @ w) ** 4, axis=0)

    pts = np.asarray(grid, dtype=np.float64)
    s, t = pts[:, 0], pts[:, 1]
    c = float(phi(np.array([1.0]), np.array([1.0]))[0])
    return float(np.max(np.abs(phi(s, t) - c * s**2 * t**2)))


def block_leakage_probe(
    B: FiniteOperator,
    T: FiniteOperator,
    delta: float,
    *,
    seed: int = 0,
    tols: Tolerances = DEFAULT,
    restarts: int = 12,
) -> tuple[float, float]:
    """Quantitative off-block leakage bound for near-block contractions.

    B is a unit-norm block on E_M whose norming vector has a full-support
    image with smallest coordinate gamma; T is a contraction on a larger
    space agreeing with B on the block up to delta. Returns
    (lhs, bound) with lhs = ||P_M T (I - P_M)||^2 and
    bound = (2/c) (eta/s^2 + s^(p-2)), c = p (gamma/2)^(p-2),
    eta = 1 - (1-delta)^p, s = (2 eta / (p-2))^(1/p). The assertion this
    probe supports is lhs <= bound.
    """
    p = B.p
    if not p > 2.0:
        raise PreconditionViolated(f"requires p > 2, got {p}")
    if T.p != p:
        raise PreconditionViolated("B and T must share the exponent")
    mdim = B.rows
    if B.cols != mdim or T.rows < mdim or T.cols < mdim:
        raise PreconditionViolated("B must be square and T must extend it")
    if not 0.0 < delta < 1.0:
        raise PreconditionViolated("delta must lie in (0, 1)")

    est_b = opnorm_estimate(B, restarts=restarts, seed=seed, tols=tols)
    if abs(est_b.value - 1.0) > tols.tol_norm:
        raise PreconditionViolated(f"||B|| = {est_b.value} is not 1 within tol_norm")
    z = est_b.argmax
    ok, res = is_norming(B, z, tols.tol_norming, tols=tols)
    if not ok:
        raise PreconditionViolated(f"block norming vector not certified ({res:.3e})")
    bz = B.apply(z)
    gamma = float(np.min(np.abs(bz)))
    if gamma <= tols.supp_tol:
        raise PreconditionViolated("block norming vector image must have full support")

    on_block = FiniteOperator.from_matrix(
        T.entries[:mdim, :mdim] - B.entries, p
    )
    diff = opnorm_estimate(on_block, restarts=restarts, seed=seed, tols=tols).value
    if diff >= delta:
        raise PreconditionViolated(f"on-block difference {diff} not below delta={delta}")
    est_t = opnorm_estimate(T, restarts=restarts, seed=seed, tols=tols)
    if est_t.value > 1.0 + tols.tol_norm:
        raise PreconditionViolated(f"||T|| = {est_t.value} exceeds 1")

    off = FiniteOperator.from_matrix(T.entries[:mdim, mdim:], p)
    lhs = opnorm_estimate(off, restarts=restarts, seed=seed, tols=tols).value ** 2

    eta = 1.0 - (1.0 - delta) ** p
    c = p * (gamma / 2.0) ** (p - 2.0)
    if eta == 0.0:
        return float(lhs), 0.0
    s = (2.0 * eta / (p - 2.0)) ** (1.0 / p)
    bound = (2.0 / c) * (eta / s**2 + s ** (p - 2.0))
    return float(lhs), float(bound)
