"""Seeded verification suites behind `pnormlab verify` and the acceptance tests.

Each suite samples deterministic instances, checks one quantitative law
from the norming-vector machinery, and reports a single pass/fail line
with counts. Instance generators that need exact norming structure use
rank-one blocks u psi_p(x)^T, whose norm is attained exactly at x.
"""

import time
from dataclasses import dataclass, field

import numpy as np

from .core import (
    FiniteOperator,
    _rng,
    batch_quotients,
    kan_gap,
    lp_norm,
    opnorm_estimate,
    opnorm_oracle,
    oracle_resolution,
    psi,
)
from .errors import DegenerateDelta, PNormLabError
from .hilbert import approximation_errors, coisometry_approx, coisometry_defect
from .modification import (
    ModificationParams,
    max_delta,
    maximal_modification,
    modify,
    norm_is_monotone_in_delta,
)
from .norming import (
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
from .special import is_special, special_build
from .construction import construct_full_norming_span, trace_verify
from .tolerances import DEFAULT, Tolerances


@dataclass
class SuiteResult:
    name: str
    passed: bool
    summary: str
    seed: int
    metrics: dict = field(default_factory=dict)
    runtime: float = 0.0

    def line(self) -> str:
        flag = "PASS" if self.passed else "FAIL"
        return f"[{flag}] {self.name}: {self.summary} (seed={self.seed}, {self.runtime:.1f}s)"


def _timed(fn):
    def wrapper(*args, **kwargs):
        t0 = time.perf_counter()
        out = fn(*args, **kwargs)
        out.runtime = time.perf_counter() - t0
        return out

    return wrapper


def hoelder_upper_bound(M: np.ndarray, p: float) -> float:
    """Rigorous upper bound on the p->p norm from column norms."""
    q = p / (p - 1.0)
    cols = np.sum(np.abs(M) ** p, axis=0) ** (1.0 / p)
    return float(np.sum(cols**q) ** (1.0 / q))


def random_contraction(rng, rows: int, cols: int, p: float, margin: float = 0.9) -> FiniteOperator:
    """Gaussian matrix scaled by its column bound: certified ||S|| <= margin."""
    M = rng.standard_normal((rows, cols))
    return FiniteOperator.from_matrix(M * (margin / hoelder_upper_bound(M, p)), p)


def near_unit_contraction(rng, rows: int, cols: int, p: float, seed: int, level: float = 0.95) -> FiniteOperator:
    """Gaussian matrix normalized to estimated norm `level`."""
    M = rng.standard_normal((rows, cols))
    est = opnorm_estimate(FiniteOperator.from_matrix(M, p), restarts=12, seed=seed)
    return FiniteOperator.from_matrix(M / est.value * level, p)


def planted_axis_instance(rng, n: int, m: int, p: float):
    """Unit-norm operator whose norming directions are exactly one axis pair.

    The source splits into a support set carrying a rank-one block
    u psi_p(x)^T (norm 1, attained exactly at x) and a complement block
    of certified norm <= 0.9 mapping into disjoint target rows. Returns
    (S, x, complement_source_indices).
    """
    size_a = int(rng.integers(1, n)) if n > 1 else 1
    perm_src = rng.permutation(n)
    idx_a, idx_ac = perm_src[:size_a], perm_src[size_a:]
    size_b = int(rng.integers(1, m)) if m > 1 else 1
    perm_tgt = rng.permutation(m)
    idx_b, idx_bc = perm_tgt[:size_b], perm_tgt[size_b:]

    xa = rng.standard_normal(size_a)
    xa[np.abs(xa) < 0.2] = 0.3  # keep the support honest
    xa /= lp_norm(xa, p)
    u = rng.standard_normal(size_b)
    u[np.abs(u) < 0.2] = 0.3
    u /= lp_norm(u, p)

    S = np.zeros((m, n))
    S[np.ix_(idx_b, idx_a)] = np.outer(u, psi(xa, p))
    if idx_ac.size and idx_bc.size:
        blk = rng.standard_normal((idx_bc.size, idx_ac.size))
        S[np.ix_(idx_bc, idx_ac)] = blk * (0.9 / hoelder_upper_bound(blk, p))
    x = np.zeros(n)
    x[idx_a] = xa
    return FiniteOperator.from_matrix(S, p), x, idx_ac


@_timed
def suite_kan(seed: int = 0, samples: int = 100_000, ps=(2.5, 3.0, 4.0, 6.0)) -> SuiteResult:
    """Two-term power inequality: gap >= -1e-12 on seeded (u, v) pairs."""
    rng = _rng(seed, 0x6B)
    worst = np.inf
    total = 0
    for p in ps:
        u = rng.standard_normal(samples) * 2.0
        v = rng.standard_normal(samples) * 2.0
        worst = min(worst, float(np.min(kan_gap(u, v, p))))
        total += samples
    passed = worst >= -1e-12
    return SuiteResult(
        "kan", passed, f"min gap {worst:.3e} over {total} samples", seed,
        {"min_gap": worst, "samples": total},
    )


@_timed
def suite_kansupp(seed: int = 0, count: int = 1000, ps=(2.5, 3.0, 4.0), max_dim: int = 4) -> SuiteResult:
    """Disjoint supports transfer through the image at a norming vector."""
    rng = _rng(seed, 0x6C)
    checked = 0
    failures = 0
    while checked < count:
        p = float(rng.choice(ps))
        n = int(rng.integers(2, max_dim + 1))
        m = int(rng.integers(2, max_dim + 1))
        S, x, idx_ac = planted_axis_instance(rng, n, m, p)
        if idx_ac.size == 0:
            continue
        y = np.zeros(n)
        y[idx_ac] = rng.standard_normal(idx_ac.size)
        if lp_norm(y, p) == 0.0:
            continue
        ok = disjoint_support_transfer_check(S, x, y, DEFAULT.supp_tol)
        failures += 0 if ok else 1
        checked += 1
    passed = failures == 0
    return SuiteResult(
        "kansupp", passed, f"{checked - failures}/{checked} instances transferred", seed,
        {"checked": checked, "failures": failures},
    )


@_timed
def suite_special(seed: int = 0, count: int = 100, eps: float = 0.3, max_n0: int = 3) -> SuiteResult:
    """Shared-tail builds: unit norm, column error, pattern, full-support members."""
    rng = _rng(seed, 0x6D)
    bad = []
    worst_norm = 0.0
    for i in range(count):
        n0 = int(rng.integers(0, max_n0 + 1))
        A = random_contraction(rng, n0 + 2, n0 + 1, 3.0)
        sp = special_build(A, n0, eps, seed=seed + i)
        S = sp.op
        value = opnorm_oracle(S, resolution=oracle_resolution(S.cols), seed=seed + i)
        worst_norm = max(worst_norm, abs(value - 1.0))
        if abs(value - 1.0) > DEFAULT.tol_norm:
            bad.append((i, "norm", value))
            continue
        err = max(
            lp_norm(
                S.column(n) - np.concatenate([A.entries[:, n], np.zeros(S.rows - A.rows)]),
                3.0,
            )
            for n in range(n0 + 1)
        )
        if err >= eps:
            bad.append((i, "col_error", err))
            continue
        ok, reason = is_special(S, sp.R, DEFAULT.supp_tol)
        if not ok:
            bad.append((i, "pattern", reason))
            continue
        ns = norming_set(S, budget=max(128, 32 * S.cols), seed=seed + i)
        full = all(
            np.all(np.abs(mem) > DEFAULT.supp_tol) for mem in ns.members
        )
        near = abs(ns.op_norm - value) <= 1e-6
        if not (full and near and len(ns) >= 1):
            bad.append((i, "support", [len(ns), full, near]))
    passed = not bad
    return SuiteResult(
        "special", passed,
        f"{count - len(bad)}/{count} builds clean, worst |norm-1| {worst_norm:.2e}",
        seed, {"count": count, "bad": bad[:5], "worst_norm_gap": worst_norm},
    )


@_timed
def suite_modification(seed: int = 0, count: int = 50) -> SuiteResult:
    """Extension steps on seeded instances: positive maximal strength,
    monotone norm in the strength, persistence, mirrors, span jump."""
    rng = _rng(seed, 0x6E)
    bad = []
    done = 0
    i = 0
    while done < count:
        i += 1
        n0 = int(rng.integers(0, 3))
        A = random_contraction(rng, n0 + 2, n0 + 1, 3.0, margin=0.8)
        try:
            sp = special_build(A, n0, 0.25, seed=seed + i)
            est = opnorm_estimate(sp.op, 16, 1e-13, seed + i)
            S = sp.op.scaled(1.0 / est.value)
            ns = norming_set(S, budget=max(128, 32 * S.cols), seed=seed + i)
            S2, rec = maximal_modification(
                S, ns, n0=n0, eps_step=0.2, seed=seed + i, best_effort=True
            )
        except PNormLabError as exc:
            bad.append((i, type(exc).__name__, str(exc)[:60]))
            done += 1
            continue
        if not rec.delta_star > 1e-8:
            bad.append((i, "delta_star", rec.delta_star))
        elif rec.dim_after < rec.dim_before + 2:
            bad.append((i, "span_jump", (rec.dim_before, rec.dim_after)))
        else:
            grid = [0.0, rec.delta_star / 2, rec.delta_star, 2 * rec.delta_star]
            if not norm_is_monotone_in_delta(
                S, rec.params.y, rec.params.eta, grid, seed=seed + i
            ):
                bad.append((i, "monotone", grid))
        done += 1
    passed = not bad
    return SuiteResult(
        "modification", passed, f"{count - len(bad)}/{count} steps clean", seed,
        {"count": count, "bad": bad[:5]},
    )


@_timed
def suite_sign(seed: int = 0, count: int = 50, t_max: float = 10.0, harvested=None) -> SuiteResult:
    """Rays through sign-compatible norming pairs stay norming at p = 3."""
    rng = _rng(seed, 0x6F)
    t = np.linspace(0.0, t_max, 50)
    worst = 0.0
    checked = 0
    for i in range(count):
        n1 = int(rng.integers(1, 3))
        n2 = int(rng.integers(1, 3))
        m1 = int(rng.integers(1, 3))
        m2 = int(rng.integers(1, 3))
        x1 = rng.standard_normal(n1)
        x1 /= lp_norm(x1, 3.0)
        x2 = rng.standard_normal(n2)
        x2 /= lp_norm(x2, 3.0)
        u1 = rng.standard_normal(m1)
        u1 /= lp_norm(u1, 3.0)
        u2 = rng.standard_normal(m2)
        u2 /= lp_norm(u2, 3.0)
        S = np.zeros((m1 + m2, n1 + n2))
        S[:m1, :n1] = np.outer(u1, psi(x1, 3.0))
        S[m1:, n1:] = np.outer(u2, psi(x2, 3.0))
        Sx = FiniteOperator.from_matrix(S, 3.0)
        x = np.concatenate([x1, np.zeros(n2)])
        y = np.concatenate([np.zeros(n1), x2])
        dev = segment_norming_check(Sx, x, y, t)
        worst = max(worst, dev)
        checked += 1
    extra = 0
    for S, x, y in harvested or []:
        dev = segment_norming_check(S, x, y, t)
        worst = max(worst, dev)
        extra += 1
    passed = worst <= 1e-7
    return SuiteResult(
        "sign", passed,
        f"max ray deviation {worst:.2e} on {checked} built + {extra} harvested pairs",
        seed, {"checked": checked, "harvested": extra, "worst": worst},
    )


def harvest_sign_pairs(seed: int = 0, runs: int = 3):
    """Sign-compatible independent norming pairs from construction traces.

    Under the prefix-support property such pairs should be proportional,
    so this harvest is expected to come back empty; anything found is a
    counterexample candidate worth reporting, and any pair found is fed
    to the ray check rather than silently trusted.
    """
    rng = _rng(seed, 0x74)
    pairs = []
    for i in range(runs):
        n0 = i % 2
        A = near_unit_contraction(rng, n0 + 3, n0 + 1, 3.0, seed + 40 + i)
        trace = construct_full_norming_span(A, n0, 0.2, seed=seed + 40 + i)
        ops = [trace.seed_operator] + [s.operator for s in trace.steps]
        for S in ops:
            ns = norming_set(S, budget=max(128, 32 * S.cols), seed=seed + i)
            for a in range(len(ns)):
                for b in range(a + 1, len(ns)):
                    xa, xb = ns.members[a], ns.members[b]
                    gram = np.linalg.norm(np.outer(xa, xb) - np.outer(xb, xa))
                    if gram > 1e-8 and sign_compatible(S, xa, xb, DEFAULT.supp_tol):
                        pairs.append((S, np.array(xa), np.array(xb)))
    return pairs


def harvest_p4_pairs(seed: int = 0, attempts: int = 12):
    """Mirror pairs of norming directions for p = 4 operators.

    Runs extension steps at p = 4 under the experimental-exponent flag
    and keeps (operator, z, mirror z) triples with a certified pair. The
    strength search may legitimately degenerate at p != 3; such seeds
    are skipped and reported by the caller.
    """
    rng = _rng(seed, 0x70)
    found = []
    tried = []
    for i in range(attempts):
        tried.append(seed + i)
        n0 = int(rng.integers(0, 2))
        try:
            A = random_contraction(rng, n0 + 2, n0 + 1, 4.0, margin=0.8)
            sp = special_build(A, n0, 0.25, seed=seed + i)
            est = opnorm_estimate(sp.op, 16, 1e-13, seed + i)
            S = sp.op.scaled(1.0 / est.value)
            ns = norming_set(S, budget=max(128, 32 * S.cols), seed=seed + i)
            S2, rec = maximal_modification(
                S,
                ns,
                n0=n0,
                eps_step=0.3,
                seed=seed + i,
                allow_non_good_exponent=True,
                best_effort=True,
            )
        except PNormLabError:
            continue
        found_set = rec.norming_after_set
        for z in found_set.members:
            if abs(z[-1]) <= 1e-3:
                continue
            zm = np.array(z)
            zm[-1] = -zm[-1]
            q = lp_norm(S2.apply(z), 4.0) / lp_norm(z, 4.0)
            if q < 1.0 - DEFAULT.tol_norming:
                continue
            # normalize so the pair is norming to machine precision; the
            # mirror has the identical quotient by the sign symmetry
            found.append((S2.scaled(1.0 / q), np.array(z), zm))
            break
    return found, tried


@_timed
def suite_p4(seed: int = 0, attempts: int = 12) -> SuiteResult:
    """The p = 4 gap function factors as c s^2 t^2 through norming pairs."""
    pairs, tried = harvest_p4_pairs(seed, attempts)
    ss, ts = np.meshgrid(np.linspace(-2, 2, 21), np.linspace(-2, 2, 21))
    grid = np.column_stack([ss.reshape(-1), ts.reshape(-1)])
    worst = 0.0
    for S, z, zm in pairs:
        worst = max(worst, p4_symmetry_gap(S, z, zm, grid))
    if not pairs:
        return SuiteResult(
            "p4", True, f"vacuous: no pairs harvested from seeds {tried}", seed,
            {"harvested": 0, "tried": tried, "vacuous": True},
        )
    passed = worst <= 1e-7
    return SuiteResult(
        "p4", passed, f"max identity deviation {worst:.2e} on {len(pairs)} harvested pairs",
        seed, {"harvested": len(pairs), "worst": worst, "vacuous": False},
    )


@_timed
def suite_lemma516(
    seed: int = 0, count: int = 1000, ps=(2.5, 3.0, 4.0), deltas=(0.2, 0.05, 0.01)
) -> SuiteResult:
    """Quantitative off-block leakage bound on seeded near-block contractions."""
    rng = _rng(seed, 0x71)
    bad = 0
    checked = 0
    while checked < count:
        p = float(rng.choice(ps))
        delta = float(rng.choice(deltas))
        mdim = int(rng.integers(2, 5))
        tail = int(rng.integers(1, 4))
        # rank-one block: norming vector z with full-support image v
        z = rng.standard_normal(mdim)
        z /= lp_norm(z, p)
        v = rng.uniform(0.5, 1.0, mdim) * rng.choice([-1.0, 1.0], mdim)
        v /= lp_norm(v, p)
        gamma = float(np.min(np.abs(v)))
        if gamma <= 2.2 * delta:
            continue  # the gamma/2 coordinate bound needs headroom over delta
        B = np.outer(v, psi(z, p))
        K = mdim + tail
        T = np.zeros((K, K))
        rho = delta / 2.0
        E = rng.standard_normal((mdim, mdim))
        E *= (delta / 8.0) / hoelder_upper_bound(E, p)
        T[:mdim, :mdim] = (1.0 - rho) * B + E
        tail_blk = rng.standard_normal((K, tail))
        tail_blk *= (3.0 * delta / 8.0) * 0.9 / hoelder_upper_bound(tail_blk, p)
        T[:, mdim:] = tail_blk
        try:
            lhs, bound = block_leakage_probe(
                FiniteOperator.from_matrix(B, p),
                FiniteOperator.from_matrix(T, p),
                delta,
                seed=seed + checked,
            )
        except PNormLabError:
            continue
        if lhs > bound:
            bad += 1
        checked += 1
    passed = bad == 0
    return SuiteResult(
        "lemma516", passed, f"{checked - bad}/{checked} instances within the bound", seed,
        {"checked": checked, "violations": bad},
    )


@_timed
def suite_trace(
    seed: int = 0, count: int = 20, eps: float = 0.1, n0s=(0, 1, 2), oracle_dims: int = 4
) -> SuiteResult:
    """End-to-end constructions plus independent re-verification."""
    rng = _rng(seed, 0x72)
    rows = []
    harvested_sign = []
    for i in range(count):
        n0 = n0s[i % len(n0s)]
        A = near_unit_contraction(rng, n0 + 3, n0 + 1, 3.0, seed + i)
        try:
            trace = construct_full_norming_span(A, n0, eps, seed=seed + i)
        except PNormLabError as exc:
            rows.append(
                {
                    "trial": i,
                    "n0": n0,
                    "status": type(exc).__name__,
                    "steps": 0,
                    "span_dim": 0,
                    "final_col_error": float("nan"),
                    "step_bound_ok": False,
                    "verified": False,
                    "detail": str(exc)[:70],
                }
            )
            continue
        entry = {
            "trial": i,
            "n0": n0,
            "status": trace.status,
            "steps": len(trace.steps),
            "span_dim": trace.span_dim,
            "final_col_error": trace.final_col_error,
            "step_bound_ok": len(trace.steps) <= n0 + 2,
            "verified": False,
            "detail": trace.detail[:70],
        }
        if trace.success:
            try:
                report = trace_verify(trace, oracle_dims=oracle_dims, seed=seed + 500 + i)
                entry["verified"] = report.passed
                entry["notes"] = list(report.notes)
            except PNormLabError as exc:
                entry["verified"] = False
                entry["detail"] = f"verify: {exc}"[:70]
        rows.append(entry)
    ok = sum(
        1
        for r in rows
        if r["status"] == "success" and r["verified"] and r["step_bound_ok"]
        and r["final_col_error"] < eps
    )
    passed = ok == count
    return SuiteResult(
        "trace", passed, f"{ok}/{count} constructions succeeded and re-verified", seed,
        {"count": count, "ok": ok, "rows": rows},
    )


@_timed
def suite_coisometry(seed: int = 0, count: int = 50, K: int = 32, Ns=(0, 2, 4)) -> SuiteResult:
    """Truncated co-isometry approximants: exact-range defect and monotonicity.

    Test operators are supported on the leading K/2 block so that the
    truncation window genuinely contains the infinite formula's rows.
    """
    rng = _rng(seed, 0x73)
    worst_defect = 0.0
    mono_bad = 0
    for i in range(count):
        half = K // 2
        A = np.zeros((K, K))
        blk = rng.standard_normal((half, half))
        s = np.linalg.svd(blk, compute_uv=False)[0]
        A[:half, :half] = blk / s * rng.uniform(0.6, 1.0)
        errs = []
        for N in Ns:
            T = coisometry_approx(A, N, K)
            worst_defect = max(worst_defect, coisometry_defect(T))
            errs.append(approximation_errors(A, T, 2))
        for j in range(3):
            seq = [e[j] for e in errs]
            if any(b > a + 1e-12 for a, b in zip(seq, seq[1:])):
                mono_bad += 1
    passed = worst_defect <= 1e-10 and mono_bad == 0
    return SuiteResult(
        "coisometry", passed,
        f"worst exact-range defect {worst_defect:.2e}, {mono_bad} monotonicity breaks",
        seed, {"worst_defect": worst_defect, "mono_bad": mono_bad, "count": count},
    )


SUITES = {
    "kan": suite_kan,
    "kansupp": suite_kansupp,
    "sign": suite_sign,
    "p4": suite_p4,
    "lemma516": suite_lemma516,
    "special": suite_special,
    "modification": suite_modification,
    "trace": suite_trace,
    "coisometry": suite_coisometry,
}


def run_suite(name: str, seed: int = 0, **kwargs):
    if name == "all":
        return [SUITES[k](seed=seed) for k in SUITES]
    return [SUITES[name](seed=seed, **kwargs)]
