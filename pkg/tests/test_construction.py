import numpy as np
import pytest

from pnormlab.core import FiniteOperator, opnorm_estimate
from pnormlab.construction import (
    ConstructionTrace,
    construct_full_norming_span,
    extend_report,
    trace_verify,
)
from pnormlab.errors import InvalidInput, TruncationTooSmall
from pnormlab import jsonio
from pnormlab.suites import near_unit_contraction
from pnormlab.core import _rng


def test_construct_zero_input():
    A = FiniteOperator.from_matrix([[0.0]], 3.0)
    trace = construct_full_norming_span(A, 0, 0.5, seed=4)
    assert trace.success
    assert trace.final.cols >= 2
    assert trace.span_dim == trace.final.cols
    assert trace.final_col_error < 0.5
    assert len(trace.steps) <= 2  # N0 + 2


def test_construct_tracks_column_budget():
    rng = _rng(77, 0)
    A = near_unit_contraction(rng, 3, 1, 3.0, seed=77)
    trace = construct_full_norming_span(A, 0, 0.2, seed=7)
    assert trace.success
    for n in range(1):
        ref = np.zeros(trace.final.rows)
        ref[: A.rows] = A.entries[:, n]
        gap = float(np.sum(np.abs(trace.final.column(n) - ref) ** 3) ** (1 / 3))
        assert gap < 0.2
    assert abs(opnorm_estimate(trace.final, 16, 1e-13, 9).value - 1.0) <= 1e-7


def test_construct_determinism():
    rng = _rng(31, 0)
    A = near_unit_contraction(rng, 3, 1, 3.0, seed=31)
    t1 = construct_full_norming_span(A, 0, 0.3, seed=5)
    t2 = construct_full_norming_span(A, 0, 0.3, seed=5)
    assert jsonio.canonical_dumps(jsonio.trace_to_dict(t1)) == jsonio.canonical_dumps(
        jsonio.trace_to_dict(t2)
    )


def test_construct_rejects_expanding_input():
    A = FiniteOperator.from_matrix(np.diag([2.0]), 3.0)
    with pytest.raises(InvalidInput):
        construct_full_norming_span(A, 0, 0.5, seed=0)
    B = FiniteOperator.from_matrix([[0.5]], 3.0)
    with pytest.raises(InvalidInput):
        construct_full_norming_span(B, 0, 1.5, seed=0)


def test_construct_max_steps_guard():
    A = FiniteOperator.from_matrix([[0.0]], 3.0)
    trace = construct_full_norming_span(A, 0, 0.5, seed=4, max_steps=0)
    assert trace.status == "MaxStepsExceeded"


def test_trace_verify_success_trace():
    A = FiniteOperator.from_matrix([[0.0]], 3.0)
    trace = construct_full_norming_span(A, 0, 0.5, seed=4)
    report = trace_verify(trace, oracle_dims=4)
    assert report.passed
    step_checks = report.steps[-1].checks
    for key in (
        "unit_norm",
        "interval_property",
        "old_members_persist",
        "mirror_symmetry",
        "span_jump",
        "disjoint_support_transfer",
    ):
        assert step_checks[key]


def test_trace_verify_localizes_corruption():
    A = FiniteOperator.from_matrix([[0.0]], 3.0)
    trace = construct_full_norming_span(A, 0, 0.5, seed=4)
    bad_steps = []
    for i, s in enumerate(trace.steps):
        corrupted = s.operator.scaled(1.08)
        bad_steps.append(
            type(s)(operator=corrupted, record=s.record, scale_factor=s.scale_factor)
        )
    bad = ConstructionTrace(
        input_operator=trace.input_operator,
        n0=trace.n0,
        eps=trace.eps,
        p=trace.p,
        seed=trace.seed,
        seed_operator=trace.seed_operator,
        seed_scale=trace.seed_scale,
        steps=tuple(bad_steps),
        final=trace.final,
        final_norming=trace.final_norming,
        status=trace.status,
    )
    report = trace_verify(bad, oracle_dims=4)
    assert not report.passed
    assert report.steps[0].passed  # the seed step is untouched
    assert not report.steps[1].checks["unit_norm"]


def test_trace_verify_empty_steps_vacuous():
    A = FiniteOperator.from_matrix([[0.0]], 3.0)
    trace = construct_full_norming_span(A, 0, 0.5, seed=4)
    final = trace.final
    empty = ConstructionTrace(
        input_operator=final,
        n0=0,
        eps=0.5,
        p=3.0,
        seed=0,
        seed_operator=final,
        seed_scale=1.0,
        steps=(),
        final=final,
        final_norming=trace.final_norming,
        status="success",
    )
    report = trace_verify(empty, oracle_dims=4)
    assert report.passed
    assert len(report.steps) == 1
    assert "old_members_persist" not in report.steps[0].checks


def test_extend_report():
    A = FiniteOperator.from_matrix([[0.0]], 3.0)
    trace = construct_full_norming_span(A, 0, 0.5, seed=4)
    S = trace.final
    rep = extend_report(S, K_trunc=S.rows + S.cols + 6)
    assert rep.passed
    assert rep.op_norm <= 1.0 + 1e-7
    assert rep.block_norm == pytest.approx(1.0, abs=1e-7)
    assert rep.shifted_checked >= 1
    with pytest.raises(TruncationTooSmall):
        extend_report(S, K_trunc=S.cols)


def test_trace_json_roundtrip_schema():
    A = FiniteOperator.from_matrix([[0.0]], 3.0)
    trace = construct_full_norming_span(A, 0, 0.5, seed=4)
    d = jsonio.trace_to_dict(trace)
    assert d["trace_version"] == 1
    assert d["status"] == "success"
    assert set(d["input"]) == {"operator", "n0", "eps", "p", "seed"}
    for step in d["steps"]:
        assert {"operator", "record", "scale_factor"} <= set(step)
        assert {"eta", "delta_star", "dim_before", "dim_after", "col_error"} <= set(
            step["record"]
        )
    csv = jsonio.trace_metrics_csv(trace)
    assert csv.splitlines()[0] == "step,span_dim,delta_star,eta,col_error"
    assert len(csv.splitlines()) == 1 + len(trace.steps)
