"""JSON formats for operators, norming sets and construction traces.

Serialization is canonical: sorted keys, fixed separators, floats
rendered through repr. Identical inputs therefore produce byte-identical
output, which the CLI relies on.
"""

import json

import numpy as np

from .core import FiniteOperator
from .construction import ConstructionTrace
from .errors import InvalidInput
from .norming import NormingSet

TRACE_VERSION = 1


def canonical_dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, separators=(",", ": ")) + "\n"


def operator_to_dict(S: FiniteOperator) -> dict:
    return {
        "rows": int(S.rows),
        "cols": int(S.cols),
        "p": float(S.p),
        "data": [float(v) for v in S.entries.reshape(-1)],
    }


def operator_from_dict(d: dict) -> FiniteOperator:
    try:
        rows = int(d["rows"])
        cols = int(d["cols"])
        p = float(d["p"])
        data = d["data"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"matrix object missing or malformed field: {exc}") from exc
    if not isinstance(data, list) or len(data) != rows * cols:
        raise InvalidInput(f"data must hold rows*cols = {rows * cols} floats")
    m = np.asarray(data, dtype=np.float64).reshape(rows, cols)
    return FiniteOperator(rows=rows, cols=cols, entries=m, p=p)


def load_operator(path) -> FiniteOperator:
    with open(path, "r", encoding="utf-8") as fh:
        return operator_from_dict(json.load(fh))


def save_operator(S: FiniteOperator, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(canonical_dumps(operator_to_dict(S)))


def special_to_dict(sp) -> dict:
    """Shared-tail operator wire format: the operator plus its witnesses."""
    return {
        "operator": operator_to_dict(sp.op),
        "R": int(sp.R),
        "family": [sorted(int(j) for j in s) for s in sp.family.sets],
        "alphas": [float(a) for a in sp.alphas],
    }


def special_from_dict(d: dict):
    from .special import IntersectingFamily, SpecialOperator

    try:
        op = operator_from_dict(d["operator"])
        R = int(d["R"])
        fam = IntersectingFamily(sets=tuple(frozenset(s) for s in d["family"]), offset=R)
        alphas = tuple(float(a) for a in d["alphas"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInput(f"special-operator object malformed: {exc}") from exc
    return SpecialOperator(op=op, family=fam, alphas=alphas, R=R)


def norming_set_to_dict(ns: NormingSet) -> dict:
    return {
        "op_norm": float(ns.op_norm),
        "members": [[float(v) for v in m] for m in ns.members],
        "residuals": [float(r) for r in ns.residuals],
        "complete_heuristic": bool(ns.complete_heuristic),
    }


def estimate_to_dict(est) -> dict:
    return {
        "value": float(est.value),
        "argmax": [float(v) for v in est.argmax],
        "iterations": int(est.iterations),
        "restarts_used": int(est.restarts_used),
        "converged": bool(est.converged),
        "residual": float(est.residual),
    }


def record_to_dict(rec) -> dict:
    return {
        "eta": float(rec.params.eta),
        "delta_star": float(rec.delta_star),
        "functional_count": int(rec.params.L),
        "functionals": [[float(v) for v in row] for row in rec.params.y],
        "dim_before": int(rec.dim_before),
        "dim_after": int(rec.dim_after),
        "col_error": float(rec.col_error),
        "norming_before": rec.norming_before,
        "norming_after": rec.norming_after,
    }


def trace_to_dict(trace: ConstructionTrace) -> dict:
    return {
        "trace_version": TRACE_VERSION,
        "input": {
            "operator": operator_to_dict(trace.input_operator),
            "n0": int(trace.n0),
            "eps": float(trace.eps),
            "p": float(trace.p),
            "seed": int(trace.seed),
        },
        "seed_operator": operator_to_dict(trace.seed_operator),
        "seed_scale": float(trace.seed_scale),
        "steps": [
            {
                "operator": operator_to_dict(s.operator),
                "record": record_to_dict(s.record),
                "scale_factor": float(s.scale_factor),
            }
            for s in trace.steps
        ],
        "final": operator_to_dict(trace.final) if trace.final is not None else None,
        "final_norming": (
            norming_set_to_dict(trace.final_norming)
            if trace.final_norming is not None
            else None
        ),
        "status": trace.status,
        "detail": trace.detail,
        "final_col_error": float(trace.final_col_error),
        "span_dim": int(trace.span_dim),
    }


def trace_metrics_csv(trace: ConstructionTrace) -> str:
    lines = ["step,span_dim,delta_star,eta,col_error"]
    for i, s in enumerate(trace.steps):
        r = s.record
        lines.append(
            f"{i},{r.dim_after},{r.delta_star!r},{r.params.eta!r},{r.col_error!r}"
        )
    return "\n".join(lines) + "\n"
