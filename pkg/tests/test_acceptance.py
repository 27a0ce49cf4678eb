"""Acceptance suite: one test per exit criterion, each printing a verdict line.

Run with `pytest tests/test_acceptance.py -v -s` to see the per-criterion
lines. Criteria carry their stated tolerances; none are loosened here.
"""

import json
import time

import numpy as np
import pytest

from pnormlab import jsonio
from pnormlab.cli import main as cli_main
from pnormlab.core import FiniteOperator, opnorm_estimate, opnorm_oracle
from pnormlab.suites import (
    harvest_sign_pairs,
    suite_coisometry,
    suite_kan,
    suite_kansupp,
    suite_lemma516,
    suite_modification,
    suite_p4,
    suite_sign,
    suite_special,
    suite_trace,
)

SEED = 20260810


def _verdict(num, name, passed, summary):
    flag = "PASS" if passed else "FAIL"
    print(f"\nACCEPTANCE {num:2d} [{flag}] {name}: {summary}")
    assert passed, f"criterion {num} ({name}): {summary}"


def test_criterion_01_norm_engine_cross_validation():
    rng = np.random.default_rng(SEED)
    t0 = time.perf_counter()
    agree = 0
    total = 200
    sound = True
    for k in range(total):
        n = 2 if k % 2 == 0 else 3
        p = (1.5, 2.0, 3.0, 4.0)[k % 4]
        S = FiniteOperator.from_matrix(rng.standard_normal((n, n)), p)
        est = opnorm_estimate(S, restarts=12, seed=k)
        oracle = opnorm_oracle(S, 4096 if n == 2 else 192)
        if abs(est.value - oracle) <= 1e-6 * oracle:
            agree += 1
        if est.value > oracle + 1e-9:
            sound = False
    elapsed = time.perf_counter() - t0
    passed = agree >= 0.95 * total and sound and elapsed < 60.0
    _verdict(
        1,
        "norm engine cross-validation",
        passed,
        f"{agree}/{total} within 1e-6, lower-bound sound={sound}, {elapsed:.1f}s",
    )


def test_criterion_02_kan_inequality():
    r = suite_kan(seed=SEED, samples=100_000)
    passed = r.passed and r.runtime < 5.0
    _verdict(2, "two-term power inequality", passed, r.summary + f", {r.runtime:.2f}s")


def test_criterion_03_disjoint_support_transfer():
    r = suite_kansupp(seed=SEED, count=1000)
    _verdict(3, "disjoint-support transfer", r.passed, r.summary)


def test_criterion_04_special_operators():
    r = suite_special(seed=SEED, count=100, eps=0.3, max_n0=3)
    _verdict(4, "shared-tail operator builds", r.passed, r.summary)


def test_criterion_05_modification_steps():
    r = suite_modification(seed=SEED, count=50)
    _verdict(5, "extension steps", r.passed, r.summary)


def test_criterion_06_end_to_end_construction():
    r = suite_trace(seed=SEED, count=20, eps=0.1, n0s=(0, 1, 2))
    for row in r.metrics["rows"]:
        print(
            "   trial {trial:2d} n0={n0}: {status:20s} steps={steps} "
            "span={span_dim} col_err={final_col_error:.4f} verified={verified} {detail}".format(
                **row
            )
        )
    passed = r.passed and r.runtime < 600.0
    _verdict(6, "end-to-end construction", passed, r.summary + f", {r.runtime:.0f}s")


def test_criterion_07_segment_norming():
    harvested = harvest_sign_pairs(seed=SEED, runs=3)
    r = suite_sign(seed=SEED, count=50, harvested=harvested)
    _verdict(7, "rays through sign-compatible pairs", r.passed, r.summary)


def test_criterion_08_p4_identity():
    r = suite_p4(seed=SEED, attempts=12)
    _verdict(8, "p=4 gap-function identity", r.passed, r.summary)


def test_criterion_09_block_leakage_bound():
    r = suite_lemma516(seed=SEED, count=1000)
    _verdict(9, "off-block leakage bound", r.passed, r.summary)


def test_criterion_10_coisometry():
    r = suite_coisometry(seed=SEED, count=50, K=32, Ns=(0, 2, 4))
    _verdict(10, "truncated co-isometry approximants", r.passed, r.summary)


def test_criterion_11_determinism(tmp_path):
    S = FiniteOperator.from_matrix(np.array([[0.4], [0.3], [0.2]]), 3.0)
    src = tmp_path / "input.json"
    jsonio.save_operator(S, src)
    outs = []
    for name in ("one.json", "two.json"):
        out = tmp_path / name
        code = cli_main(
            ["construct", str(src), "--n0", "0", "--eps", "0.4", "--seed", "9",
             "--out", str(out)]
        )
        assert code == 0
        outs.append(out.read_bytes())
    passed = outs[0] == outs[1]
    _verdict(11, "construct determinism", passed, f"{len(outs[0])} bytes, byte-identical={passed}")
