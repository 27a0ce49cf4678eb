#!/usr/bin/env python3
"""Compare the compiled power-iteration kernel against the numpy fallback.

The duality-map iteration is invoked tens of thousands of times inside
the strength bisections and gate sweeps, on matrices small enough that
per-call overhead dominates. This script times both backends on the raw
kernel and on a representative end-to-end workload (one gate sweep).

Usage: python3 benchmarks/benchmark_kernels.py
"""

import time

import numpy as np

from pnormlab import _kernels_py

try:
    from pnormlab import _kernels as _kernels_c
except ImportError:
    _kernels_c = None


def time_kernel(mod, A, X, p, repeats):
    t0 = time.perf_counter()
    for _ in range(repeats):
        mod.multi_power_iterate(A, X, p, 1e-12, 300)
    return (time.perf_counter() - t0) / repeats


def bench_raw():
    rng = np.random.default_rng(0)
    print(f"{'shape':>12} {'starts':>6} {'python':>12} {'compiled':>12} {'speedup':>8}")
    for (m, n, K) in [(4, 3, 10), (8, 4, 14), (13, 5, 18), (20, 6, 24), (32, 8, 32)]:
        A = rng.standard_normal((m, n)) * 0.4
        X = rng.standard_normal((n, K))
        X /= np.sum(np.abs(X) ** 3, axis=0) ** (1 / 3)
        repeats = 60
        t_py = time_kernel(_kernels_py, A, X, 3.0, repeats)
        if _kernels_c is None:
            print(f"{m}x{n:>6} {K:>6} {t_py * 1e3:>10.3f}ms {'n/a':>12} {'n/a':>8}")
            continue
        t_c = time_kernel(_kernels_c, A, X, 3.0, repeats)
        vals_c, *_ = _kernels_c.multi_power_iterate(A, X, 3.0, 1e-12, 300)
        vals_p, *_ = _kernels_py.multi_power_iterate(A, X, 3.0, 1e-12, 300)
        assert np.allclose(vals_c, vals_p, rtol=1e-10), "backends disagree"
        print(
            f"{m}x{n:>6} {K:>6} {t_py * 1e3:>10.3f}ms {t_c * 1e3:>10.3f}ms "
            f"{t_py / t_c:>7.1f}x"
        )


def bench_workload():
    import os
    import subprocess
    import sys
    import tempfile
    import textwrap

    code = textwrap.dedent(
        """
        import time
        import numpy as np
        from pnormlab.core import FiniteOperator
        from pnormlab.norming import norming_set
        from pnormlab.modification import maximal_modification
        import pnormlab

        S = FiniteOperator.from_matrix(np.diag([1.0, 0.5]), 3.0)
        ns = norming_set(S, budget=64, seed=0)
        t0 = time.perf_counter()
        maximal_modification(S, ns, n0=1, eps_step=0.05, seed=0, best_effort=True)
        print(f"{pnormlab.backend_name()}: {time.perf_counter() - t0:.2f}s")
        """
    )
    print("\nend-to-end gate sweep (one extension step):", flush=True)
    for backend in ("", "python"):
        env = dict(os.environ, PNORMLAB_BACKEND=backend)
        with tempfile.NamedTemporaryFile("w", suffix=".py", delete=False) as fh:
            fh.write(code)
            path = fh.name
        subprocess.run([sys.executable, path], env=env, check=True)
        os.unlink(path)


if __name__ == "__main__":
    print("raw kernel: duality-map iteration to tol=1e-12 (mean per call)")
    bench_raw()
    bench_workload()
