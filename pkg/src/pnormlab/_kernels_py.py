"""Pure-python kernels, batched over starts with numpy.

Semantics match the compiled extension: same iteration, same stopping
rule, same certified final value. The batch dimension replaces the C
loop so that the fallback stays within a small factor of the extension.
"""

import numpy as np


def _colnorms(Y, p):
    m = np.max(np.abs(Y), axis=0)
    safe = np.where(m == 0.0, 1.0, m)
    s = np.sum(np.abs(Y / safe) ** p, axis=0)
    return m * s ** (1.0 / p)


def _psi(T, r):
    return np.sign(T) * np.abs(T) ** (r - 1.0)


def multi_power_iterate(A, X, p, tol, maxiter):
    """Run the duality-map power iteration from every column of X.

    Returns (values, Xout, iters, converged, mono_violation); see the
    compiled kernel for the contract.
    """
    A = np.ascontiguousarray(A, dtype=np.float64)
    X = np.array(X, dtype=np.float64, copy=True)
    n, K = X.shape
    q = p / (p - 1.0)

    iters = np.zeros(K, dtype=np.int64)
    conv = np.zeros(K, dtype=bool)
    prev = np.full(K, -1.0)
    active = np.ones(K, dtype=bool)
    viol = 0.0

    for _ in range(maxiter):
        idx = np.flatnonzero(active)
        if idx.size == 0:
            break
        Xa = X[:, idx]
        Y = A @ Xa
        va = _colnorms(Y, p)
        seen = prev[idx] >= 0.0
        if np.any(seen):
            drop = np.max(prev[idx][seen] - va[seen], initial=0.0)
            viol = max(viol, drop)
        prev[idx] = va

        dead = va == 0.0
        Z = A.T @ _psi(Y, p)
        W = _psi(Z, q)
        wn = _colnorms(W, p)
        stuck = (wn == 0.0) & ~dead
        ok = ~dead & ~stuck
        if np.any(ok):
            cols = idx[ok]
            Wn = W[:, ok] / wn[ok]
            move = _colnorms(Wn - X[:, cols], p)
            X[:, cols] = Wn
            iters[cols] += 1
            done = move < tol
            conv[cols[done]] = True
            active[cols[done]] = False
        if np.any(dead):
            conv[idx[dead]] = True
            active[idx[dead]] = False
        if np.any(stuck):
            conv[idx[stuck]] = True
            active[idx[stuck]] = False

    values = _colnorms(A @ X, p)
    return values, X, iters, conv, viol


def power_iterate(A, x0, p, tol, maxiter):
    """Single-start variant of multi_power_iterate."""
    X = np.asarray(x0, dtype=np.float64).reshape(-1, 1)
    values, Xout, iters, conv, viol = multi_power_iterate(A, X, p, tol, maxiter)
    return values[0], Xout[:, 0], int(iters[0]), bool(conv[0]), viol
