"""Co-isometry approximants of Hilbert-space contractions, truncated.

For a contraction A on l2, the operator A P_N + (I - A P_N (A P_N)*)^(1/2) B^(N+1)
(B the backward shift) is a co-isometry that converges pointwise to A as
N grows. Only a K x K window is materialized here; the co-isometry
identity T T* = I is exact on the first K - (N+1) rows provided the
truncation does not bite, and all assertions restrict there.
"""

from dataclasses import dataclass

import numpy as np

from .errors import NotPSD, PreconditionViolated, TruncationTooSmall


@dataclass(frozen=True)
class TruncatedOperator:
    """K x K window of an operator on l2 whose first rows are exact."""

    entries: np.ndarray
    trunc_dim: int
    exact_rows: int

    def __post_init__(self):
        e = np.ascontiguousarray(self.entries, dtype=np.float64)
        if e.shape != (self.trunc_dim, self.trunc_dim):
            raise ValueError("entries must be trunc_dim x trunc_dim")
        if self.exact_rows > self.trunc_dim:
            raise ValueError("exact_rows cannot exceed trunc_dim")
        e.setflags(write=False)
        object.__setattr__(self, "entries", e)


def psd_sqrt(Mtx, *, sym_tol: float = 1e-10, eig_floor: float = -1e-10) -> np.ndarray:
    """Symmetric PSD square root through the spectral decomposition.

    Eigenvalues in [eig_floor, 0) are clamped to zero (roundoff debris);
    anything lower raises NotPSD, as does an asymmetric input.
    """
    M = np.asarray(Mtx, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise NotPSD("input must be a square matrix")
    if np.max(np.abs(M - M.T)) > sym_tol:
        raise NotPSD("input is not symmetric within tolerance")
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    if np.min(w) < eig_floor:
        raise NotPSD(f"eigenvalue {np.min(w):.3e} below the PSD floor")
    w = np.clip(w, 0.0, None)
    R = (V * np.sqrt(w)) @ V.T
    return 0.5 * (R + R.T)


def backward_shift(K: int, power: int = 1) -> np.ndarray:
    B = np.zeros((K, K))
    for j in range(power, K):
        B[j - power, j] = 1.0
    return B


def coisometry_approx(A, N: int, K: int) -> TruncatedOperator:
    """Assemble the truncated co-isometry approximant of A at cutoff N.

    A must be a K x K contraction in the spectral norm (a slight excess
    up to 1e-7 is renormalized away). The result acts as A on the first
    N+1 basis vectors and shifts everything else forward through the
    defect-space square root.
    """
    A = np.asarray(A, dtype=np.float64)
    if A.shape != (K, K):
        raise PreconditionViolated(f"A must be {K} x {K}")
    if not N + 1 < K:
        raise TruncationTooSmall("need N + 1 < K for a nonempty exact range")
    s = np.linalg.svd(A, compute_uv=False)
    top = float(s[0]) if s.size else 0.0
    if top > 1.0 + 1e-7:
        raise PreconditionViolated(f"||A||_2 = {top} exceeds 1")
    if top > 1.0:
        A = A / top
    AN = A.copy()
    AN[:, N + 1 :] = 0.0
    R = psd_sqrt(np.eye(K) - AN @ AN.T)
    T = AN + R @ backward_shift(K, N + 1)
    return TruncatedOperator(entries=T, trunc_dim=K, exact_rows=K - (N + 1))


def coisometry_defect(T: TruncatedOperator) -> float:
    """Spectral norm of (T T* - I) restricted to the exact range."""
    D = T.entries @ T.entries.T - np.eye(T.trunc_dim)
    ex = T.exact_rows
    if ex <= 0:
        return 0.0
    return float(np.linalg.norm(D[:ex, :ex], ord=2))


def approximation_errors(A, T: TruncatedOperator, up_to: int) -> np.ndarray:
    """||T e_j - A e_j||_2 for j <= up_to (pointwise convergence proxy)."""
    A = np.asarray(A, dtype=np.float64)
    cols = min(up_to + 1, T.trunc_dim)
    return np.linalg.norm(T.entries[:, :cols] - A[:, :cols], axis=0)
