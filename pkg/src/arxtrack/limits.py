"""Limiting regressor-covariance matrix, its Schur complement and inverse.

Under persistently excited tracking, the normalized design matrix of the
recursive estimator converges to a block matrix

    Lambda = [[L, K^t],
              [K, H ]]

whose blocks are explicit series in the inverse-polynomial coefficients and
the two noise covariances.  This module assembles the blocks, computes the
Schur complement ``S = H - K L^{-1} K^t``, the blockwise inverse and the
determinant factorization, and re-derives S by an independent block-Hankel
series decomposition as a cross-check of the whole pipeline.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .model import ArxModel
from .series import SeriesTable

__all__ = [
    "LimitSet",
    "CrossCheckReport",
    "compute_H",
    "compute_K",
    "compute_L",
    "assemble_lambda",
    "schur_and_invert",
    "schur_from_series_decomposition",
    "cross_check_schur",
    "build_limit_set",
    "smallest_relative_eigenvalue",
]


@dataclass(frozen=True)
class LimitSet:
    """Assembled limit matrices.  ``S``, ``Lambda_inv`` and ``det_Lambda``
    are filled by :func:`schur_and_invert`."""

    d: int
    p: int
    q: int
    H: np.ndarray
    K: np.ndarray
    L: np.ndarray
    Lambda: np.ndarray
    Sigma: np.ndarray
    S: np.ndarray = None
    Lambda_inv: np.ndarray = None
    det_Lambda: float = None


def compute_H(series: SeriesTable, Gamma, Delta, q=None):
    """Symmetric dq x dq block-Toeplitz matrix of limiting input covariances.

    Block (i, j) with j >= i is ``H_{j-i+1}`` where
    ``H_i = sum_{k>=i} P_k Gamma P_{k-i+1}^t + sum_{k>=i-1} Q_k Delta Q_{k-i+1}^t``
    (sums truncated at the table order); blocks below the diagonal are the
    transposes.
    """
    d = series.d
    q = series.q if q is None else q
    P, Q, Kmax = series.P, series.Q, series.Kmax
    Hi = []
    for i in range(1, q + 1):
        acc = np.zeros((d, d))
        for k in range(i, Kmax + 1):
            acc += P[k] @ Gamma @ P[k - i + 1].T
        for k in range(max(i - 1, 0), Kmax + 1):
            if k - i + 1 <= Kmax:
                acc += Q[k] @ Delta @ Q[k - i + 1].T
        Hi.append(acc)
    H = np.zeros((d * q, d * q))
    for r in range(q):
        for c in range(q):
            blk = Hi[c - r] if c >= r else Hi[r - c].T
            H[r * d : (r + 1) * d, c * d : (c + 1) * d] = blk
    return H


def compute_K(series: SeriesTable, Gamma, Delta, p=None, q=None):
    """Rectangular dq x dp matrix of limiting input/output cross-covariances.

    With ``K_i = P_i Gamma + Q_i Delta`` (so K_0 = Delta), block row r holds
    (0, ..., 0, K_0, K_1, ...) shifted right by r-1; when p <= q the rows
    beyond p are zero.
    """
    d = series.d
    p = series.p if p is None else p
    q = series.q if q is None else q
    Ki = [series.P[i] @ Gamma + series.Q[i] @ Delta for i in range(p)]
    K = np.zeros((d * q, d * p))
    for r in range(q):
        for c in range(r, p):
            K[r * d : (r + 1) * d, c * d : (c + 1) * d] = Ki[c - r]
    return K


def compute_L(Gamma, Delta, p):
    """Block-diagonal dp x dp matrix with p copies of Gamma + Delta."""
    return np.kron(np.eye(p), Gamma + Delta)


def assemble_lambda(H, K, L, *, d=None, p=None, q=None, Sigma=None) -> LimitSet:
    """Assemble the symmetric limit matrix from its blocks (S and the inverse
    are left for :func:`schur_and_invert`)."""
    dq, dp = K.shape
    lam = np.block([[L, K.T], [K, H]])
    if d is None:
        d = Sigma.shape[0] if Sigma is not None else 1
    return LimitSet(
        d=d,
        p=p if p is not None else dp // d,
        q=q if q is not None else dq // d,
        H=H,
        K=K,
        L=L,
        Lambda=lam,
        Sigma=Sigma,
    )


def smallest_relative_eigenvalue(M):
    """Smallest eigenvalue of the symmetrized matrix, relative to the largest
    absolute eigenvalue; positive definiteness test per the 1e-10 threshold."""
    eigs = np.linalg.eigvalsh(0.5 * (M + M.T))
    scale = max(abs(eigs[0]), abs(eigs[-1]), 1e-300)
    return eigs[0] / scale


def schur_and_invert(limit: LimitSet) -> LimitSet:
    """Complete a limit set with S = H - K L^{-1} K^t, the blockwise inverse
    and det(Lambda) = det(Gamma + Delta)^p det(S).

    L^{-1} is built from the single d x d block inverse replicated along the
    diagonal.  A numerically singular S raises, which signals violated
    causality or a degenerate excitation covariance.
    """
    H, K, L = limit.H, limit.K, limit.L
    d, p = limit.d, limit.p
    block = L[:d, :d]
    block_inv = np.linalg.inv(block)
    L_inv = np.kron(np.eye(p), block_inv)
    S = H - K @ L_inv @ K.T
    S = 0.5 * (S + S.T)
    if smallest_relative_eigenvalue(S) < 1e-10:
        raise np.linalg.LinAlgError(
            "Schur complement numerically singular: check causality of B and "
            "positive definiteness of the excitation covariance"
        )
    S_inv = np.linalg.inv(S)
    KL = K @ L_inv
    top_left = L_inv + KL.T @ S_inv @ KL
    top_right = -KL.T @ S_inv
    lam_inv = np.block([[top_left, top_right], [top_right.T, S_inv]])
    det_lambda = float(np.linalg.det(block) ** p * np.linalg.det(S))
    return replace(limit, S=S, Lambda_inv=lam_inv, det_Lambda=det_lambda)


def _hankel_blocks(coeffs, d, p, q, ncols):
    """Block matrix with block (r, c) = coeffs[p - r + c] for r in 1..q,
    c in 1..ncols, taking coefficients of negative index as zero."""
    out = np.zeros((d * q, d * ncols))
    for r in range(1, q + 1):
        for c in range(1, ncols + 1):
            idx = p - r + c
            if 0 <= idx < len(coeffs):
                out[(r - 1) * d : r * d, (c - 1) * d : c * d] = coeffs[idx]
    return out


def schur_from_series_decomposition(series: SeriesTable, Gamma, Delta):
    """Independent evaluation of the Schur complement from block-Hankel
    arrays of the series coefficients.

    For p >= q:  S = P A P^t + Q B Q^t + V C V^t, with P/Q the block-Hankel
    arrays of the P/Q coefficients, A/B infinite block diagonals of
    Gamma/Delta, V the upper-triangular block matrix of D coefficients and
    C the block diagonal of Sigma = Delta - Delta (Gamma+Delta)^{-1} Delta.
    For p <= q the V C V^t term is replaced by R = diag(V C V^t, W) with W a
    block diagonal of Delta of order d(q - p).
    """
    d, p, q, Kmax = series.d, series.p, series.q, series.Kmax
    ncols = max(Kmax - p + 1, 1)
    Pmat = _hankel_blocks(series.P, d, p, q, ncols)
    Qmat = _hankel_blocks(series.Q, d, p, q, ncols)
    # block-diagonal weights applied column-block-wise, avoiding the huge kron
    S = np.zeros((d * q, d * q))
    for c in range(ncols):
        Pc = Pmat[:, c * d : (c + 1) * d]
        Qc = Qmat[:, c * d : (c + 1) * d]
        S += Pc @ Gamma @ Pc.T + Qc @ Delta @ Qc.T
    Sigma = Delta - Delta @ np.linalg.inv(Gamma + Delta) @ Delta
    r = min(p, q)
    V = np.zeros((d * q, d * p))
    for row in range(r):
        for col in range(row, p):
            V[row * d : (row + 1) * d, col * d : (col + 1) * d] = series.D[col - row]
    VC = np.zeros((d * q, d * q))
    VC[: d * r, : d * r] = (V @ np.kron(np.eye(p), Sigma) @ V.T)[: d * r, : d * r]
    if q > p:
        VC[d * p :, d * p :] = np.kron(np.eye(q - p), Delta)
    return S + VC, Sigma


@dataclass(frozen=True)
class CrossCheckReport:
    max_discrepancy: float
    tol: float
    passed: bool


def cross_check_schur(model: ArxModel, series: SeriesTable, limit: LimitSet, tol=None):
    """Compare the Schur-complement route against the series decomposition.

    The default tolerance is ``10 * tail_bound`` inflated by the accumulated
    coefficient norms and covariance scales, an explicit bound on the
    truncation error committed by either route.
    """
    S_alt, _ = schur_from_series_decomposition(series, model.Gamma, model.Delta)
    disc = float(np.abs(limit.S - S_alt).max())
    if tol is None:
        norm_sum = sum(
            float(np.linalg.norm(m, 2)) for seq in (series.D, series.P, series.Q) for m in seq
        )
        scale = (1.0 + norm_sum) * max(
            np.linalg.norm(model.Gamma, 2), np.linalg.norm(model.Delta, 2), 1.0
        )
        tol = 10.0 * max(series.tail_bound, np.finfo(float).eps) * max(scale, 1.0)
    return CrossCheckReport(max_discrepancy=disc, tol=float(tol), passed=disc <= tol)


def build_limit_set(model: ArxModel, series: SeriesTable) -> LimitSet:
    """One-call pipeline: H, K, L, Lambda, S, inverse and determinant."""
    H = compute_H(series, model.Gamma, model.Delta)
    K = compute_K(series, model.Gamma, model.Delta)
    L = compute_L(model.Gamma, model.Delta, model.p)
    Sigma = model.Delta - model.Delta @ np.linalg.inv(model.Gamma + model.Delta) @ model.Delta
    partial = assemble_lambda(H, K, L, d=model.d, p=model.p, q=model.q, Sigma=Sigma)
    return schur_and_invert(partial)
