"""Truncated power-series coefficients of the inverse input polynomial.

Three coefficient sequences are produced from an ARX model:

* ``D_k`` -- coefficients of ``B^{-1}(z)``,
* ``P_k`` -- coefficients of ``B^{-1}(z)(A(z) - I)``,
* ``Q_k = D_k + P_k``.

All decay geometrically at the companion spectral radius ``rho`` when B is
causal, so the tables are truncated at an order ``Kmax`` chosen so that the
a-posteriori fitted geometric tail is below a tolerance.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import NonCausalError
from .model import ArxModel, companion_of_B

__all__ = [
    "SeriesTable",
    "truncation_order",
    "compute_D",
    "compute_P",
    "compute_Q",
    "build_series",
    "series_to_csv",
]

DEFAULT_TOL = 1e-12
DEFAULT_SAFETY_CAP = 10_000


def truncation_order(rho, tol, safety_cap=DEFAULT_SAFETY_CAP, *, floor=3, c=1.0):
    """Smallest K with estimated geometric tail ``c * rho**K < tol``.

    ``floor`` is the minimum admissible order (callers pass max(p, q) + 2);
    the result is capped at ``safety_cap`` with a warning.  ``rho >= 1``
    signals a non-causal polynomial and raises.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    if rho < 0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    if rho >= 1.0:
        raise NonCausalError(rho)
    if rho == 0.0 or c <= tol:
        return max(floor, 1)
    K = int(np.ceil(np.log(tol / c) / np.log(rho)))
    # ceil can land exactly on c*rho**K == tol; bump until strictly below
    while c * rho**K >= tol:
        K += 1
    K = max(K, floor)
    if K > safety_cap:
        warnings.warn(
            f"truncation order {K} exceeds safety cap {safety_cap}; "
            f"tail bound will be looser than {tol:g}",
            RuntimeWarning,
        )
        K = safety_cap
    return K


def compute_D(model: ArxModel, Kmax: int):
    """Coefficients D_0..D_Kmax of B^{-1}(z) by the convolution recursion
    D_0 = I, D_k = -sum_{j<k} D_j B_{k-j} (k <= q), -sum_{j<=q} D_{k-j} B_j (k > q)."""
    d, q, B = model.d, model.q, model.B_coeffs
    D = [np.eye(d)]
    for k in range(1, Kmax + 1):
        acc = np.zeros((d, d))
        if k <= q:
            for j in range(k):
                acc -= D[j] @ B[k - j - 1]
        else:
            for j in range(1, q + 1):
                acc -= D[k - j] @ B[j - 1]
        D.append(acc)
    return D


def compute_P(model: ArxModel, D, Kmax: int):
    """Coefficients P_0..P_Kmax of B^{-1}(z)(A(z) - I); P_0 = 0 and
    P_k = -sum_{j<k} D_j A_{k-j} (k <= p), -sum_{j<=p} D_{k-j} A_j (k > p)."""
    d, p, A = model.d, model.p, model.A_coeffs
    P = [np.zeros((d, d))]
    for k in range(1, Kmax + 1):
        acc = np.zeros((d, d))
        if k <= p:
            for j in range(k):
                acc -= D[j] @ A[k - j - 1]
        else:
            for j in range(1, p + 1):
                acc -= D[k - j] @ A[j - 1]
        P.append(acc)
    return P


def compute_Q(D, P):
    """Elementwise sums Q_k = D_k + P_k (Q_0 = I since D_0 = I, P_0 = 0)."""
    if len(D) != len(P):
        raise ValueError(f"length mismatch: {len(D)} D terms vs {len(P)} P terms")
    return [Dk + Pk for Dk, Pk in zip(D, P)]


@dataclass(frozen=True)
class SeriesTable:
    """Truncated coefficient tables with a certified geometric tail bound.

    ``tail_bound`` dominates both the last kept coefficient norms and the
    operator-norm sum of every discarded tail, for each of D, P, Q.
    """

    d: int
    p: int
    q: int
    Kmax: int
    D: tuple
    P: tuple
    Q: tuple
    rho: float
    tail_bound: float


def _opnorm(m):
    return float(np.linalg.norm(m, 2))


def _fit_tail(D, P, rho, Kmax):
    """Fit the decay constant on the computed coefficients and return a bound
    on sum_{k >= Kmax} of the coefficient operator norms."""
    if rho <= 0.0:
        return 0.0
    ks = np.arange(1, Kmax + 1)
    c = 0.0
    for seq in (D, P):
        norms = np.array([_opnorm(seq[k]) for k in ks])
        nz = norms > 0
        if nz.any():
            c = max(c, float(np.max(norms[nz] / rho ** ks[nz])))
    return c * rho**Kmax / (1.0 - rho)


def build_series(model: ArxModel, tol=DEFAULT_TOL, safety_cap=DEFAULT_SAFETY_CAP) -> SeriesTable:
    """Compute D, P, Q truncated so the fitted geometric tail is below ``tol``.

    The decay constant is calibrated on a short prefix of coefficients, the
    order is chosen by :func:`truncation_order`, and the resulting tail bound
    is re-certified a posteriori on the full table (extending the order if
    the certification fails, up to the safety cap).
    """
    rho = float(np.abs(np.linalg.eigvals(companion_of_B(model))).max())
    if rho >= 1.0:
        raise NonCausalError(rho)
    floor = max(model.p, model.q) + 2
    k0 = max(floor, 8)
    D = compute_D(model, k0)
    P = compute_P(model, D, k0)
    if rho > 0.0:
        ks = np.arange(1, k0 + 1)
        c = 1.0
        for seq in (D, P):
            norms = np.array([_opnorm(seq[k]) for k in ks])
            nz = norms > 0
            if nz.any():
                c = max(c, float(np.max(norms[nz] / rho ** ks[nz])))
        Kmax = truncation_order(rho, tol, safety_cap, floor=floor, c=c)
    else:
        Kmax = truncation_order(rho, tol, safety_cap, floor=floor)

    while True:
        D = compute_D(model, Kmax)
        P = compute_P(model, D, Kmax)
        tail = _fit_tail(D, P, rho, Kmax)
        last = max(_opnorm(D[Kmax]), _opnorm(P[Kmax]))
        if rho == 0.0:
            # nilpotent companion: extend until the expansion has terminated
            if last == 0.0 or Kmax >= safety_cap:
                tail = last
                break
            Kmax = min(Kmax + model.d * model.q + 1, safety_cap)
            continue
        if (tail < tol and last <= tail) or Kmax >= safety_cap:
            break
        Kmax = min(max(Kmax + 8, int(Kmax * 1.25)), safety_cap)
    Q = compute_Q(D, P)
    return SeriesTable(
        d=model.d,
        p=model.p,
        q=model.q,
        Kmax=Kmax,
        D=tuple(D),
        P=tuple(P),
        Q=tuple(Q),
        rho=rho,
        tail_bound=max(tail, last) if rho == 0.0 else tail,
    )


def series_to_csv(series: SeriesTable, fh):
    """Write (k, flattened D_k, P_k, Q_k) rows for debugging."""
    d = series.d
    heads = [f"{name}_{i}{j}" for name in ("D", "P", "Q") for i in range(d) for j in range(d)]
    fh.write("k," + ",".join(heads) + "\n")
    for k in range(series.Kmax + 1):
        row = np.concatenate([series.D[k].ravel(), series.P[k].ravel(), series.Q[k].ravel()])
        fh.write(f"{k}," + ",".join(f"{v:.17g}" for v in row) + "\n")
