"""ARX(p,q) model container and causality analysis of the input polynomial.

The model is ``A(R) X_{n+1} = B(R) U_n + eps_{n+1}`` with
``A(z) = I - A_1 z - ... - A_p z^p`` and ``B(z) = I + B_1 z + ... + B_q z^q``,
all coefficients square of order ``d``.  The adaptive-control analysis
requires ``B`` to be causal: every zero of ``det(B(z))`` strictly outside the
unit circle.  Causality is decided through the spectral radius of the block
companion matrix of ``B``, whose eigenvalues are the reciprocals of those
zeros; the same radius drives the truncation order of the inverse power
series downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = ["ArxModel", "companion_of_B", "is_causal", "CausalityReport"]


def _as_square(mat, d, name):
    arr = np.asarray(mat, dtype=float)
    if arr.shape != (d, d):
        raise ConfigError(f"{name}: expected a {d}x{d} matrix, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ConfigError(f"{name}: non-finite entries")
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


def _check_spd(mat, name):
    if not np.allclose(mat, mat.T, rtol=1e-10, atol=1e-12):
        raise ConfigError(f"{name}: covariance must be symmetric")
    eigs = np.linalg.eigvalsh(mat)
    if eigs.min() <= 0.0:
        raise ConfigError(
            f"{name}: covariance must be positive definite "
            f"(smallest eigenvalue {eigs.min():.3g})"
        )


@dataclass(frozen=True)
class ArxModel:
    """Immutable ARX(p,q) system of output dimension ``d``.

    ``A_coeffs`` holds A_1..A_p, ``B_coeffs`` holds B_1..B_q; ``Gamma`` and
    ``Delta`` are the SPD covariances of the driven noise and of the
    exogenous excitation.  All arrays are defensively copied and frozen.
    """

    d: int
    p: int
    q: int
    A_coeffs: tuple = field(repr=False)
    B_coeffs: tuple = field(repr=False)
    Gamma: np.ndarray = field(repr=False)
    Delta: np.ndarray = field(repr=False)

    def __post_init__(self):
        for name, val in (("d", self.d), ("p", self.p), ("q", self.q)):
            if not isinstance(val, (int, np.integer)) or val < 1:
                raise ConfigError(f"{name}: must be a positive integer, got {val!r}")
        if len(self.A_coeffs) != self.p:
            raise ConfigError(f"A_coeffs: expected {self.p} matrices, got {len(self.A_coeffs)}")
        if len(self.B_coeffs) != self.q:
            raise ConfigError(f"B_coeffs: expected {self.q} matrices, got {len(self.B_coeffs)}")
        A = tuple(_as_square(m, self.d, f"A{i + 1}") for i, m in enumerate(self.A_coeffs))
        B = tuple(_as_square(m, self.d, f"B{j + 1}") for j, m in enumerate(self.B_coeffs))
        G = _as_square(self.Gamma, self.d, "Gamma")
        D = _as_square(self.Delta, self.d, "Delta")
        _check_spd(G, "Gamma")
        _check_spd(D, "Delta")
        object.__setattr__(self, "A_coeffs", A)
        object.__setattr__(self, "B_coeffs", B)
        object.__setattr__(self, "Gamma", G)
        object.__setattr__(self, "Delta", D)

    @property
    def delta(self):
        """Regressor dimension d(p+q)."""
        return self.d * (self.p + self.q)

    @property
    def theta(self):
        """True parameter matrix of shape (delta, d); its transpose is the
        block row (A_1, ..., A_p, B_1, ..., B_q)."""
        return np.vstack([m.T for m in self.A_coeffs + self.B_coeffs])


def companion_of_B(model: ArxModel) -> np.ndarray:
    """Block companion matrix generating the tail recursion of the inverse
    series of B(z).

    The top block row is (-B_1^t, ..., -B_q^t) and the subdiagonal carries
    identity blocks, so the stacked transposed coefficients obey
    ``s_{k+1} = C s_k`` for k > q.  The nonzero eigenvalues of C are exactly
    the reciprocals of the zeros of det(B(z)), padded with zeros when the
    determinant has degree below dq.
    """
    d, q = model.d, model.q
    C = np.zeros((d * q, d * q))
    for j, Bj in enumerate(model.B_coeffs):
        C[:d, j * d : (j + 1) * d] = -Bj.T
    if q > 1:
        idx = np.arange(d * (q - 1))
        C[d + idx, idx] = 1.0
    return C


@dataclass(frozen=True)
class CausalityReport:
    causal: bool
    spectral_radius: float


def is_causal(model: ArxModel, margin: float = 1e-6) -> CausalityReport:
    """Decide causality of B via the companion spectral radius.

    ``causal`` iff the radius is at most ``1 - margin``; the radius itself is
    reported for truncation planning.  The margin guards numerically
    borderline roots.
    """
    if not 0.0 < margin < 1.0:
        raise ConfigError(f"margin: must lie in (0, 1), got {margin}")
    C = companion_of_B(model)
    try:
        eigs = np.linalg.eigvals(C)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - numpy rarely fails here
        raise ArithmeticError(f"eigenvalue computation failed for companion matrix: {exc}")
    rho = float(np.abs(eigs).max()) if eigs.size else 0.0
    return CausalityReport(causal=rho <= 1.0 - margin, spectral_radius=rho)
