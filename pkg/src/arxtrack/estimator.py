"""Recursive least-squares / weighted least-squares parameter estimator.

The estimate of the (delta x d) parameter matrix is driven by

    theta_{n+1} = theta_n + a_n S_n(a)^{-1} Phi_n (X_{n+1} - U_n - theta_n^t Phi_n)^t

with design matrix ``S_n(a) = sum_k a_k Phi_k Phi_k^t + I`` (the identity seed
removes any invertibility assumption).  LS uses a_n = 1; WLS uses
``a_n = (1 / log s_n)^(1+gamma)`` with ``s_n`` the cumulative squared
regressor norm, clamped so that a_n <= 1.  The inverse of the design matrix
is maintained by rank-one updates and re-factorized periodically to bound
floating-point drift; a direct accumulation of S is kept alongside for audit.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import EstimatorError

__all__ = ["RecursiveEstimator", "weight_for"]

LS = "ls"
WLS = "wls"


def weight_for(mode, s, gamma):
    """Step weight: 1 for LS, (1/log(max(s, e)))^(1+gamma) for WLS.

    The clamp at e keeps the weight well-defined and <= 1 while s is small;
    asymptotics are unaffected since s grows without bound.
    """
    if mode == LS:
        return 1.0
    return (1.0 / math.log(max(s, math.e))) ** (1.0 + gamma)


class RecursiveEstimator:
    """Single-writer estimator state; distinct instances may be updated
    concurrently.

    Order of operations within one step is fixed: s_n gains ||Phi_n||^2,
    then a_n is computed, then the inverse design matrix absorbs
    a_n Phi_n Phi_n^t, and finally the estimate moves using the updated
    inverse, matching the recursion's use of S_n(a) which already contains
    Phi_n.
    """

    def __init__(self, delta, d, mode=LS, gamma=1.0, theta0=None, resync_every=500):
        if mode not in (LS, WLS):
            raise ValueError(f"mode must be '{LS}' or '{WLS}', got {mode!r}")
        if mode == WLS and gamma <= 0:
            raise ValueError(f"WLS requires gamma > 0, got {gamma}")
        self.delta = int(delta)
        self.d = int(d)
        self.mode = mode
        self.gamma = float(gamma)
        self.resync_every = int(resync_every)
        if theta0 is None:
            self.theta_hat = np.zeros((self.delta, self.d))
        else:
            theta0 = np.asarray(theta0, dtype=float)
            if theta0.shape != (self.delta, self.d):
                raise ValueError(
                    f"theta0: expected shape ({self.delta}, {self.d}), got {theta0.shape}"
                )
            self.theta_hat = theta0.copy()
        self.S_inv = np.eye(self.delta)
        self.S_raw = np.eye(self.delta)
        self.s_n = 0.0
        self.n = 0
        self.last_weight = None
        self._poisoned = False

    def weight(self):
        """Current step weight; assumes s_n already includes ||Phi_n||^2."""
        return weight_for(self.mode, self.s_n, self.gamma)

    def update(self, phi, x_next, u_n):
        """Absorb one observation (Phi_n, X_{n+1}, U_n) and return self."""
        if self._poisoned:
            raise EstimatorError("estimator state is poisoned by an earlier non-finite update")
        phi = np.asarray(phi, dtype=float)
        y = np.asarray(x_next, dtype=float) - np.asarray(u_n, dtype=float)
        if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(y))):
            self._poisoned = True
            raise EstimatorError(f"non-finite estimator inputs at step {self.n}")
        self.s_n += float(phi @ phi)
        a = self.weight()
        self.last_weight = a
        v = self.S_inv @ phi
        denom = 1.0 + a * float(phi @ v)
        self.S_inv -= (a / denom) * np.outer(v, v)
        self.S_raw += a * np.outer(phi, phi)
        resid = y - self.theta_hat.T @ phi
        self.theta_hat += a * np.outer(self.S_inv @ phi, resid)
        self.n += 1
        if self.resync_every and self.n % self.resync_every == 0:
            self.resync()
        return self

    def resync(self):
        """Refresh the maintained inverse from the audited accumulation."""
        self.S_inv = np.linalg.inv(self.S_raw)

    def error_norm(self, theta_true):
        """Squared Frobenius distance of the current estimate to the truth."""
        diff = self.theta_hat - np.asarray(theta_true, dtype=float)
        return float(np.sum(diff * diff))
