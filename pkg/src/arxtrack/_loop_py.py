"""Pure-numpy closed-loop kernel: reference backend for the simulator.

Same call contract as the compiled kernel in ``_loop_cy``; the compiled
module is preferred at import time by :mod:`arxtrack._backend`.  Keeping the
two implementations step-for-step parallel is what the backend parity test
checks.
"""

import math

import numpy as np


def run_loop(
    theta,
    theta_hat,
    eps,
    xi,
    xref,
    phi,
    S_inv,
    S_raw,
    scal,
    C_mean,
    D_mean,
    G_mean,
    p,
    q,
    weight_mode,
    gamma,
    resync_every,
    freeze,
    blowup,
    rec_steps,
    snap_steps,
    out_X,
    out_U,
    out_x,
    out_phi,
    out_pi,
    out_C,
    out_Dn,
    out_Gn,
    out_err2,
    out_s,
    out_a,
    out_theta,
    snap_S,
):
    N, d = eps.shape
    dp = d * p
    ri = 0
    si = 0
    n_rec = rec_steps.shape[0]
    n_snap = snap_steps.shape[0]
    blow2 = blowup * blowup
    for n in range(N):
        e = eps[n]
        x = xi[n]
        xr = xref[n]
        pred = theta_hat.T @ phi
        U = xr - pred + x
        tp = theta.T @ phi
        Xn = tp + U + e
        norm2 = float(Xn @ Xn)
        if not norm2 <= blow2:
            return n + 1
        pi = tp - pred
        s = scal[0] + float(phi @ phi)
        scal[0] = s
        if freeze:
            a = 0.0
        elif weight_mode == 0:
            a = 1.0
        else:
            a = (1.0 / math.log(max(s, math.e))) ** (1.0 + gamma)
        if not freeze:
            v = S_inv @ phi
            denom = 1.0 + a * float(phi @ v)
            S_inv -= (a / denom) * np.outer(v, v)
            S_raw += a * np.outer(phi, phi)
            resid = Xn - U - pred
            theta_hat += a * np.outer(S_inv @ phi, resid)
            if resync_every and (n + 1) % resync_every == 0:
                S_inv[:, :] = np.linalg.inv(S_raw)
        k = n + 1
        ev = Xn - xr
        C_mean += (np.outer(ev, ev) - C_mean) / k
        noise = e + x
        D_mean += (np.outer(noise, noise) - D_mean) / k
        G_mean += (np.outer(e, e) - G_mean) / k
        if ri < n_rec and rec_steps[ri] == k:
            out_X[ri] = Xn
            out_U[ri] = U
            out_x[ri] = xr
            out_phi[ri] = phi
            out_pi[ri] = pi
            out_C[ri] = C_mean
            out_Dn[ri] = D_mean
            out_Gn[ri] = G_mean
            diff = theta_hat - theta
            out_err2[ri] = float(np.sum(diff * diff))
            out_s[ri] = s
            out_a[ri] = a
            out_theta[ri] = theta_hat
            ri += 1
        if si < n_snap and snap_steps[si] == k:
            snap_S[si] = S_raw
            si += 1
        # shift the regressor: newest output/input enter at the block heads
        if p > 1:
            phi[d:dp] = phi[: dp - d].copy()
        phi[:d] = Xn
        if q > 1:
            phi[dp + d :] = phi[dp : dp + d * (q - 1)].copy()
        phi[dp : dp + d] = U
    return -1
