# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled closed-loop kernel.

Mirrors :func:`arxtrack._loop_py.run_loop` step for step; the whole horizon
runs without the GIL so ensemble workers parallelize across threads.
"""

from libc.math cimport log, pow


cdef double _E = 2.718281828459045235360287471


cdef inline int _invert(double[:, ::1] src, double[:, ::1] aug, double[:, ::1] dst, int n) noexcept nogil:
    """Gauss-Jordan with partial pivoting on the augmented [src | I] scratch."""
    cdef int i, j, k, piv
    cdef double maxv, tmp, f
    for i in range(n):
        for j in range(n):
            aug[i, j] = src[i, j]
            aug[i, n + j] = 1.0 if i == j else 0.0
    for k in range(n):
        piv = k
        maxv = aug[k, k] if aug[k, k] >= 0.0 else -aug[k, k]
        for i in range(k + 1, n):
            tmp = aug[i, k] if aug[i, k] >= 0.0 else -aug[i, k]
            if tmp > maxv:
                maxv = tmp
                piv = i
        if maxv == 0.0:
            return 1
        if piv != k:
            for j in range(2 * n):
                tmp = aug[k, j]
                aug[k, j] = aug[piv, j]
                aug[piv, j] = tmp
        f = aug[k, k]
        for j in range(2 * n):
            aug[k, j] /= f
        for i in range(n):
            if i != k:
                f = aug[i, k]
                if f != 0.0:
                    for j in range(2 * n):
                        aug[i, j] -= f * aug[k, j]
    for i in range(n):
        for j in range(n):
            dst[i, j] = aug[i, n + j]
    return 0


def run_loop(
    double[:, ::1] theta,
    double[:, ::1] theta_hat,
    double[:, ::1] eps,
    double[:, ::1] xi,
    double[:, ::1] xref,
    double[::1] phi,
    double[:, ::1] S_inv,
    double[:, ::1] S_raw,
    double[::1] scal,
    double[:, ::1] C_mean,
    double[:, ::1] D_mean,
    double[:, ::1] G_mean,
    int p,
    int q,
    int weight_mode,
    double gamma,
    int resync_every,
    int freeze,
    double blowup,
    long long[::1] rec_steps,
    long long[::1] snap_steps,
    double[:, ::1] out_X,
    double[:, ::1] out_U,
    double[:, ::1] out_x,
    double[:, ::1] out_phi,
    double[:, ::1] out_pi,
    double[:, :, ::1] out_C,
    double[:, :, ::1] out_Dn,
    double[:, :, ::1] out_Gn,
    double[::1] out_err2,
    double[::1] out_s,
    double[::1] out_a,
    double[:, :, ::1] out_theta,
    double[:, :, ::1] snap_S,
    double[:, ::1] scratch_d,
    double[:, ::1] scratch_delta,
    double[:, ::1] gj_aug,
):
    cdef Py_ssize_t N = eps.shape[0]
    cdef int d = <int> eps.shape[1]
    cdef int delta = <int> phi.shape[0]
    cdef int dp = d * p
    cdef Py_ssize_t n, ri = 0, si = 0
    cdef Py_ssize_t n_rec = rec_steps.shape[0]
    cdef Py_ssize_t n_snap = snap_steps.shape[0]
    cdef long long abort = -1, k
    cdef int i, j
    cdef double blow2 = blowup * blowup
    cdef double s = scal[0]
    cdef double a, norm2, den, coef, ph, diff, acc, invk
    cdef double[::1] pred = scratch_d[0]
    cdef double[::1] U = scratch_d[1]
    cdef double[::1] Xn = scratch_d[2]
    cdef double[::1] tp = scratch_d[3]
    cdef double[::1] noise = scratch_d[4]
    cdef double[::1] resid = scratch_d[5]
    cdef double[::1] v = scratch_delta[0]
    cdef double[::1] w = scratch_delta[1]

    with nogil:
        for n in range(N):
            for j in range(d):
                pred[j] = 0.0
                tp[j] = 0.0
            for i in range(delta):
                ph = phi[i]
                for j in range(d):
                    pred[j] += theta_hat[i, j] * ph
                    tp[j] += theta[i, j] * ph
            norm2 = 0.0
            for j in range(d):
                U[j] = xref[n, j] - pred[j] + xi[n, j]
                Xn[j] = tp[j] + U[j] + eps[n, j]
                norm2 += Xn[j] * Xn[j]
            if not norm2 <= blow2:
                abort = n + 1
                break
            acc = 0.0
            for i in range(delta):
                acc += phi[i] * phi[i]
            s += acc
            scal[0] = s
            if freeze:
                a = 0.0
            elif weight_mode == 0:
                a = 1.0
            else:
                a = pow(1.0 / log(s if s > _E else _E), 1.0 + gamma)
            if not freeze:
                for i in range(delta):
                    acc = 0.0
                    for j in range(delta):
                        acc += S_inv[i, j] * phi[j]
                    v[i] = acc
                den = 1.0
                for i in range(delta):
                    den += a * phi[i] * v[i]
                coef = a / den
                for i in range(delta):
                    for j in range(delta):
                        S_inv[i, j] -= coef * v[i] * v[j]
                        S_raw[i, j] += a * phi[i] * phi[j]
                for j in range(d):
                    resid[j] = Xn[j] - U[j] - pred[j]
                for i in range(delta):
                    acc = 0.0
                    for j in range(delta):
                        acc += S_inv[i, j] * phi[j]
                    w[i] = acc
                for i in range(delta):
                    for j in range(d):
                        theta_hat[i, j] += a * w[i] * resid[j]
                if resync_every > 0 and (n + 1) % resync_every == 0:
                    if _invert(S_raw, gj_aug, S_inv, delta) != 0:
                        abort = n + 1
                        break
            k = n + 1
            invk = 1.0 / k
            for i in range(d):
                noise[i] = eps[n, i] + xi[n, i]
            for i in range(d):
                for j in range(d):
                    C_mean[i, j] += ((Xn[i] - xref[n, i]) * (Xn[j] - xref[n, j]) - C_mean[i, j]) * invk
                    D_mean[i, j] += (noise[i] * noise[j] - D_mean[i, j]) * invk
                    G_mean[i, j] += (eps[n, i] * eps[n, j] - G_mean[i, j]) * invk
            if ri < n_rec and rec_steps[ri] == k:
                acc = 0.0
                for i in range(delta):
                    for j in range(d):
                        diff = theta_hat[i, j] - theta[i, j]
                        acc += diff * diff
                for j in range(d):
                    out_X[ri, j] = Xn[j]
                    out_U[ri, j] = U[j]
                    out_x[ri, j] = xref[n, j]
                    out_pi[ri, j] = tp[j] - pred[j]
                for i in range(delta):
                    out_phi[ri, i] = phi[i]
                for i in range(d):
                    for j in range(d):
                        out_C[ri, i, j] = C_mean[i, j]
                        out_Dn[ri, i, j] = D_mean[i, j]
                        out_Gn[ri, i, j] = G_mean[i, j]
                out_err2[ri] = acc
                out_s[ri] = s
                out_a[ri] = a
                for i in range(delta):
                    for j in range(d):
                        out_theta[ri, i, j] = theta_hat[i, j]
                ri += 1
            if si < n_snap and snap_steps[si] == k:
                for i in range(delta):
                    for j in range(delta):
                        snap_S[si, i, j] = S_raw[i, j]
                si += 1
            # shift the regressor in place (destinations above sources)
            for i in range(dp - 1, d - 1, -1):
                phi[i] = phi[i - d]
            for i in range(d):
                phi[i] = Xn[i]
            for i in range(delta - 1, dp + d - 1, -1):
                phi[i] = phi[i - d]
            for i in range(d):
                phi[dp + i] = U[i]
    return abort
