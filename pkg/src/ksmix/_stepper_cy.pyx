# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled stepping kernels: C twins of _stepper_py with the convective
term as an explicit O(K^2) convolution (alias-free for the retained band)."""

import numpy as np

from libc.math cimport sqrt, isfinite, cos, sin

cdef double C_SQRT2 = 1.4142135623730951


cdef void _square(double complex[::1] c, double complex[::1] sq,
                  double inv_sqrt_L, Py_ssize_t K) noexcept nogil:
    cdef Py_ssize_t m, j, p
    cdef double complex s
    for m in range(1, K + 1):
        s = 0
        for j in range(1, m):
            s = s + c[j - 1] * c[m - j - 1]
        for p in range(1, K - m + 1):
            s = s + 2.0 * c[p - 1].conjugate() * c[m + p - 1]
        sq[m - 1] = s * inv_sqrt_L


cdef void _nonlinear(double complex[::1] c, double complex[::1] out,
                     double complex[::1] sq, double[::1] kq,
                     double inv_sqrt_L, int linear_only, Py_ssize_t K) noexcept nogil:
    cdef Py_ssize_t i
    if linear_only:
        for i in range(K):
            out[i] = 0
        return
    _square(c, sq, inv_sqrt_L, K)
    for i in range(K):
        out[i] = -0.5j * kq[i] * sq[i]


cdef double _shift_rate(double complex[::1] c, double b, double complex[::1] wvec,
                        double q, double L, Py_ssize_t K) noexcept nogil:
    cdef double complex ph0 = cos(q * b) - 1j * sin(q * b)
    cdef double complex ph = 1.0
    cdef double acc = 0.0
    cdef Py_ssize_t i
    for i in range(K):
        ph = ph * ph0
        acc += (c[i] * wvec[i] * ph).real
    return C_SQRT2 / (2.0 * L) * acc


cdef double _heun_b(double complex[::1] c, double b, double dt,
                    double complex[::1] wvec, double q, double L,
                    Py_ssize_t K) noexcept nogil:
    cdef double r1 = _shift_rate(c, b, wvec, q, L, K)
    cdef double r2 = _shift_rate(c, b + dt * r1, wvec, q, L, K)
    return b + 0.5 * dt * (r1 + r2)


cdef void _observe(double complex[::1] c, double b, double[::1] kq,
                   double complex[::1] p2k, double phinorm2, double q,
                   Py_ssize_t K, double* d2_out, double* dev_out) noexcept nogil:
    cdef double normsq = 0.0, d2 = 0.0, cross = 0.0, mag
    cdef double complex ph0 = cos(q * b) - 1j * sin(q * b)
    cdef double complex ph = 1.0
    cdef Py_ssize_t i
    for i in range(K):
        mag = c[i].real * c[i].real + c[i].imag * c[i].imag
        normsq += mag
        d2 += kq[i] * kq[i] * kq[i] * kq[i] * mag
        ph = ph * ph0
        cross += (c[i] * p2k[i].conjugate() * ph).real
    d2_out[0] = 2.0 * d2
    dev_out[0] = phinorm2 + 4.0 * normsq - 4.0 * C_SQRT2 * cross


cdef double _mart_increment(double complex[::1] c, double b,
                            double complex[:, ::1] S, double complex[::1] p2k,
                            double q, double[:, ::1] dW, Py_ssize_t row,
                            Py_ssize_t M, Py_ssize_t K) noexcept nogil:
    cdef double complex ph0 = cos(q * b) + 1j * sin(q * b)
    cdef double complex ph
    cdef double total = 0.0, direct, prof
    cdef Py_ssize_t j, i
    for j in range(M):
        direct = 0.0
        prof = 0.0
        ph = 1.0
        for i in range(K):
            ph = ph * ph0
            direct += (c[i] * S[j, i].conjugate()).real
            prof += (p2k[i] * ph * S[j, i].conjugate()).real
        total += dW[row, j] * (4.0 * direct - 2.0 * C_SQRT2 * prof)
    return 2.0 * total


cdef void _noise(double complex[::1] eta, double[::1] nsc,
                 double complex[:, ::1] S, double[:, ::1] dW, Py_ssize_t row,
                 Py_ssize_t M, Py_ssize_t K) noexcept nogil:
    cdef Py_ssize_t i, j
    for i in range(K):
        eta[i] = 0
    for j in range(M):
        for i in range(K):
            eta[i] = eta[i] + dW[row, j] * S[j, i]
    for i in range(K):
        eta[i] = eta[i] * nsc[i]


cdef int _finite(double complex[::1] c, Py_ssize_t K) noexcept nogil:
    cdef Py_ssize_t i
    for i in range(K):
        if not (isfinite(c[i].real) and isfinite(c[i].imag)):
            return 0
    return 1


cdef double _kl_rate(double complex[::1] cu, double complex[::1] cv,
                     double lam, Py_ssize_t n_c, double[:, ::1] Minv,
                     Py_ssize_t M) noexcept nogil:
    cdef Py_ssize_t j, i
    cdef double w, total = 0.0
    cdef double complex d
    if n_c == 0:
        return 0.0
    for j in range(M):
        w = 0.0
        for i in range(n_c):
            d = lam * (cu[i] - cv[i])
            w += Minv[j, i] * C_SQRT2 * d.real + Minv[j, n_c + i] * C_SQRT2 * d.imag
        total += w * w
    return 0.5 * total


def advance_kse(c_arr, dW_arr, args, accum_arr):
    (dt, E_a, phi1_a, phi2_a, nsc_a, S_a, p2k_a, wvec_a, kq_a, inv_sqrt_L, L,
     phinorm2, etdrk2, linear_only, lam, n_c, Minv_a) = args
    cdef double complex[::1] c = c_arr
    cdef double[:, ::1] dW = dW_arr
    cdef double[::1] accum = accum_arr
    cdef double[::1] E = E_a
    cdef double[::1] phi1 = phi1_a
    cdef double[::1] phi2 = phi2_a
    cdef double[::1] nsc = nsc_a
    cdef double complex[:, ::1] S = S_a
    cdef double complex[::1] p2k = p2k_a
    cdef double complex[::1] wvec = wvec_a
    cdef double[::1] kq = kq_a
    cdef Py_ssize_t K = c.shape[0]
    cdef Py_ssize_t M = S.shape[0]
    cdef Py_ssize_t n_steps = dW.shape[0]
    cdef double c_dt = dt, c_isl = inv_sqrt_L, c_L = L, c_pn2 = phinorm2
    cdef int c_rk2 = 1 if etdrk2 else 0
    cdef int c_lin = 1 if linear_only else 0
    cdef double q = kq[0] if K > 0 else 1.0

    buf = np.empty((5, max(K, 1)), dtype=np.complex128)
    cdef double complex[::1] sq = buf[0]
    cdef double complex[::1] g0 = buf[1]
    cdef double complex[::1] g1 = buf[2]
    cdef double complex[::1] eta = buf[3]
    cdef double complex[::1] a = buf[4]
    cdef Py_ssize_t step, i
    cdef Py_ssize_t bad = -1
    cdef double b, b_new, d2, dev

    with nogil:
        for step in range(n_steps):
            b = accum[0]
            if M > 0:
                accum[3] += _mart_increment(c, b, S, p2k, q, dW, step, M, K)
                _noise(eta, nsc, S, dW, step, M, K)
            else:
                for i in range(K):
                    eta[i] = 0
            b_new = _heun_b(c, b, c_dt, wvec, q, c_L, K)
            _nonlinear(c, g0, sq, kq, c_isl, c_lin, K)
            if c_rk2:
                for i in range(K):
                    a[i] = E[i] * c[i] + phi1[i] * g0[i]
                _nonlinear(a, g1, sq, kq, c_isl, c_lin, K)
                for i in range(K):
                    c[i] = a[i] + phi2[i] * (g1[i] - g0[i]) + eta[i]
            else:
                for i in range(K):
                    c[i] = E[i] * c[i] + phi1[i] * g0[i] + eta[i]
            if not _finite(c, K):
                bad = step
                break
            _observe(c, b_new, kq, p2k, c_pn2, q, K, &d2, &dev)
            accum[1] += 0.5 * c_dt * (accum[5] + d2)
            accum[2] += 0.5 * c_dt * (accum[6] + dev)
            accum[4] += 0.5 * c_dt * (sqrt(accum[5]) + sqrt(d2))
            accum[0] = b_new
            accum[5] = d2
            accum[6] = dev
    return bad


def advance_coupled(cu_arr, cv_arr, dW_arr, args, accum_arr):
    (dt, E_a, phi1_a, phi2_a, nsc_a, S_a, p2k_a, wvec_a, kq_a, inv_sqrt_L, L,
     phinorm2, etdrk2, linear_only, lam, n_c, Minv_a) = args
    cdef double complex[::1] cu = cu_arr
    cdef double complex[::1] cv = cv_arr
    cdef double[:, ::1] dW = dW_arr
    cdef double[::1] accum = accum_arr
    cdef double[::1] E = E_a
    cdef double[::1] phi1 = phi1_a
    cdef double[::1] phi2 = phi2_a
    cdef double[::1] nsc = nsc_a
    cdef double complex[:, ::1] S = S_a
    cdef double complex[::1] p2k = p2k_a
    cdef double complex[::1] wvec = wvec_a
    cdef double[::1] kq = kq_a
    cdef double[:, ::1] Minv = np.ascontiguousarray(Minv_a, dtype=np.float64)
    cdef Py_ssize_t K = cu.shape[0]
    cdef Py_ssize_t M = S.shape[0]
    cdef Py_ssize_t n_steps = dW.shape[0]
    cdef double c_dt = dt, c_isl = inv_sqrt_L, c_L = L, c_pn2 = phinorm2
    cdef double c_lam = lam
    cdef Py_ssize_t c_nc = n_c
    cdef int c_rk2 = 1 if etdrk2 else 0
    cdef int c_lin = 1 if linear_only else 0
    cdef double q = kq[0] if K > 0 else 1.0

    buf = np.empty((8, max(K, 1)), dtype=np.complex128)
    cdef double complex[::1] sq = buf[0]
    cdef double complex[::1] gu0 = buf[1]
    cdef double complex[::1] gv0 = buf[2]
    cdef double complex[::1] gu1 = buf[3]
    cdef double complex[::1] gv1 = buf[4]
    cdef double complex[::1] eta = buf[5]
    cdef double complex[::1] au = buf[6]
    cdef double complex[::1] av = buf[7]
    cdef Py_ssize_t step, i
    cdef Py_ssize_t bad = -1
    cdef double b, b_new, d2, dev, kl, dsq
    cdef double complex diff

    with nogil:
        for step in range(n_steps):
            b = accum[0]
            if M > 0:
                accum[3] += _mart_increment(cu, b, S, p2k, q, dW, step, M, K)
                _noise(eta, nsc, S, dW, step, M, K)
            else:
                for i in range(K):
                    eta[i] = 0
            b_new = _heun_b(cu, b, c_dt, wvec, q, c_L, K)
            _nonlinear(cu, gu0, sq, kq, c_isl, c_lin, K)
            _nonlinear(cv, gv0, sq, kq, c_isl, c_lin, K)
            for i in range(c_nc):
                gv0[i] = gv0[i] + c_lam * (cu[i] - cv[i])
            if c_rk2:
                for i in range(K):
                    au[i] = E[i] * cu[i] + phi1[i] * gu0[i]
                    av[i] = E[i] * cv[i] + phi1[i] * gv0[i]
                _nonlinear(au, gu1, sq, kq, c_isl, c_lin, K)
                _nonlinear(av, gv1, sq, kq, c_isl, c_lin, K)
                for i in range(c_nc):
                    gv1[i] = gv1[i] + c_lam * (au[i] - av[i])
                for i in range(K):
                    cu[i] = au[i] + phi2[i] * (gu1[i] - gu0[i]) + eta[i]
                    cv[i] = av[i] + phi2[i] * (gv1[i] - gv0[i]) + eta[i]
            else:
                for i in range(K):
                    cu[i] = E[i] * cu[i] + phi1[i] * gu0[i] + eta[i]
                    cv[i] = E[i] * cv[i] + phi1[i] * gv0[i] + eta[i]
            if not (_finite(cu, K) and _finite(cv, K)):
                bad = step
                break
            _observe(cu, b_new, kq, p2k, c_pn2, q, K, &d2, &dev)
            kl = _kl_rate(cu, cv, c_lam, c_nc, Minv, M)
            dsq = 0.0
            for i in range(K):
                diff = cu[i] - cv[i]
                dsq += diff.real * diff.real + diff.imag * diff.imag
            dsq = 2.0 * dsq
            accum[1] += 0.5 * c_dt * (accum[5] + d2)
            accum[2] += 0.5 * c_dt * (accum[6] + dev)
            accum[4] += 0.5 * c_dt * (sqrt(accum[5]) + sqrt(d2))
            accum[7] += 0.5 * c_dt * (accum[9] + kl)
            accum[8] += 0.5 * c_dt * (accum[10] + dsq)
            accum[0] = b_new
            accum[5] = d2
            accum[6] = dev
            accum[9] = kl
            accum[10] = dsq
    return bad
