"""NumPy fallback for the stepping kernels.

Same update rule as the compiled version: exact linear propagation, explicit
convective term via full-spectrum convolution (alias-free for the retained
band), exact-variance noise injection, trapezoid accumulators, left-point
noise pairing.
"""

import numpy as np

SQRT2 = np.sqrt(2.0)


def _conv_square(c, inv_sqrt_L):
    """Coefficients 1..K of the squared field (zero-mean part)."""
    K = c.size
    full = np.concatenate([np.conj(c[::-1]), [0.0 + 0.0j], c])
    conv = np.convolve(full, full)
    return conv[2 * K + 1 : 3 * K + 1] * inv_sqrt_L


def _nonlinear(c, kq, inv_sqrt_L, linear_only):
    if linear_only:
        return np.zeros_like(c)
    return -0.5j * kq * _conv_square(c, inv_sqrt_L)


def _shift_rate(c, b, wvec, kq, L):
    phase = np.exp(-1j * kq * b)
    return (SQRT2 / (2.0 * L)) * float(np.sum((c * wvec * phase).real))


def _heun_b(c, b, dt, wvec, kq, L):
    r1 = _shift_rate(c, b, wvec, kq, L)
    r2 = _shift_rate(c, b + dt * r1, wvec, kq, L)
    return b + 0.5 * dt * (r1 + r2)


def _observe(c, b, kq, p2k, phinorm2):
    mag = c.real**2 + c.imag**2
    normsq = 2.0 * float(mag.sum())
    d2 = 2.0 * float((kq**4 * mag).sum())
    phase = np.exp(-1j * kq * b)
    cross = float(np.sum((c * np.conj(p2k) * phase).real))
    dev = phinorm2 + 2.0 * normsq - 4.0 * SQRT2 * cross
    return d2, dev


def _mart_row(c, b, S, p2k, kq):
    """Per-channel pairing of (field - shifted profile) with the forcing."""
    direct = 4.0 * (S.conj() @ c).real
    phase = np.exp(1j * kq * b)
    prof = 2.0 * SQRT2 * (S.conj() @ (p2k * phase)).real
    return direct - prof


def advance_kse(c, dW, args, accum):
    (dt, E, phi1, phi2, nsc, S, p2k, wvec, kq, inv_sqrt_L, L, phinorm2,
     etdrk2, linear_only, lam, n_c, Minv) = args
    for i in range(dW.shape[0]):
        b = accum[0]
        if S.shape[0]:
            accum[3] += 2.0 * float(dW[i] @ _mart_row(c, b, S, p2k, kq))
            eta = nsc * (dW[i] @ S)
        else:
            eta = 0.0
        g0 = _nonlinear(c, kq, inv_sqrt_L, linear_only)
        if etdrk2:
            a = E * c + phi1 * g0
            g1 = _nonlinear(a, kq, inv_sqrt_L, linear_only)
            c_new = a + phi2 * (g1 - g0) + eta
        else:
            c_new = E * c + phi1 * g0 + eta
        if not np.all(np.isfinite(c_new.view(np.float64))):
            return i
        b_new = _heun_b(c, b, dt, wvec, kq, L)
        d2, dev = _observe(c_new, b_new, kq, p2k, phinorm2)
        accum[1] += 0.5 * dt * (accum[5] + d2)
        accum[2] += 0.5 * dt * (accum[6] + dev)
        accum[4] += 0.5 * dt * (np.sqrt(accum[5]) + np.sqrt(d2))
        accum[0] = b_new
        accum[5] = d2
        accum[6] = dev
        c[:] = c_new
    return -1


def _kl_rate(cu, cv, lam, n_c, Minv):
    if n_c == 0:
        return 0.0
    d = lam * (cu[:n_c] - cv[:n_c])
    vec = np.concatenate([SQRT2 * d.real, SQRT2 * d.imag])
    w = Minv @ vec
    return 0.5 * float(w @ w)


def advance_coupled(cu, cv, dW, args, accum):
    (dt, E, phi1, phi2, nsc, S, p2k, wvec, kq, inv_sqrt_L, L, phinorm2,
     etdrk2, linear_only, lam, n_c, Minv) = args

    def drift_v(cv_stage, cu_stage):
        g = _nonlinear(cv_stage, kq, inv_sqrt_L, linear_only)
        if n_c:
            g = g.copy()
            g[:n_c] += lam * (cu_stage[:n_c] - cv_stage[:n_c])
        return g

    for i in range(dW.shape[0]):
        b = accum[0]
        if S.shape[0]:
            accum[3] += 2.0 * float(dW[i] @ _mart_row(cu, b, S, p2k, kq))
            eta = nsc * (dW[i] @ S)
        else:
            eta = 0.0
        gu0 = _nonlinear(cu, kq, inv_sqrt_L, linear_only)
        gv0 = drift_v(cv, cu)
        if etdrk2:
            au = E * cu + phi1 * gu0
            av = E * cv + phi1 * gv0
            gu1 = _nonlinear(au, kq, inv_sqrt_L, linear_only)
            gv1 = drift_v(av, au)
            cu_new = au + phi2 * (gu1 - gu0) + eta
            cv_new = av + phi2 * (gv1 - gv0) + eta
        else:
            cu_new = E * cu + phi1 * gu0 + eta
            cv_new = E * cv + phi1 * gv0 + eta
        if not (
            np.all(np.isfinite(cu_new.view(np.float64)))
            and np.all(np.isfinite(cv_new.view(np.float64)))
        ):
            return i
        b_new = _heun_b(cu, b, dt, wvec, kq, L)
        d2, dev = _observe(cu_new, b_new, kq, p2k, phinorm2)
        kl = _kl_rate(cu_new, cv_new, lam, n_c, Minv)
        dsq = 2.0 * float(np.sum(np.abs(cu_new - cv_new) ** 2))
        accum[1] += 0.5 * dt * (accum[5] + d2)
        accum[2] += 0.5 * dt * (accum[6] + dev)
        accum[4] += 0.5 * dt * (np.sqrt(accum[5]) + np.sqrt(d2))
        accum[7] += 0.5 * dt * (accum[9] + kl)
        accum[8] += 0.5 * dt * (accum[10] + dsq)
        accum[0] = b_new
        accum[5] = d2
        accum[6] = dev
        accum[9] = kl
        accum[10] = dsq
        cu[:] = cu_new
        cv[:] = cv_new
    return -1
