"""Independent numerical oracles used by the test suite.

Everything here is deliberately implemented without the package's spectral
machinery: finite differences on periodic grids, trapezoid quadrature, and
small closed forms.  These are the references the library is checked against.
"""

import numpy as np


def fornberg_weights(z, x, m):
    """Finite-difference weights for the m-th derivative at z on nodes x.

    Classic recursion (Fornberg 1988).  Returns shape (m+1, len(x)); row j
    holds the weights of the j-th derivative.
    """
    x = np.asarray(x, dtype=np.float64)
    n = x.size
    c = np.zeros((m + 1, n))
    c1 = 1.0
    c4 = x[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = x[i] - z
        for j in range(i):
            c3 = x[i] - x[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def periodic_fd_derivative(samples, period, m, stencil_half_width=5):
    """m-th derivative of periodic samples by a wide central FD stencil."""
    samples = np.asarray(samples, dtype=np.float64)
    n = samples.size
    h = period / n
    w = stencil_half_width
    offs = np.arange(-w, w + 1)
    weights = fornberg_weights(0.0, offs * h, m)[m]
    out = np.zeros(n)
    for o, c in zip(offs, weights):
        out += c * np.roll(samples, -o)
    return out


def periodic_quadrature(samples, period):
    """Integral over one period; trapezoid rule == uniform sum on a torus."""
    samples = np.asarray(samples, dtype=np.float64)
    return period * samples.mean()


def quad_inner_product(f_samples, g_samples, period):
    return periodic_quadrature(np.asarray(f_samples) * np.asarray(g_samples), period)
