"""Fourier representation of real, zero-mean periodic fields on a 1D torus.

A field is stored as the half spectrum ``c[k]`` for wavenumber indices
``k = 1 .. K``; the ``k = 0`` coefficient is never stored (zero mean) and
negative modes follow from conjugate symmetry, so reality and vanishing
integral hold by construction.  With period ``P`` and ``q = 2*pi/P`` the
function represented is::

    u(x) = (1/sqrt(P)) * sum_{k != 0} c_k exp(i k q x),    c_{-k} = conj(c_k)

which makes the squared L2 norm over one period equal to the plain
coefficient sum ``sum_k |c_k|^2`` (both signs of k).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


class PeriodMismatchError(ValueError):
    """Raised when two fields on different tori are combined."""


class GridTooSmallError(ValueError):
    """Raised when an evaluation grid cannot resolve the stored modes."""


@dataclass(frozen=True)
class TorusSpec:
    """Periodic 1D domain [-period/2, period/2) with a uniform grid."""

    period: float
    grid_size: int

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError(f"period must be positive, got {self.period}")
        if self.grid_size < 8 or self.grid_size % 2 != 0:
            raise ValueError(f"grid_size must be even and >= 8, got {self.grid_size}")

    @property
    def q(self) -> float:
        """Fundamental wavenumber 2*pi/period."""
        return 2.0 * np.pi / self.period

    @property
    def max_modes(self) -> int:
        return self.grid_size // 2 - 1

    def grid_points(self, n_points: int | None = None) -> np.ndarray:
        n = self.grid_size if n_points is None else n_points
        j = np.arange(n)
        return -0.5 * self.period + j * self.period / n


@dataclass(frozen=True)
class SpectralField:
    """Real zero-mean periodic field, stored as modes k = 1 .. K.

    ``coeffs[i]`` is the coefficient of wavenumber ``i + 1``.
    """

    spec: TorusSpec
    coeffs: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=np.complex128)
        object.__setattr__(self, "coeffs", c)
        if c.ndim != 1:
            raise ValueError("coeffs must be one-dimensional")
        if c.size > self.spec.max_modes:
            raise ValueError(
                f"{c.size} modes exceed the spec capacity {self.spec.max_modes}"
            )
        if c.size and not np.all(np.isfinite(c.view(np.float64))):
            raise ValueError("non-finite coefficient")

    @property
    def n_modes(self) -> int:
        return self.coeffs.size

    def mode(self, k: int) -> complex:
        """Coefficient of wavenumber k >= 1 (zero beyond the stored band)."""
        if k < 1:
            raise ValueError("mode index must be >= 1")
        return complex(self.coeffs[k - 1]) if k <= self.coeffs.size else 0j

    def _check_same_torus(self, other: "SpectralField"):
        if self.spec.period != other.spec.period:
            raise PeriodMismatchError(
                f"period mismatch: {self.spec.period} vs {other.spec.period}"
            )

    def __add__(self, other: "SpectralField") -> "SpectralField":
        self._check_same_torus(other)
        n = max(self.n_modes, other.n_modes)
        c = np.zeros(n, dtype=np.complex128)
        c[: self.n_modes] += self.coeffs
        c[: other.n_modes] += other.coeffs
        spec = self.spec if self.spec.grid_size >= other.spec.grid_size else other.spec
        return SpectralField(spec, c)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return self + (-1.0) * other

    def __neg__(self) -> "SpectralField":
        return SpectralField(self.spec, -self.coeffs)

    def __rmul__(self, scalar: float) -> "SpectralField":
        return SpectralField(self.spec, scalar * self.coeffs)

    __mul__ = __rmul__


def zero_field(spec: TorusSpec, n_modes: int = 0) -> SpectralField:
    return SpectralField(spec, np.zeros(n_modes, dtype=np.complex128))


def from_sin_cos(
    spec: TorusSpec, k: int, sin_amp: float = 0.0, cos_amp: float = 0.0
) -> SpectralField:
    """Field ``sin_amp*sin(k q x) + cos_amp*cos(k q x)``."""
    if k < 1:
        raise ValueError("wavenumber must be >= 1")
    c = np.zeros(k, dtype=np.complex128)
    c[k - 1] = 0.5 * np.sqrt(spec.period) * (cos_amp - 1j * sin_amp)
    return SpectralField(spec, c)


def random_field(
    spec: TorusSpec, n_modes: int, rng: np.random.Generator, scale: float = 1.0
) -> SpectralField:
    """Random trig polynomial with N(0, scale^2) sine/cosine amplitudes."""
    n = min(n_modes, spec.max_modes)
    a_sin = rng.standard_normal(n) * scale
    a_cos = rng.standard_normal(n) * scale
    c = 0.5 * np.sqrt(spec.period) * (a_cos - 1j * a_sin)
    return SpectralField(spec, c)


def evaluate_on_grid(u: SpectralField, n_points: int) -> np.ndarray:
    """Real samples at x_j = -P/2 + j*P/n, j = 0 .. n-1."""
    K = u.n_modes
    if n_points < 2 * K + 2:
        raise GridTooSmallError(
            f"{n_points} points alias a field with {K} modes; need >= {2 * K + 2}"
        )
    half = np.zeros(n_points // 2 + 1, dtype=np.complex128)
    if K:
        k = np.arange(1, K + 1)
        # (-1)^k phase re-centers the fft origin at x = -P/2
        half[1 : K + 1] = u.coeffs * ((-1.0) ** k) * n_points / np.sqrt(u.spec.period)
    return np.fft.irfft(half, n_points)


def from_grid(spec: TorusSpec, samples: np.ndarray, n_modes: int | None = None) -> SpectralField:
    """Field whose values at the sample grid are the given real samples.

    The samples must come from a zero-mean band-limited function resolved by
    the grid; the mean and any Nyquist residual are discarded.
    """
    samples = np.asarray(samples, dtype=np.float64)
    n = samples.size
    K = min(n // 2 - 1, spec.max_modes) if n_modes is None else n_modes
    half = np.fft.rfft(samples)
    k = np.arange(1, K + 1)
    c = half[1 : K + 1] * ((-1.0) ** k) * np.sqrt(spec.period) / n
    return SpectralField(spec, c)


def derivative(u: SpectralField, m: int) -> SpectralField:
    """m-th spatial derivative; coefficient k picks up (i k q)^m."""
    if m < 0:
        raise ValueError("derivative order must be >= 0")
    if m == 0:
        return u
    k = np.arange(1, u.n_modes + 1)
    return SpectralField(u.spec, u.coeffs * (1j * k * u.spec.q) ** m)


def sobolev_norm_sq(u: SpectralField, m: int = 0) -> float:
    """Squared H^m norm, i.e. the integral of |D^m u|^2 over one period."""
    if u.n_modes == 0:
        return 0.0
    k = np.arange(1, u.n_modes + 1, dtype=np.float64)
    w = (u.spec.q * k) ** (2 * m) if m else 1.0
    return float(2.0 * np.sum(w * (u.coeffs.real**2 + u.coeffs.imag**2)))


def inner_product(u: SpectralField, v: SpectralField, m: int = 0) -> float:
    """Real H^m pairing; equals the integral of D^m u * D^m v."""
    u._check_same_torus(v)
    n = min(u.n_modes, v.n_modes)
    if n == 0:
        return 0.0
    cu = u.coeffs[:n]
    cv = v.coeffs[:n]
    k = np.arange(1, n + 1, dtype=np.float64)
    w = (u.spec.q * k) ** (2 * m) if m else 1.0
    return float(2.0 * np.sum(w * (cu.real * cv.real + cu.imag * cv.imag)))


def project(u: SpectralField, N: int) -> SpectralField:
    """Keep wavenumbers |k| <= N, zero the rest."""
    if N < 0:
        raise ValueError("projection index must be >= 0")
    c = u.coeffs.copy()
    c[N:] = 0.0
    return SpectralField(u.spec, c)


def translate(u: SpectralField, b: float) -> SpectralField:
    """Shifted field x -> u(x + b)."""
    k = np.arange(1, u.n_modes + 1)
    return SpectralField(u.spec, u.coeffs * np.exp(1j * k * u.spec.q * b))


def multiply(u: SpectralField, v: SpectralField) -> SpectralField:
    """Zero-mean part of the pointwise product, via a zero-padded transform.

    The result keeps the full product band (K_u + K_v modes), so no aliasing
    enters regardless of the operands' bandwidth.  The product's mean (which
    the representation cannot hold) is dropped; it never contributes to the
    pairings this is used in, because they all integrate against derivative
    fields.
    """
    u._check_same_torus(v)
    K = u.n_modes + v.n_modes
    if K == 0:
        return zero_field(u.spec)
    n = 2 * K + 2
    gu = evaluate_on_grid(u, n)
    gv = evaluate_on_grid(v, n)
    spec = TorusSpec(u.spec.period, max(u.spec.grid_size, 2 * K + 4, 8))
    return from_grid(spec, gu * gv, n_modes=K)


def square(u: SpectralField) -> SpectralField:
    return multiply(u, u)


def nonlinear_term(u: SpectralField) -> SpectralField:
    """Convective term u * Du, dealiased by zero padding, truncated to the
    field's own band.  Identical to (1/2) D(u^2) there."""
    K = u.n_modes
    if K == 0:
        return u
    n = 3 * K + 4  # product band 2K plus margin: aliases land beyond K
    gu = evaluate_on_grid(u, n)
    gdu = evaluate_on_grid(derivative(u, 1), n)
    return from_grid(u.spec, gu * gdu, n_modes=K)


def lift_to_double_period(u: SpectralField) -> SpectralField:
    """The same function viewed on the doubled torus.

    Coefficients move to even indices with a sqrt(2) factor so that the
    doubled-period norm is the integral over the doubled interval:
    ||lift(u)||^2 = 2 ||u||^2.
    """
    K = u.n_modes
    spec2 = TorusSpec(2.0 * u.spec.period, 2 * u.spec.grid_size)
    c2 = np.zeros(2 * K, dtype=np.complex128)
    if K:
        c2[1::2] = np.sqrt(2.0) * u.coeffs
    return SpectralField(spec2, c2)


def linf_norm(u: SpectralField) -> float:
    """Max of |u| on a grid oversampled 4x beyond the stored band."""
    if u.n_modes == 0:
        return 0.0
    n = max(16, 8 * u.n_modes)
    return float(np.max(np.abs(evaluate_on_grid(u, n))))


def max_cosine_amplitude(u: SpectralField) -> float:
    """Largest cosine-component amplitude; zero for an odd field."""
    if u.n_modes == 0:
        return 0.0
    return float(np.max(np.abs(u.coeffs.real)) * 2.0 / np.sqrt(u.spec.period))


def point_value(u: SpectralField, x: float) -> float:
    """u(x) by direct summation (used for small fields and checks)."""
    if u.n_modes == 0:
        return 0.0
    k = np.arange(1, u.n_modes + 1)
    return float(
        2.0 / np.sqrt(u.spec.period) * np.sum(u.coeffs * np.exp(1j * k * u.spec.q * x)).real
    )
