"""Odd periodic profile that manufactures dissipation for the fourth-order
operator, plus the coercivity margins it certifies.

The profile is a sine series whose derivative has flat coefficients up to a
cutoff index and smoothly decays to zero; paired with the quadratic term it
dominates the destabilizing second-order part for every field, at the price
of a rank-one correction controlled by a single pairing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .noise import ForcingOperator
from .spectral import (
    PeriodMismatchError,
    SpectralField,
    TorusSpec,
    derivative,
    inner_product,
    lift_to_double_period,
    max_cosine_amplitude,
    sobolev_norm_sq,
    square,
    translate,
)

ZETA_2 = math.pi**2 / 6.0
ZETA_4 = math.pi**4 / 90.0


class NotOddError(ValueError):
    """Raised when an evaluator requires a pure sine series."""


@dataclass(frozen=True)
class CutoffFunction:
    """Smooth plateau: 1 on |x| <= 1, 0 on |x| >= 2, monotone in between."""

    evaluator: Callable[[np.ndarray], np.ndarray]
    dprime_max: float

    def __call__(self, x) -> np.ndarray:
        return self.evaluator(np.asarray(x, dtype=np.float64))

    @staticmethod
    def smoothstep() -> "CutoffFunction":
        def f(x):
            ax = np.abs(x)
            s = np.clip(ax - 1.0, 0.0, 1.0)
            return 1.0 - 3.0 * s**2 + 2.0 * s**3

        return CutoffFunction(evaluator=f, dprime_max=1.5)


@dataclass(frozen=True)
class PhiProfile:
    """Sine-series profile with cutoff index M and diffusion parameter g.

    ``psi[n-1]`` holds the derivative-series coefficient for index n; the
    field's sine coefficients are psi_n / (n q).
    """

    period: float
    g: float
    M: int
    psi: np.ndarray
    phi_field: SpectralField

    def norm_sq(self, m: int = 0) -> float:
        return sobolev_norm_sq(self.phi_field, m)


def choose_M(g: float, q: float, f: CutoffFunction) -> int:
    """Smallest cutoff index making both profile conditions hold.

    (i)  beyond the index, the fourth-order term alone dominates:
         g (n q)^4 > 2 (n q)^2 + 1 for every n > M;
    (ii) the off-diagonal spillover of the cutoff is small:
         M > (8 / (q^4 g)) |f'|_inf (1/g + 1) sqrt(zeta(2) zeta(4)).
    """
    if g <= 0 or q <= 0:
        raise ValueError("g and q must be positive")
    # (i): largest root of g x^2 - 2x - 1 in x = (n q)^2
    x_root = (1.0 + math.sqrt(1.0 + g)) / g
    n_crit = math.sqrt(x_root) / q
    m_i = max(1, math.floor(n_crit))
    while not _cond_i(g, q, m_i):
        m_i += 1
    while m_i > 1 and _cond_i(g, q, m_i - 1):
        m_i -= 1
    # (ii)
    thr = (8.0 / (q**4 * g)) * f.dprime_max * (1.0 / g + 1.0) * math.sqrt(ZETA_2 * ZETA_4)
    m_ii = math.floor(thr) + 1
    return max(m_i, m_ii)


def _cond_i(g: float, q: float, m: int) -> bool:
    x = ((m + 1) * q) ** 2
    return g * x * x > 2.0 * x + 1.0


def build_phi(period: float, g: float, f: CutoffFunction | None = None) -> PhiProfile:
    """Profile on the given period with diffusion parameter g."""
    if f is None:
        f = CutoffFunction.smoothstep()
    q = 2.0 * math.pi / period
    M = choose_M(g, q, f)
    n = np.arange(1, 4 * M + 1)
    psi = math.sqrt(period) * (1.0 / g + 1.0) * f(n / (2.0 * M))
    # sine amplitude of mode n is -2 psi_n / (n q sqrt(P)); this orientation
    # is the one that makes the coercivity inequalities hold
    coeffs = 1j * psi / (n * q)
    grid = 8 * M + 4
    field = SpectralField(TorusSpec(period, grid), coeffs)
    return PhiProfile(period=period, g=g, M=M, psi=psi, phi_field=field)


def shift_phi(phi: PhiProfile, b: float) -> SpectralField:
    """The translated profile x -> phi(x + b)."""
    return translate(phi.phi_field, b)


def _require_odd(u: SpectralField):
    if max_cosine_amplitude(u) > 1e-12:
        raise NotOddError("field has a cosine component; an odd field is required")


def antisym_coercivity_margin(u: SpectralField, g: float, phi: PhiProfile) -> float:
    """Slack of the odd-field coercivity inequality.

    Returns lhs - rhs of
        g ||D2 u||^2 - ||Du||^2 + (1/2) <u^2, Dphi>
            >= (1/4) g ||D2 u||^2 + (1/2) ||u||^2
    for an odd field sharing the profile's period.
    """
    _require_odd(u)
    if u.spec.period != phi.period:
        raise PeriodMismatchError("field and profile periods differ")
    d2 = sobolev_norm_sq(u, 2)
    d1 = sobolev_norm_sq(u, 1)
    pairing = inner_product(square(u), derivative(phi.phi_field, 1), 0)
    lhs = g * d2 - d1 + 0.5 * pairing
    rhs = 0.25 * g * d2 + 0.5 * sobolev_norm_sq(u, 0)
    return lhs - rhs


def general_coercivity_margin(
    u: SpectralField, b: float, gamma: float, phi: PhiProfile
) -> float:
    """Slack of the shifted-profile coercivity inequality for arbitrary fields.

    The field lives on period L, the profile on 2L with parameter gamma/2.
    Returns lhs - rhs of
        (1/2) gamma ||D2 u||^2 - ||Du||^2 + (1/2) <u^2, Dphi_b>
            >= (1/8) gamma ||D2 u||^2 + (1/2) ||u||^2
               - (1/(4L)) <u, Dphi_b>^2
    with every pairing taken on the doubled torus.
    """
    L = u.spec.period
    if phi.period != 2.0 * L:
        raise PeriodMismatchError("profile period must be twice the field period")
    if abs(phi.g - 0.5 * gamma) > 1e-12 * max(1.0, gamma):
        raise ValueError("profile must be built with half the diffusion constant")
    lu = lift_to_double_period(u)
    dphi_b = derivative(shift_phi(phi, b), 1)
    d2 = sobolev_norm_sq(lu, 2)
    pair_sq = inner_product(square(lu), dphi_b, 0)
    pair_lin = inner_product(lu, dphi_b, 0)
    lhs = 0.5 * gamma * d2 - sobolev_norm_sq(lu, 1) + 0.5 * pair_sq
    rhs = (
        0.125 * gamma * d2
        + 0.5 * sobolev_norm_sq(lu, 0)
        - pair_lin**2 / (4.0 * L)
    )
    return lhs - rhs


def constants_C0_C1(
    phi: PhiProfile, f: ForcingOperator | None, gamma: float
) -> tuple[float, float]:
    """Drift and offset constants of the pathwise energy inequality.

    C0 = (1 + 2/gamma) ||phi||^2 + 2 gamma ||D2 phi||^2 + ||sigma||^2,
    C1 = 3 ||phi||^2,
    with profile norms on its own (doubled) torus and the forcing norm taken
    as the Hilbert-Schmidt sum seen on the doubled torus.
    """
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    phi_sq = phi.norm_sq(0)
    d2_sq = phi.norm_sq(2)
    sigma_sq = 0.0 if f is None else f.hs_norm_sq_doubled()
    c0 = (1.0 + 2.0 / gamma) * phi_sq + 2.0 * gamma * d2_sq + sigma_sq
    c1 = 3.0 * phi_sq
    return c0, c1
