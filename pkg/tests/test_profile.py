import math

import numpy as np
import pytest

from ksmix.noise import default_forcing
from ksmix.profile import (
    CutoffFunction,
    NotOddError,
    PhiProfile,
    antisym_coercivity_margin,
    build_phi,
    choose_M,
    constants_C0_C1,
    general_coercivity_margin,
    shift_phi,
)
from ksmix.spectral import (
    PeriodMismatchError,
    SpectralField,
    TorusSpec,
    derivative,
    evaluate_on_grid,
    from_sin_cos,
    inner_product,
    lift_to_double_period,
    random_field,
    sobolev_norm_sq,
    square,
    zero_field,
)

from oracles import periodic_quadrature

TWO_PI = 2 * math.pi


def odd_random_field(spec, n_modes, rng, scale=1.0):
    amps = rng.standard_normal(n_modes) * scale
    c = -0.5j * np.sqrt(spec.period) * amps
    return SpectralField(spec, c)


def test_cutoff_shape():
    f = CutoffFunction.smoothstep()
    assert np.all(f(np.linspace(-1, 1, 11)) == 1.0)
    assert np.all(f(np.array([2.0, -2.5, 3.0])) == 0.0)
    xs = np.linspace(1, 2, 200)
    vals = f(xs)
    assert np.all(np.diff(vals) <= 1e-15)
    assert np.all((vals >= 0) & (vals <= 1))
    # |f'| max 3/2 at the midpoint of the ramp
    h = 1e-6
    deriv = (f(xs[1:-1] + h) - f(xs[1:-1] - h)) / (2 * h)
    assert np.max(np.abs(deriv)) <= f.dprime_max + 1e-6
    assert np.max(np.abs(deriv)) >= f.dprime_max - 1e-3


def test_choose_m_condition_i_alone():
    # synthetic cutoff with negligible slope isolates the tail condition
    flat = CutoffFunction(evaluator=CutoffFunction.smoothstep().evaluator, dprime_max=1e-12)
    m = choose_M(1.0, 1.0, flat)
    # independent integer scan for: g (nq)^4 > 2 (nq)^2 + 1 for all n > M
    def holds_beyond(M, g=1.0, q=1.0):
        return all(g * (n * q) ** 4 > 2 * (n * q) ** 2 + 1 for n in range(M + 1, M + 200))

    assert m == 1
    assert holds_beyond(1)
    assert not holds_beyond(0)


def test_choose_m_monotone_in_g():
    f = CutoffFunction.smoothstep()
    gs = np.logspace(-1, 1, 9)
    ms = [choose_M(g, 1.0, f) for g in gs]
    assert all(a >= b for a, b in zip(ms, ms[1:]))


def test_choose_m_postcondition_replay():
    f = CutoffFunction.smoothstep()
    for g, q in [(0.5, 1.0), (1.0, 0.5), (5.0, 0.3927)]:
        M = choose_M(g, q, f)
        assert all(
            g * (n * q) ** 4 > 2 * (n * q) ** 2 + 1 for n in range(M + 1, M + 500)
        )
        thr = (
            (8.0 / (q**4 * g))
            * f.dprime_max
            * (1.0 / g + 1.0)
            * math.sqrt((math.pi**2 / 6) * (math.pi**4 / 90))
        )
        assert M > thr


def test_build_phi_coefficients():
    g = 1.0
    P = TWO_PI
    phi = build_phi(P, g)
    M = phi.M
    n = np.arange(1, 4 * M + 1)
    expected_plateau = math.sqrt(P) * (1.0 / g + 1.0)
    assert np.all(phi.psi[: 2 * M] == pytest.approx(expected_plateau))
    assert np.all(phi.psi[4 * M - 1 :] == 0.0) or phi.psi[-1] == 0.0
    # support ends at 4M
    assert phi.phi_field.n_modes == 4 * M
    tail = phi.psi[n > 4 * M]
    assert tail.size == 0
    # psi values are nonnegative and decay monotonically on the ramp
    ramp = phi.psi[2 * M : 4 * M]
    assert np.all(np.diff(ramp) <= 1e-12)


def test_phi_oddness_on_grid():
    phi = build_phi(TWO_PI, 1.0)
    n = 8 * phi.phi_field.n_modes
    vals = evaluate_on_grid(phi.phi_field, n)
    # x_j = -P/2 + j P / n, so x index j and n - j are mirror points
    mirrored = np.concatenate([[vals[0]], vals[1:][::-1]])
    assert np.max(np.abs(vals + mirrored)) < 1e-10 * max(1.0, np.max(np.abs(vals)))


def test_shift_phi_properties():
    phi = build_phi(TWO_PI, 2.0)
    base = phi.phi_field
    np.testing.assert_array_equal(shift_phi(phi, 0.0).coeffs, base.coeffs)
    np.testing.assert_allclose(
        shift_phi(phi, phi.period).coeffs, base.coeffs, atol=1e-9 * np.max(np.abs(base.coeffs))
    )
    rng = np.random.default_rng(5)
    n0 = sobolev_norm_sq(base, 0)
    for b in rng.uniform(-10, 10, 50):
        assert sobolev_norm_sq(shift_phi(phi, b), 0) == pytest.approx(n0, rel=1e-12)


def test_antisym_margin_zero_field():
    phi = build_phi(TWO_PI, 1.0)
    assert antisym_coercivity_margin(zero_field(phi.phi_field.spec), 1.0, phi) == 0.0


def test_antisym_margin_rejects_even_component():
    phi = build_phi(TWO_PI, 1.0)
    u = from_sin_cos(phi.phi_field.spec, 1, cos_amp=1.0)
    with pytest.raises(NotOddError):
        antisym_coercivity_margin(u, 1.0, phi)


def test_antisym_margin_single_high_mode():
    g = 1.0
    phi = build_phi(TWO_PI, g)
    spec = phi.phi_field.spec
    q = spec.q
    n = 2 * phi.M + 3  # beyond the plateau: psi_{2n} = 0
    u = from_sin_cos(spec, n, sin_amp=1.3)
    # closed form: <u^2, phi'> couples only to psi_{2n} = 0, so
    # margin = (3/4 g (nq)^4 - (nq)^2 - 1/2) ||u||^2
    expected = (0.75 * g * (n * q) ** 4 - (n * q) ** 2 - 0.5) * sobolev_norm_sq(u, 0)
    got = antisym_coercivity_margin(u, g, phi)
    assert got == pytest.approx(expected, rel=1e-10)
    assert got > 0


@pytest.mark.parametrize("g", [0.1, 0.5, 1.0, 5.0])
def test_antisym_margin_random_fields(g):
    phi = build_phi(TWO_PI, g)
    spec = TorusSpec(TWO_PI, 256)
    rng = np.random.default_rng(int(g * 10) + 1)
    worst = np.inf
    for _ in range(1000):
        n_modes = int(rng.integers(1, 65))
        u = odd_random_field(spec, n_modes, rng)
        tol = 1e-8 * (1.0 + sobolev_norm_sq(u, 2))
        m = antisym_coercivity_margin(u, g, phi)
        worst = min(worst, m + tol)
    assert worst >= 0.0


def test_antisym_margin_pairing_against_quadrature():
    # independent check of the quadratic pairing with grid quadrature
    g = 1.0
    phi = build_phi(TWO_PI, g)
    spec = TorusSpec(TWO_PI, 256)
    rng = np.random.default_rng(77)
    u = odd_random_field(spec, 16, rng)
    n = 8 * (phi.phi_field.n_modes + 32)
    gu = evaluate_on_grid(u, n)
    gphi_p = evaluate_on_grid(derivative(phi.phi_field, 1), n)
    quad = periodic_quadrature(gu * gu * gphi_p, TWO_PI)
    spectral = inner_product(square(u), derivative(phi.phi_field, 1), 0)
    assert spectral == pytest.approx(quad, rel=1e-8)


@pytest.mark.parametrize("gamma,L", [(0.2, TWO_PI), (1.0, TWO_PI), (10.0, TWO_PI), (1.0, 16.0)])
def test_general_margin_random_fields(gamma, L):
    phi = build_phi(2.0 * L, 0.5 * gamma)
    spec = TorusSpec(L, 256)
    rng = np.random.default_rng(int(gamma * 7) + int(L))
    worst = np.inf
    for _ in range(300):
        n_modes = int(rng.integers(1, 65))
        u = random_field(spec, n_modes, rng)
        b = float(rng.uniform(0.0, 2.0 * L))
        tol = 1e-8 * (1.0 + sobolev_norm_sq(u, 2))
        m = general_coercivity_margin(u, b, gamma, phi)
        worst = min(worst, m + tol)
    assert worst >= 0.0


def test_general_margin_zero_field():
    L = TWO_PI
    phi = build_phi(2 * L, 0.5)
    assert general_coercivity_margin(zero_field(TorusSpec(L, 64)), 1.1, 1.0, phi) == 0.0


def test_general_margin_period_check():
    phi = build_phi(TWO_PI, 0.5)
    u = from_sin_cos(TorusSpec(TWO_PI, 64), 1, sin_amp=1.0)
    with pytest.raises(PeriodMismatchError):
        general_coercivity_margin(u, 0.0, 1.0, phi)


def test_general_margin_odd_field_vs_antisym():
    # for an odd field at b = 0 the general margin differs from the pure
    # antisymmetric one only through the always-helpful pairing relief and
    # the sharper fourth-order retention
    gamma = 1.0
    L = TWO_PI
    phi = build_phi(2 * L, 0.5 * gamma)
    spec = TorusSpec(L, 128)
    rng = np.random.default_rng(9)
    for _ in range(20):
        u = odd_random_field(spec, 12, rng)
        lu = lift_to_double_period(u)
        anti = antisym_coercivity_margin(lu, 0.5 * gamma, phi)
        dphi = derivative(phi.phi_field, 1)
        relief = inner_product(lu, dphi, 0) ** 2 / (4 * L)
        extra_d2 = (0.25 * 0.5 * gamma - 0.125 * gamma) * sobolev_norm_sq(lu, 2)
        gen = general_coercivity_margin(u, 0.0, gamma, phi)
        assert gen == pytest.approx(anti + relief + extra_d2, rel=1e-9, abs=1e-9)
        assert gen >= anti - 1e-9


def test_constants_c0_c1():
    L = 16.0
    gamma = 1.0
    phi = build_phi(2 * L, 0.5 * gamma)
    f = default_forcing(TorusSpec(L, 128))
    c0, c1 = constants_C0_C1(phi, f, gamma)
    phi_sq = sobolev_norm_sq(phi.phi_field, 0)
    d2_sq = sobolev_norm_sq(phi.phi_field, 2)
    sigma_sq = 2.0 * f.hs_norm_sq
    assert c1 == pytest.approx(3 * phi_sq, rel=1e-12)
    assert c0 == pytest.approx((1 + 2 / gamma) * phi_sq + 2 * gamma * d2_sq + sigma_sq, rel=1e-12)
    # term dropout without forcing
    c0_nf, _ = constants_C0_C1(phi, None, gamma)
    assert c0_nf == pytest.approx(c0 - sigma_sq, rel=1e-12)


def test_constants_with_synthetic_zero_profile():
    L = 16.0
    spec2 = TorusSpec(2 * L, 64)
    zero_phi = PhiProfile(
        period=2 * L, g=0.5, M=1, psi=np.zeros(4), phi_field=zero_field(spec2, 4)
    )
    f = default_forcing(TorusSpec(L, 128))
    c0, c1 = constants_C0_C1(zero_phi, f, 1.0)
    assert c0 == pytest.approx(2.0 * f.hs_norm_sq, rel=1e-12)
    assert c1 == 0.0


def test_constants_match_quadrature():
    L = TWO_PI
    gamma = 2.0
    phi = build_phi(2 * L, 0.5 * gamma)
    n = 8 * phi.phi_field.n_modes
    vals = evaluate_on_grid(phi.phi_field, n)
    vals2 = evaluate_on_grid(derivative(phi.phi_field, 2), n)
    quad_phi = periodic_quadrature(vals**2, 2 * L)
    quad_d2 = periodic_quadrature(vals2**2, 2 * L)
    c0, c1 = constants_C0_C1(phi, None, gamma)
    c0_quad = (1 + 2 / gamma) * quad_phi + 2 * gamma * quad_d2
    assert c0 == pytest.approx(c0_quad, rel=1e-8)
    assert c1 == pytest.approx(3 * quad_phi, rel=1e-8)


def test_psi_symmetry_and_support():
    phi = build_phi(TWO_PI, 1.0)
    M = phi.M
    # stored for n >= 1 only; evenness in n and psi_0 = 0 are structural:
    # the derivative series uses |n|, so check the support and realness
    assert phi.psi.dtype == np.float64
    assert phi.psi.shape == (4 * M,)
    assert np.all(phi.psi[: 2 * M] > 0)
    assert phi.psi[-1] == pytest.approx(0.0, abs=1e-15)
    beyond = phi.phi_field.mode(4 * M)
    assert abs(beyond) < 1e-15 or np.isclose(abs(beyond), 0.0)


def test_odd_even_split_identity():
    # for an L-periodic zero-mean field seen on the doubled torus:
    # || u - u(0) ||^2 = ||u||^2 + 2 L u(0)^2
    rng = np.random.default_rng(13)
    L = TWO_PI
    spec = TorusSpec(L, 128)
    for _ in range(20):
        u = random_field(spec, 20, rng)
        lu = lift_to_double_period(u)
        n = 512
        vals = evaluate_on_grid(lu, n)
        u0 = vals[n // 2]  # x = 0 sits at index n/2 of the doubled grid
        lhs = periodic_quadrature((vals - u0) ** 2, 2 * L)
        rhs = sobolev_norm_sq(lu, 0) + 2 * L * u0**2
        assert lhs == pytest.approx(rhs, rel=1e-10)
