"""Time stepping for the stochastic fourth-order equation, its nudged
companion copy, and the profile-shift ODE, with per-step accumulation of the
energy integrals the diagnostics consume.

The linear part is integrated exactly mode by mode; the convective term is
explicit (first order, or the two-stage second-order variant); noise enters
with the exact per-mode stationary variance of the linearized flow.  The hot
loop lives in a compiled kernel with a NumPy fallback (see _kernels).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import _kernels
from .noise import (
    ForcingOperator,
    NoiseStream,
    NotInRangeError,
    sample_increment_block,
    sub_inverse_matrix,
)
from .profile import PhiProfile, shift_phi
from .spectral import (
    SpectralField,
    TorusSpec,
    derivative,
    inner_product,
    lift_to_double_period,
    sobolev_norm_sq,
)

SCHEMES = ("ETD1", "ETDRK2")


class NonFiniteError(RuntimeError):
    """A coefficient overflowed during time stepping."""

    def __init__(self, step: int):
        super().__init__(f"non-finite coefficient at step {step}")
        self.step = step


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    gamma: float
    T_final: float
    scheme: str = "ETDRK2"
    record_stride: int = 100
    linear_only: bool = False

    def __post_init__(self):
        if not 0 < self.dt <= 0.1:
            raise ValueError(f"dt must be in (0, 0.1], got {self.dt}")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.T_final < 0:
            raise ValueError("T_final must be nonnegative")
        if self.scheme.upper() not in SCHEMES:
            raise ValueError(f"scheme must be one of {SCHEMES}")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.T_final / self.dt))


def linear_symbol(gamma: float, spec: TorusSpec) -> np.ndarray:
    """Growth rate of each mode under the linear drift: (kq)^2 - gamma (kq)^4."""
    kq = spec.q * np.arange(1, spec.max_modes + 1)
    return kq**2 - gamma * kq**4


def select_coupling_params(gamma: float, C2: float, spec: TorusSpec) -> tuple[int, float]:
    """Nudged mode count and gain enforcing the target contraction rate.

    The gain is lam = 1/(2 gamma) + C2/2; the mode count is the smallest N
    whose spectral gap (gamma/2) (q (N+1))^4 clears the same threshold.
    """
    if C2 <= 0:
        raise ValueError("C2 must be positive")
    lam = 0.5 / gamma + 0.5 * C2
    N = 1
    while 0.5 * gamma * (spec.q * (N + 1)) ** 4 < lam:
        N += 1
    return N, lam


@dataclass
class TrajectoryState:
    """One path plus its running integrals.

    acc_D2 integrates ||D2 u||^2, acc_dev the squared doubled-torus distance
    to the shifted profile, acc_mart the discrete noise pairing, acc_d2norm
    the (unsquared) curvature norm used by the coupling bound.
    """

    u: SpectralField
    t: float
    b: float
    acc_D2: float
    acc_dev: float
    acc_mart: float
    acc_d2norm: float
    stream: NoiseStream

    @staticmethod
    def initial(u0: SpectralField, stream: NoiseStream) -> "TrajectoryState":
        return TrajectoryState(
            u=u0, t=0.0, b=0.0, acc_D2=0.0, acc_dev=0.0, acc_mart=0.0,
            acc_d2norm=0.0, stream=stream,
        )


@dataclass
class CoupledState:
    """Leader trajectory plus the nudged follower driven by the same noise."""

    u_traj: TrajectoryState
    v: SpectralField
    lam: float
    n_c: int
    acc_kl: float
    acc_diff: float
    c2: float | None = None
    override: bool = False

    @staticmethod
    def initial(u0, v0, stream, lam, n_c, c2=None, override=False) -> "CoupledState":
        return CoupledState(
            u_traj=TrajectoryState.initial(u0, stream), v=v0, lam=lam, n_c=n_c,
            acc_kl=0.0, acc_diff=0.0, c2=c2, override=override,
        )


@dataclass(frozen=True)
class StepperTables:
    """Everything the per-step kernels need, precomputed once per run."""

    K: int
    M: int
    dt: float
    L: float
    q: float
    etdrk2: bool
    linear_only: bool
    E: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    nsc: np.ndarray
    kq: np.ndarray
    S: np.ndarray        # (M, K) forcing coefficients
    p2k: np.ndarray      # profile coefficients at even indices
    wvec: np.ndarray     # pairing weights for the shift ODE
    phinorm2: float      # squared profile norm on its torus
    inv_sqrt_L: float
    lam: float = 0.0
    n_c: int = 0
    Minv: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    @staticmethod
    def build(
        spec: TorusSpec,
        cfg: SolverConfig,
        f: ForcingOperator | None,
        phi: PhiProfile,
        lam: float = 0.0,
        n_c: int = 0,
    ) -> "StepperTables":
        K = spec.max_modes
        dt = cfg.dt
        s = linear_symbol(cfg.gamma, spec)
        smax = max(0.0, float(s.max(initial=0.0)))
        if dt * smax > 0.5:
            raise ValueError(
                f"dt {dt} too large for the unstable band (dt*s_max = {dt * smax:.3f})"
            )
        sdt = s * dt
        E = np.exp(sdt)
        phi1 = np.where(np.abs(sdt) < 1e-8, dt * (1.0 + 0.5 * sdt), np.expm1(sdt) / np.where(s == 0, 1.0, s))
        phi2 = np.where(
            np.abs(sdt) < 1e-6,
            dt * (0.5 + sdt / 6.0),
            (E - 1.0 - sdt) / np.where(s == 0, 1.0, s**2 * dt),
        )
        var = np.where(np.abs(sdt) < 1e-8, dt * (1.0 + sdt), np.expm1(2.0 * sdt) / np.where(s == 0, 1.0, 2.0 * s))
        nsc = np.sqrt(np.maximum(var, 0.0) / dt)
        kq = spec.q * np.arange(1, K + 1)
        if f is not None:
            if f.spec.period != spec.period:
                raise ValueError("forcing and field periods differ")
            M = f.dim
            S = np.zeros((M, K), dtype=np.complex128)
            for j, col in enumerate(f.columns):
                S[j, : col.n_modes] = col.coeffs
        else:
            M = 0
            S = np.zeros((0, K), dtype=np.complex128)
        if phi.period != 2.0 * spec.period:
            raise ValueError("profile period must be twice the field period")
        p2k = np.zeros(K, dtype=np.complex128)
        pc = phi.phi_field.coeffs
        even = pc[1::2]
        p2k[: min(K, even.size)] = even[:K]
        wvec = -1j * np.conj(p2k) * kq
        Minv = np.zeros((0, 0))
        if n_c > 0:
            if f is None:
                raise NotInRangeError("coupling requires a forcing operator")
            Minv = sub_inverse_matrix(f, n_c)
        return StepperTables(
            K=K, M=M, dt=dt, L=spec.period, q=spec.q,
            etdrk2=cfg.scheme.upper() == "ETDRK2", linear_only=cfg.linear_only,
            E=E, phi1=phi1, phi2=phi2, nsc=nsc, kq=kq, S=S, p2k=p2k, wvec=wvec,
            phinorm2=phi.norm_sq(0), inv_sqrt_L=1.0 / math.sqrt(spec.period),
            lam=lam, n_c=n_c, Minv=Minv,
        )


def _pad_coeffs(u: SpectralField, K: int) -> np.ndarray:
    c = np.zeros(K, dtype=np.complex128)
    c[: u.n_modes] = u.coeffs
    return c


def _observables(c: np.ndarray, b: float, tab: StepperTables) -> tuple[float, float]:
    normsq = 2.0 * float(np.sum(c.real**2 + c.imag**2))
    d2 = 2.0 * float(np.sum(tab.kq**4 * (c.real**2 + c.imag**2)))
    phase = np.exp(-1j * tab.kq * b)
    cross = float(np.sum((c * np.conj(tab.p2k) * phase).real))
    dev = tab.phinorm2 + 2.0 * normsq - 4.0 * math.sqrt(2.0) * cross
    return d2, dev


def step_shift(b: float, u: SpectralField, phi: PhiProfile, dt: float) -> float:
    """One explicit-trapezoid step of the profile-shift ODE, u frozen."""
    if dt <= 0:
        raise ValueError("dt must be positive")
    lu = lift_to_double_period(u)
    L = u.spec.period

    def rate(bb: float) -> float:
        return inner_product(lu, derivative(shift_phi(phi, bb), 1), 0) / (4.0 * L)

    r1 = rate(b)
    b_euler = b + dt * r1
    return b + 0.5 * dt * (r1 + rate(b_euler))


def step_kse(
    state: TrajectoryState,
    cfg: SolverConfig,
    f: ForcingOperator | None,
    phi: PhiProfile,
) -> TrajectoryState:
    """Advance one trajectory by a single step (reference path)."""
    spec = state.u.spec
    tab = StepperTables.build(spec, cfg, f, phi)
    c = _pad_coeffs(state.u, tab.K)
    dW = sample_increment_block(state.stream, cfg.dt, 1)
    accum = _init_accum(c, state, tab, coupled=False)
    status = _kernels.advance_kse(c, dW, _kernel_args(tab), accum)
    if status >= 0:
        raise NonFiniteError(int(round(state.t / cfg.dt)) + status)
    return TrajectoryState(
        u=SpectralField(spec, c), t=state.t + cfg.dt, b=accum[0],
        acc_D2=accum[1], acc_dev=accum[2], acc_mart=accum[3], acc_d2norm=accum[4],
        stream=state.stream,
    )


def step_coupled(
    cs: CoupledState,
    cfg: SolverConfig,
    f: ForcingOperator,
    phi: PhiProfile,
) -> CoupledState:
    """Advance the leader and the nudged follower by one shared-noise step."""
    if cs.n_c > f.range_N:
        raise NotInRangeError(
            f"nudged band {cs.n_c} exceeds the forced band {f.range_N}"
        )
    st = cs.u_traj
    spec = st.u.spec
    tab = StepperTables.build(spec, cfg, f, phi, lam=cs.lam, n_c=cs.n_c)
    cu = _pad_coeffs(st.u, tab.K)
    cv = _pad_coeffs(cs.v, tab.K)
    dW = sample_increment_block(st.stream, cfg.dt, 1)
    accum = _init_accum(cu, st, tab, coupled=True, cv=cv, cs=cs)
    status = _kernels.advance_coupled(cu, cv, dW, _kernel_args(tab), accum)
    if status >= 0:
        raise NonFiniteError(int(round(st.t / cfg.dt)) + status)
    new_traj = TrajectoryState(
        u=SpectralField(spec, cu), t=st.t + cfg.dt, b=accum[0],
        acc_D2=accum[1], acc_dev=accum[2], acc_mart=accum[3], acc_d2norm=accum[4],
        stream=st.stream,
    )
    return replace(
        cs, u_traj=new_traj, v=SpectralField(spec, cv),
        acc_kl=accum[7], acc_diff=accum[8],
    )


def _kernel_args(tab: StepperTables) -> tuple:
    return (
        tab.dt, tab.E, tab.phi1, tab.phi2, tab.nsc, tab.S, tab.p2k, tab.wvec,
        tab.kq, tab.inv_sqrt_L, tab.L, tab.phinorm2,
        1 if tab.etdrk2 else 0, 1 if tab.linear_only else 0,
        tab.lam, tab.n_c, tab.Minv,
    )


def _init_accum(c, st: TrajectoryState, tab: StepperTables, coupled: bool, cv=None, cs=None):
    d2, dev = _observables(c, st.b, tab)
    accum = np.zeros(11)
    accum[0] = st.b
    accum[1] = st.acc_D2
    accum[2] = st.acc_dev
    accum[3] = st.acc_mart
    accum[4] = st.acc_d2norm
    accum[5] = d2
    accum[6] = dev
    if coupled:
        accum[7] = cs.acc_kl
        accum[8] = cs.acc_diff
        accum[9] = _kl_rate(c, cv, tab)
        accum[10] = 2.0 * float(np.sum(np.abs(c - cv) ** 2))
    return accum


def _kl_rate(cu, cv, tab: StepperTables) -> float:
    if tab.n_c == 0:
        return 0.0
    d = tab.lam * (cu[: tab.n_c] - cv[: tab.n_c])
    vec = np.concatenate([math.sqrt(2.0) * d.real, math.sqrt(2.0) * d.imag])
    w = tab.Minv @ vec
    return 0.5 * float(np.dot(w, w))


def _snapshot_steps(n_steps: int, stride: int) -> list[int]:
    steps = list(range(0, n_steps + 1, stride))
    if steps[-1] != n_steps:
        steps.append(n_steps)
    return steps


def run_trajectory(
    cfg: SolverConfig,
    f: ForcingOperator | None,
    phi: PhiProfile,
    u0: SpectralField,
    stream: NoiseStream,
) -> list[TrajectoryState]:
    """Integrate one path, returning snapshots every record_stride steps."""
    spec = u0.spec
    tab = StepperTables.build(spec, cfg, f, phi)
    c = _pad_coeffs(u0, tab.K)
    state = TrajectoryState.initial(SpectralField(spec, c.copy()), stream)
    accum = _init_accum(c, state, tab, coupled=False)
    args = _kernel_args(tab)
    out = [state]
    done = 0
    for target in _snapshot_steps(cfg.n_steps, cfg.record_stride)[1:]:
        n = target - done
        dW = sample_increment_block(stream, cfg.dt, n)
        status = _kernels.advance_kse(c, dW, args, accum)
        if status >= 0:
            raise NonFiniteError(done + status)
        done = target
        out.append(
            TrajectoryState(
                u=SpectralField(spec, c.copy()), t=done * cfg.dt, b=accum[0],
                acc_D2=accum[1], acc_dev=accum[2], acc_mart=accum[3],
                acc_d2norm=accum[4], stream=stream,
            )
        )
    return out


def run_coupled(
    cfg: SolverConfig,
    f: ForcingOperator,
    phi: PhiProfile,
    u0: SpectralField,
    v0: SpectralField,
    stream: NoiseStream,
    C2: float | None = None,
    lam: float | None = None,
    n_c: int | None = None,
) -> list[CoupledState]:
    """Integrate a leader/follower pair under shared noise.

    The gain and nudged band come from the selection rule at C2 unless both
    are given explicitly (override).
    """
    spec = u0.spec
    override = lam is not None or n_c is not None
    if override:
        if lam is None or n_c is None:
            raise ValueError("explicit coupling needs both lam and n_c")
    else:
        if C2 is None:
            raise ValueError("either C2 or explicit (lam, n_c) is required")
        n_c, lam = select_coupling_params(cfg.gamma, C2, spec)
    if n_c > f.range_N:
        raise NotInRangeError(
            f"nudged band {n_c} exceeds the forced band {f.range_N}"
        )
    tab = StepperTables.build(spec, cfg, f, phi, lam=lam, n_c=n_c)
    cu = _pad_coeffs(u0, tab.K)
    cv = _pad_coeffs(v0, tab.K)
    cs = CoupledState.initial(
        SpectralField(spec, cu.copy()), SpectralField(spec, cv.copy()),
        stream, lam, n_c, c2=C2, override=override,
    )
    accum = _init_accum(cu, cs.u_traj, tab, coupled=True, cv=cv, cs=cs)
    args = _kernel_args(tab)
    out = [cs]
    done = 0
    for target in _snapshot_steps(cfg.n_steps, cfg.record_stride)[1:]:
        n = target - done
        dW = sample_increment_block(stream, cfg.dt, n)
        status = _kernels.advance_coupled(cu, cv, dW, args, accum)
        if status >= 0:
            raise NonFiniteError(done + status)
        done = target
        traj = TrajectoryState(
            u=SpectralField(spec, cu.copy()), t=done * cfg.dt, b=accum[0],
            acc_D2=accum[1], acc_dev=accum[2], acc_mart=accum[3],
            acc_d2norm=accum[4], stream=stream,
        )
        out.append(
            CoupledState(
                u_traj=traj, v=SpectralField(spec, cv.copy()), lam=lam, n_c=n_c,
                acc_kl=accum[7], acc_diff=accum[8], c2=C2, override=override,
            )
        )
    return out


def coupling_bound_rhs(cs: CoupledState, u0_diff_sq: float, C2: float, dt: float) -> float:
    """Pathwise contraction bound with the discretization allowance."""
    L = cs.u_traj.u.spec.period
    t = cs.u_traj.t
    expo = -C2 * t + math.sqrt(L) * cs.u_traj.acc_d2norm
    return (1.0 + 10.0 * dt) * u0_diff_sq * math.exp(min(expo, 700.0))


def diff_norm_sq(cs: CoupledState) -> float:
    return sobolev_norm_sq(cs.u_traj.u - cs.v, 0)
