"""Degenerate additive forcing: finitely many driven directions.

The forcing is a linear map sigma from R^M into the field space, given by M
fixed fields.  The key derived quantities are the largest projection index
whose whole band lies in the forcing range, the minimal-norm inverse on that
band, and its operator norm.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .spectral import SpectralField, sobolev_norm_sq, zero_field


class NotInRangeError(ValueError):
    """Raised when a field cannot be produced by the forcing."""


RANGE_TOL = 1e-9


def _embed(coeffs: np.ndarray, n_modes: int) -> np.ndarray:
    """Isometric real vector of a coefficient array: ||vec||_2 = H-norm."""
    v = np.zeros(2 * n_modes)
    k = coeffs.size
    v[:k] = np.sqrt(2.0) * coeffs.real
    v[n_modes : n_modes + k] = np.sqrt(2.0) * coeffs.imag
    return v


@dataclass(frozen=True)
class ForcingOperator:
    """M forcing fields sharing one torus."""

    columns: tuple[SpectralField, ...]
    range_N: int = field(init=False)
    hs_norm_sq: float = field(init=False)

    def __post_init__(self):
        if len(self.columns) < 1:
            raise ValueError("need at least one forcing field")
        spec = self.columns[0].spec
        for col in self.columns:
            if col.spec.period != spec.period:
                raise ValueError("forcing fields must share one period")
            if sobolev_norm_sq(col) == 0.0:
                raise ValueError("forcing fields must be nonzero")
        n_modes = max(col.n_modes for col in self.columns)
        A = np.column_stack([_embed(col.coeffs, n_modes) for col in self.columns])
        pinv = np.linalg.pinv(A, rcond=1e-12)
        object.__setattr__(self, "_n_modes", n_modes)
        object.__setattr__(self, "_matrix", A)
        object.__setattr__(self, "_pinv", pinv)
        object.__setattr__(self, "range_N", self._compute_range_n())
        object.__setattr__(
            self, "hs_norm_sq", float(sum(sobolev_norm_sq(c) for c in self.columns))
        )

    @property
    def spec(self):
        return self.columns[0].spec

    @property
    def dim(self) -> int:
        return len(self.columns)

    def _mode_rows(self, N: int) -> np.ndarray:
        n = self._n_modes
        idx = np.concatenate([np.arange(N), n + np.arange(N)])
        return idx

    def _compute_range_n(self) -> int:
        """Largest N with every mode |k| <= N reachable by the forcing."""
        A, pinv = self._matrix, self._pinv
        proj = A @ pinv  # orthogonal projector onto the range
        n = self._n_modes
        N = 0
        for k in range(1, n + 1):
            ok = True
            for row in (k - 1, n + k - 1):  # cosine-like and sine-like parts
                e = np.zeros(2 * n)
                e[row] = 1.0
                if np.linalg.norm(proj @ e - e) > RANGE_TOL:
                    ok = False
                    break
            if not ok:
                break
            N = k
        return N

    def hs_norm_sq_doubled(self) -> float:
        """Squared Hilbert-Schmidt norm with columns seen on the doubled torus."""
        return 2.0 * self.hs_norm_sq


@dataclass
class NoiseStream:
    """Counter-based Gaussian stream for one trajectory.

    Identical (seed, stream_id) always reproduce the same increments, no
    matter how trajectories are scheduled across workers.
    """

    seed: int
    stream_id: int
    dim: int
    counter: int = 0

    def __post_init__(self):
        key = np.array([self.seed, self.stream_id], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))
        if self.counter:
            self._gen.standard_normal((self.counter, self.dim))

    def clone(self) -> "NoiseStream":
        return NoiseStream(self.seed, self.stream_id, self.dim, self.counter)


def sample_increment(stream: NoiseStream, dt: float) -> np.ndarray:
    """One Brownian increment: dim independent N(0, dt) components."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    z = stream._gen.standard_normal(stream.dim)
    stream.counter += 1
    if dt == 0.0:
        return np.zeros(stream.dim)
    return np.sqrt(dt) * z


def sample_increment_block(stream: NoiseStream, dt: float, n_steps: int) -> np.ndarray:
    """(n_steps, dim) block equal to n_steps successive sample_increment calls."""
    if dt < 0:
        raise ValueError("dt must be nonnegative")
    z = stream._gen.standard_normal((n_steps, stream.dim))
    stream.counter += n_steps
    if dt == 0.0:
        return np.zeros((n_steps, stream.dim))
    return np.sqrt(dt) * z


def apply_sigma(f: ForcingOperator, w: np.ndarray) -> SpectralField:
    """The field sum_j w_j sigma_j."""
    w = np.asarray(w, dtype=np.float64)
    if w.shape != (f.dim,):
        raise ValueError(f"weight vector must have length {f.dim}")
    n = f._n_modes
    c = np.zeros(n, dtype=np.complex128)
    for wj, col in zip(w, f.columns):
        c[: col.n_modes] += wj * col.coeffs
    return SpectralField(f.spec, c)


def sigma_inverse(f: ForcingOperator, g: SpectralField) -> np.ndarray:
    """Minimal-norm w with apply_sigma(f, w) = g.

    Raises NotInRangeError when g is not (numerically) in the forcing range.
    """
    if g.spec.period != f.spec.period:
        raise ValueError("period mismatch between forcing and field")
    n = f._n_modes
    gnorm = np.sqrt(sobolev_norm_sq(g))
    if gnorm == 0.0:
        return np.zeros(f.dim)
    tail_sq = 0.0
    if g.n_modes > n:
        tail = g.coeffs[n:]
        tail_sq = 2.0 * float(np.sum(tail.real**2 + tail.imag**2))
    vec = _embed(g.coeffs[:n], n)
    w = f._pinv @ vec
    resid_sq = float(np.sum((f._matrix @ w - vec) ** 2)) + tail_sq
    if np.sqrt(resid_sq) > RANGE_TOL * max(1.0, gnorm):
        raise NotInRangeError(
            f"field is outside the forcing range (relative residual "
            f"{np.sqrt(resid_sq) / gnorm:.3e})"
        )
    return w


def operator_norm_inverse(f: ForcingOperator, N: int | None = None) -> float:
    """Operator norm of the minimal-norm inverse restricted to modes <= N."""
    N = f.range_N if N is None else N
    if N == 0:
        return 0.0
    if N > f.range_N:
        raise NotInRangeError(f"modes up to {N} are not all forced (range {f.range_N})")
    B = f._pinv[:, f._mode_rows(min(N, f._n_modes))]
    return float(np.linalg.svd(B, compute_uv=False)[0])


def sub_inverse_matrix(f: ForcingOperator, N: int) -> np.ndarray:
    """Matrix taking the isometric vector of a band-N field to its preimage.

    Used by the stepping kernels to price the coupling shift.
    """
    if N > f.range_N:
        raise NotInRangeError(f"modes up to {N} are not all forced (range {f.range_N})")
    return np.ascontiguousarray(f._pinv[:, f._mode_rows(N)])


def default_forcing(spec, max_mode: int = 4, amplitude: float = 0.5) -> ForcingOperator:
    """sin and cos forcing on every mode up to max_mode, equal amplitudes."""
    from .spectral import from_sin_cos

    cols = []
    for k in range(1, max_mode + 1):
        cols.append(from_sin_cos(spec, k, sin_amp=amplitude))
        cols.append(from_sin_cos(spec, k, cos_amp=amplitude))
    return ForcingOperator(tuple(cols))
