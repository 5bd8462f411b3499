"""Discretized temporal-mode numerics on a uniform time grid.

A joint amplitude psi(t_XX, t_X) is stored as continuous samples on
``grid x grid``. Integrals use trapezoid weights; samples on the jump
t_X = t_XX carry half the one-sided limit so the rule stays second order.

Products of two amplitudes that share the jump (norm, diagonal of a
reduced density) need the full one-sided limit at the half weight. That
missing weight is kept as a second block of coefficients, ``residual``,
orthogonal to the main one: it starts diagonal, enters norms and reduced
densities like the main block, and is carried along by unitaries acting on
one photon, so dispersion stays exactly norm and purity preserving.

Reduced states are stored as weighted matrices R_jk = sqrt(w_j) rho(t_j, t_k) sqrt(w_k),
which makes trace, purity and overlaps plain matrix operations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from ..formulas import jitter_std
from ..numerics import (
    HBAR,
    DomainError,
    ResolutionError,
    TimeGrid,
)

XX = "XX"
X = "X"

TAIL_TOLERANCE = 1e-6


@dataclass(frozen=True)
class FilterSpec:
    """Lorentzian spectral filter: intensity FWHM and center offset (µeV)."""

    fwhm: float
    center_detuning: float = 0.0

    def __post_init__(self):
        if not self.fwhm > 0:
            raise DomainError(f"filter fwhm must be > 0, got {self.fwhm}")

    @property
    def field_rate(self) -> float:
        """Amplitude decay rate of the impulse response (1/ps)."""
        return self.fwhm / (2.0 * HBAR)

    @property
    def center(self) -> float:
        return self.center_detuning / HBAR


@dataclass(frozen=True)
class DispersionSpec:
    """Quadratic spectral phase; beta2_l is GDD (ps^2), already times length."""

    beta2_l: float = 0.0

    def __post_init__(self):
        if not math.isfinite(self.beta2_l):
            raise DomainError("beta2_l must be finite")


@dataclass(frozen=True, eq=False)
class JointAmplitude:
    grid: TimeGrid
    values: np.ndarray  # values[i, j] = psi(t_XX = t_i, t_X = t_j)
    residual: np.ndarray | None = None  # coefficient block; 1-D means diagonal

    @property
    def coefficients(self) -> np.ndarray:
        sw = np.sqrt(self.grid.weights)
        return sw[:, None] * self.values * sw[None, :]

    def residual_matrix(self) -> np.ndarray | None:
        if self.residual is None or self.residual.ndim == 2:
            return self.residual
        return np.diag(self.residual)

    @property
    def norm(self) -> float:
        extra = 0.0 if self.residual is None else float(np.sum(np.abs(self.residual) ** 2))
        return float(np.sum(np.abs(self.coefficients) ** 2)) + extra

    def normalized(self) -> "JointAmplitude":
        scale = 1.0 / math.sqrt(self.norm)
        res = None if self.residual is None else self.residual * scale
        return JointAmplitude(self.grid, self.values * scale, res)


@dataclass(frozen=True, eq=False)
class TemporalDensity:
    grid: TimeGrid
    matrix: np.ndarray

    @property
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix).min())

    def samples(self) -> np.ndarray:
        """rho(t_j, t_k) as continuous samples."""
        sw = np.sqrt(self.grid.weights)
        return self.matrix / (sw[:, None] * sw[None, :])


def _axis(photon: str) -> int:
    if photon == XX:
        return 0
    if photon == X:
        return 1
    raise DomainError(f"photon must be 'XX' or 'X', got {photon!r}")


def _check_lifetime_span(grid: TimeGrid, T1_XX: float, T1_X: float):
    if T1_XX <= 0 or T1_X <= 0:
        raise DomainError("lifetimes must be positive")
    if grid.t_min > 0:
        raise ResolutionError("grid must start at or before the excitation time 0")
    # X detection time is the sum of two exponential delays
    T = grid.t_max
    a, b = 1.0 / T1_XX, 1.0 / T1_X
    if abs(a - b) < 1e-12 * max(a, b):
        tail = (1.0 + a * T) * math.exp(-a * T)
    else:
        tail = (a * math.exp(-b * T) - b * math.exp(-a * T)) / (a - b)
    if tail > TAIL_TOLERANCE:
        raise ResolutionError(
            f"grid span {grid.span:.4g} ps leaves tail mass {tail:.2e} > {TAIL_TOLERANCE:g}"
        )
    if grid.spacing > 0.25 * min(T1_XX, T1_X):
        raise ResolutionError(
            f"grid spacing {grid.spacing:.4g} ps too coarse for lifetime {min(T1_XX, T1_X):g} ps"
        )


def cascade_joint_amplitude(T1_XX: float, T1_X: float, grid: TimeGrid | None = None) -> JointAmplitude:
    """Normalized XX-X cascade amplitude on ``grid``.

    psi(t1, t2) ~ exp(-t1 / 2 T1_XX) exp(-(t2 - t1) / 2 T1_X) for t2 >= t1 >= 0.
    """
    if grid is None:
        grid = TimeGrid.for_lifetimes(T1_XX, T1_X)
    _check_lifetime_span(grid, T1_XX, T1_X)
    t = grid.times
    t1 = t[:, None]
    t2 = t[None, :]
    tau = np.where(t2 >= t1, t2 - t1, 0.0)
    values = np.exp(-0.5 * np.clip(t1, 0, None) / T1_XX - 0.5 * tau / T1_X).astype(complex)
    values[(t2 < t1) | (t1 < 0)] = 0.0
    np.fill_diagonal(values, 0.5 * np.diag(values))
    # half of the one-sided limit at the jump is missing from |psi|^2 sums
    residual = np.sqrt(grid.weights * grid.spacing) * np.abs(np.diag(values))
    return JointAmplitude(grid, values, residual.astype(complex)).normalized()


def product_amplitude(grid: TimeGrid, f_xx: np.ndarray, f_x: np.ndarray) -> JointAmplitude:
    """Separable amplitude f_xx(t1) f_x(t2), normalized."""
    values = np.outer(np.asarray(f_xx, dtype=complex), np.asarray(f_x, dtype=complex))
    return JointAmplitude(grid, values).normalized()


def exponential_packet(grid: TimeGrid, T1: float, detuning: float = 0.0) -> np.ndarray:
    """Samples of a single-photon exponential packet starting at t = 0."""
    t = grid.times
    f = np.where(t >= 0, np.exp(-0.5 * np.clip(t, 0, None) / T1 - 1j * detuning / HBAR * t), 0.0)
    zero = np.flatnonzero(np.isclose(t, 0.0, atol=1e-12 * grid.span))
    if zero.size and zero[0] > 0:
        f[zero[0]] *= 0.5
    return f


def reduced_density(j: JointAmplitude, which: str) -> TemporalDensity:
    """Partial trace over the partner photon's time coordinate."""
    B = j.coefficients
    x_axis = _axis(which) == 1
    R = B.T @ B.conj() if x_axis else B @ B.conj().T
    if j.residual is not None and j.residual.ndim == 1:
        R[np.diag_indices_from(R)] += np.abs(j.residual) ** 2
    elif j.residual is not None:
        C = j.residual
        R += C.T @ C.conj() if x_axis else C @ C.conj().T
    R = 0.5 * (R + R.conj().T)
    return TemporalDensity(j.grid, R / np.trace(R).real)


def purity(rho: TemporalDensity) -> float:
    """Tr(rho^2)."""
    return float(np.sum(np.abs(rho.matrix) ** 2) / rho.trace**2)


def maximally_mixed(grid: TimeGrid, modes: int) -> TemporalDensity:
    """Equal mixture of the first ``modes`` grid modes (test helper)."""
    diag = np.zeros(grid.n_points)
    diag[:modes] = 1.0 / modes
    return TemporalDensity(grid, np.diag(diag).astype(complex))


def apply_filter(j: JointAmplitude, f: FilterSpec, photon: str = X) -> tuple[JointAmplitude, float]:
    """Pass one photon through a Lorentzian filter.

    The selected time coordinate is convolved with the causal field response
    h(t) = c exp(-(c + i nu) t), c = fwhm / 2 hbar, nu = center / hbar. Returns the
    renormalized amplitude and the transmitted probability.
    """
    axis = _axis(photon)
    grid = j.grid
    c, nu = f.field_rate, f.center
    h = grid.spacing
    if c * h > 0.5:
        raise ResolutionError(f"grid spacing {h:.4g} ps cannot resolve filter fwhm {f.fwhm:g} µeV")
    if math.exp(-2.0 * c * grid.span) > TAIL_TOLERANCE:
        raise ResolutionError(f"grid span {grid.span:.4g} ps too short for filter fwhm {f.fwhm:g} µeV")
    lag = np.arange(grid.n_points) * h
    kernel = c * np.exp(-(c + 1j * nu) * lag)
    kernel[0] *= 0.5
    w = grid.weights
    if axis == 1:
        out = fftconvolve(j.values * w[None, :], kernel[None, :], axes=1)[:, : grid.n_points]
    else:
        out = fftconvolve(j.values * w[:, None], kernel[:, None], axes=0)[: grid.n_points, :]
    filtered = JointAmplitude(grid, out)
    transmission = filtered.norm / j.norm
    return filtered.normalized(), float(transmission)


def apply_dispersion(j: JointAmplitude, d: DispersionSpec, photon: str = X) -> JointAmplitude:
    """Quadratic spectral phase exp(i beta2_l w^2 / 2) on one photon.

    Applied as a discrete unitary on the weighted coefficients, so norm and
    purity are preserved to rounding.
    """
    axis = _axis(photon)
    if d.beta2_l == 0:
        return j
    grid = j.grid
    w = grid.angular_frequencies
    if abs(d.beta2_l) * np.max(np.abs(w)) > 0.5 * grid.span:
        raise ResolutionError("dispersive delay spread exceeds half the grid span")
    phase = np.exp(0.5j * d.beta2_l * w**2).reshape((-1, 1) if axis == 0 else (1, -1))

    def unitary(M):
        return np.fft.ifft(np.fft.fft(M, axis=axis) * phase, axis=axis)

    B = unitary(j.coefficients)
    C = j.residual_matrix()
    sw = np.sqrt(grid.weights)
    return JointAmplitude(grid, B / (sw[:, None] * sw[None, :]), None if C is None else unitary(C))


def lag_sums(rho1: TemporalDensity, rho2: TemporalDensity) -> np.ndarray:
    """s[k] = sum_j rho1[j, j+k] rho2[j+k, j], lags k = -(n-1) .. n-1."""
    P = rho1.matrix * rho2.matrix.T
    n = P.shape[0]
    return np.array([np.trace(P, offset=k) for k in range(-(n - 1), n)])


def mode_overlap(
    rho1: TemporalDensity,
    rho2: TemporalDensity,
    delta_E1: float = 0.0,
    delta_E2: float = 0.0,
    relative_center: float = 0.0,
    convention: str = "physical",
) -> float:
    """Jitter-averaged two-photon overlap M = <Tr(rho1 U rho2 U^dagger)>.

    U = exp(i Delta t / hbar) is the relative detuning phase. The detuning
    is Gaussian with mean ``relative_center`` and variance sigma1^2 + sigma2^2,
    where sigma_k follows from the FWHM delta_E_k (µeV) under ``convention``
    (see :func:`qdrelay.formulas.jitter_std`).
    """
    if rho1.grid != rho2.grid:
        raise DomainError("densities live on different grids")
    if delta_E1 < 0 or delta_E2 < 0:
        raise DomainError("jitter widths must be >= 0")
    s = lag_sums(rho1, rho2) / (rho1.trace * rho2.trace)
    n = rho1.grid.n_points
    lags = np.arange(-(n - 1), n) * rho1.grid.spacing / HBAR
    sigma = math.hypot(jitter_std(delta_E1, convention), jitter_std(delta_E2, convention))
    # The Gaussian average of exp(i Delta tau) is its characteristic function,
    # so the jitter integral is exact here; fixed-order Gauss-Hermite loses
    # accuracy once sigma is several linewidths wide.
    phase = np.exp(1j * relative_center * lags - 0.5 * (sigma * lags) ** 2)
    return float(np.real(phase @ s))
