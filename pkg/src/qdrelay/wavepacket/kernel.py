"""Closed-form temporal densities built from exponential terms.

Every single-photon state a cascade emitter produces here (XX or X,
filtered or not, at any fixed detuning) has a reduced density of the form

    rho(t, t') = sum_j A_j exp(-u_j t - v_j t')        for 0 <= t <= t'

extended to t > t' by Hermiticity. Traces and pairwise traces Tr(rho1 rho2)
are then finite sums, and classical mixtures over detuning (energy jitter)
are just concatenations of terms. This is what the relay model evaluates
inside sweep loops; the grid engine in :mod:`.grid` is its numerical check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..numerics import HBAR, DomainError, TimeGrid, faddeeva
from .grid import X, XX, FilterSpec, TemporalDensity

# The closed forms divide by differences of decay rates. Near a zero they
# are evaluated by interpolating from six neighbours at relative offsets
# +-1, 2, 3 times a step; the stencil is exact for polynomials of degree 5,
# so the error is O(step^6), while the neighbours stay clear of every pole.
# Filter poles cancel to fourth order in the distance (amplitude squared in
# a purity), so they need a wide margin; cascade poles only to second order.
_FILTER_DEGENERACY = 0.025
_FILTER_STEPS = (0.05, 0.04, 0.06, 0.033, 0.075, 0.1)
_CASCADE_DEGENERACY = 1e-3
_CASCADE_STEPS = (0.005, 0.004, 0.006, 0.0033, 0.0075, 0.01)
_STENCIL = ((1, 0.75), (2, -0.3), (3, 0.05))


def _stencil_points(x: float, degenerate, steps) -> list[tuple[float, float]]:
    """(value, weight) pairs interpolating a smooth function of x at x.

    The step is the first of ``steps`` whose points all satisfy ``not degenerate``.
    """
    for step in steps:
        pts = [(x * (1.0 + sign * k * step), w) for k, w in _STENCIL for sign in (1, -1)]
        if not any(degenerate(p) for p, _ in pts):
            return pts
    raise DomainError(f"no regular interpolation stencil around {x:g}")


@dataclass(frozen=True, eq=False)
class ExpKernel:
    amp: np.ndarray
    u: np.ndarray
    v: np.ndarray

    @classmethod
    def concat(cls, kernels, weights=None) -> "ExpKernel":
        kernels = list(kernels)
        if weights is None:
            weights = np.ones(len(kernels))
        return cls(
            np.concatenate([w * k.amp for w, k in zip(weights, kernels)]),
            np.concatenate([k.u for k in kernels]),
            np.concatenate([k.v for k in kernels]),
        )

    @property
    def trace(self) -> float:
        return float(np.sum(self.amp / (self.u + self.v)).real)

    def overlap(self, other: "ExpKernel", detuning: float = 0.0, sigma: float = 0.0) -> float:
        """Tr(self U other U^dagger), unnormalized, U = exp(i Delta t / hbar).

        Delta ~ N(detuning, sigma^2) in µeV. Each term pair contributes
        A1 conj(A2) / (V (U + V)) with only V depending on Delta, and the
        Gaussian average of 1 / (V - i Delta) is a Faddeeva function.
        """
        V = self.v[:, None] + other.v.conj()[None, :] - 1j * detuning / HBAR
        W = self.u[:, None] + other.u.conj()[None, :] + self.v[:, None] + other.v.conj()[None, :]
        if sigma > 0:
            s = sigma / HBAR
            inv_v = math.sqrt(math.pi / 2.0) / s * np.conj(faddeeva(1j * np.conj(V) / (math.sqrt(2.0) * s)))
        else:
            inv_v = 1.0 / V
        terms = self.amp[:, None] * other.amp.conj()[None, :] * inv_v / W
        return float(2.0 * terms.sum().real)

    def purity(self) -> float:
        return self.overlap(self) / self.trace**2

    def evaluate(self, t: np.ndarray, tp: np.ndarray) -> np.ndarray:
        t, tp = np.broadcast_arrays(np.asarray(t, float), np.asarray(tp, float))
        lo, hi = np.minimum(t, tp), np.maximum(t, tp)
        val = np.einsum("j,j...->...", self.amp, np.exp(-np.multiply.outer(self.u, lo) - np.multiply.outer(self.v, hi)))
        return np.where(t <= tp, val, val.conj())

    def sample(self, grid: TimeGrid) -> TemporalDensity:
        """Weighted matrix on ``grid`` (for comparison with the grid engine)."""
        t = grid.times
        rho = self.evaluate(t[:, None], t[None, :])
        sw = np.sqrt(grid.weights)
        return TemporalDensity(grid, sw[:, None] * rho * sw[None, :])


def normalized_overlap(k1: ExpKernel, k2: ExpKernel, detuning: float = 0.0, sigma: float = 0.0) -> float:
    return k1.overlap(k2, detuning, sigma) / (k1.trace * k2.trace)


def _x_amplitude_terms(b: float, nu_x: float, filt: FilterSpec | None):
    """Delay amplitude g(tau) = sum_k c_k exp(-beta_k tau) of the X photon."""
    beta = b + 1j * nu_x
    if filt is None:
        return np.array([1.0 + 0j]), np.array([beta])
    c = filt.field_rate
    gamma = c + 1j * filt.center
    coef = c / (gamma - beta)
    return np.array([coef, -coef]), np.array([beta, gamma])


def _filter_degenerate(b: float, nu_x: float, filt: FilterSpec | None) -> bool:
    if filt is None:
        return False
    gamma = filt.field_rate + 1j * filt.center
    return abs(gamma - (b + 1j * nu_x)) < _FILTER_DEGENERACY * filt.field_rate


def _cascade_degenerate(a: float, rate_sums: np.ndarray) -> bool:
    return bool(np.min(np.abs(2 * a - rate_sums)) < _CASCADE_DEGENERACY * 2 * a)


def photon_kernel(
    T1_XX: float,
    T1_X: float,
    photon: str,
    nu_xx: float = 0.0,
    nu_x: float = 0.0,
    filt: FilterSpec | None = None,
) -> ExpKernel:
    """Reduced density of one cascade photon at fixed detunings.

    nu_xx, nu_x are photon detunings in rad/ps; ``filt`` acts on the X
    photon. The trace equals the filter transmission (1 without filter).
    """
    if T1_XX <= 0 or T1_X <= 0:
        raise DomainError("lifetimes must be positive")
    a, b = 0.5 / T1_XX, 0.5 / T1_X
    if _filter_degenerate(b, nu_x, filt):
        pts = _stencil_points(filt.fwhm, lambda f: _filter_degenerate(b, nu_x, FilterSpec(f, filt.center_detuning)), _FILTER_STEPS)
        return ExpKernel.concat(
            [photon_kernel(T1_XX, T1_X, photon, nu_xx, nu_x, FilterSpec(f, filt.center_detuning)) for f, _ in pts],
            [w for _, w in pts],
        )
    c, beta = _x_amplitude_terms(b, nu_x, filt)
    n2 = 4.0 * a * b
    cc = n2 * c[:, None] * c.conj()[None, :]
    bk = beta[:, None] * np.ones_like(beta)[None, :]
    bl = np.ones_like(beta)[:, None] * beta.conj()[None, :]
    if photon == X:
        D = 2 * a - bk - bl
        if _cascade_degenerate(a, bk + bl):
            pts = _stencil_points(T1_XX, lambda t: _cascade_degenerate(0.5 / t, bk + bl), _CASCADE_STEPS)
            return ExpKernel.concat(
                [photon_kernel(t, T1_X, photon, nu_xx, nu_x, filt) for t, _ in pts], [w for _, w in pts]
            )
        amp = np.concatenate([(cc / D).ravel(), (-cc / D).ravel()])
        u = np.concatenate([bk.ravel(), (2 * a - bl).ravel()])
        v = np.concatenate([bl.ravel(), bl.ravel()])
        return ExpKernel(amp, u, v)
    if photon == XX:
        alpha = a + 1j * (nu_xx + nu_x)
        amp = (cc / (bk + bl)).ravel()
        return ExpKernel(amp, (alpha - bk).ravel(), (np.conj(alpha) + bk).ravel())
    raise DomainError(f"photon must be 'XX' or 'X', got {photon!r}")


def pair_inner_product(
    T1_XX: float, T1_X: float, nu_x_1: float, nu_x_2: float, filt: FilterSpec | None = None
) -> complex:
    """<psi_2|psi_1> for two cascade amplitudes with equal XX+X detuning sum.

    This is the HH-VV coherence between polarization branches whose X photons
    sit at nu_x_1 and nu_x_2 (FSS branches), before normalization.
    """
    a, b = 0.5 / T1_XX, 0.5 / T1_X
    if _filter_degenerate(b, nu_x_1, filt) or _filter_degenerate(b, nu_x_2, filt):
        def bad(f):
            g = FilterSpec(f, filt.center_detuning)
            return _filter_degenerate(b, nu_x_1, g) or _filter_degenerate(b, nu_x_2, g)

        return sum(
            w * pair_inner_product(T1_XX, T1_X, nu_x_1, nu_x_2, FilterSpec(f, filt.center_detuning))
            for f, w in _stencil_points(filt.fwhm, bad, _FILTER_STEPS)
        )
    c1, b1 = _x_amplitude_terms(b, nu_x_1, filt)
    c2, b2 = _x_amplitude_terms(b, nu_x_2, filt)
    g = np.sum(c1[:, None] * c2.conj()[None, :] / (b1[:, None] + b2.conj()[None, :]))
    return complex(4.0 * a * b / (2.0 * a) * g)


@dataclass(frozen=True)
class EmitterModel:
    """Lifetimes (ps), FSS (µeV) and optional X filter of one emitter."""

    T1_XX: float
    T1_X: float
    S: float = 0.0
    filt: FilterSpec | None = None

    def branch_detunings(self, branch: str) -> tuple[float, float]:
        """(XX, X) photon detunings in µeV for polarization branch H or V."""
        half = 0.5 * self.S
        if branch == "H":
            return half, -half
        if branch == "V":
            return -half, half
        raise DomainError(f"branch must be 'H' or 'V', got {branch!r}")

    def density(self, photon: str, branch: str = "H") -> ExpKernel:
        """Unnormalized reduced density of one photon in one FSS branch.

        The trace is the filter transmission of that branch.
        """
        dxx, dx = self.branch_detunings(branch)
        return photon_kernel(self.T1_XX, self.T1_X, photon, dxx / HBAR, dx / HBAR, self.filt)

    def transmission(self) -> float:
        return 0.5 * (self.density(X, "H").trace + self.density(X, "V").trace)

    def polarization_block(self) -> tuple[float, float, complex]:
        """(p_HH, p_VV, rho_HH,VV) of the time-integrated pair state."""
        _, dx_h = self.branch_detunings("H")
        _, dx_v = self.branch_detunings("V")
        xh, xv = dx_h / HBAR, dx_v / HBAR
        nh = pair_inner_product(self.T1_XX, self.T1_X, xh, xh, self.filt).real
        nv = pair_inner_product(self.T1_XX, self.T1_X, xv, xv, self.filt).real
        coh = pair_inner_product(self.T1_XX, self.T1_X, xh, xv, self.filt)
        total = nh + nv
        return nh / total, nv / total, coh / total


def branch_overlap(
    e1: EmitterModel,
    photon1: str,
    e2: EmitterModel,
    photon2: str,
    sigma1: float = 0.0,
    sigma2: float = 0.0,
) -> float:
    """HOM mode overlap M of two photons, averaged over the FSS branches.

    sigma1, sigma2 are the photons' center-energy standard deviations (µeV);
    the relative detuning has variance sigma1^2 + sigma2^2. The branch
    offsets need no extra term: each density already carries its photon's
    detuning as a phase.
    """
    sigma = math.hypot(sigma1, sigma2)
    total = 0.0
    for branch in ("H", "V"):
        total += normalized_overlap(e1.density(photon1, branch), e2.density(photon2, branch), 0.0, sigma)
    return 0.5 * total
