"""Special functions, quadrature rules and time grids.

Units are fixed package-wide: energies in µeV, times in ps, angular
frequencies in rad/ps (energy / HBAR).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from numpy.polynomial.hermite import hermgauss
from scipy.special import wofz

HBAR = 658.2119569  # µeV·ps
FWHM_TO_SIGMA = 1.0 / (2.0 * math.sqrt(2.0 * math.log(2.0)))

GH_ORDER = 64
_GH_MAX_ORDER = 256


class DomainError(ValueError):
    """Input outside the mathematical domain of an operation."""


class ResolutionError(ValueError):
    """Discretization too coarse or too short for the requested physics."""


@dataclass(frozen=True)
class TimeGrid:
    """Uniform grid on [t_min, t_max] (ps) with ``n_points`` nodes."""

    t_min: float
    t_max: float
    n_points: int

    def __post_init__(self):
        if int(self.n_points) != self.n_points or self.n_points < 64:
            raise DomainError(f"n_points must be an integer >= 64, got {self.n_points}")
        if not (math.isfinite(self.t_min) and math.isfinite(self.t_max)):
            raise DomainError("grid bounds must be finite")
        if self.t_max <= self.t_min:
            raise DomainError("t_max must exceed t_min")

    @classmethod
    def for_lifetimes(cls, *lifetimes: float, n_points: int = 1024, span_factor: float = 20.0):
        """Default grid: [0, span_factor * longest lifetime]."""
        return cls(0.0, span_factor * max(lifetimes), n_points)

    @property
    def spacing(self) -> float:
        return (self.t_max - self.t_min) / (self.n_points - 1)

    @property
    def span(self) -> float:
        return self.t_max - self.t_min

    @property
    def times(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, self.n_points)

    @property
    def weights(self) -> np.ndarray:
        """Trapezoid quadrature weights."""
        w = np.full(self.n_points, self.spacing)
        w[0] = w[-1] = 0.5 * self.spacing
        return w

    @property
    def angular_frequencies(self) -> np.ndarray:
        """DFT angular frequencies (rad/ps) conjugate to the grid."""
        return 2.0 * np.pi * np.fft.fftfreq(self.n_points, self.spacing)

    def refined(self, factor: int = 2) -> "TimeGrid":
        return TimeGrid(self.t_min, self.t_max, factor * (self.n_points - 1) + 1)


def _check_finite(z) -> complex:
    z = complex(z)
    if not (math.isfinite(z.real) and math.isfinite(z.imag)):
        raise DomainError(f"non-finite argument {z!r}")
    return z


def faddeeva(z) -> complex:
    """Faddeeva function w(z) = exp(-z^2) erfc(-iz).

    Accepts a scalar or an array; arrays are evaluated elementwise.
    """
    if np.ndim(z):
        z = np.asarray(z, dtype=complex)
        if not np.all(np.isfinite(z)):
            raise DomainError("non-finite argument in array")
        return wofz(z)
    return complex(wofz(_check_finite(z)))


@lru_cache(maxsize=None)
def _hermgauss(order: int):
    x, w = hermgauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gaussian_rule(sigma: float, order: int = GH_ORDER) -> tuple[np.ndarray, np.ndarray]:
    """Nodes and weights for averages over N(0, sigma^2); weights sum to 1.

    Gauss–Hermite up to order 256. Larger orders switch to a trapezoid rule
    over ±9 sigma with the same node count, which stays stable where the
    Hermite weights underflow.
    """
    if sigma < 0 or not math.isfinite(sigma):
        raise DomainError(f"sigma must be finite and >= 0, got {sigma}")
    if sigma == 0:
        return np.zeros(1), np.ones(1)
    if order <= _GH_MAX_ORDER:
        x, w = _hermgauss(order)
        return math.sqrt(2.0) * sigma * x, w / math.sqrt(math.pi)
    nodes = np.linspace(-9.0 * sigma, 9.0 * sigma, order)
    w = np.exp(-0.5 * (nodes / sigma) ** 2)
    return nodes, w / w.sum()


def gaussian_average(f, sigma: float, order: int = GH_ORDER) -> float:
    """Average of ``f(delta)`` over a zero-mean Gaussian of width ``sigma``.

    ``f`` may be vectorized; it is called once with the full node array and
    falls back to per-node calls if that fails. sigma = 0 returns f(0).
    """
    if sigma < 0 or not math.isfinite(sigma):
        raise DomainError(f"sigma must be finite and >= 0, got {sigma}")
    if sigma == 0:
        return float(np.real(f(0.0)))
    nodes, weights = gaussian_rule(sigma, order)
    try:
        values = np.asarray(f(nodes), dtype=float)
        if values.shape != nodes.shape:
            raise ValueError
    except (TypeError, ValueError):
        values = np.array([float(f(x)) for x in nodes])
    return float(np.dot(weights, values))
