"""Grid-engine evaluation of the quantities the chain takes from the kernel engine."""

from __future__ import annotations

import math

import numpy as np

from ..numerics import ResolutionError, TimeGrid
from .grid import (
    TAIL_TOLERANCE,
    X,
    XX,
    FilterSpec,
    JointAmplitude,
    TemporalDensity,
    apply_filter,
    cascade_joint_amplitude,
    mode_overlap,
    reduced_density,
)
from .kernel import EmitterModel

MAX_GRID_POINTS = 4096


def grid_for(e: EmitterModel, n_points: int = 1024) -> TimeGrid:
    """Grid long enough for the lifetimes and the filter memory, fine enough for T1."""
    span = 20.0 * max(e.T1_XX, e.T1_X)
    if e.filt is not None:
        span = max(span, -math.log(TAIL_TOLERANCE) / (2.0 * e.filt.field_rate) * 1.05)
    n = max(n_points, int(math.ceil(span / (0.25 * min(e.T1_XX, e.T1_X)))) + 1)
    if n > MAX_GRID_POINTS:
        raise ResolutionError(f"grid cross-check needs {n} points (limit {MAX_GRID_POINTS})")
    return TimeGrid(0.0, span, n)


def branch_density(e: EmitterModel, photon: str, branch: str, grid: TimeGrid) -> TemporalDensity:
    """Normalized density of one photon of one FSS branch, in that photon's own frame.

    Branch detunings enter only through the filter offset; the frame shift
    is returned to the overlap as a relative center.
    """
    j: JointAmplitude = cascade_joint_amplitude(e.T1_XX, e.T1_X, grid)
    if e.filt is not None:
        _, dx = e.branch_detunings(branch)
        f = FilterSpec(e.filt.fwhm, e.filt.center_detuning - dx)
        j, _ = apply_filter(j, f, X)
    return reduced_density(j, photon)


def grid_branch_overlap(
    e1: EmitterModel,
    photon1: str,
    e2: EmitterModel,
    photon2: str,
    delta_E1: float = 0.0,
    delta_E2: float = 0.0,
    convention: str = "printed",
    n_points: int = 1024,
) -> float:
    """Grid counterpart of :func:`kernel.branch_overlap`."""
    grid = grid_for(e1, n_points)
    g2 = grid_for(e2, n_points)
    if g2.span > grid.span or g2.n_points > grid.n_points:
        grid = g2
    total = 0.0
    for branch in ("H", "V"):
        idx1 = 0 if photon1 == XX else 1
        idx2 = 0 if photon2 == XX else 1
        d1 = e1.branch_detunings(branch)[idx1]
        d2 = e2.branch_detunings(branch)[idx2]
        rho1 = branch_density(e1, photon1, branch, grid)
        rho2 = branch_density(e2, photon2, branch, grid)
        total += mode_overlap(rho1, rho2, delta_E1, delta_E2, d1 - d2, convention)
    return 0.5 * total


def grid_transmission(e: EmitterModel, n_points: int = 1024) -> float:
    """Filter transmission of the H-branch X photon computed on the grid."""
    grid = grid_for(e, n_points)
    j = cascade_joint_amplitude(e.T1_XX, e.T1_X, grid)
    if e.filt is None:
        return 1.0
    _, dx = e.branch_detunings("H")
    _, t = apply_filter(j, FilterSpec(e.filt.fwhm, e.filt.center_detuning - dx), X)
    return float(np.real(t))

