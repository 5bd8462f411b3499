"""Closed-form figures of merit for cascade photon-pair sources.

These are used directly by the relay model and as oracles for the
numerical wave-packet engine.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .numerics import FWHM_TO_SIGMA, HBAR, DomainError, faddeeva

WORST_CASE = "worst_case"
ALIGNED_EQUAL = "aligned_equal"


@dataclass(frozen=True)
class SourceSpectral:
    """Spectral/temporal parameters of one emitter.

    S: fine-structure splitting (µeV); T1_X, T1_XX: radiative lifetimes (ps);
    g2: multi-photon emission probability; delta_E: jitter FWHM (µeV).
    """

    S: float = 0.0
    T1_X: float = 270.0
    T1_XX: float = 120.0
    g2: float = 0.0
    delta_E: float = 0.0

    def __post_init__(self):
        if not self.S >= 0:
            raise DomainError(f"S must be >= 0, got {self.S}")
        if not (self.T1_X > 0 and self.T1_XX > 0):
            raise DomainError("lifetimes must be positive")
        if not 0 <= self.g2 < 1:
            raise DomainError(f"g2 must lie in [0, 1), got {self.g2}")
        if not self.delta_E >= 0:
            raise DomainError(f"delta_E must be >= 0, got {self.delta_E}")


def fss_phase(S: float, T1_X: float) -> float:
    """Dimensionless precession S*T1_X/hbar accumulated over one X lifetime."""
    return S * T1_X / HBAR


def fidelity_max(src: SourceSpectral) -> float:
    """Maximum fidelity to phi+ limited by FSS, X lifetime and g2."""
    x = fss_phase(src.S, src.T1_X)
    g2 = src.g2
    return 0.25 * (2.0 - g2 + 2.0 * (1.0 - g2) / math.sqrt(1.0 + x * x))


def fidelity_pmd(tau: float, T1: float) -> float:
    """Fidelity to phi+ after a total differential group delay ``tau``."""
    if tau < 0:
        raise DomainError(f"tau must be >= 0, got {tau}")
    if T1 <= 0:
        raise DomainError(f"T1 must be positive, got {T1}")
    r = tau / (2.0 * T1)
    return 0.5 + 0.5 * (1.0 + r) * math.exp(-r)


def pmd_tau(D: float, l: float, mode: str = WORST_CASE) -> float:
    """Total PMD delay for two fibers of length ``l`` (km) each.

    worst_case: the drifts add, tau = 2 D sqrt(l).
    aligned_equal: inputs aligned to the principal states, equal drifts cancel.
    """
    if D < 0 or l < 0:
        raise DomainError("D and l must be >= 0")
    if mode == WORST_CASE:
        return 2.0 * D * math.sqrt(l)
    if mode == ALIGNED_EQUAL:
        return 0.0
    raise DomainError(f"unknown PMD mode {mode!r}")


def visibility_cascade(T1_XX: float, T1_X: float) -> float:
    """HOM visibility ceiling from XX-X decay-time correlation."""
    if T1_XX <= 0 or T1_X <= 0:
        raise DomainError("lifetimes must be positive")
    return 1.0 / (1.0 + T1_XX / T1_X)


def visibility_jitter(delta_E: float, T1: float, convention: str = "printed") -> float:
    """HOM visibility of two exponential photons under Gaussian energy jitter.

    ``convention="printed"`` evaluates

        V = hbar Re w(z) / (sqrt(8 pi) sigma T1),   z = i hbar / (2 pi sqrt(2) sigma T1)

    with sigma = delta_E / (2 sqrt(2 ln 2)).

    ``convention="angular"`` is the Gaussian average of the Lorentzian
    overlap 1 / (1 + (Delta T1 / hbar)^2) over a relative detuning of
    standard deviation sigma:

        V = sqrt(pi/2) hbar Re w(z) / (sigma T1),  z = i hbar / (sqrt(2) sigma T1)

    The two coincide when the printed sigma is replaced by 2 pi sigma, i.e.
    printed(dE) == angular(2 pi dE).
    """
    if delta_E < 0:
        raise DomainError(f"delta_E must be >= 0, got {delta_E}")
    if T1 <= 0:
        raise DomainError(f"T1 must be positive, got {T1}")
    if delta_E == 0:
        return 1.0
    sigma = delta_E * FWHM_TO_SIGMA
    if convention == "printed":
        z = 1j * HBAR / (2.0 * math.pi * math.sqrt(2.0) * sigma * T1)
        return HBAR * faddeeva(z).real / (math.sqrt(8.0 * math.pi) * sigma * T1)
    if convention == "angular":
        z = 1j * HBAR / (math.sqrt(2.0) * sigma * T1)
        return math.sqrt(math.pi / 2.0) * HBAR * faddeeva(z).real / (sigma * T1)
    raise DomainError(f"unknown convention {convention!r}")


JITTER_PRINTED = "printed"
JITTER_PHYSICAL = "physical"


def jitter_std(delta_E: float, convention: str = JITTER_PRINTED) -> float:
    """Per-photon center-energy standard deviation (µeV) for jitter FWHM ``delta_E``.

    ``physical`` reads delta_E as the FWHM of each photon's own Gaussian.
    ``printed`` scales it so that two independently jittering photons
    reproduce ``visibility_jitter(delta_E, T1, "printed")``: their relative
    detuning then has standard deviation 2 pi sigma, which is how the 2 pi
    inside z of the printed formula enters the physical overlap integral.
    """
    if not delta_E >= 0:
        raise DomainError(f"delta_E must be >= 0, got {delta_E}")
    sigma = delta_E * FWHM_TO_SIGMA
    if convention == JITTER_PHYSICAL:
        return sigma
    if convention == JITTER_PRINTED:
        return math.sqrt(2.0) * math.pi * sigma
    raise DomainError(f"unknown jitter convention {convention!r}")
