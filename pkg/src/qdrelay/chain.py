"""Sources, fiber links and the recursive entanglement-swapping relay chain."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field, replace

from .formulas import ALIGNED_EQUAL, JITTER_PRINTED, WORST_CASE, SourceSpectral, jitter_std, pmd_tau
from .numerics import DomainError
from .states import (
    NOISE_PRODUCT,
    TwoQubitState,
    apply_pmd,
    bsm_swap,
    fidelity_to_bell,
    pair_state,
    pmd_coherence_factor,
)
from .wavepacket.grid import X, XX, FilterSpec
from .wavepacket.kernel import EmitterModel, branch_overlap

BASE_T1_X = 270.0
BASE_T1_XX = 120.0
PURCELL_LIMIT = 15.0

BSM_X_X = "x_x"
BSM_XX_X = "xx_x"


@dataclass(frozen=True)
class QdSource:
    """A quantum-dot pair source.

    Lifetimes are ``base_T1 / P``. An exciton Purcell factor above 15 is
    accepted with a warning, since re-excitation is not modeled. P_XX is
    not bounded: a frequency-selective cavity sets it to a multiple of P_X.
    """

    S: float = 0.0
    g2: float = 0.0
    delta_E: float = 0.0
    P_X: float = 1.0
    P_XX: float = 1.0
    base_T1_X: float = BASE_T1_X
    base_T1_XX: float = BASE_T1_XX
    emission_energy: float = 0.0

    def __post_init__(self):
        if not (self.P_X >= 1 and self.P_XX >= 1):
            raise DomainError(f"Purcell factors must be >= 1, got P_X={self.P_X}, P_XX={self.P_XX}")
        if self.P_X > PURCELL_LIMIT:
            warnings.warn(
                f"Purcell factor above {PURCELL_LIMIT:g} is outside the validity range of the model",
                stacklevel=3,
            )
        self.spectral  # validates the remaining fields

    @property
    def T1_X(self) -> float:
        return self.base_T1_X / self.P_X

    @property
    def T1_XX(self) -> float:
        return self.base_T1_XX / self.P_XX

    @property
    def spectral(self) -> SourceSpectral:
        return SourceSpectral(S=self.S, T1_X=self.T1_X, T1_XX=self.T1_XX, g2=self.g2, delta_E=self.delta_E)

    def emitter(self, filt: FilterSpec | None = None) -> EmitterModel:
        return EmitterModel(self.T1_XX, self.T1_X, self.S, filt)


@dataclass(frozen=True)
class FiberLink:
    """Fiber on one photon path: length (km), loss (dB/km), PMD (ps/sqrt(km))."""

    length: float = 0.0
    attenuation: float = 0.2
    pmd_D: float = 0.1
    alignment: str = WORST_CASE

    def __post_init__(self):
        if min(self.length, self.attenuation, self.pmd_D) < 0:
            raise DomainError("fiber length, attenuation and PMD coefficient must be >= 0")
        if self.alignment not in (WORST_CASE, ALIGNED_EQUAL):
            raise DomainError(f"unknown alignment {self.alignment!r}")

    @property
    def transmission(self) -> float:
        return 10.0 ** (-self.attenuation * self.length / 10.0)

    @property
    def pair_tau(self) -> float:
        """Total differential group delay when both photons of a pair use this fiber."""
        return pmd_tau(self.pmd_D, self.length, self.alignment)


@dataclass(frozen=True)
class RateParams:
    R: float = 80e6
    epsilon: float = 0.9
    eta: float = 0.65

    def __post_init__(self):
        if not self.R > 0:
            raise DomainError(f"excitation rate must be positive, got {self.R}")
        for name in ("epsilon", "eta"):
            if not 0 <= getattr(self, name) <= 1:
                raise DomainError(f"{name} must lie in [0, 1]")


@dataclass(frozen=True)
class RelayChain:
    """Relay chain of depth L: 2^L sources and 2^L - 1 Bell measurements.

    ``fiber`` is the link on every photon path. ``filter`` acts on every X
    photon. ``bsm_mode`` selects which photons meet: ``x_x`` interferes X
    with X at the first layer and the heralded outer XX photons later;
    ``xx_x`` always interferes an XX photon with an X photon.
    """

    depth: int
    sources: tuple[QdSource, ...]
    fiber: FiberLink = field(default_factory=FiberLink)
    filter: FilterSpec | None = None
    bsm_mode: str = BSM_X_X
    jitter_convention: str = JITTER_PRINTED
    noise: str = NOISE_PRODUCT

    def __post_init__(self):
        if int(self.depth) != self.depth or self.depth < 0:
            raise DomainError(f"depth must be a non-negative integer, got {self.depth}")
        object.__setattr__(self, "sources", tuple(self.sources))
        if len(self.sources) != 2**self.depth:
            raise DomainError(f"depth {self.depth} needs {2**self.depth} sources, got {len(self.sources)}")
        if self.bsm_mode not in (BSM_X_X, BSM_XX_X):
            raise DomainError(f"unknown BSM mode {self.bsm_mode!r}")
        jitter_std(0.0, self.jitter_convention)

    @classmethod
    def homogeneous(cls, depth: int, source: QdSource, **kwargs) -> "RelayChain":
        return cls(depth, (source,) * 2**depth, **kwargs)

    @property
    def n_bsm(self) -> int:
        return 2**self.depth - 1

    def with_depth(self, depth: int) -> "RelayChain":
        return replace(self, depth=depth, sources=(self.sources[0],) * 2**depth)


@dataclass(frozen=True)
class Photon:
    """Outer photon of a heralded pair: which source and which cascade line."""

    source: int
    line: str


@dataclass
class ChainDiagnostics:
    source_fidelities: list[float] = field(default_factory=list)
    pmd_factors: list[float] = field(default_factory=list)
    filter_transmissions: list[float] = field(default_factory=list)
    overlaps: list[list[float]] = field(default_factory=list)
    bsm_probs: list[list[float]] = field(default_factory=list)
    stage_fidelities: list[list[float]] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "source_fidelities": self.source_fidelities,
            "pmd_factors": self.pmd_factors,
            "filter_transmissions": self.filter_transmissions,
            "bsm_overlaps": self.overlaps,
            "bsm_success_probs": self.bsm_probs,
            "stage_fidelities": self.stage_fidelities,
        }


@dataclass(frozen=True)
class ChainResult:
    state: TwoQubitState
    fidelity: float
    success_prob: float
    diagnostics: ChainDiagnostics


def source_pair_state(q: QdSource, filt: FilterSpec | None = None) -> TwoQubitState:
    """Time-integrated polarization state of one pair, qubits ordered (XX, X).

    Without a filter the HH-VV coherence is (1 + i x) / 2(1 + x^2),
    x = S T1_X / hbar; with a filter on X it is the overlap of the filtered
    FSS branches.
    """
    p_hh, p_vv, coh = q.emitter(filt).polarization_block()
    return pair_state(p_hh, p_vv, coh, q.g2)


def chain_fidelity(c: RelayChain) -> ChainResult:
    """Fold the chain's Bell measurements layer by layer.

    Each BSM interferes the right outer photon of one heralded pair with the
    left outer photon of its neighbour; its mode overlap M comes from the
    filtered cascade densities of the two emitting sources and their jitter.
    """
    diag = ChainDiagnostics()
    emitters = [q.emitter(c.filter) for q in c.sources]
    T1_pmd = [min(q.T1_X, q.T1_XX) for q in c.sources]
    tau = c.fiber.pair_tau

    pairs = []
    for k, q in enumerate(c.sources):
        st = source_pair_state(q, c.filter)  # (XX, X)
        diag.source_fidelities.append(fidelity_to_bell(st))
        diag.pmd_factors.append(pmd_coherence_factor(tau, T1_pmd[k]))
        st = apply_pmd(st, tau, T1_pmd[k])
        diag.filter_transmissions.append(emitters[k].transmission() if c.filter else 1.0)
        # X photons face the neighbour they interfere with at the first layer.
        if c.bsm_mode == BSM_X_X and k % 2 == 1:
            pairs.append((st.swapped(), Photon(k, X), Photon(k, XX)))
        else:
            pairs.append((st, Photon(k, XX), Photon(k, X)))
    diag.stage_fidelities.append([fidelity_to_bell(p[0]) for p in pairs])

    def overlap(left: Photon, right: Photon) -> float:
        return branch_overlap(
            emitters[left.source],
            left.line,
            emitters[right.source],
            right.line,
            jitter_std(c.sources[left.source].delta_E, c.jitter_convention),
            jitter_std(c.sources[right.source].delta_E, c.jitter_convention),
        )

    final, probs = fold_swaps(pairs, overlap, c.noise, diag)
    success = math.prod(diag.filter_transmissions) * probs
    return ChainResult(final, fidelity_to_bell(final), success, diag)


def fold_swaps(pairs, overlap, noise: str = NOISE_PRODUCT, diag: ChainDiagnostics | None = None):
    """Swap neighbouring pairs until one is left.

    ``pairs`` holds ``(state, left_tag, right_tag)`` triples. ``overlap`` maps
    the right tag of one pair and the left tag of the next to the mode
    overlap M of that Bell measurement. Returns the final state and the
    product of the BSM success probabilities.
    """
    if len(pairs) & (len(pairs) - 1):
        raise DomainError(f"need a power of two of pairs, got {len(pairs)}")
    success = 1.0
    while len(pairs) > 1:
        layer_m, layer_p, nxt = [], [], []
        for (sa, la, ra), (sb, lb, rb) in zip(pairs[0::2], pairs[1::2]):
            M = min(max(overlap(ra, lb), 0.0), 1.0)
            res = bsm_swap(sa, sb, M, noise)
            layer_m.append(M)
            layer_p.append(res.success_prob)
            success *= res.success_prob
            nxt.append((res.state, la, rb))
        pairs = nxt
        if diag is not None:
            diag.overlaps.append(layer_m)
            diag.bsm_probs.append(layer_p)
            diag.stage_fidelities.append([fidelity_to_bell(p[0]) for p in pairs])
    return pairs[0][0], success


def pair_rate(
    r: RateParams,
    links: list[FiberLink],
    bsm_probs: list[float],
    n_sources: int | None = None,
) -> float:
    """End-to-end heralded pair rate in Hz.

    Every source must deliver a pair (R eps eta each, ``n_sources`` defaults
    to one more than the number of BSM factors), every photon path in
    ``links`` attenuates, and every factor in ``bsm_probs`` must succeed.
    """
    for p in bsm_probs:
        if not 0 <= p <= 1:
            raise DomainError(f"probability outside [0, 1]: {p}")
    if n_sources is None:
        n_sources = len(bsm_probs) + 1
    rate = r.R * (r.epsilon * r.eta) ** n_sources
    rate *= math.prod(link.transmission for link in links)
    return rate * math.prod(bsm_probs)


def chain_links(c: RelayChain) -> list[FiberLink]:
    """One fiber per photon path: two per source."""
    return [c.fiber] * (2 * len(c.sources))


def chain_pair_rate(c: RelayChain, result: ChainResult, rate: RateParams) -> float:
    probs = [p for layer in result.diagnostics.bsm_probs for p in layer]
    probs += result.diagnostics.filter_transmissions
    return pair_rate(rate, chain_links(c), probs, n_sources=len(c.sources))
