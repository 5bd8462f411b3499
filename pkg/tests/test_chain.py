import math
import warnings

import numpy as np
import pytest

from qdrelay.chain import (
    BSM_XX_X,
    FiberLink,
    QdSource,
    RateParams,
    RelayChain,
    chain_fidelity,
    chain_links,
    chain_pair_rate,
    fold_swaps,
    pair_rate,
)
from qdrelay.formulas import fidelity_max
from qdrelay.numerics import HBAR, DomainError
from qdrelay.states import bell_diagonal, fidelity_to_bell, validity_audit, werner
from qdrelay.wavepacket.grid import FilterSpec

FIG2C_SOURCE = QdSource(S=0.05, delta_E=0.2, P_X=2.0, P_XX=10.0)
FILTER = FilterSpec(4.0)


def fig2c_chain(depth, **kw):
    return RelayChain.homogeneous(depth, kw.pop("source", FIG2C_SOURCE), filter=kw.pop("filter", FILTER), **kw)


def test_single_ideal_source():
    res = chain_fidelity(RelayChain.homogeneous(0, QdSource()))
    assert res.fidelity == pytest.approx(1.0, abs=1e-12)
    assert res.success_prob == 1.0
    assert res.diagnostics.overlaps == []


def test_depth_zero_reproduces_source_fidelity():
    q = QdSource(S=0.4, g2=0.01, P_X=3.0)
    res = chain_fidelity(RelayChain.homogeneous(0, q))
    assert res.fidelity == pytest.approx(fidelity_max(q.spectral), abs=1e-9)


def test_werner_chain_depth_two():
    p = 0.93333
    final, success = fold_swaps([(werner(p), i, i) for i in range(4)], lambda a, b: 1.0)
    assert np.allclose(final.matrix, werner(p**4).matrix, atol=1e-12)
    assert fidelity_to_bell(final) == pytest.approx((3 * p**4 + 1) / 4, abs=1e-12)
    assert p**4 == pytest.approx(0.759, abs=1e-3)
    assert success == pytest.approx(0.125, abs=1e-12)


def test_fold_swaps_needs_power_of_two():
    with pytest.raises(DomainError):
        fold_swaps([(werner(0.5), i, i) for i in range(3)], lambda a, b: 1.0)


def test_fig2c_point_depth_two():
    res = chain_fidelity(fig2c_chain(2))
    assert res.fidelity == pytest.approx(0.93, abs=0.05)
    assert len(res.diagnostics.overlaps) == 2
    assert [len(layer) for layer in res.diagnostics.overlaps] == [2, 1]


def test_fidelity_non_increasing_in_depth():
    prev = math.inf
    for L in range(5):
        f = chain_fidelity(fig2c_chain(L)).fidelity
        assert f <= prev + 1e-12
        prev = f


@pytest.mark.parametrize("depth", [1, 2, 3])
def test_fidelity_non_increasing_in_jitter(depth):
    vals = [
        chain_fidelity(fig2c_chain(depth, source=QdSource(S=0.05, delta_E=d, P_X=2.0, P_XX=10.0))).fidelity
        for d in np.linspace(0, 1.0, 9)
    ]
    assert np.all(np.diff(vals) <= 1e-12)


@pytest.mark.parametrize("depth", [1, 2, 3])
def test_fidelity_non_increasing_in_fss(depth):
    vals = [
        chain_fidelity(fig2c_chain(depth, source=QdSource(S=s, delta_E=0.2, P_X=2.0, P_XX=10.0))).fidelity
        for s in np.linspace(0, 1.0, 9)
    ]
    assert np.all(np.diff(vals) <= 1e-12)


@pytest.mark.parametrize("depth", [1, 2, 3])
def test_success_probability_bound(depth):
    """Bell-diagonal sources with perfect overlap herald with at most 1/2 per BSM."""
    rng = np.random.default_rng(depth)
    pairs = [(bell_diagonal(rng.dirichlet(np.ones(4))), i, i) for i in range(2**depth)]
    _, success = fold_swaps(pairs, lambda a, b: 1.0)
    assert 0 < success <= 0.5 ** (2**depth - 1) + 1e-15

    res = chain_fidelity(RelayChain.homogeneous(depth, QdSource()))
    assert 0 < res.success_prob <= 0.5 ** (2**depth - 1) + 1e-15


def test_success_includes_filter_transmission():
    res = chain_fidelity(fig2c_chain(1))
    t = res.diagnostics.filter_transmissions
    assert len(t) == 2 and all(0 < x < 1 for x in t)
    bsm = math.prod(p for layer in res.diagnostics.bsm_probs for p in layer)
    assert res.success_prob == pytest.approx(bsm * math.prod(t), rel=1e-12)


def test_overlap_drops_when_filter_meets_fss():
    """A filter comparable to the FSS separates the branches."""
    narrow = chain_fidelity(
        fig2c_chain(1, source=QdSource(S=2.0, P_X=2.0, P_XX=10.0), filter=FilterSpec(2.0))
    ).diagnostics.filter_transmissions[0]
    wide = chain_fidelity(
        fig2c_chain(1, source=QdSource(S=0.05, P_X=2.0, P_XX=10.0), filter=FilterSpec(2.0))
    ).diagnostics.filter_transmissions[0]
    assert narrow < wide


def test_xx_x_mode_runs_and_is_valid():
    with validity_audit() as audit:
        res = chain_fidelity(fig2c_chain(2, bsm_mode=BSM_XX_X))
    assert audit.passed
    assert 0.25 <= res.fidelity <= 1.0
    x_x = chain_fidelity(fig2c_chain(2))
    assert res.fidelity != pytest.approx(x_x.fidelity, abs=1e-6)


def test_white_noise_policy():
    res = chain_fidelity(fig2c_chain(2, noise="white"))
    assert 0.25 <= res.fidelity <= 1.0


def test_physical_jitter_convention_is_gentler():
    printed = chain_fidelity(fig2c_chain(2)).fidelity
    physical = chain_fidelity(fig2c_chain(2, jitter_convention="physical")).fidelity
    assert physical > printed


def test_fiber_pmd_lowers_fidelity():
    short = chain_fidelity(fig2c_chain(1, fiber=FiberLink(1.0, pmd_D=0.1))).fidelity
    long = chain_fidelity(fig2c_chain(1, fiber=FiberLink(100.0, pmd_D=5.0))).fidelity
    assert long < short


def test_chain_validation():
    with pytest.raises(DomainError):
        RelayChain(1, (QdSource(),))
    with pytest.raises(DomainError):
        RelayChain(-1, ())
    with pytest.raises(DomainError):
        RelayChain.homogeneous(1, QdSource(), bsm_mode="bogus")
    with pytest.raises(DomainError):
        RelayChain.homogeneous(1, QdSource(), jitter_convention="bogus")
    c = RelayChain.homogeneous(1, QdSource())
    assert c.n_bsm == 1
    assert c.with_depth(3).n_bsm == 7


def test_source_validation_and_warning():
    with pytest.raises(DomainError):
        QdSource(P_X=0.5)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        QdSource(P_X=15.0, P_XX=105.0)
    with pytest.warns(UserWarning):
        QdSource(P_X=16.0)


def test_source_lifetimes_and_linewidth():
    q = QdSource(P_X=2.0, P_XX=10.0)
    assert q.T1_X == 135.0 and q.T1_XX == 12.0
    assert HBAR / QdSource().T1_X == pytest.approx(2.4, abs=0.05)


class TestRate:
    def test_anchor(self):
        assert pair_rate(RateParams(), [], []) == pytest.approx(46.8e6, rel=1e-12)

    def test_zero_length_links(self):
        r = RateParams()
        assert pair_rate(r, [FiberLink(0.0), FiberLink(0.0)], []) == pytest.approx(r.R * r.epsilon * r.eta, rel=1e-15)

    def test_hundred_km_link(self):
        r = RateParams()
        base = pair_rate(r, [FiberLink(0.0)], [])
        far = pair_rate(r, [FiberLink(100.0, attenuation=0.2)], [])
        assert far / base == pytest.approx(1e-2, rel=1e-12)

    def test_more_links_never_help(self):
        r = RateParams()
        rng = np.random.default_rng(5)
        links = []
        prev = pair_rate(r, links, [])
        for _ in range(10):
            links.append(FiberLink(rng.uniform(0, 50)))
            now = pair_rate(r, links, [])
            assert now <= prev
            prev = now

    def test_bsm_probabilities_multiply(self):
        r = RateParams()
        assert pair_rate(r, [], [0.5, 0.5], n_sources=3) == pytest.approx(r.R * (r.epsilon * r.eta) ** 3 / 4)
        with pytest.raises(DomainError):
            pair_rate(r, [], [1.5])

    def test_rate_params_validation(self):
        with pytest.raises(DomainError):
            RateParams(R=0.0)
        with pytest.raises(DomainError):
            RateParams(eta=1.2)

    def test_chain_rate(self):
        c = fig2c_chain(2, fiber=FiberLink(10.0))
        res = chain_fidelity(c)
        assert len(chain_links(c)) == 8
        expected = 80e6 * (0.9 * 0.65) ** 4 * (10 ** -0.2) ** 8 * res.success_prob
        assert chain_pair_rate(c, res, RateParams()) == pytest.approx(expected, rel=1e-12)


def test_fiber_link_validation():
    with pytest.raises(DomainError):
        FiberLink(-1.0)
    with pytest.raises(DomainError):
        FiberLink(1.0, alignment="sideways")
    assert FiberLink(0.0).pair_tau == 0.0
