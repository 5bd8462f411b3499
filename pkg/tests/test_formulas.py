import math

import mpmath
import numpy as np
import pytest

from qdrelay import formulas as fm
from qdrelay.formulas import SourceSpectral
from qdrelay.numerics import FWHM_TO_SIGMA, HBAR, DomainError


def printed_oracle(dE, T1):
    """Literal jitter formula evaluated with mpmath."""
    mpmath.mp.dps = 30
    sigma = mpmath.mpf(dE) / (2 * mpmath.sqrt(2 * mpmath.log(2)))
    y = mpmath.mpf(HBAR) / (2 * mpmath.pi * mpmath.sqrt(2) * sigma * T1)
    w = mpmath.exp(y * y) * mpmath.erfc(y)
    return float(HBAR * w / (mpmath.sqrt(8 * mpmath.pi) * sigma * T1))


def test_fidelity_max_examples():
    assert fm.fidelity_max(SourceSpectral()) == 1.0
    assert fm.fidelity_max(SourceSpectral(S=0.4, T1_X=270.0)) == pytest.approx(0.993402, abs=1e-6)
    assert fm.fidelity_max(SourceSpectral(g2=8e-5)) == pytest.approx(0.99994, abs=1e-6)
    assert fm.fss_phase(0.4, 270.0) == pytest.approx(0.164080, abs=1e-6)


def test_fidelity_max_monotone():
    S = np.linspace(0.0, 5.0, 30)
    vals = [fm.fidelity_max(SourceSpectral(S=s)) for s in S]
    assert np.all(np.diff(vals) < 0)
    vals = [fm.fidelity_max(SourceSpectral(g2=g)) for g in np.linspace(0, 0.9, 10)]
    assert np.all(np.diff(vals) < 0)
    vals = [fm.fidelity_max(SourceSpectral(S=0.3, T1_X=t)) for t in np.linspace(10, 1000, 20)]
    assert np.all(np.diff(vals) < 0)


def test_source_spectral_validation():
    for kwargs in ({"S": -1}, {"T1_X": 0}, {"T1_XX": -3}, {"g2": 1.0}, {"delta_E": -0.1}):
        with pytest.raises(DomainError):
            SourceSpectral(**kwargs)


def test_fidelity_pmd_examples():
    assert fm.fidelity_pmd(0.0, 120.0) == 1.0
    assert fm.fidelity_pmd(2.8284, 120.0) > 0.99
    assert fm.fidelity_pmd(2.8284, 1.0) == pytest.approx(0.793470, abs=1e-6)
    # literal evaluation; a quoted "about 0.98" for T1 = 10 ps does not follow from the formula
    assert fm.fidelity_pmd(2.8284, 10.0) == pytest.approx(0.9954, abs=1e-3)
    with pytest.raises(DomainError):
        fm.fidelity_pmd(-1.0, 1.0)


def test_fidelity_pmd_limits_and_monotone():
    taus = np.linspace(0.0, 500.0, 200)
    vals = np.array([fm.fidelity_pmd(t, 10.0) for t in taus])
    assert np.all(np.diff(vals) <= 0)
    assert fm.fidelity_pmd(1e5, 1.0) == pytest.approx(0.5, abs=1e-12)
    assert np.all((vals > 0.5) & (vals <= 1.0))


def test_pmd_tau():
    assert fm.pmd_tau(0.1, 200.0) == pytest.approx(2.828427, abs=1e-6)
    assert fm.pmd_tau(0.1, 200.0, fm.ALIGNED_EQUAL) == 0.0
    assert fm.pmd_tau(0.0, 50.0) == 0.0
    with pytest.raises(DomainError):
        fm.pmd_tau(-0.1, 1.0)
    with pytest.raises(DomainError):
        fm.pmd_tau(0.1, 1.0, "sideways")


def test_visibility_cascade():
    assert fm.visibility_cascade(120.0, 270.0) == pytest.approx(0.692308, abs=1e-6)
    assert fm.visibility_cascade(55.0, 55.0) == 0.5
    assert fm.visibility_cascade(1e-9, 270.0) == pytest.approx(1.0, abs=1e-9)
    rng = np.random.default_rng(3)
    for a, b in rng.uniform(1, 500, size=(10, 2)):
        assert fm.visibility_cascade(a, b) == pytest.approx(1 - fm.visibility_cascade(b, a), abs=1e-15)
    with pytest.raises(DomainError):
        fm.visibility_cascade(0.0, 1.0)


def test_visibility_jitter_against_oracle():
    assert fm.visibility_jitter(0.0, 270.0) == 1.0
    for dE in (2.0, 4.0, 0.3):
        assert fm.visibility_jitter(dE, 270.0) == pytest.approx(printed_oracle(dE, 270.0), rel=1e-10)
    # the quoted 0.4118 and 0.2405 round the oracle values 0.41168 and 0.24075
    assert fm.visibility_jitter(2.0, 270.0) == pytest.approx(0.4118, abs=2e-4)
    assert fm.visibility_jitter(4.0, 270.0) == pytest.approx(0.2405, abs=5e-4)


def test_visibility_jitter_monotone_and_limits():
    dEs = np.linspace(0.01, 10, 50)
    v = [fm.visibility_jitter(d, 270.0) for d in dEs]
    assert np.all(np.diff(v) < 0)
    v = [fm.visibility_jitter(2.0, t) for t in np.linspace(1, 1000, 50)]
    assert np.all(np.diff(v) < 0)
    assert fm.visibility_jitter(2.0, 1e-4) == pytest.approx(1.0, abs=1e-6)
    with pytest.raises(DomainError):
        fm.visibility_jitter(-1.0, 270.0)


def test_printed_is_angular_at_two_pi():
    for dE in (0.1, 0.7, 3.0):
        assert fm.visibility_jitter(dE, 200.0) == pytest.approx(
            fm.visibility_jitter(2 * math.pi * dE, 200.0, "angular"), rel=1e-12
        )


def test_angular_is_gaussian_average_of_lorentzian():
    from qdrelay.numerics import gaussian_average

    T1, dE = 270.0, 1.0
    sigma = dE * FWHM_TO_SIGMA
    direct = gaussian_average(lambda d: 1.0 / (1.0 + (d * T1 / HBAR) ** 2), sigma, 200)
    assert fm.visibility_jitter(dE, T1, "angular") == pytest.approx(direct, abs=1e-8)


def test_jitter_std_conventions():
    assert fm.jitter_std(2.0, fm.JITTER_PHYSICAL) == pytest.approx(2.0 * FWHM_TO_SIGMA)
    assert fm.jitter_std(2.0) == pytest.approx(math.sqrt(2) * math.pi * 2.0 * FWHM_TO_SIGMA)
    with pytest.raises(DomainError):
        fm.jitter_std(1.0, "other")
    with pytest.raises(DomainError):
        fm.jitter_std(-1.0)
