import math

import mpmath
import numpy as np
import pytest

from qdrelay.numerics import (
    GH_ORDER,
    DomainError,
    TimeGrid,
    faddeeva,
    gaussian_average,
    gaussian_rule,
)


def test_faddeeva_at_zero():
    assert faddeeva(0) == 1.0 + 0j


def test_faddeeva_real_axis_identity():
    for x in np.linspace(0.0, 10.0, 101):
        assert faddeeva(complex(x)).real == pytest.approx(math.exp(-x * x), rel=1e-10, abs=1e-300)
    assert faddeeva(1.0).real == pytest.approx(0.3678794, abs=5e-8)


def test_faddeeva_imaginary_axis_against_mpmath():
    mpmath.mp.dps = 40
    for y in np.linspace(0.0, 10.0, 101):
        ref = mpmath.exp(mpmath.mpf(y) ** 2) * mpmath.erfc(mpmath.mpf(y))
        w = faddeeva(1j * y)
        assert abs(w.imag) < 1e-15
        assert w.real == pytest.approx(float(ref), rel=1e-10)
    assert faddeeva(1j).real == pytest.approx(0.4275836, abs=5e-8)


def test_faddeeva_general_point_against_mpmath():
    mpmath.mp.dps = 40
    for z in (0.3 + 0.7j, 2.0 + 0.1j, 5.0 + 5.0j):
        zm = mpmath.mpc(z.real, z.imag)
        ref = complex(mpmath.exp(-zm * zm) * mpmath.erfc(-1j * zm))
        assert abs(faddeeva(z) - ref) <= 1e-10 * abs(ref)


def test_faddeeva_array_and_errors():
    z = np.array([0.0, 1j, 2.0])
    out = faddeeva(z)
    assert out.shape == (3,)
    assert out[1].real == pytest.approx(0.4275836, abs=5e-8)
    with pytest.raises(DomainError):
        faddeeva(complex(math.inf, 0))
    with pytest.raises(DomainError):
        faddeeva(np.array([math.nan]))


def test_gaussian_average_examples():
    assert gaussian_average(lambda d: np.ones_like(d), 3.7) == pytest.approx(1.0, abs=1e-14)
    assert gaussian_average(lambda d: d**2, 1.0) == pytest.approx(1.0, abs=1e-12)
    exact = math.sqrt(math.pi / 2) * math.exp(0.5) * math.erfc(1 / math.sqrt(2))  # 0.6556795
    assert gaussian_average(lambda d: 1.0 / (1.0 + d**2), 1.0) == pytest.approx(exact, abs=1e-6)


def test_gaussian_average_zero_sigma_is_exact():
    calls = []

    def f(d):
        calls.append(d)
        return 2.5

    assert gaussian_average(f, 0.0) == 2.5
    assert calls == [0.0]


def test_gaussian_average_negative_sigma():
    with pytest.raises(DomainError):
        gaussian_average(lambda d: d, -1.0)


def test_gaussian_average_polynomial_exactness():
    # 64 Gauss-Hermite nodes integrate degree <= 127 exactly; even moments are (k-1)!!
    for k in (2, 4, 8, 16):
        expected = math.prod(range(k - 1, 0, -2))
        assert gaussian_average(lambda d: d**k, 1.0) == pytest.approx(expected, rel=1e-10)


def test_gaussian_average_linear_in_f():
    f = lambda d: np.cos(d)  # noqa: E731
    g = lambda d: d**2 * np.exp(-d * d)  # noqa: E731
    lhs = gaussian_average(lambda d: 2 * f(d) - 3 * g(d), 0.8)
    assert lhs == pytest.approx(2 * gaussian_average(f, 0.8) - 3 * gaussian_average(g, 0.8), abs=1e-14)


def test_gaussian_average_order_doubling():
    # Documented convergence check for the fixed 64-node rule on a smooth integrand
    f = lambda d: 1.0 / (1.0 + d**2)  # noqa: E731
    a = gaussian_average(f, 1.0, GH_ORDER)
    b = gaussian_average(f, 1.0, 2 * GH_ORDER)
    assert abs(a - b) < 1e-6


def test_gaussian_average_scalar_only_function():
    assert gaussian_average(lambda d: math.cos(d), 1.0) == pytest.approx(math.exp(-0.5), abs=1e-12)


def test_gaussian_rule_weights_sum_to_one():
    for order in (8, 64, 256, 400):
        x, w = gaussian_rule(2.0, order)
        assert w.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.dot(w, x**2) == pytest.approx(4.0, rel=1e-6)


def test_time_grid():
    g = TimeGrid(0.0, 100.0, 101)
    assert g.spacing == 1.0
    assert g.weights.sum() == pytest.approx(100.0)
    assert g.refined().n_points == 201
    assert TimeGrid.for_lifetimes(120.0, 270.0).t_max == 5400.0
    with pytest.raises(DomainError):
        TimeGrid(0.0, 1.0, 10)
    with pytest.raises(DomainError):
        TimeGrid(1.0, 1.0, 100)
