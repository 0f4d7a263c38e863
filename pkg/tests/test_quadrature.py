from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from chiral_eq.errors import ParameterDomainError, QuadratureError
from chiral_eq.quadrature import QuadratureSpec, integrate_singular, integrate_smooth_many


def test_constant_integrand():
    assert integrate_singular(lambda u: np.ones_like(u), (0.0, 1.0)) == pytest.approx(1.0, abs=1e-14)


def test_semicircle_area_sqrt_edges():
    r = 2.0
    got = integrate_singular(lambda u: np.sqrt(r * r - u * u), (-r, r), "sqrt-edges")
    assert got == pytest.approx(math.pi * r * r / 2, rel=1e-13)


def test_inverse_sqrt_edges():
    got = integrate_singular(lambda u: 1.0 / np.sqrt(u * (1.0 - u)), (0.0, 1.0), "sqrt-edges")
    assert got == pytest.approx(math.pi, rel=1e-12)


def test_interior_log_point():
    got = integrate_singular(lambda u: np.log(np.abs(u - 0.5)), (0.0, 1.0), "log-point", x0=0.5)
    assert got == pytest.approx(-1.0 - math.log(2.0), abs=1e-12)


def test_log_point_at_endpoint():
    got = integrate_singular(lambda u: np.log(u), (0.0, 1.0), "log-point", x0=0.0)
    assert got == pytest.approx(-1.0, abs=1e-12)


def test_log_point_outside_interval_is_smooth():
    got = integrate_singular(lambda u: np.log(3.0 - u), (0.0, 1.0), "log-point", x0=3.0)
    ref = integrate.quad(lambda u: math.log(3.0 - u), 0.0, 1.0, epsabs=1e-14)[0]
    assert got == pytest.approx(ref, abs=1e-12)


def test_log_point_with_sqrt_weight_against_scipy():
    x0 = 0.3

    def g(u):
        return np.log(np.abs(u - x0)) * np.sqrt(u * (1 - u))

    got = integrate_singular(g, (0.0, 1.0), "log-point", x0=x0)
    ref = integrate.quad(lambda u: math.log(abs(u - x0)) * math.sqrt(u * (1 - u)), 0, 1, points=[x0], epsabs=1e-13, limit=200)[0]
    assert got == pytest.approx(ref, abs=1e-10)


def test_deterministic():
    g = lambda u: np.exp(u) * np.sqrt(1 - u * u)  # noqa: E731
    assert integrate_singular(g, (-1, 1), "sqrt-edges") == integrate_singular(g, (-1, 1), "sqrt-edges")


def test_nonconvergence_raises_with_estimate():
    with pytest.raises(QuadratureError) as info:
        integrate_singular(lambda u: 1.0 / np.sqrt(u), (0.0, 1.0), "smooth", QuadratureSpec(1e-14, 3))
    assert math.isfinite(info.value.estimate)
    assert info.value.error > 0


@pytest.mark.parametrize(
    "kwargs",
    [dict(edges=(1.0, 0.0)), dict(edges=(0.0, 1.0), kind="wiggly"), dict(edges=(0.0, 1.0), kind="log-point")],
)
def test_domain_errors(kwargs):
    with pytest.raises(ParameterDomainError):
        integrate_singular(lambda u: u, **kwargs)


@pytest.mark.parametrize("tol,subs", [(0.0, 5), (-1.0, 5), (1e-8, 0), (1e-8, 2.5)])
def test_quadrature_spec_validation(tol, subs):
    with pytest.raises(ParameterDomainError):
        QuadratureSpec(tol, subs)


def test_smooth_many_matches_antiderivative():
    hi = np.linspace(0.0, 3.0, 50)
    got = integrate_smooth_many(lambda x: np.cos(x) ** 2, np.zeros_like(hi), hi)
    ref = hi / 2 + np.sin(2 * hi) / 4
    assert np.max(np.abs(got - ref)) < 1e-12


@settings(max_examples=40, deadline=None)
@given(
    coeffs=st.lists(st.floats(-5, 5), min_size=1, max_size=8),
    lo=st.floats(-3, 0),
    width=st.floats(0.01, 4),
)
def test_polynomials_exact(coeffs, lo, width):
    hi = lo + width
    p = np.polynomial.Polynomial(coeffs)
    ref = p.integ()(hi) - p.integ()(lo)
    got = integrate_singular(lambda u: p(u), (lo, hi))
    assert got == pytest.approx(ref, abs=1e-9 * max(1.0, abs(ref)))
