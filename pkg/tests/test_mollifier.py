import math

import numpy as np
import pytest
from scipy import integrate

from paralab.mollifier import MollifierSpec, default_mollifier


def test_unit_integral_and_support():
    psi = default_mollifier()
    assert psi.inner == 0.5
    assert psi.outer == pytest.approx(0.6260306264916613, abs=1e-12)
    assert psi.normalization == pytest.approx(1.0, abs=1e-13)
    val, _ = integrate.quad(lambda r: 2 * math.pi * r * float(psi.profile(r)), 0, 1, points=[0.5, psi.outer])
    assert val == pytest.approx(1.0, abs=1e-10)
    assert psi.profile(psi.outer + 1e-9) == 0.0
    assert psi.profile(0.3) == 1.0


def test_l2_norm_closed_form_matches_quadrature():
    psi = default_mollifier()
    val, _ = integrate.quad(lambda r: 2 * math.pi * r * float(psi.profile(r)) ** 2, 0, 1,
                            points=[0.5, psi.outer])
    assert psi.l2_norm_sq() == pytest.approx(val, rel=1e-10)
    assert psi.l2_norm_sq() == pytest.approx(0.9256938, abs=1e-7)


def test_fourier_transform_at_zero_and_against_quadrature():
    psi = default_mollifier()
    assert psi.fourier(0.0) == pytest.approx(1.0, abs=1e-13)
    from scipy.special import j0
    for k in (0.3, 1.0, 2.7, 7.5):
        ref, _ = integrate.quad(lambda r: 2 * math.pi * r * float(psi.profile(r)) * j0(2 * math.pi * k * r),
                                0, psi.outer, points=[0.5], limit=200)
        assert float(psi.fourier(k)) == pytest.approx(ref, abs=1e-10)


def test_autocorrelation_endpoints_and_parseval():
    psi = default_mollifier()
    assert float(psi.autocorrelation(0.0)) == pytest.approx(psi.l2_norm_sq(), abs=1e-6)
    assert float(psi.autocorrelation(2 * psi.outer)) == 0.0
    # integral of the autocorrelation equals (integral psi)^2 = 1
    val, _ = integrate.quad(lambda d: 2 * math.pi * d * float(psi.autocorrelation(d)), 0, 2 * psi.outer,
                            limit=200)
    assert val == pytest.approx(1.0, abs=1e-5)


def test_scaled_versions():
    psi = default_mollifier()
    d = 0.125
    pts = np.array([[0.0, 0.0], [0.07, 0.0]])
    assert np.allclose(psi.scaled(pts, d), psi(pts / d) / d**2)
    assert float(psi.scaled_autocorrelation(0.0, d)) == pytest.approx(float(psi.autocorrelation(0.0)) / d**2)


def test_custom_spec_profile():
    spec = MollifierSpec(0.25, 0.75)
    assert spec.profile(0.5) == pytest.approx(0.5)
