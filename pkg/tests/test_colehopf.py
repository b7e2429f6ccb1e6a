import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from genhopf.colehopf import (PoleAtAnchorError, SingularSolutionError, apply_transform,
                              ic_from_phi, transform_derivatives)
from genhopf.lincore import ode2, solve_linear_ode
from genhopf.oracle import integrate_ode
from genhopf.vdp import VdpParams, vdp_coeffs


def test_constant_psi_from_exponential():
    x = np.linspace(0, 1, 11)
    out = apply_transform(0.5, 1.0, x, np.exp(x / 2), 0.5 * np.exp(x / 2))
    np.testing.assert_allclose(out.psi, 1.0, atol=1e-15)
    assert out.mask_fraction == 0


def test_tanh_from_cosh():
    x = np.linspace(-2, 2, 41)
    out = apply_transform(0.0, 1.0, x, np.cosh(x), np.sinh(x))
    np.testing.assert_allclose(out.psi, np.tanh(x), atol=1e-15)


def test_sine_is_masked_near_pi():
    x = np.linspace(2.5, 3.8, 131)
    out = apply_transform(0.0, 1.0, x, np.sin(x), np.cos(x))
    near = np.abs(x - math.pi) < 0.015
    assert out.masked[near].all()
    assert np.isnan(out.psi[near]).all()
    live = ~out.masked
    np.testing.assert_allclose(out.psi[live], 1 / np.tan(x[live]), rtol=1e-10)


def test_all_masked_raises():
    x = np.linspace(0, 1, 5)
    with pytest.raises(SingularSolutionError):
        apply_transform(0.0, 1.0, x, np.zeros(5), np.ones(5))


def test_bad_grid():
    with pytest.raises(ValueError):
        apply_transform(0.0, 1.0, np.array([0.0, 1.0, 0.5]), np.ones(3), np.ones(3))


def test_initial_conditions():
    assert ic_from_phi(0.5, 1.0, 1.0, 0.5, ode2(0.25), 0.0) == pytest.approx((1.0, 0.0))
    assert ic_from_phi(0.0, 1.0, 1.0, 0.0, ode2(1.0), 0.0) == pytest.approx((0.0, 1.0))
    with pytest.raises(PoleAtAnchorError):
        ic_from_phi(0.0, 1.0, 0.0, 1.0, ode2(1.0), 0.0)


@given(st.floats(-1e3, 1e3).filter(lambda c: abs(c) > 1e-3))
def test_scaling_phi_leaves_psi_unchanged(c):
    x = np.linspace(0, 1, 21)
    a = apply_transform("x", "1 + x^2", x, np.cosh(x), np.sinh(x)).psi
    b = apply_transform("x", "1 + x^2", x, c * np.cosh(x), c * np.sinh(x)).psi
    np.testing.assert_allclose(a, b, rtol=1e-14, atol=1e-14)


def test_derivatives_agree_with_direct_integration():
    sys = vdp_coeffs("0.2*sin(x)", VdpParams(0.5, 1.0, 0.3))
    lin = sys.linear((0.0, 1.5))
    x = np.linspace(0, 1.5, 151)
    phi = solve_linear_ode(lin, (1.0, 0.2), x)
    cand = transform_derivatives(sys.P, 1.0, lin, x, phi["phi"], phi["dphi"])
    ic = ic_from_phi(sys.P, 1.0, 1.0, 0.2, lin, 0.0)
    ode = integrate_ode(sys.nonlinear(), ic, (0.0, 1.5), n=x.size)
    assert ode.complete
    rel = np.max(np.abs(ode.grid["psi"] - cand["psi"])) / np.max(np.abs(cand["psi"]))
    assert rel <= 1e-6
    np.testing.assert_allclose(ode.grid["dpsi"], cand["dpsi"], rtol=1e-6, atol=1e-7)
