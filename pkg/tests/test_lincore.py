import math

import numpy as np
import pytest

from genhopf.expr import parse_expr
from genhopf.lincore import (CATALOG_NAMES, BoundaryCondition, FormulaValidationError,
                             bessel_fit, catalog_phi, heat, ode2, solve_heat, solve_linear_ode,
                             validate_phi)


def test_constant_u_matches_cosh():
    g = solve_linear_ode(ode2(1.0, domain=(0, 2)), (1.0, 0.0), 41)
    np.testing.assert_allclose(g["phi"], np.cosh(g.x), rtol=1e-9)
    np.testing.assert_allclose(g["dphi"], np.sinh(g.x), rtol=1e-9, atol=1e-12)


def test_interior_anchor_integrates_both_ways():
    x = np.linspace(-1, 1, 21)
    g = solve_linear_ode(ode2(-1.0, domain=(-1, 1)), (0.0, 1.0), x, x0=0.0)
    np.testing.assert_allclose(g["phi"], np.sin(x), atol=1e-9)


def test_first_derivative_term():
    # phi'' = -2 phi' - phi  ->  phi = (1 + 2x) e^{-x} for phi(0)=1, phi'(0)=1
    g = solve_linear_ode(ode2(-1.0, -2.0, (0, 2)), (1.0, 1.0), 21)
    np.testing.assert_allclose(g["phi"], (1 + 2 * g.x) * np.exp(-g.x), rtol=1e-9)


def test_heat_equation_converges_at_second_order():
    errs = []
    for n in (50, 100):
        spec = heat(1.0, (0, 1), BoundaryCondition("dirichlet", 0.0),
                    BoundaryCondition("dirichlet", 0.0))
        sol = solve_heat(spec, "sin(pi*x)", 0.1, n, n)
        exact = math.exp(-math.pi**2 * 0.1) * np.sin(math.pi * sol.x)
        errs.append(np.max(np.abs(sol["phi"][-1] - exact)))
    assert math.log2(errs[0] / errs[1]) > 1.8


def test_heat_robin_holds_log_derivative():
    spec = heat(1.0, (0, 1), BoundaryCondition("robin", 1.0), BoundaryCondition("robin", 1.0))
    sol = solve_heat(spec, "exp(x)", 0.5, 200, 200)
    exact = np.exp(sol.x + 0.5)
    assert np.max(np.abs(sol["phi"][-1] - exact) / exact) < 1e-4


def test_boundary_condition_validation():
    with pytest.raises(ValueError):
        BoundaryCondition("periodic")
    assert BoundaryCondition("dirichlet", "1 + t").at(2.0) == 3.0


def test_catalog_contents():
    assert "convective_bessel" in CATALOG_NAMES
    with pytest.raises(KeyError):
        catalog_phi("nope")


def test_bessel_entry_validates():
    e = catalog_phi("convective_bessel", (0, 2), a=1.0, C=1.0, C1=1.0, C2=0.0)
    assert e.validated
    assert e.max_residual < 1e-9


def test_bessel_fit_recovers_constants():
    e = catalog_phi("convective_bessel", (0, 2), a=1.0, C=1.0, C1=0.3, C2=0.7)
    d = e.derivs(np.array([0.5]), 1)[:, 0]
    c1, c2 = bessel_fit(1.0, 1.0, 0.5, d[0], d[1])
    assert c1 == pytest.approx(0.3, rel=1e-10) and c2 == pytest.approx(0.7, rel=1e-10)


def test_failed_entry_refuses_to_evaluate():
    e = catalog_phi("vdp_case1_printed", (0, 1), mu=1.0, beta=3.0, alpha=2.0)
    assert not e.validated
    with pytest.raises(FormulaValidationError):
        e.phi(np.array([0.0]))


def test_validate_phi_detects_wrong_function():
    ok, profile, worst = validate_phi(parse_expr("exp(2*x)"), ode2(1.0))
    assert not ok and worst > 1
    ok, _, _ = validate_phi(parse_expr("exp(x)"), ode2(1.0))
    assert ok
