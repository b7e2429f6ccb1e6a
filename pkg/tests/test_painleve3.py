import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from genhopf.colehopf import transform_derivatives
from genhopf.expr import X, Func, as_expr, parse_expr
from genhopf.grid import GridFunction
from genhopf.lincore import solve_linear_ode
from genhopf.painleve3 import (DEFAULT_DOMAIN, EXAMPLE_P, EXAMPLE_PARAMS, DeltaUndefinedError,
                               NoRealQError, linearizable_delta, p3_example_phi, p3_linearize,
                               p3_residual)

XS = np.linspace(*DEFAULT_DOMAIN, 401)


def values(e, x=XS):
    return np.broadcast_to(np.asarray(e(x), dtype=float), np.shape(x))


def candidate(cfg, phi, dphi, x=XS):
    return transform_derivatives(cfg.P, cfg.Q, cfg.linear(), x, phi, dphi)


def test_zero_P_example():
    cfg = p3_linearize(-1, 1, 1, 0.0)
    assert cfg.Q == 1.0
    assert cfg.delta == -1.0
    assert np.allclose(values(cfg.K), 0.0)
    assert np.allclose(values(cfg.U), 1.0)


def test_sine_P_example():
    cfg = p3_linearize(-1, 1, 1, Func("sin", X))
    assert np.allclose(values(cfg.K), -2 * np.sin(XS))
    assert np.allclose(values(cfg.U), -np.sin(XS) ** 2 - np.cos(XS) + 1)


def test_scaled_gamma():
    cfg = p3_linearize(0.0, 2.0, 4.0, X)
    assert cfg.Q == 0.5
    assert cfg.delta == -1.0
    assert cfg.Q**2 * cfg.gamma == pytest.approx(1.0, abs=1e-14)
    assert cfg.delta == pytest.approx(linearizable_delta(0.0, 2.0, 0.5), abs=1e-14)


def test_constant_solution_is_exact():
    cfg = p3_linearize(-1, 1, 1, 0.0)
    cand = GridFunction(XS, {"psi": np.ones_like(XS), "dpsi": 0 * XS, "ddpsi": 0 * XS})
    assert p3_residual(cfg, cand).linf == 0.0


def test_tanh_solution():
    cfg = p3_linearize(-1, 1, 1, 0.0)
    cand = candidate(cfg, np.cosh(XS), np.sinh(XS))
    assert np.allclose(cand["psi"], np.tanh(XS), atol=1e-14)
    assert p3_residual(cfg, cand, 1e-8).passed


def test_perturbed_delta_is_detected():
    cfg = p3_linearize(-1, 1, 1, 0.0)
    cand = candidate(cfg, np.cosh(XS), np.sinh(XS))
    rep = p3_residual(cfg, cand, 1e-3, delta=-1.1)
    assert not rep.passed
    assert np.allclose(np.abs(rep.residual), 0.1 / np.abs(cand["psi"]), rtol=1e-6)


@pytest.mark.parametrize("eps", [1e-2, 1e-4, 1e-6])
def test_delta_gate(eps):
    cfg = p3_linearize(-1, 1, 1, Func("sin", X))
    phi = p3_example_phi(2, 1.0, 1.0)
    cand = candidate(cfg, phi.phi(XS), phi.dphi(XS))
    rep = p3_residual(cfg, cand, delta=cfg.delta + eps)
    psi = cand["psi"]
    assert np.nanmin(np.abs(rep.residual)) >= 0.5 * eps / np.nanmax(np.abs(psi))


def test_example_one_reduces_to_exponential():
    entry = p3_example_phi(1, 2.0, 0.0, a=0, b=0, c=0, d=0)
    assert entry.validated
    assert np.allclose(entry.phi(XS), 2.0 * np.exp(XS))


@pytest.mark.parametrize("example", [1, 2, 3])
@pytest.mark.parametrize("C", [(1.0, 0.0), (0.7, 1.3)])
def test_worked_examples_produce_solutions(example, C):
    poly = {"a": 0.5, "b": -0.3, "c": 0.1, "d": 0.2} if example == 1 else {}
    P = parse_expr(EXAMPLE_P[example], list("abcd")).bind(**{"a": 0.5, "b": -0.3, "c": 0.1,
                                                              "d": 0.2})
    cfg = p3_linearize(**EXAMPLE_PARAMS, P=P)
    entry = p3_example_phi(example, *C, **poly)
    assert entry.validated
    assert p3_residual(cfg, candidate(cfg, entry.phi(XS), entry.dphi(XS)), 1e-8).passed


def test_unknown_example():
    with pytest.raises(KeyError):
        p3_example_phi(4)


def test_gamma_must_be_positive():
    with pytest.raises(NoRealQError):
        p3_linearize(-1, 1, 0, 0.0)
    with pytest.raises(NoRealQError):
        p3_linearize(-1, 1, -2, 0.0)


def test_delta_undefined():
    with pytest.raises(DeltaUndefinedError):
        p3_linearize(-2, 1, 1, 0.0)


def test_supplied_delta_checked():
    assert p3_linearize(-1, 1, 1, 0.0, delta=-1.0).delta == -1.0
    with pytest.raises(ValueError):
        p3_linearize(-1, 1, 1, 0.0, delta=-1.5)


def test_domain_must_exclude_origin():
    cfg = p3_linearize(-1, 1, 1, 0.0)
    with pytest.raises(ValueError):
        cfg.linear((-1.0, 1.0))
    with pytest.raises(ValueError):
        p3_example_phi(2, domain=(0.0, 1.0))


def test_negative_root_family():
    cfg = p3_linearize(-1, 1, 1, X, negative_root=True)
    assert cfg.Q == -1.0
    assert cfg.delta == pytest.approx(-1 / 9)
    sol = solve_linear_ode(cfg.linear(), (1.0, 0.2), XS)
    cand = candidate(cfg, sol["phi"], sol["dphi"])
    assert p3_residual(cfg, cand, 1e-8).passed


coef = st.floats(-0.5, 0.5, allow_nan=False)


@settings(max_examples=20)
@given(st.lists(coef, min_size=3, max_size=3), st.floats(0.5, 2.0), st.floats(-1, 1))
def test_free_P_gives_solutions(p, w, slope):
    P = as_expr(p[0]) + p[1] * X + p[2] * X * X + 0.3 * Func("sin", w * X)
    cfg = p3_linearize(-1, 1, 1, P)
    sol = solve_linear_ode(cfg.linear(), (1.0, slope), XS)
    cand = candidate(cfg, sol["phi"], sol["dphi"])
    rep = p3_residual(cfg, cand, 1e-8)
    assert rep.passed
    assert math.isfinite(rep.linf)


def test_summary_keys():
    s = p3_linearize(-1, 1, 1, 0.0).summary()
    assert {"alpha", "beta", "gamma", "delta", "Q", "K", "U", "P"} <= set(s)
