"""Perturbed Van der Pol equations linearized by ``psi = P + phi'/phi``.

Target equation::

    psi'' = mu (beta - psi^2) psi' - alpha psi + v psi^2 + h psi^3 + g psi^4 + f

paired with ``phi'' = U phi``.  Given P, matching powers of ``phi'/phi`` fixes
g, h, v, U and f in turn; :func:`vdp_coeffs` composes them as expressions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .colehopf import LinearizationPair
from .expr import Expr, as_expr, parse_expr
from .lincore import FormulaValidationError, catalog_phi, ode2
from .oracle import NonlinearODE

F_CHECK_TOL = 1e-9
F_CHECK_POINTS = 50


class UnsupportedBranchError(ValueError):
    """Complex k (mu^2 beta^2 < 4 alpha) is not handled."""


class PoleError(ValueError):
    """A constructed coefficient has a pole inside the working domain."""


@dataclass(frozen=True)
class VdpParams:
    mu: float
    beta: float
    alpha: float

    @property
    def mb(self) -> float:
        return self.mu * self.beta

    @property
    def k_squared(self) -> float:
        return self.mb**2 - 4.0 * self.alpha

    @property
    def k(self) -> float:
        """Non-negative root of ``mu^2 beta^2 - 4 alpha``."""
        if self.k_squared < 0:
            raise UnsupportedBranchError(
                f"k^2 = {self.k_squared:.6g} < 0; only real k is supported")
        return math.sqrt(self.k_squared)

    def as_dict(self) -> dict:
        return {"mu": self.mu, "beta": self.beta, "alpha": self.alpha}


@dataclass
class VdpSystem:
    params: VdpParams
    P: Expr
    g: Expr
    h: Expr
    v: Expr
    U: Expr
    f: Expr
    info: dict = field(default_factory=dict)

    def nonlinear(self) -> NonlinearODE:
        return NonlinearODE("vdp", self.params.as_dict(),
                            {"v": self.v, "h": self.h, "g": self.g, "f": self.f})

    def linear(self, domain=(0.0, 1.0)):
        return ode2(self.U, None, domain)

    def pair(self, domain=(0.0, 1.0)) -> LinearizationPair:
        return LinearizationPair(self.P, 1.0, self.linear(domain), self.nonlinear())

    def coefficient_table(self) -> dict:
        return {name: getattr(self, name).to_text() for name in ("P", "g", "h", "v", "U", "f")}


def vdp_coeffs(P, params: VdpParams) -> VdpSystem:
    """Coefficients that make ``P + phi'/phi`` solve the target for every phi."""
    P = as_expr(P)
    mu, beta, alpha = params.mu, params.beta, params.alpha
    mb = params.mb
    dP, ddP = P.diff(1), P.diff(2)
    g = as_expr(-mu)
    h = 2.0 * (mu * P + 1.0)
    U = 3.0 * P * P - mb * P + alpha / 2.0
    v = mu * dP + mu * U - (mu * P + 6.0) * P + mb
    f = (ddP - 2.0 * mb * dP + (6.0 * dP + (alpha + mb * mb)) * P
         + 4.0 * (P - mb) * P * P - mb * alpha / 2.0)
    return VdpSystem(params, P, g, h, v, U, f)


def vdp_residuals(sys: VdpSystem, x) -> np.ndarray:
    """The five coefficients of powers of ``phi'/phi``, rows a0..a4.

    Evaluated from the system's stored coefficients, so tampering with any of
    them shows up here.
    """
    mu, beta, alpha = sys.params.mu, sys.params.beta, sys.params.alpha
    x = np.asarray(x, dtype=float)
    p = sys.P.derivs(x, 2)
    u = sys.U.derivs(x, 1)
    P, dP, ddP = p[0], p[1], p[2]
    U, dU = u[0], u[1]
    g, h, v, f = (sys.g(x), sys.h(x), sys.v(x), sys.f(x))
    a4 = -mu - g
    a3 = -(2 * mu + 4 * g) * P - h + 2
    a2 = mu * dP - (6 * g + mu) * P**2 - 3 * h * P - v + mu * U + mu * beta
    a1 = -4 * g * P**3 - 3 * h * P**2 + (2 * mu * dP - 2 * v + 2 * mu * U) * P - 2 * U + alpha
    a0 = (ddP + mu * (P**2 - beta) * dP + dU - g * P**4 - h * P**3
          + (mu * U - v) * P**2 + alpha * P - mu * beta * U - f)
    return np.stack(np.broadcast_arrays(a0, a1, a2, a3, a4))


def _check_f_zero(sys: VdpSystem, domain) -> tuple[float, dict]:
    x = np.linspace(*domain, F_CHECK_POINTS)
    f = np.broadcast_to(sys.f(x), x.shape)
    return float(np.max(np.abs(f))), {"x": x.tolist(), "f": f.tolist()}


def vdp_unforced_P(params: VdpParams, C1: float, C2: float, domain=(0.0, 1.0)) -> Expr:
    """General P for which the forcing ``f`` vanishes.

    With ``k = sqrt(mu^2 beta^2 - 4 alpha)`` and ``m = mu beta``::

        P = (2 C1 m e^{mx/2} + C2 (m+k) e^{kx/2} + (m-k) e^{-kx/2})
            / (4 (C1 e^{mx/2} + C2 e^{kx/2} + e^{-kx/2}))

    When ``k = m`` this collapses to ``c m / (2 (e^{-mx} + c))``, ``c = C1 + C2``.
    """
    k = params.k
    m = params.mb
    a, b = map(float, domain)
    if abs(k - m) <= 1e-14 * max(1.0, abs(m)):
        c = C1 + C2
        denom = parse_expr("exp(-m*x) + c", ["m", "c"]).bind(m=m, c=c)
        P = c * m / (2.0 * denom)
    else:
        names = ["C1", "C2", "m", "k"]
        denom = parse_expr("C1*exp(m*x/2) + C2*exp(k*x/2) + exp(-k*x/2)", names)
        numer = parse_expr("2*C1*m*exp(m*x/2) + C2*(m+k)*exp(k*x/2) + (m-k)*exp(-k*x/2)", names)
        bind = dict(C1=C1, C2=C2, m=m, k=k)
        denom, numer = denom.bind(**bind), numer.bind(**bind)
        P = numer / (4.0 * denom)
    xs = np.linspace(a, b, 1001)
    dv = np.broadcast_to(denom(xs), xs.shape)
    scale = max(float(np.max(np.abs(dv))), 1e-300)
    if np.any(np.abs(dv) < 1e-12 * scale) or np.any(np.sign(dv[:-1]) * np.sign(dv[1:]) < 0):
        raise PoleError(f"denominator of P vanishes inside [{a}, {b}]")
    worst, profile = _check_f_zero(vdp_coeffs(P, params), domain)
    if not worst <= F_CHECK_TOL:
        raise FormulaValidationError(f"unforced P leaves |f| = {worst:.3g} > {F_CHECK_TOL:g}",
                                     profile)
    return P


def vdp_forced_family(g, branch: str, params: VdpParams) -> VdpSystem:
    """System with ``U = 3 g^2 - mu beta g + alpha/2`` from either root P.

    ``branch="plus"`` takes ``P = g``, ``branch="minus"`` takes
    ``P = -g + mu beta / 3``.  Both give the same U.
    """
    g = as_expr(g)
    if branch == "plus":
        P = g
    elif branch == "minus":
        P = -g + params.mb / 3.0
    else:
        raise ValueError("branch must be 'plus' or 'minus'")
    sys = vdp_coeffs(P, params)
    sys.info["branch"] = branch
    sys.info["g"] = g.to_text()
    return sys


# -- printed special cases versus recomputation ---------------------------------------

def _compare(case, quantity, printed, recomputed, x, tol=1e-9) -> dict:
    try:
        pv = np.broadcast_to(printed(x), x.shape)
        rv = np.broadcast_to(recomputed(x), x.shape)
        diff = float(np.max(np.abs(pv - rv)))
        ok = diff <= tol * max(1.0, float(np.max(np.abs(rv))))
        return {"case": case, "quantity": quantity, "max_diff": diff,
                "verdict": "agrees" if ok else "differs"}
    except (ValueError, ZeroDivisionError) as exc:
        return {"case": case, "quantity": quantity, "max_diff": None, "verdict": f"error: {exc}"}


def printed_case_report(params: VdpParams, c: float = 1.0, domain=(0.0, 1.0)) -> list:
    """Compare the closed forms of the three unforced special cases with recomputation.

    Case 1 uses ``params`` as given (``C1 = C2 = 0``); case 2 forces
    ``alpha = mu^2 beta^2 / 4`` (k = 0); case 3 forces ``alpha = 0`` with
    ``C1 + C2 = c``.
    """
    x = np.linspace(*domain, 21)
    mu, beta = params.mu, params.beta
    m = params.mb
    rows = []

    if params.k_squared >= 0:
        alpha, k = params.alpha, params.k
        sys = vdp_coeffs(vdp_unforced_P(params, 0.0, 0.0, domain), params)
        rows.append(_compare(1, "P", as_expr((m - k) / 4), sys.P, x))
        rows.append(_compare(1, "U", as_expr(alpha / 2 + (3 * k + m) * (k - m) / 16), sys.U, x))
        rows.append(_compare(1, "v", as_expr(-mu**3 * beta**2 / 8 + mu / 2 * (alpha - beta + k * k / 4)
                                             + 3 * k / 2), sys.v, x))
        rows.append(_compare(1, "h", as_expr(mu / 2 * (m - k) + 2), sys.h, x))
        entry = catalog_phi("vdp_case1_printed", domain, **params.as_dict())
        rows.append({"case": 1, "quantity": "phi (trigonometric form)",
                     "max_diff": None if math.isnan(entry.max_residual) else entry.max_residual,
                     "verdict": "validated" if entry.validated else f"fails: {entry.reason}"})

    p2 = VdpParams(mu, beta, m * m / 4)
    sys2 = vdp_coeffs(vdp_unforced_P(p2, 0.0, 1.0, domain), p2)
    rows.append(_compare(2, "P", as_expr(m / 4), sys2.P, x))
    rows.append(_compare(2, "U", as_expr(p2.alpha / 2 - m * m / 16), sys2.U, x))
    rows.append(_compare(2, "h", as_expr(mu * m / 2 + 2), sys2.h, x))
    rows.append(_compare(2, "v", as_expr(mu / 2 * (p2.alpha - beta - m * m / 4)), sys2.v, x))
    entry = catalog_phi("vdp_case2_printed", domain, **p2.as_dict())
    rows.append({"case": 2, "quantity": "phi (trigonometric form)",
                 "max_diff": None if math.isnan(entry.max_residual) else entry.max_residual,
                 "verdict": "validated" if entry.validated else f"fails: {entry.reason}"})

    p3 = VdpParams(mu, beta, 0.0)
    sys3 = vdp_coeffs(vdp_unforced_P(p3, c, 0.0, domain), p3)
    E = parse_expr("exp(-m*x)", ["m"]).bind(m=m)
    Eh = parse_expr("exp(m*x/2)", ["m"]).bind(m=m)
    rows.append(_compare(3, "P", c * m * Eh / (c + E), sys3.P, x))
    rows.append(_compare(3, "U", -c * m * m * (E - c) / (E + c) ** 2, sys3.U, x))
    rows.append(_compare(3, "v", m * (E - 2 * c) / (E + c), sys3.v, x))
    rows.append(_compare(3, "h", 2 + mu * m * c / (E + c), sys3.h, x))
    for name, label in (("vdp_case3", "phi against recomputed U"),
                        ("vdp_case3_printed_U", "phi against printed U")):
        entry = catalog_phi(name, domain, mu=mu, beta=beta, c=c)
        rows.append({"case": 3, "quantity": label,
                     "max_diff": None if math.isnan(entry.max_residual) else entry.max_residual,
                     "verdict": "validated" if entry.validated else f"fails: {entry.reason}"})
    return rows


def tampered(sys: VdpSystem, **changes) -> VdpSystem:
    """Copy of ``sys`` with some coefficients replaced (for sensitivity checks)."""
    return replace(sys, **{k: as_expr(v) for k, v in changes.items()})
