"""Painleve III linearized by ``psi = P + Q phi'/phi``.

Target::

    psi'' = psi'^2/psi - psi'/x + (alpha psi^2 + beta)/x + gamma psi^3 + delta/psi

paired with ``phi'' = K phi' + U phi``.  Matching requires ``Q = 1/sqrt(gamma)``
(constant) and ``delta = -beta^2 / (alpha Q + 2)^2``; P stays free.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .colehopf import LinearizationPair
from .expr import Expr, X, as_expr
from .grid import GridFunction
from .lincore import ClosedFormEntry, catalog_phi, ode2
from .oracle import NonlinearODE, ResidualReport, residual_report

DEFAULT_DOMAIN = (0.5, 3.0)
RESIDUAL_GATE = 1e-8


class NoRealQError(ValueError):
    """gamma <= 0 leaves no real Q."""


class DeltaUndefinedError(ZeroDivisionError):
    """alpha Q + 2 = 0, so the linearizable delta does not exist."""


@dataclass
class P3Config:
    alpha: float
    beta: float
    gamma: float
    Q: float
    delta: float
    P: Expr
    K: Expr
    U: Expr
    negative_root: bool = False

    def nonlinear(self, delta: float | None = None) -> NonlinearODE:
        d = self.delta if delta is None else float(delta)
        return NonlinearODE("painleve3", {"alpha": self.alpha, "beta": self.beta,
                                          "gamma": self.gamma, "delta": d})

    def linear(self, domain=DEFAULT_DOMAIN):
        check_domain(domain)
        return ode2(self.U, self.K, domain)

    def pair(self, domain=DEFAULT_DOMAIN) -> LinearizationPair:
        return LinearizationPair(self.P, self.Q, self.linear(domain), self.nonlinear())

    def summary(self) -> dict:
        return {"alpha": self.alpha, "beta": self.beta, "gamma": self.gamma, "delta": self.delta,
                "Q": self.Q, "negative_root": self.negative_root, "P": self.P.to_text(),
                "K": self.K.to_text(), "U": self.U.to_text()}


def check_domain(domain) -> None:
    a, b = map(float, domain)
    if a <= 0.0 <= b:
        raise ValueError("the working domain must exclude x = 0")


def linearizable_delta(alpha: float, beta: float, Q: float) -> float:
    s = alpha * Q + 2.0
    if s == 0:
        raise DeltaUndefinedError("alpha*Q + 2 = 0: no linearizable delta")
    return -(beta**2) / s**2


def p3_linearize(alpha: float, beta: float, gamma: float, P, negative_root: bool = False,
                 delta: float | None = None) -> P3Config:
    """K, U and the forced delta for a free P.

    ``K = -(2 x P + alpha Q^2 + Q) / (x Q)`` and
    ``U = -P'/Q - P^2/Q^2 - (alpha Q + 1) P / (x Q) + beta / (Q (alpha Q + 2))``.
    A supplied ``delta`` is checked against the forced value.
    """
    if gamma <= 0:
        raise NoRealQError(f"gamma = {gamma} <= 0 has no real Q")
    Q = 1.0 / math.sqrt(gamma)
    if negative_root:
        Q = -Q
    forced = linearizable_delta(alpha, beta, Q)
    if delta is not None and abs(delta - forced) > 1e-12 * max(1.0, abs(forced)):
        raise ValueError(f"delta = {delta} is not linearizable; expected {forced}")
    P = as_expr(P)
    s = alpha * Q + 2.0
    K = -(2.0 * X * P + (alpha * Q * Q + Q)) / (Q * X)
    U = (-(1.0 / Q) * P.diff() - P * P / (Q * Q) - ((alpha * Q + 1.0) / Q) * P / X
         + beta / (Q * s))
    return P3Config(float(alpha), float(beta), float(gamma), Q, forced, P, K, U, negative_root)


def p3_residual(cfg: P3Config, candidate: GridFunction, threshold: float = RESIDUAL_GATE,
                mask=None, delta: float | None = None) -> ResidualReport:
    """Residual of the target for a candidate carrying psi, psi', psi''.

    Points where psi is negligibly small are masked (the equation divides by it).
    """
    return residual_report(cfg.nonlinear(delta), candidate, threshold, mask)


def p3_example_phi(example: int, C1: float = 1.0, C2: float = 1.0, domain=DEFAULT_DOMAIN,
                   **poly) -> ClosedFormEntry:
    """Validated closed-form phi for the worked examples.

    Example 1 takes the cubic coefficients ``a, b, c, d`` of
    ``P = a x + b x^2 + c x^3 + d``; example 2 has ``P = sin x``; example 3
    ``P = x e^x``.  All use ``(alpha, beta, gamma) = (-1, 1, 1)``.
    """
    if example not in (1, 2, 3):
        raise KeyError(f"unknown example {example}")
    check_domain(domain)
    return catalog_phi(f"painleve_ex{example}", domain, C1=C1, C2=C2, **poly)


EXAMPLE_PARAMS = {"alpha": -1.0, "beta": 1.0, "gamma": 1.0}
EXAMPLE_P = {1: "a*x + b*x^2 + c*x^3 + d", 2: "sin(x)", 3: "x*exp(x)"}
