"""Polynomial Lienard equations ``psi'' + f(psi) psi' + g(psi) = 0``.

``f = c0 + c1 psi + c2 psi^2`` and ``g = b0 + ... + b4 psi^4``.  With
``psi = P + r``, ``r = phi'/phi`` and ``phi'' = U phi`` the left-hand side is
a quartic in r; its coefficients are zeroed from the top down, each step
fixing one b_k.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .colehopf import LinearizationPair
from .expr import Expr, as_expr
from .lincore import ode2
from .oracle import NonlinearODE

B0_TOL = 1e-10


class SolveOrderError(ValueError):
    """A b_k was requested before every higher b was known."""


# -- polynomials in r with expression coefficients -------------------------------------

def _padd(p, q):
    n = max(len(p), len(q))
    return [(p[i] if i < len(p) else as_expr(0)) + (q[i] if i < len(q) else as_expr(0))
            for i in range(n)]


def _pmul(p, q):
    out = [as_expr(0)] * (len(p) + len(q) - 1)
    for i, a in enumerate(p):
        for j, b in enumerate(q):
            out[i + j] = out[i + j] + a * b
    return out


def _pscale(p, s):
    return [s * a for a in p]


class _Matcher:
    """Coefficients of r^j in the Lienard operator applied to ``P + r``.

    The part not involving any b is precomputed; ``solve(k)`` returns the b_k
    that zeroes the r^k coefficient given the higher b's.
    """

    def __init__(self, c, P: Expr, U: Expr):
        c0, c1, c2 = c
        dP, ddP, dU = P.diff(1), P.diff(2), U.diff(1)
        psi = [P, as_expr(1)]
        dpsi = [dP + U, as_expr(0), as_expr(-1)]                         # P' + r'
        ddpsi = [ddP + dU, -2.0 * U, as_expr(0), as_expr(2)]            # P'' + r''
        friction = _padd(_padd([c0], _pscale(psi, c1)), _pscale(_pmul(psi, psi), c2))
        self.base = _padd(ddpsi, _pmul(friction, dpsi))
        self.base += [as_expr(0)] * (5 - len(self.base))
        self.P = P
        self.b: dict[int, Expr] = {}

    def solve(self, k: int) -> Expr:
        missing = [j for j in range(k + 1, 5) if j not in self.b]
        if missing:
            raise SolveOrderError(f"b{k} depends on unsolved b{missing}")
        # b_j psi^j contributes comb(j, k) P^(j-k) b_j to r^k
        known = self.base[k]
        for j in range(k + 1, 5):
            known = known + comb(j, k) * self.b[j] * self.P ** (j - k)
        self.b[k] = -known
        return self.b[k]


# -- system -----------------------------------------------------------------------------

@dataclass
class LienardSystem:
    c: tuple
    b: tuple
    P: Expr
    U: Expr
    info: dict = field(default_factory=dict)

    def nonlinear(self) -> NonlinearODE:
        coeffs = {f"c{i}": ci for i, ci in enumerate(self.c)}
        coeffs.update({f"b{i}": bi for i, bi in enumerate(self.b)})
        return NonlinearODE("lienard", {}, coeffs)

    def linear(self, domain=(0.0, 1.0)):
        return ode2(self.U, None, domain)

    def pair(self, domain=(0.0, 1.0)) -> LinearizationPair:
        return LinearizationPair(self.P, 1.0, self.linear(domain), self.nonlinear())


def lienard_b(c0, c1, c2, P, U, order=(4, 3, 2, 1, 0)) -> LienardSystem:
    """Restoring coefficients b0..b4 for which ``P + phi'/phi`` solves the equation.

    ``order`` is the sequence in which the b's are solved; anything but
    descending order raises :class:`SolveOrderError`.
    """
    c = tuple(as_expr(ci) for ci in (c0, c1, c2))
    P, U = as_expr(P), as_expr(U)
    m = _Matcher(c, P, U)
    for k in order:
        m.solve(k)
    if sorted(m.b) != [0, 1, 2, 3, 4]:
        raise SolveOrderError("every b0..b4 must be solved")
    return LienardSystem(c, tuple(m.b[k] for k in range(5)), P, U)


def riccati_U(P) -> Expr:
    """``U = P^2 - P'``, the choice that removes the constant term b0."""
    P = as_expr(P)
    return P * P - P.diff()


def printed_b(c0, c1, c2, P, U) -> tuple:
    """The b0..b4 formulas in the form they are usually quoted (kept for comparison)."""
    c0, c1, c2, P, U = (as_expr(v) for v in (c0, c1, c2, P, U))
    dP, ddP, dU = P.diff(1), P.diff(2), U.diff(1)
    b4 = c2
    b3 = c1 - 2.0 * c2 * P + 2.0
    b2 = c2 * P * P - 2.0 * (3.0 - c1) * P - c2 * (dP - U) + c0
    b1 = (6.0 + c1) * P * P - 2.0 * c0 * P - c1 * dP - (c1 + 2.0) * U
    b0 = ddP - c0 * dP + dU - 2.0 * P**3 + 2.0 * P * U + c0 * (P * P - U)
    return (b0, b1, b2, b3, b4)


def comparison_table(sys: LienardSystem, domain=(0.0, 1.0), n: int = 21) -> list:
    """Pointwise comparison of recomputed and quoted b_k on ``domain``."""
    x = np.linspace(*domain, n)
    quoted = printed_b(*sys.c, sys.P, sys.U)
    rows = []
    for k in range(5):
        got = np.broadcast_to(sys.b[k](x), x.shape)
        ref = np.broadcast_to(quoted[k](x), x.shape)
        diff = got - ref
        worst = float(np.max(np.abs(diff)))
        agrees = worst <= 1e-10 * max(1.0, float(np.max(np.abs(got))))
        row = {"coefficient": f"b{k}", "recomputed": sys.b[k].to_text(),
               "max_diff": worst, "verdict": "agrees" if agrees else "differs"}
        if not agrees and np.ptp(diff) <= 1e-10 * max(1.0, worst):
            row["constant_offset"] = float(diff[0])
        rows.append(row)
    return rows


def b0_norm(sys: LienardSystem, domain=(0.0, 1.0), n: int = 50) -> float:
    x = np.linspace(*domain, n)
    return float(np.max(np.abs(np.broadcast_to(sys.b[0](x), x.shape))))
