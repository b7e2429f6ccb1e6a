"""Second-order convective equations linearized by ``psi = P + Q phi'/phi``.

Target::

    psi'' = S + (V + F psi') psi + W psi^2

paired with ``phi'' = U phi``.  Collecting powers of ``r = phi'/phi`` gives
four coefficients a0..a3.  The top two fix ``Q = -2/F`` and ``P = -2W/F^2``;
a1 then no longer involves U and becomes a constraint on (F, W, V), while
a0 = 0 is a first-order linear ODE for U.

A first-derivative term ``V1 psi'`` is removed beforehand by
:func:`conv_reduce`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .colehopf import LinearizationPair
from .expr import Const, Expr, Func, X, as_expr
from .grid import GridFunction
from .lincore import DenseFunction, as_function, derivs_of, ode2
from .oracle import NonlinearODE

DEFAULT_DOMAIN = (0.0, 2.0)
CONSTRAINT_TOL = 1e-8
SAMPLE_POINTS = 201
RTOL = 1e-10
ATOL = 1e-12


class ZeroConvectionError(ValueError):
    """F vanishes somewhere on the domain, so Q = -2/F does not exist."""


class ConstraintError(ValueError):
    """(F, W, V) violate the a1 constraint; carries the sampled profile."""

    def __init__(self, message: str, norm: float, profile: dict):
        super().__init__(message)
        self.norm = norm
        self.profile = profile


class ReductionError(ValueError):
    """The integrating factor for the psi' term cannot be built on the domain."""


def _samples(f, domain, n: int = SAMPLE_POINTS):
    x = np.linspace(*map(float, domain), n)
    return x, np.broadcast_to(np.asarray(f(x), dtype=float), x.shape)


def _nonvanishing(f, name: str, domain, err=ValueError):
    x, v = _samples(f, domain, 1001)
    if not np.all(np.isfinite(v)):
        raise err(f"{name} is not finite on [{domain[0]}, {domain[1]}]")
    if np.all(v == 0):
        return "zero"
    scale = float(np.max(np.abs(v)))
    if np.any(np.abs(v) <= 1e-12 * scale) or np.any(np.sign(v[:-1]) != np.sign(v[1:])):
        raise err(f"{name} vanishes inside [{domain[0]}, {domain[1]}]")
    return "ok"


@dataclass
class ConvectiveSystem:
    """Coefficients of the target plus the pairing data.

    ``U`` is an Expr when the U equation has constant coefficients (closed
    form) and a :class:`~genhopf.lincore.DenseFunction` otherwise.
    """

    F: Expr
    W: Expr
    V: Expr
    S: Expr
    Q: Expr
    P: Expr
    U: object
    constraint_norm: float
    domain: tuple = DEFAULT_DOMAIN
    info: dict = field(default_factory=dict)

    def nonlinear(self) -> NonlinearODE:
        return NonlinearODE("convective", {}, {"S": self.S, "V": self.V, "F": self.F, "W": self.W})

    def linear(self, domain=None):
        return ode2(self.U, None, self.domain if domain is None else domain)

    def pair(self, domain=None) -> LinearizationPair:
        return LinearizationPair(self.P, self.Q, self.linear(domain), self.nonlinear())

    def U_grid(self, n: int = SAMPLE_POINTS) -> GridFunction:
        x = np.linspace(*self.domain, n)
        d = derivs_of(as_function(self.U), x, 1)
        return GridFunction(x, {"U": d[0].copy(), "dU": d[1].copy()})

    def summary(self) -> dict:
        return {"F": self.F.to_text(), "W": self.W.to_text(), "V": self.V.to_text(),
                "S": self.S.to_text(), "Q": self.Q.to_text(), "P": self.P.to_text(),
                "U": self.U.to_text(), "constraint_norm": self.constraint_norm}


# -- identities --------------------------------------------------------------------------

def constraint_expr(F, W, V) -> Expr:
    """``(F/2) a1`` after substituting Q = -2/F, P = -2W/F^2 (U drops out)."""
    F, W, V = as_expr(F), as_expr(W), as_expr(V)
    Q = -2.0 / F
    P = -2.0 * W / (F * F)
    return V + F * P.diff() + 2.0 * W * P + (F / 2.0) * (Q.diff(2) - F * P * Q.diff())


def printed_constraint(F, W, V) -> Expr:
    """The constraint in its usual quoted form, kept for comparison."""
    F, W, V = as_expr(F), as_expr(W), as_expr(V)
    dF, dW = F.diff(), W.diff()
    return V + (F.diff(2) - 2.0 * dW) / F + (6.0 * W * dF - 2.0 * dF * dF - 4.0 * W * W) / (F * F)


def u_equation(F, W, V, S, P, Q) -> tuple[Expr, Expr]:
    """``(k, s)`` with ``U' = k U + s`` from a0 = 0 and ``F Q = -2``."""
    F, W, V, S, P, Q = (as_expr(v) for v in (F, W, V, S, P, Q))
    k = -(2.0 * P + 2.0 * Q.diff()) / Q
    s = -(P.diff(2) - W * P * P - (V + F * P.diff()) * P - S) / Q
    return k, s


def _u_closed_form(k: Expr, s: Expr, U0: float, x0: float):
    kv, sv = k.value, s.value
    if kv == 0:
        return as_expr(U0) + sv * (X - x0)
    fixed = -sv / kv
    return (U0 - fixed) * Func("exp", kv * (X - x0)) + fixed


def _u_numeric(k: Expr, s: Expr, U0: float, x0: float, domain) -> DenseFunction:
    a, b = map(float, domain)

    def rhs(x, u):
        return [float(k(x)) * u[0] + float(s(x))]

    pieces = []
    for end in (a, b):
        if end == x0:
            continue
        sol = solve_ivp(rhs, (x0, end), [float(U0)], method="RK45", rtol=RTOL, atol=ATOL,
                        dense_output=True)
        if sol.status != 0:
            raise RuntimeError(f"U integration failed: {sol.message}")
        pieces.append((min(x0, end), max(x0, end), sol.sol))

    def value(x):
        x = np.asarray(x, dtype=float)
        out = np.full(x.shape, float(U0))
        for lo, hi, dense in pieces:
            sel = (x >= lo) & (x <= hi) & (x != x0)
            if np.any(sel):
                out[sel] = dense(x[sel])[0]
        return out

    def deriv(x):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(k(x), x.shape) * value(x) + np.broadcast_to(s(x), x.shape)

    return DenseFunction(value, deriv, (a, b), label="U (RK45)")


# -- forward and reverse ------------------------------------------------------------------

def conv_forward(F, W, V, S, U0: float, x0: float = 0.0, domain=DEFAULT_DOMAIN) -> ConvectiveSystem:
    """Recover Q, P and U from the target's coefficients.

    U is fixed by ``U(x0) = U0``.  Raises :class:`ZeroConvectionError` when F
    vanishes and :class:`ConstraintError` when the a1 constraint fails.
    """
    F, W, V, S = (as_expr(v) for v in (F, W, V, S))
    domain = tuple(map(float, domain))
    if not domain[0] <= x0 <= domain[1]:
        raise ValueError(f"x0 = {x0} lies outside {domain}")
    if _nonvanishing(F, "F", domain, ZeroConvectionError) == "zero":
        raise ZeroConvectionError(
            "F = 0: this case needs an added cubic term R(x) psi^3, which is not supported")
    Q = -2.0 / F
    P = -2.0 * W / (F * F)
    xs, c = _samples(constraint_expr(F, W, V), domain)
    norm = float(np.max(np.abs(c)))
    if not norm <= CONSTRAINT_TOL:
        raise ConstraintError(f"constraint violated: sup |c| = {norm:.6g} > {CONSTRAINT_TOL:g}",
                              norm, {"x": xs.tolist(), "constraint": c.tolist()})
    k, s = u_equation(F, W, V, S, P, Q)
    if isinstance(k, Const) and isinstance(s, Const):
        U = _u_closed_form(k, s, float(U0), float(x0))
        how = "closed form"
    else:
        U = _u_numeric(k, s, float(U0), float(x0), domain)
        how = "RK45"
    info = {"U_method": how, "U0": float(U0), "x0": float(x0),
            "u_equation": {"k": k.to_text(), "s": s.to_text()}}
    return ConvectiveSystem(F, W, V, S, Q, P, U, norm, domain, info)


def conv_reverse(P, Q, U, domain=DEFAULT_DOMAIN) -> ConvectiveSystem:
    """Synthesize F, W, V, S so that ``P + Q phi'/phi`` solves the target."""
    P, Q, U = as_expr(P), as_expr(Q), as_expr(U)
    domain = tuple(map(float, domain))
    if _nonvanishing(Q, "Q", domain) == "zero":
        raise ValueError("Q vanishes identically")
    F = -2.0 / Q
    W = -2.0 * P / (Q * Q)
    V = (Q * Q.diff(2) + 4.0 * P * P + 2.0 * (P * Q).diff()) / (Q * Q)
    # S from a0 = 0 with F Q = -2
    S = (P.diff(2) - W * P * P + 2.0 * U * P - (V + F * P.diff()) * P
         + Q * U.diff() + 2.0 * U * Q.diff())
    _, c = _samples(constraint_expr(F, W, V), domain)
    return ConvectiveSystem(F, W, V, S, Q, P, U, float(np.max(np.abs(c))), domain,
                            {"U_method": "given"})


def conv_ai_residuals(sys: ConvectiveSystem, x) -> np.ndarray:
    """Rows a0..a3, evaluated from the system's stored coefficients."""
    x = np.asarray(x, dtype=float)
    P, dP, ddP = derivs_of(sys.P, x, 2)
    Q, dQ, ddQ = derivs_of(sys.Q, x, 2)
    U, dU = derivs_of(as_function(sys.U), x, 1)
    F, W, V, S = (np.broadcast_to(c(x), x.shape) for c in (sys.F, sys.W, sys.V, sys.S))
    a3 = Q * F + 2.0
    a2 = Q * (F * P - W * Q) - (2.0 + F * Q) * dQ
    a1 = ddQ - F * P * dQ - U * F * Q * Q - (2.0 * U + V + F * dP + 2.0 * W * P) * Q
    a0 = ddP - W * P * P - (F * Q * U + V + F * dP) * P + Q * dU + 2.0 * U * dQ - S
    return np.stack(np.broadcast_arrays(a0, a1, a2, a3))


# -- removing the psi' term ---------------------------------------------------------------

@dataclass
class ReducedSystem:
    """Coefficients of the equation for ``xi = p psi`` (no first-derivative term).

    ``p = exp(-(1/2) int_{x0}^x V1)``, so ``p'/p = -V1/2`` and
    ``p''/p = V1^2/4 - V1'/2``.
    """

    p: object
    F: object
    W: object
    V: object
    S: object
    V1: Expr
    x0: float
    domain: tuple
    original: dict = field(default_factory=dict)

    def nonlinear(self) -> NonlinearODE:
        return NonlinearODE("convective", {}, {"S": self.S, "V": self.V, "F": self.F, "W": self.W})

    def transform(self, psi: GridFunction) -> GridFunction:
        """Map a solution of the original equation (rows psi, dpsi, ddpsi) to xi."""
        x = psi.x
        p, dp = derivs_of(self.p, x, 1)
        v1, dv1 = derivs_of(self.V1, x, 1)
        ddp = p * (0.25 * v1 * v1 - 0.5 * dv1)
        y, dy, ddy = psi["psi"], psi["dpsi"], psi["ddpsi"]
        return GridFunction(x, {"psi": p * y, "dpsi": dp * y + p * dy,
                                "ddpsi": ddp * y + 2.0 * dp * dy + p * ddy})

    def summary(self) -> dict:
        return {"p": self.p.to_text(), "F": self.F.to_text(), "W": self.W.to_text(),
                "V": self.V.to_text(), "S": self.S.to_text(), "x0": self.x0}


def _integrating_factor(V1: Expr, x0: float, domain) -> object:
    if isinstance(V1, Const):
            return Func("exp", (-0.5 * V1.value) * (X - x0))
    a, b = domain
    _, v = _samples(V1, domain, 1001)
    if not np.all(np.isfinite(v)):
        raise ReductionError(f"V1 is not finite on [{a}, {b}]; the integral diverges")

    def rhs(x, y):
        return [-0.5 * float(V1(x))]

    pieces = []
    for end in (a, b):
        if end == x0:
            continue
        sol = solve_ivp(rhs, (x0, end), [0.0], method="RK45", rtol=RTOL, atol=ATOL,
                        dense_output=True)
        if sol.status != 0 or not np.all(np.isfinite(sol.y)):
            raise ReductionError(f"integral of V1 diverges: {sol.message}")
        pieces.append((min(x0, end), max(x0, end), sol.sol))

    def value(x):
        x = np.asarray(x, dtype=float)
        logp = np.zeros(x.shape)
        for lo, hi, dense in pieces:
            sel = (x >= lo) & (x <= hi) & (x != x0)
            if np.any(sel):
                logp[sel] = dense(x[sel])[0]
        return np.exp(logp)

    def deriv(x):
        x = np.asarray(x, dtype=float)
        return -0.5 * np.broadcast_to(V1(x), x.shape) * value(x)

    return DenseFunction(value, deriv, (a, b), label="p (RK45)")


def _combine(fn, label, *parts):
    """Pointwise combination of coefficient functions as a value-only function."""
    def value(x):
        x = np.asarray(x, dtype=float)
        return fn(*(np.broadcast_to(derivs_of(as_function(q), x, 0)[0], x.shape) for q in parts))

    def deriv(x):
        raise ValueError(f"{label} carries no derivative")

    return DenseFunction(value, deriv, label=label)


def conv_reduce(V1, F, V, W, S, x0: float = 0.0, domain=DEFAULT_DOMAIN) -> ReducedSystem:
    """Remove ``V1 psi'`` from ``psi'' = S + (V + F psi') psi + V1 psi' + W psi^2``.

    Returns the coefficients of the same-form equation satisfied by
    ``xi = p psi``: ``p S``, ``V + V1^2/4 - V1'/2``, ``F/p`` and
    ``(W + F V1/2)/p``, with ``p(x0) = 1``.
    """
    V1, F, V, W, S = (as_expr(v) for v in (V1, F, V, W, S))
    domain = tuple(map(float, domain))
    if not domain[0] <= x0 <= domain[1]:
        raise ValueError(f"x0 = {x0} lies outside {domain}")
    p = _integrating_factor(V1, float(x0), domain)
    Vt = V + 0.25 * V1 * V1 - 0.5 * V1.diff()
    Wnum = W + 0.5 * F * V1
    if isinstance(p, Expr):
        St, Ft, Wt = p * S, F / p, Wnum / p
    else:
        St = _combine(lambda pv, s: pv * s, "p S", p, S)
        Ft = _combine(lambda pv, f: f / pv, "F / p", p, F)
        Wt = _combine(lambda pv, w: w / pv, "(W + F V1/2) / p", p, Wnum)
    original = {"V1": V1.to_text(), "F": F.to_text(), "V": V.to_text(),
                "W": W.to_text(), "S": S.to_text()}
    return ReducedSystem(p, Ft, Wt, Vt, St, V1, float(x0), domain, original)


def example_coefficients(a: float = 1.0) -> dict:
    """``F = 1, W = a, V = 4 a^2, S = 0``: the standard Bessel-solvable example."""
    return {"F": 1.0, "W": float(a), "V": 4.0 * a * a, "S": 0.0}
