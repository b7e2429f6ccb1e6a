"""Solvers for the paired linear problems and a catalog of closed-form phi.

``solve_linear_ode`` integrates ``phi'' = K phi' + U phi`` with adaptive RK45,
``solve_heat`` advances ``phi_t = M(x) phi_xx`` with Crank-Nicolson, and
``catalog_phi`` serves closed-form solutions only after checking them against
their linear equation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special
from scipy.integrate import solve_ivp
from scipy.linalg import solve_banded

from .expr import Expr, as_expr, parse_expr
from .grid import GridFunction, fd_derivative

RTOL = 1e-10
ATOL = 1e-12
VALIDATION_TOL = 1e-9
VALIDATION_POINTS = 50
FLAT_U = 1e-12


class LinearSolveError(RuntimeError):
    pass


class FormulaValidationError(RuntimeError):
    def __init__(self, message: str, profile=None):
        super().__init__(message)
        self.profile = profile


# -- coefficient functions ------------------------------------------------------

class DenseFunction:
    """Numerically known function with a known first derivative.

    Used for coefficients that come out of an ODE solve (e.g. U of a convective
    system), where ``deriv`` is the ODE right-hand side.
    """

    def __init__(self, value: Callable, deriv: Callable, domain=None, label: str = "numeric"):
        self._value = value
        self._deriv = deriv
        self.domain = domain
        self.label = label

    def __call__(self, x):
        v = np.asarray(self._value(x), dtype=float)
        return float(v) if v.ndim == 0 else v

    def derivs(self, x, order: int):
        if order > 1:
            raise ValueError("numeric coefficients carry at most one derivative")
        x = np.asarray(x, dtype=float)
        rows = [np.asarray(self._value(x), dtype=float)]
        if order == 1:
            rows.append(np.asarray(self._deriv(x), dtype=float))
        return np.stack(rows)

    def to_text(self) -> str:
        return f"<{self.label}>"


def as_function(f):
    """Coerce text, numbers and Exprs to something with ``__call__``/``derivs``."""
    if f is None:
        return None
    if isinstance(f, (Expr, DenseFunction)):
        return f
    return as_expr(f)


def derivs_of(f, x, order: int) -> np.ndarray:
    """Stacked derivatives of a coefficient (zeros for an absent one)."""
    x = np.asarray(x, dtype=float)
    if f is None:
        return np.zeros((order + 1,) + x.shape)
    d = f.derivs(x, order)
    return np.broadcast_to(d, (order + 1,) + x.shape)


# -- specs ------------------------------------------------------------------------

@dataclass
class BoundaryCondition:
    """``dirichlet``/``neumann`` carry an Expr of ``t``; ``robin`` a constant kappa
    with ``phi_x = kappa * phi``."""

    kind: str
    value: object = 0.0

    def __post_init__(self):
        if self.kind not in ("dirichlet", "neumann", "robin"):
            raise ValueError(f"unknown boundary kind {self.kind!r}")
        if self.kind == "robin":
            self.value = float(self.value)
        elif isinstance(self.value, str):
            self.value = parse_expr(self.value, ["t"])
        else:
            self.value = as_expr(self.value)

    def at(self, t: float) -> float:
        if self.kind == "robin":
            return self.value
        return float(self.value(0.0, t=t)) if "t" in self.value.params else float(self.value(0.0))


@dataclass
class LinearSpec:
    kind: str
    domain: tuple
    U: object = None
    K: object = None
    M: object = None
    bc_left: BoundaryCondition | None = None
    bc_right: BoundaryCondition | None = None

    def __post_init__(self):
        a, b = map(float, self.domain)
        if not a < b:
            raise ValueError("domain must satisfy a < b")
        self.domain = (a, b)
        if self.kind == "ode2":
            if self.U is None:
                raise ValueError("ode2 spec needs U")
            self.U = as_function(self.U)
            self.K = as_function(self.K)
        elif self.kind == "heat":
            if self.M is None:
                raise ValueError("heat spec needs M")
            self.M = as_function(self.M)
        else:
            raise ValueError(f"unknown linear kind {self.kind!r}")


def ode2(U, K=None, domain=(0.0, 1.0)) -> LinearSpec:
    return LinearSpec("ode2", domain, U=U, K=K)


def heat(M, domain=(0.0, 1.0), bc_left=None, bc_right=None) -> LinearSpec:
    return LinearSpec("heat", domain, M=M, bc_left=bc_left, bc_right=bc_right)


# -- phi'' = K phi' + U phi ---------------------------------------------------------

def _ode_rhs(spec: LinearSpec):
    U, K = spec.U, spec.K

    def rhs(x, y):
        u = U(x)
        k = K(x) if K is not None else 0.0
        if not (math.isfinite(u) and math.isfinite(k)):
            raise LinearSolveError(f"non-finite coefficient at x={x!r}")
        return [y[1], k * y[1] + u * y[0]]

    return rhs


def integrate_linear(spec: LinearSpec, ic, x0: float, x_end: float, rtol=RTOL, atol=ATOL):
    """Dense solution object on [x0, x_end] (either direction)."""
    sol = solve_ivp(_ode_rhs(spec), (x0, x_end), [float(ic[0]), float(ic[1])],
                    method="RK45", rtol=rtol, atol=atol, dense_output=True)
    if sol.status != 0:
        where = sol.t[-1] if sol.t.size else x0
        raise LinearSolveError(f"linear solve failed near x={where:.6g}: {sol.message}")
    return sol.sol


def solve_linear_ode(spec: LinearSpec, ic, grid, x0: float | None = None,
                     rtol: float = RTOL, atol: float = ATOL) -> GridFunction:
    """Sample the solution of ``phi'' = K phi' + U phi`` with ``phi(x0), phi'(x0) = ic``.

    ``grid`` is a point count (uniform on the linear problem's domain) or an explicit
    array.  ``x0`` defaults to the first grid point; an interior anchor is
    integrated in both directions.
    """
    if spec.kind != "ode2":
        raise ValueError("solve_linear_ode needs an ode2 spec")
    x = np.linspace(*spec.domain, int(grid)) if np.ndim(grid) == 0 else np.asarray(grid, dtype=float)
    x0 = float(x[0]) if x0 is None else float(x0)
    phi = np.empty_like(x)
    dphi = np.empty_like(x)
    right = x >= x0
    if np.any(right) and x[-1] > x0:
        dense = integrate_linear(spec, ic, x0, float(x[-1]), rtol, atol)
        vals = dense(x[right])
        phi[right], dphi[right] = vals[0], vals[1]
    elif np.any(right):
        phi[right], dphi[right] = ic[0], ic[1]
    left = ~right
    if np.any(left):
        dense = integrate_linear(spec, ic, x0, float(x[0]), rtol, atol)
        vals = dense(x[left])
        phi[left], dphi[left] = vals[0], vals[1]
    return GridFunction(x, {"phi": phi, "dphi": dphi})


# -- phi_t = M(x) phi_xx ----------------------------------------------------------------

def solve_heat(spec: LinearSpec, phi0, t_end: float, nx: int, nt: int,
               startup: int = 0) -> GridFunction:
    """Crank-Nicolson in time, centred second differences in space.

    With ``startup > 0`` the first steps are each taken as two backward-Euler
    half steps, which damps the stiff modes that Crank-Nicolson leaves
    oscillating when the initial data do not match the boundary conditions.

    Returns a field with ``nt + 1`` time levels and rows ``phi`` and ``phi_x``
    (fourth-order differences, one-sided at the edges).  Missing boundary
    conditions default to Dirichlet values held at ``phi0``'s end values.
    """
    if spec.kind != "heat":
        raise ValueError("solve_heat needs a heat spec")
    if nx < 16 or nt < 16:
        raise ValueError("nx and nt must be at least 16")
    a, b = spec.domain
    x = np.linspace(a, b, nx)
    h = x[1] - x[0]
    dt = t_end / nt
    t = np.linspace(0.0, t_end, nt + 1)
    M = np.broadcast_to(np.asarray(spec.M(x), dtype=float), x.shape)
    if np.any(~np.isfinite(M)) or np.any(M <= 0):
        raise ValueError("heat coefficient M must be positive on the grid")
    phi = np.asarray(as_function(phi0)(x), dtype=float) * np.ones_like(x)
    left = spec.bc_left or BoundaryCondition("dirichlet", float(phi[0]))
    right = spec.bc_right or BoundaryCondition("dirichlet", float(phi[-1]))

    r = M / h**2
    # L phi = lo*phi[i-1] + di*phi[i] + up*phi[i+1] (+ source at Neumann ends)
    lo = r.copy()
    di = -2.0 * r
    up = r.copy()
    lo[0] = 0.0
    up[-1] = 0.0
    if left.kind in ("neumann", "robin"):
        up[0] = 2.0 * r[0]
        if left.kind == "robin":
            di[0] = -2.0 * r[0] - 2.0 * h * left.value * r[0]
    if right.kind in ("neumann", "robin"):
        lo[-1] = 2.0 * r[-1]
        if right.kind == "robin":
            di[-1] = -2.0 * r[-1] + 2.0 * h * right.value * r[-1]
    # The ghost-node Robin row approximates phi_xx +- (h/3) phi_xxx; at a Robin
    # end phi_xxx = (kappa - M'/M) phi_xx, which removes the O(h) term.
    dM = derivs_of(spec.M, np.array([a, b]), 1)
    for end, bc, sign in ((0, left, 1.0), (-1, right, -1.0)):
        if bc.kind == "robin":
            slope = bc.value - dM[1, end] / dM[0, end]
            factor = 1.0 + sign * h * slope / 3.0
            lo[end] /= factor
            di[end] /= factor
            up[end] /= factor

    def source(tn):
        s = np.zeros_like(x)
        if left.kind == "neumann":
            s[0] = -2.0 * h * left.at(tn) * r[0]
        if right.kind == "neumann":
            s[-1] = 2.0 * h * right.at(tn) * r[-1]
        return s

    def banded(theta):
        m = np.zeros((3, nx))
        m[0, 1:] = -theta * dt * up[:-1]
        m[1] = 1.0 - theta * dt * di
        m[2, :-1] = -theta * dt * lo[1:]
        if left.kind == "dirichlet":
            m[1, 0], m[0, 1] = 1.0, 0.0
        if right.kind == "dirichlet":
            m[1, -1], m[2, -2] = 1.0, 0.0
        if np.any(m[1] == 0):
            raise LinearSolveError("singular time-stepping system")
        return m

    # Crank-Nicolson over dt and backward Euler over dt/2 share this matrix.
    ab = banded(0.5)

    out = np.empty((nt + 1, nx))
    if left.kind == "dirichlet":
        phi[0] = left.at(0.0)
    if right.kind == "dirichlet":
        phi[-1] = right.at(0.0)
    out[0] = phi
    s_old = source(0.0)
    def implicit_half(phi, t_new):
        rhs = phi + 0.5 * dt * source(t_new)
        if left.kind == "dirichlet":
            rhs[0] = left.at(t_new)
        if right.kind == "dirichlet":
            rhs[-1] = right.at(t_new)
        return solve_banded((1, 1), ab, rhs)

    for n in range(nt):
        t_new = t[n + 1]
        s_new = source(t_new)
        if n < startup:
            phi = implicit_half(implicit_half(phi, t[n] + 0.5 * dt), t_new)
        else:
            Lphi = di * phi
            Lphi[1:] += lo[1:] * phi[:-1]
            Lphi[:-1] += up[:-1] * phi[1:]
            rhs = phi + 0.5 * dt * (Lphi + s_old + s_new)
            if left.kind == "dirichlet":
                rhs[0] = left.at(t_new)
            if right.kind == "dirichlet":
                rhs[-1] = right.at(t_new)
            phi = solve_banded((1, 1), ab, rhs)
        if not np.all(np.isfinite(phi)):
            raise LinearSolveError(f"non-finite heat solution at t={t_new:.6g}")
        out[n + 1] = phi
        s_old = s_new
    phi_x = fd_derivative(out, h, 1, accuracy=4, axis=1)
    return GridFunction(x, {"phi": out, "phi_x": phi_x}, t=t)


# -- closed-form catalog --------------------------------------------------------------------

@dataclass
class ClosedFormEntry:
    """A candidate closed-form phi together with its validation verdict.

    Failed entries keep their residual profile but refuse to evaluate.
    """

    name: str
    params: dict
    constraints: str
    spec: LinearSpec
    status: str = "unchecked"
    max_residual: float = math.nan
    profile: dict = field(default_factory=dict)
    reason: str = ""
    _phi: object = None

    @property
    def validated(self) -> bool:
        return self.status == "validated"

    def _require(self):
        if not self.validated:
            raise FormulaValidationError(
                f"closed form {self.name!r} is not validated ({self.reason or self.status})",
                self.profile)

    def derivs(self, x, order: int = 1):
        self._require()
        return self._phi.derivs(x, order)

    def phi(self, x):
        return self.derivs(x, 0)[0]

    def dphi(self, x):
        return self.derivs(x, 1)[1]

    @property
    def phi_expr(self):
        self._require()
        return self._phi if isinstance(self._phi, Expr) else None

    def summary(self) -> dict:
        return {"name": self.name, "status": self.status,
                "max_residual": None if math.isnan(self.max_residual) else self.max_residual,
                "reason": self.reason}


def validate_phi(phi, spec: LinearSpec, n: int = VALIDATION_POINTS, tol: float = VALIDATION_TOL):
    """Pointwise ``|phi'' - K phi' - U phi|`` against ``tol * (1 + |phi''|)``."""
    x = np.linspace(*spec.domain, n)
    d = phi.derivs(x, 2)
    U = np.broadcast_to(spec.U(x), x.shape)
    K = np.zeros_like(x) if spec.K is None else np.broadcast_to(spec.K(x), x.shape)
    res = np.abs(d[2] - K * d[1] - U * d[0])
    bound = tol * (1.0 + np.abs(d[2]))
    ok = bool(np.all(np.isfinite(res)) and np.all(res <= bound))
    return ok, {"x": x.tolist(), "residual": res.tolist(), "bound": bound.tolist()}, float(np.nanmax(res))


class _BesselPhi:
    """C1 I_1(z) + C2 K_1(z) with z = sqrt(C) exp(-a x) / a."""

    def __init__(self, a, C, C1, C2):
        self.a, self.C, self.C1, self.C2 = a, C, C1, C2

    def derivs(self, x, order):
        x = np.asarray(x, dtype=float)
        a = self.a
        z = math.sqrt(self.C) * np.exp(-a * x) / a
        f = [self.C1 * special.ivp(1, z, n) + self.C2 * special.kvp(1, z, n) for n in range(order + 1)]
        rows = [f[0]]
        if order >= 1:
            rows.append(-a * z * f[1])
        if order >= 2:
            rows.append(a * a * (z * z * f[2] + z * f[1]))
        return np.stack(rows)


def _vdp_case1_U(mu, beta, alpha):
    k2 = (mu * beta) ** 2 - 4 * alpha
    if k2 < 0:
        raise ValueError("complex k is not supported")
    k = math.sqrt(k2)
    P = (mu * beta - k) / 4
    return 3 * P * P - mu * beta * P + alpha / 2, k


def _constant_U_phi(U: float, C3: float, C4: float) -> Expr:
    from .expr import X, Func
    if U > FLAT_U:
        w = math.sqrt(U)
        return C3 * Func("exp", w * X) + C4 * Func("exp", -w * X)
    if U < -FLAT_U:
        w = math.sqrt(-U)
        return C3 * Func("cos", w * X) + C4 * Func("sin", w * X)
    return C3 + C4 * X


def _entry_vdp_case1(p, domain):
    U, _ = _vdp_case1_U(p["mu"], p["beta"], p["alpha"])
    return _constant_U_phi(U, p.get("C3", 1.0), p.get("C4", 1.0)), ode2(U, None, domain), None


def _entry_vdp_trig(p, domain, case):
    from .expr import X, Func
    mu, beta, alpha = p["mu"], p["beta"], p["alpha"]
    U, k = _vdp_case1_U(mu, beta, alpha)
    if case == 1:
        rad = (mu * beta) ** 2 + 2 * mu * beta * k - 3 * k * k - 8 * alpha
    else:
        if abs(k) > 1e-12:
            raise ValueError("case 2 requires k = 0")
        rad = (mu * beta) ** 2 - 8 * alpha
    spec = ode2(U, None, domain)
    if rad < 0:
        return None, spec, f"omega^2 = {rad / 16:.6g} < 0 (imaginary frequency)"
    w = math.sqrt(rad) / 4
    phi = p.get("C3", 1.0) * Func("cos", w * X) + p.get("C4", 1.0) * Func("sin", w * X)
    return phi, spec, None


def _entry_vdp_case3(p, domain, printed_U: bool):
    mb, c = p["mu"] * p["beta"], p["c"]
    E = parse_expr("exp(-m*x)", ["m"]).bind(m=mb)
    if printed_U:
        U = -c * mb**2 * (E - c) / (E + c) ** 2
    else:
        P = c * mb / (2 * (E + c))
        U = 3 * P * P - mb * P
    phi = parse_expr("(C3 + C4*(c*exp(m*x) + m*x)) / sqrt(1 + c*exp(m*x))",
                     ["C3", "C4", "c", "m"]).bind(C3=p.get("C3", 1.0), C4=p.get("C4", 1.0), c=c, m=mb)
    return phi, ode2(U, None, domain), None


def _painleve_example(p, domain, example):
    if example == 1:
        P = parse_expr("a*x + b*x^2 + c*x^3 + d", list("abcd")).bind(
            **{k: p.get(k, 0.0) for k in "abcd"})
        phi = parse_expr(
            "C1*exp(-(x/2)*(c*x^3/2 + 2*b*x^2/3 + a*x + 2*d - 2))"
            " + C2*exp(-(x/2)*(c*x^3/2 + 2*b*x^2/3 + a*x + 2*d + 2))",
            ["C1", "C2", "a", "b", "c", "d"]).bind(
            C1=p.get("C1", 1.0), C2=p.get("C2", 1.0), **{k: p.get(k, 0.0) for k in "abcd"})
    elif example == 2:
        P = parse_expr("sin(x)")
        phi = parse_expr("C1*exp(cos(x))*sinh(x) + C2*exp(cos(x))*cosh(x)", ["C1", "C2"]).bind(
            C1=p.get("C1", 1.0), C2=p.get("C2", 1.0))
    elif example == 3:
        P = parse_expr("x*exp(x)")
        phi = parse_expr("C1*exp((1-x)*exp(x))*sinh(x) + C2*exp((1-x)*exp(x))*cosh(x)",
                         ["C1", "C2"]).bind(C1=p.get("C1", 1.0), C2=p.get("C2", 1.0))
    else:
        raise KeyError(f"unknown Painleve example {example}")
    # alpha=-1, beta=1, gamma=1 (Q=1): K = -2P, U = 1 - P^2 - P'
    return phi, ode2(1.0 - P * P - P.diff(), -2.0 * P, domain), None


def _entry_bessel(p, domain):
    a, C = p.get("a", 1.0), p.get("C", 1.0)
    if a <= 0 or C <= 0:
        raise ValueError("Bessel entry needs a > 0 and C > 0")
    U = parse_expr("C*exp(-2*a*x) + a^2", ["C", "a"]).bind(C=C, a=a)
    return _BesselPhi(a, C, p.get("C1", 1.0), p.get("C2", 0.0)), ode2(U, None, domain), None


_CATALOG = {
    "vdp_case1": ("C1=C2=0 in the unforced family; real k", _entry_vdp_case1),
    "vdp_case1_printed": ("C1=C2=0; printed trigonometric form",
                          lambda p, d: _entry_vdp_trig(p, d, 1)),
    "vdp_case2_printed": ("k=0, C1=0; printed trigonometric form",
                          lambda p, d: _entry_vdp_trig(p, d, 2)),
    "vdp_case3": ("alpha=0, k=mu*beta; U from the recomputed P",
                  lambda p, d: _entry_vdp_case3(p, d, False)),
    "vdp_case3_printed_U": ("alpha=0, k=mu*beta; U as printed",
                            lambda p, d: _entry_vdp_case3(p, d, True)),
    "painleve_ex1": ("(alpha,beta,gamma,delta)=(-1,1,1,-1), cubic P",
                     lambda p, d: _painleve_example(p, d, 1)),
    "painleve_ex2": ("(alpha,beta,gamma,delta)=(-1,1,1,-1), P=sin x",
                     lambda p, d: _painleve_example(p, d, 2)),
    "painleve_ex3": ("(alpha,beta,gamma,delta)=(-1,1,1,-1), P=x e^x",
                     lambda p, d: _painleve_example(p, d, 3)),
    "convective_bessel": ("U = C exp(-2ax) + a^2, a>0, C>0", _entry_bessel),
}

CATALOG_NAMES = tuple(_CATALOG)


def catalog_phi(name: str, domain=(0.0, 1.0), **params) -> ClosedFormEntry:
    """Build and validate a catalog entry.

    The returned entry has ``status`` ``validated`` or ``failed``; only
    validated entries evaluate.
    """
    try:
        constraints, builder = _CATALOG[name]
    except KeyError:
        raise KeyError(f"unknown catalog entry {name!r}") from None
    phi, spec, reason = builder(params, domain)
    entry = ClosedFormEntry(name, dict(params), constraints, spec)
    if phi is None:
        entry.status, entry.reason = "failed", reason
        return entry
    ok, profile, worst = validate_phi(phi, spec)
    entry._phi = phi
    entry.profile = profile
    entry.max_residual = worst
    entry.status = "validated" if ok else "failed"
    if not ok:
        entry.reason = f"residual {worst:.3g} exceeds {VALIDATION_TOL:g}*(1+|phi''|)"
    return entry


def bessel_fit(a: float, C: float, x0: float, phi0: float, dphi0: float):
    """Constants (C1, C2) of the Bessel form matching phi(x0), phi'(x0)."""
    rows = []
    for c1, c2 in ((1.0, 0.0), (0.0, 1.0)):
        d = _BesselPhi(a, C, c1, c2).derivs(np.array([x0]), 1)[:, 0]
        rows.append(d)
    A = np.array(rows).T
    return tuple(np.linalg.solve(A, [phi0, dphi0]))
