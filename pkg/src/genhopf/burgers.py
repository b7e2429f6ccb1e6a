"""Generalized Burgers equations linearized through the heat equation.

Target::

    psi_t - M psi_xx = H psi psi_x + V psi + W psi^2

paired with ``phi_t = M phi_xx`` through ``psi = P + Q phi_x/phi``.  Given M
and H the transform fixes Q, P, W and V; the pair is admissible only when the
remaining compatibility expression vanishes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .expr import Expr, as_expr, parse_expr
from .grid import GridFunction, fd_derivative, pole_mask
from .lincore import BoundaryCondition, as_function, derivs_of, heat, solve_heat
from .oracle import ResidualReport, burgers_residual, integrate_pde_mol

COMPAT_TOL = 1e-8
MAX_MASKED = 0.2
SAMPLE_POINTS = 201
EDGE_BAND = 3


class FamilyParameterError(ValueError):
    """Parameters make H vanish or M non-positive on the domain."""


class SolutionMaskedError(RuntimeError):
    """Too much of the field sits inside pole masks."""


@dataclass
class BurgersFamily:
    M: Expr
    H: Expr
    Q: Expr
    P: Expr
    W: Expr
    V: Expr
    compat: Expr
    domain: tuple
    compat_norm: float
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    @property
    def accepted(self) -> bool:
        return self.compat_norm <= COMPAT_TOL

    def pde_coeffs(self) -> dict:
        return {"M": self.M, "H": self.H, "V": self.V, "W": self.W}

    def summary(self) -> dict:
        return {"kind": self.kind, "params": dict(self.params), "domain": list(self.domain),
                **{k: getattr(self, k).to_text() for k in ("M", "H", "Q", "P", "W", "V")},
                "compat_norm": self.compat_norm, "accepted": self.accepted}


def compat_expr(M, H, P) -> Expr:
    """The expression that must vanish once Q, P, W, V are fixed by M and H."""
    M, H, P = as_expr(M), as_expr(H), as_expr(P)
    dM, dH, ddH = M.diff(), H.diff(), H.diff(2)
    return ((H * dM / (2.0 * M) - dH) * P * P + (M * ddH / H - H * P.diff()) * P
            - M * P.diff(2))


def _sample(e, domain, n=SAMPLE_POINTS):
    x = np.linspace(*domain, n)
    return x, np.broadcast_to(np.asarray(e(x), dtype=float), x.shape)


def burgers_derive(M, H, domain=(0.0, 1.0), kind: str = "custom", params=None) -> BurgersFamily:
    """``Q = 2M/H``, ``P = 2 M H'/H^2 - M'/H``, ``W = H' - H M'/(2M)``, ``V = -M H''/H``."""
    M, H = as_expr(M), as_expr(H)
    x, Hv = _sample(H, domain, 1001)
    if not np.all(np.isfinite(Hv)) or np.any(Hv == 0) or np.any(np.sign(Hv[:-1]) != np.sign(Hv[1:])):
        raise FamilyParameterError("H vanishes or is singular in the domain")
    _, Mv = _sample(M, domain, 1001)
    if not np.all(np.isfinite(Mv)) or np.any(Mv <= 0):
        raise FamilyParameterError("M must be positive on the domain")
    dM, dH = M.diff(), H.diff()
    Q = 2.0 * M / H
    P = 2.0 * M * dH / (H * H) - dM / H
    W = dH - H * dM / (2.0 * M)
    V = -(M * H.diff(2)) / H
    c = compat_expr(M, H, P)
    _, cv = _sample(c, domain)
    norm = float(np.max(np.abs(cv))) if np.all(np.isfinite(cv)) else math.inf
    return BurgersFamily(M, H, Q, P, W, V, c, tuple(map(float, domain)), norm, kind,
                         dict(params or {}))


def h_condition(H, x) -> np.ndarray:
    """``H^2 H''' - 5 H H' H'' + 4 H'^3``, zero for admissible H when M is constant."""
    d = as_expr(H).derivs(np.asarray(x, dtype=float), 3)
    return d[0] ** 2 * d[3] - 5 * d[0] * d[1] * d[2] + 4 * d[1] ** 3


def _check_cos_margin(omega, beta0, domain):
    if omega == 0:
        return
    a, b = domain
    margin = 0.1 / abs(omega)
    # zeros at omega x + beta0 = pi/2 + n pi
    lo, hi = sorted(((a - margin) * omega + beta0, (b + margin) * omega + beta0))
    n = math.ceil((lo - math.pi / 2) / math.pi)
    if math.pi / 2 + n * math.pi <= hi:
        raise FamilyParameterError(
            f"cos(omega x + beta0) vanishes within {margin:.3g} of the domain")


def burgers_families(kind: str, domain=(0.0, 1.0), **params) -> BurgersFamily:
    """Admissible families.

    ``rationalH``: M = A, H = 1/(a x + b)
    ``cosH``: M = A, H = B / cos(omega x + beta0)
    ``expH``: M = A, H = C e^{alpha x}
    ``quadraticM``: H = 1, M = (a1 x + b1)^2
    """
    p = dict(params)
    A = float(p.pop("A", 1.0))
    if kind in ("rationalH", "cosH", "expH") and A <= 0:
        raise FamilyParameterError("A must be positive")
    if kind == "rationalH":
        a, b = float(p.get("a", 1.0)), float(p.get("b", 3.0))
        lin = [a * x + b for x in domain]
        if lin[0] * lin[1] <= 0:
            raise FamilyParameterError("a x + b vanishes on the domain")
        H = 1.0 / parse_expr("a*x + b", ["a", "b"]).bind(a=a, b=b)
        M = as_expr(A)
        full = {"a": a, "b": b, "A": A}
    elif kind == "cosH":
        B, w, b0 = float(p.get("B", 1.0)), float(p.get("omega", 1.0)), float(p.get("beta0", 0.0))
        if B == 0:
            raise FamilyParameterError("B must be nonzero")
        _check_cos_margin(w, b0, domain)
        H = B / parse_expr("cos(w*x + c)", ["w", "c"]).bind(w=w, c=b0)
        M = as_expr(A)
        full = {"B": B, "omega": w, "beta0": b0, "A": A}
    elif kind == "expH":
        C, al = float(p.get("C", 2.0)), float(p.get("alpha", 1.0))
        if C == 0:
            raise FamilyParameterError("C must be nonzero")
        H = C * parse_expr("exp(a*x)", ["a"]).bind(a=al)
        M = as_expr(A)
        full = {"C": C, "alpha": al, "A": A}
    elif kind == "quadraticM":
        a1, b1 = float(p.get("a1", 1.0)), float(p.get("b1", 2.0))
        lin = [a1 * x + b1 for x in domain]
        if lin[0] * lin[1] <= 0:
            raise FamilyParameterError("a1 x + b1 vanishes on the domain")
        M = parse_expr("(a*x + b)^2", ["a", "b"]).bind(a=a1, b=b1)
        H = as_expr(1.0)
        full = {"a1": a1, "b1": b1}
    else:
        raise ValueError(f"unknown family {kind!r}")
    return burgers_derive(M, H, domain, kind, full)


# -- end-to-end solve -----------------------------------------------------------------

@dataclass
class BurgersSolution:
    """psi and phi on the time levels; the residual field on the half levels."""

    field: GridFunction
    residual: GridFunction
    report: ResidualReport
    mask_fraction: float
    max_level_mask_fraction: float


def _robin_ends(phi0, domain):
    a, b = domain
    d = derivs_of(as_function(phi0), np.array([a, b]), 1)
    if np.any(d[0] == 0):
        raise ValueError("phi0 vanishes at a boundary")
    return (BoundaryCondition("robin", d[1, 0] / d[0, 0]),
            BoundaryCondition("robin", d[1, 1] / d[0, 1]))


def burgers_solve(family: BurgersFamily, phi0, t_end: float, nx: int, nt: int,
                  boundary: str = "robin", threshold: float = 1e-6) -> BurgersSolution:
    """Solve the heat equation, transform, and check the nonlinear PDE pointwise.

    ``boundary`` may also be an explicit ``(left, right)`` pair of
    :class:`~genhopf.lincore.BoundaryCondition`.  ``boundary="robin"`` imposes ``phi_x = kappa phi`` with kappa fixed by
    ``phi0`` at each end, which holds psi at its initial boundary values;
    ``"dirichlet"`` holds phi at its initial end values.  The residual uses
    exact derivatives of P and Q with fourth-order differences in x of
    ``phi_x / phi`` and is evaluated midway between time levels.
    """
    if not family.accepted:
        raise ValueError(f"family rejected: compat_norm {family.compat_norm:.3g}")
    phi0 = as_function(phi0)
    x0 = np.linspace(*family.domain, 1001)
    if np.any(np.broadcast_to(phi0(x0), x0.shape) <= 0):
        raise ValueError("phi0 must be positive on the domain")
    if isinstance(boundary, tuple):
        left, right = boundary
    elif boundary == "robin":
        left, right = _robin_ends(phi0, family.domain)
    elif boundary == "dirichlet":
        left = right = None
    else:
        raise ValueError("boundary must be 'robin', 'dirichlet' or a pair of conditions")
    sol = solve_heat(heat(family.M, family.domain, left, right), phi0, t_end, nx, nt)
    x, t = sol.x, sol.t
    h = x[1] - x[0]
    phi = sol["phi"]

    masked = np.zeros(phi.shape, dtype=bool)
    for n in range(t.size):
        masked[n] = pole_mask(x, phi[n]).mask(x) | (phi[n] == 0)
    level_frac = float(masked.mean(axis=1).max())
    if level_frac > MAX_MASKED:
        raise SolutionMaskedError(f"{level_frac:.0%} of a time level is masked")

    # The residual lives on the half levels t_{n+1/2}: averaging neighbouring
    # levels cancels the undamped (-1)^n component Crank-Nicolson leaves
    # near the boundaries, and the difference quotient in t is centred there.
    with np.errstate(all="ignore"):
        phi_half = 0.5 * (phi[1:] + phi[:-1])
        r_half = 0.5 * (sol["phi_x"][1:] + sol["phi_x"][:-1]) / phi_half
        r = sol["phi_x"] / phi
        mask_half = masked[1:] | masked[:-1]
        r_half = np.where(mask_half, 0.0, r_half)
        rt = np.where(mask_half, 0.0, (r[1:] - r[:-1]) / np.diff(t)[:, None])
        # Differencing the O(1) logarithmic derivative rather than phi's third
        # derivative keeps roundoff near eps / h^2.
        rx = fd_derivative(r_half, h, 1, axis=1)
        rxx = fd_derivative(r_half, h, 2, axis=1)
        p = derivs_of(family.P, x, 2)
        q = derivs_of(family.Q, x, 2)
        psi_h = p[0] + q[0] * r_half
        psi_x = p[1] + q[1] * r_half + q[0] * rx
        psi_xx = p[2] + q[2] * r_half + 2.0 * q[1] * rx + q[0] * rxx
        psi_t = q[0] * rt
        psi = p[0] + q[0] * r
    # End nodes carry the boundary condition rather than the PDE, and their
    # neighbours use one-sided stencils; the band is left out of the norms.
    check = mask_half.copy()
    check[:, :EDGE_BAND] = True
    check[:, -EDGE_BAND:] = True
    report = burgers_residual(family.M, family.H, family.V, family.W, x, psi_h, psi_t,
                              psi_x, psi_xx, threshold, check)
    psi = np.where(masked, np.nan, psi)
    out = GridFunction(x, {"psi": psi, "phi": phi}, t=t)
    residual = GridFunction(x, {"residual": report.residual}, t=0.5 * (t[1:] + t[:-1]))
    return BurgersSolution(out, residual, report, float(masked.mean()), level_frac)


def mol_agreement(family: BurgersFamily, solution: BurgersSolution) -> dict:
    """Integrate the nonlinear PDE directly from ``psi(., 0)`` and compare at the last level.

    Boundary values follow the transformed solution's trace (interpolated in t).
    """
    f = solution.field
    psi = f["psi"]
    if np.any(~np.isfinite(psi[:, [0, -1]])) or np.any(~np.isfinite(psi[0])):
        raise SolutionMaskedError("boundary trace or initial data is masked")
    t = f.t

    def left(tt):
        return float(np.interp(tt, t, psi[:, 0]))

    def right(tt):
        return float(np.interp(tt, t, psi[:, -1]))

    mol, ok, msg = integrate_pde_mol(family.M, family.H, family.V, family.W, f.x, psi[0],
                                     float(t[-1]), left, right, t_out=[0.0, float(t[-1])])
    if mol is None or not ok:
        return {"ok": False, "message": msg, "linf": None}
    diff = mol["psi"][-1] - psi[-1]
    return {"ok": True, "message": msg, "linf": float(np.nanmax(np.abs(diff))), "nx": f.x.size}
