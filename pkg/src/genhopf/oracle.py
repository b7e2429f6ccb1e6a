"""Independent checks: direct nonlinear integration and pointwise residuals.

Nothing here reuses the derivation code of the family modules.  Each target
equation is written out once, in its own right-hand-side form, and consumes
coefficient functions only through pointwise evaluation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import RK45, OdeSolution, solve_ivp

from .grid import GridFunction, PoleMask, pole_mask
from .lincore import as_function

BLOWUP = 1e8
MAX_STEPS = 20_000


class MissingDerivativeError(ValueError):
    pass


# -- target equations -------------------------------------------------------------

_ODE_KINDS = {
    "vdp": (("mu", "beta", "alpha"), ("v", "h", "g", "f")),
    "lienard": ((), ("c0", "c1", "c2", "b0", "b1", "b2", "b3", "b4")),
    "painleve3": (("alpha", "beta", "gamma", "delta"), ()),
    "convective": ((), ("S", "V", "F", "W", "V1")),
}


@dataclass
class NonlinearODE:
    """``psi'' = rhs(x, psi, psi')`` for one of the supported families.

    vdp:        mu (beta - psi^2) psi' - alpha psi + v psi^2 + h psi^3 + g psi^4 + f
    lienard:    -(c0 + c1 psi + c2 psi^2) psi' - sum_k b_k psi^k
    painleve3:  psi'^2/psi - psi'/x + (alpha psi^2 + beta)/x + gamma psi^3 + delta/psi
    convective: S + (V + F psi') psi + V1 psi' + W psi^2
    """

    kind: str
    params: dict = field(default_factory=dict)
    coeffs: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in _ODE_KINDS:
            raise ValueError(f"unknown equation family {self.kind!r}")
        pnames, cnames = _ODE_KINDS[self.kind]
        missing = [p for p in pnames if p not in self.params]
        if missing:
            raise ValueError(f"{self.kind} needs parameters {missing}")
        self.params = {k: float(v) for k, v in self.params.items()}
        self.coeffs = {k: as_function(self.coeffs.get(k, 0.0)) for k in cnames}

    def _c(self, name, x):
        return self.coeffs[name](x)

    def rhs(self, x, y, dy):
        p = self.params
        if self.kind == "vdp":
            return (p["mu"] * (p["beta"] - y * y) * dy - p["alpha"] * y
                    + self._c("v", x) * y**2 + self._c("h", x) * y**3
                    + self._c("g", x) * y**4 + self._c("f", x))
        if self.kind == "lienard":
            friction = self._c("c0", x) + self._c("c1", x) * y + self._c("c2", x) * y**2
            restoring = sum(self._c(f"b{k}", x) * y**k for k in range(5))
            return -friction * dy - restoring
        if self.kind == "painleve3":
            return (dy * dy / y - dy / x + (p["alpha"] * y * y + p["beta"]) / x
                    + p["gamma"] * y**3 + p["delta"] / y)
        return (self._c("S", x) + (self._c("V", x) + self._c("F", x) * dy) * y
                + self._c("V1", x) * dy + self._c("W", x) * y * y)

    def residual(self, x, y, dy, ddy):
        with np.errstate(divide="ignore", invalid="ignore"):
            return ddy - self.rhs(x, y, dy)

    def singular(self, x, y) -> np.ndarray:
        """Points where the equation itself is undefined."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if self.kind == "painleve3":
            scale = np.nanmax(np.abs(y)) if y.size else 1.0
            return (np.abs(y) < 1e-8 * max(scale, 1e-300)) | (x == 0)
        return np.zeros(y.shape, dtype=bool)


# -- residual reports -------------------------------------------------------------

@dataclass
class ResidualReport:
    equation: str
    threshold: float
    x: np.ndarray
    residual: np.ndarray
    masked: np.ndarray
    linf: float
    l2: float
    relative: float
    mask_fraction: float
    passed: bool

    def to_dict(self) -> dict:
        def num(v):
            return None if v is None or not math.isfinite(v) else float(v)

        return {"equation": self.equation, "threshold": self.threshold, "linf": num(self.linf),
                "l2": num(self.l2), "relative": num(self.relative),
                "mask_fraction": float(self.mask_fraction), "pass": bool(self.passed)}


def summarize(equation: str, x, residual, masked, threshold: float, scale=None) -> ResidualReport:
    """Norms over unmasked points; non-finite residuals count as masked.

    ``l2`` is the root-mean-square over unmasked points; ``relative`` divides
    ``linf`` by ``max(1, max|scale|)``.
    """
    residual = np.asarray(residual, dtype=float)
    masked = np.asarray(masked, dtype=bool) | ~np.isfinite(residual)
    live = np.abs(residual[~masked])
    frac = float(masked.mean()) if masked.size else 0.0
    if live.size == 0:
        linf = l2 = rel = math.nan
        passed = False
    else:
        linf = float(live.max())
        l2 = float(np.sqrt(np.mean(live**2)))
        s = 1.0
        if scale is not None:
            sv = np.abs(np.asarray(scale, dtype=float)[~masked])
            sv = sv[np.isfinite(sv)]
            if sv.size:
                s = max(1.0, float(sv.max()))
        rel = linf / s
        passed = linf <= threshold
    out = np.where(masked, np.nan, residual)
    return ResidualReport(equation, float(threshold), np.asarray(x, dtype=float), out, masked,
                          linf, l2, rel, frac, passed)


def residual_report(eq: NonlinearODE, candidate: GridFunction, threshold: float,
                    mask=None) -> ResidualReport:
    """Pointwise residual of ``eq`` for a candidate carrying psi, dpsi, ddpsi."""
    for row in ("psi", "dpsi", "ddpsi"):
        if row not in candidate:
            raise MissingDerivativeError(f"candidate lacks row {row!r}")
    x = candidate.x
    y, dy, ddy = candidate["psi"], candidate["dpsi"], candidate["ddpsi"]
    masked = np.zeros(x.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool).copy()
    if isinstance(mask, PoleMask):
        masked = mask.mask(x)
    masked |= eq.singular(x, y)
    with np.errstate(all="ignore"):
        res = eq.residual(x, y, dy, ddy)
    return summarize(eq.kind, x, res, masked, threshold, scale=ddy)


# -- direct nonlinear integration ---------------------------------------------------

@dataclass
class OdeResult:
    grid: GridFunction | None
    complete: bool
    x_stop: float
    message: str
    dense: object = None


def integrate_ode(eq: NonlinearODE, ic, domain, x0: float | None = None, n: int = 201,
                  tol: float = 1e-10) -> OdeResult:
    """Adaptive RK45 on ``psi'' = rhs`` from ``(psi, psi')(x0) = ic``.

    Integration stops (flagged, with a partial grid) when ``|psi|`` exceeds
    1e8, when the step size collapses below ``1e-12`` of the interval, or
    after ``MAX_STEPS`` steps; the last two happen when the equation turns
    stiff on the way into a pole.  ``x0`` must be an end of ``domain``.
    """
    if not 1e-12 <= tol <= 1e-6:
        raise ValueError("tol must lie in [1e-12, 1e-6]")
    a, b = map(float, domain)
    x0 = a if x0 is None else float(x0)
    if x0 not in (a, b):
        raise ValueError("x0 must be an end of the domain")
    x_end = b if x0 == a else a

    def f(x, s):
        return np.array([s[1], eq.rhs(x, s[0], s[1])])

    min_step = 1e-12 * (b - a)
    ts, pieces = [x0], []
    message = "ok"
    with np.errstate(all="ignore"):
        solver = RK45(f, x0, [float(ic[0]), float(ic[1])], x_end, rtol=tol, atol=tol * 1e-2)
        while solver.status == "running":
            solver.step()
            if solver.status == "failed":
                message = f"integration failed at x={solver.t:.6g}"
                break
            ts.append(solver.t)
            pieces.append(solver.dense_output())
            if not np.all(np.isfinite(solver.y)) or abs(solver.y[0]) > BLOWUP:
                message = f"blow-up (|psi| > {BLOWUP:g}) at x={solver.t:.6g}"
                break
            if solver.status == "running" and solver.step_size < min_step:
                message = f"step size collapsed at x={solver.t:.6g}"
                break
            if len(pieces) >= MAX_STEPS:
                message = f"step limit {MAX_STEPS} reached at x={solver.t:.6g}"
                break
    x_stop = float(ts[-1])
    complete = message == "ok" and x_stop == x_end
    dense = OdeSolution(ts, pieces) if pieces else None
    grid_x = np.linspace(a, b, n)
    lo, hi = min(x0, x_stop), max(x0, x_stop)
    grid_x = grid_x[(grid_x >= lo) & (grid_x <= hi)]
    grid = None
    if dense is not None and grid_x.size >= 2:
        y = dense(grid_x)
        with np.errstate(all="ignore"):
            ddy = eq.rhs(grid_x, y[0], y[1])
        grid = GridFunction(grid_x, {"psi": y[0], "dpsi": y[1], "ddpsi": ddy})
    return OdeResult(grid, complete, x_stop, message, dense)


def integrate_pde_mol(M, H, V, W, x, psi0, t_end: float, left, right, t_out=None,
                      rtol: float = 1e-8, atol: float = 1e-10) -> tuple[GridFunction, bool, str]:
    """Method of lines for ``psi_t = M psi_xx + H psi psi_x + V psi + W psi^2``.

    Second-order centred differences in x on the uniform grid ``x``; Dirichlet
    values ``left(t)``, ``right(t)`` at the ends; adaptive RK45 in time.
    Returns the field on ``t_out`` levels, a completion flag and a message.
    """
    x = np.asarray(x, dtype=float)
    if x.size < 16:
        raise ValueError("method of lines needs at least 16 points")
    h = x[1] - x[0]
    xi = x[1:-1]
    Mi, Hi, Vi, Wi = (np.broadcast_to(as_function(c)(xi), xi.shape) for c in (M, H, V, W))
    t_out = np.linspace(0.0, t_end, 11) if t_out is None else np.asarray(t_out, dtype=float)

    def f(t, u):
        full = np.concatenate(([left(t)], u, [right(t)]))
        uxx = (full[2:] - 2.0 * u + full[:-2]) / h**2
        ux = (full[2:] - full[:-2]) / (2.0 * h)
        return Mi * uxx + Hi * u * ux + Vi * u + Wi * u * u

    def blowup(t, u):
        return BLOWUP - np.max(np.abs(u))

    blowup.terminal = True
    u0 = np.asarray(psi0, dtype=float)[1:-1]
    sol = solve_ivp(f, (0.0, t_end), u0, method="RK45", rtol=rtol, atol=atol,
                    t_eval=t_out, events=blowup)
    ok = sol.status == 0
    msg = "ok" if ok else f"stopped at t={sol.t[-1]:.6g}: {sol.message}"
    field_ = np.empty((sol.t.size, x.size))
    field_[:, 1:-1] = sol.y.T
    field_[:, 0] = [left(t) for t in sol.t]
    field_[:, -1] = [right(t) for t in sol.t]
    if sol.t.size < 2:
        return None, False, msg
    return GridFunction(x, {"psi": field_}, t=sol.t), ok, msg


def burgers_residual(M, H, V, W, x, psi, psi_t, psi_x, psi_xx, threshold: float,
                     mask=None) -> ResidualReport:
    """Residual of ``psi_t - M psi_xx - (H psi psi_x + V psi + W psi^2)`` on a field."""
    x = np.asarray(x, dtype=float)
    Mx, Hx, Vx, Wx = (np.broadcast_to(as_function(c)(x), x.shape) for c in (M, H, V, W))
    res = psi_t - Mx * psi_xx - (Hx * psi * psi_x + Vx * psi + Wx * psi * psi)
    masked = np.zeros(res.shape, dtype=bool) if mask is None else np.asarray(mask, dtype=bool)
    return summarize("burgers", x, res, masked, threshold, scale=psi_t)


def pole_detect(phi: GridFunction) -> PoleMask:
    """Zeros of the ``phi`` row (sign changes refined to 1e-10, plus near-zeros)."""
    if "phi" not in phi:
        raise MissingDerivativeError("grid function lacks a 'phi' row")
    return pole_mask(phi.x, phi["phi"], phi.rows.get("dphi"))
