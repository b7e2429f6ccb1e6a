"""The acceptance suite: eleven end-to-end checks with a fixed seed.

Each check returns a :class:`Criterion`; :func:`run_suite` collects them into
a JSON-ready report whose bytes depend only on the seed (no timings, no
paths), so two runs can be compared byte for byte.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import mpmath
import numpy as np

from . import burgers, convective, lienard, painleve3, vdp
from .colehopf import ic_from_phi, transform_derivatives
from .expr import (Add, Const, Deriv, Div, Expr, Func, Mul, Neg, Param, Pow, Sub, Var, X, as_expr,
                   parse_expr)
from .jet import DomainError
from .lincore import catalog_phi, ode2, solve_linear_ode
from .oracle import NonlinearODE, integrate_ode, residual_report

SEED = 20240917
FD_STEP = 1e-5
FD_DIGITS = 40
MODERATE = 1e4


@dataclass
class Criterion:
    number: int
    name: str
    passed: bool
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"number": self.number, "name": self.name, "pass": bool(self.passed),
                "details": _clean(self.details)}

    def line(self) -> str:
        return f"{'PASS' if self.passed else 'FAIL'} [{self.number:2d}] {self.name}"


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to None."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    return obj


# -- random expressions --------------------------------------------------------------------

_SAFE_FUNCS = ("sin", "cos", "exp", "sinh", "cosh", "tanh")
_ALL_FUNCS = _SAFE_FUNCS + ("tan", "ln", "sqrt")


def random_expr(rng: np.random.Generator, depth: int = 3, safe: bool = False) -> Expr:
    """A random expression tree in x.

    ``safe=True`` avoids division and functions with restricted domains, so
    the result is smooth on the whole real line.
    """
    if depth <= 0 or rng.random() < 0.25:
        if rng.random() < 0.5:
            return X
        return Const(round(float(rng.uniform(-2.0, 2.0)), 3))
    choice = rng.random()
    funcs = _SAFE_FUNCS if safe else _ALL_FUNCS
    if choice < 0.3:
        name = funcs[rng.integers(len(funcs))]
        arg = random_expr(rng, depth - 1, safe)
        if name in ("exp", "sinh", "cosh"):
            arg = Const(0.5) * arg
        return Func(name, arg)
    if choice < 0.4:
        return Pow(random_expr(rng, depth - 1, safe), Const(float(rng.integers(2, 4))))
    ops = (Add, Sub, Mul) if safe else (Add, Sub, Mul, Div)
    op = ops[rng.integers(len(ops))]
    return op(random_expr(rng, depth - 1, safe), random_expr(rng, depth - 1, safe))


_MP_FUNCS = {"sin": mpmath.sin, "cos": mpmath.cos, "tan": mpmath.tan, "exp": mpmath.exp,
             "ln": mpmath.log, "sinh": mpmath.sinh, "cosh": mpmath.cosh, "tanh": mpmath.tanh,
             "sqrt": mpmath.sqrt}


def mp_eval(e: Expr, x, env=None):
    """Evaluate ``e`` in mpmath arithmetic (independent of the jet code)."""
    env = env or {}
    if isinstance(e, Const):
        return mpmath.mpf(e.value)
    if isinstance(e, Var):
        return x
    if isinstance(e, Param):
        return mpmath.mpf(env[e.name])
    if isinstance(e, Neg):
        return -mp_eval(e.arg, x, env)
    if isinstance(e, Func):
        return _MP_FUNCS[e.name](mp_eval(e.arg, x, env))
    if isinstance(e, Deriv):
        return mpmath.diff(lambda s: mp_eval(e.arg, s, env), x, e.n)
    a, b = mp_eval(e.left, x, env), mp_eval(e.right, x, env)
    if isinstance(e, Add):
        return a + b
    if isinstance(e, Sub):
        return a - b
    if isinstance(e, Mul):
        return a * b
    if isinstance(e, Div):
        return a / b
    if isinstance(e, Pow):
        if b == int(b):
            return a ** int(b)
        return mpmath.power(a, b)
    raise TypeError(f"unsupported node {type(e).__name__}")


def fd_derivatives(e: Expr, x: float, h: float = FD_STEP):
    """Central differences of step h for f' and f'', evaluated in extended precision."""
    with mpmath.workdps(FD_DIGITS):
        xm, hm = mpmath.mpf(x), mpmath.mpf(h)
        fp, f0, fm = (mp_eval(e, xm + s * hm) for s in (1, 0, -1))
        d1 = (fp - fm) / (2 * hm)
        d2 = (fp - 2 * f0 + fm) / hm**2
        return float(d1), float(d2)


def _draw_pair(rng):
    """A random expression with a point where it is defined, finite and moderate."""
    while True:
        e = random_expr(rng, int(rng.integers(1, 5)))
        x = round(float(rng.uniform(-2.0, 2.0)), 6)
        try:
            d = e.derivs(np.array([x - 2 * FD_STEP, x, x + 2 * FD_STEP]), 4)
        except (DomainError, ZeroDivisionError, ValueError, OverflowError):
            continue
        # Near a pole the step-h stencil itself is inaccurate; keep the
        # function moderate through fourth order so the oracle is trustworthy.
        if np.all(np.isfinite(d)) and np.max(np.abs(d)) < MODERATE:
            return e, x


# -- criteria --------------------------------------------------------------------------------

def criterion_autodiff(rng, n: int = 1000) -> Criterion:
    worst, fails = 0.0, []
    for i in range(n):
        e, x = _draw_pair(rng)
        d = e.derivs(np.array([x]), 2)[:, 0]
        fd = fd_derivatives(e, x)
        for k in (1, 2):
            rel = abs(d[k] - fd[k - 1]) / max(abs(d[k]), abs(fd[k - 1]), 1.0)
            worst = max(worst, rel)
            if rel > 1e-6 and len(fails) < 5:
                fails.append({"expr": e.to_text(), "x": x, "order": k, "jet": d[k],
                              "fd": fd[k - 1], "rel": rel})
    return Criterion(1, "autodiff jets match central differences", worst <= 1e-6,
                     {"pairs": n, "step": FD_STEP, "max_rel_error": worst, "failures": fails})


def criterion_vdp_construction(rng, n: int = 50) -> Criterion:
    worst = 0.0
    x = np.linspace(-1.0, 1.0, 20)
    for _ in range(n):
        P = random_expr(rng, 3, safe=True)
        params = vdp.VdpParams(*(round(float(v), 3) for v in rng.uniform(-2, 2, 3)))
        res = vdp.vdp_residuals(vdp.vdp_coeffs(P, params), x)
        worst = max(worst, float(np.max(np.abs(res))))
    return Criterion(2, "van der Pol coefficients zero a0..a4", worst <= 1e-10,
                     {"systems": n, "points": x.size, "max_abs_residual": worst})


def criterion_vdp_solution() -> Criterion:
    params = vdp.VdpParams(1.0, 3.0, 2.0)
    sys = vdp.vdp_coeffs(0.5, params)
    domain = (-2.0, 2.0)
    x = np.linspace(*domain, 401)
    phi = as_expr(2.0) * Func("cosh", 0.5 * X)
    d = phi.derivs(x, 1)
    lin = sys.linear(domain)
    cand = transform_derivatives(sys.P, 1.0, lin, x, d[0], d[1])
    rep = residual_report(sys.nonlinear(), cand, 1e-8)
    closed = float(np.max(np.abs(cand["psi"] - (0.5 + 0.5 * np.tanh(x / 2)))))
    ic = ic_from_phi(sys.P, 1.0, float(d[0, 0]), float(d[1, 0]), lin, domain[0])
    ode = integrate_ode(sys.nonlinear(), ic, domain, n=x.size, tol=1e-10)
    rel = math.inf
    if ode.complete:
        rel = float(np.max(np.abs(ode.grid["psi"] - cand["psi"])) / np.max(np.abs(cand["psi"])))
    ok = rep.passed and closed <= 1e-12 and rel <= 1e-6
    return Criterion(3, "van der Pol tanh solution and RK45 oracle", ok,
                     {"f_identically_zero": sys.f.to_text() == "0", "residual": rep.to_dict(),
                      "closed_form_error": closed, "oracle_rel_error": rel})


def criterion_case3() -> Criterion:
    params = vdp.VdpParams(1.0, 2.0, 0.0)
    domain = (0.0, 1.0)
    P = vdp.vdp_unforced_P(params, 1.0, 0.0, domain)
    x = np.linspace(*domain, 50)
    fmax = float(np.max(np.abs(np.broadcast_to(vdp.vdp_coeffs(P, params).f(x), x.shape))))
    table = vdp.printed_case_report(params, 1.0, domain)
    case3 = [r for r in table if r["case"] == 3]
    return Criterion(4, "alpha = 0 family zeroes the forcing", fmax <= 1e-9,
                     {"P": P.to_text(), "max_abs_f": fmax, "printed_vs_recomputed": case3})


def _poly(rng, degree, scale=1.0):
    coeffs = [round(float(c), 3) for c in rng.uniform(-scale, scale, degree + 1)]
    e = as_expr(coeffs[0])
    for k, c in enumerate(coeffs[1:], start=1):
        e = e + c * X**k
    return e, coeffs


def criterion_lienard(rng, n: int = 20) -> Criterion:
    domain = (0.0, 1.0)
    x = np.linspace(*domain, 201)
    worst_res, worst_b0, cases = 0.0, 0.0, []
    table = None
    for _ in range(n):
        c = [round(float(v), 3) for v in rng.uniform(-1, 1, 3)]
        P, pc = _poly(rng, 2)
        U, uc = _poly(rng, 2)
        U = U + 1.5  # keep phi'' = U phi away from oscillation so phi stays zero-free
        sys = lienard.lienard_b(*c, P, U)
        lin = sys.linear(domain)
        phi = solve_linear_ode(lin, (1.0, float(rng.uniform(-0.5, 0.5))), x)
        cand = transform_derivatives(sys.P, 1.0, lin, x, phi["phi"], phi["dphi"])
        rep = residual_report(sys.nonlinear(), cand, 1e-8)
        worst_res = max(worst_res, rep.linf if rep.linf == rep.linf else math.inf)
        ric = lienard.lienard_b(*c, P, lienard.riccati_U(P))
        worst_b0 = max(worst_b0, lienard.b0_norm(ric, domain))
        cases.append({"c": c, "P": pc, "U": [uc[0] + 1.5] + uc[1:], "linf": rep.linf,
                      "mask_fraction": rep.mask_fraction})
        if table is None:
            table = lienard.comparison_table(sys, domain)
    ok = worst_res <= 1e-8 and worst_b0 <= 1e-10
    return Criterion(5, "Lienard assembly, Riccati choice and quoted-table diff", ok,
                     {"max_residual": worst_res, "max_b0_riccati": worst_b0,
                      "cases": cases, "printed_vs_recomputed": table})


def _p3_candidate(cfg, phi, dphi, x):
    return transform_derivatives(cfg.P, cfg.Q, cfg.linear(painleve3.DEFAULT_DOMAIN), x, phi, dphi)


def criterion_painleve_examples() -> Criterion:
    domain = painleve3.DEFAULT_DOMAIN
    x = np.linspace(*domain, 401)
    poly = {"a": 0.5, "b": -0.3, "c": 0.1, "d": 0.2}
    rows, ok = [], True
    for ex in (1, 2, 3):
        P = parse_expr(painleve3.EXAMPLE_P[ex], list("abcd")).bind(**poly)
        cfg = painleve3.p3_linearize(**painleve3.EXAMPLE_PARAMS, P=P)
        for C1, C2 in ((1.0, 0.0), (0.7, 1.3)):
            entry = painleve3.p3_example_phi(ex, C1, C2, domain, **(poly if ex == 1 else {}))
            cand = _p3_candidate(cfg, entry.phi(x), entry.dphi(x), x)
            rep = painleve3.p3_residual(cfg, cand, 1e-8)
            bad = painleve3.p3_residual(cfg, cand, 1e-3, delta=cfg.delta + 0.1)
            detected = bad.linf >= 1e-3
            ok &= entry.validated and rep.passed and detected
            rows.append({"example": ex, "C1": C1, "C2": C2, "delta": cfg.delta,
                         "phi_status": entry.status, "residual": rep.to_dict(),
                         "perturbed_delta_linf": bad.linf, "perturbation_detected": detected})
    return Criterion(6, "Painleve III worked examples and delta sensitivity", ok, {"runs": rows})


def criterion_painleve_free(rng, n: int = 10) -> Criterion:
    domain = painleve3.DEFAULT_DOMAIN
    x = np.linspace(*domain, 401)
    rows, ok = [], True
    for _ in range(n):
        P, pc = _poly(rng, 2, 0.5)
        w = round(float(rng.uniform(0.5, 2.0)), 3)
        P = P + 0.3 * Func("sin", w * X)
        cfg = painleve3.p3_linearize(-1.0, 1.0, 1.0, P, delta=-1.0)
        ic = (1.0, round(float(rng.uniform(-1, 1)), 3))
        phi = solve_linear_ode(cfg.linear(domain), ic, x)
        cand = _p3_candidate(cfg, phi["phi"], phi["dphi"], x)
        rep = painleve3.p3_residual(cfg, cand, 1e-8)
        ok &= rep.passed
        rows.append({"P": P.to_text(), "ic": ic, "residual": rep.to_dict()})
    return Criterion(7, "Painleve III with random smooth P", ok, {"runs": rows})


def criterion_burgers_compat() -> Criterion:
    rows, ok = {}, True
    for kind in ("expH", "rationalH", "cosH", "quadraticM"):
        fam = burgers.burgers_families(kind)
        rows[kind] = fam.compat_norm
        ok &= fam.compat_norm <= 1e-10
    bad = burgers.burgers_derive(1.0, "x^2", domain=(0.5, 1.5))
    ok &= not bad.accepted
    rows["M=1, H=x^2"] = bad.compat_norm
    return Criterion(8, "Burgers compatibility of the four families", ok,
                     {"compat_norms": rows, "x^2_rejected": not bad.accepted})


MOL_T_END = 0.05


def criterion_burgers_end_to_end() -> Criterion:
    fam = burgers.burgers_families("expH", C=2.0, alpha=1.0)
    sol = burgers.burgers_solve(fam, "exp(x)", 0.5, 400, 400)
    x = sol.field.x
    steady = float(np.nanmax(np.abs(sol.field["psi"] - 2.0 * np.exp(-x))))
    mol = {}
    for nx in (400, 800):
        short = burgers.burgers_solve(fam, "exp(x)", MOL_T_END, nx, nx)
        mol[nx] = burgers.mol_agreement(fam, short)
    e4, e8 = mol[400]["linf"], mol[800]["linf"]
    order = math.log2(e4 / e8) if e4 and e8 else math.nan
    ok = (sol.report.passed and steady <= 1e-6 and mol[400]["ok"] and mol[800]["ok"]
          and e4 <= 1e-3 and e8 <= 2.5e-4 and 1.5 <= order <= 2.5)
    return Criterion(9, "Burgers expH steady state, residual and MOL oracle", ok,
                     {"residual": sol.report.to_dict(), "steady_state_error": steady,
                      "mol_t_end": MOL_T_END, "mol_linf": {"400": e4, "800": e8},
                      "observed_order": order})


def criterion_convective() -> Criterion:
    a, C = 1.0, 1.0
    coeffs = convective.example_coefficients(a)
    sys = convective.conv_forward(**coeffs, U0=C + a * a, x0=0.0, domain=(0.0, 2.0))
    x = np.linspace(0.0, 2.0, 401)
    lin = sys.linear()
    entry = catalog_phi("convective_bessel", (0.0, 2.0), a=a, C=C, C1=1.0, C2=0.0)
    d0 = entry.derivs(np.array([0.0]), 1)[:, 0]
    num = solve_linear_ode(lin, (float(d0[0]), float(d0[1])), x)
    ref = entry.phi(x)
    bessel_rel = float(np.max(np.abs(num["phi"] - ref) / np.abs(ref)))
    cand = transform_derivatives(sys.P, sys.Q, lin, x, num["phi"], num["dphi"])
    rep = residual_report(sys.nonlinear(), cand, 1e-7)

    back = convective.conv_reverse(sys.P, sys.Q, sys.U, sys.domain)
    trip = 0.0
    for name in "FWVS":
        trip = max(trip, float(np.max(np.abs(np.broadcast_to(getattr(back, name)(x), x.shape)
                                             - np.broadcast_to(getattr(sys, name)(x), x.shape)))))
    rev = convective.conv_reverse("x", -2.0, 0.0, (0.0, 2.0))
    fwd = convective.conv_forward(rev.F, rev.W, rev.V, rev.S, U0=0.0, x0=0.0)
    for name in ("P", "Q", "U"):
        trip = max(trip, float(np.max(np.abs(np.broadcast_to(getattr(fwd, name)(x), x.shape)
                                             - np.broadcast_to(getattr(rev, name)(x), x.shape)))))
    ok = (sys.constraint_norm == 0.0 and rep.passed and entry.validated
          and bessel_rel <= 1e-8 and trip <= 1e-10)
    return Criterion(10, "convective example, Bessel closed form and round trips", ok,
                     {"constraint_norm": sys.constraint_norm, "U": sys.U.to_text(),
                      "residual": rep.to_dict(), "bessel_rel_error": bessel_rel,
                      "round_trip_error": trip})


def _core(seed: int) -> list:
    rng = np.random.default_rng(seed)
    return [
        criterion_autodiff(rng),
        criterion_vdp_construction(rng),
        criterion_vdp_solution(),
        criterion_case3(),
        criterion_lienard(rng),
        criterion_painleve_examples(),
        criterion_painleve_free(rng),
        criterion_burgers_compat(),
        criterion_burgers_end_to_end(),
        criterion_convective(),
    ]


def report_bytes(criteria: list, seed: int) -> bytes:
    doc = {"seed": seed, "criteria": [c.to_dict() for c in criteria]}
    return json.dumps(doc, indent=2, sort_keys=True).encode()


def criterion_determinism(first: list, seed: int) -> Criterion:
    a = report_bytes(first, seed)
    b = report_bytes(_core(seed), seed)
    ha, hb = hashlib.sha256(a).hexdigest(), hashlib.sha256(b).hexdigest()
    return Criterion(11, "repeated runs give byte-identical reports", a == b,
                     {"sha256_first": ha, "sha256_second": hb})


def run_suite(seed: int = SEED, determinism: bool = True) -> list:
    """Run every criterion in order and return the :class:`Criterion` list."""
    core = _core(seed)
    if determinism:
        core.append(criterion_determinism(core, seed))
    return core


def suite_report(criteria: list, seed: int = SEED) -> dict:
    return {"seed": seed, "passed": all(c.passed for c in criteria),
            "criteria": [c.to_dict() for c in criteria]}
