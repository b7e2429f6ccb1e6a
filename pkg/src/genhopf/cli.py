"""Command-line front end: ``genhopf <family> [flags]`` or ``genhopf verify``.

Every run writes plot-ready CSV files and a ``report.json`` into ``--out``.
Exit status: 0 when every residual gate passes, 1 on a validation failure
(constraint, compatibility or residual gate), 2 on a bad configuration, 3 on
a numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import burgers, convective, lienard, painleve3, vdp, verify
from .colehopf import PoleAtAnchorError, SingularSolutionError, ic_from_phi, transform_derivatives
from .expr import ExprSyntaxError, UnboundParameterError, parse_expr
from .grid import GridFunction
from .jet import DomainError
from .lincore import BoundaryCondition, FormulaValidationError, LinearSolveError, solve_linear_ode
from .oracle import NonlinearODE, integrate_ode, residual_report

SCHEMA = "genhopf.report/1"
EXIT_OK, EXIT_VALIDATION, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
MIN_POINTS = 16


class ConfigError(ValueError):
    pass


class ValidationFailure(ValueError):
    pass


class NumericalFailure(RuntimeError):
    pass


@dataclass
class RunConfig:
    """Resolved settings for one run (flags merged over the config file)."""

    family: str
    values: dict
    params: dict = field(default_factory=dict)
    out: Path = Path("genhopf_out")

    def validate(self) -> None:
        v = self.values
        for key in ("n", "nx", "nt"):
            if key in v and v[key] is not None and int(v[key]) < MIN_POINTS:
                raise ConfigError(f"--{key} must be at least {MIN_POINTS}")
        if "x0" in v and "x1" in v and not float(v["x0"]) < float(v["x1"]):
            raise ConfigError("need x0 < x1")
        if "tol" in v and not 1e-12 <= float(v["tol"]) <= 1e-6:
            raise ConfigError("--tol must lie in [1e-12, 1e-6]")
        if "threshold" in v and not float(v["threshold"]) > 0:
            raise ConfigError("--threshold must be positive")

    @property
    def domain(self) -> tuple:
        return (float(self.values["x0"]), float(self.values["x1"]))

    def expr(self, key: str):
        text = self.values[key]
        e = parse_expr(str(text), list(self.params))
        e = e.bind(**self.params)
        if e.params:
            raise ConfigError(f"--{key}: unbound parameters {sorted(e.params)}")
        return e


# -- shared pieces -------------------------------------------------------------------------

def _columns(x, **rows) -> GridFunction:
    return GridFunction(x, {k: np.broadcast_to(np.asarray(v, dtype=float), x.shape).copy()
                            for k, v in rows.items()})


def _ode_pipeline(cfg: RunConfig, P, Q, linear, eq, extra_rows=None):
    """Numeric phi, transformed psi, residual gate and the RK45 oracle."""
    v = cfg.values
    a, b = cfg.domain
    x = np.linspace(a, b, int(v["n"]))
    ic = (float(v["phi0"]), float(v["dphi0"]))
    phi = solve_linear_ode(linear, ic, x)
    cand = transform_derivatives(P, Q, linear, x, phi["phi"], phi["dphi"])
    rep = residual_report(eq, cand, float(v["threshold"]))
    oracle = {"ran": False}
    psi0 = ic_from_phi(P, Q, ic[0], ic[1], linear, a)
    res = integrate_ode(eq, psi0, (a, b), x0=a, n=x.size, tol=float(v["tol"]))
    live = ~np.isnan(cand["psi"])
    if res.complete:
        diff = np.abs(res.grid["psi"] - cand["psi"])[live]
        scale = max(1.0, float(np.nanmax(np.abs(cand["psi"]))))
        oracle = {"ran": True, "complete": True, "rel_linf": float(np.max(diff)) / scale}
    else:
        oracle = {"ran": True, "complete": False, "x_stop": res.x_stop, "message": res.message}
    rows = {"P": P(x), "U": linear.U(x), "phi": phi["phi"], "psi": cand["psi"],
            "residual": rep.residual}
    rows.update(extra_rows or {})
    return _columns(x, **rows), rep, oracle


def _finish(rep, oracle=None) -> int:
    if oracle and oracle.get("complete") and oracle["rel_linf"] > 1e-6:
        return EXIT_VALIDATION
    return EXIT_OK if rep.passed else EXIT_VALIDATION


# -- families --------------------------------------------------------------------------------

def run_vdp(cfg: RunConfig) -> tuple:
    v = cfg.values
    params = vdp.VdpParams(float(v["mu"]), float(v["beta"]), float(v["alpha"]))
    if v.get("P") is not None:
        P = cfg.expr("P")
    else:
        P = vdp.vdp_unforced_P(params, float(v["c1"]), float(v["c2"]), cfg.domain)
    sys_ = vdp.vdp_coeffs(P, params)
    table, rep, oracle = _ode_pipeline(cfg, sys_.P, 1.0, sys_.linear(cfg.domain), sys_.nonlinear())
    report = {"coefficients": sys_.coefficient_table(), "residual": rep.to_dict(), "oracle": oracle}
    if v.get("P") is None:
        try:
            report["printed_vs_recomputed"] = vdp.printed_case_report(params, 1.0, cfg.domain)
        except (vdp.UnsupportedBranchError, vdp.PoleError, FormulaValidationError) as exc:
            report["printed_vs_recomputed"] = {"skipped": str(exc)}
    return {"solution.csv": table}, report, _finish(rep, oracle)


def run_vdp_forced(cfg: RunConfig) -> tuple:
    v = cfg.values
    params = vdp.VdpParams(float(v["mu"]), float(v["beta"]), float(v["alpha"]))
    sys_ = vdp.vdp_forced_family(cfg.expr("g"), v["branch"], params)
    table, rep, oracle = _ode_pipeline(cfg, sys_.P, 1.0, sys_.linear(cfg.domain), sys_.nonlinear())
    report = {"coefficients": sys_.coefficient_table(), "branch": v["branch"],
              "residual": rep.to_dict(), "oracle": oracle}
    return {"solution.csv": table}, report, _finish(rep, oracle)


def run_lienard(cfg: RunConfig) -> tuple:
    v = cfg.values
    P = cfg.expr("P")
    U = lienard.riccati_U(P) if str(v["U"]).strip() == "riccati" else cfg.expr("U")
    sys_ = lienard.lienard_b(cfg.expr("c0"), cfg.expr("c1"), cfg.expr("c2"), P, U)
    table, rep, oracle = _ode_pipeline(cfg, sys_.P, 1.0, sys_.linear(cfg.domain), sys_.nonlinear())
    report = {"coefficients": {"P": sys_.P.to_text(), "U": sys_.U.to_text(),
                               **{f"b{k}": b.to_text() for k, b in enumerate(sys_.b)}},
              "b0_sup": lienard.b0_norm(sys_, cfg.domain),
              "printed_vs_recomputed": lienard.comparison_table(sys_, cfg.domain),
              "residual": rep.to_dict(), "oracle": oracle}
    return {"solution.csv": table}, report, _finish(rep, oracle)


def run_painleve3(cfg: RunConfig) -> tuple:
    v = cfg.values
    painleve3.check_domain(cfg.domain)
    delta = None if v.get("delta") is None else float(v["delta"])
    p3 = painleve3.p3_linearize(float(v["alpha"]), float(v["beta"]), float(v["gamma"]),
                                cfg.expr("P"), bool(v["negative_root"]), delta)
    lin = p3.linear(cfg.domain)
    table, rep, oracle = _ode_pipeline(cfg, p3.P, p3.Q, lin, p3.nonlinear(),
                                       {"K": lin.K(np.linspace(*cfg.domain, int(v["n"])))})
    report = {"coefficients": p3.summary(), "delta": p3.delta, "residual": rep.to_dict(),
              "oracle": oracle}
    return {"solution.csv": table}, report, _finish(rep, oracle)


_FAMILY_FLAGS = {"rationalH": ("a", "b", "A"), "cosH": ("B", "omega", "beta0", "A"),
                 "expH": ("C", "alphaH", "A"), "quadraticM": ("a1", "b1")}


def run_burgers(cfg: RunConfig) -> tuple:
    v = cfg.values
    kind = v["family"]
    if kind == "custom":
        fam = burgers.burgers_derive(cfg.expr("M"), cfg.expr("H"), cfg.domain)
    else:
        given = {k: float(v[k]) for k in _FAMILY_FLAGS[kind] if v.get(k) is not None}
        if "alphaH" in given:
            given["alpha"] = given.pop("alphaH")
        fam = burgers.burgers_families(kind, cfg.domain, **given)
    report = {"family": fam.summary()}
    if not fam.accepted:
        report["error"] = f"compatibility violated: sup |c| = {fam.compat_norm:.6g}"
        return {}, report, EXIT_VALIDATION
    boundary = v["boundary"]
    ends = (v.get("phi_left"), v.get("phi_right"))
    if any(e is not None for e in ends):
        if None in ends:
            raise ConfigError("--phi-left and --phi-right must be given together")
        boundary = tuple(BoundaryCondition("dirichlet", e) for e in ends)
    sol = burgers.burgers_solve(fam, cfg.expr("phi0"), float(v["t_end"]), int(v["nx"]),
                                int(v["nt"]), boundary, float(v["threshold"]))
    report.update({"residual": sol.report.to_dict(), "mask_fraction": sol.mask_fraction,
                   "max_level_mask_fraction": sol.max_level_mask_fraction})
    code = EXIT_OK if sol.report.passed else EXIT_VALIDATION
    if v.get("mol"):
        agree = burgers.mol_agreement(fam, sol)
        report["mol"] = agree
        if not agree["ok"]:
            code = max(code, EXIT_NUMERIC)
        elif agree["linf"] > 1e-3:
            code = max(code, EXIT_VALIDATION)
    field_ = sol.field
    residual = sol.residual
    files = {"psi.csv": (field_, "psi"), "phi.csv": (field_, "phi"),
             "residual.csv": (residual, "residual")}
    return files, report, code


def run_convective(cfg: RunConfig) -> tuple:
    v = cfg.values
    mode = v["mode"]
    a, b = cfg.domain
    x = np.linspace(a, b, int(v["n"]))
    if mode == "forward":
        anchor = a if v.get("anchor") is None else float(v["anchor"])
        try:
            sys_ = convective.conv_forward(cfg.expr("F"), cfg.expr("W"), cfg.expr("V"),
                                           cfg.expr("S"), float(v["U0"]), anchor, cfg.domain)
        except convective.ConstraintError as exc:
            return ({"constraint.csv": _columns(np.array(exc.profile["x"]),
                                                constraint=exc.profile["constraint"])},
                    {"error": str(exc), "constraint_norm": exc.norm}, EXIT_VALIDATION)
        table, rep, oracle = _ode_pipeline(cfg, sys_.P, sys_.Q, sys_.linear(), sys_.nonlinear())
        U = sys_.U_grid(int(v["n"]))
        table.rows["dU"] = U["dU"]
        report = {"system": sys_.summary(), "U_method": sys_.info["U_method"],
                  "u_equation": sys_.info["u_equation"], "residual": rep.to_dict(),
                  "oracle": oracle}
        return {"solution.csv": table}, report, _finish(rep, oracle)
    if mode == "reverse":
        sys_ = convective.conv_reverse(cfg.expr("P"), cfg.expr("Q"), cfg.expr("U"), cfg.domain)
        ai = convective.conv_ai_residuals(sys_, x)
        worst = float(np.max(np.abs(ai)))
        rows = {n: getattr(sys_, n)(x) for n in "FWVS"}
        rows.update({f"a{k}": ai[k] for k in range(4)})
        report = {"system": sys_.summary(), "max_abs_a": worst,
                  "pass": worst <= 1e-10 and sys_.constraint_norm <= convective.CONSTRAINT_TOL}
        return ({"coefficients.csv": _columns(x, **rows)}, report,
                EXIT_OK if report["pass"] else EXIT_VALIDATION)
    if mode == "reduce":
        anchor = a if v.get("anchor") is None else float(v["anchor"])
        red = convective.conv_reduce(cfg.expr("V1"), cfg.expr("F"), cfg.expr("V"),
                                     cfg.expr("W"), cfg.expr("S"), anchor, cfg.domain)
        eq = red.nonlinear()
        orig = NonlinearODE("convective", {}, {k: cfg.expr(k) for k in ("S", "V", "F", "W", "V1")})
        res = integrate_ode(orig, (float(v["psi0"]), float(v["dpsi0"])), cfg.domain, x0=anchor,
                            n=x.size, tol=float(v["tol"]))
        if not res.complete:
            raise NumericalFailure(f"original equation blew up: {res.message}")
        g = res.grid
        ddy = orig.rhs(g.x, g["psi"], g["dpsi"])
        xi = red.transform(GridFunction(g.x, {"psi": g["psi"], "dpsi": g["dpsi"], "ddpsi": ddy}))
        rep = residual_report(eq, xi, float(v["threshold"]))
        rows = {"p": red.p(g.x), "F": red.F(g.x), "W": red.W(g.x), "V": red.V(g.x),
                "S": red.S(g.x), "psi": g["psi"], "xi": xi["psi"], "residual": rep.residual}
        report = {"reduced": red.summary(), "original": red.original, "residual": rep.to_dict()}
        return ({"reduced.csv": _columns(g.x, **rows)}, report,
                EXIT_OK if rep.passed else EXIT_VALIDATION)
    raise ConfigError(f"unknown mode {mode!r}")


def run_verify(cfg: RunConfig) -> tuple:
    crits = verify.run_suite(int(cfg.values["seed"]), not cfg.values.get("no_determinism"))
    for c in crits:
        print(c.line())
    report = verify.suite_report(crits, int(cfg.values["seed"]))
    return {}, report, EXIT_OK if report["passed"] else EXIT_VALIDATION


RUNNERS = {"vdp": run_vdp, "vdp-forced": run_vdp_forced, "lienard": run_lienard,
           "painleve3": run_painleve3, "burgers": run_burgers, "convective": run_convective,
           "verify": run_verify}


# -- argument parsing --------------------------------------------------------------------------

def _common(p, x0, x1, n=400, threshold=1e-8, ics=True):
    p.add_argument("--x0", type=float, default=x0, help="left end of the domain")
    p.add_argument("--x1", type=float, default=x1, help="right end of the domain")
    p.add_argument("--n", type=int, default=n, help="number of grid points")
    p.add_argument("--threshold", type=float, default=threshold, help="residual gate")
    p.add_argument("--tol", type=float, default=1e-10, help="RK45 oracle tolerance")
    if ics:
        p.add_argument("--phi0", type=float, default=1.0, help="phi at x0")
        p.add_argument("--dphi0", type=float, default=0.0, help="phi' at x0")


def _vdp_params(p):
    p.add_argument("--mu", type=float, required=False, default=1.0)
    p.add_argument("--beta", type=float, default=3.0)
    p.add_argument("--alpha", type=float, default=2.0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="genhopf", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, help_):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=Path, help="JSON file with flag values (flags win)")
        p.add_argument("--out", type=Path, default=Path("genhopf_out"), help="output directory")
        p.add_argument("--param", action="append", default=[], metavar="NAME=VALUE",
                       help="bind a named parameter used in expressions")
        return p

    p = add("vdp", "unforced perturbed van der Pol family")
    _vdp_params(p)
    p.add_argument("--c1", type=float, default=0.0)
    p.add_argument("--c2", type=float, default=0.0)
    p.add_argument("--P", default=None, help="explicit P (overrides the unforced family)")
    _common(p, -2.0, 2.0)

    p = add("vdp-forced", "forced van der Pol family built from g")
    _vdp_params(p)
    p.add_argument("--g", default="tan(x)")
    p.add_argument("--branch", choices=("plus", "minus"), default="plus")
    _common(p, 0.0, 1.0)

    p = add("lienard", "polynomial Lienard equation")
    for k in range(3):
        p.add_argument(f"--c{k}", default="0")
    p.add_argument("--P", default="0")
    p.add_argument("--U", default="riccati", help="expression, or 'riccati' for P^2 - P'")
    _common(p, 0.0, 1.0)

    p = add("painleve3", "Painleve III")
    p.add_argument("--alpha", type=float, default=-1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=1.0)
    p.add_argument("--delta", type=float, default=None, help="checked against the forced value")
    p.add_argument("--P", default="sin(x)")
    p.add_argument("--negative-root", action="store_true", dest="negative_root")
    _common(p, 0.5, 3.0)

    p = add("burgers", "generalized Burgers equation")
    p.add_argument("--family", choices=("expH", "rationalH", "cosH", "quadraticM", "custom"),
                   default="expH")
    for name in ("a", "b", "A", "B", "omega", "beta0", "C", "alphaH", "a1", "b1"):
        p.add_argument(f"--{name}", type=float, default=None)
    p.add_argument("--M", default="1", help="diffusivity for --family custom")
    p.add_argument("--H", default="1", help="convection coefficient for --family custom")
    p.add_argument("--phi0", default="exp(x)", help="initial phi(x, 0)")
    p.add_argument("--t-end", type=float, default=0.5, dest="t_end")
    p.add_argument("--nx", type=int, default=400)
    p.add_argument("--nt", type=int, default=400)
    p.add_argument("--boundary", choices=("robin", "dirichlet"), default="robin")
    p.add_argument("--phi-left", default=None, dest="phi_left",
                   help="Dirichlet phi(x0, t) as an expression in t (overrides --boundary)")
    p.add_argument("--phi-right", default=None, dest="phi_right",
                   help="Dirichlet phi(x1, t) as an expression in t")
    p.add_argument("--mol", action="store_true", help="also run the method-of-lines oracle")
    p.add_argument("--x0", type=float, default=0.0)
    p.add_argument("--x1", type=float, default=1.0)
    p.add_argument("--threshold", type=float, default=1e-6)

    p = add("convective", "second-order convective equations")
    p.add_argument("--mode", choices=("forward", "reverse", "reduce"), default="forward")
    for name, default in (("F", "1"), ("W", "0"), ("V", "0"), ("S", "0"), ("V1", "0"),
                          ("P", "0"), ("Q", "-2"), ("U", "0")):
        p.add_argument(f"--{name}", default=default)
    p.add_argument("--U0", type=float, default=0.0, help="U at the anchor (forward mode)")
    p.add_argument("--anchor", type=float, default=None, help="defaults to x0")
    p.add_argument("--psi0", type=float, default=0.1, help="psi at the anchor (reduce mode)")
    p.add_argument("--dpsi0", type=float, default=0.0, help="psi' at the anchor (reduce mode)")
    _common(p, 0.0, 2.0, threshold=1e-7)

    p = add("verify", "run the acceptance suite")
    p.add_argument("--seed", type=int, default=verify.SEED)
    p.add_argument("--no-determinism", action="store_true", dest="no_determinism",
                   help="skip the second pass that checks byte-identical reports")
    return parser


_NOT_VALUES = {"command", "config", "out", "param"}


def _parse(argv) -> tuple:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config is not None:
        try:
            doc = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        doc = {k.replace("-", "_"): val for k, val in doc.items()}
        known = set(vars(args)) - {"command", "config"}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        sub = parser._subparsers._group_actions[0].choices[args.command]
        sub.set_defaults(**doc)
        args = parser.parse_args(argv)
    params = {}
    for item in args.param:
        name, sep, value = str(item).partition("=")
        if not sep:
            raise ConfigError(f"--param expects NAME=VALUE, got {item!r}")
        try:
            params[name.strip()] = float(value)
        except ValueError:
            raise ConfigError(f"--param {name}: {value!r} is not a number") from None
    values = {k: val for k, val in vars(args).items() if k not in _NOT_VALUES}
    return RunConfig(args.command, values, params, Path(args.out))


def _write(out: Path, files: dict) -> list:
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name, item in sorted(files.items()):
        if isinstance(item, tuple):
            gf, row = item
            gf.write_field_csv(out / name, row)
        else:
            item.write_csv(out / name)
        written.append(name)
    return written


def _dump(report: dict) -> str:
    return json.dumps(verify._clean(report), indent=2, sort_keys=True) + "\n"


_VALIDATION_ERRORS = (convective.ConstraintError, burgers.FamilyParameterError,
                      FormulaValidationError, vdp.PoleError, vdp.UnsupportedBranchError,
                      painleve3.NoRealQError, painleve3.DeltaUndefinedError,
                      convective.ZeroConvectionError, ValidationFailure)
_NUMERIC_ERRORS = (LinearSolveError, NumericalFailure, SingularSolutionError,
                   burgers.SolutionMaskedError, convective.ReductionError, FloatingPointError)
_CONFIG_ERRORS = (ConfigError, ExprSyntaxError, UnboundParameterError, PoleAtAnchorError,
                  DomainError)


def main(argv=None) -> int:
    try:
        cfg = _parse(argv)
        cfg.validate()
    except _CONFIG_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    report = {"schema": SCHEMA, "command": cfg.family, "config": cfg.values, "params": cfg.params}
    try:
        files, body, code = RUNNERS[cfg.family](cfg)
    except _CONFIG_ERRORS as exc:
        files, body, code = {}, {"error": str(exc)}, EXIT_CONFIG
    except _VALIDATION_ERRORS as exc:
        files, body, code = {}, {"error": str(exc)}, EXIT_VALIDATION
    except _NUMERIC_ERRORS as exc:
        files, body, code = {}, {"error": str(exc)}, EXIT_NUMERIC
    except (ValueError, KeyError) as exc:
        files, body, code = {}, {"error": str(exc)}, EXIT_CONFIG
    except RuntimeError as exc:
        files, body, code = {}, {"error": str(exc)}, EXIT_NUMERIC
    report.update(body)
    report["files"] = _write(cfg.out, files)
    report["status"] = "pass" if code == EXIT_OK else "fail"
    report["exit_code"] = code
    (cfg.out / "report.json").write_text(_dump(report))
    if "error" in body:
        print(f"error: {body['error']}", file=sys.stderr)
    elif cfg.family != "verify":
        print(f"{cfg.family}: {report['status']} (report in {cfg.out / 'report.json'})")
    return code


if __name__ == "__main__":
    sys.exit(main())
