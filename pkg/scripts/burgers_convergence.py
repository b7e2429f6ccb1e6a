"""Grid refinement for the Burgers families.

Two studies:

* ``residual``: pointwise PDE residual of the transformed heat solution for
  the quadraticM family (``phi0 = 2 + sin(pi x)``) as nx = nt doubles;
* ``mol``: agreement between the transformed solution and a direct
  method-of-lines integration for the expH family.

Prints a table with observed orders and optionally writes it as JSON.
"""

from __future__ import annotations

import argparse
import json
import math
import time
from dataclasses import asdict, dataclass, field

from genhopf.burgers import burgers_families, burgers_solve, mol_agreement
from genhopf.expr import parse_expr


@dataclass
class StudyConfig:
    study: str = "residual"
    sizes: list = field(default_factory=lambda: [100, 200, 400, 800])
    t_end: float = 0.5
    boundary: str = "dirichlet"


def residual_study(cfg: StudyConfig) -> list:
    fam = burgers_families("quadraticM", (0.0, 1.0), a1=1.0, b1=2.0)
    phi0 = parse_expr("2 + sin(pi*x)")
    rows = []
    for n in cfg.sizes:
        start = time.perf_counter()
        sol = burgers_solve(fam, phi0, cfg.t_end, n, n, boundary=cfg.boundary, threshold=1e-3)
        rows.append({"n": n, "linf": sol.report.linf, "relative": sol.report.relative,
                     "seconds": time.perf_counter() - start})
    return rows


def mol_study(cfg: StudyConfig) -> list:
    fam = burgers_families("expH", (0.0, 1.0), C=2.0, alpha=1.0)
    phi0 = parse_expr("exp(x)")
    rows = []
    for n in cfg.sizes:
        start = time.perf_counter()
        sol = burgers_solve(fam, phi0, cfg.t_end, n, n, boundary=cfg.boundary)
        agree = mol_agreement(fam, sol)
        rows.append({"n": n, "linf": agree["linf"], "residual": sol.report.linf,
                     "seconds": time.perf_counter() - start})
    return rows


def with_orders(rows: list) -> list:
    for prev, cur in zip(rows, rows[1:]):
        if prev["linf"] and cur["linf"]:
            cur["order"] = math.log2(prev["linf"] / cur["linf"])
    return rows


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("study", choices=("residual", "mol"))
    ap.add_argument("--sizes", type=int, nargs="+", default=None)
    ap.add_argument("--t-end", type=float, default=None)
    ap.add_argument("--boundary", choices=("robin", "dirichlet"), default="dirichlet")
    ap.add_argument("--json", default=None, help="write the table here")
    args = ap.parse_args()

    cfg = StudyConfig(study=args.study, boundary=args.boundary)
    if args.study == "mol":
        cfg.sizes, cfg.t_end = [100, 200, 400], 0.05
    if args.sizes:
        cfg.sizes = args.sizes
    if args.t_end is not None:
        cfg.t_end = args.t_end

    rows = with_orders(residual_study(cfg) if cfg.study == "residual" else mol_study(cfg))
    print(f"{'n':>6} {'linf':>12} {'order':>7} {'seconds':>8}")
    for r in rows:
        order = f"{r['order']:7.2f}" if "order" in r else " " * 7
        print(f"{r['n']:6d} {r['linf']:12.4e} {order} {r['seconds']:8.2f}")
    if args.json:
        with open(args.json, "w") as fh:
            json.dump({"config": asdict(cfg), "rows": rows}, fh, indent=2)


if __name__ == "__main__":
    main()
