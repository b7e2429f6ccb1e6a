"""Nonlinear ODEs and PDEs linearized by ``psi = P + Q phi'/phi``.

Family modules (:mod:`vdp`, :mod:`lienard`, :mod:`painleve3`,
:mod:`burgers`, :mod:`convective`) build coefficient functions as
expressions, :mod:`lincore` solves the paired linear problem,
:mod:`colehopf` maps solutions across, and :mod:`oracle` checks the result
independently.
"""

from .colehopf import LinearizationPair, apply_transform, ic_from_phi, transform_derivatives
from .expr import Expr, eval_jet, parse_expr
from .grid import GridFunction, PoleMask
from .jet import Jet
from .oracle import ResidualReport, integrate_ode, integrate_pde_mol, residual_report

__version__ = "0.1.0"

__all__ = [
    "Expr", "GridFunction", "Jet", "LinearizationPair", "PoleMask", "ResidualReport",
    "apply_transform", "eval_jet", "ic_from_phi", "integrate_ode", "integrate_pde_mol",
    "parse_expr", "residual_report", "transform_derivatives",
]
