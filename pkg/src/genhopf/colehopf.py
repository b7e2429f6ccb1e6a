"""The generalized Cole-Hopf map ``psi = P + Q * phi'/phi``.

Derivatives of psi come from the Riccati relation obeyed by ``r = phi'/phi``
when ``phi'' = K phi' + U phi``::

    r'  = U + K r - r^2
    r'' = U' + K' r + K r' - 2 r r'

so no finite differencing of phi is ever needed.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import GridFunction, PoleMask, pole_mask
from .lincore import LinearSpec, as_function, derivs_of


class SingularSolutionError(ValueError):
    """Every grid point sits inside a pole mask."""


class PoleAtAnchorError(ValueError):
    """phi vanishes at the point where initial conditions are matched."""


@dataclass
class LinearizationPair:
    """A nonlinear target paired with the linear problem that generates it.

    ``nonlinear`` is whatever the family's oracle needs: a
    :class:`~genhopf.oracle.NonlinearODE` for ODE families, a dict of PDE
    coefficients for the Burgers family.
    """

    P: object
    Q: object
    linear: LinearSpec
    nonlinear: object
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        self.P = as_function(self.P)
        self.Q = as_function(self.Q)


@dataclass
class Transformed:
    x: np.ndarray
    psi: np.ndarray
    mask: PoleMask
    masked: np.ndarray

    @property
    def mask_fraction(self) -> float:
        return float(self.masked.mean())


def _check_samples(x, phi, dphi):
    x = np.asarray(x, dtype=float)
    phi = np.asarray(phi, dtype=float)
    dphi = np.asarray(dphi, dtype=float)
    if x.ndim != 1 or x.size < 2 or np.any(np.diff(x) <= 0):
        raise ValueError("grid must be strictly increasing")
    if phi.shape != x.shape or dphi.shape != x.shape:
        raise ValueError("phi and dphi must match the grid")
    if not (np.all(np.isfinite(phi)) and np.all(np.isfinite(dphi))):
        raise ValueError("phi and dphi must be finite")
    return x, phi, dphi


def apply_transform(P, Q, x, phi, dphi) -> Transformed:
    """``psi = P + Q phi'/phi`` with masked (NaN) values near zeros of phi."""
    x, phi, dphi = _check_samples(x, phi, dphi)
    mask = pole_mask(x, phi, dphi)
    masked = mask.mask(x) | (phi == 0)
    if np.all(masked):
        raise SingularSolutionError("solution entirely singular: every point is masked")
    P, Q = as_function(P), as_function(Q)
    with np.errstate(divide="ignore", invalid="ignore"):
        psi = P(x) + Q(x) * dphi / phi
    psi = np.where(masked, np.nan, np.broadcast_to(psi, x.shape))
    return Transformed(x, psi, mask, masked)


def transform_derivatives(P, Q, linear: LinearSpec, x, phi, dphi) -> GridFunction:
    """psi, psi' and psi'' on the grid, NaN inside pole masks.

    The result also carries a boolean-valued ``masked`` row (1.0 where masked).
    """
    out = apply_transform(P, Q, x, phi, dphi)
    x = out.x
    p = derivs_of(as_function(P), x, 2)
    q = derivs_of(as_function(Q), x, 2)
    u = derivs_of(linear.U, x, 1)
    k = derivs_of(linear.K, x, 1)
    # values at exact zeros of phi are non-finite and get masked below
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.asarray(dphi, dtype=float) / np.asarray(phi, dtype=float)
        r1 = u[0] + k[0] * r - r * r
        r2 = u[1] + k[1] * r + k[0] * r1 - 2.0 * r * r1
        dpsi = p[1] + q[1] * r + q[0] * r1
        ddpsi = p[2] + q[2] * r + 2.0 * q[1] * r1 + q[0] * r2
    nan = out.masked
    return GridFunction(x, {"psi": out.psi,
                            "dpsi": np.where(nan, np.nan, dpsi),
                            "ddpsi": np.where(nan, np.nan, ddpsi),
                            "masked": nan.astype(float)})


def ic_from_phi(P, Q, phi0: float, dphi0: float, linear: LinearSpec, x0: float):
    """``(psi(x0), psi'(x0))`` for the solution generated by ``phi(x0), phi'(x0)``."""
    if phi0 == 0:
        raise PoleAtAnchorError(f"phi vanishes at the anchor x0={x0}")
    r = dphi0 / phi0
    x = np.array([float(x0)])
    p = derivs_of(as_function(P), x, 1)[:, 0]
    q = derivs_of(as_function(Q), x, 1)[:, 0]
    u = float(linear.U(x)[0]) if np.ndim(linear.U(x)) else float(linear.U(x))
    k = 0.0 if linear.K is None else float(np.broadcast_to(linear.K(x), (1,))[0])
    psi = p[0] + q[0] * r
    dpsi = p[1] + q[1] * r + q[0] * (u + k * r - r * r)
    return float(psi), float(dpsi)
