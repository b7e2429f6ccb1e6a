"""Sampled functions, pole masks and finite-difference helpers."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

POLE_THRESHOLD = 1e-8
MASK_HALF_STEPS = 2
BISECTION_TOL = 1e-10


@dataclass
class GridFunction:
    """Named rows sampled on a strictly increasing grid ``x``.

    With ``t`` set the rows are space-time fields of shape ``(len(t), len(x))``.
    """

    x: np.ndarray
    rows: dict = field(default_factory=dict)
    t: np.ndarray | None = None

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        if self.x.ndim != 1 or self.x.size < 2 or np.any(np.diff(self.x) <= 0):
            raise ValueError("grid must be a strictly increasing 1-D array")
        if self.t is not None:
            self.t = np.asarray(self.t, dtype=float)
        want = self.x.shape if self.t is None else (self.t.size, self.x.size)
        for name, row in list(self.rows.items()):
            row = np.asarray(row, dtype=float)
            if row.shape != want:
                raise ValueError(f"row {name!r} has shape {row.shape}, expected {want}")
            self.rows[name] = row

    def __getitem__(self, name: str) -> np.ndarray:
        return self.rows[name]

    def __contains__(self, name: str) -> bool:
        return name in self.rows

    @property
    def is_field(self) -> bool:
        return self.t is not None

    def write_csv(self, path, columns: Sequence[str] | None = None) -> None:
        if self.is_field:
            raise ValueError("use write_field_csv for space-time rows")
        columns = list(columns or self.rows)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["x", *columns])
            for i, xi in enumerate(self.x):
                w.writerow([fmt(xi), *(fmt(self.rows[c][i]) for c in columns)])

    def write_field_csv(self, path, row: str) -> None:
        """One line per time level: ``t`` then the row's values at each x."""
        if not self.is_field:
            raise ValueError("not a space-time field")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t", *(fmt(v) for v in self.x)])
            for n, tn in enumerate(self.t):
                w.writerow([fmt(tn), *(fmt(v) for v in self.rows[row][n])])

    @classmethod
    def read_csv(cls, path) -> "GridFunction":
        with open(path, newline="") as fh:
            r = csv.reader(fh)
            header = next(r)
            data = np.array([[float(v) for v in line] for line in r])
        if header[0] == "t":
            x = np.array([float(v) for v in header[1:]])
            return cls(x, {"value": data[:, 1:]}, t=data[:, 0])
        return cls(data[:, 0], {name: data[:, i + 1] for i, name in enumerate(header[1:])})


def fmt(value: float) -> str:
    """Shortest round-trip decimal form of a double."""
    return repr(float(value))


@dataclass
class PoleMask:
    """Open intervals around zeros of phi, sorted and disjoint."""

    zeros: list
    intervals: list
    half_width: float

    def mask(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape, dtype=bool)
        for lo, hi in self.intervals:
            out |= (x > lo) & (x < hi)
        return out

    def __bool__(self) -> bool:
        return bool(self.intervals)

    def to_dict(self) -> dict:
        return {"zeros": [float(z) for z in self.zeros],
                "intervals": [[float(a), float(b)] for a, b in self.intervals],
                "half_width": float(self.half_width)}


def _hermite(x0, x1, f0, f1, d0, d1):
    h = x1 - x0

    def p(s):
        u = (s - x0) / h
        h00 = 2 * u**3 - 3 * u**2 + 1
        h10 = u**3 - 2 * u**2 + u
        h01 = -2 * u**3 + 3 * u**2
        h11 = u**3 - u**2
        return h00 * f0 + h10 * h * d0 + h01 * f1 + h11 * h * d1

    return p


def _bisect(f, lo, hi, flo):
    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if np.sign(fm) == np.sign(flo):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def find_zeros(x, phi, dphi=None, threshold: float = POLE_THRESHOLD) -> list:
    """Zeros of sampled phi: sign changes refined by bisection, plus near-zeros.

    The interpolant between samples is cubic Hermite when ``dphi`` is given,
    linear otherwise.
    """
    x = np.asarray(x, dtype=float)
    phi = np.asarray(phi, dtype=float)
    scale = np.max(np.abs(phi[np.isfinite(phi)])) if np.any(np.isfinite(phi)) else 0.0
    near = np.abs(phi) < threshold * scale if scale > 0 else np.ones_like(phi, dtype=bool)
    zeros = [float(v) for v in x[near]]
    s = np.sign(phi)
    for i in np.nonzero(s[:-1] * s[1:] < 0)[0]:
        if near[i] or near[i + 1]:
            continue
        if dphi is not None:
            f = _hermite(x[i], x[i + 1], phi[i], phi[i + 1], dphi[i], dphi[i + 1])
        else:
            f = lambda s_, i=i: phi[i] + (phi[i + 1] - phi[i]) * (s_ - x[i]) / (x[i + 1] - x[i])
        zeros.append(float(_bisect(f, x[i], x[i + 1], phi[i])))
    return sorted(zeros)


def pole_mask(x, phi, dphi=None, threshold: float = POLE_THRESHOLD,
              half_steps: int = MASK_HALF_STEPS) -> PoleMask:
    x = np.asarray(x, dtype=float)
    zeros = find_zeros(x, phi, dphi, threshold)
    half = half_steps * float(np.max(np.diff(x)))
    intervals: list = []
    for z in zeros:
        lo, hi = z - half, z + half
        if intervals and lo <= intervals[-1][1]:
            intervals[-1] = (intervals[-1][0], max(hi, intervals[-1][1]))
        else:
            intervals.append((lo, hi))
    return PoleMask(zeros, intervals, half)


# -- finite differences ---------------------------------------------------------

def fd_weights(z: float, xs: Sequence[float], m: int) -> np.ndarray:
    """Fornberg weights: row k holds the k-th derivative weights at z."""
    xs = np.asarray(xs, dtype=float)
    n = xs.size
    c = np.zeros((m + 1, n))
    c1 = 1.0
    c4 = xs[0] - z
    c[0, 0] = 1.0
    for i in range(1, n):
        mn = min(i, m)
        c2 = 1.0
        c5 = c4
        c4 = xs[i] - z
        for j in range(i):
            c3 = xs[i] - xs[j]
            c2 *= c3
            if j == i - 1:
                for k in range(mn, 0, -1):
                    c[k, i] = c1 * (k * c[k - 1, i - 1] - c5 * c[k, i - 1]) / c2
                c[0, i] = -c1 * c5 * c[0, i - 1] / c2
            for k in range(mn, 0, -1):
                c[k, j] = (c4 * c[k, j] - k * c[k - 1, j]) / c3
            c[0, j] = c4 * c[0, j] / c3
        c1 = c2
    return c


def fd_derivative(values: np.ndarray, h: float, deriv: int, accuracy: int = 4,
                  axis: int = -1) -> np.ndarray:
    """Derivative of uniformly sampled data, centred inside, one-sided at edges.

    Stencils have ``deriv + accuracy - 1`` points (rounded up to odd for the
    centred ones), so the truncation error is O(h**accuracy) everywhere.
    """
    v = np.moveaxis(np.asarray(values, dtype=float), axis, -1)
    n = v.shape[-1]
    width = deriv + accuracy - 1
    if width % 2 == 0:
        width += 1
    half = width // 2
    if n < width + 1:
        raise ValueError("too few samples for the requested stencil")
    out = np.empty_like(v)
    grid = np.arange(width, dtype=float)
    w_c = fd_weights(float(half), grid, deriv)[deriv]
    acc = np.zeros(v.shape[:-1] + (n - 2 * half,))
    for j in range(width):
        acc = acc + w_c[j] * v[..., j: n - width + 1 + j]
    out[..., half: n - half] = acc
    side_width = deriv + accuracy
    side = np.arange(side_width, dtype=float)
    for i in range(half):
        w = fd_weights(float(i), side, deriv)[deriv]
        out[..., i] = v[..., :side_width] @ w
        out[..., n - 1 - i] = v[..., n - side_width:] @ w[::-1] * (-1) ** deriv
    return np.moveaxis(out / h**deriv, -1, axis)
