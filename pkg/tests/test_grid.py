import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from genhopf.grid import GridFunction, fd_derivative, fmt, pole_mask
from genhopf.oracle import pole_detect


def test_poles_of_sine():
    x = np.linspace(0, 7, 701)
    m = pole_detect(GridFunction(x, {"phi": np.sin(x), "dphi": np.cos(x)}))
    interior = [z for z in m.zeros if z > 0.01]
    assert len(interior) == 2
    assert abs(interior[0] - math.pi) < 1e-10
    assert abs(interior[1] - 2 * math.pi) < 1e-10


def test_exponential_has_no_poles():
    x = np.linspace(0, 3, 301)
    assert not pole_detect(GridFunction(x, {"phi": np.exp(x)}))


def test_near_zero_without_sign_change_is_masked():
    x = np.linspace(-1, 1, 201)
    m = pole_mask(x, x**2 + 1e-12)
    assert m and m.mask(np.array([0.0]))[0]


def test_mask_half_width_is_two_steps():
    x = np.linspace(0, 4, 401)
    m = pole_mask(x, np.sin(x), np.cos(x))
    assert m.half_width == pytest.approx(2 * (x[1] - x[0]))
    masked = m.mask(x)
    assert masked[np.abs(x - math.pi) < 0.015].all()
    far = (np.abs(x - math.pi) > 0.03) & (x > 0.5)
    assert not masked[far].any()


@pytest.mark.parametrize("deriv", [1, 2, 3])
def test_fd_derivative_is_fourth_order(deriv):
    errs = []
    for n in (41, 81):
        x = np.linspace(0, 1, n)
        exact = [np.cos, lambda s: -np.sin(s), lambda s: -np.cos(s)][deriv - 1](x)
        errs.append(np.max(np.abs(fd_derivative(np.sin(x), x[1] - x[0], deriv) - exact)))
    assert math.log2(errs[0] / errs[1]) > 3.5


def test_csv_round_trip(tmp_path):
    x = np.linspace(0, 1, 7)
    g = GridFunction(x, {"a": np.sin(x) / 3, "b": np.exp(x)})
    g.write_csv(tmp_path / "g.csv")
    back = GridFunction.read_csv(tmp_path / "g.csv")
    assert np.array_equal(back.x, x)
    assert np.array_equal(back["a"], g["a"]) and np.array_equal(back["b"], g["b"])


def test_field_csv_round_trip(tmp_path):
    x = np.linspace(0, 1, 5)
    t = np.array([0.0, 0.1, 0.2])
    g = GridFunction(x, {"u": np.outer(np.exp(-t), np.sin(x))}, t=t)
    g.write_field_csv(tmp_path / "u.csv", "u")
    back = GridFunction.read_csv(tmp_path / "u.csv")
    assert np.array_equal(back["value"], g["u"]) and np.array_equal(back.t, t)


@given(st.floats(allow_nan=False, allow_infinity=False))
def test_fmt_round_trips(v):
    assert float(fmt(v)) == v


def test_grid_validation():
    with pytest.raises(ValueError):
        GridFunction(np.array([0.0, 0.0, 1.0]))
    with pytest.raises(ValueError):
        GridFunction(np.linspace(0, 1, 3), {"a": np.zeros(4)})
