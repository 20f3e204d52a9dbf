"""Green's function, cell-averaged kernel, stream/velocity evaluation, moments."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from dipolekit import (
    DivergentMomentError,
    GreenSingularityError,
    GridField,
    green_eval,
    green_pnorm_moment,
    stream_eval,
    stream_grid,
    velocity_eval,
)
from dipolekit.halfplane_kernel import average_log_distance

TWO_PI = 2.0 * np.pi

finite_coord = st.floats(-8.0, 8.0, allow_nan=False, allow_infinity=False)
pos_height = st.floats(0.05, 8.0, allow_nan=False, allow_infinity=False)


def test_green_aligned_pair_closed_form():
    # log(1 + 4*1*2/1) / (4 pi) = log(9)/(4 pi)
    val = green_eval((0.0, 1.0), (0.0, 2.0))
    assert val == pytest.approx(0.174849576283030, rel=1e-12)
    assert val == pytest.approx(np.log(9.0) / (4.0 * np.pi), rel=1e-14)


@given(x1=finite_coord, x2=pos_height, y1=finite_coord, y2=pos_height)
@settings(max_examples=60, deadline=None)
def test_green_symmetric_in_arguments(x1, x2, y1, y2):
    if (x1 - y1) ** 2 + (x2 - y2) ** 2 < 1e-12:
        return
    a = green_eval((x1, x2), (y1, y2))
    b = green_eval((y1, y2), (x1, x2))
    assert a == pytest.approx(b, rel=1e-12)
    assert a > 0.0


@given(x1=finite_coord, x2=pos_height, y1=finite_coord, y2=pos_height,
       shift=finite_coord, scale=st.floats(0.25, 4.0))
@settings(max_examples=60, deadline=None)
def test_green_translation_and_scale_invariance(x1, x2, y1, y2, shift, scale):
    if (x1 - y1) ** 2 + (x2 - y2) ** 2 < 1e-12:
        return
    base = green_eval((x1, x2), (y1, y2))
    moved = green_eval((x1 + shift, x2), (y1 + shift, y2))
    assert moved == pytest.approx(base, rel=1e-11)
    zoomed = green_eval((scale * x1, scale * x2), (scale * y1, scale * y2))
    assert zoomed == pytest.approx(base, rel=1e-10)


def test_green_vanishes_toward_wall():
    ref = green_eval((0.0, 1.0), (0.5, 1.0))
    for y2 in (1e-3, 1e-6, 1e-9):
        assert green_eval((0.0, 1.0), (0.5, y2)) < ref * 1e-2 / min(1e-3 / y2, 1e4)


def test_green_coincident_points_rejected():
    with pytest.raises(GreenSingularityError):
        green_eval((0.3, 1.2), (0.3, 1.2))


def test_green_lower_half_rejected():
    with pytest.raises(ValueError):
        green_eval((0.0, -0.5), (0.0, 1.0))
    with pytest.raises(ValueError):
        green_eval((0.0, 0.5), (0.0, -1.0))


def test_self_cell_average_log_closed_form():
    # mean of log|x - y| over a unit cell against itself:
    # 0.5*log(0.5) - 1.5 + pi/4
    exact = 0.5 * np.log(0.5) - 1.5 + np.pi / 4.0
    assert average_log_distance(0.0, 0.0, 1.0) == pytest.approx(exact, rel=1e-13)


@pytest.mark.parametrize("dx,dy", [(1.0, 0.0), (0.0, 1.0), (2.0, 3.0), (0.5, 0.25)])
def test_cell_average_matches_direct_quadrature(dx, dy):
    # mean over one cell of log distance to an offset target point
    h = 0.5
    u1, u2 = dx * h, dy * h
    val, _ = integrate.dblquad(
        lambda b, a: np.log(np.hypot(a - u1, b - u2)),
        -h / 2, h / 2, -h / 2, h / 2, epsabs=1e-12,
    )
    val /= h**2
    assert average_log_distance(u1, u2, h) == pytest.approx(val, abs=5e-9)


def test_cell_average_scales_with_cell_size():
    # halving the cell shifts the self value by log(1/2) and rescales offsets
    a = average_log_distance(0.0, 0.0, 1.0)
    b = average_log_distance(0.0, 0.0, 0.5)
    assert b == pytest.approx(a + np.log(0.5), rel=1e-13)
    c = average_log_distance(1.0, 0.5, 1.0)
    d = average_log_distance(0.5, 0.25, 0.5)
    assert d == pytest.approx(c + np.log(0.5), abs=1e-13)


def _tiny_blob_field():
    # narrow gaussian source centered on (0, 1); grid spans the wall up to 1.28
    n = 64
    cell = 0.02
    x1 = (np.arange(n) + 0.5) * cell - n * cell / 2
    x2 = (np.arange(n) + 0.5) * cell
    xx, yy = np.meshgrid(x1, x2)
    sigma2 = 0.04**2
    vals = np.exp(-(xx**2 + (yy - 1.0) ** 2) / (2 * sigma2))
    return GridField(origin_x1=-n * cell / 2, cell=cell, values=vals)


def test_stream_far_field_matches_green_times_mass():
    f = _tiny_blob_field()
    mass = float(f.values.sum()) * f.cell**2
    for target in ((1.5, 1.2), (-0.8, 0.4), (0.0, 3.0)):
        direct = stream_eval(f, target)
        approx = mass * green_eval(target, (0.0, 1.0))
        assert direct == pytest.approx(approx, rel=5e-3)


def test_stream_grid_matches_pointwise_eval():
    n = 32
    cell = 2.0 / n
    x1 = (np.arange(2 * n) + 0.5) * cell - 2.0
    x2 = (np.arange(n) + 0.5) * cell
    xx, yy = np.meshgrid(x1, x2)
    vals = np.exp(-((xx) ** 2 + (yy - 1.0) ** 2) / 0.08)
    f = GridField(origin_x1=-2.0, cell=cell, values=vals)
    psi = stream_grid(f)
    for j, i in ((4, 20), (16, 32), (28, 50)):
        point = stream_eval(f, (x1[i], x2[j]))
        assert psi[j, i] == pytest.approx(point, rel=5e-3)


def test_velocity_tangent_at_wall():
    f = _tiny_blob_field()
    for x1 in (-0.7, 0.0, 1.3):
        u = velocity_eval(f, (x1, 0.0))
        assert abs(u[1]) < 1e-12 * max(1.0, abs(u[0]))


def test_moment_divergent_orders_rejected():
    for q in (0.5, 1.0, 2.0):
        with pytest.raises(DivergentMomentError):
            green_pnorm_moment((0.0, 1.0), q)


def test_moment_vanishes_on_wall():
    assert green_pnorm_moment((2.0, 0.0), 3) == 0.0


def test_moment_cubed_closed_form():
    # integral of G((0,1), .)^3 over the half plane equals 1/16; verified
    # against shell-summed adaptive quadrature out to R = 2e8
    assert green_pnorm_moment((0.0, 1.0), 3) == pytest.approx(1.0 / 16.0, rel=1e-6)
    assert green_pnorm_moment((3.7, 2.5), 3) == pytest.approx(2.5**2 / 16.0, rel=1e-6)


def test_moment_quartic_frozen_value():
    # frozen from shell-summed adaptive quadrature (0.014538067326)
    c4 = 0.014538067350
    assert green_pnorm_moment((0.0, 1.0), 4) == pytest.approx(c4, rel=1e-6)
    assert green_pnorm_moment((-2.0, 3.0), 4) == pytest.approx(9.0 * c4, rel=1e-6)


@pytest.mark.parametrize("q", [2.5, 3.0, 4.0])
def test_moment_height_squared_scaling(q):
    base = green_pnorm_moment((0.0, 1.0), q)
    for x1, x2 in ((4.0, 0.5), (-7.0, 2.0), (0.3, 3.3)):
        val = green_pnorm_moment((x1, x2), q)
        assert val == pytest.approx(x2**2 * base, rel=1e-6)
