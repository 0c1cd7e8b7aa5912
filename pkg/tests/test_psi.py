import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from paralab.dyadic import GrassmannLine, frostman_constant, line_metric
from paralab.measures import arc_measure, to_dyadic, uniform_measure
from paralab.psi import (
    Tube,
    audit_transfer,
    line_of_translated_parabola,
    lipschitz_bound,
    parabolic_rescale,
    psi,
    tangent_line,
    transfer_neighbourhood,
)

coord = st.floats(-2.0**20, 2.0**20, allow_nan=False)
box_coord = st.floats(-1.0, 1.0)


def test_psi_examples():
    assert np.array_equal(psi([0.0, 0.0]), [0.0, 0.0])
    assert np.array_equal(psi([1.0, 1.0]), [1.0, 0.0])
    assert np.array_equal(psi([1.0, 0.0]), [1.0, 1.0])
    for x in (-1.0, 0.3, 1.0):
        out = psi([x, x * x])
        assert out[0] == x and abs(out[1]) < 1e-15


def test_line_of_translated_parabola_examples():
    assert line_of_translated_parabola((0, 0)) == GrassmannLine(0.0, 0.0)
    assert line_of_translated_parabola((1, 0)) == GrassmannLine(2.0, -1.0)


def test_tangent_line_examples():
    assert tangent_line((0, 0)) == GrassmannLine(0.0, 0.0)
    assert tangent_line((1, 1)) == GrassmannLine(2.0, -1.0)


def test_translated_parabola_maps_onto_line():
    rng = np.random.default_rng(3)
    for z in rng.uniform(-2, 2, size=(10, 2)):
        u = rng.uniform(-2, 2, 20)
        w = np.column_stack([z[0] + u, z[1] + u * u])
        line = line_of_translated_parabola(z)
        assert np.max(np.abs(line.signed_distance(psi(w)))) < 1e-12


def test_tangent_line_maps_onto_translated_parabola():
    rng = np.random.default_rng(4)
    for z in rng.uniform(-2, 2, size=(10, 2)):
        x = rng.uniform(-2, 2, 20)
        line = tangent_line(z)
        pts = np.column_stack([x, line.slope * x + line.intercept])
        img = psi(pts)
        c = psi(z)
        assert np.max(np.abs(img[:, 1] - (c[1] + (img[:, 0] - c[0]) ** 2))) < 1e-12


def test_cores_agree_for_images():
    w = np.array([0.4, -0.3])
    assert tangent_line(psi(w)) == line_of_translated_parabola(w) or math.isclose(
        line_metric(tangent_line(psi(w)), line_of_translated_parabola(w)), 0.0, abs_tol=1e-15)


def test_transfer_neighbourhood_at_origin():
    tube, audit = transfer_neighbourhood((0.0, 0.0), 2.0**-8, ((-2, 2), (-2, 2)), samples=10_000)
    assert tube.core == GrassmannLine(0.0, 0.0)
    assert audit.constant <= 12.0
    assert audit.audited <= audit.constant
    assert audit.escaped == 0


def test_transfer_reports_points_outside_box():
    pts = np.array([[0.0, 0.0], [5.0, 0.0]])
    audit = audit_transfer((0.0, 0.0), 0.01, ((-1, 1), (-1, 1)), pts, 3.0)
    assert audit.outside_box == 1 and audit.samples == 1


def test_transfer_rejects_unbounded_box():
    with pytest.raises(ValueError):
        transfer_neighbourhood((0, 0), 0.01, ((-math.inf, 1), (0, 1)))
    with pytest.raises(ValueError):
        lipschitz_bound(((1, -1), (0, 1)))


def test_tube_validation_and_membership():
    t = Tube(GrassmannLine(0.0, 0.0), 0.2)
    assert list(t.contains([[0.0, 0.1], [0.0, 0.11]])) == [True, False]
    with pytest.raises(ValueError):
        Tube(GrassmannLine(0.0, 0.0), 0.0)


def test_parabolic_rescale_examples():
    m = uniform_measure([[2.0, 4.0], [-1.0, 1.0]])
    same = parabolic_rescale(m, 1.0)
    assert np.array_equal(same.points, m.points)
    out = parabolic_rescale(m, 2.0)
    assert np.allclose(out.points[0], [1.0, 1.0])
    assert np.array_equal(out.masses, m.masses)
    with pytest.raises(ValueError):
        parabolic_rescale(m, 0.5)


def test_parabolic_rescale_frostman_growth():
    arc = arc_measure(2.0**-8)
    before = frostman_constant(to_dyadic(arc, 8), 1.0)
    after = frostman_constant(to_dyadic(parabolic_rescale(arc, 2.0), 10), 1.0)
    assert after <= before * 2.0 ** (2 * 1.0 + 1)


@given(coord, coord)
def test_involution_to_rounding(x, y):
    back = psi(psi([x, y]))
    assert back[0] == x
    # x^2 - (x^2 - y) loses at most a few ulps of x^2
    assert abs(back[1] - y) <= 4 * np.finfo(float).eps * max(1.0, x * x, abs(y))


@given(st.floats(0.1, 4.0), st.integers(0, 2**32 - 1))
@settings(max_examples=30)
def test_bi_lipschitz_on_balls(k, seed):
    rng = np.random.default_rng(seed)
    p = rng.uniform(-k, k, size=(200, 2)) / math.sqrt(2)
    q = rng.uniform(-k, k, size=(200, 2)) / math.sqrt(2)
    d = np.linalg.norm(p - q, axis=1)
    di = np.linalg.norm(psi(p) - psi(q), axis=1)
    assert np.all(di <= (1 + 2 * k) * d * (1 + 1e-12))
    assert np.all(di >= d / (1 + 2 * k) * (1 - 1e-12))


@given(box_coord, box_coord, box_coord, box_coord)
@settings(max_examples=100)
def test_image_lines_comparable_to_points(x1, y1, x2, y2):
    z1, z2 = np.array([x1, y1]), np.array([x2, y2])
    dist = float(np.linalg.norm(z1 - z2))
    if dist < 1e-9:
        return
    dl = line_metric(line_of_translated_parabola(z1), line_of_translated_parabola(z2))
    assert dist / 10 <= dl <= 10 * dist


@given(box_coord, box_coord, st.integers(0, 1000))
@settings(max_examples=20, deadline=None)
def test_transfer_contains_neighbourhood(x, y, seed):
    _, audit = transfer_neighbourhood((x, y), 2.0**-6, ((-1, 1), (-1, 1)), samples=500, seed=seed)
    assert audit.escaped == 0
