import json
import math

import numpy as np
import pytest

from parlame.errors import InvalidGeometryError, UnsupportedDimensionError
from parlame.geometry import (
    BoundaryPatch,
    Cap,
    CylinderDomain,
    all_faces,
    composite_gauss,
    domain_from_json,
    domain_to_json,
    face,
    gauss_legendre,
    graded_breaks,
    make_ball,
    make_box,
    surface_rule,
    time_rule,
    volume_rule,
)


def test_gauss_legendre_exact_for_polynomials():
    x, w = gauss_legendre(-1.0, 3.0, 6)
    for p in range(12):
        assert np.isclose(np.sum(w * x**p), (3.0 ** (p + 1) - (-1.0) ** (p + 1)) / (p + 1), rtol=1e-13)


def test_composite_gauss_covers_breaks():
    x, w = composite_gauss([0.0, 0.1, 0.5, 2.0], 5)
    assert np.isclose(w.sum(), 2.0)
    assert np.all(np.diff(x) > 0)


def test_graded_breaks_refine_toward_center():
    br = graded_breaks(0.0, 1.0, 0.3, 1e-3, levels=8)
    assert br[0] == 0.0 and br[-1] == 1.0
    assert np.all(np.diff(br) > 0)
    gaps = np.diff(br)
    k = np.argmin(np.abs(br - 0.3))
    assert gaps[max(k - 1, 0)] < 0.01


def test_box_properties():
    b = make_box([[0, 2], [1, 4]])
    assert b.dim == 2 and b.measure == 6.0
    assert np.allclose(b.center, [1, 2.5])
    assert b.contains([1, 2]) and not b.contains([3, 2])
    assert b.distance_to_boundary([1, 2]) == pytest.approx(1.0)
    assert b.distance_to_boundary([3, 2]) == pytest.approx(1.0)
    assert b.mirror(1, 0).bounds == ((0.0, 2.0), (-2.0, 1.0))


@pytest.mark.parametrize("bounds", [[[0, 0], [0, 1]], [[1, 0], [0, 1]], [[0, np.inf], [0, 1]], [[0, 1]]])
def test_degenerate_boxes_rejected(bounds):
    with pytest.raises((InvalidGeometryError, UnsupportedDimensionError)):
        make_box(bounds)


def test_bad_radius_and_horizon():
    with pytest.raises(InvalidGeometryError):
        make_ball([0, 0], 0.0)
    with pytest.raises(InvalidGeometryError):
        CylinderDomain(make_box([[0, 1], [0, 1]]), 0.0)


def test_faces_and_normals(unit_square):
    faces = all_faces(unit_square)
    assert len(faces) == 4
    f = face(unit_square, 1, 0)
    assert np.array_equal(f.normal, [0.0, -1.0])
    assert f.plane == 0.0 and f.measure == 1.0
    assert f.distance([0.5, 0.25]) == pytest.approx(0.25)
    assert f.distance([1.5, -1.0]) == pytest.approx(math.hypot(0.5, 1.0))
    with pytest.raises(InvalidGeometryError):
        face(unit_square, 2, 0)


def test_volume_and_surface_rules():
    dom = CylinderDomain(make_box([[0, 1], [0, 2], [-1, 1]]), 1.0)
    r = volume_rule(dom, 4)
    assert r.integrate(np.ones(len(r))) == pytest.approx(4.0)
    s = surface_rule(face(dom, 2, 1), 4)
    assert s.integrate(np.ones(len(s))) == pytest.approx(2.0)
    assert np.allclose(s.normals, [0, 0, 1])


@pytest.mark.parametrize("n", [2, 3])
def test_ball_rules(n):
    ball = make_ball([0.0] * n, 1.5)
    r = volume_rule(CylinderDomain(ball, 1.0), 16)
    assert r.integrate(np.ones(len(r))) == pytest.approx(ball.measure, rel=1e-12)
    # second moment of the ball: int |x|^2 = |S| R^(n+2) / (n+2)
    sphere = 2 * math.pi if n == 2 else 4 * math.pi
    assert r.integrate(np.sum(r.nodes**2, axis=1)) == pytest.approx(sphere * 1.5 ** (n + 2) / (n + 2), rel=1e-12)
    cap = BoundaryPatch(CylinderDomain(ball, 1.0), Cap(tuple([0.0] * (n - 1) + [1.0]), math.pi))
    s = surface_rule(cap, 16)
    assert s.integrate(np.ones(len(s))) == pytest.approx(cap.measure, rel=1e-12)
    assert np.allclose(np.linalg.norm(s.nodes, axis=1), 1.5)


def test_empty_cap_rejected():
    dom = CylinderDomain(make_ball([0, 0], 1.0), 1.0)
    with pytest.raises(InvalidGeometryError):
        BoundaryPatch(dom, Cap((1.0, 0.0), 0.0))


def test_time_rule_sqrt_handles_endpoint_singularity():
    r = time_rule(0.0, 1.0, 8, mode="sqrt")
    val = r.integrate(1.0 / np.sqrt(1.0 - r.nodes[:, 0]))
    assert val == pytest.approx(2.0, rel=1e-13)
    with pytest.raises(ValueError):
        time_rule(1.0, 1.0, 4)


def test_domain_json_round_trip():
    for dom in (CylinderDomain(make_box([[0, 1], [0.5, 2]]), 2.0), CylinderDomain(make_ball([0, 0, 1], 2.0), 0.5)):
        assert domain_from_json(domain_to_json(dom)) == dom
    with pytest.raises(InvalidGeometryError):
        domain_from_json(json.dumps({"kind": "torus", "T": 1}))
