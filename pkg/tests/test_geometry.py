import math

import numpy as np
import pytest

from helly_quant.errors import DimensionMismatch, NotBounded, PreconditionError
from helly_quant.geometry import (Ellipsoid, HPolytope, HullOfEllipsoids, Intersection, Tolerances,
                                  ball_translate_in_ellipsoid, ellipsoid_in_polytope,
                                  ellipsoid_in_support_body, erode_by_ellipsoid, intersect_polytopes,
                                  support_gap, unit_ball_volume)

from .conftest import box, disc, polygon


def test_unit_ball_volume():
    assert unit_ball_volume(2) == pytest.approx(math.pi)
    assert unit_ball_volume(3) == pytest.approx(4 * math.pi / 3)


def test_intersection_of_boxes():
    P = intersect_polytopes([box([-1, -1], [1, 1]), box([0, 0], [2, 2])])
    V = P.vertices()
    assert sorted(map(tuple, np.round(V, 12))) == [(0, 0), (0, 1), (1, 0), (1, 1)]


def test_intersection_idempotent(unit_square):
    P = intersect_polytopes([unit_square, unit_square])
    assert P.halfspace_set() == unit_square.halfspace_set()
    assert P.n_halfspaces == 4


def test_disjoint_intersection_is_empty():
    P = intersect_polytopes([box([-1, 0], [0, 1]), box([1, 0], [2, 1])])
    assert P.is_empty()
    assert not P.nonempty


def test_unbounded_rejected():
    P = HPolytope([[1.0, 0.0]], [1.0])
    assert not P.bounded
    with pytest.raises(NotBounded):
        P.chebyshev


def test_dimension_mismatch():
    with pytest.raises(DimensionMismatch):
        intersect_polytopes([box([0], [1]), box([0, 0], [1, 1])])


def test_erosion_of_square():
    P = erode_by_ellipsoid(box([-2, -2], [2, 2]), disc(0, 0))
    assert P.halfspace_set() == box([-1, -1], [1, 1]).halfspace_set()


def test_erosion_tiny_ball_is_near_identity(unit_square):
    P = erode_by_ellipsoid(unit_square, Ellipsoid.ball([0, 0], 1e-9))
    assert np.allclose(P.b, unit_square.b, atol=2e-9)


def test_erosion_of_triangle_sampling_oracle(rng):
    T = polygon([(0, 0), (6, 0), (0, 6)])
    D = disc(0, 0)
    Er = erode_by_ellipsoid(T, D)
    # edges move inward by one: legs x=1, y=1 and hypotenuse x+y = 6 - sqrt(2)
    assert Er.contains_point([1, 1]) and Er.contains_point([1, 5 - math.sqrt(2)])
    pts = rng.uniform(0, 6, (4000, 2))
    inside = [x for x in pts if Er.contains_point(x)][:200]
    assert len(inside) == 200
    for x in inside:
        assert ellipsoid_in_polytope(D.moved_to(x), T)
    outside = [x for x in pts if not Er.contains_point(x, Tolerances(feas=1e-6))][:200]
    for x in outside:
        assert not ellipsoid_in_polytope(D.moved_to(x), T)


def test_ellipsoid_in_polytope_cases(unit_square):
    assert ellipsoid_in_polytope(disc(0, 0), unit_square)
    assert not ellipsoid_in_polytope(disc(0.5, 0), unit_square)
    E = Ellipsoid([0, -1.5], np.diag([2.0, 0.5]))
    assert ellipsoid_in_polytope(E, box([-2, -2], [2, 2]))


def test_ball_translate():
    assert np.allclose(ball_translate_in_ellipsoid(disc(0, 0), 0.5), 0)
    assert ball_translate_in_ellipsoid(Ellipsoid([0, 0], np.diag([2.0, 0.4])), 0.5) is None
    # volume 0.6 pi ellipse inside the unit disc holds a 0.3-ball translate
    assert ball_translate_in_ellipsoid(Ellipsoid([0, 0], np.diag([1.0, 0.6])), 0.3) is not None
    with pytest.raises(PreconditionError):
        ball_translate_in_ellipsoid(disc(0, 0), 0.0)


def test_support_body_containment():
    H = HullOfEllipsoids((disc(-1, 0), disc(1, 0)))
    assert ellipsoid_in_support_body(disc(0, 0), H)
    assert not ellipsoid_in_support_body(disc(0, 0, 1.2), H)
    V = HullOfEllipsoids((disc(0, -1), disc(0, 1)))
    assert ellipsoid_in_support_body(disc(0, 0, 0.99), Intersection((H, V)))


def test_support_gap_matches_analytic():
    H = HullOfEllipsoids((disc(-1, 0), disc(1, 0)))
    gap, u = support_gap(disc(0, 0, 1.2), H)
    assert gap == pytest.approx(0.2, abs=1e-6)
    assert abs(u[1]) == pytest.approx(1.0, abs=1e-3)


def test_ellipsoid_affine_image_and_volume():
    E = Ellipsoid([1.0, 2.0], np.diag([2.0, 0.5]))
    assert E.volume == pytest.approx(math.pi)
    M = np.array([[2.0, 1.0], [0.0, 1.0]])
    F = E.affine_image(M, [1.0, -1.0])
    assert F.volume == pytest.approx(math.pi * 2)
    assert np.allclose(F.center, M @ E.center + [1, -1])
    assert np.allclose(F.shape @ F.shape, M @ E.shape @ E.shape @ M.T)


def test_json_round_trip(unit_square):
    P = HPolytope.from_json(unit_square.to_json())
    assert P.halfspace_set() == unit_square.halfspace_set()
    E = Ellipsoid([0.1, 0.2], np.array([[2.0, 0.3], [0.3, 1.0]]))
    F = Ellipsoid.from_json(E.to_json())
    assert F.close_to(E, 0.0)


def test_chebyshev_dual_path_agrees(rng):
    # more than 40 rows switches to the dual formulation
    ang = np.sort(rng.uniform(0, 2 * np.pi, 60))
    A = np.c_[np.cos(ang), np.sin(ang)]
    b = 1 + rng.random(60)
    P = HPolytope(A, b)
    c1, r1 = P.chebyshev
    assert r1 > 0
    assert np.all(A @ c1 + r1 <= b + 1e-9)
    assert np.isclose((b - A @ c1).min(), r1, atol=1e-9)
    # primal formulation on the same rows gives the same radius
    from helly_quant.lp import LE, LPProblem, solve_lp
    rows = [(np.append(a, 1.0), LE, bi) for a, bi in zip(A, b)]
    sol = solve_lp(LPProblem(np.array([0.0, 0.0, 1.0]), rows, [(-np.inf, np.inf)] * 3))
    assert sol.x[2] == pytest.approx(r1, abs=1e-9)
