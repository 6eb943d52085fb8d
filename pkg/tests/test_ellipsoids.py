import math

import numpy as np
import pytest

from helly_quant.ellipsoids import (SolverConfig, contains_volume_v, determining_subset,
                                    lowest_ellipsoid, max_inscribed_ellipsoid, n_ellipsoid_params,
                                    solve_max_inscribed)
from helly_quant.errors import EmptyInterior, PreconditionError, VolumeInfeasible
from helly_quant.geometry import ellipsoid_in_polytope, intersect_polytopes

from .conftest import box, polygon
from .oracles import box_mvie_volume, steiner_inellipse_area


def test_n_params():
    assert [n_ellipsoid_params(d) for d in (1, 2, 3)] == [2, 5, 9]


def test_box_mvie_axis_aligned():
    E = max_inscribed_ellipsoid(box([-1, -5], [1, 5]))
    assert np.allclose(E.center, 0, atol=1e-7)
    assert np.allclose(E.shape, np.diag([1.0, 5.0]), atol=1e-6)


def test_triangle_steiner_inellipse():
    V = [(0, 0), (4, 0), (0, 4)]
    res = solve_max_inscribed(polygon(V))
    assert np.allclose(res.ellipsoid.center, [4 / 3, 4 / 3], atol=1e-6)
    assert res.volume == pytest.approx(steiner_inellipse_area(V), rel=1e-6)
    assert res.duality_gap < 1e-6
    assert sorted(res.active_halfspaces) == [0, 1, 2]


def test_triangle_area_by_sampling(rng):
    E = max_inscribed_ellipsoid(polygon([(0, 0), (4, 0), (0, 4)]))
    pts = rng.uniform(0, 4, (200_000, 2))
    Binv = np.linalg.inv(E.shape)
    frac = np.mean(np.linalg.norm((pts - E.center) @ Binv.T, axis=1) <= 1)
    assert frac * 16 == pytest.approx(math.pi * 8 / (3 * math.sqrt(3)), rel=0.02)


def test_empty_interior_rejected():
    with pytest.raises(EmptyInterior):
        solve_max_inscribed(intersect_polytopes([box([0, 0], [1, 1]), box([1, 0], [2, 1])]))


def test_lowest_closed_form():
    res = lowest_ellipsoid(box([-2, -2], [2, 2]), math.pi)
    E = res.ellipsoid
    assert np.allclose(E.shape, np.diag([2.0, 0.5]), atol=1e-6)
    assert np.allclose(E.center, [0, -1.5], atol=1e-6)
    assert res.height == pytest.approx(-1.0, abs=1e-6)


def test_lowest_unique_feasible_point(unit_square):
    res = lowest_ellipsoid(unit_square, math.pi)
    assert np.allclose(res.ellipsoid.shape, np.eye(2), atol=1e-6)
    assert res.height == pytest.approx(1.0, abs=1e-6)


def test_lowest_translation_equivariance():
    a = lowest_ellipsoid(box([-2, -2], [2, 2]), math.pi).ellipsoid
    b = lowest_ellipsoid(box([-2, 1], [2, 5]), math.pi).ellipsoid
    assert np.allclose(a.shape, b.shape, atol=1e-6)
    assert np.allclose(b.center - a.center, [0, 3], atol=1e-6)
    assert b.height - a.height == pytest.approx(3.0, abs=1e-6)


def test_lowest_rejects_large_volume(unit_square):
    with pytest.raises(VolumeInfeasible):
        lowest_ellipsoid(unit_square, 4.0)
    with pytest.raises(PreconditionError):
        lowest_ellipsoid(unit_square, -1.0)


def test_contains_volume_v_boundaries(unit_square):
    assert contains_volume_v(unit_square, math.pi)
    assert not contains_volume_v(unit_square, 4.0)
    thin = box([0, 0], [1, 0.1])
    assert box_mvie_volume([0, 0], [1, 0.1]) == pytest.approx(math.pi / 40)
    assert contains_volume_v(thin, math.pi / 40)


def test_solver_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(barrier_mu=1.0)
    with pytest.raises(ValueError):
        SolverConfig(max_iters=3)


def test_determining_subset_one_touching_box():
    parts = [box([-1, -1], [1, 1])] + [box([-1.5 - i, -1.2], [1.3 + i, 2]) for i in range(4)]
    keep = determining_subset(parts, math.pi)
    assert len(keep) <= 4 and 0 in keep


def test_determining_subset_duplicates(unit_square):
    assert determining_subset([unit_square] * 3, math.pi) == [0]


def test_determining_subset_tight_edges():
    parts = [box([-2, -10], [10, 10]), box([-10, -10], [2, 10]), box([-10, -2], [10, 10]),
             box([-10, -10], [10, 2])]
    keep = determining_subset(parts, math.pi)
    assert keep == [0, 1, 2]
    full = lowest_ellipsoid(intersect_polytopes(parts), math.pi).ellipsoid
    sub = lowest_ellipsoid(intersect_polytopes([parts[i] for i in keep]), math.pi).ellipsoid
    assert full.close_to(sub, 1e-6)


def test_lowest_d3_box():
    v = 4 * math.pi / 3
    res = lowest_ellipsoid(box([-2, -2, -2], [2, 2, 2]), v)
    assert res.ellipsoid.volume == pytest.approx(v, rel=1e-9)
    assert ellipsoid_in_polytope(res.ellipsoid, box([-2, -2, -2], [2, 2, 2]))
    assert res.height < 0
