import math

import numpy as np
import pytest

from helly_quant.errors import HypothesisViolated, PreconditionError
from helly_quant.geometry import Ellipsoid, ellipsoid_in_polytope, ellipsoid_in_support_body
from helly_quant.helly import ConvexFamily
from helly_quant.tverberg import (EllipsoidMultiset, TverbergCertificate, WeightedFamily,
                                  certify_partition, equal_parts_partition, equal_parts_sizes,
                                  greedy_weak_epsilon_net, inner_polygon, selection_lemma,
                                  set_partitions, stirling2, tverberg_number, tverberg_partition)

from .conftest import box

R1 = 1 / math.sqrt(math.pi)     # radius of a unit-area disc


def unit_area_discs(centers):
    return EllipsoidMultiset(tuple(Ellipsoid.ball(c, R1) for c in centers), 1.0)


def hexagon_plus_center(R=2.0):
    ang = 2 * np.pi * np.arange(6) / 6
    centers = [(R * math.cos(t), R * math.sin(t)) for t in ang] + [(0.0, 0.0)]
    return EllipsoidMultiset(tuple(Ellipsoid.ball(c, 1.0) for c in centers), math.pi)


def test_counts():
    assert tverberg_number(2, 2) == 7
    assert equal_parts_sizes(2) == (25, 5)
    assert stirling2(7, 2) == 63
    parts = list(set_partitions(5, 2))
    assert len(parts) == stirling2(5, 2) and parts[0][0][0] == 0


def test_identical_discs_certify_trivially():
    ms = unit_area_discs([(0, 0)] * 7)
    cert = tverberg_partition(ms, 2)
    assert cert.verify(ms)
    assert cert.witness.close_to(ms.items[0], 1e-5)
    assert cert.partitions_tried == 1


def test_hexagon_alternating_partition():
    ms = hexagon_plus_center()
    W, _ = certify_partition(ms, ((0, 2, 4, 6), (1, 3, 5)))
    assert W is not None and W.volume >= math.pi * (1 - 1e-6)
    cert = TverbergCertificate(((0, 2, 4, 6), (1, 3, 5)), W, 1e-3)
    assert cert.verify(ms)


def test_hexagon_search_certifies():
    ms = hexagon_plus_center()
    cert = tverberg_partition(ms, 2)
    assert cert.verify(ms)
    for p in cert.parts:
        assert ellipsoid_in_support_body(cert.witness, ms.hull(p))


def test_below_tverberg_number():
    with pytest.raises(PreconditionError):
        tverberg_partition(unit_area_discs([(0, 0)] * 6), 2)


def test_multiset_volume_check():
    with pytest.raises(PreconditionError):
        EllipsoidMultiset((Ellipsoid.ball([0, 0], 1.0), Ellipsoid.ball([0, 0], 2.0)), math.pi)


def test_equal_parts_identical():
    ms = unit_area_discs([(0, 0)] * 125)
    cert = equal_parts_partition(ms)
    assert sorted(len(p) for p in cert.parts) == [25] * 5
    assert cert.verify(ms)
    assert cert.witness.close_to(ms.items[0], 1e-5)


def test_equal_parts_tiny_cluster():
    rng = np.random.default_rng(0)
    ms = unit_area_discs(rng.uniform(-0.005, 0.005, (125, 2)))
    cert = equal_parts_partition(ms)
    assert [len(p) for p in cert.parts] == [25] * 5
    assert np.linalg.norm(cert.witness.center) < 0.01
    assert cert.verify(ms)


def test_equal_parts_wrong_size():
    with pytest.raises(PreconditionError):
        equal_parts_partition(unit_area_discs([(0, 0)] * 124))


def test_inner_polygon_inside_hull():
    ms = hexagon_plus_center()
    P = inner_polygon(ms.hull(range(7)))
    for x in P.vertices()[::50]:
        assert np.linalg.norm(x) <= 3.0 + 1e-9
    assert P.contains_point([2.9, 0.0])


def test_selection_identical():
    ms = unit_area_discs([(0, 0)] * 125)
    H, W, lam = selection_lemma(ms)
    assert lam == pytest.approx(1.0) and H


@pytest.mark.slow
def test_selection_clustered():
    rng = np.random.default_rng(1)
    ms = unit_area_discs(rng.uniform(-0.05, 0.05, (125, 2)))
    res = selection_lemma(ms)
    assert res.hyperedges and 0 < res.lambda_achieved <= 1
    for h in res.hyperedges:
        assert ellipsoid_in_support_body(res.witness, ms.hull(h))


def test_selection_too_small():
    with pytest.raises(PreconditionError):
        selection_lemma(unit_area_discs([(0, 0)] * 124))


def _wf(members, ellipsoids, weights):
    return WeightedFamily(ConvexFamily(tuple(members), 2),
                          EllipsoidMultiset(tuple(ellipsoids), ellipsoids[0].volume), weights)


def test_net_single_member():
    E = Ellipsoid.ball([0, 0], 1.0)
    res = greedy_weak_epsilon_net(_wf([box([-2, -2], [2, 2])], [E], [1.0]), 1.0)
    assert len(res.net) == 1 and res.net[0].close_to(E, 0)


def test_net_disjoint_supports():
    Es = [Ellipsoid.ball([5 * i, 0], 1.0) for i in range(3)]
    members = [box([5 * i - 1.5, -1.5], [5 * i + 1.5, 1.5]) for i in range(3)]
    res = greedy_weak_epsilon_net(_wf(members, Es, [1 / 3] * 3), 1 / 3)
    assert len(res.net) == 3 and res.assignment == [0, 1, 2]


@pytest.mark.parametrize("strategy", ["densest", "max_weight"])
def test_net_common_heavy_ellipsoid(strategy):
    star = Ellipsoid.ball([0, 0], 1.0)
    others = [Ellipsoid.ball([3 * math.cos(t), 3 * math.sin(t)], 1.0) for t in np.linspace(0, 6, 10)]
    members = [box(np.minimum(-1.1, E.center - 1.1), np.maximum(1.1, E.center + 1.1)) for E in others]
    w = [0.5] + [0.05] * 10
    res = greedy_weak_epsilon_net(_wf(members, [star] + others, w), 0.4, strategy=strategy)
    assert len(res.net) == 1 and res.net[0].close_to(star, 0)
    assert res.verify(ConvexFamily(tuple(members), 2))


def test_net_rejects_light_member():
    Es = [Ellipsoid.ball([0, 0], 1.0), Ellipsoid.ball([5, 0], 1.0)]
    members = [box([-1.5, -1.5], [1.5, 1.5]), box([3.5, -1.5], [6.5, 1.5])]
    with pytest.raises(HypothesisViolated):
        greedy_weak_epsilon_net(_wf(members, Es, [0.9, 0.1]), 0.5)


def test_weighted_family_json_round_trip():
    Es = [Ellipsoid.ball([0, 0], 1.0), Ellipsoid.ball([5, 0], 1.0)]
    members = [box([-1.5, -1.5], [1.5, 1.5]), box([3.5, -1.5], [6.5, 1.5])]
    wf = _wf(members, Es, [0.5, 0.5])
    back = WeightedFamily.from_json(wf.to_json())
    assert back.weights == wf.weights and back.ellipsoids.m == 2
    assert all(ellipsoid_in_polytope(E, P) for E, P in zip(back.ellipsoids.items, back.family.members))
