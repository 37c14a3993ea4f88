import math
import random

import pytest
from hypothesis import given

from moarchive.core import UsageError, weakly_dominates
from moarchive.indicators import (
    IndicatorSpec,
    epsilon_additive,
    hv_contribution,
    hypervolume,
    hypervolume_mc,
    igd_plus,
    r2,
    uniform_weights,
)
from moarchive.sequences import FrontSpec, sample_ground_set

from oracles import compliance_probe, eps_bruteforce, hv_inclusion_exclusion, igd_plus_bruteforce
from strategies import point_sets, vectors


@pytest.mark.parametrize("points, ref, expected", [
    ([(1, 1)], (3, 3), 4),
    ([(1, 2), (2, 1)], (3, 3), 3),
    ([(1, 3), (3, 1), (2, 2)], (4, 4), 6),
])
def test_hypervolume_hand_values(points, ref, expected):
    assert hypervolume(points, ref) == expected
    assert hv_inclusion_exclusion(points, ref) == expected


def test_hypervolume_clamps_points_outside_ref():
    assert hypervolume([(5, 0), (3, 3)], (3, 3)) == 0
    assert hypervolume([(1, 1), (5, 0)], (3, 3)) == 4


@given(point_sets(d=2, max_size=7))
def test_hypervolume_2d_matches_inclusion_exclusion(points):
    assert hypervolume(points, (7, 7)) == pytest.approx(hv_inclusion_exclusion(points, (7, 7)), abs=1e-9)


@given(point_sets(d=3, max_size=6))
def test_hypervolume_3d_matches_inclusion_exclusion(points):
    assert hypervolume(points, (7, 7, 7)) == pytest.approx(hv_inclusion_exclusion(points, (7, 7, 7)), abs=1e-9)


@given(point_sets(d=4, hi=3, max_size=5))
def test_hypervolume_4d_matches_inclusion_exclusion(points):
    ref = (4, 4, 4, 4)
    assert hypervolume(points, ref) == pytest.approx(hv_inclusion_exclusion(points, ref), abs=1e-9)


def test_hypervolume_monte_carlo_agrees():
    pts = sample_ground_set(FrontSpec("concave", 3, 12, seed=5, lattice=False))
    ref = (11.0, 11.0, 11.0)
    exact = hypervolume(pts, ref)
    assert hypervolume_mc(pts, ref, samples=200_000, seed=1) == pytest.approx(exact, rel=0.02)


@pytest.mark.parametrize("points, a, ref, expected", [
    ([(1, 2), (2, 1)], (1, 2), (3, 3), 1),
    ([(1, 1)], (1, 1), (3, 3), 4),
    ([(1, 3), (3, 1), (2, 2)], (2, 2), (4, 4), 1),
])
def test_hv_contribution(points, a, ref, expected):
    assert hv_contribution(points, a, ref) == expected


def test_hv_contribution_needs_member():
    with pytest.raises(UsageError):
        hv_contribution([(1, 1)], (2, 2), (3, 3))


@given(point_sets(d=2, max_size=6), vectors())
def test_hv_contribution_zero_iff_covered(points, extra):
    points = points + [extra]
    ref = (5.0, 5.0)
    c = hv_contribution(points, extra, ref)
    assert c >= 0
    others = list(points)
    others.remove(extra)
    covered = any(weakly_dominates(p, extra) for p in others)
    outside = not all(x < r for x, r in zip(extra, ref))
    assert (c == 0) == (covered or outside)


@pytest.mark.parametrize("points, reference, expected", [
    ([(0, 1), (1, 0)], [(0, 1), (1, 0)], 0),
    ([(1, 1)], [(0, 0)], 1),
    ([(0, 2), (2, 0)], [(0, 0), (1, 1)], 2),
])
def test_epsilon_additive(points, reference, expected):
    assert epsilon_additive(points, reference) == expected
    assert eps_bruteforce(points, reference) == expected


@pytest.mark.parametrize("points, reference, expected", [
    ([(0, 1), (1, 0)], [(0, 1), (1, 0)], 0),
    ([(1, 1)], [(0, 0)], math.sqrt(2)),
    ([(0, 2), (2, 0)], [(0, 2), (1, 1), (2, 0)], 1 / 3),
])
def test_igd_plus(points, reference, expected):
    assert igd_plus(points, reference) == pytest.approx(expected, abs=1e-15)


@given(point_sets(d=3), point_sets(d=3))
def test_eps_and_igd_match_bruteforce(points, reference):
    assert epsilon_additive(points, reference) == eps_bruteforce(points, reference)
    assert igd_plus(points, reference) == pytest.approx(igd_plus_bruteforce(points, reference))


@pytest.mark.parametrize("points, weights, z, expected", [
    ([(0, 0)], [(0.5, 0.5)], (0, 0), 0),
    ([(2, 2)], [(0.5, 0.5)], (0, 0), 1),
    ([(1, 3), (3, 1)], [(1, 0), (0, 1)], (0, 0), 1),
])
def test_r2(points, weights, z, expected):
    assert r2(points, weights, z) == expected


def test_r2_requires_utopian_below_points():
    with pytest.raises(UsageError):
        r2([(0, 0)], [(0.5, 0.5)], (1, 1))


@given(point_sets(d=2), vectors())
def test_adding_a_covered_point(points, base):
    ground = points + [base]
    extra = tuple(x + 1 for x in base)
    before = [*points, base]
    after = before + [extra]
    for kind in ("epsilon_additive", "igd_plus", "r2"):
        spec = IndicatorSpec.for_ground_set(kind, ground + [extra])
        assert spec.value(after) == spec.value(before)
    hv = IndicatorSpec.for_ground_set("hypervolume", ground + [extra])
    assert hv.value(after) >= hv.value(before)


def test_weak_compliance_probe():
    assert compliance_probe(n=400, seed=3) == []


def test_uniform_weights():
    w = uniform_weights(11, 2)
    assert w[0] == (0.0, 1.0) and w[-1] == (1.0, 0.0) and len(w) == 11
    w3 = uniform_weights(15, 3)
    assert len(set(w3)) == 15
    assert all(math.isclose(sum(v), 1.0) for v in w3)
    assert uniform_weights(1, 3) == [(1 / 3, 1 / 3, 1 / 3)]


def test_spec_round_trip_and_orientation():
    ground = [(1.0, 4.0), (2.0, 2.0), (4.0, 1.0), (5.0, 5.0)]
    for kind in ("hypervolume", "epsilon_additive", "igd_plus", "r2"):
        spec = IndicatorSpec.for_ground_set(kind, ground)
        assert IndicatorSpec.from_json(spec.to_json()) == spec
        v = spec.value(ground[:2])
        assert spec.loss(ground[:2]) == (-v if kind == "hypervolume" else v)
    hv = IndicatorSpec.for_ground_set("hypervolume", ground)
    assert hv.reference_point == (6.0, 6.0)


def test_spec_validation():
    with pytest.raises(UsageError):
        IndicatorSpec("hypervolume")
    with pytest.raises(UsageError):
        IndicatorSpec("r2", weights=((0.7, 0.7),), utopian=(0.0, 0.0))
    with pytest.raises(UsageError):
        IndicatorSpec("spread")


def test_mc_is_seeded():
    rng = random.Random(0)
    pts = [(rng.random(), rng.random(), rng.random()) for _ in range(5)]
    assert hypervolume_mc(pts, (1, 1, 1), samples=10_000, seed=4) == hypervolume_mc(pts, (1, 1, 1), samples=10_000, seed=4)
