import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from moarchive.archivers import (
    KINDS,
    Archiver,
    ArchiverConfig,
    MoeadState,
    a_dom_update,
    box_index,
    crowding_distance,
    eps_box_update,
    indicator_mu1_update,
    mga_box,
    mga_level,
    mga_update,
    moead_update,
    nondom_sorting,
    nsga2_update,
    pbi,
    run,
    tch,
    unbounded_update,
    weak_compliant_update,
)
from moarchive.core import Batch, UsageError, dominates, minimal_set, same_set
from moarchive.indicators import IndicatorSpec
from moarchive.sequences import order_and_batch, singletons

from strategies import point_sets

HV44 = IndicatorSpec("hypervolume", reference_point=(4.0, 4.0))


def configs(ground, capacity=3, seed=0):
    """One config of every kind (and every variant worth telling apart)."""
    hv = IndicatorSpec.for_ground_set("hypervolume", ground)
    return [
        ArchiverConfig("unbounded"),
        ArchiverConfig("a_dom", capacity),
        ArchiverConfig("eps_box", epsilon=0.5, eps_mode="pareto"),
        ArchiverConfig("eps_box", epsilon=0.5, eps_mode="approx"),
        ArchiverConfig("mga", capacity, rng_seed=seed),
        ArchiverConfig("nsga2", capacity),
        ArchiverConfig("nsga2", capacity, batch_native=True),
        ArchiverConfig("moead", capacity, scalarizer="tch"),
        ArchiverConfig("moead", capacity, scalarizer="pbi"),
        ArchiverConfig("indicator_mu1", capacity, indicator=hv, rng_seed=seed),
        ArchiverConfig("indicator_mu1", capacity, indicator=hv, ref_policy="adaptive", tie_policy="uniform_random",
                       rng_seed=seed),
        ArchiverConfig("weak_compliant", capacity, indicator=IndicatorSpec.for_ground_set("igd_plus", ground)),
    ]


# -- generic contract ---------------------------------------------------------


@pytest.mark.parametrize("kind", KINDS)
def test_first_solution_is_accepted(kind):
    ground = [(1.0, 1.0)]
    cfg = next(c for c in configs(ground) if c.kind == kind)
    arch = Archiver(cfg)
    arch.fold(Batch(1, [(1, 1)]))
    assert arch.members == [(1.0, 1.0)]


def test_weak_compliant_duplicate_rejected():
    spec = IndicatorSpec.for_ground_set("epsilon_additive", [(1.0, 1.0)])
    assert weak_compliant_update([(1.0, 1.0)], (1.0, 1.0), 2, spec) == [(1.0, 1.0)]


def test_a_dom_batch_leaves_full_archive_unchanged():
    arch = Archiver(ArchiverConfig("a_dom", 2))
    arch.fold([(0, 2), (2, 0)])
    arch.fold(Batch(2, [(1, 1), (0, 2)]))
    assert arch.members == [(0.0, 2.0), (2.0, 0.0)]


def test_config_validation():
    with pytest.raises(UsageError):
        ArchiverConfig("nsga2")
    with pytest.raises(UsageError):
        ArchiverConfig("weak_compliant", 2)
    with pytest.raises(UsageError):
        ArchiverConfig("bogus", 2)
    with pytest.raises(UsageError):
        Archiver(ArchiverConfig("eps_box", 3)).update((1, 1))


def test_dimension_mismatch():
    arch = Archiver(ArchiverConfig("unbounded"))
    arch.update((1, 2))
    with pytest.raises(UsageError):
        arch.update((1, 2, 3))


# -- unbounded and a_dom ----------------------------------------------------


def test_unbounded_examples():
    assert unbounded_update([], (3, 3)) == [(3, 3)]
    assert unbounded_update([(3, 3)], (1, 1)) == [(1, 1)]
    assert same_set(unbounded_update([(1, 3), (3, 1)], (2, 2)), [(1, 3), (3, 1), (2, 2)])


def test_a_dom_examples():
    full = [(4, 5), (5, 4)]
    assert a_dom_update(full, (1, 8), 2) == full
    assert a_dom_update(full, (3, 3), 2) == [(3, 3)]
    assert same_set(a_dom_update([(3, 3)], (2, 9), 2), [(3, 3), (2, 9)])


# -- epsilon boxes ----------------------------------------------------------


def test_box_index():
    assert box_index((1, 2), 1.0) == (0, 1)
    assert box_index((1.1**3, 1.0), 0.1) == (3, 0)
    with pytest.raises(UsageError):
        box_index((0, 1), 1.0)


def test_eps_box_examples():
    assert eps_box_update([(1, 2)], (1.4, 2.9), 1.0, "pareto") == [(1, 2)]
    assert eps_box_update([(4, 4)], (1, 1), 1.0, "pareto") == [(1, 1)]


def test_eps_pareto_replaces_within_box():
    assert eps_box_update([(1.5, 2.5)], (1.2, 2.1), 1.0, "pareto") == [(1.2, 2.1)]
    # the approx variant keeps the first occupant of a box
    assert eps_box_update([(1.5, 2.5)], (1.2, 2.1), 1.0, "approx") == [(1.5, 2.5)]


# -- MGA ----------------------------------------------------------------------


def level_scan_oracle(points):
    """Scan every level in a wide window for members whose box is weakly dominated."""
    for b in range(-30, 31):
        boxes = [mga_box(p, b) for p in points]
        hit = [i for i in range(len(points))
               if any(j != i and points[j] != points[i] and all(x <= y for x, y in zip(boxes[j], boxes[i]))
                      for j in range(len(points)))]
        if hit:
            return b, hit
    return None, []


def test_mga_rejects_when_newcomer_is_box_dominated():
    assert mga_level([(1, 3), (3, 1), (2, 2)]) == 1
    assert mga_update([(1, 3), (3, 1)], (2, 2), 2, random.Random(0)) == [(1, 3), (3, 1)]


def test_mga_room_available():
    assert same_set(mga_update([(5, 5)], (1, 9), 2, random.Random(0)), [(5, 5), (1, 9)])


def test_mga_extreme_newcomer_follows_level_scan():
    merged = [(1.0, 3.0), (3.0, 1.0), (0.0, 4.0)]
    beta, hit = level_scan_oracle(merged)
    assert (beta, hit) == (1, [2])
    assert mga_level(merged) == beta
    # the newcomer is the only box-dominated member, so it is rejected
    assert mga_update([(1, 3), (3, 1)], (0, 4), 2, random.Random(0)) == [(1, 3), (3, 1)]


@settings(max_examples=200)
@given(point_sets(d=2, hi=20, min_size=2, max_size=7), point_sets(d=3, hi=20, min_size=2, max_size=6))
def test_mga_level_matches_wide_scan(p2, p3):
    for pts in (p2, p3):
        pts = list(dict.fromkeys(minimal_set(pts)))
        if len(pts) < 2:
            continue
        beta, _ = level_scan_oracle(pts)
        assert mga_level(pts) == beta


# -- NSGA-II ------------------------------------------------------------------


@pytest.mark.parametrize("points, expected", [
    ([(1, 1), (2, 2), (3, 3)], [[(1, 1)], [(2, 2)], [(3, 3)]]),
    ([(0, 1), (1, 0)], [[(0, 1), (1, 0)]]),
    ([(0, 2), (2, 0), (1, 2), (3, 3)], [[(0, 2), (2, 0)], [(1, 2)], [(3, 3)]]),
])
def test_nondom_sorting(points, expected):
    assert nondom_sorting(points) == expected


def test_crowding_distance():
    assert crowding_distance([(0, 1), (1, 0)]) == [math.inf, math.inf]
    cd = crowding_distance([(0, 10), (2, 7), (6, 2), (10, 0)])
    assert cd[0] == cd[3] == math.inf
    assert cd[1] == pytest.approx(1.4) and cd[2] == pytest.approx(1.5)
    assert crowding_distance([(0, 0), (0, 0)]) == [math.inf, math.inf]


def test_nsga2_crowding_sequence():
    a = [(0, 10), (2, 7), (10, 0)]
    b = nsga2_update(a, (6, 2), 3)
    assert same_set(b, [(0, 10), (6, 2), (10, 0)])
    c = nsga2_update(b, (4, 7.5), 3)
    assert same_set(c, [(0, 10), (4, 7.5), (10, 0)])


def test_nsga2_drops_dominated_member():
    assert nsga2_update([(5, 5)], (1, 1), 3) == [(1, 1)]


def test_nsga2_batch_native_differs_from_sequential():
    batch = Batch(1, [(0, 10), (2, 7), (10, 0), (6, 2), (4, 7.5)])
    seq = run(ArchiverConfig("nsga2", 3), [batch]).snapshots[-1]
    nat = run(ArchiverConfig("nsga2", 3, batch_native=True), [batch]).snapshots[-1]
    assert len(seq) == len(nat) == 3
    assert same_set(nat, [(0, 10), (6, 2), (10, 0)])
    assert same_set(seq, [(0, 10), (4, 7.5), (10, 0)])


# -- MOEA/D -------------------------------------------------------------------


def test_tch_examples():
    assert tch((3, 1), (0.5, 0.5), (0, 0)) == 1.5
    assert tch((2, 2), (0.5, 0.5), (0, 0)) == 1
    assert tch((3, 1), (0, 1), (0, 0)) == 1
    assert tch((2, 2), (0, 1), (0, 0)) == 2


def test_pbi_on_and_off_the_weight_line():
    assert pbi((1, 1), (0.5, 0.5), (0, 0)) == pytest.approx(math.sqrt(2))
    # one unit off the line costs theta times the perpendicular distance
    assert pbi((1, 0), (0.5, 0.5), (0, 0), theta=5) == pytest.approx(math.sqrt(0.5) * 6)


def test_moead_replacement_and_ideal():
    st_ = MoeadState(((0.5, 0.5), (0.0, 1.0)), [(2.0, 2.0), (2.0, 2.0)], (0.0, 0.0))
    nxt = moead_update(st_, (3.0, 1.0), "tch")
    assert nxt.assoc == [(2.0, 2.0), (3.0, 1.0)]
    moved = moead_update(nxt, (-1.0, 5.0), "tch")
    assert moved.ideal == (-1.0, 0.0)


def test_moead_first_solution_fills_all_slots():
    arch = Archiver(ArchiverConfig("moead", 4), dimension=2)
    arch.update((1, 1))
    assert arch.moead.assoc == [(1.0, 1.0)] * 4
    assert arch.members == [(1.0, 1.0)]


def test_moead_frozen_ideal_is_kept():
    arch = Archiver(ArchiverConfig("moead", 2, ideal=(0.0, 0.0)))
    arch.update((3, 3))
    assert arch.moead.ideal == (0.0, 0.0)


# -- indicator based ----------------------------------------------------------


def test_indicator_mu1_tie_rejects_newcomer():
    rng = random.Random(0)
    assert indicator_mu1_update([(1, 3), (3, 1)], (2, 2), 2, HV44, rng) == [(1, 3), (3, 1)]


def test_indicator_mu1_dominating_newcomer():
    for seed in range(6):
        out = indicator_mu1_update([(1.0, 3.0), (3.0, 1.0)], (0.0, 0.0), 2, HV44, random.Random(seed))
        assert len(out) == 2 and (0.0, 0.0) in out
        assert {(1.0, 3.0), (3.0, 1.0)} & set(out)


def test_indicator_mu1_single_slot_duplicate():
    assert indicator_mu1_update([(1, 1)], (1, 1), 1, HV44, random.Random(0)) == [(1, 1)]


def test_weak_compliant_examples():
    igd = IndicatorSpec("igd_plus", reference_set=((0.0, 2.0), (1.0, 1.0), (2.0, 0.0)))
    assert weak_compliant_update([(0, 2), (2, 0)], (1, 1), 2, igd) == [(0, 2), (2, 0)]
    assert weak_compliant_update([(0, 2)], (2, 0), 2, igd) == [(0, 2), (2, 0)]
    assert weak_compliant_update([(0, 2), (2, 0)], (0, 2), 2, igd) == [(0, 2), (2, 0)]


def test_weak_compliant_strict_improvement_swaps():
    igd = IndicatorSpec("igd_plus", reference_set=((0.0, 2.0), (1.0, 1.0), (2.0, 0.0)))
    assert same_set(weak_compliant_update([(0, 2), (3, 0)], (1, 1), 2, igd), [(0, 2), (1, 1)])


# -- invariants over random sequences ----------------------------------------


sequences = st.tuples(point_sets(d=2, lo=1, hi=8, max_size=14), st.integers(1, 5), st.integers(0, 3))
sequences3 = st.tuples(point_sets(d=3, lo=1, hi=6, max_size=10), st.integers(1, 4), st.integers(0, 3))


@settings(max_examples=60, deadline=None)
@given(st.one_of(sequences, sequences3))
def test_capacity_safety(case):
    points, cap, seed = case
    batches = singletons(points)
    for cfg in configs(points, cap, seed):
        traj = run(cfg, batches)
        if cfg.kind in ("unbounded", "eps_box"):
            continue
        bound = cfg.capacity
        assert all(len(s) <= bound for s in traj.snapshots), cfg


@settings(max_examples=60, deadline=None)
@given(sequences)
def test_weak_compliant_archive_is_nondominated_and_distinct(case):
    points, cap, _ = case
    for kind in ("epsilon_additive", "igd_plus", "r2"):
        cfg = ArchiverConfig("weak_compliant", cap, indicator=IndicatorSpec.for_ground_set(kind, points))
        for snap in run(cfg, singletons(points)).snapshots[1:]:
            assert len(set(snap)) == len(snap)
            assert not any(dominates(a, b) for a in snap for b in snap)


@settings(max_examples=40, deadline=None)
@given(st.one_of(sequences, sequences3))
def test_runs_are_deterministic(case):
    points, cap, seed = case
    batches = order_and_batch(points, "shuffle", batch_size=2)
    for cfg in configs(points, cap, seed):
        assert run(cfg, batches).snapshots == run(cfg, batches).snapshots


def test_trajectory_meta_records_seed():
    traj = run(ArchiverConfig("mga", 2, rng_seed=42), singletons([(1, 2), (2, 1), (0, 3)]))
    assert traj.meta["seed"] == 42
