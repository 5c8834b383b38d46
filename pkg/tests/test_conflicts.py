import pytest
from hypothesis import given, settings, strategies as st

from crossflow.conflicts import (
    ConflictSets,
    ContractError,
    VehicleRecord,
    build_cdg,
    build_conflict_sets,
    build_cug,
    nominal_remaining,
    reachability_conflict,
    reachability_threshold,
)

from .conftest import make_sets
from .instances import random_instance


def test_reachability_examples(default_cfg):
    # zero distance: the predecessor is at the stopping line
    assert reachability_conflict(0.0, default_cfg) is True
    # 300 m at platoon speed takes 30 s; a fresh entrant needs 38.5 s
    assert reachability_conflict(300.0, default_cfg) is True
    # 400 m takes 40 s, which a fresh entrant can beat
    assert reachability_conflict(400.0, default_cfg) is False


def test_reachability_threshold_value(default_cfg):
    # 10 * (900/25 + 25/10) = 385 m with the default parameters
    assert reachability_threshold(default_cfg) == pytest.approx(385.0)


@given(st.floats(min_value=0, max_value=2000))
def test_reachability_monotone(distance):
    cfg = __import__("crossflow.scenario", fromlist=["default_intersection"]).default_intersection()
    threshold = reachability_threshold(cfg)
    assert reachability_conflict(distance, cfg) is (distance < threshold)


def test_reachability_rejects_negative_distance(default_cfg):
    with pytest.raises(ContractError):
        reachability_conflict(-1.0, default_cfg)


def test_example_conflict_sets(ex1_scenario, ex1_records, ex1_sets):
    assert build_conflict_sets(ex1_records, ex1_scenario) == ex1_sets


def test_single_vehicle_sets(ex1_scenario):
    records = [VehicleRecord(1, 1, 0.0, 2.0)]
    (cs,) = build_conflict_sets(records, ex1_scenario)
    assert cs.crossing == frozenset()
    assert cs.diverging == frozenset({0})
    assert cs.converging == frozenset()
    assert cs.reachability == frozenset()


def test_unsorted_records_rejected(ex1_scenario):
    records = [VehicleRecord(2, 1, 0.0, 2.0), VehicleRecord(1, 2, 0.1, 2.0)]
    with pytest.raises(ContractError):
        build_conflict_sets(records, ex1_scenario)


def test_conflict_sets_validate_membership():
    with pytest.raises(ContractError):
        ConflictSets(3, frozenset({4}), frozenset({0}), frozenset(), frozenset())
    with pytest.raises(ContractError):
        ConflictSets(3, frozenset({2}), frozenset({2}), frozenset(), frozenset())
    with pytest.raises(ContractError):
        ConflictSets(3, frozenset({0}), frozenset(), frozenset(), frozenset())


def test_departed_predecessor_ignored(ex1_scenario):
    # vehicle 2 enters long after vehicle 1 left the zone on the same lane
    records = [VehicleRecord(1, 3, 0.0, 2.0), VehicleRecord(2, 3, 500.0, 2.0)]
    sets = build_conflict_sets(records, ex1_scenario)
    assert sets[1].diverging == frozenset({0})


def test_example_cdg_edges(ex1_cdg):
    assert ex1_cdg.lane_edges == frozenset(
        {(0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (0, 7), (5, 6)}
    )
    assert ex1_cdg.reach_edges == frozenset({(1, 7), (2, 7)})
    assert ex1_cdg.crossing_edges == frozenset(
        {(2, 3), (2, 4), (3, 4), (2, 5), (4, 5), (2, 6), (4, 6)}
    )
    assert ex1_cdg.converging_edges == frozenset({(1, 4), (5, 7), (6, 7)})
    assert ex1_cdg.unidirectional & ex1_cdg.bidirectional == frozenset()


def test_cdg_trivial_cases():
    assert build_cdg([]).n == 0
    single = build_cdg(make_sets([(1, (), (0,), (), ())]))
    assert single.lane_edges == frozenset({(0, 1)})
    assert single.bidirectional == frozenset()


def test_cdg_rejects_bad_ordering():
    with pytest.raises(ContractError):
        make_sets([(1, (2,), (0,), (), ())])


def test_example_cug_edges(ex1_cug):
    assert ex1_cug.edges == frozenset(
        {(1, 2), (1, 3), (1, 5), (1, 6), (3, 5), (3, 6), (3, 7), (4, 7)}
    )


def test_cug_complement_extremes():
    # complete conflict graph: empty coexistence
    rows = [(1, (), (0,), (), ())]
    for j in range(2, 5):
        rows.append((j, tuple(range(1, j)), (0,), (), ()))
    cdg = build_cdg(make_sets(rows))
    assert build_cug(cdg).edges == frozenset()
    # only leader edges: complete coexistence
    rows = [(j, (), (0,), (), ()) for j in range(1, 5)]
    cdg = build_cdg(make_sets(rows))
    assert len(build_cug(cdg).edges) == 6


def test_cug_excludes_whole_lane_chain():
    # three vehicles on one lane: only consecutive pairs carry lane edges,
    # but none of the three may coexist
    rows = [(1, (), (0,), (), ()), (2, (), (1,), (), ()), (3, (), (2,), (), ())]
    cdg = build_cdg(make_sets(rows))
    cug = build_cug(cdg)
    assert not cug.adjacent(1, 3)
    assert not cug.adjacent(1, 2)
    assert cdg.lane_chains() == [[1, 2, 3]]


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_complement_property(seed):
    """Exactly one of conflict-or-same-lane and coexistence per pair."""
    _, _, cdg = random_instance(seed)
    cug = build_cug(cdg)
    chain_pairs = set()
    for chain in cdg.lane_chains():
        for a in chain:
            for b in chain:
                if a < b:
                    chain_pairs.add((a, b))
    for i in range(1, cdg.n + 1):
        for j in range(i + 1, cdg.n + 1):
            connected = cdg.connected(i, j) or (i, j) in chain_pairs
            assert connected != cug.adjacent(i, j)


@settings(max_examples=40, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_eq6_ordering_and_lane_chain(seed):
    records, sets, cdg = random_instance(seed)
    for cs in sets:
        members = cs.crossing | cs.diverging | cs.converging | cs.reachability
        assert all(m < cs.vehicle for m in members)
    # lane edges follow arrival order along each movement
    by_movement = {}
    for rec in records:
        by_movement.setdefault(rec.movement, []).append(rec.id)
    for chain in cdg.lane_chains():
        assert chain == sorted(chain)


def test_nominal_remaining_profile(ex1_scenario):
    records = [VehicleRecord(1, 1, 0.0, 2.0)]
    remaining = nominal_remaining(records, ex1_scenario)
    assert remaining(1, 0.0) == pytest.approx(900.0)
    # ramp from 2 to 10 m/s at 5 m/s^2 covers 9.6 m in 1.6 s
    assert remaining(1, 1.6) == pytest.approx(890.4)
    assert remaining(1, 11.6) == pytest.approx(790.4)
