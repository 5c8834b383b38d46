import statistics

import numpy as np
import pytest

from crossflow.conflicts import ContractError, VehicleRecord
from crossflow.control import LEADER, VehicleState
from crossflow.presets import example1_arrivals, example1_scenario
from crossflow.scheduling import idfst_schedule
from crossflow.simulation import (
    Algorithm,
    CompletionRecord,
    Mode,
    SimConfig,
    SimulationTimeout,
    attd,
    evacuation_time,
    run,
    sample_arrivals,
    simulate_platoon,
)
from crossflow.scenario import load_scenario, dump_scenario

import yaml


def single_lane_scenario():
    doc = yaml.safe_load(dump_scenario(example1_scenario()))
    doc["movements"] = [m for m in doc["movements"] if m["id"] in (3,)]
    doc["crossing_pairs"] = []
    return load_scenario(yaml.safe_dump(doc))


class TestSampleArrivals:
    def test_deterministic(self, default_cfg):
        cfg = SimConfig(scenario=default_cfg, algorithm=Algorithm.DFST,
                        n_vehicles=30, mean_headway=3.0, seed=11)
        assert sample_arrivals(cfg) == sample_arrivals(cfg)

    def test_ids_follow_arrival_order(self, default_cfg):
        cfg = SimConfig(scenario=default_cfg, algorithm=Algorithm.DFST,
                        n_vehicles=40, mean_headway=2.0, seed=5)
        records = sample_arrivals(cfg)
        assert [r.id for r in records] == list(range(1, 41))
        times = [r.entry_time for r in records]
        assert times == sorted(times)

    def test_single_lane_mean_gap(self):
        scenario = single_lane_scenario()
        cfg = SimConfig(scenario=scenario, algorithm=Algorithm.DFST,
                        n_vehicles=10_000, mean_headway=3.0, seed=123)
        records = sample_arrivals(cfg)
        gaps = np.diff([0.0] + [r.entry_time for r in records])
        assert abs(float(np.mean(gaps)) - 3.0) < 0.1

    def test_truncation_to_one(self, default_cfg):
        cfg = SimConfig(scenario=default_cfg, algorithm=Algorithm.DFST,
                        n_vehicles=1, mean_headway=3.0, seed=2)
        records = sample_arrivals(cfg)
        assert len(records) == 1 and records[0].id == 1


class TestMetrics:
    def test_evacuation_time_is_max(self):
        records = [CompletionRecord(i, 0.0, t, 1) for i, t in enumerate([10.0, 20.0, 15.0], 1)]
        assert evacuation_time(records) == 20.0
        assert evacuation_time(records[:1]) == 10.0

    def test_evacuation_time_requires_records(self):
        with pytest.raises(ContractError):
            evacuation_time([])

    def test_attd_mean(self, default_cfg):
        free = default_cfg.free_flow_time()
        assert free == pytest.approx(36.0)
        records = [
            CompletionRecord(1, 0.0, free + 2.0, 1),
            CompletionRecord(2, 1.0, 1.0 + free + 4.0, 2),
        ]
        assert attd(records, default_cfg) == pytest.approx(3.0)

    def test_attd_free_flow_is_zero(self, default_cfg):
        records = [CompletionRecord(1, 5.0, 5.0 + 36.0, 1)]
        assert attd(records, default_cfg) == pytest.approx(0.0)


class TestRun:
    def test_determinism(self, default_cfg):
        cfg = SimConfig(scenario=default_cfg, algorithm=Algorithm.MCC_GREEDY,
                        n_vehicles=15, mean_headway=3.0, seed=7, mode=Mode.ONLINE,
                        collect_trace=True)
        a, b = run(cfg), run(cfg)
        assert a.metrics == b.metrics
        assert a.trace == b.trace

    def test_single_vehicle_cannot_beat_free_flow(self, default_cfg):
        cfg = SimConfig(scenario=default_cfg, algorithm=Algorithm.IDFST,
                        n_vehicles=1, mean_headway=3.0, seed=3)
        result = run(cfg)
        rec = result.metrics.records[0]
        assert rec.t_out - rec.t_in > default_cfg.free_flow_time()

    def test_per_lane_fifo(self, default_cfg):
        cfg = SimConfig(scenario=default_cfg, algorithm=Algorithm.MCC_GREEDY,
                        n_vehicles=40, mean_headway=1.0, seed=9, mode=Mode.ONLINE)
        result = run(cfg)
        out_by_vehicle = {r.vehicle: r.t_out for r in result.metrics.records}
        lanes = {}
        for rec in result.arrivals:
            lanes.setdefault(rec.movement, []).append(rec.id)
        for members in lanes.values():
            outs = [out_by_vehicle[v] for v in members]
            assert outs == sorted(outs)

    def test_batch_equals_online_for_tree_methods(self, default_cfg):
        # incremental placement sees the same conflict sets at this load
        for alg in (Algorithm.DFST, Algorithm.IDFST):
            res = {}
            for mode in (Mode.BATCH, Mode.ONLINE):
                cfg = SimConfig(scenario=default_cfg, algorithm=alg, n_vehicles=20,
                                mean_headway=3.0, seed=21, mode=mode)
                res[mode] = run(cfg)
            assert res[Mode.BATCH].depths == res[Mode.ONLINE].depths

    def test_timeout_carries_partial_results(self, default_cfg):
        cfg = SimConfig(scenario=default_cfg, algorithm=Algorithm.DFST,
                        n_vehicles=5, mean_headway=3.0, seed=1, horizon=1.0)
        with pytest.raises(SimulationTimeout) as err:
            run(cfg)
        assert err.value.records == []

    def test_brute_cap_guard(self, default_cfg):
        from crossflow.scheduling import SizeLimitError

        cfg = SimConfig(scenario=default_cfg, algorithm=Algorithm.MCC_BRUTE,
                        n_vehicles=20, mean_headway=3.0, seed=1)
        with pytest.raises(SizeLimitError):
            run(cfg)

    def test_mcc_brute_small_run(self, default_cfg):
        cfg = SimConfig(scenario=default_cfg, algorithm=Algorithm.MCC_BRUTE,
                        n_vehicles=8, mean_headway=3.0, seed=4, mode=Mode.ONLINE)
        result = run(cfg)
        assert result.metrics.d_all >= 1


class TestMatchedSeeds:
    def test_arrivals_independent_of_algorithm(self, default_cfg):
        lists = []
        for alg in Algorithm:
            cfg = SimConfig(scenario=default_cfg, algorithm=alg, n_vehicles=25,
                            mean_headway=3.0, seed=31)
            lists.append(tuple(sample_arrivals(cfg)))
        assert len(set(lists)) == 1

    def test_mean_evacuation_ordering(self, default_cfg):
        means = {}
        for alg in (Algorithm.DFST, Algorithm.IDFST, Algorithm.MCC_GREEDY):
            values = []
            for seed in range(1, 11):
                cfg = SimConfig(scenario=default_cfg, algorithm=alg, n_vehicles=50,
                                mean_headway=3.0, seed=seed, mode=Mode.ONLINE)
                values.append(run(cfg).metrics.evacuation_time)
            means[alg] = statistics.mean(values)
        # ties between the cover and improved-tree methods resolve within one
        # integration step
        step = default_cfg.dt
        assert means[Algorithm.MCC_GREEDY] <= means[Algorithm.IDFST] + step
        assert means[Algorithm.IDFST] <= means[Algorithm.DFST]

    def test_thirty_vehicle_case_study_shape(self, default_cfg):
        """Matched arrivals, thirty vehicles: the three methods land in the
        published ballpark and keep their order (the exact realization behind
        the published 14/11/10 triple is unavailable)."""
        depths = {}
        for alg in (Algorithm.DFST, Algorithm.IDFST, Algorithm.MCC_GREEDY):
            values = []
            for seed in range(1, 6):
                cfg = SimConfig(scenario=default_cfg, algorithm=alg, n_vehicles=30,
                                mean_headway=3.0, seed=seed)
                values.append(run(cfg).metrics.d_all)
            depths[alg] = statistics.mean(values)
        assert depths[Algorithm.MCC_GREEDY] <= depths[Algorithm.IDFST] < depths[Algorithm.DFST]
        assert 10 <= depths[Algorithm.DFST] <= 24
        assert 7 <= depths[Algorithm.IDFST] <= 16
        assert 6 <= depths[Algorithm.MCC_GREEDY] <= 15


class TestOnlineLocking:
    def test_locked_vehicle_keeps_depth(self, ex1_scenario):
        """A vehicle near the stopping line is excluded from rescheduling."""
        cfg = SimConfig(scenario=ex1_scenario, algorithm=Algorithm.MCC_GREEDY,
                        n_vehicles=7, mean_headway=3.0, seed=1, mode=Mode.ONLINE)
        # replay the worked example's arrival pattern through the online engine
        from crossflow.simulation import _Engine

        engine = _Engine(cfg)
        records = example1_arrivals()
        from crossflow.simulation import run as _run  # noqa: F401  (structure only)

        # drive manually: place the first six at entry states, then push one
        # deep into the zone and lock it by a seventh arrival
        from crossflow.conflicts import conflict_sets_for

        for rec in records[:6]:
            engine.records[rec.id] = rec
            earlier = [engine.records[i] for i in engine.in_zone_ids() if i < rec.id]
            engine.sets[rec.id] = conflict_sets_for(rec, earlier, ex1_scenario,
                                                    engine.live_remaining)
            engine.states[rec.id] = VehicleState(ex1_scenario.control_zone_length, 2.0)
            engine.reschedule_cover(Algorithm.MCC_GREEDY)
        # vehicle 1 is now 300 m from the line: uncatchable for newcomers
        engine.states[1] = VehicleState(300.0, 10.0)
        depth_before = engine.depth[1]
        rec = records[6]
        engine.records[rec.id] = rec
        earlier = [engine.records[i] for i in engine.in_zone_ids() if i < rec.id]
        engine.sets[rec.id] = conflict_sets_for(rec, earlier, ex1_scenario,
                                                engine.live_remaining)
        engine.states[rec.id] = VehicleState(ex1_scenario.control_zone_length, 2.0)
        engine.reschedule_cover(Algorithm.MCC_GREEDY)
        assert 1 in engine.locked
        assert engine.depth[1] == depth_before
        assert 1 in engine.sets[7].reachability


class TestSimulatePlatoon:
    def test_layers_cross_aligned(self, default_cfg, ex1_cdg):
        tree = idfst_schedule(ex1_cdg)
        leader_start = 700.0
        initial = {
            v: VehicleState(leader_start + default_cfg.desired_gap * d, default_cfg.platoon_speed)
            for v, d in tree.depth.items()
        }
        history = simulate_platoon(tree, default_cfg, initial, leader_start, until=200.0)
        crossings = history[-1].crossings
        assert set(crossings) == set(tree.depth)
        layers = {}
        for v, t in crossings.items():
            layers.setdefault(tree.depth[v], []).append(t)
        for d, times in layers.items():
            assert max(times) - min(times) < 1.0
        # consecutive layers are one service interval apart
        means = [statistics.mean(layers[d]) for d in sorted(layers)]
        for a, b in zip(means, means[1:]):
            assert b - a == pytest.approx(3.0, abs=0.2)

    def test_safety_gap_near_line_with_binding_leader(self, default_cfg):
        """Conflicting vehicles near the line stay half a design gap apart.

        The leader starts far enough back that every slot is reachable and
        vehicles have settled before their layer crosses; in that regime the
        schedule's layer spacing is realized physically.
        """
        cfg = SimConfig(scenario=default_cfg, algorithm=Algorithm.MCC_GREEDY,
                        n_vehicles=24, mean_headway=1.0, seed=13, mode=Mode.ONLINE,
                        leader_start=600.0,
                        collect_trace=True)
        result = run(cfg)
        sets_by_id = {}
        from crossflow.conflicts import build_conflict_sets

        for cs in build_conflict_sets(result.arrivals, default_cfg):
            sets_by_id[cs.vehicle] = cs

        def conflicting(a, b):
            lo, hi = (a, b) if a < b else (b, a)
            cs = sets_by_id[hi]
            return lo in (cs.crossing | cs.diverging | cs.converging | cs.reachability)

        by_step = {}
        for row in result.trace:
            by_step.setdefault(row.step, []).append(row)
        gap = default_cfg.desired_gap
        for rows in by_step.values():
            near = [r for r in rows if 0.0 <= r.p <= gap]
            for i in range(len(near)):
                for j in range(i + 1, len(near)):
                    a, b = near[i], near[j]
                    if a.depth == b.depth or not conflicting(a.vehicle, b.vehicle):
                        continue
                    assert abs(a.p - b.p) >= 0.5 * gap
