"""Arrival generation, schedule orchestration and closed-loop simulation.

Batch mode analyzes the whole arrival list up front (conflicts from entry
conditions under the nominal approach profile), computes one schedule and
then runs the closed loop.  Online mode schedules at every arrival event:
the spanning-tree methods place the new vehicle incrementally, the clique
cover methods recompute the cover over all vehicles not yet locked near the
stopping line.

The virtual leader starts ``leader_start`` meters from the stopping line at
t = 0 and advances at the platoon design speed; a vehicle's slot sits one
desired gap behind the leader per layer.
"""

from __future__ import annotations

from collections import namedtuple
from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np

from .conflicts import (
    CoexistenceGraph,
    ConflictSets,
    ContractError,
    VehicleRecord,
    build_cdg,
    build_conflict_sets,
    build_cug,
    conflict_sets_for,
    reachability_conflict,
)
from .control import (
    LEADER,
    ControllerGains,
    VehicleState,
    control_input,
    step_dynamics,
)
from .scenario import IntersectionConfig
from .scheduling import (
    SpanningTree,
    dfst_schedule,
    find_opt_parent,
    idfst_schedule,
    mcc_greedy,
    minimum_clique_covers,
    order_layers,
    ordering_objective,
    schedule_cover_tree,
)


class Algorithm(str, Enum):
    DFST = "dfst"
    IDFST = "idfst"
    MCC_GREEDY = "mcc-greedy"
    MCC_BRUTE = "mcc-brute"


class Mode(str, Enum):
    BATCH = "batch"
    ONLINE = "online"


class SimulationTimeout(RuntimeError):
    """Simulated horizon exceeded; carries the partial results."""

    def __init__(self, message: str, trace: list, records: list):
        super().__init__(message)
        self.trace = trace
        self.records = records


@dataclass(frozen=True)
class SimConfig:
    scenario: IntersectionConfig
    algorithm: Algorithm
    n_vehicles: int
    mean_headway: float  # mean arrival gap per lane, seconds
    seed: int
    mode: Mode = Mode.BATCH
    dt: float | None = None  # defaults to the scenario step
    initial_speed: float | None = None  # defaults to the scenario entry speed
    leader_start: float = 0.0  # leader's distance to the line at t = 0
    horizon: float = 3600.0
    gains: ControllerGains = ControllerGains()
    brute_cap: int = 12
    collect_trace: bool = False

    def __post_init__(self):
        if self.n_vehicles < 1:
            raise ContractError("n_vehicles must be at least 1")
        if self.mean_headway <= 0:
            raise ContractError("mean_headway must be positive")
        if (self.dt or self.scenario.dt) <= 0:
            raise ContractError("dt must be positive")

    @property
    def step(self) -> float:
        return self.dt if self.dt is not None else self.scenario.dt

    @property
    def entry_speed(self) -> float:
        return self.initial_speed if self.initial_speed is not None else self.scenario.initial_speed


@dataclass(frozen=True)
class CompletionRecord:
    vehicle: int
    t_in: float
    t_out: float
    depth: int


@dataclass
class Metrics:
    evacuation_time: float
    attd: float
    d_all: int
    records: list[CompletionRecord]


TraceRow = namedtuple("TraceRow", "step vehicle p v u depth")


def sample_arrivals(cfg: SimConfig) -> list[VehicleRecord]:
    """Poisson arrivals per lane, merged and truncated to n vehicles.

    Each approach lane draws independent exponential gaps with the configured
    mean; simultaneous arrivals break ties by lane enumeration order.  The
    same seed always reproduces the same list.
    """
    rng = np.random.default_rng(cfg.seed)
    lanes = sorted(cfg.scenario.movement_ids)
    candidates: list[tuple[float, int, int]] = []
    for order, movement in enumerate(lanes):
        gaps = rng.exponential(scale=cfg.mean_headway, size=cfg.n_vehicles)
        t = 0.0
        for gap in gaps:
            t += gap
            candidates.append((t, order, movement))
    candidates.sort(key=lambda c: (c[0], c[1]))
    records = []
    for idx, (t, _, movement) in enumerate(candidates[: cfg.n_vehicles], start=1):
        records.append(VehicleRecord(id=idx, movement=movement, entry_time=t,
                                     entry_speed=cfg.entry_speed))
    return records


def evacuation_time(records: Sequence[CompletionRecord]) -> float:
    """Crossing time of the last vehicle."""
    if not records:
        raise ContractError("evacuation_time needs at least one record")
    return max(r.t_out for r in records)


def attd(records: Sequence[CompletionRecord], cfg: IntersectionConfig) -> float:
    """Average travel time delay against free flow at the speed limit."""
    if not records:
        raise ContractError("attd needs at least one record")
    free = cfg.free_flow_time()
    return sum(r.t_out - r.t_in - free for r in records) / len(records)


def schedule_from_graph(cdg, algorithm: Algorithm, brute_cap: int = 12) -> SpanningTree:
    if algorithm is Algorithm.DFST:
        return dfst_schedule(cdg)
    if algorithm is Algorithm.IDFST:
        return idfst_schedule(cdg)
    cug = build_cug(cdg)
    return schedule_cover_tree(cug, cdg, exact=algorithm is Algorithm.MCC_BRUTE,
                               cap=brute_cap)


def schedule_batch(records: Sequence[VehicleRecord], cfg: IntersectionConfig,
                   algorithm: Algorithm, brute_cap: int = 12) -> SpanningTree:
    """One-shot schedule from entry conditions (no dynamics)."""
    cdg = build_cdg(build_conflict_sets(records, cfg))
    return schedule_from_graph(cdg, algorithm, brute_cap)


class _LooseTree:
    """Partial-tree view over the live engine maps for parent search."""

    def __init__(self, depth: dict[int, int], parent: dict[int, int]):
        self.depth = depth
        self.parent = parent

    def depth_of(self, node: int) -> int:
        return 0 if node == LEADER else self.depth[node]


class _EngineTopology:
    def __init__(self, neighbor_sets: dict[int, frozenset[int]]):
        self.neighbor_sets = neighbor_sets


@dataclass
class RunResult:
    metrics: Metrics
    trace: list[TraceRow]
    depths: dict[int, int]
    parents: dict[int, int]
    arrivals: list[VehicleRecord]


class _Engine:
    """Shared closed-loop core for both scheduling modes."""

    def __init__(self, cfg: SimConfig):
        self.cfg = cfg
        self.scn = cfg.scenario
        self.dt = cfg.step
        self.states: dict[int, VehicleState] = {}
        self.depth: dict[int, int] = {}
        self.parent: dict[int, int] = {}
        self.sets: dict[int, ConflictSets] = {}
        self.records: dict[int, VehicleRecord] = {}
        self.crossed: dict[int, float] = {}
        self.locked: set[int] = set()
        self.trace: list[TraceRow] = []

    # --- scheduling -----------------------------------------------------

    def in_zone_ids(self) -> list[int]:
        return sorted(i for i in self.states if i not in self.crossed)

    def live_remaining(self, vehicle: int, _t: float) -> float:
        return self.states[vehicle].remaining

    def conflicts_between(self, a: int, b: int) -> bool:
        if self.records[a].movement == self.records[b].movement:
            return True  # whole lane chain, not just the recorded predecessor
        lo, hi = (a, b) if a < b else (b, a)
        cs = self.sets[hi]
        return lo in cs.crossing or lo in cs.diverging or lo in cs.converging or lo in cs.reachability

    def hard_parents_of(self, v: int) -> frozenset[int]:
        cs = self.sets[v]
        return cs.diverging | cs.reachability

    def place_incremental(self, record: VehicleRecord, algorithm: Algorithm) -> None:
        cs = self.sets[record.id]
        tree = _LooseTree(self.depth, self.parent)
        if algorithm is Algorithm.DFST:
            union = cs.diverging | cs.reachability | cs.crossing | cs.converging
            k = max(union, key=lambda n: (tree.depth_of(n), -n))
            self.parent[record.id] = k
            self.depth[record.id] = tree.depth_of(k) + 1
        else:
            fixed = cs.diverging | cs.reachability
            k = find_opt_parent(tree, fixed, cs.crossing | cs.converging)
            target = tree.depth_of(k) + 1
            self.parent[record.id] = self._attach(target)
            self.depth[record.id] = target

    def _attach(self, target_depth: int) -> int:
        child_count: dict[int, int] = {}
        for p in self.parent.values():
            child_count[p] = child_count.get(p, 0) + 1
        candidates = [n for n, d in self.depth.items() if d == target_depth - 1]
        if target_depth == 1 or not candidates:
            candidates.append(LEADER)
        return min(candidates, key=lambda n: (child_count.get(n, 0), n))

    def reschedule_cover(self, algorithm: Algorithm) -> None:
        """Recompute the clique cover over unlocked in-zone vehicles.

        Locked vehicles (near the stopping line, or already across) keep
        their depths; recomputed layers slot around them.
        """
        zone = self.in_zone_ids()
        for i in zone:
            if reachability_conflict(max(self.states[i].remaining, 0.0), self.scn):
                self.locked.add(i)
        unlocked = [i for i in zone if i not in self.locked]
        if not unlocked:
            return
        index = {v: k + 1 for k, v in enumerate(unlocked)}
        back = {k + 1: v for k, v in enumerate(unlocked)}
        edges = set()
        for x in range(len(unlocked)):
            for y in range(x + 1, len(unlocked)):
                a, b = unlocked[x], unlocked[y]
                if not self.conflicts_between(a, b):
                    edges.add((index[a], index[b]))
        cug = CoexistenceGraph(n=len(unlocked), edges=frozenset(edges))

        lanes: dict[int, list[int]] = {}
        for v in unlocked:
            lanes.setdefault(self.records[v].movement, []).append(v)
        lane_lists = [sorted(group) for _, group in sorted(lanes.items())]

        def conflicted(group: tuple[int, ...]) -> bool:
            return any(self.conflicts_between(a, b)
                       for k, a in enumerate(group) for b in group[k + 1:])

        layers = None
        if algorithm is Algorithm.MCC_BRUTE:
            covers = minimum_clique_covers(cug, cap=self.cfg.brute_cap)
            for cover in sorted(covers, key=lambda c: (ordering_objective(c), c.canonical())):
                subsets = [tuple(back[v] for v in s) for s in cover.subsets]
                layers = order_layers(subsets, lane_lists, conflicted)
                if layers is not None:
                    break
        if layers is None:
            cover = mcc_greedy(cug)
            subsets = [tuple(back[v] for v in s) for s in cover.subsets]
            layers = order_layers(subsets, lane_lists, conflicted, allow_split=True)

        locked_depth = {w: self.depth[w] for w in self.locked if w in self.depth}
        prev = 0
        for members in layers:
            floor = prev
            banned: set[int] = set()
            for m in members:
                for w, dw in locked_depth.items():
                    lo, hi = (w, m) if w < m else (m, w)
                    cs = self.sets[hi]
                    if lo in cs.diverging or lo in cs.reachability:
                        # a locked predecessor keeps its head start; the
                        # reverse (locked successor, unlocked predecessor)
                        # cannot arise because locking is monotone along
                        # the approach
                        if w < m:
                            floor = max(floor, dw)
                    elif lo in cs.crossing or lo in cs.converging:
                        banned.add(dw)
            d = floor + 1
            while d in banned:
                d += 1
            for m in members:
                self.depth[m] = d
            prev = d
        # relink parents for the re-layered vehicles
        for v in unlocked:
            self.parent[v] = self._best_parent_at(self.depth[v] - 1, exclude=v)

    def _best_parent_at(self, target_depth: int, exclude: int) -> int:
        if target_depth == 0:
            return LEADER
        candidates = [n for n, d in self.depth.items() if d == target_depth and n != exclude]
        return min(candidates) if candidates else LEADER

    # --- dynamics -------------------------------------------------------

    def neighbor_sets(self) -> dict[int, frozenset[int]]:
        children: dict[int, set[int]] = {}
        for child, par in self.parent.items():
            if par != LEADER:
                children.setdefault(par, set()).add(child)
        out = {}
        for v in self.states:
            peers = set(children.get(v, ()))
            par = self.parent.get(v, LEADER)
            if par != LEADER:
                peers.add(par)
            out[v] = frozenset(peers)
        return out

    def control_phase(self, t: float, step_idx: int) -> dict[int, float]:
        leader = VehicleState(
            remaining=self.cfg.leader_start - self.scn.platoon_speed * t,
            speed=self.scn.platoon_speed,
        )
        snapshot: dict[int, VehicleState] = {LEADER: leader}
        snapshot.update(self.states)
        active = {i for i in self.states if i not in self.crossed}
        topology = _EngineTopology(self.neighbor_sets())
        inputs: dict[int, float] = {}
        for i in sorted(active):
            u = control_input(i, snapshot, topology, self.depth, self.cfg.gains,
                              self.scn, active=active)
            inputs[i] = u
            if self.cfg.collect_trace:
                st = self.states[i]
                self.trace.append(TraceRow(step_idx, i, st.remaining, st.speed, u, self.depth[i]))
        return inputs

    def advance(self, inputs: dict[int, float], t: float) -> None:
        for i, st in list(self.states.items()):
            u = inputs.get(i, 0.0)
            if i in self.crossed:
                new = VehicleState(remaining=st.remaining - st.speed * self.dt, speed=st.speed)
            else:
                new = step_dynamics(st, u, self.dt, self.scn)
            if i not in self.crossed and st.remaining > 0.0 >= new.remaining:
                frac = st.remaining / max(st.remaining - new.remaining, 1e-12)
                self.crossed[i] = t + frac * self.dt
                self.locked.add(i)
            self.states[i] = new


def run(cfg: SimConfig) -> RunResult:
    """Run one full simulation and report its traffic metrics.

    Deterministic for a fixed config: identical seed and parameters give
    identical metrics and trace.
    """
    arrivals = sample_arrivals(cfg)
    engine = _Engine(cfg)
    for rec in arrivals:
        engine.records[rec.id] = rec

    if cfg.mode is Mode.BATCH:
        sets = build_conflict_sets(arrivals, cfg.scenario)
        tree = schedule_from_graph(build_cdg(sets), cfg.algorithm, cfg.brute_cap)
        engine.depth.update(tree.depth)
        engine.parent.update(tree.parent)
        engine.sets.update({s.vehicle: s for s in sets})

    pending = list(arrivals)
    t, step_idx = 0.0, 0
    eps = 1e-9
    n = cfg.n_vehicles
    while len(engine.crossed) < n:
        if t > cfg.horizon:
            raise SimulationTimeout(
                f"simulation exceeded {cfg.horizon} s with "
                f"{n - len(engine.crossed)} vehicles still inside",
                trace=engine.trace,
                records=_completions(engine),
            )
        while pending and pending[0].entry_time <= t + eps:
            rec = pending.pop(0)
            if cfg.mode is Mode.ONLINE:
                earlier = [engine.records[i] for i in engine.in_zone_ids() if i < rec.id]
                cs = conflict_sets_for(rec, earlier, cfg.scenario, engine.live_remaining)
                engine.sets[rec.id] = cs
                engine.states[rec.id] = VehicleState(cfg.scenario.control_zone_length,
                                                     rec.entry_speed)
                if cfg.algorithm in (Algorithm.DFST, Algorithm.IDFST):
                    engine.place_incremental(rec, cfg.algorithm)
                else:
                    engine.reschedule_cover(cfg.algorithm)
                    if rec.id not in engine.depth:
                        # entering vehicle was somehow already locked; fall
                        # back to an incremental placement
                        engine.place_incremental(rec, Algorithm.IDFST)
            else:
                engine.states[rec.id] = VehicleState(cfg.scenario.control_zone_length,
                                                     rec.entry_speed)
        inputs = engine.control_phase(t, step_idx)
        engine.advance(inputs, t)
        t += cfg.step
        step_idx += 1

    records = _completions(engine)
    metrics = Metrics(
        evacuation_time=evacuation_time(records),
        attd=attd(records, cfg.scenario),
        d_all=max(r.depth for r in records),
        records=records,
    )
    return RunResult(metrics=metrics, trace=engine.trace,
                     depths=dict(engine.depth), parents=dict(engine.parent),
                     arrivals=arrivals)


def _completions(engine: _Engine) -> list[CompletionRecord]:
    out = []
    for i, t_out in sorted(engine.crossed.items()):
        out.append(CompletionRecord(vehicle=i, t_in=engine.records[i].entry_time,
                                    t_out=t_out, depth=engine.depth[i]))
    return out


@dataclass
class PlatoonSample:
    t: float
    states: dict[int, VehicleState]
    crossings: dict[int, float]


def simulate_platoon(
    tree: SpanningTree,
    cfg: IntersectionConfig,
    initial: dict[int, VehicleState],
    leader_start: float,
    gains: ControllerGains = ControllerGains(),
    until: float = 300.0,
    dt: float | None = None,
) -> list[PlatoonSample]:
    """Closed loop over a fixed tree from explicit initial states.

    Used for controller studies: no arrivals, every vehicle present from
    t = 0.  Samples the full state each step until every vehicle has crossed
    or the time limit is hit.
    """
    from .control import build_plf_topology

    dt = dt if dt is not None else cfg.dt
    topology = build_plf_topology(tree)
    states = {i: VehicleState(s.remaining, s.speed) for i, s in initial.items()}
    crossings: dict[int, float] = {}
    history: list[PlatoonSample] = []
    t = 0.0
    while t < until:
        leader = VehicleState(leader_start - cfg.platoon_speed * t, cfg.platoon_speed)
        snapshot = {LEADER: leader, **states}
        active = {i for i in states if i not in crossings}
        history.append(PlatoonSample(t=t, states={i: VehicleState(s.remaining, s.speed)
                                                  for i, s in states.items()},
                                     crossings=dict(crossings)))
        if not active:
            break
        for i in sorted(active):
            u = control_input(i, snapshot, topology, tree.depth, gains, cfg, active=active)
            new = step_dynamics(states[i], u, dt, cfg)
            if states[i].remaining > 0.0 >= new.remaining:
                frac = states[i].remaining / max(states[i].remaining - new.remaining, 1e-12)
                crossings[i] = t + frac * dt
            states[i] = new
        t += dt
    return history
