"""Independent oracles: brute-force routes that never touch the code they check."""

from __future__ import annotations

import itertools

import numpy as np

from crossflow.conflicts import ConflictDirectedGraph
from crossflow.control import LEADER


def min_feasible_depth(cdg: ConflictDirectedGraph) -> int:
    """Minimum layer count over all ordered conflict-free layerings.

    Exhaustive search over ordered set partitions: each vehicle, in id order,
    joins an existing layer it does not conflict with or opens a new layer at
    any position; same-lane predecessors must sit in strictly earlier layers.
    Independent of every scheduler in the package.
    """
    n = cdg.n
    if n == 0:
        return 0
    lane_pred: dict[int, int] = {}
    for i, j in cdg.lane_edges:
        if i != 0:
            lane_pred[j] = i
    best = n + 1

    def conflict(i: int, j: int) -> bool:
        return cdg.connected(i, j)

    def place(v: int, layers: list[list[int]]) -> None:
        nonlocal best
        if len(layers) >= best:
            return
        if v > n:
            best = min(best, len(layers))
            return
        pred = lane_pred.get(v)
        min_index = 0
        if pred is not None:
            for idx, layer in enumerate(layers):
                if pred in layer:
                    min_index = idx + 1
                    break
        for idx in range(min_index, len(layers)):
            layer = layers[idx]
            if all(not conflict(v, u) for u in layer):
                layer.append(v)
                place(v + 1, layers)
                layer.pop()
        for idx in range(min_index, len(layers) + 1):
            layers.insert(idx, [v])
            place(v + 1, layers)
            layers.pop(idx)

    place(1, [])
    return best


def matrix_control_inputs(topology, states, depths, gains, cfg) -> dict[int, float]:
    """Controller written in its matrix form: u = -(L+Q) (k_p e_p + k_v e_v).

    Position error of vehicle j is its offset from the slot one desired gap
    per layer behind the leader; speed error is the offset from the leader's
    speed.  Used only to cross-check the per-neighbor sum implementation.
    """
    ids = topology.ids
    leader = states[LEADER]
    e_p = np.array([leader.remaining - states[v].remaining + cfg.desired_gap * depths[v]
                    for v in ids])
    e_v = np.array([states[v].speed - leader.speed for v in ids])
    m = topology.laplacian + topology.pinning
    u = -(m @ (gains.k_p * e_p)) - (m @ (gains.k_v * e_v))
    return {v: float(u[k]) for k, v in enumerate(ids)}


def best_ordering_cost(sizes: list[int]) -> int:
    """Minimum of sum(layer_rank * size) over all subset orderings, by brute force."""
    best = None
    for perm in itertools.permutations(sizes):
        cost = sum((idx + 1) * s for idx, s in enumerate(perm))
        best = cost if best is None or cost < best else best
    return best


def max_clique_via_enumeration(n: int, adjacent) -> int:
    """Largest mutually adjacent subset of {1..n} by subset enumeration."""
    best = 0
    for size in range(n, 0, -1):
        if size <= best:
            break
        for subset in itertools.combinations(range(1, n + 1), size):
            if all(adjacent(a, b) for a, b in itertools.combinations(subset, 2)):
                best = size
                break
    return best
