"""Passing-order schedulers over the conflict graphs.

Four routes to a layered passing order:

* ``dfst_schedule``: the baseline spanning tree.  Every conflict parent is
  treated alike and the new vehicle goes one layer below its deepest parent.
* ``idfst_schedule``: the improved tree.  Parents whose crossing order is
  exchangeable (crossing, converging) only exclude their own layers; parents
  that must stay ahead (same lane, uncatchable) set a floor, and the vehicle
  takes the shallowest layer clearing both.
* ``mcc_greedy``: minimum clique cover of the coexistence graph, solved
  heuristically by greedy coloring of its complement in breadth-first order.
* ``mcc_bruteforce``: exact minimum clique cover by branch-and-bound set
  partitioning, capped at small vehicle counts.

All of them yield a spanning tree rooted at the virtual leader whose depth
is the vehicle's passing layer; ``verify_feasible`` checks any tree against
the conflict graph.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable

from .conflicts import CoexistenceGraph, ConflictDirectedGraph, ContractError


class SizeLimitError(ValueError):
    """Instance too large for exhaustive search."""


class RepairError(RuntimeError):
    """A clique cover could not be reordered into a feasible layering."""


@dataclass
class SpanningTree:
    """Parent and layer (depth) per vehicle; the virtual leader 0 is the root."""

    parent: dict[int, int]
    depth: dict[int, int]

    def __post_init__(self):
        for i, p in self.parent.items():
            dp = 0 if p == 0 else self.depth.get(p)
            if dp is None or self.depth[i] != dp + 1:
                raise ContractError(f"vehicle {i}: depth must be its parent's depth + 1")

    @property
    def d_all(self) -> int:
        return max(self.depth.values(), default=0)

    def depth_of(self, node: int) -> int:
        return 0 if node == 0 else self.depth[node]

    def layers(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.d_all)]
        for i, d in self.depth.items():
            out[d - 1].append(i)
        for layer in out:
            layer.sort()
        return out

    def children(self) -> dict[int, list[int]]:
        out: dict[int, list[int]] = {0: []}
        for i in self.depth:
            out.setdefault(i, [])
        for i, p in self.parent.items():
            out[p].append(i)
        return out

    def to_dict(self) -> dict:
        return {
            "d_all": self.d_all,
            "layers": self.layers(),
            "parent": {i: self.parent[i] for i in sorted(self.parent)},
            "depth": {i: self.depth[i] for i in sorted(self.depth)},
        }


@dataclass(frozen=True)
class CliqueCover:
    """Disjoint coexisting groups covering all vehicles."""

    subsets: tuple[frozenset[int], ...]

    @property
    def theta(self) -> int:
        return len(self.subsets)

    @property
    def max_clique_size(self) -> int:
        return max((len(s) for s in self.subsets), default=0)

    def canonical(self) -> tuple[tuple[int, ...], ...]:
        """Subsets sorted internally, then by descending size and member order."""
        return tuple(sorted((tuple(sorted(s)) for s in self.subsets),
                            key=lambda s: (-len(s), s)))

    def to_dict(self) -> dict:
        return {"theta": self.theta, "subsets": [list(s) for s in self.canonical()]}


def validate_cover(cover: CliqueCover, cug: CoexistenceGraph) -> None:
    members = [v for s in cover.subsets for v in s]
    if sorted(members) != list(range(1, cug.n + 1)):
        raise ContractError("cover is not a partition of the vehicles")
    for subset in cover.subsets:
        for i, j in itertools.combinations(sorted(subset), 2):
            if not cug.adjacent(i, j):
                raise ContractError(f"subset {sorted(subset)} is not a coexisting group")


@dataclass
class FeasibilityReport:
    ok: bool
    same_depth_conflicts: list[tuple[int, int]] = field(default_factory=list)
    order_violations: list[tuple[int, int]] = field(default_factory=list)


def verify_feasible(tree: SpanningTree, cdg: ConflictDirectedGraph) -> FeasibilityReport:
    """Check a layered order against the conflict graph.

    Feasible when no two vehicles in one layer conflict and every same-lane
    edge points from a shallower to a deeper layer (overtaking within a lane
    is impossible).  Reachability edges join route-conflict-free pairs, so a
    layer inversion across them wastes a slot but endangers nothing; they are
    constrained only by the shared-layer rule.  Violations are reported, not
    raised.
    """
    if set(tree.depth) != set(range(1, cdg.n + 1)):
        raise ContractError("tree does not span the conflict graph nodes")
    report = FeasibilityReport(ok=True)
    for layer in tree.layers():
        for i, j in itertools.combinations(layer, 2):
            if cdg.connected(i, j):
                report.same_depth_conflicts.append((i, j))
    for i, j in cdg.lane_edges:
        if i != 0 and tree.depth[i] >= tree.depth[j]:
            report.order_violations.append((i, j))
    report.ok = not report.same_depth_conflicts and not report.order_violations
    return report


def _attach_parent(depth_map: dict[int, int], child_count: dict[int, int], target_depth: int) -> int:
    """Pick the parent at the layer above: fewest children, then lowest id."""
    candidates = [n for n, d in depth_map.items() if d == target_depth - 1]
    if target_depth == 1:
        candidates.append(0)
    if not candidates:
        raise ContractError(f"no node available at depth {target_depth - 1}")
    return min(candidates, key=lambda n: (child_count.get(n, 0), n))


def dfst_schedule(cdg: ConflictDirectedGraph) -> SpanningTree:
    """Baseline tree: one layer below the deepest conflict parent of any kind."""
    depth: dict[int, int] = {}
    parent: dict[int, int] = {}

    def d(node: int) -> int:
        return 0 if node == 0 else depth[node]

    for i in range(1, cdg.n + 1):
        parents = cdg.hard_parents(i)
        parents |= {j for j in _bidirectional_neighbors(cdg, i) if j < i}
        k = max(parents, key=lambda n: (d(n), -n))
        parent[i] = k
        depth[i] = d(k) + 1
    return SpanningTree(parent=parent, depth=depth)


def _bidirectional_neighbors(cdg: ConflictDirectedGraph, i: int) -> set[int]:
    out = set()
    for a, b in cdg.bidirectional:
        if a == i:
            out.add(b)
        elif b == i:
            out.add(a)
    return out


def find_opt_parent(tree: SpanningTree, fixed: Iterable[int], exchangeable: Iterable[int]) -> int:
    """Shallowest placed parent whose child layer clears both constraints.

    The returned node k minimizes its depth subject to: depth(k) + 1 is
    strictly below none of the fixed-order parents (it exceeds their maximum
    depth) and does not coincide with any exchangeable parent's layer.
    Ties break toward fewer children, then the lower id.
    """
    fixed = set(fixed)
    exchangeable = set(exchangeable)
    if not fixed and not exchangeable:
        raise ContractError("parent search needs at least one candidate")
    floor = max((tree.depth_of(m) for m in fixed), default=0)
    blocked = {tree.depth_of(n) for n in exchangeable}
    child_count: dict[int, int] = {}
    for p in tree.parent.values():
        child_count[p] = child_count.get(p, 0) + 1
    best: int | None = None
    best_key: tuple[int, int, int] | None = None
    for k in fixed | exchangeable:
        target = tree.depth_of(k) + 1
        if target <= floor or target in blocked:
            continue
        key = (tree.depth_of(k), child_count.get(k, 0), k)
        if best_key is None or key < best_key:
            best, best_key = k, key
    if best is None:
        raise RuntimeError("no feasible parent candidate; conflict sets are inconsistent")
    return best


def idfst_schedule(cdg: ConflictDirectedGraph) -> SpanningTree:
    """Improved tree: exchangeable-order parents no longer set a depth floor.

    Same-lane and reachability parents must stay strictly above the new
    vehicle; crossing and converging parents only exclude their own layers,
    so the new vehicle may slot in front of them.  Each vehicle then takes
    the shallowest admissible layer and attaches to the least-loaded node
    one layer up.
    """
    depth: dict[int, int] = {}
    parent: dict[int, int] = {}
    child_count: dict[int, int] = {}
    tree = SpanningTree(parent=parent, depth=depth)

    for i in range(1, cdg.n + 1):
        fixed = cdg.hard_parents(i)
        exchangeable = {a for a, b in cdg.crossing_edges if b == i}
        exchangeable |= {a for a, b in cdg.converging_edges if b == i}
        k = find_opt_parent(tree, fixed, exchangeable)
        target = tree.depth_of(k) + 1
        chosen = _attach_parent(depth, child_count, target)
        parent[i] = chosen
        depth[i] = target
        child_count[chosen] = child_count.get(chosen, 0) + 1
    return SpanningTree(parent=parent, depth=depth)


def _complement_adjacency(cug: CoexistenceGraph) -> dict[int, set[int]]:
    """Adjacency of the conflict relation over real vehicles."""
    adj: dict[int, set[int]] = {i: set() for i in range(1, cug.n + 1)}
    for i, j in itertools.combinations(range(1, cug.n + 1), 2):
        if not cug.adjacent(i, j):
            adj[i].add(j)
            adj[j].add(i)
    return adj


def _bfs_order(adj: dict[int, set[int]]) -> list[int]:
    """Breadth-first order over the conflict relation.

    Each component starts at its most conflicted vehicle so that the hardest
    vehicles are colored while all group indices are still open; the frontier
    expands by ascending id.  Deterministic for a fixed graph.
    """
    order: list[int] = []
    visited: set[int] = set()
    for start in sorted(adj, key=lambda v: (-len(adj[v]), v)):
        if start in visited:
            continue
        queue = [start]
        visited.add(start)
        while queue:
            node = queue.pop(0)
            order.append(node)
            for nxt in sorted(adj[node]):
                if nxt not in visited:
                    visited.add(nxt)
                    queue.append(nxt)
    return order


def mcc_greedy(cug: CoexistenceGraph) -> CliqueCover:
    """Greedy clique cover: color the complement graph in BFS order.

    Each vehicle takes the lowest group index not used by any conflicting
    vehicle; groups are cliques of the coexistence graph.
    """
    adj = _complement_adjacency(cug)
    color: dict[int, int] = {}
    for node in _bfs_order(adj):
        used = {color[nbr] for nbr in adj[node] if nbr in color}
        c = 0
        while c in used:
            c += 1
        color[node] = c
    groups: dict[int, set[int]] = {}
    for node, c in color.items():
        groups.setdefault(c, set()).add(node)
    return CliqueCover(subsets=tuple(frozenset(groups[c]) for c in sorted(groups)))


def minimum_clique_covers(cug: CoexistenceGraph, cap: int = 12) -> list[CliqueCover]:
    """Every minimum clique cover, canonicalized and deduplicated.

    Branch-and-bound set partitioning: vehicles are placed in id order into
    an existing compatible clique or a fresh one; branches already using more
    cliques than the incumbent minimum are cut.  The greedy cover seeds the
    bound.
    """
    if cug.n == 0:
        return [CliqueCover(subsets=())]
    if cug.n > cap:
        raise SizeLimitError(
            f"exact clique cover capped at {cap} vehicles (got {cug.n}); use mcc_greedy"
        )
    best_theta = mcc_greedy(cug).theta
    solutions: list[tuple[frozenset[int], ...]] = []
    cliques: list[set[int]] = []

    def place(v: int) -> None:
        nonlocal best_theta
        if len(cliques) > best_theta:
            return
        if v > cug.n:
            theta = len(cliques)
            if theta < best_theta:
                best_theta = theta
                solutions.clear()
            if theta == best_theta:
                solutions.append(tuple(frozenset(c) for c in cliques))
            return
        for clique in cliques:
            if all(cug.adjacent(v, u) for u in clique):
                clique.add(v)
                place(v + 1)
                clique.remove(v)
        cliques.append({v})
        place(v + 1)
        cliques.pop()

    place(1)
    covers = [CliqueCover(subsets=s) for s in solutions if len(s) == best_theta]
    unique = {c.canonical(): c for c in covers}
    return [unique[k] for k in sorted(unique)]


def ordering_objective(cover: CliqueCover) -> int:
    """Total layer rank over vehicles once subsets are ordered largest first."""
    sizes = sorted((len(s) for s in cover.subsets), reverse=True)
    return sum((layer + 1) * size for layer, size in enumerate(sizes))


def mcc_bruteforce(cug: CoexistenceGraph, cap: int = 12) -> CliqueCover:
    """Exact minimum clique cover; prefers front-loaded covers.

    Among minimum covers the one minimizing the ordered layer-rank objective
    wins; remaining ties go to the lexicographically smallest canonical form.
    """
    covers = minimum_clique_covers(cug, cap=cap)
    if not covers:
        return CliqueCover(subsets=())
    return min(covers, key=lambda c: (ordering_objective(c), c.canonical()))


def order_layers(
    subsets: Iterable[Iterable[int]],
    lanes: list[list[int]],
    conflicted,
    allow_split: bool = False,
    budget: int = 200_000,
) -> list[tuple[int, ...]] | None:
    """Order cover subsets into conflict-free layers via lane-slot substitution.

    Each emitted layer substitutes, for every member, the earliest still
    unscheduled vehicle of that member's lane: vehicles of one lane are
    route-interchangeable, so this generalizes the pairwise exchange that
    restores arrival order along a lane.  A substitution can still collide
    with a reachability conflict (those are not lane-symmetric); the search
    prefers larger subsets first and backtracks over the emission order.

    Returns None if no ordering works and splitting is off; with
    ``allow_split`` a blocked subset sheds its colliding members into
    singleton subsets instead (the layer count may then grow).
    """
    lane_of: dict[int, int] = {}
    for ln, chain in enumerate(lanes):
        for v in chain:
            lane_of[v] = ln
    shapes = sorted((tuple(sorted(s)) for s in subsets), key=lambda s: (-len(s), s))
    shape_lanes = [tuple(sorted(lane_of[v] for v in s)) for s in shapes]
    layers_out: list[tuple[int, ...]] = []
    fuel = [budget]

    def emit(remaining: list[int], heads: list[int]) -> bool:
        fuel[0] -= 1
        if fuel[0] < 0:
            raise RepairError("gave up ordering the cover around reachability conflicts")
        if not remaining:
            return True
        for pick, idx in enumerate(remaining):
            group = tuple(lanes[ln][heads[ln]] for ln in shape_lanes[idx])
            if conflicted(group):
                continue
            for ln in shape_lanes[idx]:
                heads[ln] += 1
            layers_out.append(group)
            if emit(remaining[:pick] + remaining[pick + 1:], heads):
                return True
            layers_out.pop()
            for ln in shape_lanes[idx]:
                heads[ln] -= 1
        return False

    if emit(list(range(len(shapes))), [0] * len(lanes)):
        return layers_out
    if not allow_split:
        return None

    # forward pass that sheds colliding members; always terminates because
    # every emission consumes at least one vehicle
    layers_out = []
    heads = [0] * len(lanes)
    pool = [list(s) for s in shape_lanes]
    while pool:
        pool.sort(key=lambda s: (-len(s), s))
        shape = pool.pop(0)
        group: list[int] = []
        spill: list[int] = []
        for ln in shape:
            candidate = lanes[ln][heads[ln]]
            if conflicted(tuple(group + [candidate])):
                spill.append(ln)
            else:
                group.append(candidate)
        if not group:
            # even a single vehicle always forms a valid layer
            ln = shape[0]
            group = [lanes[ln][heads[ln]]]
            spill = shape[1:]
        for v in group:
            heads[lane_of[v]] += 1
        layers_out.append(tuple(sorted(group)))
        for ln in spill:
            pool.append([ln])
    return layers_out


def _lanes_for(cdg: ConflictDirectedGraph) -> list[list[int]]:
    lanes = [list(chain) for chain in cdg.lane_chains()]
    seen = {v for chain in lanes for v in chain}
    for v in range(1, cdg.n + 1):
        if v not in seen:  # isolated vehicle, its own lane
            lanes.append([v])
    return lanes


def cover_to_tree(cover: CliqueCover, cdg: ConflictDirectedGraph) -> SpanningTree:
    """Turn a clique cover into a feasible layered spanning tree.

    Subsets are emitted largest first (front-loading minimizes the summed
    layer rank), with same-lane order restored by the lane-slot substitution
    of ``order_layers``.  Parents are the lowest id in the layer above.
    """
    members = sorted(v for s in cover.subsets for v in s)
    if members != list(range(1, cdg.n + 1)):
        raise ContractError("cover is not a partition of the scheduled vehicles")

    def conflicted(group: tuple[int, ...]) -> bool:
        return any(cdg.connected(a, b) for a, b in itertools.combinations(group, 2))

    layers = order_layers(cover.subsets, _lanes_for(cdg), conflicted)
    if layers is None:
        raise RepairError("no ordering of the cover yields a conflict-free layering")
    return _tree_from_layers(layers, cdg)


def _tree_from_layers(layers: list[tuple[int, ...]], cdg: ConflictDirectedGraph) -> SpanningTree:
    parent: dict[int, int] = {}
    depth: dict[int, int] = {}
    previous: tuple[int, ...] = ()
    for new_depth, group in enumerate(layers, start=1):
        anchor = 0 if new_depth == 1 else min(previous)
        for v in group:
            parent[v] = anchor
            depth[v] = new_depth
        previous = group
    tree = SpanningTree(parent=parent, depth=depth)
    report = verify_feasible(tree, cdg)
    if not report.ok:
        raise RepairError(
            "cover ordering left violations: "
            f"same-layer {report.same_depth_conflicts}, order {report.order_violations}"
        )
    return tree


def schedule_cover_tree(cug: CoexistenceGraph, cdg: ConflictDirectedGraph,
                        exact: bool, cap: int = 12) -> SpanningTree:
    """Cover-based schedule as a tree, robust to unorderable covers.

    The preferred cover occasionally admits no lane-consistent layer order
    once reachability conflicts enter (they are not lane-symmetric).  The
    exact route then walks the minimum covers in preference order; one of
    them is always orderable when the depth-cover equivalence holds.  The
    greedy route keeps its single cover and sheds colliding members into
    extra layers instead.
    """
    def conflicted(group: tuple[int, ...]) -> bool:
        return any(cdg.connected(a, b) for a, b in itertools.combinations(group, 2))

    lanes = _lanes_for(cdg)
    if exact:
        covers = minimum_clique_covers(cug, cap=cap)
        for cover in sorted(covers, key=lambda c: (ordering_objective(c), c.canonical())):
            layers = order_layers(cover.subsets, lanes, conflicted)
            if layers is not None:
                return _tree_from_layers(layers, cdg)
        raise RepairError("no minimum cover admits a conflict-free ordering")
    cover = mcc_greedy(cug)
    layers = order_layers(cover.subsets, lanes, conflicted, allow_split=True)
    return _tree_from_layers(layers, cdg)
