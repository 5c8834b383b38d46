"""Random problem instances for property and acceptance tests."""

from __future__ import annotations

import numpy as np

from crossflow.conflicts import build_cdg, build_conflict_sets
from crossflow.scenario import default_intersection
from crossflow.simulation import Algorithm, SimConfig, sample_arrivals

_DEFAULT = default_intersection()

# Headway mix: dense arrivals dominate, sparse ones exercise reachability
# conflicts (a vehicle can only become uncatchable after tens of seconds).
HEADWAYS = (1.0, 2.0, 3.0, 5.0, 30.0, 90.0)


def random_instance(seed: int, n_low: int = 4, n_high: int = 9):
    """One scheduling instance sampled from the default scenario."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(n_low, n_high + 1))
    headway = HEADWAYS[seed % len(HEADWAYS)]
    cfg = SimConfig(scenario=_DEFAULT, algorithm=Algorithm.DFST, n_vehicles=n,
                    mean_headway=headway, seed=seed)
    records = sample_arrivals(cfg)
    sets = build_conflict_sets(records, _DEFAULT)
    return records, sets, build_cdg(sets)
