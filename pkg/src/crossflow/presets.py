"""Canonical worked examples used by tests, docs and the command line.

``example1`` is the seven-vehicle scene: two vehicles from the east with
separate destinations, three heading straight from the west (one alone, two
sharing a lane), one straight from the south, and a late right-turner from
the south that can no longer catch the first two at the stopping line.
"""

from __future__ import annotations

from .conflicts import VehicleRecord
from .scenario import IntersectionConfig, Leg, Movement


def example1_scenario() -> IntersectionConfig:
    """Six movements covering every conflict class of the seven-vehicle scene."""
    movements = (
        Movement(1, Leg.EAST, 2, Leg.NORTH, 0),   # right turn from the east
        Movement(2, Leg.EAST, 0, Leg.SOUTH, 0),   # left turn from the east
        Movement(3, Leg.WEST, 0, Leg.EAST, 0),    # straight, inner west lane
        Movement(4, Leg.SOUTH, 1, Leg.NORTH, 0),  # straight; merges with movement 1
        Movement(5, Leg.WEST, 1, Leg.EAST, 1),    # straight, outer west lane
        Movement(6, Leg.SOUTH, 2, Leg.EAST, 1),   # right turn; merges with movement 5
    )
    crossing = frozenset({(2, 3), (2, 4), (2, 5), (3, 4), (4, 5)})
    return IntersectionConfig(
        movements=movements,
        crossing_pairs=crossing,
        control_zone_length=900.0,
        v_max=25.0,
        a_max=5.0,
        a_min=-6.0,
        platoon_speed=10.0,
        desired_gap=30.0,
        dt=0.1,
        initial_speed=2.0,
    )


def example1_arrivals() -> list[VehicleRecord]:
    """Seven arrivals; the last one enters when the first two are near the line."""
    rows = [
        (1, 1, 0.0),
        (2, 2, 0.2),
        (3, 3, 2.0),
        (4, 4, 2.2),
        (5, 5, 2.4),
        (6, 5, 2.6),
        (7, 6, 53.0),
    ]
    return [VehicleRecord(id=i, movement=m, entry_time=t, entry_speed=2.0)
            for i, m, t in rows]
