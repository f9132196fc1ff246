"""Route sets and the weighted-latency damage objective."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import InvalidRouteSetError
from ..scenario import MotionGraph


@dataclass
class RouteSet:
    """One ordered spill sequence per agent.  Routes start implicitly at the
    depot (vertex 0) and end at their last spill.  Empty routes are allowed."""

    routes: list[list[int]]

    @property
    def n_agents(self) -> int:
        return len(self.routes)

    def spills(self) -> list[int]:
        out = []
        for r in self.routes:
            out.extend(r)
        return out

    def copy(self) -> "RouteSet":
        return RouteSet(routes=[list(r) for r in self.routes])


def validate_route_set(graph: MotionGraph, route_set: RouteSet) -> None:
    """Each spill 1..p must appear exactly once across all routes."""
    p = graph.n_spills
    seen = route_set.spills()
    if sorted(seen) != list(range(1, p + 1)):
        raise InvalidRouteSetError(
            f"routes must partition spills 1..{p}; got {sorted(seen)}")


def evaluate_damage(graph: MotionGraph, route_set: RouteSet):
    """Total damage sum_i risk_i * completion_i and the per-spill completion
    times.  Completion of the t-th spill on a route is the prefix sum of the
    motion-graph edge costs along that route."""
    validate_route_set(graph, route_set)
    cost = graph.cost
    risk = graph.risk
    completion: dict[int, float] = {}
    total = 0.0
    for route in route_set.routes:
        t = 0.0
        prev = 0
        for sid in route:
            t += cost[prev, sid]
            completion[sid] = t
            total += risk[sid] * t
            prev = sid
    return total, completion
