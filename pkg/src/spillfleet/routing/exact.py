"""Exact solvers: depth-first branch-and-bound and a brute-force oracle."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

from ..errors import CapacityError, ConfigError
from ..scenario import MotionGraph
from .evaluate import RouteSet, evaluate_damage, validate_route_set
from .heuristics import DP_CAP_DEFAULT, dp_order, greedy_assign, greedy_order, ils_refine

BRUTE_FORCE_CAP = 9


@dataclass
class SolveReport:
    best: RouteSet
    objective: float
    lower_bound: float
    gap: float
    nodes_explored: int
    wall_time: float
    status: str  # "optimal" | "time_limit" | "node_limit"
    stage_log: dict[str, float] = field(default_factory=dict)

    def summary(self) -> dict:
        return {
            "objective": self.objective,
            "lower_bound": self.lower_bound,
            "gap": self.gap,
            "nodes_explored": self.nodes_explored,
            "status": self.status,
            "routes": [list(r) for r in self.best.routes],
            "stage_log": dict(self.stage_log),
        }


def brute_force_oracle(graph: MotionGraph, k: int):
    """Exhaustive search over all canonical ordered partitions of the spills
    into at most k routes.  Canonical form: started routes carry strictly
    increasing first-spill ids and empty routes sit at the end, so each
    distinct route set is visited exactly once.  Intended for small
    instances only."""
    p = graph.n_spills
    if p > BRUTE_FORCE_CAP:
        raise CapacityError(
            f"brute force supports at most {BRUTE_FORCE_CAP} spills, got {p}")
    if k < 1:
        raise ValueError("need at least one agent")
    cost = graph.cost
    risk = graph.risk

    best_damage = math.inf
    best_routes: list[list[int]] | None = None
    routes: list[list[int]] = []
    remaining = set(range(1, p + 1))

    def finish(damage: float) -> None:
        nonlocal best_damage, best_routes
        if damage < best_damage:
            best_damage = damage
            best_routes = [list(r) for r in routes]

    def extend_route(agent: int, first_id: int, last: int, t: float,
                     damage: float) -> None:
        next_agent(agent + 1, first_id, damage)
        for u in sorted(remaining):
            remaining.discard(u)
            routes[-1].append(u)
            tu = t + cost[last, u]
            extend_route(agent, first_id, u, tu, damage + risk[u] * tu)
            routes[-1].pop()
            remaining.add(u)

    def next_agent(agent: int, first_floor: int, damage: float) -> None:
        if not remaining:
            finish(damage)
            return
        if agent >= k:
            return
        for u in sorted(remaining):
            if u <= first_floor:
                continue
            remaining.discard(u)
            routes.append([u])
            tu = cost[0, u]
            extend_route(agent, u, u, tu, damage + risk[u] * tu)
            routes.pop()
            remaining.add(u)

    next_agent(0, 0, 0.0)
    assert best_routes is not None
    while len(best_routes) < k:
        best_routes.append([])
    return RouteSet(routes=best_routes), best_damage


class _BnbState:
    """Mutable search state shared across the explicit DFS stack."""

    __slots__ = ("routes", "last", "times", "open_", "unassigned",
                 "accrued", "sum_r", "sum_rmin", "first_ids")

    def __init__(self, k: int, p: int, risk, min_in):
        self.routes: list[list[int]] = [[] for _ in range(k)]
        self.last = [0] * k
        self.times = [0.0] * k
        self.open_ = [True] * k
        self.unassigned = set(range(1, p + 1))
        self.accrued = 0.0
        self.sum_r = float(sum(risk[u] for u in self.unassigned))
        self.sum_rmin = float(sum(risk[u] * min_in[u] for u in self.unassigned))
        self.first_ids: list[int] = []


def solve_exact_bnb(graph: MotionGraph, k: int,
                    incumbent: RouteSet | None = None,
                    time_limit: float | None = None,
                    node_limit: int | None = None) -> SolveReport:
    """Depth-first branch-and-bound over partial route sets.

    Branching expands the open agent with the least accumulated time
    (ties to the lowest index): one child per unserved spill, ordered by
    descending risk/cost, plus a child that closes the agent.  Closing an
    empty agent closes every empty agent at once, and first spills must
    carry increasing ids across agents; both rules remove permutations of
    interchangeable agents without losing any distinct route set.

    The bound charges every unserved spill at least the current least open
    agent time plus its cheapest incoming edge, which never exceeds the
    true completion time.  On a time or node limit the report carries the
    incumbent with a lower bound taken over all unexpanded children.
    """
    if k < 1:
        raise ValueError("need at least one agent")
    if time_limit is not None and time_limit <= 0:
        raise ConfigError("time_limit must be positive")
    if node_limit is not None and node_limit <= 0:
        raise ConfigError("node_limit must be positive")
    p = graph.n_spills
    cost = graph.cost
    risk = graph.risk

    min_in = {}
    for u in range(1, p + 1):
        min_in[u] = min(cost[v, u] for v in range(p + 1) if v != u)

    incumbent_obj = math.inf
    best: RouteSet | None = None
    if incumbent is not None:
        validate_route_set(graph, incumbent)
        if incumbent.n_agents > k:
            raise ValueError("warm start uses more agents than available")
        incumbent_obj, _ = evaluate_damage(graph, incumbent)
        padded = incumbent.copy()
        while padded.n_agents < k:
            padded.routes.append([])
        best = padded

    st = _BnbState(k, p, risk, min_in)
    t0 = time.perf_counter()
    deadline = None if time_limit is None else t0 + time_limit
    nodes = 0
    truncated: str | None = None

    def min_open_time() -> float:
        vals = [st.times[a] for a in range(k) if st.open_[a]]
        return min(vals) if vals else math.inf

    def make_children():
        """(bound, sort_key, action) for the selected agent, or None at a leaf."""
        if not st.unassigned:
            return None
        agent = -1
        key = (math.inf, -1)
        for a in range(k):
            if st.open_[a] and (st.times[a], a) < key:
                key = (st.times[a], a)
                agent = a
        if agent < 0:
            return []
        children = []
        v = st.last[agent]
        first_floor = st.first_ids[-1] if (not st.routes[agent] and st.first_ids) else 0
        for u in sorted(st.unassigned):
            if not st.routes[agent] and u <= first_floor:
                continue
            c = cost[v, u]
            if not math.isfinite(c):
                continue
            t_new = st.times[agent] + c
            accrued_new = st.accrued + risk[u] * t_new
            times_after = min(t_new if a == agent else st.times[a]
                              for a in range(k) if st.open_[a])
            sum_r = st.sum_r - risk[u]
            sum_rmin = st.sum_rmin - risk[u] * min_in[u]
            bound = accrued_new + times_after * sum_r + sum_rmin
            ratio = math.inf if c == 0.0 else risk[u] / c
            children.append((bound, (-ratio, u), ("extend", agent, u)))
        # Closing an empty agent closes every empty agent (they are
        # interchangeable); the bound uses whichever agents stay open.
        if st.routes[agent]:
            still_open = [st.times[a] for a in range(k)
                          if st.open_[a] and a != agent]
        else:
            still_open = [st.times[a] for a in range(k)
                          if st.open_[a] and st.routes[a]]
        if still_open:
            bound = st.accrued + min(still_open) * st.sum_r + st.sum_rmin
            children.append((bound, (math.inf, -1), ("close", agent, -1)))
        children.sort(key=lambda ch: ch[1])
        return children

    def apply(action):
        kind, agent, u = action
        if kind == "extend":
            undo = ("extend", agent, u, st.times[agent], st.accrued,
                    bool(st.routes[agent]))
            c = cost[st.last[agent], u]
            st.times[agent] += c
            st.accrued += risk[u] * st.times[agent]
            st.sum_r -= risk[u]
            st.sum_rmin -= risk[u] * min_in[u]
            if not st.routes[agent]:
                st.first_ids.append(u)
            st.routes[agent].append(u)
            st.last[agent] = u
            st.unassigned.discard(u)
            return undo
        closed = []
        if st.routes[agent]:
            st.open_[agent] = False
            closed.append(agent)
        else:
            for a in range(k):
                if st.open_[a] and not st.routes[a]:
                    st.open_[a] = False
                    closed.append(a)
        return ("close", closed)

    def revert(undo):
        if undo[0] == "extend":
            _, agent, u, t_prev, accrued_prev, had_spills = undo
            st.routes[agent].pop()
            st.last[agent] = st.routes[agent][-1] if st.routes[agent] else 0
            st.times[agent] = t_prev
            st.accrued = accrued_prev
            st.sum_r += risk[u]
            st.sum_rmin += risk[u] * min_in[u]
            st.unassigned.add(u)
            if not had_spills:
                st.first_ids.pop()
        else:
            for a in undo[1]:
                st.open_[a] = True

    # stack frames: [children, next_index, undo_of_entering_action]
    root_children = make_children()
    stack = []
    if root_children is None:
        incumbent_obj = 0.0
        best = RouteSet(routes=[[] for _ in range(k)])
    else:
        stack.append([root_children, 0, None])
    nodes = 1

    while stack:
        if node_limit is not None and nodes >= node_limit:
            truncated = "node_limit"
            break
        if deadline is not None and nodes % 256 == 0 and time.perf_counter() > deadline:
            truncated = "time_limit"
            break
        frame = stack[-1]
        children, idx, _ = frame
        if idx >= len(children):
            undo = frame[2]
            stack.pop()
            if undo is not None:
                revert(undo)
            continue
        bound, _, action = children[idx]
        frame[1] = idx + 1
        if bound >= incumbent_obj:
            continue
        undo = apply(action)
        nodes += 1
        sub = make_children()
        if sub is None:
            if st.accrued < incumbent_obj:
                incumbent_obj = st.accrued
                best = RouteSet(routes=[list(r) for r in st.routes])
            revert(undo)
            continue
        stack.append([sub, 0, undo])

    wall = time.perf_counter() - t0
    if truncated is None:
        lb = incumbent_obj
        status = "optimal"
    else:
        pending = [incumbent_obj]
        for children, idx, _ in stack:
            for bound, _, _ in children[idx:]:
                pending.append(bound)
        lb = min(pending)
        status = truncated
    if best is None:
        # no feasible leaf reached before the limit; fall back to greedy
        best = greedy_assign(graph, k)
        incumbent_obj, _ = evaluate_damage(graph, best)
        lb = min(lb, incumbent_obj)
    gap = 0.0 if incumbent_obj == 0 else max(0.0, (incumbent_obj - lb) / incumbent_obj)
    if status == "optimal":
        gap = 0.0
    return SolveReport(best=best, objective=incumbent_obj,
                       lower_bound=lb, gap=gap, nodes_explored=nodes,
                       wall_time=wall, status=status)


ALL_STAGES = ("greedy", "dp", "ils", "bnb")


def solve_pipeline(graph: MotionGraph, k: int,
                   stages=ALL_STAGES,
                   ils_iterations: int = 200,
                   dp_cap: int = DP_CAP_DEFAULT,
                   time_limit: float | None = None,
                   node_limit: int | None = None,
                   seed: int = 0) -> SolveReport:
    """Staged solve: greedy construction, per-route exact reordering, ILS,
    then warm-started branch-and-bound.  `stages` selects which refinement
    stages run (greedy always runs as the constructor); stage_log records
    the objective after each selected stage."""
    stages = tuple(stages)
    for s in stages:
        if s not in ALL_STAGES:
            raise ConfigError(f"unknown stage {s!r}; choose from {ALL_STAGES}")

    stage_log: dict[str, float] = {}
    rs = greedy_assign(graph, k)
    damage, _ = evaluate_damage(graph, rs)
    stage_log["greedy"] = damage

    if "dp" in stages:
        reordered = rs.copy()
        for a, route in enumerate(reordered.routes):
            if 0 < len(route) <= dp_cap:
                reordered.routes[a] = dp_order(graph, route, dp_cap=dp_cap)
        d_re, _ = evaluate_damage(graph, reordered)
        if d_re <= damage:
            rs, damage = reordered, d_re
        stage_log["dp"] = damage

    if "ils" in stages:
        rs = ils_refine(graph, rs, iterations=ils_iterations, seed=seed,
                        dp_cap=dp_cap)
        damage, _ = evaluate_damage(graph, rs)
        stage_log["ils"] = damage

    if "bnb" in stages:
        report = solve_exact_bnb(graph, k, incumbent=rs,
                                 time_limit=time_limit, node_limit=node_limit)
        stage_log["bnb"] = report.objective
        report.stage_log = stage_log
        return report

    gap = 0.0 if damage == 0 else 1.0
    return SolveReport(best=rs, objective=damage, lower_bound=0.0, gap=gap,
                       nodes_explored=0, wall_time=0.0, status="heuristic",
                       stage_log=stage_log)
