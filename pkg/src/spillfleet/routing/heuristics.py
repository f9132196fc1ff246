"""Construction and improvement heuristics for the fleet routing problem."""

from __future__ import annotations

import heapq
import math
import random

import numpy as np

from ..errors import CapacityError
from ..scenario import MotionGraph
from .evaluate import RouteSet, evaluate_damage

DP_CAP_DEFAULT = 20


def _best_ratio_pick(cost_row, risk, candidates):
    """Spill with the largest risk/cost ratio from the current vertex.
    Zero-cost spills rank above everything; ties go to the lowest id."""
    best_u = -1
    best_ratio = -math.inf
    for u in candidates:
        c = cost_row[u]
        ratio = math.inf if c == 0.0 else risk[u] / c
        if ratio > best_ratio:
            best_ratio = ratio
            best_u = u
    return best_u


def greedy_assign(graph: MotionGraph, k: int) -> RouteSet:
    """Myopic construction: the agent with the least accumulated time picks
    the unserved spill maximising risk/cost from its current vertex."""
    if k < 1:
        raise ValueError("need at least one agent")
    p = graph.n_spills
    cost = graph.cost
    risk = graph.risk
    routes: list[list[int]] = [[] for _ in range(k)]
    last = [0] * k
    # (accumulated time, agent index) so ties resolve to the lowest agent
    heap = [(0.0, a) for a in range(k)]
    heapq.heapify(heap)
    unassigned = list(range(1, p + 1))
    while unassigned:
        t, a = heapq.heappop(heap)
        u = _best_ratio_pick(cost[last[a]], risk, unassigned)
        unassigned.remove(u)
        t += cost[last[a], u]
        routes[a].append(u)
        last[a] = u
        heapq.heappush(heap, (t, a))
    return RouteSet(routes=routes)


def greedy_order(graph: MotionGraph, spill_ids) -> list[int]:
    """Order a subset as a single chain from the depot by the same
    risk/cost rule.  Fallback used when a subset exceeds the DP cap."""
    cost = graph.cost
    risk = graph.risk
    remaining = sorted(spill_ids)
    order: list[int] = []
    v = 0
    while remaining:
        u = _best_ratio_pick(cost[v], risk, remaining)
        remaining.remove(u)
        order.append(u)
        v = u
    return order


def dp_order(graph: MotionGraph, spill_ids,
             total_weight_context: float | None = None,
             dp_cap: int = DP_CAP_DEFAULT) -> list[int]:
    """Optimal visiting order for one agent's subset by Held-Karp dynamic
    programming over subsets.

    The recursion tracks, for each subset S and endpoint j, the least
    achievable damage when the pending risk outside S still accrues with
    travel time.  `total_weight_context` is the risk mass pressing on this
    route; it defaults to the subset's own total risk, which makes the
    recursion the exact single-route objective.

    Memory and time grow as 2^n, so subsets beyond `dp_cap` raise
    CapacityError; callers fall back to greedy_order.
    """
    ids = sorted(spill_ids)
    n = len(ids)
    if n == 0:
        return []
    if n > dp_cap:
        raise CapacityError(f"dp_order supports at most {dp_cap} spills, got {n}")
    if len(set(ids)) != n:
        raise ValueError("duplicate spill ids in subset")

    cost = graph.cost
    risk = graph.risk
    r = np.array([risk[i] for i in ids], dtype=float)
    w_ctx = float(r.sum()) if total_weight_context is None else float(total_weight_context)
    c0 = np.array([cost[0, i] for i in ids], dtype=float)
    cc = np.array([[cost[i, j] for j in ids] for i in ids], dtype=float)

    full = 1 << n
    masks = np.arange(full, dtype=np.int64)
    # weight of the already-served part of each subset
    w_in = np.zeros(full, dtype=float)
    pop = np.zeros(full, dtype=np.int64)
    for i in range(n):
        bit = ((masks >> i) & 1).astype(bool)
        w_in[bit] += r[i]
        pop += bit
    w_rem = w_ctx - w_in  # pending weight once subset is served

    dp = np.full((full, n), math.inf, dtype=float)
    parent = np.full((full, n), -1, dtype=np.int8)
    for j in range(n):
        dp[1 << j, j] = c0[j] * w_ctx

    by_level = [masks[pop == lv] for lv in range(n + 1)]
    for lv in range(2, n + 1):
        level_masks = by_level[lv]
        for j in range(n):
            mj = level_masks[((level_masks >> j) & 1) == 1]
            if mj.size == 0:
                continue
            prev = mj ^ (1 << j)
            w_prev = w_rem[prev]
            best = np.full(mj.shape, math.inf)
            arg = np.full(mj.shape, -1, dtype=np.int8)
            for v in range(n):
                if v == j:
                    continue
                # dp[prev, v] is +inf whenever v is outside prev
                cand = dp[prev, v] + cc[v, j] * w_prev
                take = cand < best
                best[take] = cand[take]
                arg[take] = v
            dp[mj, j] = best
            parent[mj, j] = arg

    mask = full - 1
    j = int(np.argmin(dp[mask]))
    order_rev = []
    while j >= 0:
        order_rev.append(ids[j])
        pj = int(parent[mask, j])
        mask ^= 1 << j
        j = pj
    order_rev.reverse()
    return order_rev


def _reorder(graph: MotionGraph, subset, dp_cap: int) -> list[int]:
    if len(subset) <= dp_cap:
        return dp_order(graph, subset, dp_cap=dp_cap)
    return greedy_order(graph, subset)


def ils_refine(graph: MotionGraph, route_set: RouteSet, iterations: int,
               seed: int, dp_cap: int = DP_CAP_DEFAULT,
               return_trace: bool = False):
    """Iterated local search over pairwise spill swaps.

    Each iteration draws two distinct spills with the seeded generator,
    exchanges their agents, reorders both affected routes, and keeps the
    move only on strict improvement.  Draws that land on the same agent
    are spent iterations.  With one agent or fewer than two spills the
    initial solution is returned unchanged.
    """
    best = route_set.copy()
    all_spills = sorted(best.spills())
    trace: list[dict] = []
    if best.n_agents < 2 or len(all_spills) < 2 or iterations <= 0:
        return (best, trace) if return_trace else best

    agent_of = {}
    for a, route in enumerate(best.routes):
        for sid in route:
            agent_of[sid] = a
    best_damage, _ = evaluate_damage(graph, best)
    rng = random.Random(seed)

    for it in range(iterations):
        s1, s2 = rng.sample(all_spills, 2)
        a1, a2 = agent_of[s1], agent_of[s2]
        if a1 == a2:
            if return_trace:
                trace.append({"iteration": it, "pair": (s1, s2),
                              "accepted": False, "damage": best_damage})
            continue
        cand = best.copy()
        sub1 = [x for x in cand.routes[a1] if x != s1] + [s2]
        sub2 = [x for x in cand.routes[a2] if x != s2] + [s1]
        cand.routes[a1] = _reorder(graph, sub1, dp_cap)
        cand.routes[a2] = _reorder(graph, sub2, dp_cap)
        cand_damage, _ = evaluate_damage(graph, cand)
        accepted = cand_damage < best_damage
        if accepted:
            best = cand
            best_damage = cand_damage
            agent_of[s1], agent_of[s2] = a2, a1
        if return_trace:
            trace.append({"iteration": it, "pair": (s1, s2),
                          "accepted": accepted, "damage": best_damage})
    return (best, trace) if return_trace else best
