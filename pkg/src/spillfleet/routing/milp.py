"""Mixed-integer formulation of the routing problem and LP-format export.

Decision variables
    f_{i}_{j}_{v}  binary: edge (i, j) is traversed by the agent whose route
                   eventually services spill v.  Edges into the depot and
                   edges leaving v on v's own route never appear, so the
                   model has exactly p*(p^2 - p + 1) flow variables.
    o_{j}          continuous position of spill j on its route, in [1, p],
                   used for Miller-Tucker-Zemlin subtour elimination.

Constraint families
    fleet_start   sum_j f_0_j_j <= k              (at most k agents leave;
                  exact_departures=True emits = k, which forbids idle agents)
    serve         sum_{i != v} f_i_v_v >= 1       (every spill is reached)
    depart        sum_j f_0_j_v = 1               (route v starts at depot)
    flow_link     sum_{w != i,j} f_i_j_w <= (p+1) * f_i_j_j
                  (an edge carries other routes' flags only if some agent
                  drives it, witnessed by the route that services j)
    mtz           o_i - o_j + (p+1) * f_i_j_j <= p  for spill pairs i != j
    out_deg       sum_j f_i_j_j <= 1              (one successor per spill)
    conserve      sum_i f_i_w_v = sum_j f_w_j_v   (route v passes through w)
    in_deg        sum_i f_i_w_v <= 1              (route v enters w once)

The last three families pin each route to a single depot-rooted path; the
first five alone admit cheaper tree-shaped relaxations (two routes sharing
a prefix), so they are required for the optimum to match route enumeration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from ..scenario import MotionGraph
from .evaluate import RouteSet, validate_route_set


@dataclass
class MilpConstraint:
    name: str
    terms: dict[str, float]  # variable name -> coefficient
    sense: str  # "<=", ">=", "="
    rhs: float


@dataclass
class MilpModel:
    n_spills: int
    n_agents: int
    objective: dict[str, float]
    constraints: list[MilpConstraint]
    binaries: list[str]
    bounds: dict[str, tuple[float, float]]  # continuous vars only

    @property
    def variables(self) -> list[str]:
        return list(self.binaries) + list(self.bounds.keys())


def f_variable_count(p: int) -> int:
    """Number of binary flow variables for p spills."""
    return p * (p * p - p + 1)


def fname(i: int, j: int, v: int) -> str:
    return f"f_{i}_{j}_{v}"


def oname(j: int) -> str:
    return f"o_{j}"


def _edges(p: int, v: int):
    """Usable (i, j) edges on route v: no edges into the depot, none out of v."""
    for i in range(p + 1):
        if i == v:
            continue
        for j in range(1, p + 1):
            if j != i:
                yield i, j


def build_milp(graph: MotionGraph, k: int,
               exact_departures: bool = False) -> MilpModel:
    p = graph.n_spills
    if p < 1:
        raise ValueError("need at least one spill")
    if k < 1:
        raise ValueError("need at least one agent")
    cost = graph.cost
    risk = graph.risk
    spills = range(1, p + 1)

    binaries = [fname(i, j, v) for v in spills for i, j in _edges(p, v)]
    exists = set(binaries)
    assert len(binaries) == f_variable_count(p)

    objective: dict[str, float] = {}
    for v in spills:
        for i, j in _edges(p, v):
            c = float(risk[v] * cost[i, j])
            if not math.isfinite(c):
                raise ValueError(f"non-finite cost on edge ({i},{j})")
            objective[fname(i, j, v)] = c

    cons: list[MilpConstraint] = []
    cons.append(MilpConstraint(
        name="fleet_start",
        terms={fname(0, j, j): 1.0 for j in spills},
        sense="=" if exact_departures else "<=", rhs=float(k)))
    for v in spills:
        cons.append(MilpConstraint(
            name=f"serve_{v}",
            terms={fname(i, v, v): 1.0 for i in range(p + 1)
                   if i != v},
            sense=">=", rhs=1.0))
        cons.append(MilpConstraint(
            name=f"depart_{v}",
            terms={fname(0, j, v): 1.0 for j in spills},
            sense="=", rhs=1.0))
    for i in range(p + 1):
        for j in spills:
            if j == i:
                continue
            terms = {fname(i, j, w): 1.0 for w in spills
                     if w != j and fname(i, j, w) in exists}
            if not terms:
                continue
            terms[fname(i, j, j)] = -float(p + 1)
            cons.append(MilpConstraint(
                name=f"flow_link_{i}_{j}", terms=terms, sense="<=", rhs=0.0))
    for i in spills:
        for j in spills:
            if j == i:
                continue
            cons.append(MilpConstraint(
                name=f"mtz_{i}_{j}",
                terms={oname(i): 1.0, oname(j): -1.0,
                       fname(i, j, j): float(p + 1)},
                sense="<=", rhs=float(p)))
    for i in spills:
        terms = {fname(i, j, j): 1.0 for j in spills if j != i}
        if terms:
            cons.append(MilpConstraint(
                name=f"out_deg_{i}", terms=terms, sense="<=", rhs=1.0))
    for v in spills:
        for w in spills:
            incoming = {fname(i, w, v): 1.0 for i in range(p + 1)
                        if fname(i, w, v) in exists}
            cons.append(MilpConstraint(
                name=f"in_deg_{v}_{w}", terms=dict(incoming),
                sense="<=", rhs=1.0))
            if w == v:
                continue
            terms = dict(incoming)
            for j in spills:
                nm = fname(w, j, v)
                if nm in exists:
                    terms[nm] = terms.get(nm, 0.0) - 1.0
            cons.append(MilpConstraint(
                name=f"conserve_{v}_{w}", terms=terms, sense="=", rhs=0.0))

    bounds = {oname(j): (1.0, float(p)) for j in spills}
    return MilpModel(n_spills=p, n_agents=k, objective=objective,
                     constraints=cons, binaries=binaries, bounds=bounds)


def _fmt(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return repr(x)


def _terms_text(terms: dict[str, float]) -> str:
    parts = []
    for name, coef in terms.items():
        if coef == 0:
            continue
        sign = "-" if coef < 0 else "+"
        mag = abs(coef)
        chunk = name if mag == 1 else f"{_fmt(mag)} {name}"
        if not parts and sign == "+":
            parts.append(chunk)
        else:
            parts.append(f"{sign} {chunk}")
    if not parts:
        raise ValueError("empty linear expression")
    return " ".join(parts)


def _wrap(line: str, limit: int = 200) -> list[str]:
    """Split a long expression line at spaces; continuations are indented."""
    if len(line) <= limit:
        return [line]
    out = []
    cur = ""
    for tok in line.split(" "):
        if cur and len(cur) + 1 + len(tok) > limit:
            out.append(cur)
            cur = "   " + tok
        else:
            cur = tok if not cur else cur + " " + tok
    if cur:
        out.append(cur)
    return out


def to_lp_text(model: MilpModel) -> str:
    """Serialize in the common LP text format (CPLEX-style sections)."""
    lines = ["\\ weighted-latency fleet routing"
             f" (p={model.n_spills}, k={model.n_agents})",
             "Minimize"]
    lines.extend(_wrap(" obj: " + _terms_text(model.objective)))
    lines.append("Subject To")
    for con in model.constraints:
        lines.extend(_wrap(
            f" {con.name}: {_terms_text(con.terms)} {con.sense} {_fmt(con.rhs)}"))
    lines.append("Bounds")
    for name, (lo, hi) in model.bounds.items():
        lines.append(f" {_fmt(lo)} <= {name} <= {_fmt(hi)}")
    lines.append("Binaries")
    width = 0
    row: list[str] = []
    for name in model.binaries:
        if width + len(name) + 1 > 200 and row:
            lines.append(" " + " ".join(row))
            row, width = [], 0
        row.append(name)
        width += len(name) + 1
    if row:
        lines.append(" " + " ".join(row))
    lines.append("End")
    return "\n".join(lines) + "\n"


def export_milp(graph: MotionGraph, k: int, path=None) -> str:
    """Build the model and serialize it; writes to `path` when given."""
    text = to_lp_text(build_milp(graph, k))
    if path is not None:
        with open(path, "w", encoding="ascii") as fh:
            fh.write(text)
    return text


def route_set_to_assignment(model: MilpModel, route_set: RouteSet,
                            graph: MotionGraph) -> dict[str, float]:
    """Variable assignment encoding a route set: f_{i}_{j}_{v} = 1 exactly for
    edges (i, j) on the prefix of v's route up to v, o_j = position of j."""
    validate_route_set(graph, route_set)
    values = {name: 0.0 for name in model.binaries}
    for name in model.bounds:
        values[name] = 1.0
    for route in route_set.routes:
        path = [0] + list(route)
        for t, v in enumerate(route, start=1):
            for q in range(1, t + 1):
                values[fname(path[q - 1], path[q], v)] = 1.0
            values[oname(v)] = float(t)
    return values


def check_assignment(model: MilpModel, values: dict[str, float],
                     tol: float = 1e-9):
    """(feasible, objective, names of violated constraints)."""
    violated = []
    for con in model.constraints:
        lhs = sum(coef * values.get(name, 0.0)
                  for name, coef in con.terms.items())
        ok = (lhs <= con.rhs + tol if con.sense == "<=" else
              lhs >= con.rhs - tol if con.sense == ">=" else
              abs(lhs - con.rhs) <= tol)
        if not ok:
            violated.append(con.name)
    for name, (lo, hi) in model.bounds.items():
        x = values.get(name, 0.0)
        if x < lo - tol or x > hi + tol:
            violated.append(f"bound_{name}")
    obj = sum(coef * values.get(name, 0.0)
              for name, coef in model.objective.items())
    return (not violated), obj, violated
