"""Workspaces, occupancy grids, grid shortest paths, and motion-graph construction.

A scenario bundles a rectangular workspace with polygonal obstacles, a depot,
and a set of spills (centroid, volume, perimeter, risk weight).  The motion
graph built from a scenario has one vertex per spill plus the depot; the cost
of edge (i, j) is the travel time from i to j along the shortest obstacle-free
grid path plus the time to encircle and clean spill j.  Edges into the depot
are omitted: routes end at their last spill.
"""

from __future__ import annotations

import heapq
import json
import math
import random
from dataclasses import dataclass, field, replace

import numpy as np
from shapely.geometry import Polygon, box as _box
from shapely.prepared import prep as _prep

from .errors import (
    InvalidWorkspaceError,
    NumericError,
    PlacementError,
    PointInObstacleError,
    UnreachableError,
)

SQRT2 = math.sqrt(2.0)

# 8-connected moves: (dx, dy, is_diagonal)
_MOVES = (
    (1, 0, False), (-1, 0, False), (0, 1, False), (0, -1, False),
    (1, 1, True), (1, -1, True), (-1, 1, True), (-1, -1, True),
)


@dataclass(frozen=True)
class Workspace:
    """Axis-aligned rectangular domain with polygonal obstacles.

    bounds: (xmin, ymin, xmax, ymax) in metres.
    obstacles: list of simple polygons, each a list of (x, y) vertices.
    grid_resolution: occupancy-cell edge length in metres.
    """

    bounds: tuple[float, float, float, float]
    obstacles: list[list[tuple[float, float]]] = field(default_factory=list)
    grid_resolution: float = 1.0

    def validate(self) -> None:
        xmin, ymin, xmax, ymax = self.bounds
        if not all(math.isfinite(v) for v in self.bounds):
            raise InvalidWorkspaceError("workspace bounds must be finite")
        if not (xmax > xmin and ymax > ymin):
            raise InvalidWorkspaceError("workspace bounds must have positive extent")
        if not (self.grid_resolution > 0 and math.isfinite(self.grid_resolution)):
            raise InvalidWorkspaceError("grid_resolution must be positive")
        for i, poly in enumerate(self.obstacles):
            if len(poly) < 3:
                raise InvalidWorkspaceError(f"obstacle {i} has fewer than 3 vertices")
            if not Polygon(poly).is_valid:
                raise InvalidWorkspaceError(f"obstacle {i} is not a simple polygon")


@dataclass
class OccupancyGrid:
    """Boolean occupancy raster.  occupied[iy, ix] covers the cell
    [ox + ix*res, ox + (ix+1)*res) x [oy + iy*res, oy + (iy+1)*res)."""

    origin: tuple[float, float]
    resolution: float
    occupied: np.ndarray  # bool, shape (height, width)

    @property
    def width(self) -> int:
        return self.occupied.shape[1]

    @property
    def height(self) -> int:
        return self.occupied.shape[0]

    def cell_of(self, point) -> tuple[int, int]:
        """Map a world point to (ix, iy).  Points on the far boundary are
        clamped into the last cell; points outside raise."""
        x, y = float(point[0]), float(point[1])
        if not (math.isfinite(x) and math.isfinite(y)):
            raise NumericError("non-finite query point")
        ix = math.floor((x - self.origin[0]) / self.resolution)
        iy = math.floor((y - self.origin[1]) / self.resolution)
        xmax = self.origin[0] + self.width * self.resolution
        ymax = self.origin[1] + self.height * self.resolution
        if ix == self.width and x <= xmax:
            ix -= 1
        if iy == self.height and y <= ymax:
            iy -= 1
        if not (0 <= ix < self.width and 0 <= iy < self.height):
            raise PointInObstacleError(f"point ({x}, {y}) lies outside the workspace")
        return ix, iy

    def is_free(self, point) -> bool:
        ix, iy = self.cell_of(point)
        return not bool(self.occupied[iy, ix])

    def cell_center(self, ix: int, iy: int) -> tuple[float, float]:
        return (
            self.origin[0] + (ix + 0.5) * self.resolution,
            self.origin[1] + (iy + 0.5) * self.resolution,
        )


def rasterize(workspace: Workspace) -> OccupancyGrid:
    """Conservative rasterization: a cell is occupied iff some obstacle
    overlaps it with positive area (boundary touching does not count)."""
    workspace.validate()
    xmin, ymin, xmax, ymax = workspace.bounds
    res = workspace.grid_resolution
    width = max(1, math.ceil((xmax - xmin) / res - 1e-9))
    height = max(1, math.ceil((ymax - ymin) / res - 1e-9))
    occ = np.zeros((height, width), dtype=bool)
    area_eps = 1e-12 * res * res
    for pts in workspace.obstacles:
        poly = Polygon(pts)
        prepared = _prep(poly)
        pxmin, pymin, pxmax, pymax = poly.bounds
        ix0 = max(0, math.floor((pxmin - xmin) / res))
        ix1 = min(width - 1, math.floor((pxmax - xmin) / res))
        iy0 = max(0, math.floor((pymin - ymin) / res))
        iy1 = min(height - 1, math.floor((pymax - ymin) / res))
        for iy in range(iy0, iy1 + 1):
            cy0 = ymin + iy * res
            for ix in range(ix0, ix1 + 1):
                if occ[iy, ix]:
                    continue
                cx0 = xmin + ix * res
                cell = _box(cx0, cy0, cx0 + res, cy0 + res)
                if prepared.contains(cell):
                    occ[iy, ix] = True
                elif prepared.intersects(cell):
                    if poly.intersection(cell).area > area_eps:
                        occ[iy, ix] = True
    return OccupancyGrid(origin=(xmin, ymin), resolution=res, occupied=occ)


def write_pgm(grid: OccupancyGrid, path) -> None:
    """Binary PGM (P5), occupied = 0, free = 255, top image row = max y."""
    img = np.where(grid.occupied, 0, 255).astype(np.uint8)[::-1, :]
    with open(path, "wb") as fh:
        fh.write(f"P5\n{grid.width} {grid.height}\n255\n".encode("ascii"))
        fh.write(img.tobytes())


# ---------------------------------------------------------------------------
# Grid shortest paths.
#
# Path costs are canonical: a path taking ns straight and nd diagonal moves
# costs _gval(ns, nd, res) exactly, independent of the order the moves were
# discovered in.  Both A* and the exhaustive Dijkstra used in motion-graph
# construction evaluate candidates through this one function, so they return
# bit-identical optima.


def _gval(ns: int, nd: int, res: float, diag: float) -> float:
    return ns * res + nd * diag


def _astar_counts(occ_flat, width: int, height: int, start: int, goal: int,
                  res: float, want_parents: bool):
    """Exact A* with an octile heuristic, no corner cutting (a diagonal move
    requires both orthogonal neighbours free).  Priorities are canonical
    whole-path values, so pruning at f >= best never discards a strictly
    better path.  Returns (length, ns, nd, parents)."""
    diag = res * SQRT2
    n = width * height
    gx, gy = goal % width, goal // width
    g = np.full(n, np.inf)
    ns_arr = np.zeros(n, dtype=np.int32)
    nd_arr = np.zeros(n, dtype=np.int32)
    parents = np.full(n, -1, dtype=np.int64) if want_parents else None
    g[start] = 0.0
    sx, sy = start % width, start // width
    ddx, ddy = abs(sx - gx), abs(sy - gy)
    h0s, h0d = ddx + ddy - 2 * min(ddx, ddy), min(ddx, ddy)
    heap = [(_gval(h0s, h0d, res, diag), 0.0, start)]
    best = math.inf
    best_counts = None
    while heap:
        f, gv, idx = heapq.heappop(heap)
        if gv > g[idx] or f >= best:
            continue
        if idx == goal:
            best = gv
            best_counts = (int(ns_arr[idx]), int(nd_arr[idx]))
            continue
        ix, iy = idx % width, idx // width
        cns, cnd = int(ns_arr[idx]), int(nd_arr[idx])
        for dx, dy, isdiag in _MOVES:
            nx, ny = ix + dx, iy + dy
            if not (0 <= nx < width and 0 <= ny < height):
                continue
            nidx = ny * width + nx
            if occ_flat[nidx]:
                continue
            if isdiag and (occ_flat[iy * width + nx] or occ_flat[ny * width + ix]):
                continue
            nns, nnd = (cns, cnd + 1) if isdiag else (cns + 1, cnd)
            ng = _gval(nns, nnd, res, diag)
            if ng < g[nidx]:
                ddx, ddy = abs(nx - gx), abs(ny - gy)
                hs, hd = ddx + ddy - 2 * min(ddx, ddy), min(ddx, ddy)
                nf = _gval(nns + hs, nnd + hd, res, diag)
                if nf >= best:
                    continue
                g[nidx] = ng
                ns_arr[nidx] = nns
                nd_arr[nidx] = nnd
                if want_parents:
                    parents[nidx] = idx
                heapq.heappush(heap, (nf, ng, nidx))
    if best_counts is None:
        return None
    return best, best_counts[0], best_counts[1], parents


def _endpoint_cells(grid: OccupancyGrid, a, b):
    axy = grid.cell_of(a)
    bxy = grid.cell_of(b)
    for name, (ix, iy) in (("start", axy), ("goal", bxy)):
        if grid.occupied[iy, ix]:
            raise PointInObstacleError(f"{name} point lies in an occupied cell")
    return axy[1] * grid.width + axy[0], bxy[1] * grid.width + bxy[0]


def shortest_path_length(grid: OccupancyGrid, a, b) -> float:
    """Length of the shortest 8-connected grid path between the cells holding
    a and b (straight moves cost res, diagonals res*sqrt(2))."""
    sidx, gidx = _endpoint_cells(grid, a, b)
    if sidx == gidx:
        return 0.0
    out = _astar_counts(grid.occupied.ravel(), grid.width, grid.height,
                        sidx, gidx, grid.resolution, want_parents=False)
    if out is None:
        raise UnreachableError("no grid path between the given points")
    return out[0]


def shortest_path(grid: OccupancyGrid, a, b) -> tuple[float, list[tuple[float, float]]]:
    """Shortest path length plus a world polyline through cell centers.
    The polyline starts at a and ends at b exactly."""
    sidx, gidx = _endpoint_cells(grid, a, b)
    ax, ay = float(a[0]), float(a[1])
    bx, by = float(b[0]), float(b[1])
    if sidx == gidx:
        return 0.0, [(ax, ay), (bx, by)]
    out = _astar_counts(grid.occupied.ravel(), grid.width, grid.height,
                        sidx, gidx, grid.resolution, want_parents=True)
    if out is None:
        raise UnreachableError("no grid path between the given points")
    length, _, _, parents = out
    cells = []
    idx = gidx
    while idx != -1:
        cells.append(idx)
        if idx == sidx:
            break
        idx = int(parents[idx])
    cells.reverse()
    pts = [(ax, ay)]
    for c in cells[1:-1]:
        pts.append(grid.cell_center(c % grid.width, c // grid.width))
    pts.append((bx, by))
    return length, pts


def _dijkstra_to_targets(grid: OccupancyGrid, source: int, targets: set[int]) -> dict[int, float]:
    """Exhaustive-relaxation Dijkstra with canonical costs; early exit once
    every target is settled.  Values match _astar_counts exactly."""
    occ_flat = grid.occupied.ravel()
    width, height = grid.width, grid.height
    res = grid.resolution
    diag = res * SQRT2
    n = width * height
    g = np.full(n, np.inf)
    ns_arr = np.zeros(n, dtype=np.int32)
    nd_arr = np.zeros(n, dtype=np.int32)
    g[source] = 0.0
    heap = [(0.0, source)]
    remaining = set(targets)
    remaining.discard(source)
    found: dict[int, float] = {t: 0.0 for t in targets if t == source}
    while heap and remaining:
        gv, idx = heapq.heappop(heap)
        if gv > g[idx]:
            continue
        if idx in remaining:
            remaining.discard(idx)
            found[idx] = gv
        ix, iy = idx % width, idx // width
        cns, cnd = int(ns_arr[idx]), int(nd_arr[idx])
        for dx, dy, isdiag in _MOVES:
            nx, ny = ix + dx, iy + dy
            if not (0 <= nx < width and 0 <= ny < height):
                continue
            nidx = ny * width + nx
            if occ_flat[nidx]:
                continue
            if isdiag and (occ_flat[iy * width + nx] or occ_flat[ny * width + ix]):
                continue
            nns, nnd = (cns, cnd + 1) if isdiag else (cns + 1, cnd)
            ng = _gval(nns, nnd, res, diag)
            if ng < g[nidx]:
                g[nidx] = ng
                ns_arr[nidx] = nns
                nd_arr[nidx] = nnd
                heapq.heappush(heap, (ng, nidx))
    return found


# ---------------------------------------------------------------------------
# Scenario and motion graph.


@dataclass(frozen=True)
class Spill:
    """A spill to be serviced.  volume in m^3, perimeter in m, risk is the
    dimensionless damage weight."""

    id: int
    centroid: tuple[float, float]
    volume: float
    perimeter: float
    risk: float


@dataclass
class Scenario:
    workspace: Workspace
    depot: tuple[float, float]
    spills: list[Spill]
    fleet_size: int
    v_transit: float
    v_encircle: float
    alpha_clean: float
    boom_length: float
    rng_seed: int | None = None

    def validate(self) -> None:
        self.workspace.validate()
        if self.fleet_size < 1:
            raise InvalidWorkspaceError("fleet_size must be >= 1")
        if not (self.v_transit > 0 and self.v_encircle > 0):
            raise InvalidWorkspaceError("speeds must be positive")
        if self.alpha_clean < 0:
            raise InvalidWorkspaceError("alpha_clean must be >= 0")
        ids = sorted(s.id for s in self.spills)
        if ids != list(range(1, len(self.spills) + 1)):
            raise InvalidWorkspaceError("spill ids must be 1..p")
        for s in self.spills:
            if s.volume < 0 or s.perimeter < 0 or s.risk < 0:
                raise InvalidWorkspaceError(f"spill {s.id} has negative attributes")


@dataclass
class MotionGraph:
    """Vertex 0 is the depot; vertices 1..p are spills.  cost[i, j] is the
    service-completion cost of going from i to j; cost[:, 0] and the diagonal
    are +inf (routes never return to the depot)."""

    cost: np.ndarray   # (p+1, p+1) float64
    risk: np.ndarray   # (p+1,) float64, risk[0] = 0

    @property
    def n_spills(self) -> int:
        return self.cost.shape[0] - 1


def service_time(spill: Spill, v_encircle: float, alpha_clean: float) -> float:
    """Encircling plus cleaning time for one spill."""
    return spill.perimeter / v_encircle + alpha_clean * spill.volume


def build_motion_graph(scenario: Scenario, grid: OccupancyGrid | None = None) -> MotionGraph:
    """All-pairs motion graph over depot and spill centroids.

    cost[i, j] = d(i, j) / v_transit + perimeter_j / v_encircle
                 + alpha_clean * volume_j
    with d the grid shortest-path length between centroids.
    """
    scenario.validate()
    if grid is None:
        grid = rasterize(scenario.workspace)
    p = len(scenario.spills)
    points = [scenario.depot] + [s.centroid for s in scenario.spills]
    names = ["depot"] + [f"spill {s.id}" for s in scenario.spills]
    cells = []
    for name, pt in zip(names, points):
        ix, iy = grid.cell_of(pt)
        if grid.occupied[iy, ix]:
            raise PointInObstacleError(f"{name} lies in an occupied cell")
        cells.append(iy * grid.width + ix)
    dist = np.full((p + 1, p + 1), np.inf)
    target_set = set(cells)
    for i, src in enumerate(cells):
        found = _dijkstra_to_targets(grid, src, target_set)
        for j, tgt in enumerate(cells):
            if tgt in found:
                dist[i, j] = found[tgt]
    for j in range(1, p + 1):
        if not math.isfinite(dist[0, j]):
            raise UnreachableError(f"spill {scenario.spills[j - 1].id} is unreachable from the depot")
    cost = np.full((p + 1, p + 1), np.inf)
    for j in range(1, p + 1):
        s = scenario.spills[j - 1]
        svc = service_time(s, scenario.v_encircle, scenario.alpha_clean)
        for i in range(p + 1):
            if i == j:
                continue
            if not math.isfinite(dist[i, j]):
                raise UnreachableError(f"spill {s.id} is unreachable from {names[i]}")
            cost[i, j] = dist[i, j] / scenario.v_transit + svc
    risk = np.zeros(p + 1)
    for s in scenario.spills:
        risk[s.id] = s.risk
    return MotionGraph(cost=cost, risk=risk)


# ---------------------------------------------------------------------------
# Random scenario generation.


@dataclass(frozen=True)
class ScenarioGenParams:
    bounds: tuple[float, float, float, float] = (0.0, 0.0, 600.0, 600.0)
    grid_resolution: float = 6.0
    depot: tuple[float, float] = (30.0, 30.0)
    n_obstacles: int = 5
    obstacle_size_range: tuple[float, float] = (40.0, 120.0)
    risk_range: tuple[float, float] = (1.0, 10.0)
    volume_range: tuple[float, float] = (1.0, 50.0)
    v_transit: float = 5.0
    v_encircle: float = 2.0
    alpha_clean: float = 10.0
    boom_length: float = 40.0
    max_tries_per_spill: int = 200


def perimeter_from_volume(volume: float) -> float:
    """Perimeter of the circle whose area equals the slick footprint at unit
    thickness (area in m^2 numerically equal to volume in m^3)."""
    return 2.0 * math.sqrt(math.pi * volume)


def _rotated_rect(cx, cy, w, h, angle):
    ca, sa = math.cos(angle), math.sin(angle)
    pts = []
    for ux, uy in ((-0.5, -0.5), (0.5, -0.5), (0.5, 0.5), (-0.5, 0.5)):
        px, py = ux * w, uy * h
        pts.append((cx + ca * px - sa * py, cy + sa * px + ca * py))
    return pts


def _depot_component(grid: OccupancyGrid, depot_idx: int) -> np.ndarray:
    """Cells reachable from the depot under the same movement rule as A*."""
    occ = grid.occupied.ravel()
    width, height = grid.width, grid.height
    seen = np.zeros(occ.shape[0], dtype=bool)
    seen[depot_idx] = True
    stack = [depot_idx]
    while stack:
        idx = stack.pop()
        ix, iy = idx % width, idx // width
        for dx, dy, isdiag in _MOVES:
            nx, ny = ix + dx, iy + dy
            if not (0 <= nx < width and 0 <= ny < height):
                continue
            nidx = ny * width + nx
            if seen[nidx] or occ[nidx]:
                continue
            if isdiag and (occ[iy * width + nx] or occ[ny * width + ix]):
                continue
            seen[nidx] = True
            stack.append(nidx)
    return seen


def generate_random_scenario(seed: int, p: int, k: int,
                             params: ScenarioGenParams | None = None) -> Scenario:
    """Deterministic random scenario: rotated-rectangle obstacles, spills
    uniform over the free region reachable from the depot, risk and volume
    uniform over the configured ranges."""
    if p < 0 or k < 1:
        raise PlacementError("need p >= 0 and k >= 1")
    gp = params or ScenarioGenParams()
    rng = random.Random(seed)
    xmin, ymin, xmax, ymax = gp.bounds

    depot = gp.depot
    obstacles: list[list[tuple[float, float]]] = []
    for _ in range(gp.n_obstacles):
        for _try in range(50):
            cx = rng.uniform(xmin, xmax)
            cy = rng.uniform(ymin, ymax)
            w = rng.uniform(*gp.obstacle_size_range)
            h = rng.uniform(*gp.obstacle_size_range)
            ang = rng.uniform(0.0, math.pi)
            pts = _rotated_rect(cx, cy, w, h, ang)
            margin = 2.0 * gp.grid_resolution
            if Polygon(pts).buffer(margin).contains(  # keep the depot cell clear
                    _box(depot[0] - 1e-6, depot[1] - 1e-6, depot[0] + 1e-6, depot[1] + 1e-6)):
                continue
            if Polygon(pts).distance(_box(depot[0] - margin, depot[1] - margin,
                                          depot[0] + margin, depot[1] + margin)) == 0.0:
                continue
            obstacles.append(pts)
            break

    workspace = Workspace(bounds=gp.bounds, obstacles=obstacles,
                          grid_resolution=gp.grid_resolution)
    grid = rasterize(workspace)
    dix, diy = grid.cell_of(depot)
    if grid.occupied[diy, dix]:
        raise PlacementError("depot cell is occupied")
    component = _depot_component(grid, diy * grid.width + dix)

    spills: list[Spill] = []
    for sid in range(1, p + 1):
        placed = False
        for _try in range(gp.max_tries_per_spill):
            x = rng.uniform(xmin, xmax)
            y = rng.uniform(ymin, ymax)
            risk = rng.uniform(*gp.risk_range)
            volume = rng.uniform(*gp.volume_range)
            ix, iy = grid.cell_of((x, y))
            if not component[iy * grid.width + ix]:
                continue
            spills.append(Spill(id=sid, centroid=(x, y), volume=volume,
                                perimeter=perimeter_from_volume(volume), risk=risk))
            placed = True
            break
        if not placed:
            raise PlacementError(f"could not place spill {sid} in free space")

    return Scenario(workspace=workspace, depot=depot, spills=spills,
                    fleet_size=k, v_transit=gp.v_transit, v_encircle=gp.v_encircle,
                    alpha_clean=gp.alpha_clean, boom_length=gp.boom_length,
                    rng_seed=seed)


# ---------------------------------------------------------------------------
# JSON serialization.


def scenario_to_json(scenario: Scenario) -> str:
    doc = {
        "workspace": {
            "bounds": list(scenario.workspace.bounds),
            "obstacles": [[list(pt) for pt in poly] for poly in scenario.workspace.obstacles],
            "grid_resolution": scenario.workspace.grid_resolution,
        },
        "depot": list(scenario.depot),
        "spills": [
            {
                "id": s.id,
                "centroid": list(s.centroid),
                "volume": s.volume,
                "perimeter": s.perimeter,
                "risk": s.risk,
            }
            for s in scenario.spills
        ],
        "fleet_size": scenario.fleet_size,
        "v_transit": scenario.v_transit,
        "v_encircle": scenario.v_encircle,
        "alpha_clean": scenario.alpha_clean,
        "boom_length": scenario.boom_length,
        "rng_seed": scenario.rng_seed,
    }
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def scenario_from_json(text: str) -> Scenario:
    doc = json.loads(text)
    ws = doc["workspace"]
    workspace = Workspace(
        bounds=tuple(ws["bounds"]),
        obstacles=[[tuple(pt) for pt in poly] for poly in ws["obstacles"]],
        grid_resolution=float(ws["grid_resolution"]),
    )
    spills = [
        Spill(id=int(s["id"]), centroid=tuple(s["centroid"]), volume=float(s["volume"]),
              perimeter=float(s["perimeter"]), risk=float(s["risk"]))
        for s in doc["spills"]
    ]
    scen = Scenario(
        workspace=workspace,
        depot=tuple(doc["depot"]),
        spills=spills,
        fleet_size=int(doc["fleet_size"]),
        v_transit=float(doc["v_transit"]),
        v_encircle=float(doc["v_encircle"]),
        alpha_clean=float(doc["alpha_clean"]),
        boom_length=float(doc["boom_length"]),
        rng_seed=doc.get("rng_seed"),
    )
    scen.validate()
    return scen
