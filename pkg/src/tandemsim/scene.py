"""Scenes, occupancy grids, and navigation queries.

A scene is a 2D axis-aligned floor plan: outer bounds, interior wall
segments, receptacles (furniture surfaces at a height), and spawn regions.
Navigation runs on a uniform occupancy grid rasterized from the walls with
configuration-space inflation by the agent radius.

Grid metric: 8-connected, orthogonal step cost = cell_size, diagonal step
cost = cell_size*sqrt(2), diagonal moves forbidden when either orthogonal
neighbor is blocked. All distances returned by `geodesic_distance` and
`shortest_path` are canonicalized as
``n_orth * cell_size + n_diag * (cell_size * sqrt(2))`` so that equal paths
compare bit-equal regardless of traversal order.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateGrid, OffGrid, ParseError, Unreachable, ValidationError
from .geometry import point_segment_distances, ray_hit_segments

SCENE_SCHEMA = "scene/1"
SQRT2 = math.sqrt(2.0)

# Floor-area thresholds (m^2) for the size-class tag carried by scenes.
SIZE_CLASS_BOUNDS = {
    "small": (0.0, 100.0),
    "medium": (100.0, 400.0),
    "large": (400.0, math.inf),
}

DEFAULT_CELL_SIZE = 0.10
DEFAULT_SNAP_RADIUS = 0.5


@dataclass(frozen=True)
class Receptacle:
    name: str
    rect: tuple[float, float, float, float]  # (x0, y0, x1, y1)
    height: float
    open: bool

    @property
    def center(self) -> tuple[float, float]:
        x0, y0, x1, y1 = self.rect
        return ((x0 + x1) * 0.5, (y0 + y1) * 0.5)

    @property
    def area(self) -> float:
        x0, y0, x1, y1 = self.rect
        return (x1 - x0) * (y1 - y0)

    def surface_point(self) -> tuple[float, float, float]:
        cx, cy = self.center
        return (cx, cy, self.height)

    def contains_xy(self, x: float, y: float) -> bool:
        x0, y0, x1, y1 = self.rect
        return x0 <= x <= x1 and y0 <= y <= y1


@dataclass(frozen=True)
class Scene:
    id: str
    bounds: tuple[float, float, float, float]
    walls: tuple[tuple[float, float, float, float], ...]
    receptacles: tuple[Receptacle, ...]
    spawn_regions: tuple[tuple[float, float, float, float], ...]
    size_class: str
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def floor_area(self) -> float:
        x0, y0, x1, y1 = self.bounds
        return (x1 - x0) * (y1 - y0)

    def boundary_segments(self) -> list[tuple[float, float, float, float]]:
        x0, y0, x1, y1 = self.bounds
        return [(x0, y0, x1, y0), (x1, y0, x1, y1), (x1, y1, x0, y1), (x0, y1, x0, y0)]

    def all_segments(self) -> np.ndarray:
        """Walls plus the implicit perimeter, as an (M, 4) array. Cached."""
        cached = self._cache.get("segments")
        if cached is None:
            cached = np.asarray(
                list(self.walls) + self.boundary_segments(), dtype=np.float64
            ).reshape(-1, 4)
            self._cache["segments"] = cached
        return cached

    def receptacle(self, name: str) -> Receptacle:
        for r in self.receptacles:
            if r.name == name:
                return r
        raise KeyError(name)

    def grid(self, cell_size: float = DEFAULT_CELL_SIZE, agent_radius: float = 0.0) -> "OccupancyGrid":
        key = (round(cell_size, 9), round(agent_radius, 9))
        if key not in self._cache:
            self._cache[key] = rasterize(self, cell_size, agent_radius)
        return self._cache[key]


def _validate_scene(raw: dict, origin: str) -> Scene:
    if raw.get("schema") != SCENE_SCHEMA:
        raise ParseError(f"{origin}: expected schema {SCENE_SCHEMA!r}, got {raw.get('schema')!r}")
    try:
        bounds = tuple(float(v) for v in raw["bounds"])
        walls = tuple(tuple(float(v) for v in w) for w in raw.get("walls", []))
        size_class = str(raw["size_class"])
        receptacles = tuple(
            Receptacle(
                name=str(r["name"]),
                rect=tuple(float(v) for v in r["rect"]),
                height=float(r["height"]),
                open=bool(r["open"]),
            )
            for r in raw.get("receptacles", [])
        )
        spawn_regions = tuple(
            tuple(float(v) for v in s) for s in raw.get("spawn_regions", [])
        )
        scene_id = str(raw["id"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ParseError(f"{origin}: malformed scene document ({exc})") from exc

    if len(bounds) != 4 or bounds[2] <= bounds[0] or bounds[3] <= bounds[1]:
        raise ValidationError(f"{origin}: bounds {bounds} are not a positive rectangle")
    x0, y0, x1, y1 = bounds
    for i, w in enumerate(walls):
        if len(w) != 4:
            raise ValidationError(f"{origin}: wall #{i} does not have 4 coordinates")
        if math.hypot(w[2] - w[0], w[3] - w[1]) <= 0.0:
            raise ValidationError(f"{origin}: wall #{i} has zero length")
    for r in receptacles:
        if r.area <= 0.0:
            raise ValidationError(f"{origin}: receptacle {r.name!r} has non-positive area")
        rx0, ry0, rx1, ry1 = r.rect
        if rx0 < x0 or ry0 < y0 or rx1 > x1 or ry1 > y1:
            raise ValidationError(f"{origin}: receptacle {r.name!r} lies outside bounds")
    for i, s in enumerate(spawn_regions):
        if len(s) != 4 or s[2] <= s[0] or s[3] <= s[1]:
            raise ValidationError(f"{origin}: spawn region #{i} is not a positive rectangle")
        if s[0] < x0 or s[1] < y0 or s[2] > x1 or s[3] > y1:
            raise ValidationError(f"{origin}: spawn region #{i} lies outside bounds")
    if size_class not in SIZE_CLASS_BOUNDS:
        raise ValidationError(f"{origin}: unknown size class {size_class!r}")
    lo, hi = SIZE_CLASS_BOUNDS[size_class]
    area = (x1 - x0) * (y1 - y0)
    if not (lo <= area < hi):
        raise ValidationError(
            f"{origin}: size class {size_class!r} does not match floor area {area:.2f} m^2"
        )
    return Scene(
        id=scene_id,
        bounds=bounds,
        walls=walls,
        receptacles=receptacles,
        spawn_regions=spawn_regions,
        size_class=size_class,
    )


def scene_from_dict(raw: dict, origin: str = "<dict>") -> Scene:
    return _validate_scene(raw, origin)


def scene_to_dict(scene: Scene) -> dict:
    return {
        "schema": SCENE_SCHEMA,
        "id": scene.id,
        "size_class": scene.size_class,
        "bounds": list(scene.bounds),
        "walls": [list(w) for w in scene.walls],
        "receptacles": [
            {"name": r.name, "rect": list(r.rect), "height": r.height, "open": r.open}
            for r in scene.receptacles
        ],
        "spawn_regions": [list(s) for s in scene.spawn_regions],
    }


def load_scene(path) -> Scene:
    try:
        with open(path) as f:
            raw = json.load(f)
    except OSError as exc:
        raise ParseError(f"{path}: cannot read scene file ({exc})") from exc
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc
    if not isinstance(raw, dict):
        raise ParseError(f"{path}: scene document must be a JSON object")
    return _validate_scene(raw, str(path))


class OccupancyGrid:
    """Immutable rasterized navigability of a scene for one agent radius."""

    def __init__(self, scene: Scene, cell_size: float, agent_radius: float,
                 blocked: np.ndarray, origin: tuple[float, float]):
        self.scene = scene
        self.cell_size = float(cell_size)
        self.agent_radius = float(agent_radius)
        self.origin = origin
        self.blocked = blocked  # bool, shape (nx, ny), True = blocked
        self.blocked.setflags(write=False)
        self.nx, self.ny = blocked.shape
        self.diag_cost = self.cell_size * SQRT2
        self._free1d = ~blocked.reshape(-1)
        self.free_flat = np.flatnonzero(self._free1d)
        self.n_free = len(self.free_flat)
        # search scratch, reused across queries via epoch stamps
        n = self.nx * self.ny
        self._stamp = np.zeros(n, dtype=np.int64)
        self._gkey = np.zeros(n, dtype=np.float64)
        self._north = np.zeros(n, dtype=np.int32)
        self._ndiag = np.zeros(n, dtype=np.int32)
        self._parent = np.full(n, -1, dtype=np.int64)
        self._done = np.zeros(n, dtype=np.int64)
        self._epoch = 0
        self._csr = None

    # -- cell addressing -------------------------------------------------

    def cell_of(self, point) -> tuple[int, int]:
        ix = int(math.floor((point[0] - self.origin[0]) / self.cell_size))
        iy = int(math.floor((point[1] - self.origin[1]) / self.cell_size))
        return ix, iy

    def center_of(self, cell: tuple[int, int]) -> tuple[float, float]:
        return (
            self.origin[0] + (cell[0] + 0.5) * self.cell_size,
            self.origin[1] + (cell[1] + 0.5) * self.cell_size,
        )

    def flat(self, cell: tuple[int, int]) -> int:
        return cell[0] * self.ny + cell[1]

    def unflat(self, idx: int) -> tuple[int, int]:
        return divmod(idx, self.ny)

    def in_bounds(self, cell) -> bool:
        return 0 <= cell[0] < self.nx and 0 <= cell[1] < self.ny

    def is_free_cell(self, cell) -> bool:
        return self.in_bounds(cell) and not self.blocked[cell[0], cell[1]]

    def is_free_point(self, point) -> bool:
        return self.is_free_cell(self.cell_of(point))

    def line_is_free(self, a, b) -> bool:
        """True when every half-cell sample on segment a-b lies in a free cell
        (i.e. the straight line is traversable at this grid's inflation)."""
        d = math.hypot(b[0] - a[0], b[1] - a[1])
        if d < 1e-9:
            return self.is_free_point(a)
        n = max(2, int(math.ceil(d / (self.cell_size * 0.5))))
        for k in range(n + 1):
            t = k / n
            if not self.is_free_point((a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1]))):
                return False
        return True

    def snap(self, point, snap_radius: float = DEFAULT_SNAP_RADIUS) -> tuple[int, int]:
        """Nearest free cell to a point, or OffGrid if none within snap_radius."""
        cell = self.cell_of(point)
        if self.is_free_cell(cell):
            return cell
        k = int(math.ceil(snap_radius / self.cell_size))
        best = None
        for dx in range(-k, k + 1):
            for dy in range(-k, k + 1):
                c = (cell[0] + dx, cell[1] + dy)
                if not self.is_free_cell(c):
                    continue
                cx, cy = self.center_of(c)
                d = math.hypot(cx - point[0], cy - point[1])
                if d <= snap_radius and (best is None or (d, c) < best):
                    best = (d, c)
        if best is None:
            raise OffGrid(f"point {tuple(point)} has no free cell within {snap_radius} m")
        return best[1]

    # -- canonical grid search -------------------------------------------

    def _run_search(self, start_flat: int, goal_flat: int | None) -> int:
        """A* toward goal_flat (octile heuristic, early exit) or full
        Dijkstra when goal_flat is None. Results live in the scratch arrays
        stamped with the returned epoch."""
        self._epoch += 1
        epoch = self._epoch
        ny = self.ny
        free = self._free1d
        cs, dc = self.cell_size, self.diag_cost
        stamp, gkey = self._stamp, self._gkey
        north, ndiag = self._north, self._ndiag
        parent, done = self._parent, self._done

        if goal_flat is not None:
            gx, gy = divmod(goal_flat, ny)

            def heur(ix: int, iy: int) -> float:
                ax = abs(ix - gx)
                ay = abs(iy - gy)
                if ax < ay:
                    ax, ay = ay, ax
                return (ax - ay) * cs + ay * dc
        else:
            heur = None

        stamp[start_flat] = epoch
        gkey[start_flat] = 0.0
        north[start_flat] = 0
        ndiag[start_flat] = 0
        parent[start_flat] = -1
        sx, sy = divmod(start_flat, ny)
        h0 = heur(sx, sy) if heur is not None else 0.0
        heap = [(h0, start_flat)]
        nx_total = self.nx
        while heap:
            fkey, cur = heapq.heappop(heap)
            if done[cur] == epoch:
                continue
            done[cur] = epoch
            if goal_flat is not None and cur == goal_flat:
                return epoch
            ix, iy = divmod(cur, ny)
            g = gkey[cur]
            no = north[cur]
            nd = ndiag[cur]
            # orthogonal neighbors
            for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                jx = ix + dx
                jy = iy + dy
                if jx < 0 or jx >= nx_total or jy < 0 or jy >= ny:
                    continue
                nb = jx * ny + jy
                if not free[nb] or done[nb] == epoch:
                    continue
                ng = g + cs
                if stamp[nb] != epoch or ng < gkey[nb]:
                    stamp[nb] = epoch
                    gkey[nb] = ng
                    north[nb] = no + 1
                    ndiag[nb] = nd
                    parent[nb] = cur
                    heapq.heappush(heap, (ng + (heur(jx, jy) if heur else 0.0), nb))
            # diagonal neighbors, no corner cutting
            for dx, dy in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                jx = ix + dx
                jy = iy + dy
                if jx < 0 or jx >= nx_total or jy < 0 or jy >= ny:
                    continue
                nb = jx * ny + jy
                if not free[nb] or done[nb] == epoch:
                    continue
                if not free[jx * ny + iy] or not free[ix * ny + jy]:
                    continue
                ng = g + dc
                if stamp[nb] != epoch or ng < gkey[nb]:
                    stamp[nb] = epoch
                    gkey[nb] = ng
                    north[nb] = no
                    ndiag[nb] = nd + 1
                    parent[nb] = cur
                    heapq.heappush(heap, (ng + (heur(jx, jy) if heur else 0.0), nb))
        return epoch

    def canonical_distance_at(self, flat_idx: int, epoch: int) -> float:
        """Canonical distance for a cell reached in search `epoch`, else inf."""
        if self._stamp[flat_idx] != epoch or self._done[flat_idx] != epoch:
            return math.inf
        return float(self._north[flat_idx]) * self.cell_size + float(
            self._ndiag[flat_idx]
        ) * self.diag_cost

    def distance_field(self, source_cell: tuple[int, int]) -> "DistanceField":
        """Full single-source field of canonical distances."""
        epoch = self._run_search(self.flat(source_cell), None)
        reached = self._stamp == epoch
        dist = np.full(self.nx * self.ny, np.inf)
        dist[reached] = (
            self._north[reached].astype(np.float64) * self.cell_size
            + self._ndiag[reached].astype(np.float64) * self.diag_cost
        )
        return DistanceField(self, dist)

    # -- scipy planning substrate (fast, non-canonical) --------------------

    def csr_graph(self):
        """8-connected sparse adjacency over free cells, built lazily."""
        if self._csr is None:
            self._csr = self._build_csr()
        return self._csr

    def _build_csr(self):
        from scipy.sparse import csr_matrix

        free2d = ~self.blocked
        n = self.nx * self.ny
        idx = np.arange(n).reshape(self.nx, self.ny)
        pairs = []
        m = free2d[:-1, :] & free2d[1:, :]
        pairs.append((idx[:-1, :][m], idx[1:, :][m], self.cell_size))
        m = free2d[:, :-1] & free2d[:, 1:]
        pairs.append((idx[:, :-1][m], idx[:, 1:][m], self.cell_size))
        m = free2d[:-1, :-1] & free2d[1:, 1:] & free2d[1:, :-1] & free2d[:-1, 1:]
        pairs.append((idx[:-1, :-1][m], idx[1:, 1:][m], self.diag_cost))
        m = free2d[:-1, 1:] & free2d[1:, :-1] & free2d[1:, 1:] & free2d[:-1, :-1]
        pairs.append((idx[:-1, 1:][m], idx[1:, :-1][m], self.diag_cost))
        rows = np.concatenate([a for a, _, _ in pairs] + [b for _, b, _ in pairs])
        cols = np.concatenate([b for _, b, _ in pairs] + [a for a, _, _ in pairs])
        data = np.concatenate([np.full(len(a), w) for a, _, w in pairs] * 2)
        return csr_matrix((data, (rows, cols)), shape=(n, n))

    def plan_field(self, source_cell: tuple[int, int], limit: float = math.inf,
                   blocked_flat=None):
        """(distances, predecessors) from scipy Dijkstra; fast path planning.

        Distances are float accumulations (not canonical); use
        `geodesic_distance` when exact canonical values matter. blocked_flat
        masks extra cells (e.g. a temporary obstacle) out of the graph.
        """
        from scipy.sparse.csgraph import dijkstra

        graph = self.csr_graph()
        if blocked_flat is not None and len(blocked_flat):
            from scipy.sparse import diags

            mask = np.ones(self.nx * self.ny)
            mask[np.asarray(blocked_flat, dtype=np.int64)] = 0.0
            d = diags(mask)
            graph = d @ graph @ d
        dist, pred = dijkstra(
            graph,
            directed=False,
            indices=self.flat(source_cell),
            return_predecessors=True,
            limit=limit,
        )
        return dist, pred

    def cells_within(self, center_xy, radius: float) -> np.ndarray:
        """Flat indices of cells whose centers lie within radius of a point."""
        cx, cy = self.cell_of(center_xy)
        k = int(math.ceil(radius / self.cell_size)) + 1
        out = []
        for dx in range(-k, k + 1):
            for dy in range(-k, k + 1):
                cell = (cx + dx, cy + dy)
                if not self.in_bounds(cell):
                    continue
                px, py = self.center_of(cell)
                if math.hypot(px - center_xy[0], py - center_xy[1]) <= radius:
                    out.append(self.flat(cell))
        return np.asarray(out, dtype=np.int64)


class DistanceField:
    """Canonical single-source distances over a grid."""

    def __init__(self, grid: OccupancyGrid, dist: np.ndarray):
        self.grid = grid
        self._dist = dist

    def at_cell(self, cell: tuple[int, int]) -> float:
        return float(self._dist[self.grid.flat(cell)])

    def at_point(self, point, snap_radius: float = DEFAULT_SNAP_RADIUS) -> float:
        return self.at_cell(self.grid.snap(point, snap_radius))


def rasterize(scene: Scene, cell_size: float, agent_radius: float) -> OccupancyGrid:
    """Occupancy grid with configuration-space inflation by agent_radius.

    A cell is blocked when its center is within agent_radius of any wall
    (inclusive) or outside the scene bounds.
    """
    if cell_size <= 0:
        raise ValueError("cell_size must be > 0")
    if agent_radius < 0:
        raise ValueError("agent_radius must be >= 0")
    x0, y0, x1, y1 = scene.bounds
    nx = max(1, int(math.ceil((x1 - x0) / cell_size - 1e-9)))
    ny = max(1, int(math.ceil((y1 - y0) / cell_size - 1e-9)))
    xs = x0 + (np.arange(nx) + 0.5) * cell_size
    ys = y0 + (np.arange(ny) + 0.5) * cell_size
    cx, cy = np.meshgrid(xs, ys, indexing="ij")
    centers = np.stack([cx.reshape(-1), cy.reshape(-1)], axis=1)
    blocked = (
        (centers[:, 0] < x0)
        | (centers[:, 0] > x1)
        | (centers[:, 1] < y0)
        | (centers[:, 1] > y1)
    )
    segments = scene.all_segments()
    if len(segments):
        d = point_segment_distances(centers, segments).min(axis=1)
        blocked |= d <= agent_radius
    grid = OccupancyGrid(scene, cell_size, agent_radius, blocked.reshape(nx, ny), (x0, y0))
    if grid.n_free < 4:
        raise DegenerateGrid(
            f"scene {scene.id!r} at cell {cell_size} m / radius {agent_radius} m "
            f"leaves only {grid.n_free} free cells"
        )
    return grid


def geodesic_distance(grid: OccupancyGrid, a, b,
                      snap_radius: float = DEFAULT_SNAP_RADIUS) -> float:
    """Length of the shortest 8-connected path between the snapped cells."""
    ca = grid.snap(a, snap_radius)
    cb = grid.snap(b, snap_radius)
    if ca == cb:
        return 0.0
    epoch = grid._run_search(grid.flat(ca), grid.flat(cb))
    d = grid.canonical_distance_at(grid.flat(cb), epoch)
    if math.isinf(d):
        raise Unreachable(f"no path between {tuple(a)} and {tuple(b)}")
    return d


def shortest_path(grid: OccupancyGrid, a, b,
                  snap_radius: float = DEFAULT_SNAP_RADIUS) -> list[tuple[float, float]]:
    """Waypoints (cell centers) from the cell nearest a to the cell nearest b."""
    ca = grid.snap(a, snap_radius)
    cb = grid.snap(b, snap_radius)
    if ca == cb:
        return [grid.center_of(ca)]
    start, goal = grid.flat(ca), grid.flat(cb)
    epoch = grid._run_search(start, goal)
    if grid._done[goal] != epoch:
        raise Unreachable(f"no path between {tuple(a)} and {tuple(b)}")
    cells = []
    cur = goal
    while cur != -1:
        cells.append(cur)
        if cur == start:
            break
        cur = int(grid._parent[cur])
    cells.reverse()
    return [grid.center_of(grid.unflat(c)) for c in cells]


def raycast(scene: Scene, origin, direction, max_range: float) -> float:
    """Exact distance to the nearest wall along a unit direction, or max_range."""
    if max_range <= 0:
        raise ValueError("max_range must be > 0")
    n = math.hypot(direction[0], direction[1])
    if abs(n - 1.0) > 1e-6:
        raise ValueError("direction must be a unit vector")
    return ray_hit_segments(origin, direction, scene.all_segments(), max_range)


def sample_navigable_point(grid: OccupancyGrid, rng: np.random.Generator) -> tuple[float, float]:
    """Uniform over free cells, jittered inside the cell."""
    if grid.n_free < 1:
        raise DegenerateGrid("grid has no free cells")
    flat = int(grid.free_flat[int(rng.integers(grid.n_free))])
    cx, cy = grid.center_of(grid.unflat(flat))
    jx, jy = rng.uniform(-0.5, 0.5, 2) * grid.cell_size
    return (cx + float(jx), cy + float(jy))
