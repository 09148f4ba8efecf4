"""Road-network matrix, road/junction topology and reference-line geometry.

World frame used for emitted geometry: x grows east (with the column index),
y grows north, so a cell's center sits at ``(col*9 + 4.5, -(row*9 + 4.5))``.
Headings are measured counterclockwise from +x; 90 degrees points north
(towards row 0).

Junction cells keep a square of ``JUNCTION_SIZE`` meters in their middle for
the internal connecting roads; ordinary roads run up to its edge.  Two
directly adjacent junctions are joined by an implicit connector road
spanning the gap between their squares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import networkx as nx
import numpy as np

from .grid import EncodingMatrix, Position, roadlike_mask

BLOCK = 9.0
HALF = BLOCK / 2
JUNCTION_SIZE = 4.5
JUNCTION_HALF = JUNCTION_SIZE / 2
CURVE_RADIUS = HALF
LANE_WIDTH = 3.0

# heading (degrees) -> (d_row, d_col)
ARM_OFFSETS = {0: (0, 1), 90: (-1, 0), 180: (0, -1), 270: (1, 0)}
OFFSET_ARMS = {v: k for k, v in ARM_OFFSETS.items()}


class RoadnetError(ValueError):
    pass


class IsolatedRoadCell(RoadnetError):
    def __init__(self, pos: Position):
        super().__init__(f"road cell at {pos} has no road neighbor")
        self.pos = pos


class DisconnectedNetwork(RoadnetError):
    pass


class Kind(Enum):
    STRAIGHT = "straight"
    CURVE = "curve"
    T_JUNCTION = "t_junction"
    CROSS = "cross"
    ENDPOINT = "endpoint"

    @property
    def is_junction(self) -> bool:
        return self in (Kind.T_JUNCTION, Kind.CROSS)


@dataclass(frozen=True)
class RoadCell:
    kind: Kind
    center: tuple[float, float]  # meters, x east / y south (grid frame)
    heading: int
    grid_pos: Position
    arms: tuple[int, ...]


def cell_center(pos: Position) -> tuple[float, float]:
    """Center in the grid frame (x east, y south)."""
    return (pos[1] * BLOCK + HALF, pos[0] * BLOCK + HALF)


def world_center(pos: Position) -> tuple[float, float]:
    """Center in the emitted world frame (x east, y north)."""
    return (pos[1] * BLOCK + HALF, -(pos[0] * BLOCK + HALF))


def unit(deg: float) -> tuple[float, float]:
    rad = math.radians(deg)
    return (round(math.cos(rad), 15), round(math.sin(rad), 15))


def road_arms(road: np.ndarray, pos: Position) -> tuple[int, ...]:
    h, w = road.shape
    out = []
    for arm, (dr, dc) in ARM_OFFSETS.items():
        r, c = pos[0] + dr, pos[1] + dc
        if 0 <= r < h and 0 <= c < w and road[r, c]:
            out.append(arm)
    return tuple(out)


def kind_for_arms(arms: tuple[int, ...]) -> tuple[Kind, int]:
    """Road type and heading from the sorted set of road-neighbor directions."""
    arms = tuple(sorted(arms))
    n = len(arms)
    if n == 1:
        return Kind.ENDPOINT, arms[0]
    if n == 2:
        a, b = arms
        if b - a == 180:
            return Kind.STRAIGHT, a
        # heading is the arm whose counterclockwise neighbor is the other arm
        return Kind.CURVE, a if (a + 90) % 360 == b else b
    if n == 3:
        missing = ({0, 90, 180, 270} - set(arms)).pop()
        return Kind.T_JUNCTION, (missing + 180) % 360
    if n == 4:
        return Kind.CROSS, 0
    raise ValueError("no arms")


def classify(m: EncodingMatrix) -> dict[Position, RoadCell]:
    road = roadlike_mask(m)
    cells = {}
    for r, c in np.argwhere(road):
        pos = (int(r), int(c))
        arms = road_arms(road, pos)
        if not arms:
            raise IsolatedRoadCell(pos)
        kind, heading = kind_for_arms(arms)
        cells[pos] = RoadCell(kind, cell_center(pos), heading, pos, arms)
    return cells


# ---------------------------------------------------------------------------
# geometry


@dataclass(frozen=True)
class Geometry:
    """One planView primitive; ``curvature`` 0 means a straight line."""

    s: float
    x: float
    y: float
    hdg: float  # radians
    length: float
    curvature: float = 0.0

    def end_pose(self) -> tuple[float, float, float]:
        return advance(self.x, self.y, self.hdg, self.length, self.curvature)

    def sample(self, ds: float) -> list[tuple[float, float]]:
        n = max(1, int(math.ceil(self.length / ds - 1e-9)))
        out = []
        for i in range(n + 1):
            x, y, _ = advance(self.x, self.y, self.hdg, self.length * i / n, self.curvature)
            out.append((x, y))
        return out


def advance(x: float, y: float, hdg: float, length: float, curvature: float):
    if curvature == 0.0:
        return x + length * math.cos(hdg), y + length * math.sin(hdg), hdg
    h2 = hdg + curvature * length
    x2 = x + (math.sin(h2) - math.sin(hdg)) / curvature
    y2 = y - (math.cos(h2) - math.cos(hdg)) / curvature
    return x2, y2, h2


class _Path:
    """Accumulates connected primitives starting from a pose."""

    def __init__(self, x: float, y: float, hdg_deg: float):
        self.x, self.y, self.hdg = x, y, math.radians(hdg_deg)
        self.s = 0.0
        self.items: list[Geometry] = []

    def line(self, length: float) -> None:
        self._add(length, 0.0)

    def arc(self, turn_deg: int, radius: float) -> None:
        length = radius * math.pi / 2
        self._add(length, (1.0 if turn_deg > 0 else -1.0) / radius)

    def _add(self, length: float, curvature: float) -> None:
        g = Geometry(self.s, self.x, self.y, self.hdg, length, curvature)
        self.items.append(g)
        self.x, self.y, self.hdg = g.end_pose()
        self.s += length


def _turn(entry_arm: int, exit_arm: int) -> int:
    """Signed heading change when passing from ``entry_arm`` side to ``exit_arm`` side."""
    travel = (entry_arm + 180) % 360
    d = (exit_arm - travel) % 360
    return {0: 0, 90: 90, 270: -90}[d]


def cell_pieces(path: _Path, entry: int | None, exit: int | None, radius: float = CURVE_RADIUS):
    """Append the reference line through one grid cell (``None`` = cell center)."""
    if entry is None and exit is None:
        return
    if entry is None or exit is None:
        path.line(HALF)
        return
    turn = _turn(entry, exit)
    if turn == 0:
        path.line(BLOCK)
    else:
        path.arc(turn, radius)


def polyline_geometry(cells: list[Position], entry: int | None, exit: int | None,
                      pre: float = 0.0, post: float = 0.0) -> list[Geometry]:
    """Reference line through consecutive grid cells.

    ``entry``/``exit`` name the outer side of the first/last cell (``None``
    starts/ends at the cell center); ``pre``/``post`` extend the line beyond
    those sides by the given distance.
    """
    ports = []
    for i, pos in enumerate(cells):
        e_in = entry if i == 0 else OFFSET_ARMS[(cells[i - 1][0] - pos[0], cells[i - 1][1] - pos[1])]
        e_out = exit if i == len(cells) - 1 else OFFSET_ARMS[
            (cells[i + 1][0] - pos[0], cells[i + 1][1] - pos[1])
        ]
        ports.append((e_in, e_out))
    first_in, first_out = ports[0]
    cx, cy = world_center(cells[0])
    if first_in is None:
        path = _Path(cx, cy, first_out)
    else:
        ux, uy = unit(first_in)
        dist = HALF + pre
        path = _Path(cx + dist * ux, cy + dist * uy, (first_in + 180) % 360)
        if pre:
            path.line(pre)
    for e_in, e_out in ports:
        cell_pieces(path, e_in, e_out)
    if post:
        path.line(post)
    return path.items


# ---------------------------------------------------------------------------
# topology


@dataclass(frozen=True)
class Link:
    element_type: str  # "road" or "junction"
    element_id: int
    contact: str | None = None  # "start"/"end" when linking to a road


@dataclass
class Road:
    id: int
    kind: str  # "segment", "connector" or "connecting"
    geometry: list[Geometry]
    junction: int = -1
    predecessor: Link | None = None
    successor: Link | None = None
    cells: tuple[Position, ...] = ()

    @property
    def length(self) -> float:
        return sum(g.length for g in self.geometry)


@dataclass(frozen=True)
class Connection:
    id: int
    incoming_road: int
    connecting_road: int
    contact_point: str  # contact of the connecting road at the incoming side
    lane_from: int
    lane_to: int


@dataclass
class Junction:
    id: int
    connections: list[Connection] = field(default_factory=list)
    cell: Position | None = None

    def arms(self, roads: dict[int, Road]) -> set[tuple[int, str | None]]:
        """Distinct (incoming road, contact) pairs feeding this junction."""
        out = set()
        for conn in self.connections:
            pred = roads[conn.connecting_road].predecessor
            out.add((conn.incoming_road, pred.contact if pred else None))
        return out


@dataclass
class RoadTopology:
    roads: dict[int, Road]
    junctions: dict[int, Junction]

    def by_kind(self, kind: str) -> list[Road]:
        return [r for r in self.roads.values() if r.kind == kind]

    @property
    def segments(self) -> list[Road]:
        return self.by_kind("segment")

    @property
    def connectors(self) -> list[Road]:
        return self.by_kind("connector")

    @property
    def connecting_roads(self) -> list[Road]:
        return self.by_kind("connecting")

    def total_length(self, kinds=("segment", "connector", "connecting")) -> float:
        return sum(r.length for r in self.roads.values() if r.kind in kinds)


def _chains(cells: dict[Position, RoadCell]) -> list[tuple[list[Position], bool]]:
    """Maximal runs of non-junction cells as (ordered cells, is_cycle)."""
    plain = {p for p, rc in cells.items() if not rc.kind.is_junction}
    nbrs: dict[Position, list[Position]] = {}
    for p in plain:
        nbrs[p] = []
        for arm in cells[p].arms:
            dr, dc = ARM_OFFSETS[arm]
            q = (p[0] + dr, p[1] + dc)
            if q in plain:
                nbrs[p].append(q)
    seen: set[Position] = set()
    out = []
    for p in sorted(plain):
        if p in seen:
            continue
        comp = {p}
        stack = [p]
        while stack:
            for q in nbrs[stack.pop()]:
                if q not in comp:
                    comp.add(q)
                    stack.append(q)
        seen |= comp
        ends = sorted(q for q in comp if len(nbrs[q]) < 2)
        cycle = not ends
        start = ends[0] if ends else min(comp)
        order = [start]
        prev = None
        while True:
            nxt = [q for q in sorted(nbrs[order[-1]]) if q != prev and q not in order[-1:]]
            nxt = [q for q in nxt if q not in order]
            if not nxt:
                break
            prev = order[-1]
            order.append(nxt[0])
        out.append((order, cycle))
    return out


def build_topology(m: EncodingMatrix, cells: dict[Position, RoadCell] | None = None) -> RoadTopology:
    """Group classified cells into roads, junctions and junction-internal roads."""
    cells = classify(m) if cells is None else cells
    _check_connected(cells)
    junction_cells = sorted(p for p, rc in cells.items() if rc.kind.is_junction)
    jid = {p: i + 1 for i, p in enumerate(junction_cells)}
    roads: dict[int, Road] = {}
    # (junction cell, arm) -> (road id, contact of that road at the junction)
    attach: dict[tuple[Position, int], tuple[int, str]] = {}
    next_id = 1

    def neighbor(p: Position, arm: int) -> Position:
        dr, dc = ARM_OFFSETS[arm]
        return (p[0] + dr, p[1] + dc)

    for order, cycle in _chains(cells):
        first, last = order[0], order[-1]
        if cycle:
            entry = OFFSET_ARMS[(last[0] - first[0], last[1] - first[1])]
            exit_ = OFFSET_ARMS[(first[0] - last[0], first[1] - last[1])]
            geom = polyline_geometry(order, entry, exit_)
            rid = next_id
            next_id += 1
            roads[rid] = Road(rid, "segment", geom, -1,
                              Link("road", rid, "end"), Link("road", rid, "start"), tuple(order))
            continue
        inner_first = {OFFSET_ARMS[(q[0] - first[0], q[1] - first[1])] for q in order[1:2]}
        inner_last = {OFFSET_ARMS[(q[0] - last[0], q[1] - last[1])] for q in order[-2:-1]}
        outer_first = [a for a in cells[first].arms if a not in inner_first]
        outer_last = [a for a in cells[last].arms if a not in inner_last]
        if len(order) == 1:
            arms = list(cells[first].arms)
            outer_first, outer_last = (arms[:1], arms[1:]) if len(arms) == 2 else ([], arms)
        entry = outer_first[0] if outer_first else None
        exit_ = outer_last[0] if outer_last else None
        pre = (HALF - JUNCTION_HALF) if entry is not None else 0.0
        post = (HALF - JUNCTION_HALF) if exit_ is not None else 0.0
        geom = polyline_geometry(order, entry, exit_, pre, post)
        rid = next_id
        next_id += 1
        pred = succ = None
        if entry is not None:
            jc = neighbor(first, entry)
            pred = Link("junction", jid[jc])
            attach[(jc, (entry + 180) % 360)] = (rid, "start")
        if exit_ is not None:
            jc = neighbor(last, exit_)
            succ = Link("junction", jid[jc])
            attach[(jc, (exit_ + 180) % 360)] = (rid, "end")
        roads[rid] = Road(rid, "segment", geom, -1, pred, succ, tuple(order))

    for p in junction_cells:
        for arm in (0, 270):  # east and south neighbors: each adjacent pair once
            q = neighbor(p, arm)
            if q not in jid:
                continue
            ux, uy = unit(arm)
            cx, cy = world_center(p)
            path = _Path(cx + JUNCTION_HALF * ux, cy + JUNCTION_HALF * uy, arm)
            path.line(BLOCK - JUNCTION_SIZE)
            rid = next_id
            next_id += 1
            roads[rid] = Road(rid, "connector", path.items, -1,
                              Link("junction", jid[p]), Link("junction", jid[q]), (p, q))
            attach[(p, arm)] = (rid, "start")
            attach[(q, (arm + 180) % 360)] = (rid, "end")

    junctions: dict[int, Junction] = {}
    for p in junction_cells:
        j = Junction(jid[p], cell=p)
        arms = cells[p].arms
        cx, cy = world_center(p)
        for a_in in arms:
            for a_out in arms:
                if a_in == a_out:
                    continue
                in_road, in_contact = attach[(p, a_in)]
                out_road, out_contact = attach[(p, a_out)]
                ux, uy = unit(a_in)
                path = _Path(cx + JUNCTION_HALF * ux, cy + JUNCTION_HALF * uy, (a_in + 180) % 360)
                turn = _turn(a_in, a_out)
                if turn == 0:
                    path.line(JUNCTION_SIZE)
                else:
                    path.arc(turn, JUNCTION_HALF)
                rid = next_id
                next_id += 1
                roads[rid] = Road(rid, "connecting", path.items, jid[p],
                                  Link("road", in_road, in_contact),
                                  Link("road", out_road, out_contact), (p,))
                lane_from = -1 if in_contact == "end" else 1
                j.connections.append(
                    Connection(len(j.connections), in_road, rid, "start", lane_from, -1)
                )
        junctions[j.id] = j
    return RoadTopology(roads, junctions)


def _check_connected(cells: dict[Position, RoadCell]) -> None:
    if not cells:
        raise DisconnectedNetwork("no road cells")
    g = nx.Graph()
    g.add_nodes_from(cells)
    for p, rc in cells.items():
        for arm in rc.arms:
            dr, dc = ARM_OFFSETS[arm]
            g.add_edge(p, (p[0] + dr, p[1] + dc))
    if not nx.is_connected(g):
        raise DisconnectedNetwork(
            f"road network splits into {nx.number_connected_components(g)} components"
        )


def topology_graph(t: RoadTopology) -> nx.MultiGraph:
    """Roads outside junctions and junctions as nodes, links as edges."""
    g = nx.MultiGraph()
    for r in t.roads.values():
        if r.junction == -1:
            g.add_node(("road", r.id), kind="road")
    for j in t.junctions.values():
        g.add_node(("junction", j.id), kind="junction")
    road_links = set()
    for r in t.roads.values():
        if r.junction != -1:
            continue
        for own, link in (("start", r.predecessor), ("end", r.successor)):
            if link is None:
                continue
            if link.element_type == "junction":
                g.add_edge(("road", r.id), ("junction", link.element_id))
            else:
                road_links.add(frozenset({(r.id, own), (link.element_id, link.contact)}))
    for pair in sorted(road_links, key=lambda s: sorted(s)):
        ends = sorted(pair)
        a, b = ends[0], ends[-1]
        g.add_edge(("road", a[0]), ("road", b[0]))
    return g


def analytic_lengths(m: EncodingMatrix) -> tuple[float, float]:
    """Expected total length of (ordinary + connector roads, junction-internal roads).

    Derived from grid counts only: every road-adjacency contributes 9 m,
    every curve cell trades two 4.5 m half-steps for a quarter arc, each
    junction arm gives up its inner half-square to the junction.
    """
    road = roadlike_mask(m)
    edges = int((road[:, :-1] & road[:, 1:]).sum() + (road[:-1, :] & road[1:, :]).sum())
    n_curve = 0
    junction_arms = 0
    internal = 0.0
    for r, c in np.argwhere(road):
        arms = road_arms(road, (int(r), int(c)))
        if len(arms) == 2 and (arms[1] - arms[0]) != 180:
            n_curve += 1
        if len(arms) >= 3:
            junction_arms += len(arms)
            for a in arms:
                for b in arms:
                    if a == b:
                        continue
                    internal += JUNCTION_SIZE if abs(a - b) == 180 else JUNCTION_HALF * math.pi / 2
    outer = (BLOCK * edges - n_curve * (BLOCK - CURVE_RADIUS * math.pi / 2)
             - junction_arms * JUNCTION_HALF)
    return outer, internal


def sample_road(r: Road, ds: float = 1.0) -> list[tuple[float, float]]:
    pts: list[tuple[float, float]] = []
    for g in r.geometry:
        seg = g.sample(ds)
        pts.extend(seg if not pts else seg[1:])
    return pts


def world_to_cell(x: float, y: float) -> Position:
    return (int(math.floor(-y / BLOCK)), int(math.floor(x / BLOCK)))


def path_geometry(cells: list[Position]) -> list[Geometry]:
    """Reference line from the center of the first cell to the center of the last."""
    if len(cells) == 1:
        return []
    return polyline_geometry(cells, None, None)
