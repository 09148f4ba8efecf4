"""Coverage and difficulty scoring of generated garages."""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .grid import NEIGHBOR_OFFSETS, Block, EncodingMatrix, Position, roadlike_mask, stall_mask
from .reward import EmptyNetwork, run_lengths


class DimensionMismatch(ValueError):
    pass


class NoFreeBlocks(ValueError):
    pass


class NoStalls(ValueError):
    pass


class DegenerateRange(ValueError):
    pass


# (road-length range, junction-count range)
RANGE_PRESETS = {
    "text": ((2.0, 6.0), (2.0, 4.0)),
    "table-compat": ((2.0, 4.0), (2.0, 6.0)),
}


@dataclass(frozen=True)
class MetricsConfig:
    road_range: tuple[float, float] = RANGE_PRESETS["text"][0]
    junction_range: tuple[float, float] = RANGE_PRESETS["text"][1]
    w1: float = 0.33
    w2: float = 0.67

    @classmethod
    def preset(cls, name: str, w1: float = 0.33, w2: float = 0.67) -> "MetricsConfig":
        road, junction = RANGE_PRESETS[name]
        return cls(road, junction, w1, w2)


def coverage(final: EncodingMatrix, initial: EncodingMatrix) -> float:
    """Share of the initially FREE blocks that are no longer FREE."""
    if final.cells.shape != initial.cells.shape:
        raise DimensionMismatch(f"{final.cells.shape} vs {initial.cells.shape}")
    n0 = int((initial.cells == Block.FREE).sum())
    if n0 == 0:
        raise NoFreeBlocks("initial map has no FREE blocks")
    return 1.0 - int((final.cells == Block.FREE).sum()) / n0


def junction_mask(m: EncodingMatrix) -> np.ndarray:
    """ROAD cells with at least three ROAD neighbors."""
    road = m.cells == Block.ROAD
    p = np.pad(road, 1).astype(np.int8)
    adj = p[1:-1, :-2] + p[1:-1, 2:] + p[:-2, 1:-1] + p[2:, 1:-1]
    return road & (adj >= 3)


def stall_targets(m: EncodingMatrix) -> list[Position]:
    """Road-like cells touching at least one stall block, in row-major order."""
    road = roadlike_mask(m)
    stall = np.pad(stall_mask(m), 1)
    touches = stall[1:-1, :-2] | stall[1:-1, 2:] | stall[:-2, 1:-1] | stall[2:, 1:-1]
    return [(int(r), int(c)) for r, c in np.argwhere(road & touches)]


def shortest_paths(m: EncodingMatrix) -> dict[Position, list[Position]]:
    """Entrance-rooted shortest road paths to every reachable road-like cell.

    Among equally short paths the one crossing the fewest junction cells is
    kept; remaining ties go to the first parent in left/top/right/down order.
    """
    road = roadlike_mask(m)
    junction = junction_mask(m)
    h, w = road.shape
    start = m.entrance
    dist = {start: 0}
    cost = {start: int(junction[start])}
    parent: dict[Position, Position | None] = {start: None}
    queue = deque([start])
    order = []
    while queue:
        cur = queue.popleft()
        order.append(cur)
        for dr, dc in NEIGHBOR_OFFSETS:
            nxt = (cur[0] + dr, cur[1] + dc)
            if not (0 <= nxt[0] < h and 0 <= nxt[1] < w) or not road[nxt]:
                continue
            if nxt not in dist:
                dist[nxt] = dist[cur] + 1
                queue.append(nxt)
            if dist[nxt] == dist[cur] + 1:
                c = cost[cur] + int(junction[nxt])
                if nxt not in cost or c < cost[nxt]:
                    cost[nxt] = c
                    parent[nxt] = cur
    paths = {}
    for cell in order:
        path = [cell]
        while parent[path[-1]] is not None:
            path.append(parent[path[-1]])
        paths[cell] = path[::-1]
    return paths


def expectations(m: EncodingMatrix) -> tuple[float, float]:
    """Mean run length and mean junction count along entrance-to-stall paths."""
    runs = run_lengths(m)
    if not runs:
        raise EmptyNetwork("no road-like cells")
    ex = float(np.mean(runs))
    paths = shortest_paths(m)
    junction = junction_mask(m)
    counts = [sum(int(junction[p]) for p in paths[t]) for t in stall_targets(m) if t in paths]
    if not counts:
        raise NoStalls("no stall is reachable from the entrance")
    return ex, float(np.mean(counts))


def hardness(e: float, lo: float, hi: float) -> float:
    """``1 - (e - lo) / (hi - lo)`` clamped to [0, 1]; larger means harder."""
    if hi <= lo:
        raise DegenerateRange(f"range ({lo}, {hi}) is empty")
    return min(1.0, max(0.0, (hi - e) / (hi - lo)))


def difficulty(h1: float, h2: float, w1: float = 0.33, w2: float = 0.67) -> float:
    return w1 * h1 + w2 * h2


@dataclass(frozen=True)
class GarageRecord:
    index: int
    matrix: EncodingMatrix
    usable: bool
    delta: float
    ex: float = math.nan
    ey: float = math.nan
    h1: float = math.nan
    h2: float = math.nan
    lam: float = math.nan

    @property
    def scoreable(self) -> bool:
        return not math.isnan(self.lam)

    @property
    def content_hash(self) -> str:
        return self.matrix.content_hash()


def score(
    index: int,
    final: EncodingMatrix,
    initial: EncodingMatrix,
    usable: bool,
    cfg: MetricsConfig = MetricsConfig(),
) -> GarageRecord:
    delta = coverage(final, initial)
    try:
        ex, ey = expectations(final)
    except (EmptyNetwork, NoStalls):
        return GarageRecord(index, final, usable, delta)
    h1 = hardness(ex, *cfg.road_range)
    h2 = hardness(ey, *cfg.junction_range)
    return GarageRecord(index, final, usable, delta, ex, ey, h1, h2, difficulty(h1, h2, cfg.w1, cfg.w2))


def dedupe(records: list) -> list:
    """Keep the first record per matrix content, preserving order."""
    seen = set()
    out = []
    for rec in records:
        key = rec.matrix.content_hash()
        if key not in seen:
            seen.add(key)
            out.append(rec)
    return out


BINS = 10


def _bin(v: float) -> int:
    return min(BINS - 1, int(math.floor(v * BINS + 1e-9)))


@dataclass
class Histogram2D:
    """Counts indexed ``[difficulty bin, coverage bin]`` with 0.1-wide bins."""

    counts: np.ndarray

    @classmethod
    def empty(cls) -> "Histogram2D":
        return cls(np.zeros((BINS, BINS), dtype=np.int64))

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def to_csv(self) -> str:
        header = "difficulty_bin," + ",".join(f"delta_{i / BINS:.1f}" for i in range(BINS))
        rows = [header]
        for i in range(BINS):
            rows.append(f"{i / BINS:.1f}," + ",".join(str(int(v)) for v in self.counts[i]))
        return "\n".join(rows) + "\n"


def heatmap(records: list[GarageRecord]) -> Histogram2D:
    hist = Histogram2D.empty()
    for rec in records:
        if rec.usable and rec.scoreable:
            hist.counts[_bin(rec.lam), _bin(rec.delta)] += 1
    return hist


SCORES_HEADER = "index,usable,delta,ex,ey,h1,h2,lambda"


def scores_csv(records: list[GarageRecord]) -> str:
    lines = [SCORES_HEADER]
    for r in records:
        vals = [r.delta, r.ex, r.ey, r.h1, r.h2, r.lam]
        lines.append(f"{r.index},{int(r.usable)}," + ",".join(f"{v:.6f}" for v in vals))
    return "\n".join(lines) + "\n"
