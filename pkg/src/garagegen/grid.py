"""Block taxonomy, encoding matrices and the coloring state machine."""

from __future__ import annotations

import hashlib
from collections import deque
from dataclasses import dataclass
from enum import Enum, IntEnum
from typing import Iterator, Union

import numpy as np


class GridError(ValueError):
    """Base class for malformed-map errors."""


class NonRectangular(GridError):
    pass


class InvalidCode(GridError):
    pass


class EntranceExitCount(GridError):
    pass


class OutOfBounds(IndexError):
    pass


class Block(IntEnum):
    FREE = 0
    ROAD = 1
    OBSTACLE = 2
    OBST_STALL3 = 3
    STALL3 = 4
    STALL4 = 5
    STALL6 = 6
    ENTRANCE = 7
    EXIT = 8
    OBST_STALL4 = 9


STALL_CODES = frozenset(
    {Block.OBST_STALL3, Block.STALL3, Block.STALL4, Block.STALL6, Block.OBST_STALL4}
)
ROADLIKE_CODES = frozenset({Block.ROAD, Block.ENTRANCE, Block.EXIT})
OBST_STALL_CODES = frozenset({Block.OBST_STALL3, Block.OBST_STALL4})

STALL_CAPACITY = {
    Block.OBST_STALL3: 3,
    Block.STALL3: 3,
    Block.STALL4: 4,
    Block.OBST_STALL4: 4,
    Block.STALL6: 6,
}

# lookup tables indexed by code
_CAPACITY_LUT = np.zeros(10, dtype=np.int64)
for _code, _cap in STALL_CAPACITY.items():
    _CAPACITY_LUT[_code] = _cap
_STALL_LUT = np.zeros(10, dtype=bool)
_STALL_LUT[list(STALL_CODES)] = True
_ROADLIKE_LUT = np.zeros(10, dtype=bool)
_ROADLIKE_LUT[list(ROADLIKE_CODES)] = True


class Axis(Enum):
    """Facing direction required of six-stall blocks for one episode."""

    NORTH_SOUTH = "NS"
    EAST_WEST = "EW"


Position = tuple[int, int]  # (row, col)

# Neighbor order used everywhere: left, top, right, down.
NEIGHBOR_OFFSETS: tuple[Position, ...] = ((0, -1), (-1, 0), (0, 1), (1, 0))


@dataclass(frozen=True, eq=False)
class EncodingMatrix:
    """Immutable garage grid with its entrance and exit positions.

    ``cells`` is a read-only ``(height, width)`` int8 array of block codes.
    """

    cells: np.ndarray
    entrance: Position
    exit: Position

    def __post_init__(self) -> None:
        cells = np.array(self.cells, dtype=np.int8)
        if cells.ndim != 2 or cells.size == 0:
            raise NonRectangular("encoding matrix must be a non-empty 2-D grid")
        if cells.min() < 0 or cells.max() > 9:
            raise InvalidCode("block codes must lie in 0..9")
        ent = np.argwhere(cells == Block.ENTRANCE)
        ext = np.argwhere(cells == Block.EXIT)
        if len(ent) != 1 or len(ext) != 1:
            raise EntranceExitCount(
                f"need exactly one entrance and one exit, got {len(ent)} and {len(ext)}"
            )
        if tuple(ent[0]) != tuple(self.entrance) or tuple(ext[0]) != tuple(self.exit):
            raise GridError("entrance/exit fields disagree with cell contents")
        cells.setflags(write=False)
        object.__setattr__(self, "cells", cells)
        object.__setattr__(self, "entrance", (int(ent[0][0]), int(ent[0][1])))
        object.__setattr__(self, "exit", (int(ext[0][0]), int(ext[0][1])))

    @classmethod
    def from_array(cls, cells) -> "EncodingMatrix":
        arr = np.asarray(cells, dtype=np.int8)
        ent = np.argwhere(arr == Block.ENTRANCE)
        ext = np.argwhere(arr == Block.EXIT)
        if len(ent) != 1 or len(ext) != 1:
            raise EntranceExitCount(
                f"need exactly one entrance and one exit, got {len(ent)} and {len(ext)}"
            )
        return cls(arr, tuple(ent[0]), tuple(ext[0]))

    @property
    def height(self) -> int:
        return self.cells.shape[0]

    @property
    def width(self) -> int:
        return self.cells.shape[1]

    def __getitem__(self, pos: Position) -> Block:
        return Block(int(self.cells[pos]))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, EncodingMatrix):
            return NotImplemented
        return np.array_equal(self.cells, other.cells)

    def __hash__(self) -> int:
        return hash(self.content_hash())

    def to_text(self) -> str:
        return "\n".join("".join(str(int(c)) for c in row) for row in self.cells)

    def content_hash(self) -> str:
        """Stable digest of the dimensions and block codes."""
        h = hashlib.sha1(f"{self.height}x{self.width}:".encode())
        h.update(self.to_text().encode())
        return h.hexdigest()[:16]

    def positions(self) -> Iterator[Position]:
        for r in range(self.height):
            for c in range(self.width):
                yield (r, c)


Grid = Union[EncodingMatrix, np.ndarray]


def _cells(m: Grid) -> np.ndarray:
    return m.cells if isinstance(m, EncodingMatrix) else m


def parse_initial_map(text: str) -> EncodingMatrix:
    """Parse a digit-grid map (one digit per block, rows separated by newlines)."""
    lines = [ln.strip() for ln in text.strip().splitlines()]
    lines = [ln for ln in lines if ln]
    if not lines:
        raise NonRectangular("empty map")
    width = len(lines[0])
    rows = []
    for i, ln in enumerate(lines):
        if len(ln) != width:
            raise NonRectangular(f"row {i} has length {len(ln)}, expected {width}")
        if not all(ch in "0123456789" for ch in ln):
            bad = next(ch for ch in ln if ch not in "0123456789")
            raise InvalidCode(f"row {i}: invalid block code {bad!r}")
        rows.append([int(ch) for ch in ln])
    return EncodingMatrix.from_array(np.array(rows, dtype=np.int8))


def in_bounds(m: Grid, pos: Position) -> bool:
    h, w = _cells(m).shape
    return 0 <= pos[0] < h and 0 <= pos[1] < w


def _check(m: Grid, pos: Position) -> np.ndarray:
    cells = _cells(m)
    if not in_bounds(cells, pos):
        raise OutOfBounds(f"position {pos} outside {cells.shape[0]}x{cells.shape[1]} grid")
    return cells


def neighbor_codes(cells: np.ndarray, pos: Position) -> list[int]:
    """Codes of the four neighbors (left, top, right, down); off-grid reads as OBSTACLE."""
    h, w = cells.shape
    r, c = pos
    out = []
    for dr, dc in NEIGHBOR_OFFSETS:
        rr, cc = r + dr, c + dc
        if 0 <= rr < h and 0 <= cc < w:
            out.append(int(cells[rr, cc]))
        else:
            out.append(int(Block.OBSTACLE))
    return out


def adj_count(m: Grid, b: Position) -> int:
    """Number of ROAD blocks among the four neighbors of ``b``."""
    cells = _check(m, b)
    return sum(code == Block.ROAD for code in neighbor_codes(cells, b))


def sym_flag(m: Grid, b: Position) -> bool:
    cells = _check(m, b)
    left, top, right, down = (code == Block.ROAD for code in neighbor_codes(cells, b))
    return (left and right) or (top and down)


def creates_2x2_road(m: Grid, candidate: Position) -> bool:
    """Would turning ``candidate`` into ROAD complete an all-ROAD 2x2 square?"""
    cells = _check(m, candidate)
    h, w = cells.shape
    r, c = candidate
    for r0 in (r - 1, r):
        for c0 in (c - 1, c):
            if r0 < 0 or c0 < 0 or r0 + 1 >= h or c0 + 1 >= w:
                continue
            if all(
                (rr, cc) == candidate or cells[rr, cc] == Block.ROAD
                for rr in (r0, r0 + 1)
                for cc in (c0, c0 + 1)
            ):
                return True
    return False


def stall_type_for(codes: list[int], axis: Axis) -> Block | None:
    """Stall code for a block whose neighbors are ``codes`` (left, top, right, down).

    Returns ``None`` when the block has no ROAD neighbor.
    """
    left, top, right, down = (code == Block.ROAD for code in codes)
    adj = left + top + right + down
    if adj == 0:
        return None
    horizontal = left and right
    vertical = top and down
    if horizontal or vertical:
        # roads on both east and west sides -> stalls face east-west
        if (horizontal and axis is Axis.EAST_WEST) or (vertical and axis is Axis.NORTH_SOUTH):
            return Block.STALL6
        return Block.STALL3
    blocked = any(code == Block.OBSTACLE for code in codes)
    if adj == 2:
        return Block.OBST_STALL4 if blocked else Block.STALL4
    if adj == 1:
        return Block.OBST_STALL3 if blocked else Block.STALL3
    return Block.STALL3


def recolor_neighbors(cells: np.ndarray, pos: Position, axis: Axis) -> None:
    """In-place: retype FREE/stall neighbors of ``pos`` from their current neighborhood."""
    h, w = cells.shape
    r, c = pos
    for dr, dc in NEIGHBOR_OFFSETS:
        rr, cc = r + dr, c + dc
        if not (0 <= rr < h and 0 <= cc < w):
            continue
        code = cells[rr, cc]
        if code != Block.FREE and not _STALL_LUT[code]:
            continue
        new = stall_type_for(neighbor_codes(cells, (rr, cc)), axis)
        if new is not None:
            cells[rr, cc] = new


def apply_coloring(m: EncodingMatrix, newly_road: Position, axis: Axis) -> EncodingMatrix:
    """Return a copy of ``m`` with the neighbors of ``newly_road`` retyped."""
    _check(m, newly_road)
    cells = m.cells.copy()
    recolor_neighbors(cells, newly_road, axis)
    return EncodingMatrix(cells, m.entrance, m.exit)


def roadlike_mask(m: Grid) -> np.ndarray:
    return _ROADLIKE_LUT[_cells(m)]


def stall_mask(m: Grid) -> np.ndarray:
    return _STALL_LUT[_cells(m)]


def connectivity(m: EncodingMatrix) -> bool:
    """Breadth-first search from entrance to exit over road-like cells."""
    cells = m.cells
    h, w = cells.shape
    road = _ROADLIKE_LUT[cells]
    seen = {m.entrance}
    queue = deque([m.entrance])
    while queue:
        r, c = queue.popleft()
        if (r, c) == m.exit:
            return True
        for dr, dc in NEIGHBOR_OFFSETS:
            nxt = (r + dr, c + dc)
            if 0 <= nxt[0] < h and 0 <= nxt[1] < w and road[nxt] and nxt not in seen:
                seen.add(nxt)
                queue.append(nxt)
    return False


def stall_capacity(m: Grid) -> int:
    return int(_CAPACITY_LUT[_cells(m)].sum())


def has_2x2_road(m: Grid) -> bool:
    road = _cells(m) == Block.ROAD
    return bool((road[:-1, :-1] & road[1:, :-1] & road[:-1, 1:] & road[1:, 1:]).any())


def invariant_violations(m: EncodingMatrix) -> list[str]:
    """Structural problems of a finished garage; empty when it is well formed."""
    problems = []
    if not connectivity(m):
        problems.append("entrance and exit are not road-connected")
    if has_2x2_road(m):
        problems.append("contains a 2x2 all-ROAD square")
    cells = m.cells
    for pos in m.positions():
        code = int(cells[pos])
        if code not in STALL_CODES:
            continue
        codes = neighbor_codes(cells, pos)
        if Block.ROAD not in codes:
            problems.append(f"stall at {pos} has no ROAD neighbor")
        if code in OBST_STALL_CODES and Block.OBSTACLE not in codes:
            problems.append(f"obstructed stall at {pos} has no OBSTACLE neighbor")
    return problems
