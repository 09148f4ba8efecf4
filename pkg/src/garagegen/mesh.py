"""Block-assembled floor mesh written as Wavefront OBJ text.

Coordinates: x east, y north (``-row``), z up, meters.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .grid import Block, EncodingMatrix, STALL_CODES, neighbor_codes
from .roadnet import BLOCK

WALL_HEIGHT = 3.0
PILLAR_SIZE = 0.6
PILLAR_HEIGHT = 3.0
STALL_WIDTH = 3.0
STALL_DEPTH = 5.4
SIX_STALL_DEPTH = BLOCK / 2
MARKING_Z = 0.01

MATERIALS = ("floor", "stall-marking", "pillar", "wall")

_ROADLIKE = (Block.ROAD, Block.ENTRANCE, Block.EXIT)


@dataclass
class MeshModel:
    vertices: list[tuple[float, float, float]] = field(default_factory=list)
    faces: list[tuple[int, ...]] = field(default_factory=list)  # 0-based vertex indices
    materials: list[str] = field(default_factory=list)  # one tag per face

    def quad(self, corners, material: str) -> None:
        base = len(self.vertices)
        self.vertices.extend(corners)
        self.faces.append(tuple(range(base, base + 4)))
        self.materials.append(material)

    def box(self, x0, y0, x1, y1, height, material: str) -> None:
        base = len(self.vertices)
        for z in (0.0, height):
            self.vertices.extend([(x0, y0, z), (x1, y0, z), (x1, y1, z), (x0, y1, z)])
        b = base
        for face in (
            (b, b + 3, b + 2, b + 1),  # bottom
            (b + 4, b + 5, b + 6, b + 7),  # top
            (b, b + 1, b + 5, b + 4),
            (b + 1, b + 2, b + 6, b + 5),
            (b + 2, b + 3, b + 7, b + 6),
            (b + 3, b, b + 4, b + 7),
        ):
            self.faces.append(face)
            self.materials.append(material)

    def count(self, material: str) -> int:
        return self.materials.count(material)

    def to_obj(self, name: str = "garage") -> str:
        lines = [f"# garage mesh: {len(self.vertices)} vertices, {len(self.faces)} faces",
                 f"o {name}"]
        lines += [f"v {x:.4f} {y:.4f} {z:.4f}" for x, y, z in self.vertices]
        current = None
        for face, mat in zip(self.faces, self.materials):
            if mat != current:
                lines.append(f"usemtl {mat}")
                current = mat
            lines.append("f " + " ".join(str(i + 1) for i in face))
        return "\n".join(lines) + "\n"


def stall_rects(code: int) -> list[tuple[float, float, float, float]]:
    """Stall outlines (u0, u1, v0, v1) in block-local coordinates.

    u runs along the road edge, v away from it.
    """
    row = [(i * STALL_WIDTH, (i + 1) * STALL_WIDTH) for i in range(3)]
    if code in (Block.STALL3, Block.OBST_STALL3):
        return [(u0, u1, 0.0, STALL_DEPTH) for u0, u1 in row]
    if code in (Block.STALL4, Block.OBST_STALL4):
        # three along the road, one turned sideways behind them
        rects = [(u0, u1, 0.0, STALL_DEPTH) for u0, u1 in row]
        rects.append((0.0, STALL_DEPTH, STALL_DEPTH, STALL_DEPTH + STALL_WIDTH))
        return rects
    if code == Block.STALL6:
        return [(u0, u1, v0, v0 + SIX_STALL_DEPTH) for v0 in (0.0, SIX_STALL_DEPTH) for u0, u1 in row]
    return []


def _to_world(r: int, c: int, side: int, u: float, v: float) -> tuple[float, float]:
    x0, yt = c * BLOCK, -r * BLOCK
    if side == 0:  # road to the west
        return x0 + v, yt - u
    if side == 1:  # north
        return x0 + u, yt - v
    if side == 2:  # east
        return x0 + BLOCK - v, yt - u
    return x0 + u, yt - BLOCK + v  # south


def _pillar_corners(m: EncodingMatrix) -> list[tuple[int, int]]:
    cells = m.cells
    out = []
    for i in range(1, m.height):
        for j in range(1, m.width):
            around = [int(cells[i - 1, j - 1]), int(cells[i - 1, j]), int(cells[i, j - 1]),
                      int(cells[i, j])]
            if any(a in _ROADLIKE for a in around) and any(a in STALL_CODES for a in around):
                out.append((i, j))
    return out


def emit_mesh(m: EncodingMatrix) -> MeshModel:
    mesh = MeshModel()
    cells = m.cells
    for r in range(m.height):
        for c in range(m.width):
            code = int(cells[r, c])
            x0, y1 = c * BLOCK, -r * BLOCK
            x1, y0 = x0 + BLOCK, y1 - BLOCK
            if code == Block.OBSTACLE:
                mesh.box(x0, y0, x1, y1, WALL_HEIGHT, "wall")
                continue
            mesh.quad([(x0, y0, 0.0), (x1, y0, 0.0), (x1, y1, 0.0), (x0, y1, 0.0)], "floor")
            if code not in STALL_CODES:
                continue
            codes = neighbor_codes(cells, (r, c))
            side = next(i for i, nb in enumerate(codes) if nb in _ROADLIKE) if any(
                nb in _ROADLIKE for nb in codes) else 3
            for u0, u1, v0, v1 in stall_rects(code):
                pts = [_to_world(r, c, side, u, v) for u, v in ((u0, v0), (u1, v0), (u1, v1), (u0, v1))]
                mesh.quad([(x, y, MARKING_Z) for x, y in pts], "stall-marking")
    half = PILLAR_SIZE / 2
    for i, j in _pillar_corners(m):
        x, y = j * BLOCK, -i * BLOCK
        mesh.box(x - half, y - half, x + half, y + half, PILLAR_HEIGHT, "pillar")
    return mesh


def pillar_positions(m: EncodingMatrix) -> list[tuple[float, float]]:
    """Pillar centers in the world frame."""
    return [(j * BLOCK, -i * BLOCK) for i, j in _pillar_corners(m)]
