"""SVG renderings of garages and coverage/difficulty heatmaps."""

from __future__ import annotations

from xml.sax.saxutils import escape

from .grid import Block, EncodingMatrix
from .metrics import BINS, Histogram2D

COLORS = {
    Block.FREE: "#f2f2f2",
    Block.ROAD: "#5b5b5b",
    Block.OBSTACLE: "#1d1d1d",
    Block.OBST_STALL3: "#c98b2f",
    Block.STALL3: "#f0b44c",
    Block.STALL4: "#8fc15d",
    Block.STALL6: "#4e9fd1",
    Block.ENTRANCE: "#3fb950",
    Block.EXIT: "#e5534b",
    Block.OBST_STALL4: "#5f8f3a",
}

CELL = 24


def render_matrix(m: EncodingMatrix) -> str:
    legend_w = 190
    w = m.width * CELL
    h = max(m.height * CELL, len(Block) * 18 + 10)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" '
             f'width="{w + legend_w}" height="{h}">']
    for r in range(m.height):
        for c in range(m.width):
            code = Block(int(m.cells[r, c]))
            parts.append(f'<rect class="cell" x="{c * CELL}" y="{r * CELL}" width="{CELL}" '
                         f'height="{CELL}" fill="{COLORS[code]}" stroke="#999" '
                         f'data-code="{int(code)}"/>')
    for i, code in enumerate(Block):
        y = 6 + i * 18
        parts.append(f'<rect class="legend" x="{w + 10}" y="{y}" width="12" height="12" '
                     f'fill="{COLORS[code]}"/>')
        parts.append(f'<text x="{w + 28}" y="{y + 11}" font-size="11">'
                     f'{int(code)} {escape(code.name)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_heatmap(hist: Histogram2D) -> str:
    size = 30
    left, bottom = 50, 40
    w = left + BINS * size + 10
    h = BINS * size + bottom + 10
    peak = max(1, int(hist.counts.max()))
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}">',
             f'<rect class="frame" x="{left}" y="10" width="{BINS * size}" height="{BINS * size}" '
             f'fill="none" stroke="#333"/>']
    for i in range(BINS):  # difficulty along x
        for j in range(BINS):  # coverage along y, upwards
            n = int(hist.counts[i, j])
            if n == 0:
                continue
            shade = 0.15 + 0.85 * n / peak
            parts.append(f'<rect class="bin" x="{left + i * size}" y="{10 + (BINS - 1 - j) * size}" '
                         f'width="{size}" height="{size}" fill="rgb(20,60,140)" '
                         f'fill-opacity="{shade:.3f}"><title>{n}</title></rect>')
    for k in range(BINS + 1):
        parts.append(f'<text x="{left + k * size}" y="{h - bottom + 25}" font-size="9" '
                     f'text-anchor="middle">{k / BINS:.1f}</text>')
        parts.append(f'<text x="{left - 6}" y="{10 + (BINS - k) * size + 3}" font-size="9" '
                     f'text-anchor="end">{k / BINS:.1f}</text>')
    parts.append(f'<text x="{left + BINS * size / 2}" y="{h - 2}" font-size="11" '
                 f'text-anchor="middle">difficulty</text>')
    parts.append(f'<text x="12" y="{10 + BINS * size / 2}" font-size="11" '
                 f'transform="rotate(-90 12 {10 + BINS * size / 2})" text-anchor="middle">coverage</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
