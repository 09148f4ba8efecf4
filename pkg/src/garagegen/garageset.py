"""Reading and writing garage-set files.

Each record is a header line ``# episode=<n> usable=<0|1> seed=<s>`` followed
by the digit grid of the final matrix; records are separated by blank lines.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import Path

from .grid import EncodingMatrix, GridError, parse_initial_map

_HEADER = re.compile(r"^#\s*episode=(\d+)\s+usable=([01])\s+seed=(-?\d+)\s*$")


class GarageSetError(ValueError):
    pass


@dataclass(frozen=True)
class GarageEntry:
    episode: int
    usable: bool
    seed: int
    matrix: EncodingMatrix


def format_garage_set(entries: list[GarageEntry]) -> str:
    blocks = []
    for e in entries:
        header = f"# episode={e.episode} usable={int(e.usable)} seed={e.seed}"
        blocks.append(header + "\n" + e.matrix.to_text())
    return "\n\n".join(blocks) + ("\n" if blocks else "")


def parse_garage_set(text: str) -> list[GarageEntry]:
    entries: list[GarageEntry] = []
    lines = text.splitlines()
    i = 0
    while i < len(lines):
        if not lines[i].strip():
            i += 1
            continue
        m = _HEADER.match(lines[i].strip())
        if m is None:
            raise GarageSetError(f"line {i + 1}: expected record header, got {lines[i]!r}")
        start = i + 1
        j = start
        while j < len(lines) and lines[j].strip() and not lines[j].startswith("#"):
            j += 1
        if j == start:
            raise GarageSetError(f"line {i + 1}: record has no matrix rows")
        try:
            matrix = parse_initial_map("\n".join(lines[start:j]))
        except GridError as exc:
            raise GarageSetError(f"lines {start + 1}-{j}: {exc}") from exc
        entries.append(GarageEntry(int(m[1]), m[2] == "1", int(m[3]), matrix))
        i = j
    return entries


def write_garage_set(path: str | Path, entries: list[GarageEntry]) -> None:
    Path(path).write_text(format_garage_set(entries))


def read_garage_set(path: str | Path) -> list[GarageEntry]:
    return parse_garage_set(Path(path).read_text())
