"""Bundled initial maps."""

from __future__ import annotations

from importlib import resources

from .grid import EncodingMatrix, parse_initial_map

BUNDLED = (
    "corridor_5x5",
    "garage_11x7",
    "garage_13x13_offset",
    "garage_13x13_aligned",
    "garage_13x13_s",
    "garage_13x13_u",
)


def map_text(name: str) -> str:
    return resources.files("garagegen.data.maps").joinpath(f"{name}.txt").read_text()


def load_map(name: str) -> EncodingMatrix:
    """Load a bundled map by name (see ``BUNDLED``)."""
    if name not in BUNDLED:
        raise KeyError(f"unknown bundled map {name!r}; choose from {', '.join(BUNDLED)}")
    return parse_initial_map(map_text(name))
