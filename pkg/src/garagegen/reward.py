"""Constraint penalties and utility performance terms of the coloring reward."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .grid import Block, Grid, _cells, roadlike_mask, stall_capacity


class EmptyNetwork(ValueError):
    """The matrix holds no road-like cells."""


class Event(Enum):
    NONE = "none"
    COLLISION = "collision"
    NETWORK_VIOLATION = "network_violation"
    BACKWARD = "backward"
    ERROR_OVERFLOW = "error_overflow"
    REACHED_EXIT = "reached_exit"


T_JUNCTION = 3
CROSS = 4


def _default_length_weights() -> dict[int, float]:
    return {1: 0.0, 2: 0.2, 3: 0.4, 4: 0.6, 5: 0.8, 6: 1.0}


def _default_intersection_weights() -> dict[int, float]:
    return {T_JUNCTION: 0.4, CROSS: 1.0}


@dataclass
class RewardParams:
    k_c: float = 1.0
    k_u: float = 1.0
    w_s: float = 1.0
    w_r: float = 0.5
    w_c: float = 0.5
    collision_penalty: float = -10.0
    network_penalty: float = -5.0
    backward_penalty: float = -1.0
    overflow_penalty: float = -100.0
    connectivity_bonus: float = 100.0
    # run length -> weight; lengths above the largest key reuse its weight
    length_weights: dict[int, float] = field(default_factory=_default_length_weights)
    # junction degree (3 = T, 4 = cross) -> weight
    intersection_weights: dict[int, float] = field(default_factory=_default_intersection_weights)

    def __post_init__(self) -> None:
        if not (0.0 <= self.k_c <= 1.0 and 0.0 <= self.k_u <= 1.0):
            raise ValueError("k_c and k_u must lie in [0, 1]")
        if min(self.w_s, self.w_r, self.w_c) < 0:
            raise ValueError("utility weights must be non-negative")
        penalties = (
            self.collision_penalty,
            self.network_penalty,
            self.backward_penalty,
            self.overflow_penalty,
        )
        if max(penalties) > 0:
            raise ValueError("penalties must be <= 0")
        if self.connectivity_bonus < 0:
            raise ValueError("connectivity bonus must be >= 0")
        self.length_weights = {int(k): float(v) for k, v in self.length_weights.items()}
        self.intersection_weights = {
            int(k): float(v) for k, v in self.intersection_weights.items()
        }

    def length_weight(self, length: int) -> float:
        if length in self.length_weights:
            return self.length_weights[length]
        longest = max(self.length_weights)
        if length > longest:
            return self.length_weights[longest]
        return 0.0


@dataclass(frozen=True)
class PerformanceSnapshot:
    stalls: int
    road: float
    intersection: float


def constraint_reward(event: Event, p: RewardParams) -> float:
    return {
        Event.NONE: 0.0,
        Event.COLLISION: p.collision_penalty,
        Event.NETWORK_VIOLATION: p.network_penalty,
        Event.BACKWARD: p.backward_penalty,
        Event.ERROR_OVERFLOW: p.overflow_penalty,
        Event.REACHED_EXIT: p.connectivity_bonus,
    }[event]


def run_lengths(m: Grid) -> list[int]:
    """Lengths of maximal horizontal/vertical runs of road-like cells.

    A cell joins a horizontal run when its left or right neighbor is road-like
    (vertical likewise); a road-like cell with no road-like neighbor is a run of 1.
    """
    road = roadlike_mask(m)
    h, w = road.shape
    runs = []
    for grid in (road, road.T):
        for row in grid:
            n = 0
            for v in row:
                if v:
                    n += 1
                else:
                    if n >= 2:
                        runs.append(n)
                    n = 0
            if n >= 2:
                runs.append(n)
    padded = np.pad(road, 1)
    has_neighbor = padded[1:-1, :-2] | padded[1:-1, 2:] | padded[:-2, 1:-1] | padded[2:, 1:-1]
    runs.extend([1] * int((road & ~has_neighbor).sum()))
    return runs


def _distribution(values: list[int]) -> dict[int, float]:
    counts = Counter(values)
    total = len(values)
    return {k: counts[k] / total for k in sorted(counts)}


def road_length_distribution(m: Grid) -> dict[int, float]:
    runs = run_lengths(m)
    if not runs:
        raise EmptyNetwork("no road-like cells")
    return _distribution(runs)


def junction_degrees(m: Grid) -> list[int]:
    """ROAD-neighbor count of every ROAD cell that has at least three ROAD neighbors."""
    road = _cells(m) == Block.ROAD
    padded = np.pad(road, 1).astype(np.int8)
    adj = padded[1:-1, :-2] + padded[1:-1, 2:] + padded[:-2, 1:-1] + padded[2:, 1:-1]
    return [int(d) for d in adj[road & (adj >= 3)]]


def intersection_distribution(m: Grid) -> dict[int, float]:
    degrees = junction_degrees(m)
    if not degrees:
        return {}
    return _distribution(degrees)


def performance(m: Grid, p: RewardParams) -> PerformanceSnapshot:
    runs = run_lengths(m)
    road = 0.0
    if runs:
        road = sum(prob * p.length_weight(x) for x, prob in _distribution(runs).items())
    inter = sum(
        prob * p.intersection_weights.get(y, 0.0)
        for y, prob in intersection_distribution(m).items()
    )
    return PerformanceSnapshot(stall_capacity(m), road, inter)


def utility_reward(prev: PerformanceSnapshot, curr: PerformanceSnapshot, p: RewardParams) -> float:
    return (
        p.w_s * (curr.stalls - prev.stalls)
        + p.w_r * (curr.road - prev.road)
        + p.w_c * (curr.intersection - prev.intersection)
    )


def total_reward(r_c: float, r_u: float, p: RewardParams) -> float:
    return p.k_c * r_c + p.k_u * r_u
