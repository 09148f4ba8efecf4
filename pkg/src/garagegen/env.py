"""Partially observable coloring environment."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from . import grid
from .grid import Axis, Block, EncodingMatrix, Position
from .reward import (
    Event,
    PerformanceSnapshot,
    RewardParams,
    constraint_reward,
    performance,
    total_reward,
    utility_reward,
)

N_CODES = 10


class Action(IntEnum):
    LEFT = 0
    RIGHT = 1
    UP = 2
    DOWN = 3


DELTAS = {
    Action.LEFT: (0, -1),
    Action.RIGHT: (0, 1),
    Action.UP: (-1, 0),
    Action.DOWN: (1, 0),
}
OPPOSITE = {
    Action.LEFT: Action.RIGHT,
    Action.RIGHT: Action.LEFT,
    Action.UP: Action.DOWN,
    Action.DOWN: Action.UP,
}


class NoLegalStart(RuntimeError):
    pass


class EpisodeFinished(RuntimeError):
    pass


@dataclass
class EnvConfig:
    visibility_k: int = 5
    max_error: int = 10
    max_steps: int | None = None  # None -> 4 * width * height
    axis_policy: str = "random"  # "random" per episode or "fixed"
    fixed_axis: Axis = Axis.EAST_WEST
    reward: RewardParams = field(default_factory=RewardParams)
    seed: int = 0

    def __post_init__(self) -> None:
        if self.visibility_k < 1 or self.visibility_k % 2 == 0:
            raise ValueError("visibility_k must be a positive odd integer")
        if self.max_error < 1:
            raise ValueError("max_error must be >= 1")
        if self.max_steps is not None and self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.axis_policy not in ("random", "fixed"):
            raise ValueError(f"unknown axis policy {self.axis_policy!r}")
        if isinstance(self.fixed_axis, str):
            self.fixed_axis = Axis(self.fixed_axis)

    def step_budget(self, m: EncodingMatrix) -> int:
        return self.max_steps if self.max_steps is not None else 4 * m.width * m.height


@dataclass(frozen=True)
class Observation:
    visibility: np.ndarray  # k x k block codes, off-grid padded with OBSTACLE
    error_index: int
    coverage: float
    connected: bool
    orientation: Action


@dataclass(frozen=True)
class StepOutcome:
    observation: Observation
    reward: float
    done: bool
    events: tuple[Event, ...]
    reached_exit: bool

    @property
    def violation(self) -> Event | None:
        for ev in self.events:
            if ev in (Event.COLLISION, Event.NETWORK_VIOLATION):
                return ev
        return None


def encode_observation(o: Observation, max_error: int) -> np.ndarray:
    """Flatten an observation to ``k*k*10 + 7`` reals in [0, 1]."""
    onehot = np.zeros((o.visibility.size, N_CODES))
    onehot[np.arange(o.visibility.size), o.visibility.ravel()] = 1.0
    orient = np.zeros(4)
    orient[int(o.orientation)] = 1.0
    tail = [min(1.0, o.error_index / max_error), o.coverage, float(o.connected)]
    return np.concatenate([onehot.ravel(), tail, orient])


def decode_visibility(vec: np.ndarray, k: int) -> np.ndarray:
    return vec[: k * k * N_CODES].reshape(k * k, N_CODES).argmax(axis=1).reshape(k, k)


def observation_size(k: int) -> int:
    return k * k * N_CODES + 7


def initial_orientation(m: EncodingMatrix) -> Action:
    r, c = m.entrance
    for action in Action:
        dr, dc = DELTAS[action]
        pos = (r + dr, c + dc)
        if grid.in_bounds(m, pos) and m.cells[pos] != Block.OBSTACLE:
            return action
    raise NoLegalStart(f"entrance at {m.entrance} is enclosed by obstacles")


class GarageEnv:
    """One coloring episode at a time over a fixed initial map."""

    def __init__(self, initial: EncodingMatrix, cfg: EnvConfig | None = None):
        self.initial = initial
        self.cfg = cfg or EnvConfig()
        self.max_steps = self.cfg.step_budget(initial)
        self._initial_free = initial.cells == Block.FREE
        self._n_free = max(1, int(self._initial_free.sum()))
        self.cells: np.ndarray = initial.cells.copy()
        self.done = True

    # -- lifecycle -----------------------------------------------------

    def reset(self, seed: int | None = None) -> Observation:
        rng = np.random.default_rng(self.cfg.seed if seed is None else seed)
        if self.cfg.axis_policy == "random":
            self.axis = Axis.NORTH_SOUTH if rng.integers(2) == 0 else Axis.EAST_WEST
        else:
            self.axis = self.cfg.fixed_axis
        self.cells = self.initial.cells.copy()
        self.pos: Position = self.initial.entrance
        self.orientation = initial_orientation(self.initial)
        self.error_index = 0
        self.connected = False
        self.steps = 0
        self.done = False
        self._perf = performance(self.cells, self.cfg.reward)
        return self.observe()

    def step(self, action: Action | int) -> StepOutcome:
        if self.done:
            raise EpisodeFinished("step() called on a finished episode")
        action = Action(int(action))
        p = self.cfg.reward
        self.steps += 1
        events: list[Event] = []
        r_u = 0.0
        reached = False

        dr, dc = DELTAS[action]
        target = (self.pos[0] + dr, self.pos[1] + dc)
        if not grid.in_bounds(self.cells, target) or self.cells[target] == Block.OBSTACLE:
            events.append(Event.COLLISION)
            self.error_index += 1
        elif self.cells[target] not in (Block.ENTRANCE, Block.EXIT) and grid.creates_2x2_road(
            self.cells, target
        ):
            events.append(Event.NETWORK_VIOLATION)
            self.error_index += 1
        else:
            if action == OPPOSITE[self.orientation]:
                events.append(Event.BACKWARD)
            code = self.cells[target]
            if code not in (Block.ENTRANCE, Block.EXIT):
                self.cells[target] = Block.ROAD
            grid.recolor_neighbors(self.cells, target, self.axis)
            self.pos = target
            self.orientation = action
            perf = performance(self.cells, p)
            r_u = utility_reward(self._perf, perf, p)
            self._perf = perf
            if code == Block.EXIT:
                reached = True
                self.connected = True
                events.append(Event.REACHED_EXIT)
                self.done = True

        if self.error_index > self.cfg.max_error:
            events.append(Event.ERROR_OVERFLOW)
            self.done = True
        if self.steps >= self.max_steps:
            self.done = True

        r_c = sum(constraint_reward(ev, p) for ev in events)
        reward = total_reward(r_c, r_u, p)
        return StepOutcome(self.observe(), reward, self.done, tuple(events), reached)

    # -- observation ---------------------------------------------------

    def coverage_rate(self) -> float:
        changed = self._initial_free & (self.cells != Block.FREE)
        return float(changed.sum()) / self._n_free

    def visibility(self) -> np.ndarray:
        k = self.cfg.visibility_k
        half = k // 2
        padded = np.pad(self.cells, half, constant_values=Block.OBSTACLE)
        r, c = self.pos
        return padded[r : r + k, c : c + k].copy()

    def observe(self) -> Observation:
        return Observation(
            visibility=self.visibility(),
            error_index=self.error_index,
            coverage=self.coverage_rate(),
            connected=self.connected,
            orientation=self.orientation,
        )

    def encode(self, o: Observation) -> np.ndarray:
        return encode_observation(o, self.cfg.max_error)

    def garage(self) -> EncodingMatrix:
        return EncodingMatrix(self.cells.copy(), self.initial.entrance, self.initial.exit)

    @property
    def snapshot(self) -> PerformanceSnapshot:
        return self._perf
