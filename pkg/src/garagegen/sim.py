"""Kinematic cruise test: noisy pure-pursuit driving along entrance-to-stall paths."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .grid import EncodingMatrix, Position, roadlike_mask
from .mesh import PILLAR_SIZE, pillar_positions
from .metrics import NoStalls, shortest_paths, stall_targets
from .roadnet import BLOCK, path_geometry, world_center

CAR_LENGTH = 4.5
CAR_WIDTH = 1.8
REAR_OVERHANG = (CAR_LENGTH - 2.7) / 2
SUCCESS_RADIUS = 2.0
MAX_STEER = math.radians(35.0)


class Outcome(Enum):
    SUCCESS = "success"
    COLLISION = "collision"
    TIMEOUT = "timeout"
    DEADLOCK = "deadlock"


class DegenerateVariance(ValueError):
    pass


@dataclass(frozen=True)
class SimConfig:
    wheelbase: float = 2.7
    v_cruise: float = 3.0
    lookahead: float = 4.0
    dt: float = 0.05
    steer_noise: float = 0.08  # rad, std of per-step steering perturbation
    timeout: float = 120.0
    deadlock_window: float = 10.0
    deadlock_distance: float = 0.5
    trials: int = 50
    seed: int = 0

    def __post_init__(self) -> None:
        if self.dt <= 0 or self.lookahead <= 0:
            raise ValueError("dt and lookahead must be positive")
        if self.wheelbase <= 0 or self.v_cruise < 0 or self.steer_noise < 0:
            raise ValueError("invalid vehicle parameters")


@dataclass(frozen=True)
class DrivablePath:
    target: Position
    cells: tuple[Position, ...]
    waypoints: np.ndarray  # (n, 2) world-frame points, ~1 m apart

    @property
    def length(self) -> float:
        if len(self.waypoints) < 2:
            return 0.0
        return float(np.linalg.norm(np.diff(self.waypoints, axis=0), axis=1).sum())


@dataclass(frozen=True)
class TrialResult:
    outcome: Outcome
    elapsed: float
    failure_position: tuple[float, float] | None = None


def densify(cells: list[Position], spacing: float = 1.0) -> np.ndarray:
    geometry = path_geometry(cells)
    if not geometry:
        return np.array([world_center(cells[0])])
    pts: list[tuple[float, float]] = []
    for g in geometry:
        seg = g.sample(spacing)
        pts.extend(seg if not pts else seg[1:])
    return np.array(pts)


def drivable_paths(m: EncodingMatrix, spacing: float = 1.0) -> list[DrivablePath]:
    """Shortest road path from the entrance to each road cell that borders a stall."""
    targets = stall_targets(m)
    if not targets:
        raise NoStalls("garage has no stall bordering a road")
    paths = shortest_paths(m)
    return [
        DrivablePath(t, tuple(paths[t]), densify(paths[t], spacing))
        for t in targets
        if t in paths
    ]


def unreachable_stall_targets(m: EncodingMatrix) -> list[Position]:
    paths = shortest_paths(m)
    return [t for t in stall_targets(m) if t not in paths]


class Track:
    """Collision geometry of one garage: non-road cells, the outer wall and pillars."""

    def __init__(self, m: EncodingMatrix):
        self.free = roadlike_mask(m)
        self.height, self.width = self.free.shape
        self.pillars = np.array(pillar_positions(m)).reshape(-1, 2)
        # footprint perimeter samples in the body frame (origin at the rear axle)
        xs = np.linspace(-REAR_OVERHANG, CAR_LENGTH - REAR_OVERHANG, 16)
        ys = np.linspace(-CAR_WIDTH / 2, CAR_WIDTH / 2, 7)
        body = [(x, y) for x in xs for y in (ys[0], ys[-1])]
        body += [(x, y) for x in (xs[0], xs[-1]) for y in ys[1:-1]]
        self.body = np.array(body)

    def footprint(self, x: float, y: float, heading: float) -> np.ndarray:
        c, s = math.cos(heading), math.sin(heading)
        bx, by = self.body[:, 0], self.body[:, 1]
        return np.column_stack([x + c * bx - s * by, y + s * bx + c * by])

    def collides(self, x: float, y: float, heading: float) -> bool:
        pts = self.footprint(x, y, heading)
        cols = np.floor(pts[:, 0] / BLOCK).astype(int)
        rows = np.floor(-pts[:, 1] / BLOCK).astype(int)
        inside = (rows >= 0) & (rows < self.height) & (cols >= 0) & (cols < self.width)
        if not inside.all():
            return True
        if not self.free[rows, cols].all():
            return True
        if len(self.pillars):
            half = PILLAR_SIZE / 2
            d = np.abs(pts[:, None, :] - self.pillars[None, :, :])
            if ((d[..., 0] <= half) & (d[..., 1] <= half)).any():
                return True
        return False


def run_trial(track: Track, path: DrivablePath, cfg: SimConfig, seed: int) -> TrialResult:
    rng = np.random.default_rng(seed)
    wps = path.waypoints
    goal = wps[-1]
    if len(wps) >= 2:
        d0 = wps[1] - wps[0]
        heading = math.atan2(d0[1], d0[0])
    else:
        heading = 0.0
    center_offset = CAR_LENGTH / 2 - REAR_OVERHANG  # rear axle -> footprint center
    x = wps[0][0] - center_offset * math.cos(heading)
    y = wps[0][1] - center_offset * math.sin(heading)
    idx = 0
    t = 0.0
    window = max(1, int(round(cfg.deadlock_window / cfg.dt)))
    history: list[tuple[float, float]] = []
    n_steps = int(math.ceil(cfg.timeout / cfg.dt))
    for step in range(n_steps + 1):
        cx = x + center_offset * math.cos(heading)
        cy = y + center_offset * math.sin(heading)
        if math.hypot(cx - goal[0], cy - goal[1]) <= SUCCESS_RADIUS:
            return TrialResult(Outcome.SUCCESS, t)
        if track.collides(x, y, heading):
            return TrialResult(Outcome.COLLISION, t, (cx, cy))
        history.append((cx, cy))
        if len(history) > window:
            ox, oy = history[-window - 1]
            if math.hypot(cx - ox, cy - oy) < cfg.deadlock_distance:
                return TrialResult(Outcome.DEADLOCK, t)
        if step == n_steps:
            break
        # advance to the first unvisited waypoint at least one lookahead away
        while idx < len(wps) - 1 and math.hypot(wps[idx][0] - x, wps[idx][1] - y) < cfg.lookahead:
            idx += 1
        tx, ty = wps[idx]
        ld = max(1e-6, math.hypot(tx - x, ty - y))
        alpha = math.atan2(ty - y, tx - x) - heading
        steer = math.atan2(2.0 * cfg.wheelbase * math.sin(alpha), ld)
        steer += rng.normal(0.0, cfg.steer_noise) if cfg.steer_noise > 0 else 0.0
        steer = max(-MAX_STEER, min(MAX_STEER, steer))
        v = cfg.v_cruise
        x += v * math.cos(heading) * cfg.dt
        y += v * math.sin(heading) * cfg.dt
        heading += v / cfg.wheelbase * math.tan(steer) * cfg.dt
        t += cfg.dt
    return TrialResult(Outcome.TIMEOUT, t)


@dataclass(frozen=True)
class EvaluationRow:
    garage_id: str
    difficulty: float
    trials: int
    collision: int
    timeout: int
    deadlock: int

    @property
    def failures(self) -> int:
        return self.collision + self.timeout + self.deadlock

    @property
    def success_rate(self) -> float | None:
        if self.trials == 0:
            return None
        return 100.0 * (self.trials - self.failures) / self.trials


EVALUATION_HEADER = ("index,difficulty,test_count,failure_count,collision,timeout,deadlock,"
                     "success_rate")


def evaluation_csv(rows: list[EvaluationRow]) -> str:
    lines = [EVALUATION_HEADER]
    for r in rows:
        rate = "" if r.success_rate is None else f"{r.success_rate:.1f}"
        lines.append(f"{r.garage_id},{r.difficulty:.6f},{r.trials},{r.failures},{r.collision},"
                     f"{r.timeout},{r.deadlock},{rate}")
    return "\n".join(lines) + "\n"


def evaluate_garage(garage_id: str, m: EncodingMatrix, lam: float, cfg: SimConfig,
                    salt: int = 0) -> EvaluationRow:
    counts = {o: 0 for o in Outcome}
    if cfg.trials > 0:
        paths = drivable_paths(m)
        track = Track(m)
        rng = np.random.default_rng([cfg.seed, salt])
        for _ in range(cfg.trials):
            path = paths[int(rng.integers(len(paths)))]
            result = run_trial(track, path, cfg, int(rng.integers(2**31)))
            counts[result.outcome] += 1
    return EvaluationRow(garage_id, lam, cfg.trials, counts[Outcome.COLLISION],
                         counts[Outcome.TIMEOUT], counts[Outcome.DEADLOCK])


def evaluate(garages, cfg: SimConfig) -> list[EvaluationRow]:
    """``garages`` yields (id, matrix, difficulty) triples."""
    return [evaluate_garage(gid, m, lam, cfg, salt=i) for i, (gid, m, lam) in enumerate(garages)]


def regression(difficulty, success) -> tuple[float, float, float]:
    """Least-squares line of success rate on difficulty and Pearson r."""
    x = np.asarray(difficulty, dtype=float)
    y = np.asarray(success, dtype=float)
    if len(x) != len(y):
        raise ValueError("difficulty and success series differ in length")
    if len(x) < 3:
        raise DegenerateVariance("need at least three paired observations")
    dx = x - x.mean()
    dy = y - y.mean()
    sxx = float(dx @ dx)
    syy = float(dy @ dy)
    if sxx == 0.0:
        raise DegenerateVariance("all difficulty values are equal")
    slope = float(dx @ dy) / sxx
    intercept = float(y.mean() - slope * x.mean())
    if syy == 0.0:
        raise DegenerateVariance("success rate is constant; correlation undefined")
    r = float(dx @ dy) / math.sqrt(sxx * syy)
    return slope, intercept, r


def rows_regression(rows: list[EvaluationRow]) -> tuple[float, float, float]:
    rated = [r for r in rows if r.success_rate is not None]
    return regression([r.difficulty for r in rated], [r.success_rate for r in rated])
