from __future__ import annotations

import numpy as np
import pytest

from garagegen.dqn import TrainConfig, train
from garagegen.env import EnvConfig
from garagegen.grid import EncodingMatrix, parse_initial_map
from garagegen.maps import load_map


def grid(text: str) -> EncodingMatrix:
    """Build a matrix from a compact multi-line digit string."""
    return parse_initial_map("\n".join(line.strip() for line in text.strip().splitlines()))


def cells(text: str) -> np.ndarray:
    return np.array([[int(ch) for ch in line.strip()] for line in text.strip().splitlines()],
                    dtype=np.int8)


@pytest.fixture(scope="session")
def short_run():
    """A small training run on the 11x7 map, shared by several test modules."""
    initial = load_map("garage_11x7")
    cfg = TrainConfig(total_timesteps=6000, warmup=500, target_sync=1000, seed=7)
    return initial, train(initial, EnvConfig(seed=7), cfg)


@pytest.fixture(scope="session")
def usable_garages(short_run):
    _, result = short_run
    seen, out = set(), []
    for g in result.garages:
        if g.usable and g.matrix.content_hash() not in seen:
            seen.add(g.matrix.content_hash())
            out.append(g.matrix)
    return out


# one line per acceptance criterion, printed after the test session
ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, status: str, detail: str) -> None:
    ACCEPTANCE_LINES[number] = f"criterion {number:>2}: {status:<4} {detail}"


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[number])
