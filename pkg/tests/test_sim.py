from collections import Counter

import numpy as np
import pytest

from garagegen.cli import fixture_rows
from garagegen.data import reference_table
from garagegen.metrics import NoStalls
from garagegen.sim import (
    EVALUATION_HEADER,
    DegenerateVariance,
    DrivablePath,
    EvaluationRow,
    Outcome,
    SimConfig,
    Track,
    densify,
    drivable_paths,
    evaluate,
    evaluation_csv,
    regression,
    rows_regression,
    run_trial,
    unreachable_stall_targets,
)

from conftest import grid

CORRIDOR = grid(
    """
    222222222222
    711111111118
    222222222222
    """
)
STAIRCASE = grid(
    """
    222222222
    711222222
    221122222
    222112222
    222211222
    222221122
    222222118
    """
)
STAIR_CELLS = [(1, 0), (1, 1), (1, 2), (2, 2), (2, 3), (3, 3), (3, 4), (4, 4), (4, 5), (5, 5),
               (5, 6), (6, 6), (6, 7), (6, 8)]


def path_through(cells):
    return DrivablePath(cells[-1], tuple(cells), densify(cells))


def test_noise_free_straight_corridor_succeeds():
    path = path_through([(1, c) for c in range(12)])
    assert path.length == pytest.approx(99.0)
    result = run_trial(Track(CORRIDOR), path, SimConfig(steer_noise=0.0), seed=0)
    assert result.outcome is Outcome.SUCCESS
    # the footprint center starts on the first waypoint and stops 2 m short of the last
    assert result.elapsed == pytest.approx(97.0 / 3.0, abs=0.06)


def test_standing_still_deadlocks():
    path = path_through([(1, c) for c in range(12)])
    result = run_trial(Track(CORRIDOR), path, SimConfig(v_cruise=0.0, steer_noise=0.0), seed=0)
    assert result.outcome is Outcome.DEADLOCK
    assert result.elapsed == pytest.approx(10.0, abs=0.06)


def test_short_timeout():
    path = path_through([(1, c) for c in range(12)])
    result = run_trial(Track(CORRIDOR), path, SimConfig(timeout=5.0, steer_noise=0.0), seed=0)
    assert result.outcome is Outcome.TIMEOUT


def test_heavy_noise_on_a_staircase_mostly_collides():
    track, path = Track(STAIRCASE), path_through(STAIR_CELLS)
    noisy = Counter(run_trial(track, path, SimConfig(steer_noise=1.5), s).outcome
                    for s in range(100))
    assert noisy[Outcome.COLLISION] > 50
    calm = Counter(run_trial(track, path, SimConfig(steer_noise=0.0), s).outcome
                   for s in range(5))
    assert calm[Outcome.SUCCESS] == 5


def test_footprint_collisions():
    track = Track(CORRIDOR)
    # rear axle 3 m into the corridor, heading east: the whole body is on road cells
    assert not track.collides(13.5, -13.5, 0.0)
    # 2 m below the wall row, turning north pushes the nose into it
    assert track.collides(13.5, -11.0, np.pi / 2)
    assert not track.collides(13.5, -11.0, 0.0)
    # off the map
    assert track.collides(-5.0, -13.5, 0.0)


def test_noise_free_paths_do_not_collide(usable_garages):
    cfg = SimConfig(steer_noise=0.0)
    for m in usable_garages[:6]:
        track = Track(m)
        for path in drivable_paths(m)[:6]:
            assert run_trial(track, path, cfg, 0).outcome is not Outcome.COLLISION


def test_paths_need_stalls():
    with pytest.raises(NoStalls):
        drivable_paths(CORRIDOR)
    assert unreachable_stall_targets(CORRIDOR) == []


def test_evaluation_is_reproducible(usable_garages):
    cfg = SimConfig(trials=4, steer_noise=0.3, seed=5)
    garages = [(str(i), m, 0.1 * i) for i, m in enumerate(usable_garages[:3])]
    a = evaluation_csv(evaluate(garages, cfg))
    b = evaluation_csv(evaluate(garages, cfg))
    assert a == b
    assert a.splitlines()[0] == EVALUATION_HEADER
    assert len(a.splitlines()) == 4


def test_regression_recovers_a_line():
    x = np.linspace(0, 1, 10)
    slope, intercept, r = regression(x, 90 - 40 * x)
    assert (slope, intercept, r) == pytest.approx((-40, 90, -1))


def test_regression_degenerate_inputs():
    with pytest.raises(DegenerateVariance):
        regression([0.5, 0.5, 0.5], [1, 2, 3])
    with pytest.raises(DegenerateVariance):
        regression([0.1, 0.2, 0.3], [100, 100, 100])
    with pytest.raises(DegenerateVariance):
        regression([0.1], [1])
    with pytest.raises(ValueError):
        regression([0.1, 0.2, 0.3], [1, 2])


def test_reference_fixture_regression():
    rows = fixture_rows()
    assert len(rows) == 16
    _, _, r = rows_regression(rows)
    assert r == pytest.approx(-0.638, abs=0.01)
    # failure counts reproduce the tabulated success rates
    for row, ref in zip(rows, reference_table()):
        assert row.success_rate == pytest.approx(ref["success_rate"], abs=0.05)


def test_zero_trials_leave_rate_undefined():
    row = EvaluationRow("g", 0.5, 0, 0, 0, 0)
    assert row.success_rate is None
    assert evaluation_csv([row]).splitlines()[1].endswith(",")


@pytest.mark.parametrize("kwargs", [{"dt": 0}, {"lookahead": -1}, {"wheelbase": 0}])
def test_bad_sim_config(kwargs):
    with pytest.raises(ValueError):
        SimConfig(**kwargs)
