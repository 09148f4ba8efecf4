import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from garagegen.env import (
    Action,
    EnvConfig,
    EpisodeFinished,
    GarageEnv,
    NoLegalStart,
    decode_visibility,
    initial_orientation,
    observation_size,
)
from garagegen.grid import Axis, Block, has_2x2_road, invariant_violations, neighbor_codes
from garagegen.maps import load_map
from garagegen.reward import Event

from conftest import grid

L, R, U, D = Action.LEFT, Action.RIGHT, Action.UP, Action.DOWN


@pytest.fixture
def corridor():
    env = GarageEnv(load_map("corridor_5x5"), EnvConfig(axis_policy="fixed"))
    env.reset(0)
    return env


def test_observation_vector_size(corridor):
    obs = corridor.observe()
    vec = corridor.encode(obs)
    assert vec.shape == (observation_size(5),) == (257,)
    assert np.array_equal(decode_visibility(vec, 5), obs.visibility)
    assert ((vec >= 0) & (vec <= 1)).all()


def test_visibility_pads_with_obstacles(corridor):
    vis = corridor.visibility()
    assert vis.shape == (5, 5)
    assert (vis[:, :2] == Block.OBSTACLE).all()  # entrance sits on the west edge
    assert vis[2, 2] == Block.ENTRANCE


def test_start_orientation_points_into_the_map(corridor):
    assert initial_orientation(corridor.initial) == Action.RIGHT
    with pytest.raises(NoLegalStart):
        initial_orientation(grid("272\n222\n282"))


def test_collision_keeps_position_and_counts_error(corridor):
    out = corridor.step(L)
    assert Event.COLLISION in out.events
    assert out.violation is Event.COLLISION
    assert corridor.pos == (1, 0) and corridor.error_index == 1
    assert out.reward == -10
    assert not out.done


def test_reaching_the_exit(corridor):
    total = 0.0
    for a in (R, R, R, D, D, R):
        out = corridor.step(a)
        total += out.reward
    assert out.done and out.reached_exit and Event.REACHED_EXIT in out.events
    assert corridor.connected and corridor.observe().connected
    assert corridor.coverage_rate() == 1.0
    with pytest.raises(EpisodeFinished):
        corridor.step(R)


def test_backward_move_costs_but_is_not_an_error(corridor):
    corridor.step(R)
    out = corridor.step(L)
    assert Event.BACKWARD in out.events
    assert corridor.error_index == 0
    assert corridor.pos == (1, 0)
    assert corridor.cells[1, 0] == Block.ENTRANCE


def test_error_overflow_ends_episode(corridor):
    outs = [corridor.step(U) for _ in range(11)]
    assert all(not o.done for o in outs[:-1])
    last = outs[-1]
    assert last.done and Event.ERROR_OVERFLOW in last.events
    assert last.reward == -110


def test_two_by_two_road_rejected():
    env = GarageEnv(grid("2222\n7002\n2008\n2222"), EnvConfig(axis_policy="fixed"))
    env.reset(0)
    for a in (R, R, D):
        env.step(a)
    out = env.step(L)
    assert Event.NETWORK_VIOLATION in out.events
    assert env.pos == (2, 2) and env.error_index == 1
    assert out.reward == -5
    assert not has_2x2_road(env.cells)


def test_step_budget_truncates():
    env = GarageEnv(load_map("corridor_5x5"), EnvConfig(max_steps=3))
    env.reset(0)
    outs = [env.step(a) for a in (R, L, R)]
    assert outs[-1].done and not outs[-1].reached_exit
    assert env.max_steps == 3
    assert EnvConfig().step_budget(load_map("garage_11x7")) == 4 * 11 * 7


def test_axis_policy():
    env = GarageEnv(load_map("garage_11x7"), EnvConfig(axis_policy="fixed", fixed_axis="NS"))
    env.reset(1)
    assert env.axis is Axis.NORTH_SOUTH
    env = GarageEnv(load_map("garage_11x7"))
    axes = {(env.reset(s), env.axis)[1] for s in range(20)}
    assert axes == set(Axis)
    env.reset(5)
    first = env.axis
    env.reset(5)
    assert env.axis is first


@pytest.mark.parametrize("kwargs", [{"visibility_k": 4}, {"max_error": 0}, {"axis_policy": "x"}])
def test_bad_env_config(kwargs):
    with pytest.raises(ValueError):
        EnvConfig(**kwargs)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.sampled_from(list(Action)), min_size=1, max_size=120), st.integers(0, 1000))
def test_random_play_keeps_invariants(actions, seed):
    env = GarageEnv(load_map("garage_11x7"))
    env.reset(seed)
    for a in actions:
        if env.done:
            break
        out = env.step(a)
        assert 0.0 <= out.observation.coverage <= 1.0
        assert env.error_index <= env.cfg.max_error + 1
    m = env.garage()
    assert not has_2x2_road(m.cells)
    problems = [p for p in invariant_violations(m) if "connected" not in p]
    assert problems == []
    # entrance/exit never change code
    assert m.cells[m.entrance] == Block.ENTRANCE and m.cells[m.exit] == Block.EXIT
    for pos in m.positions():
        if m.cells[pos] in (3, 9):
            assert Block.OBSTACLE in neighbor_codes(m.cells, pos)
