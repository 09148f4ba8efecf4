"""End-to-end acceptance checks, one test per criterion.

Each test records a one-line verdict that is printed in the terminal summary.
The long training runs are shared between criteria through module fixtures
and repeated once for the determinism check.
"""

from __future__ import annotations

import time
import warnings

import numpy as np
import pytest

from garagegen.data import reference_table
from garagegen.dqn import QNetwork, TrainConfig, greedy_rollout, train
from garagegen.env import EnvConfig, GarageEnv
from garagegen.garageset import format_garage_set
from garagegen.grid import (
    OBST_STALL_CODES,
    STALL_CODES,
    Block,
    connectivity,
    has_2x2_road,
    neighbor_codes,
)
from garagegen.maps import load_map
from garagegen.metrics import MetricsConfig, difficulty, score
from garagegen.opendrive import emit_opendrive, parse_opendrive
from garagegen.roadnet import analytic_lengths, build_topology, topology_graph
from garagegen.sim import SimConfig, evaluate, evaluation_csv, regression, rows_regression

from conftest import record_criterion
from test_grid import all_3x3, check_against_oracles, random_6x6
from test_reward import check as check_distributions
from test_roadnet import contraction_oracle, isomorphic

LEARNING_SEED = 0
GENERATION_SEED = 0
SIM_SEED = 0
N_SIM_GARAGES = 16


def timed(fn, *args, **kwargs):
    start = time.perf_counter()
    out = fn(*args, **kwargs)
    return out, time.perf_counter() - start


def verdict(number, ok, detail):
    record_criterion(number, "PASS" if ok else "FAIL", detail)
    assert ok, detail


# -- shared runs -------------------------------------------------------------------


def learning_run():
    cfg = TrainConfig(total_timesteps=50_000, seed=LEARNING_SEED)
    return train(load_map("corridor_5x5"), EnvConfig(seed=LEARNING_SEED), cfg)


def generation_run():
    cfg = TrainConfig(total_timesteps=100_000, seed=GENERATION_SEED)
    return train(load_map("garage_11x7"), EnvConfig(seed=GENERATION_SEED), cfg)


def distinct_usable(result):
    seen, out = set(), []
    for g in result.garages:
        key = g.matrix.content_hash()
        if g.usable and key not in seen:
            seen.add(key)
            out.append(g)
    return out


def lambda_spanning_selection(result, n=N_SIM_GARAGES):
    """``n`` distinct usable garages at evenly spaced difficulty ranks."""
    initial = load_map("garage_11x7")
    cfg = MetricsConfig.preset("text")
    scored = [score(g.episode, g.matrix, initial, True, cfg) for g in distinct_usable(result)]
    scored = sorted((r for r in scored if r.scoreable), key=lambda r: (r.lam, r.index))
    if len(scored) <= n:
        return scored
    picks = np.unique(np.round(np.linspace(0, len(scored) - 1, n)).astype(int))
    return [scored[i] for i in picks]


def simulate(records):
    garages = [(str(r.index), r.matrix, r.lam) for r in records]
    return evaluate(garages, SimConfig(seed=SIM_SEED))


@pytest.fixture(scope="module")
def learning():
    return timed(learning_run)


@pytest.fixture(scope="module")
def generation():
    return timed(generation_run)


@pytest.fixture(scope="module")
def simulation(generation):
    (result, _) = generation
    records = lambda_spanning_selection(result)
    rows, seconds = timed(simulate, records)
    return records, rows, seconds


# -- criteria ----------------------------------------------------------------------


def test_criterion_01_difficulty_arithmetic():
    start = time.perf_counter()
    worst = max(abs(difficulty(r["n1"], r["n2"], 0.33, 0.67) - r["difficulty"])
                for r in reference_table())
    elapsed = time.perf_counter() - start
    verdict(1, worst <= 0.001 and elapsed < 1.0,
            f"max |difficulty - table| = {worst:.4f} over 16 rows ({elapsed:.3f}s)")


def test_criterion_02_reference_regression():
    start = time.perf_counter()
    rows = reference_table()
    _, _, r = regression([x["difficulty"] for x in rows], [x["success_rate"] for x in rows])
    elapsed = time.perf_counter() - start
    verdict(2, abs(r + 0.638) <= 0.01 and elapsed < 1.0, f"Pearson r = {r:.4f} ({elapsed:.3f}s)")


def test_criterion_03_gradient_oracle():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    worst = 0.0
    cases = 0
    eps = 1e-6
    while cases < 150:
        sizes = [int(rng.integers(3, 12)), int(rng.integers(3, 12)), int(rng.integers(3, 12)), 4]
        net = QNetwork(sizes, rng)
        for b in net.biases:
            b[:] = rng.normal(0, 0.1, size=b.shape)
        x = rng.normal(size=(int(rng.integers(1, 6)), sizes[0]))
        proj = rng.normal(size=(len(x), 4))
        grads = net.gradients(x, proj)
        k = int(rng.integers(len(grads)))
        p, g = net.params[k].reshape(-1), grads[k].reshape(-1)
        i = int(rng.integers(p.size))
        old = p[i]
        p[i] = old + eps
        up = float((net.forward(x) * proj).sum())
        p[i] = old - eps
        down = float((net.forward(x) * proj).sum())
        p[i] = old
        numeric = (up - down) / (2 * eps)
        worst = max(worst, abs(g[i] - numeric) / max(abs(g[i]), abs(numeric), 1e-3))
        cases += 1
    elapsed = time.perf_counter() - start
    verdict(3, worst < 1e-4 and elapsed < 30,
            f"{cases} cases, max relative error {worst:.2e} ({elapsed:.1f}s)")


def test_criterion_04_learning_smoke(learning):
    result, seconds = learning
    returns = result.log.returns
    n = max(1, len(returns) // 10)
    first, last = returns[:n].mean(), returns[-n:].mean()
    _, out, _ = greedy_rollout(result.net, GarageEnv(load_map("corridor_5x5")), seed=0)
    ok = out.reached_exit and last > first and seconds < 300 and result.net.all_finite()
    verdict(4, ok, f"greedy reaches exit: {out.reached_exit}; decile returns "
                   f"{first:.1f} -> {last:.1f}; {seconds:.0f}s")


def garage_problems(g, initial):
    m = g.matrix
    cells = m.cells
    problems = []
    if not connectivity(m):
        problems.append("not connected")
    if has_2x2_road(m):
        problems.append("2x2 road")
    for pos in m.positions():
        code = int(cells[pos])
        if code in STALL_CODES and Block.ROAD not in neighbor_codes(cells, pos):
            problems.append(f"stall {pos} not road-adjacent")
        if code in OBST_STALL_CODES and Block.OBSTACLE not in neighbor_codes(cells, pos):
            problems.append(f"obstructed stall {pos} not obstacle-adjacent")
    delta = score(0, m, initial, True).delta
    if not 0.0 <= delta <= 1.0:
        problems.append(f"delta {delta}")
    return problems


def test_criterion_05_generation_invariants(generation):
    result, seconds = generation
    initial = load_map("garage_11x7")
    usable = [g for g in result.garages if g.usable]
    bad = [(g.episode, p) for g in usable for p in garage_problems(g, initial)]
    distinct = len(distinct_usable(result))
    ok = not bad and distinct >= 5 and seconds < 900
    verdict(5, ok, f"{len(usable)} usable ({distinct} distinct), {len(bad)} violations; "
                   f"{seconds:.0f}s" + (f"; first: {bad[0]}" if bad else ""))


def test_criterion_06_coverage_distribution(generation):
    result, _ = generation
    initial = load_map("garage_11x7")
    deltas = np.array([score(0, g.matrix, initial, True).delta
                       for g in result.garages if g.usable])
    share = float(np.mean((deltas >= 0.5) & (deltas <= 0.9))) if len(deltas) else 0.0
    detail = f"{100 * share:.1f}% of usable garages have delta in [0.5, 0.9]"
    if share >= 0.5:
        record_criterion(6, "PASS", detail)
    else:
        record_criterion(6, "WARN", detail + " (soft target, below 50%)")
        warnings.warn(detail)


def test_criterion_07_oracle_equivalence():
    start = time.perf_counter()
    n = 0
    for a in all_3x3():
        check_against_oracles(a)
        check_distributions(a)
        n += 1
    for a in random_6x6():
        check_against_oracles(a)
        check_distributions(a)
        n += 1
    elapsed = time.perf_counter() - start
    verdict(7, n == 3**9 + 500 and elapsed < 120, f"{n} matrices agree ({elapsed:.1f}s)")


def test_criterion_08_opendrive_round_trip(generation):
    result, _ = generation
    garages = [g.matrix for g in distinct_usable(result)][:20]
    start = time.perf_counter()
    failures = []
    for m in garages:
        parsed = parse_opendrive(emit_opendrive(build_topology(m)))
        if not isomorphic(topology_graph(parsed), contraction_oracle(m)):
            failures.append((m.content_hash(), "graph"))
        if any(len(j.arms(parsed.roads)) < 3 for j in parsed.junctions.values()):
            failures.append((m.content_hash(), "junction arms"))
        outer, internal = analytic_lengths(m)
        err = abs(parsed.total_length() - outer - internal)
        if err > 1e-6:
            failures.append((m.content_hash(), f"length error {err:.2e}"))
    elapsed = time.perf_counter() - start
    ok = len(garages) == 20 and not failures and elapsed < 60
    verdict(8, ok, f"{len(garages)} garages, {len(failures)} failures ({elapsed:.1f}s)")


def test_criterion_09_simulated_difficulty(simulation):
    records, rows, seconds = simulation
    lams = [r.lam for r in records]
    rates = [row.success_rate for row in rows]
    try:
        slope, _, r = rows_regression(rows)
        detail = f"r = {r:.3f}, slope = {slope:.2f}"
        ok = r < -0.3 and slope < 0
    except ValueError as exc:
        detail = f"regression undefined ({exc})"
        ok = False
    detail += (f"; {len(rows)} garages, lambda {min(lams):.2f}-{max(lams):.2f}, "
               f"success {min(rates):.0f}-{max(rates):.0f}%; {seconds:.0f}s")
    verdict(9, ok and len(rows) >= 16 and seconds < 600, detail)


def test_criterion_10_determinism(learning, generation, simulation):
    first_learning, _ = learning
    first_generation, _ = generation
    _, first_rows, _ = simulation
    again_learning = learning_run()
    again_generation = generation_run()
    again_rows = simulate(lambda_spanning_selection(again_generation))
    same = {
        "learning": first_learning.log.to_csv() == again_learning.log.to_csv(),
        "generation": first_generation.log.to_csv() == again_generation.log.to_csv()
        and format_garage_set(first_generation.garages) == format_garage_set(again_generation.garages),
        "simulation": evaluation_csv(first_rows) == evaluation_csv(again_rows),
    }
    verdict(10, all(same.values()),
            ", ".join(f"{k} {'identical' if v else 'DIFFERS'}" for k, v in same.items()))
