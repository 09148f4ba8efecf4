#!/usr/bin/env python3
"""Check how simulated success rate tracks difficulty under controller settings.

Trains one map, picks garages at evenly spaced difficulty ranks and evaluates
them for each (steering noise, lookahead) pair given on the command line.
Prints the OLS slope and Pearson r for each setting.
"""

import argparse

import numpy as np

from garagegen.dqn import TrainConfig, train
from garagegen.env import EnvConfig
from garagegen.maps import load_map
from garagegen.metrics import MetricsConfig, score
from garagegen.sim import SimConfig, evaluate, rows_regression


def spanning(records, n):
    records = sorted((r for r in records if r.scoreable), key=lambda r: (r.lam, r.index))
    if len(records) <= n:
        return records
    picks = np.unique(np.round(np.linspace(0, len(records) - 1, n)).astype(int))
    return [records[i] for i in picks]


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--map", default="garage_11x7")
    parser.add_argument("--steps", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--garages", type=int, default=16)
    parser.add_argument("--trials", type=int, default=50)
    parser.add_argument("--preset", default="text")
    parser.add_argument("--noise", type=float, nargs="*", default=[0.08, 0.3, 0.6, 1.0])
    parser.add_argument("--lookahead", type=float, nargs="*", default=[4.0])
    args = parser.parse_args(argv)

    initial = load_map(args.map)
    result = train(initial, EnvConfig(seed=args.seed),
                   TrainConfig(total_timesteps=args.steps, seed=args.seed))
    seen, records = set(), []
    for g in result.garages:
        key = g.matrix.content_hash()
        if g.usable and key not in seen:
            seen.add(key)
            records.append(score(g.episode, g.matrix, initial, True,
                                 MetricsConfig.preset(args.preset)))
    chosen = spanning(records, args.garages)
    lams = [r.lam for r in chosen]
    print(f"{len(chosen)} garages, lambda {min(lams):.2f}-{max(lams):.2f}")

    garages = [(str(r.index), r.matrix, r.lam) for r in chosen]
    for look in args.lookahead:
        for sigma in args.noise:
            rows = evaluate(garages, SimConfig(steer_noise=sigma, lookahead=look,
                                               trials=args.trials, seed=args.seed))
            rates = [row.success_rate for row in rows]
            try:
                slope, _, r = rows_regression(rows)
                fit = f"slope {slope:+.2f}  r {r:+.3f}"
            except ValueError as exc:
                fit = f"undefined ({exc})"
            print(f"sigma {sigma:.2f}  lookahead {look:.1f}  "
                  f"success {min(rates):.0f}-{max(rates):.0f}%  {fit}", flush=True)


if __name__ == "__main__":
    main()
