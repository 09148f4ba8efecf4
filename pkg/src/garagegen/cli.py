"""Command-line front end: ``garagegen train|score|export|simulate|report``."""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys
from contextlib import contextmanager
from pathlib import Path

import numpy as np

from . import metrics, opendrive, roadnet, sim
from .config import ConfigError, RunConfig, load_config
from .data import reference_table
from .dqn import train
from .garageset import GarageEntry, GarageSetError, read_garage_set, write_garage_set
from .mesh import emit_mesh
from .svg import render_heatmap, render_matrix

log = logging.getLogger("garagegen")

EXIT_OK, EXIT_USAGE, EXIT_RUNTIME = 0, 1, 2

_CLAUSE = re.compile(
    r"^\s*(lambda|delta)\s+in\s+\[\s*([-+0-9.eE]+)\s*,\s*([-+0-9.eE]+)\s*\]\s*$"
)


class RunLocked(RuntimeError):
    pass


class EmptySelection(RuntimeError):
    pass


@contextmanager
def run_lock(out: Path):
    out.mkdir(parents=True, exist_ok=True)
    lock = out / ".lock"
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RunLocked(f"{out} is in use by another invocation (remove {lock} if stale)")
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        yield out
    finally:
        lock.unlink(missing_ok=True)


def parse_seeds(spec: str) -> list[int]:
    """``"3"``, ``"1..5"`` or ``"1,4,7"``."""
    spec = spec.strip()
    if ".." in spec:
        lo, hi = spec.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(s) for s in spec.split(",") if s.strip()]


def parse_filter(expr: str) -> dict[str, tuple[float, float]]:
    """Parse ``lambda in [a,b] and delta in [c,d]`` (either clause may be omitted)."""
    bounds = {}
    for clause in re.split(r"\band\b", expr):
        m = _CLAUSE.match(clause)
        if m is None:
            raise ConfigError(f"cannot parse filter clause {clause.strip()!r}")
        bounds[m[1]] = (float(m[2]), float(m[3]))
    return bounds


def select(records: list[metrics.GarageRecord], bounds: dict[str, tuple[float, float]]):
    out = []
    for rec in records:
        if not rec.scoreable:
            continue
        values = {"lambda": rec.lam, "delta": rec.delta}
        if all(lo <= values[k] <= hi for k, (lo, hi) in bounds.items()):
            out.append(rec)
    return out


# ---------------------------------------------------------------------------
# commands


def _garage_files(cfg: RunConfig, given: list[str] | None) -> list[Path]:
    if given:
        return [Path(p) for p in given]
    files = sorted(cfg.output_dir().glob("garages_seed*.txt"),
                   key=lambda p: int(re.search(r"seed(-?\d+)", p.name)[1]))
    if not files:
        raise FileNotFoundError(f"no garage sets in {cfg.output_dir()}; run `train` first")
    return files


def scored_records(cfg: RunConfig, files: list[Path]) -> list[metrics.GarageRecord]:
    """Usable garages from ``files``, deduplicated and scored, indexed by set position."""
    initial = cfg.load_initial()
    mcfg = cfg.metrics.build()
    entries: list[GarageEntry] = []
    for f in files:
        entries.extend(read_garage_set(f))
    records = [
        metrics.score(i, e.matrix, initial, e.usable, mcfg) for i, e in enumerate(entries) if e.usable
    ]
    return metrics.dedupe(records)


def cmd_train(cfg: RunConfig, seeds: list[int]) -> int:
    out = cfg.output_dir()
    initial = cfg.load_initial()
    with run_lock(out):
        for seed in seeds:
            cfg.train.seed = seed
            result = train(initial, cfg.env_config(), cfg.train)
            write_garage_set(out / f"garages_seed{seed}.txt", result.garages)
            (out / f"training_seed{seed}.csv").write_text(result.log.to_csv())
            result.net.save(out / f"checkpoint_seed{seed}.gfqn")
            usable = sum(g.usable for g in result.garages)
            distinct = len({g.matrix.content_hash() for g in result.garages if g.usable})
            print(f"seed {seed}: {len(result.log.episodes)} episodes, {usable} usable "
                  f"({distinct} distinct)")
        (out / "config.yaml").write_text(cfg.dump())
    return EXIT_OK


def cmd_score(cfg: RunConfig, files: list[str] | None) -> int:
    out = cfg.output_dir()
    records = scored_records(cfg, _garage_files(cfg, files))
    hist = metrics.heatmap(records)
    with run_lock(out):
        (out / "scores.csv").write_text(metrics.scores_csv(records))
        (out / "heatmap.csv").write_text(hist.to_csv())
        (out / "heatmap.svg").write_text(render_heatmap(hist))
    unscoreable = sum(not r.scoreable for r in records)
    print(f"scored {len(records)} distinct usable garages ({unscoreable} without stalls); "
          f"heatmap total {hist.total}")
    return EXIT_OK


def export_garage(rec: metrics.GarageRecord, dest: Path) -> list[Path]:
    name = rec.content_hash
    topo = roadnet.build_topology(rec.matrix)
    files = [dest / f"{name}.xodr", dest / f"{name}.mesh.txt", dest / f"{name}.svg"]
    files[0].write_text(opendrive.emit_opendrive(topo, name=f"garage-{name}"))
    files[1].write_text(emit_mesh(rec.matrix).to_obj(name=f"garage_{name}"))
    files[2].write_text(render_matrix(rec.matrix))
    return files


def cmd_export(cfg: RunConfig, files: list[str] | None, ids: list[int], expr: str | None) -> int:
    out = cfg.output_dir()
    records = scored_records(cfg, _garage_files(cfg, files))
    if ids:
        wanted = set(ids)
        chosen = [r for r in records if r.index in wanted]
    else:
        chosen = select(records, parse_filter(expr or "lambda in [0,1]"))
    if not chosen:
        print("warning: selection is empty; nothing exported", file=sys.stderr)
        return EXIT_OK
    dest = out / "export"
    with run_lock(out):
        dest.mkdir(exist_ok=True)
        for rec in chosen:
            export_garage(rec, dest)
        manifest = [GarageEntry(r.index, r.usable, 0, r.matrix) for r in chosen]
        write_garage_set(out / "export_manifest.txt", manifest)
    print(f"exported {len(chosen)} garage(s) to {dest}")
    return EXIT_OK


def regression_summary(rows: list[sim.EvaluationRow]) -> str:
    lines = ["slope,intercept,r,n,note"]
    try:
        slope, intercept, r = sim.rows_regression(rows)
        lines.append(f"{slope:.6f},{intercept:.6f},{r:.6f},{len(rows)},")
    except (sim.DegenerateVariance, ValueError) as exc:
        lines.append(f",,,{len(rows)},{type(exc).__name__}: {exc}")
    return "\n".join(lines) + "\n"


def fixture_rows() -> list[sim.EvaluationRow]:
    return [
        sim.EvaluationRow(str(int(r["index"])), r["difficulty"], int(r["test_count"]),
                          int(r["collision"]), int(r["timeout"]), int(r["deadlock"]))
        for r in reference_table()
    ]


def cmd_simulate(cfg: RunConfig, manifest: str | None, use_fixture: bool) -> int:
    out = cfg.output_dir()
    if use_fixture:
        rows = fixture_rows()
    else:
        path = Path(manifest) if manifest else out / "export_manifest.txt"
        entries = read_garage_set(path)
        initial = cfg.load_initial()
        mcfg = cfg.metrics.build()
        garages = []
        for e in entries:
            rec = metrics.score(e.episode, e.matrix, initial, True, mcfg)
            if rec.scoreable:
                garages.append((str(e.episode), e.matrix, rec.lam))
        if not garages:
            raise EmptySelection("no exported garage has a drivable path to a stall")
        rows = sim.evaluate(garages, cfg.sim)
    summary = regression_summary(rows)
    with run_lock(out):
        (out / "evaluation.csv").write_text(sim.evaluation_csv(rows))
        (out / "regression.csv").write_text(summary)
    print(summary.strip())
    return EXIT_OK


def returns_curve(curves: list[np.ndarray]) -> list[tuple[int, float, float, float, int]]:
    """Per-episode mean return across runs with a normal-approximation 95% interval."""
    rows = []
    longest = max((len(c) for c in curves), default=0)
    for i in range(longest):
        vals = np.array([c[i] for c in curves if len(c) > i])
        mean = float(vals.mean())
        half = 1.96 * float(vals.std(ddof=1)) / np.sqrt(len(vals)) if len(vals) > 1 else 0.0
        rows.append((i, mean, mean - half, mean + half, len(vals)))
    return rows


def cmd_report(cfg: RunConfig) -> int:
    out = cfg.output_dir()
    logs = sorted(out.glob("training_seed*.csv"))
    lines = ["# Run report", ""]
    curves = []
    if logs:
        lines += ["| seed | episodes | usable | mean return (first 10%) | mean return (last 10%) |",
                  "|---|---|---|---|---|"]
        for p in logs:
            data = np.loadtxt(p, delimiter=",", skiprows=1, ndmin=2)
            ret = data[:, 1] if data.size else np.array([])
            curves.append(ret)
            n = max(1, len(ret) // 10)
            first = ret[:n].mean() if len(ret) else float("nan")
            last = ret[-n:].mean() if len(ret) else float("nan")
            usable = int(data[:, 3].sum()) if data.size else 0
            seed = re.search(r"seed(-?\d+)", p.name)[1]
            lines.append(f"| {seed} | {len(ret)} | {usable} | {first:.2f} | {last:.2f} |")
        curve = returns_curve(curves)
        (out / "returns_curve.csv").write_text(
            "episode,mean,ci_low,ci_high,runs\n"
            + "".join(f"{i},{m:.6f},{lo:.6f},{hi:.6f},{n}\n" for i, m, lo, hi, n in curve)
        )
        lines.append("")
    scores = out / "scores.csv"
    if scores.exists():
        text = scores.read_text().splitlines()[1:]
        deltas = [float(t.split(",")[2]) for t in text]
        lines.append(f"Scored garages: {len(text)}")
        if deltas:
            share = np.mean([(0.5 <= d <= 0.9) for d in deltas])
            lines.append(f"Coverage in [0.5, 0.9]: {100 * share:.1f}%")
        lines.append("")
    reg = out / "regression.csv"
    if reg.exists():
        lines += ["Difficulty vs. success regression:", "", "```", reg.read_text().strip(), "```"]
    (out / "report.md").write_text("\n".join(lines) + "\n")
    print("\n".join(lines))
    return EXIT_OK


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="garagegen", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("-c", "--config", help="run configuration (YAML)")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="SECTION.KEY=VALUE", help="override a config value")
        return p

    p = common(sub.add_parser("train", help="train the coloring agent and collect garages"))
    p.add_argument("--seeds", help="seed list: N, A..B or A,B,C (default: train.seed)")

    p = common(sub.add_parser("score", help="score garage sets and build the heatmap"))
    p.add_argument("sets", nargs="*", help="garage-set files (default: all in the output dir)")

    p = common(sub.add_parser("export", help="write .xodr, mesh and SVG per selected garage"))
    p.add_argument("--sets", nargs="*", help="garage-set files (default: all in the output dir)")
    p.add_argument("--id", dest="ids", type=int, action="append", default=[])
    p.add_argument("--filter", dest="expr", help="e.g. 'lambda in [0.6,1.0] and delta in [0,1]'")

    p = common(sub.add_parser("simulate", help="cruise-test exported garages"))
    p.add_argument("--manifest", help="garage-set file of exported garages")
    p.add_argument("--fixture", action="store_true", help="use the bundled reference table")

    common(sub.add_parser("report", help="summarize training curves, scores and regression"))
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        cfg = load_config(args.config, args.overrides)
        if args.command == "train":
            seeds = parse_seeds(args.seeds) if args.seeds else [cfg.train.seed]
            return cmd_train(cfg, seeds)
        if args.command == "score":
            return cmd_score(cfg, args.sets)
        if args.command == "export":
            if args.expr:
                parse_filter(args.expr)
            return cmd_export(cfg, args.sets, args.ids, args.expr)
        if args.command == "simulate":
            return cmd_simulate(cfg, args.manifest, args.fixture)
        return cmd_report(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (GarageSetError, OSError, RunLocked, EmptySelection, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


def main_entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    main_entry()
