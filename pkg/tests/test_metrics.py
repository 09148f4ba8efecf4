import math

import networkx as nx
import numpy as np
import pytest

from garagegen.data import reference_table
from garagegen.grid import Block
from garagegen.maps import BUNDLED, load_map
from garagegen.metrics import (
    SCORES_HEADER,
    DegenerateRange,
    DimensionMismatch,
    GarageRecord,
    MetricsConfig,
    NoFreeBlocks,
    coverage,
    dedupe,
    difficulty,
    expectations,
    hardness,
    heatmap,
    junction_mask,
    score,
    scores_csv,
    shortest_paths,
    stall_targets,
)

from conftest import grid

ROADLIKE = (Block.ROAD, Block.ENTRANCE, Block.EXIT)


def road_graph(m):
    g = nx.Graph()
    h, w = m.cells.shape
    for r in range(h):
        for c in range(w):
            if m.cells[r, c] in ROADLIKE:
                g.add_node((r, c))
                for rr, cc in ((r + 1, c), (r, c + 1)):
                    if rr < h and cc < w and m.cells[rr, cc] in ROADLIKE:
                        g.add_edge((r, c), (rr, cc))
    return g


def oracle_junctions(m):
    h, w = m.cells.shape
    out = set()
    for r in range(h):
        for c in range(w):
            if m.cells[r, c] != Block.ROAD:
                continue
            n = sum(1 for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1))
                    if 0 <= rr < h and 0 <= cc < w and m.cells[rr, cc] == Block.ROAD)
            if n >= 3:
                out.add((r, c))
    return out


def oracle_expectation_y(m):
    """Mean over stall-adjacent road cells of the fewest junctions on any shortest path."""
    g = road_graph(m)
    junctions = oracle_junctions(m)
    stall_codes = {3, 4, 5, 6, 9}
    h, w = m.cells.shape
    counts = []
    for node in sorted(g.nodes):
        r, c = node
        touches = any(0 <= rr < h and 0 <= cc < w and m.cells[rr, cc] in stall_codes
                      for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)))
        if not touches or not nx.has_path(g, m.entrance, node):
            continue
        counts.append(min(sum(p in junctions for p in path)
                          for path in nx.all_shortest_paths(g, m.entrance, node)))
    return float(np.mean(counts))


def test_difficulty_reproduces_reference_table():
    rows = reference_table()
    assert len(rows) == 16
    for row in rows:
        assert difficulty(row["n1"], row["n2"], 0.33, 0.67) == pytest.approx(row["difficulty"],
                                                                              abs=1e-3)
    assert difficulty(0.1, 0) == pytest.approx(0.033)
    assert difficulty(0.917, 0.643) == pytest.approx(0.733, abs=1e-3)


def test_hardness_clamps():
    assert hardness(2.0, 2.0, 6.0) == 1.0
    assert hardness(6.0, 2.0, 6.0) == 0.0
    assert hardness(4.0, 2.0, 6.0) == 0.5
    assert hardness(0.5, 2.0, 6.0) == 1.0
    assert hardness(10.0, 2.0, 6.0) == 0.0
    with pytest.raises(DegenerateRange):
        hardness(1.0, 3.0, 3.0)


def test_coverage():
    initial = grid("70008")
    assert coverage(initial, initial) == 0.0
    assert coverage(grid("71408"), initial) == pytest.approx(2 / 3)
    assert coverage(grid("71118"), initial) == 1.0
    with pytest.raises(DimensionMismatch):
        coverage(grid("7008"), initial)
    with pytest.raises(NoFreeBlocks):
        coverage(grid("718"), grid("728"))


def test_expectations_on_hand_garage():
    m = grid(
        """
        2424242
        7111112
        2421412
        2221118
        """
    )
    ex, ey = expectations(m)
    # runs: 711111 (6), 1118 in the bottom row (4), columns 3 and 5 (3 each)
    assert ex == pytest.approx((6 + 4 + 3 + 3) / 4)
    assert {(int(r), int(c)) for r, c in np.argwhere(junction_mask(m))} == {(1, 3)}
    # (3, 5) touches the exit, which does not count towards a junction
    assert ey == pytest.approx(oracle_expectation_y(m))


def test_expectation_y_matches_brute_force(usable_garages):
    checked = 0
    for m in usable_garages[:25] + [load_map(n) for n in BUNDLED]:
        try:
            _, ey = expectations(m)
        except Exception:
            continue
        assert ey == pytest.approx(oracle_expectation_y(m))
        paths = shortest_paths(m)
        g = road_graph(m)
        for t in stall_targets(m):
            if t in paths:
                assert len(paths[t]) - 1 == nx.shortest_path_length(g, m.entrance, t)
        checked += 1
    assert checked >= 10


def test_junction_mask_matches_oracle(usable_garages):
    for m in usable_garages:
        found = {(int(r), int(c)) for r, c in np.argwhere(junction_mask(m))}
        assert found == oracle_junctions(m)


def test_unscoreable_without_stalls():
    initial = grid("70008")
    rec = score(0, grid("71118"), initial, True)
    assert not rec.scoreable and math.isnan(rec.lam) and rec.delta == 1.0
    assert heatmap([rec]).total == 0


def test_score_and_presets():
    initial = grid(
        """
        2000000
        7000002
        2000000
        2220008
        """
    )
    final = grid(
        """
        2424242
        7111112
        2421412
        2221118
        """
    )
    text = score(3, final, initial, True, MetricsConfig.preset("text"))
    compat = score(3, final, initial, True, MetricsConfig.preset("table-compat"))
    assert text.ex == compat.ex and text.ey == compat.ey
    assert text.h1 == pytest.approx(hardness(text.ex, 2, 6))
    assert compat.h2 == pytest.approx(hardness(compat.ey, 2, 6))
    assert text.lam == pytest.approx(0.33 * text.h1 + 0.67 * text.h2)
    assert 0 <= text.lam <= 1


def test_heatmap_binning():
    m = grid("718")
    recs = [
        GarageRecord(0, m, True, 0.1, lam=0.0),
        GarageRecord(1, m, True, 1.0, lam=1.0),
        GarageRecord(2, m, True, 0.55, lam=0.3),
        GarageRecord(3, m, False, 0.55, lam=0.3),  # unusable, skipped
    ]
    hist = heatmap(recs)
    assert hist.total == 3
    assert hist.counts[0, 1] == 1
    assert hist.counts[9, 9] == 1
    assert hist.counts[3, 5] == 1
    lines = hist.to_csv().splitlines()
    assert len(lines) == 11 and lines[0].startswith("difficulty_bin,delta_0.0")


def test_dedupe_and_csv():
    a, b = grid("71408"), grid("71108")
    recs = [GarageRecord(0, a, True, 0.5, 1, 0, 1, 1, 1), GarageRecord(1, b, True, 0.5),
            GarageRecord(2, a, True, 0.5, 1, 0, 1, 1, 1)]
    kept = dedupe(recs)
    assert [r.index for r in kept] == [0, 1]
    text = scores_csv(kept)
    assert text.splitlines()[0] == SCORES_HEADER
    assert text.splitlines()[1] == "0,1,0.500000,1.000000,0.000000,1.000000,1.000000,1.000000"
