"""Bundled data: initial maps and the reference cruise-test table."""

import csv
from importlib import resources


def reference_table() -> list[dict[str, float]]:
    """Rows of the reference 13x13 cruise-test table (difficulty vs. success rate)."""
    text = resources.files(__name__).joinpath("reference_table.csv").read_text()
    return [{k: float(v) for k, v in row.items()} for row in csv.DictReader(text.splitlines())]
