#!/usr/bin/env python3
"""Train every bundled map over a range of seeds, then score each run.

Each map gets its own output directory under ``--root``.  Extra ``--set``
overrides are passed through to the CLI unchanged.
"""

import argparse
import sys

from garagegen import cli
from garagegen.maps import BUNDLED


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--root", default="runs")
    parser.add_argument("--seeds", default="0..4")
    parser.add_argument("--maps", nargs="*", default=[m for m in BUNDLED if m != "corridor_5x5"])
    parser.add_argument("--set", dest="overrides", action="append", default=[])
    args = parser.parse_args(argv)

    for name in args.maps:
        common = ["--set", f"map={name}", "--set", f"output={args.root}/{name}"]
        for item in args.overrides:
            common += ["--set", item]
        print(f"== {name}", flush=True)
        for step in (["train", "--seeds", args.seeds], ["score"], ["report"]):
            code = cli.main([*step, *common])
            if code:
                return code
    return 0


if __name__ == "__main__":
    sys.exit(main())
