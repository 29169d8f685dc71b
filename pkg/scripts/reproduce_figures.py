#!/usr/bin/env python3
"""Run every shipped experiment config and collect the CSVs in one directory.

Each entry below is one figure family: a config from configs/ plus the CLI
arguments that sweep it. --quick cuts trials for a fast smoke run; the
default settings match the shipped configs (50 trials per grid point).
"""

import argparse
import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from radarcoex.cli import main as radarcoex_main

ROOT = pathlib.Path(__file__).resolve().parents[1]

RUNS = [
    (
        "crb_vs_nbs",
        "crb-sweep",
        "crb_vs_nbs.toml",
        ["--sweep", "n_bs=3:8:1", "--schemes", "orthogonal,nsp,ssvsp"],
    ),
    (
        "crb_vs_mr",
        "crb-sweep",
        "crb_vs_nbs.toml",
        ["--sweep", "m_r=40:100:20", "--schemes", "nsp"],
    ),
    (
        "crb_cooperation",
        "crb-sweep",
        "crb_coop.toml",
        ["--schemes", "orthogonal,zf,mmse"],
    ),
    (
        "interference_vs_lt",
        "interference-sweep",
        "interference_vs_lt.toml",
        ["--sweep", "l_t=24:192:24", "--schemes", "nsp,ssvsp"],
    ),
    ("selection_demo", "selection-demo", "selection_demo.toml", []),
    ("coop_ber", "coop-ber", "coop_ber.toml", []),
    ("pri_demo", "pri-demo", "pri_demo.toml", []),
]


def run(outdir: pathlib.Path, quick: bool, seed: int | None) -> int:
    outdir.mkdir(parents=True, exist_ok=True)
    failures = 0
    for name, command, config, extra in RUNS:
        argv = [command, str(ROOT / "configs" / config), *extra]
        if quick:
            argv += ["--trials", "5"]
        if seed is not None:
            argv += ["--seed", str(seed)]
        argv += ["--out", str(outdir / f"{name}.csv")]
        print(f"== {name}: radarcoex {' '.join(argv)}", flush=True)
        rc = radarcoex_main(argv)
        if rc != 0:
            print(f"== {name} FAILED (exit {rc})", file=sys.stderr)
            failures += 1
    return failures


def cli() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument(
        "--outdir", default=str(ROOT / "results"), help="directory for the CSVs"
    )
    parser.add_argument(
        "--quick", action="store_true", help="5 trials per point instead of the configured count"
    )
    parser.add_argument("--seed", type=int, default=None, help="override every run's seed")
    args = parser.parse_args()
    failures = run(pathlib.Path(args.outdir), args.quick, args.seed)
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(cli())
