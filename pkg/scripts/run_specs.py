"""Run every experiment spec in scripts/specs and write records and summaries.

    python scripts/run_specs.py --out results [--workers 4] [name ...]

With no names, runs all specs. Each spec produces ``<name>.csv`` (one row per
trial) and ``<name>.json`` (fraction with a 95% Wilson interval).
"""

import argparse
import json
import time
from pathlib import Path

from hetfilter.experiment import load_spec, records_csv, run_trials, summarize

SPECS = Path(__file__).resolve().parent / "specs"


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("names", nargs="*", help="spec names without .json (default: all)")
    ap.add_argument("--out", type=Path, default=Path("results"))
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()

    paths = [SPECS / f"{n}.json" for n in args.names] or sorted(SPECS.glob("*.json"))
    args.out.mkdir(parents=True, exist_ok=True)
    for path in paths:
        start = time.perf_counter()
        records = run_trials(load_spec(path), workers=args.workers)
        summary = summarize(records).to_json()
        (args.out / f"{path.stem}.csv").write_text(records_csv(records), encoding="utf-8")
        (args.out / f"{path.stem}.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
        lo, hi = summary["wilson95"]
        print(f"{path.stem:20s} fraction {summary['fraction']:.3f} [{lo:.3f}, {hi:.3f}] "
              f"{time.perf_counter() - start:.1f}s")


if __name__ == "__main__":
    main()
