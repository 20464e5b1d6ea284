"""Fuzz several system shapes and report failing seeds.

    python scripts/config_sweep.py --runs 100
"""

import argparse
import time

from unistore.fuzz import FuzzParams, fuzz

CONFIGS = [
    {},
    {"N": 1},
    {"N": 3},
    {"D": 5, "f": 2, "max_crashes": 2},
    {"keys": 2, "strong_ratio": 0.7},
    {"D": 5, "f": 2, "keys": 2, "max_crashes": 2},
]


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=100)
    ap.add_argument("--seed", type=int, default=1000)
    args = ap.parse_args()
    bad_total = 0
    for i, cfg in enumerate(CONFIGS):
        t0 = time.perf_counter()
        res = fuzz(args.runs, args.seed + 1000 * i, FuzzParams(**cfg), stop_on_failure=False)
        bad = [(r.seed, str(r.findings[0])) for r in res if r.findings]
        bad_total += len(bad)
        print(f"{cfg or 'default'}: {len(bad)}/{len(res)} failing, {time.perf_counter() - t0:.1f}s")
        for seed, f in bad[:5]:
            print(f"   seed {seed}: {f}")
    raise SystemExit(1 if bad_total else 0)


if __name__ == "__main__":
    main()
