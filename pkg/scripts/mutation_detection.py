"""Detection rate of each protocol mutation over a block of fuzz seeds.

    python scripts/mutation_detection.py --runs 50
"""

import argparse
import time
from collections import Counter

from unistore.checker import check_trace
from unistore.fuzz import FuzzParams, random_scenario
from unistore.scenario import run

MUTATIONS = ("expose_remote_before_uniform", "skip_decided_check", "drop_lamport_merge",
             "literal_certification")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--runs", type=int, default=50)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()
    for flag in MUTATIONS:
        t0 = time.perf_counter()
        hits, first, axioms = 0, None, Counter()
        for seed in range(args.seed, args.seed + args.runs):
            fs = check_trace(run(random_scenario(seed, FuzzParams(flags=[flag]))))
            if fs:
                hits += 1
                first = seed if first is None else first
                axioms.update({f.axiom for f in fs})
        top = ", ".join(f"{a} x{n}" for a, n in axioms.most_common(4)) or "none"
        print(f"{flag}: {hits}/{args.runs} runs flagged, first at seed {first}, "
              f"{time.perf_counter() - t0:.1f}s; checks: {top}")


if __name__ == "__main__":
    main()
