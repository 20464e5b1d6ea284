"""Run each built-in scenario with and without its ablation and summarise the outcome."""

from unistore.checker import check_trace
from unistore.history import history_from_trace
from unistore.scenario import builtin, run

CASES = [
    ("fig1", []), ("fig1", ["disable_forwarding"]),
    ("fig2", []), ("fig2", ["skip_strong_uniform_barrier"]),
    ("migration", []), ("recovery", []), ("recovery_unknown", []),
]


def main():
    for name, flags in CASES:
        sc = builtin(name)
        sc.flags = flags
        tr = run(sc)
        findings = check_trace(tr)
        h = history_from_trace(tr)
        labelled = sorted({it.label for it in h.X if it.label})
        print(f"== {name} {' '.join(flags) or '(protocol as specified)'}")
        print(f"   ended at tick {tr.end['t']}, quiescent={tr.end['quiescent']}, "
              f"crashes={[e['dc'] for e in tr.of('crash')]}")
        print(f"   committed labels: {', '.join(labelled)}")
        for f in findings:
            print(f"   FINDING {f}")
        if not findings:
            print("   no findings")


if __name__ == "__main__":
    main()
