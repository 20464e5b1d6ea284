"""Command-line front end: run scenarios, check traces, fuzz."""

from __future__ import annotations

import argparse
import json
import os
import sys
import time

from .checker import Finding, OracleRefused, brute_force_oracle, check_trace, write_report
from .fuzz import FuzzParams, fuzz, random_scenario
from .history import history_from_trace
from .metadata import ConfigError
from .scenario import BUILTINS, MUTATIONS, Scenario, builtin, run
from .trace import Trace, TraceError

EXIT_OK, EXIT_FINDINGS, EXIT_USAGE = 0, 1, 2

ABLATION_FLAGS = (
    ("--no-forwarding", "disable_forwarding", "do not forward transactions of suspected data centers"),
    ("--skip-uniform-barrier", "skip_strong_uniform_barrier",
     "certify strong transactions without waiting for their dependencies to be uniform"),
    ("--expose-remote-early", "expose_remote_before_uniform",
     "let snapshots include remote transactions before they are uniform"),
)


def _env_seed():
    raw = os.environ.get("UNISTORE_SIM_SEED")
    if raw is None:
        return None
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"UNISTORE_SIM_SEED must be an integer, got {raw!r}") from None


def _flags(args) -> list:
    out = [name for opt, name, _ in ABLATION_FLAGS if getattr(args, name)]
    return out + list(args.mutation or [])


def _add_flag_options(p) -> None:
    for opt, name, help_ in ABLATION_FLAGS:
        p.add_argument(opt, dest=name, action="store_true", help=help_)
    p.add_argument("--mutation", action="append", choices=MUTATIONS,
                   help="inject a protocol mutation (repeatable)")


def _load_scenario(ref: str) -> Scenario:
    if ref in BUILTINS:
        return builtin(ref)
    if os.path.exists(ref):
        return Scenario.load(ref)
    raise ConfigError(f"--scenario must be a file or one of {', '.join(BUILTINS)}; got {ref!r}")


def _print_findings(findings, out) -> None:
    for f in findings:
        print(f"FINDING {f}", file=out)


def _finish(trace, findings, report_out, out) -> int:
    _print_findings(findings, out)
    if report_out:
        write_report(report_out, trace, findings)
    if findings:
        where = f"; report at {report_out}" if report_out else ""
        print(f"{len(findings)} finding(s){where}", file=out)
        return EXIT_FINDINGS
    print("no findings", file=out)
    return EXIT_OK


def cmd_run(args, out) -> int:
    sc = _load_scenario(args.scenario)
    seed = args.seed if args.seed is not None else _env_seed()
    if seed is not None:
        sc.seed = seed
    if args.max_ticks is not None:
        sc.max_ticks = args.max_ticks
    sc.flags = sorted(set(sc.flags) | set(_flags(args)))
    sc.validate()
    t0 = time.perf_counter()
    trace = run(sc)
    elapsed = time.perf_counter() - t0
    if args.trace_out:
        trace.write(args.trace_out)
    print(f"ran {sc.name} seed={sc.seed} flags={sc.flags} until tick {trace.end['t']} "
          f"({len(trace.events)} events, {elapsed:.3f}s)", file=out)
    if args.no_check:
        return EXIT_OK
    findings = check_trace(trace, paranoid=args.paranoid, oracle=args.oracle)
    return _finish(trace, findings, args.report_out, out)


def cmd_check(args, out) -> int:
    trace = Trace.read(args.trace)
    findings = check_trace(trace, paranoid=args.paranoid)
    if args.oracle:
        h = history_from_trace(trace)
        try:
            sat = brute_force_oracle(h)
            print(f"oracle: {'satisfiable' if sat else 'unsatisfiable'}", file=out)
            if not sat:
                findings.append(Finding("Oracle", "no abstract execution satisfies the axioms"))
        except OracleRefused as exc:
            print(f"oracle refused: {exc}", file=out)
    return _finish(trace, findings, args.report_out, out)


def cmd_fuzz(args, out) -> int:
    seed = args.seed if args.seed is not None else (_env_seed() or 0)
    params = FuzzParams(flags=_flags(args))
    if args.max_ticks is not None:
        params.max_ticks = args.max_ticks
    t0 = time.perf_counter()
    results = fuzz(args.fuzz_n, seed, params, stop_on_failure=not args.keep_going,
                   keep_traces=True)
    failing = [r for r in results if r.findings]
    print(f"fuzzed {len(results)} scenario(s) from seed {seed} flags={params.flags} "
          f"in {time.perf_counter() - t0:.2f}s", file=out)
    if not failing:
        print("no findings", file=out)
        return EXIT_OK
    first = failing[0]
    print(f"first failing seed: {first.seed}", file=out)
    _print_findings(first.findings, out)
    if args.trace_out:
        first.trace.write(args.trace_out)
    if args.report_out:
        write_report(args.report_out, first.trace, first.findings)
        print(f"report at {args.report_out}", file=out)
    if args.scenario_out:
        with open(args.scenario_out, "w") as fh:
            json.dump(random_scenario(first.seed, params).to_json(), fh, indent=1)
    return EXIT_FINDINGS


def cmd_suite(args, out) -> int:
    bad = 0
    for name in BUILTINS:
        sc = builtin(name)
        trace = run(sc)
        findings = check_trace(trace)
        print(f"{name}: {'ok' if not findings else f'{len(findings)} finding(s)'}", file=out)
        _print_findings(findings, out)
        bad += bool(findings)
    return EXIT_FINDINGS if bad else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="unistore", description=__doc__)
    sub = p.add_subparsers(dest="cmd", required=True)

    r = sub.add_parser("run", help="run a scenario and check its trace")
    r.add_argument("--scenario", required=True, help=f"scenario file or one of {', '.join(BUILTINS)}")
    r.add_argument("--seed", type=int, help="simulation seed (default: $UNISTORE_SIM_SEED, then the scenario's)")
    r.add_argument("--max-ticks", type=int)
    r.add_argument("--trace-out")
    r.add_argument("--report-out")
    r.add_argument("--oracle", action="store_true", help="also run the brute-force oracle (tiny histories)")
    r.add_argument("--paranoid", action="store_true", help="re-derive client clocks and vectors")
    r.add_argument("--no-check", action="store_true", help="only run and write the trace")
    _add_flag_options(r)
    r.set_defaults(func=cmd_run)

    c = sub.add_parser("check", help="check a trace file")
    c.add_argument("trace")
    c.add_argument("--oracle", action="store_true")
    c.add_argument("--paranoid", action="store_true")
    c.add_argument("--report-out")
    c.set_defaults(func=cmd_check)

    f = sub.add_parser("fuzz", help="run and check random scenarios")
    f.add_argument("--fuzz-n", type=int, default=100)
    f.add_argument("--seed", type=int, help="first seed (default: $UNISTORE_SIM_SEED, then 0)")
    f.add_argument("--max-ticks", type=int)
    f.add_argument("--keep-going", action="store_true", help="do not stop at the first failing seed")
    f.add_argument("--trace-out", help="where to write the first failing trace")
    f.add_argument("--report-out")
    f.add_argument("--scenario-out", help="where to write the first failing scenario")
    _add_flag_options(f)
    f.set_defaults(func=cmd_fuzz)

    s = sub.add_parser("suite", help="run every built-in scenario")
    s.set_defaults(func=cmd_suite)
    return p


def main(argv=None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "fuzz_n", 0) < 0:
        parser.error("--fuzz-n must be non-negative")
    try:
        return args.func(args, out)
    except (ConfigError, TraceError, OSError) as exc:
        print(f"unistore: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
