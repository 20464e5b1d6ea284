import io
import json
import subprocess
import sys

import pytest

from unistore.cli import EXIT_FINDINGS, EXIT_OK, EXIT_USAGE, main


def cli(*argv):
    out = io.StringIO()
    code = main(list(argv), out)
    return code, out.getvalue()


def test_run_fig1_clean(tmp_path):
    trace, rep = tmp_path / "t.jsonl", tmp_path / "r.json"
    code, out = cli("run", "--scenario", "fig1", "--seed", "7", "--trace-out", str(trace),
                    "--report-out", str(rep))
    assert code == EXIT_OK and "no findings" in out
    assert json.loads(rep.read_text())["ok"] is True
    assert trace.read_text().startswith("{")


def test_run_fig1_without_forwarding(tmp_path):
    rep = tmp_path / "r.json"
    code, out = cli("run", "--scenario", "fig1", "--no-forwarding", "--report-out", str(rep))
    assert code == EXIT_FINDINGS
    assert "[EventualVisibility]" in out and "(t2)" in out
    body = json.loads(rep.read_text())
    assert body["counts"]["EventualVisibility"] >= 1 and str(rep) in out


def test_run_fig2_skip_barrier_reports_liveness():
    code, out = cli("run", "--scenario", "fig2", "--skip-uniform-barrier")
    assert code == EXIT_FINDINGS and "[Liveness]" in out and "aborted attempts" in out


def test_run_with_mutation_flag_records_it(tmp_path):
    trace = tmp_path / "t.jsonl"
    cli("run", "--scenario", "recovery", "--mutation", "drop_lamport_merge", "--no-check",
        "--trace-out", str(trace))
    assert json.loads(trace.read_text().splitlines()[0])["flags"] == ["drop_lamport_merge"]


def test_seed_falls_back_to_environment(monkeypatch):
    monkeypatch.setenv("UNISTORE_SIM_SEED", "123")
    _, out = cli("run", "--scenario", "fig1", "--no-check")
    assert "seed=123" in out
    monkeypatch.setenv("UNISTORE_SIM_SEED", "abc")
    assert cli("run", "--scenario", "fig1")[0] == EXIT_USAGE


def test_check_round_trip(tmp_path):
    trace = tmp_path / "t.jsonl"
    cli("run", "--scenario", "migration", "--trace-out", str(trace), "--no-check")
    code, out = cli("check", str(trace), "--paranoid")
    assert code == EXIT_OK


def test_check_with_oracle_on_tiny_trace(tmp_path):
    trace = tmp_path / "t.jsonl"
    cli("run", "--scenario", "recovery", "--trace-out", str(trace), "--no-check")
    code, out = cli("check", str(trace), "--oracle")
    assert code == EXIT_OK and "oracle: satisfiable" in out


def test_check_mutated_trace_fails(tmp_path):
    trace = tmp_path / "t.jsonl"
    cli("run", "--scenario", "fig2", "--trace-out", str(trace), "--no-check")
    lines = trace.read_text().splitlines()
    events = [json.loads(x) for x in lines[1:]]
    i = next(n for n, e in enumerate(events) if e["ev"] == "deliver" and e["txs"])
    lines.insert(i + 2, lines[i + 1])
    trace.write_text("\n".join(lines) + "\n")
    code, out = cli("check", str(trace))
    assert code == EXIT_FINDINGS and "TCS.deliver_once" in out


def test_check_malformed_trace_names_line(tmp_path, capsys):
    bad = tmp_path / "bad.jsonl"
    bad.write_text('{"version": 1}\nnot json\n')
    assert cli("check", str(bad))[0] == EXIT_USAGE
    assert "line 2" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["run", "--scenario", "nope"],
    ["check", "/nonexistent/trace.jsonl"],
])
def test_usage_errors(argv):
    assert cli(*argv)[0] == EXIT_USAGE


def test_bad_scenario_file(tmp_path):
    p = tmp_path / "sc.json"
    p.write_text(json.dumps({"name": "x", "D": 4, "f": 1}))
    assert cli("run", "--scenario", str(p))[0] == EXIT_USAGE


def test_argparse_errors_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["run"], io.StringIO())
    assert exc.value.code == 2
    with pytest.raises(SystemExit) as exc:
        main(["fuzz", "--fuzz-n", "-1"], io.StringIO())
    assert exc.value.code == 2


def test_fuzz_zero_runs():
    code, out = cli("fuzz", "--fuzz-n", "0")
    assert code == EXIT_OK and "fuzzed 0" in out


def test_fuzz_small_clean():
    code, out = cli("fuzz", "--fuzz-n", "5", "--seed", "0")
    assert code == EXIT_OK


def test_fuzz_mutation_reports_first_failing_seed(tmp_path):
    sc = tmp_path / "sc.json"
    code, out = cli("fuzz", "--fuzz-n", "50", "--expose-remote-early",
                    "--scenario-out", str(sc), "--trace-out", str(tmp_path / "t.jsonl"))
    assert code == EXIT_FINDINGS and "first failing seed" in out
    seed = int(out.split("first failing seed: ")[1].split()[0])
    assert json.loads(sc.read_text())["seed"] == seed
    # The saved scenario reproduces the failure.
    assert cli("run", "--scenario", str(sc))[0] == EXIT_FINDINGS


def test_suite_runs_all_builtins():
    code, out = cli("suite")
    assert code == EXIT_OK
    assert out.count(": ok") == 5


def test_console_entry_point():
    res = subprocess.run([sys.executable, "-m", "unistore.cli", "run", "--scenario", "fig1"],
                         capture_output=True, text=True)
    assert res.returncode == 0 and "no findings" in res.stdout
