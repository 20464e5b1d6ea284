import copy

import pytest

from support import barrier, history, tx, vt
from unistore.checker import (
    FINITE_EV, check_causal, check_conflict_ordering, check_eventual_visibility, check_history,
    check_paranoid, check_rval, check_tcs, check_trace, derive_relations,
)
from unistore.history import history_from_trace
from unistore.scenario import builtin, run
from unistore.trace import Trace, TraceError

Z = vt([0, 0])


def axioms(fs):
    return sorted({f.axiom for f in fs})


# --- derive_relations -------------------------------------------------------

def test_session_successor_is_visible():
    h = history(2, tx("a", 1, 1, vt([1, 0]), Z, [("w", "x", 1)]),
                tx("b", 1, 2, vt([2, 0]), vt([1, 0]), [("r", "x", 1)]))
    ae = derive_relations(h)
    assert ae.vis(1, 2) and not ae.vis(2, 1)
    assert ae.vis(0, 1) and ae.vis(0, 2)
    assert check_history(h) == []


def test_concurrent_txs_are_not_related():
    h = history(2, tx("a", 1, 1, vt([1, 0]), Z, [("w", "x", 1)]),
                tx("b", 2, 1, vt([0, 1]), Z, [("w", "x", 2)], dc=2))
    ae = derive_relations(h)
    assert not ae.vis(1, 2) and not ae.vis(2, 1)
    assert ae.ar == [0, 1, 2]


def test_conflicting_strong_pair_follows_strong_timestamps():
    h = history(2, tx("s1", 1, 1, vt([0, 0], 5), Z, [("w", "x", 1)], kind="strong"),
                tx("s2", 2, 2, vt([0, 0], 8), vt([0, 0], 5), [("r", "x", 1), ("w", "x", 2)],
                   kind="strong"))
    ae = derive_relations(h)
    assert ae.vis(1, 2) and not ae.vis(2, 1)
    assert check_conflict_ordering(ae) == []


def test_missing_vector_is_trace_error():
    h = history(2, tx("a", 1, 1, None, Z, []))
    with pytest.raises(TraceError):
        derive_relations(h)


# --- read values -------------------------------------------------------------

def test_buffered_read_satisfies_internal_reads():
    h = history(2, tx("a", 1, 1, vt([1, 0]), Z, [("w", "x", 7), ("r", "x", 7)]))
    assert check_rval(derive_relations(h)) == []


def test_internal_read_mismatch():
    h = history(2, tx("a", 1, 1, vt([1, 0]), Z, [("w", "x", 7), ("r", "x", 8)]))
    assert axioms(check_rval(derive_relations(h))) == ["IntRVal"]


def _lww(read):
    return history(2, tx("w1", 1, 1, vt([1, 0]), Z, [("w", "x", "a")]),
                   tx("w2", 2, 2, vt([0, 1]), Z, [("w", "x", "b")], dc=2),
                   tx("r", 3, 3, vt([1, 1]), vt([1, 1]), [("r", "x", read)]))


def test_lww_reader_sees_larger_lamport():
    assert check_rval(derive_relations(_lww("b"))) == []
    fs = check_rval(derive_relations(_lww("a")))
    assert axioms(fs) == ["ExtRVal"] and fs[0].witnesses == ["r", "w2"]


def test_stale_read_below_snapshot():
    h = history(2, tx("w", 1, 1, vt([1, 0]), Z, [("w", "x", 1)]),
                tx("r", 2, 2, vt([1, 0]), vt([1, 0]), [("r", "x", None)]))
    assert axioms(check_rval(derive_relations(h))) == ["ExtRVal"]


def test_unwritten_key_reads_initial_value():
    h = history(2, tx("r", 1, 1, Z, Z, [("r", "nothing", None)]))
    assert check_history(h) == []


# --- causality -------------------------------------------------------------

def test_empty_history_passes():
    assert check_history(history(2)) == []


def test_intransitive_visibility_is_caught():
    h = history(2, tx("a", 1, 1, vt([2, 0]), Z, []),
                tx("b", 2, 2, vt([0, 1]), vt([2, 0]), [], dc=2),
                tx("c", 3, 3, vt([0, 1]), vt([0, 1]), [], dc=2))
    fs = check_causal(derive_relations(h))
    assert any("not transitive" in f.message for f in fs)


def test_session_order_outside_vis_is_caught():
    h = history(2, tx("a", 1, 1, vt([3, 0]), Z, []),
                tx("b", 1, 2, vt([1, 0]), vt([1, 0]), []))
    fs = check_causal(derive_relations(h))
    assert any("session order" in f.message for f in fs)


def test_duplicate_lamport_stamps_are_caught():
    h = history(2, tx("a", 1, 1, vt([1, 0]), Z, []), barrier("b", 1, 1, vt([1, 0])))
    assert "CausalArbitration" in axioms(check_causal(derive_relations(h)))


def test_unordered_conflicting_strong_pair():
    h = history(2, tx("s1", 1, 1, vt([0, 0], 5), Z, [("w", "x", 1)], kind="strong"),
                tx("s2", 2, 2, vt([0, 0], 8), Z, [("w", "x", 2)], kind="strong"))
    assert axioms(check_conflict_ordering(derive_relations(h))) == ["ConflictOrdering"]


def test_non_conflicting_strong_pair_is_unconstrained():
    h = history(2, tx("s1", 1, 1, vt([0, 0], 5), Z, [("w", "x", 1)], kind="strong"),
                tx("s2", 2, 2, vt([0, 0], 8), Z, [("w", "y", 2)], kind="strong"))
    assert check_conflict_ordering(derive_relations(h)) == []


# --- eventual visibility ----------------------------------------------------

def _end(logs, frontier, crashed=()):
    reps = []
    for d in (1, 2, 3):
        reps.append({"dc": d, "m": 1, "crashed": d in crashed, "log": logs.get(d, []),
                     "frontier": frontier.to_json()})
    return {"correct": [d for d in (1, 2, 3) if d not in crashed], "replicas": reps}


def _ev_history():
    z3 = vt([0, 0, 0])
    return history(3, tx("1.1.1", 1, 1, vt([5, 0, 0]), z3, [("w", "x", 1)], dc=1))


def test_ev_passes_when_stored_and_exposed_everywhere():
    end = _end({1: ["1.1.1"], 2: ["1.1.1"], 3: ["1.1.1"]}, vt([5, 0, 0]))
    assert check_eventual_visibility(_ev_history(), end, {"N": 1}) == []


def test_ev_flags_missing_log_with_finite_note():
    end = _end({1: ["1.1.1"], 2: ["1.1.1"]}, vt([5, 0, 0]))
    (f,) = check_eventual_visibility(_ev_history(), end, {"N": 1})
    assert f.axiom == "EventualVisibility" and f.note == FINITE_EV
    assert "log of dc 3" in f.message


def test_ev_flags_unexposed_tx():
    end = _end({1: ["1.1.1"], 2: ["1.1.1"], 3: ["1.1.1"]}, vt([4, 0, 0]))
    (f,) = check_eventual_visibility(_ev_history(), end, {"N": 1})
    assert "frontier" in f.message


def test_ev_exempts_lost_tx_of_crashed_dc():
    end = _end({}, vt([0, 0, 0]), crashed=(1,))
    assert check_eventual_visibility(_ev_history(), end, {"N": 1}) == []


def test_ev_requires_barriered_tx_of_crashed_dc():
    z3 = vt([0, 0, 0])
    h = history(3, tx("1.1.1", 1, 1, vt([5, 0, 0]), z3, [("w", "x", 1)], dc=1),
                barrier("b", 1, 2, vt([5, 0, 0])))
    end = _end({}, vt([0, 0, 0]), crashed=(1,))
    (f,) = check_eventual_visibility(h, end, {"N": 1})
    assert "visible to b" in f.message


def test_ev_without_end_state():
    assert axioms(check_eventual_visibility(_ev_history(), None)) == ["EventualVisibility"]


# --- whole traces -------------------------------------------------------------

@pytest.fixture(scope="module")
def fig2_trace():
    return run(builtin("fig2"))


def test_clean_builtin_traces(fig2_trace):
    assert check_trace(fig2_trace, paranoid=True) == []


def test_history_includes_barrier_and_attach():
    h = history_from_trace(run(builtin("migration")))
    kinds = [it.kind for it in h.items]
    assert kinds.count("barrier") == 1 and kinds.count("attach") == 1
    assert [h.items[i].label for i in h.sessions[1]][-1] == "after"


def _mutate(trace, fn):
    t = Trace(copy.deepcopy(trace.header), copy.deepcopy(trace.events))
    fn(t.events)
    return t


def _first(events, ev, pred=lambda e: True):
    return next(i for i, e in enumerate(events) if e["ev"] == ev and pred(e))


def test_tcs_duplicate_delivery(fig2_trace):
    def dup(evs):
        i = _first(evs, "deliver", lambda e: e["txs"])
        evs.insert(i + 1, copy.deepcopy(evs[i]))
    assert "TCS.deliver_once" in axioms(check_tcs(_mutate(fig2_trace, dup)))


def test_tcs_deliver_before_certify(fig2_trace):
    def early(evs):
        i = _first(evs, "deliver", lambda e: e["txs"])
        evs.insert(0, dict(evs[i], dc=99))
    assert "TCS.certify_before_deliver" in axioms(check_tcs(_mutate(fig2_trace, early)))


def test_tcs_conflicting_decisions(fig2_trace):
    def flip(evs):
        i = _first(evs, "decide", lambda e: e["decision"] == "commit")
        evs.append({"t": 0, "ev": "decide", "tid": evs[i]["tid"], "decision": "abort"})
    assert "TCS.agreement" in axioms(check_tcs(_mutate(fig2_trace, flip)))


def test_tcs_double_certify(fig2_trace):
    def again(evs):
        i = _first(evs, "certify")
        evs.insert(i + 1, copy.deepcopy(evs[i]))
    assert "TCS.certify_once" in axioms(check_tcs(_mutate(fig2_trace, again)))


def test_tcs_decide_without_certify(fig2_trace):
    def drop(evs):
        del evs[_first(evs, "certify", lambda e: e["client"] != 0)]
    assert "TCS.decide_after_certify" in axioms(check_tcs(_mutate(fig2_trace, drop)))


def test_tcs_lamport_rule(fig2_trace):
    def lower(evs):
        i = _first(evs, "certify", lambda e: e["client"] == 3)
        tid = evs[i]["tid"]
        evs[i]["lc"] = 10_000
        assert any(e["ev"] == "decide" and e["tid"] == tid for e in evs)
    assert "TCS.lamport_rule" in axioms(check_tcs(_mutate(fig2_trace, lower)))


def _two_strong_writers():
    from unistore.scenario import Scenario
    step = {"op": "tx", "kind": "strong", "steps": [["r", "x"], ["w", "x", 1]]}
    return run(Scenario(name="pair", seed=9, N=1, clients=[
        {"id": 1, "dc": 1, "script": [step]},
        {"id": 2, "dc": 3, "script": [{"op": "sleep", "ticks": 150}, step]}]))


def test_tcs_stale_commit_breaks_decision_rule():
    tr = _two_strong_writers()
    assert check_tcs(tr) == []

    def stale(evs):
        for e in evs:
            if e["ev"] == "certify" and e["client"] == 2:
                e["snap"]["strong"] = 0
    assert "TCS.decision_rule" in axioms(check_tcs(_mutate(tr, stale)))


def test_tcs_missing_delivery(fig2_trace):
    def drop(evs):
        tid = next(e["tid"] for e in evs if e["ev"] == "certify" and e["client"] == 3)
        for e in evs:
            if e["ev"] == "deliver" and e["dc"] == 2:
                e["txs"] = [x for x in e["txs"] if x[0] != tid]
    assert "TCS.delivery_liveness" in axioms(check_tcs(_mutate(fig2_trace, drop)))


def test_paranoid_catches_forged_clock(fig2_trace):
    def forge(evs):
        i = _first(evs, "commit_causal")
        evs[i]["lamport"]["lc"] += 5
    assert "Paranoid.lamport" in axioms(check_paranoid(_mutate(fig2_trace, forge)))


def test_trace_round_trip(tmp_path, fig2_trace):
    p = tmp_path / "t.jsonl"
    fig2_trace.write(p)
    back = Trace.read(p)
    assert back.to_jsonl() == fig2_trace.to_jsonl()


@pytest.mark.parametrize("text, where", [
    ("", "empty"),
    ('{"ev": "x"}\n', "line 1"),
    ('{"version": 1}\n{oops\n', "line 2"),
    ('{"version": 1}\n{"t": 1}\n', "line 2"),
    ('{"version": 1}\n[1]\n', "line 2"),
])
def test_malformed_traces(text, where):
    with pytest.raises(TraceError, match=where):
        Trace.from_jsonl(text)
