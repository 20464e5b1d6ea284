from itertools import combinations

from hypothesis import given
from hypothesis import strategies as st

from support import idle_run, vt
from unistore.causal import CausalRecord
from unistore.metadata import LamportStamp, TxId
from unistore.replication import uniform_candidate, uniform_groups


def queued(sim, kind=None):
    """Messages sitting in the simulator's queue as (dst, kind, msg)."""
    out = []
    for _, _, fn, args in sorted(sim._heap):
        if getattr(fn, "__name__", "") == "_deliver":
            _, dst, k, msg = args
            if kind is None or k == kind:
                out.append((dst, k, msg))
    return out


def test_uniform_groups_contain_self():
    assert uniform_groups(3, 1, 1) == [(1, 2), (1, 3)]
    gs = uniform_groups(5, 2, 3)
    assert len(gs) == 6 and all(g[0] == 3 and len(set(g)) == 3 for g in gs)


def test_uniform_candidate_hand_example():
    matrix = {1: vt([10, 10, 10]), 2: vt([4, 4, 4]), 3: vt([7, 7, 7])}
    assert uniform_candidate(matrix, uniform_groups(3, 1, 1), 2) == 7


def test_uniform_candidate_all_equal():
    matrix = {h: vt([5, 5, 5]) for h in (1, 2, 3)}
    assert uniform_candidate(matrix, uniform_groups(3, 1, 2), 1) == 5


@given(st.lists(st.integers(0, 30), min_size=5, max_size=5), st.integers(1, 5))
def test_uniform_candidate_matches_brute_force(col, d):
    matrix = {h: vt([col[h - 1]] * 5) for h in range(1, 6)}
    want = max(min(col[h - 1] for h in g)
               for g in combinations(range(1, 6), 3) if d in g)
    assert uniform_candidate(matrix, uniform_groups(5, 2, d), 1) == want


def test_stable_vector_is_componentwise_min_of_local_rows():
    run = idle_run(N=2)
    r = run.replicas[(1, 1)]
    r.on_knownvec_local(None, 1, vt([5, 3, 0]))
    r.on_knownvec_local(None, 2, vt([4, 6, 0]))
    assert r.stable == vt([4, 3, 0])


def test_stable_vector_single_partition_equals_row():
    run = idle_run(N=1)
    r = run.replicas[(2, 1)]
    r.on_knownvec_local(None, 1, vt([2, 9, 4], 6))
    assert r.stable == vt([2, 9, 4], 6)


def test_stablevec_raises_uniform():
    run = idle_run()
    r = run.replicas[(1, 1)]
    for h, x in ((1, 10), (2, 4), (3, 7)):
        r.on_stablevec(None, h, vt([0, x, 0]))
    assert r.uniform[2] == 7


def _record(dc, seq, cv_d, D=3):
    cv = vt([cv_d if i == dc else 0 for i in range(1, D + 1)])
    return CausalRecord(TxId(dc, 1, seq), {"k": seq}, cv, LamportStamp(seq, 1))


def test_propagate_with_no_prepared_uses_clock():
    run = idle_run()
    run.sim.now = 1
    r = run.replicas[(1, 1)]
    clock = r.clock_peek()
    rec = _record(1, 1, clock - 3)
    r.committed_causal[1][rec.tid] = rec
    r.propagate_local_txs()
    assert r.known[1] >= clock
    sent = queued(run.sim, "replicate")
    assert sorted(dst for dst, _, _ in sent) == [("R", 2, 1), ("R", 3, 1)]
    assert not r.committed_causal[1]


def test_propagate_holds_back_past_pending_prepare():
    run = idle_run()
    run.sim.now = 1
    r = run.replicas[(1, 1)]
    r.prepared_causal[TxId(1, 1, 9)] = ({"k": 0}, 60)
    rec = _record(1, 1, 70)
    r.committed_causal[1][rec.tid] = rec
    r.propagate_local_txs()
    assert r.known[1] == 59
    assert not queued(run.sim, "replicate")
    assert [m["ts"] for _, _, m in queued(run.sim, "heartbeat")] == [59, 59]


def test_replicate_is_idempotent_and_advances_known():
    run = idle_run()
    r = run.replicas[(2, 1)]
    a, b = _record(1, 1, 3), _record(1, 2, 5)
    r.on_replicate(None, 1, [b, a])
    assert r.known[1] == 5
    assert r.log_tids == {a.tid, b.tid}
    before = {k: list(v) for k, v in r.oplog.items()}
    r.on_replicate(None, 1, [a])
    assert r.oplog == before


def test_heartbeat_only_moves_forward():
    run = idle_run()
    r = run.replicas[(2, 1)]
    r.on_heartbeat(None, 3, 9)
    assert r.known[3] == 9
    r.on_heartbeat(None, 3, 4)
    assert r.known[3] == 9


def test_forward_sends_only_what_the_target_lacks():
    run = idle_run()
    r = run.replicas[(2, 1)]
    a, b = _record(1, 1, 3), _record(1, 2, 5)
    r.on_replicate(None, 1, [a, b])
    r.global_matrix[3] = vt([3, 0, 0])
    r.forward_remote_txs(3, 1)
    (dst, _, msg), = queued(run.sim, "replicate")
    assert dst == ("R", 3, 1) and [t.tid for t in msg["txs"]] == [b.tid]


def test_forward_heartbeat_when_target_is_current():
    run = idle_run()
    r = run.replicas[(2, 1)]
    r.on_replicate(None, 1, [_record(1, 1, 3)])
    r.global_matrix[3] = vt([3, 0, 0])
    r.forward_remote_txs(3, 1)
    assert not queued(run.sim, "replicate")
    assert [m["origin"] for _, _, m in queued(run.sim, "heartbeat")] == [1]


def test_broadcast_emits_three_kinds():
    run = idle_run(N=2)
    run.replicas[(1, 1)].broadcast_vecs()
    kinds = sorted({k for _, k, _ in queued(run.sim)})
    assert kinds == ["knownvec_global", "knownvec_local", "stablevec"]
