import pytest

from support import vt
from unistore.metadata import TxId
from unistore.tcs import ABORT, COMMIT, DecidedEntry, PreparedEntry, certification_check, leader_of

SNAP = vt([0, 0, 0], 5)


def decided(keys_written, cv, lc=3, rset=(), decision=COMMIT, m=1):
    return DecidedEntry(TxId(1, m, lc), {m: {k: 0 for k in keys_written}}, frozenset(rset),
                        decision, cv, lc, 1)


def prepared(keys_written, rset=(), vote=COMMIT, m=1):
    return PreparedEntry(TxId(2, m, 1), {m: {k: 0 for k in keys_written}}, frozenset(rset),
                         SNAP, vote, 40, 2, 2)


def test_leader_rotation():
    assert [leader_of(b, 3) for b in range(5)] == [1, 2, 3, 1, 2]


def test_decided_writer_inside_snapshot_commits():
    vote, lc = certification_check(1, {"y"}, {"k"}, SNAP, 1, [], [decided({"k"}, vt([0, 0, 0], 4))])
    assert vote == COMMIT and lc == 4


def test_decided_writer_outside_snapshot_aborts():
    vote, _ = certification_check(1, {"y"}, {"k"}, SNAP, 1, [], [decided({"k"}, vt([0, 0, 0], 9))])
    assert vote == ABORT


def test_prepared_conflict_aborts():
    vote, _ = certification_check(1, set(), {"k"}, SNAP, 1, [prepared({"k"})], [])
    assert vote == ABORT
    vote, _ = certification_check(1, {"k"}, {"k"}, SNAP, 1, [prepared(set(), rset={"k"})], [])
    assert vote == ABORT


def test_prepared_abort_vote_is_ignored():
    vote, _ = certification_check(1, set(), {"k"}, SNAP, 1, [prepared({"k"}, vote=ABORT)], [])
    assert vote == COMMIT


def test_reader_outside_snapshot_aborts_a_writer_unless_literal():
    reader = decided(set(), vt([0, 0, 0], 9), rset={"k"})
    assert certification_check(1, {"k"}, {"k"}, SNAP, 1, [], [reader])[0] == ABORT
    assert certification_check(1, {"k"}, {"k"}, SNAP, 1, [], [reader], literal=True)[0] == COMMIT


def test_skip_decided_mutation_commits_stale_reader():
    stale = decided({"k"}, vt([0, 0, 0], 9))
    assert certification_check(1, set(), {"k"}, SNAP, 1, [], [stale], skip_decided=True)[0] == COMMIT


def test_non_conflicting_decided_only_lifts_lamport():
    vote, lc = certification_check(1, {"y"}, {"y"}, SNAP, 2, [], [decided({"z"}, vt([0, 0, 0], 9), lc=6)])
    assert (vote, lc) == (COMMIT, 7)


def test_aborted_decisions_do_not_count():
    vote, lc = certification_check(1, set(), {"k"}, SNAP, 2, [],
                                   [decided({"k"}, vt([0, 0, 0], 9), lc=8, decision=ABORT)])
    assert (vote, lc) == (COMMIT, 2)


def test_other_partition_writes_do_not_conflict():
    other = decided({"k"}, vt([0, 0, 0], 9), m=2)
    assert certification_check(1, set(), {"k"}, SNAP, 1, [], [other])[0] == COMMIT


@pytest.mark.parametrize("name", ["fig2", "recovery"])
def test_strong_commit_vector_extends_snapshot(name):
    from unistore.scenario import builtin, run
    tr = run(builtin(name))
    for e in tr.of("decide"):
        if e["decision"] == COMMIT:
            c = next(x for x in tr.of("certify") if x["tid"] == e["tid"])
            assert e["cv"]["dc"] == c["snap"]["dc"]
            assert e["cv"]["strong"] > c["snap"]["strong"]
