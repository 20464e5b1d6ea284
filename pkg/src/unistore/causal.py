"""Causal transaction execution at a partition replica.

Coordinator side (start/read/update/commit) and the replica-side handlers
for GET_VERSION, PREPARE and COMMIT, plus uniform barriers and attach.
"""

from __future__ import annotations

from dataclasses import dataclass

from .metadata import INITIAL_STAMP, STRONG, LamportStamp, TxId, VectorTimestamp
from .sim import Until, replica_addr


@dataclass(frozen=True)
class LogEntry:
    value: object
    commit_vec: VectorTimestamp
    lamport: LamportStamp
    tid: TxId


@dataclass
class CausalRecord:
    """A committed causal transaction as stored in committedCausal."""

    tid: TxId
    writes: dict  # key -> value, restricted to one partition
    commit_vec: VectorTimestamp
    lamport: LamportStamp


def snapshot(log: list, snap: VectorTimestamp):
    """Entry with the highest Lamport stamp among those with commitVec <= snap."""
    best = None
    for e in log:
        if e.commit_vec <= snap and (best is None or e.lamport > best.lamport):
            best = e
    return best


class CausalMixin:
    # --- coordinator ---------------------------------------------------

    def start_tx(self, V: VectorTimestamp, client: int):
        for i in self.other_dcs:
            self._raise_uniform(i, V[i])
        u = self.uniform
        if "expose_remote_before_uniform" in self.flags:
            for i in self.other_dcs:
                u = u.with_entry(i, max(u[i], self.known[i]))
        snap = u.with_entry(self.dc, max(V[self.dc], u[self.dc]))
        snap = snap.with_entry(STRONG, max(V[STRONG], self.stable[STRONG]))
        tid = self.new_tid()
        self.snap_vec[tid] = snap
        self.wbuff[tid] = {}
        self.rset[tid] = set()
        self.tx_client[tid] = client
        return tid, snap

    def do_read(self, tid: TxId, key: str):
        l = self.partition(key)
        bucket = self.wbuff[tid].get(l, {})
        if key in bucket:
            return bucket[key], None
        req = self.new_req()
        self.send(replica_addr(self.dc, l), "get_version",
                  req=req, snap=self.snap_vec[tid], key=key)
        yield Until(lambda: req in self.replies)
        value, lamport = self.replies.pop(req)
        self.rset[tid].add(key)
        return value, lamport

    def do_update(self, tid: TxId, key: str, value):
        self.wbuff[tid].setdefault(self.partition(key), {})[key] = value
        self.rset[tid].add(key)
        return "ok"

    def commit_causal(self, tid: TxId, lc: int):
        snap = self.snap_vec[tid]
        L = sorted(l for l, b in self.wbuff[tid].items() if b)
        if not L:
            self._forget(tid)
            return snap
        acks: dict = {}
        self.prepare_acks[tid] = acks
        for l in L:
            self.send(replica_addr(self.dc, l), "prepare",
                      tid=tid, writes=dict(self.wbuff[tid][l]), snap=snap)
        yield Until(lambda: len(acks) == len(L))
        del self.prepare_acks[tid]
        cv = snap.with_entry(self.dc, max([snap[self.dc]] + list(acks.values())))
        lamport = LamportStamp(lc, self.tx_client[tid])
        # Kept so the history has the outcome even if the reply is lost.
        self.sim.recorder.note("coord_commit", tid=str(tid), cv=cv.to_json(),
                               lamport=lamport.to_json())
        for l in L:
            self.send(replica_addr(self.dc, l), "commit", tid=tid, cv=cv, lamport=lamport)
        self._forget(tid)
        return cv

    def _forget(self, tid: TxId) -> None:
        for d in (self.snap_vec, self.wbuff, self.rset, self.tx_client):
            d.pop(tid, None)

    def on_version(self, src, req, value, lamport):
        self.replies[req] = (value, lamport)

    def on_prepare_ack(self, src, tid, ts):
        self.prepare_acks[tid][src[2]] = ts

    # --- replica side --------------------------------------------------

    def on_get_version(self, src, req, snap, key):
        for i in self.other_dcs:
            self._raise_uniform(i, snap[i])
        self.spawn(self._get_version(src, req, snap, key))

    def _get_version(self, src, req, snap, key):
        yield Until(lambda: self.known[self.dc] >= snap[self.dc]
                    and self.known[STRONG] >= snap[STRONG])
        e = snapshot(self.oplog.get(key, ()), snap)
        if e is None:
            value, lamport = None, INITIAL_STAMP
        else:
            value, lamport = e.value, e.lamport
        self.send(src, "version", req=req, value=value, lamport=lamport)

    def on_prepare(self, src, tid, writes, snap):
        for i in self.other_dcs:
            self._raise_uniform(i, snap[i])
        self.spawn(self._prepare(src, tid, writes, snap))

    def _prepare(self, src, tid, writes, snap):
        # Keep prepare times above the snapshot's local entry so that a
        # transaction never shares commitVec[d] with one it depends on.
        yield Until(lambda: self.clock_peek() > snap[self.dc], timed=True)
        ts = self.clock_tick()
        self.prepared_causal[tid] = (writes, ts)
        self.send(src, "prepare_ack", tid=tid, ts=ts)

    def on_commit(self, src, tid, cv, lamport):
        self.spawn(self._commit(tid, cv, lamport))

    def _commit(self, tid, cv, lamport):
        yield Until(lambda: self.clock_peek() >= cv[self.dc], timed=True)
        writes, _ = self.prepared_causal.pop(tid)
        rec = CausalRecord(tid, writes, cv, lamport)
        self.append_log(rec.tid, writes, cv, lamport)
        self.committed_causal[self.dc][tid] = rec
        if self.mon:
            self.mon.on_causal_commit(self, rec)

    def uniform_barrier(self, V: VectorTimestamp):
        yield Until(lambda: self.uniform[self.dc] >= V[self.dc])
        return "ok"

    def attach(self, V: VectorTimestamp):
        yield Until(lambda: all(self.uniform[i] >= V[i] for i in self.other_dcs))
        return "ok"
