"""Transaction certification service for strong transactions.

Per-partition ballot-based leaders run certification and a Paxos-style
accept phase across the sibling replicas of the partition; the coordinator
combines the per-partition votes (two-phase commit) and committed
transactions are delivered in strong-timestamp order. Leader changes go
through a recovery protocol.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass, field

from .metadata import STRONG, LamportStamp, TxId, VectorTimestamp
from .sim import Until, replica_addr

COMMIT = "commit"
ABORT = "abort"
UNKNOWN = "unknown"
NORMAL = "normal"
RESTORING = "restoring"

LEADER = "leader"
FOLLOWER = "follower"
RECOVERING = "recovering"


@dataclass(frozen=True)
class PreparedEntry:
    tid: TxId
    wbuff: dict  # partition -> {key: value}
    rset: frozenset
    snap: VectorTimestamp
    vote: str
    ts: int
    lc: int
    client: int


@dataclass(frozen=True)
class DecidedEntry:
    tid: TxId
    wbuff: dict
    rset: frozenset
    decision: str
    cv: VectorTimestamp
    lc: int
    client: int


@dataclass
class CertOutcome:
    decision: str
    commit_vec: VectorTimestamp | None = None
    lamport: LamportStamp | None = None


def leader_of(ballot: int, D: int) -> int:
    """Data center whose replica leads at ``ballot`` (ballot 0 -> DC 1)."""
    return ballot % D + 1


def certification_check(m: int, W, rset, snap: VectorTimestamp, lc: int,
                        prepared, decided, *, literal: bool = False,
                        skip_decided: bool = False):
    """Vote on a transaction at the leader of partition ``m``.

    ``W`` is the set of keys the transaction writes at ``m``. Entries in
    ``decided`` that committed and conflict with the transaction must be
    in its snapshot. By default a conflict is checked in both directions
    (the committed entry writes something read, or reads something
    written); ``literal`` restricts it to the first direction only.
    """
    for e in prepared:
        if e.vote != COMMIT:
            continue
        if e.wbuff.get(m, {}).keys() & rset or e.rset & W:
            return ABORT, None
    for e in decided:
        if e.decision != COMMIT:
            continue
        if not skip_decided:
            conflict = bool(e.wbuff.get(m, {}).keys() & rset)
            if not literal:
                conflict = conflict or bool(e.rset & W)
            if conflict and not e.cv <= snap:
                return ABORT, None
        if lc <= e.lc:
            lc = e.lc + 1
    return COMMIT, lc


@dataclass(eq=False)
class CertSession:
    rid: int
    tid: TxId
    L: list
    acks: dict = field(default_factory=dict)  # l -> b -> {dc: (vote, ts, lc)}
    unknown: dict = field(default_factory=dict)  # l -> set(dc)
    already: tuple | None = None
    quorum: int = 1

    def quorum_for(self, l):
        for b, got in sorted(self.acks.get(l, {}).items()):
            if len(got) >= self.quorum:
                return b, next(iter(got.values()))
        return None

    def unknown_quorum(self) -> bool:
        return any(len(s) >= self.quorum for s in self.unknown.values())

    def done(self) -> bool:
        if self.already is not None or self.unknown_quorum():
            return True
        return all(self.quorum_for(l) is not None for l in self.L)


class TcsMixin:
    RETRY_TIMEOUT = 20
    RETRY_AGE = 20
    HEARTBEAT_PERIOD = 10

    def init_tcs(self) -> None:
        self.ballot = 0
        self.cballot = 0
        self.trusted = leader_of(0, self.D)
        self.status = LEADER if self.dc == self.trusted else FOLLOWER
        self.prepared_strong: dict = {}
        self.decided_strong: dict = {}
        self.last_delivered = 0
        self.do_not_wait_for: set = set()
        self.cert_sessions: dict = {}  # tid -> [CertSession]
        self._prepared_at: dict = {}
        self._preparing: set = set()
        self._commit_ts: list = []  # sorted strong timestamps of committed entries
        self._commit_by_ts: dict = {}
        self._client_decided: dict = {}
        self._deliver_frontier = 0
        self._nl_acks: dict = {}
        self._ns_acks: dict = {}
        self._hb_inflight = False
        self._last_strong_progress = 0

    @property
    def quorum(self) -> int:
        return self.f + 1

    def replicas_m(self):
        return [replica_addr(i, self.m) for i in range(1, self.D + 1)]

    def broadcast_m(self, kind: str, **msg) -> None:
        for a in self.replicas_m():
            self.send(a, kind, **msg)

    # --- coordinator: commit_strong and certify ------------------------

    def commit_strong(self, tid: TxId, lc: int):
        snap = self.snap_vec[tid]
        if "skip_strong_uniform_barrier" not in self.flags:
            yield from self.uniform_barrier(snap)
        rset = frozenset(self.rset[tid])
        wbuff = {l: dict(b) for l, b in self.wbuff[tid].items() if b}
        out = yield from self.certify(NORMAL, tid, wbuff, rset, snap, lc, self.tx_client[tid])
        self._forget(tid)
        return out

    def certify(self, mode, tid, wbuff, rset, snap, lc, client):
        rid = self.new_req()
        L = sorted({l for l, b in wbuff.items() if b} | {self.partition(k) for k in rset})
        if not L:
            L = [self.m]
        self.sim.recorder.certify(tid, wbuff, rset, snap, lc, client, L)
        sess = CertSession(rid, tid, L, quorum=self.quorum)
        self.cert_sessions.setdefault(tid, []).append(sess)
        while True:
            for l in L:
                self.send(self.sim.omega(l), "prepare_strong", rid=rid, mode=mode, tid=tid,
                          wbuff=wbuff, rset=rset, snap=snap, lc=lc, client=client,
                          coord=self.addr)
            deadline = self.sim.now + self.RETRY_TIMEOUT
            self.wake_after(self.RETRY_TIMEOUT)
            yield Until(lambda: sess.done() or self.sim.now >= deadline)
            if sess.done():
                break
        self.cert_sessions[tid].remove(sess)
        if not self.cert_sessions[tid]:
            del self.cert_sessions[tid]
        if sess.unknown_quorum() and sess.already is None:
            return CertOutcome(UNKNOWN)
        if sess.already is not None:
            decision, cv, lcd = sess.already
            for l in L:
                self.send(self.sim.omega(l), "decision", b=None, tid=tid,
                          decision=decision, cv=cv, lc=lcd)
        else:
            votes = {l: sess.quorum_for(l) for l in L}
            cv = snap.with_entry(STRONG, max(v[1][1] for v in votes.values()))
            decision = ABORT if any(v[1][0] == ABORT for v in votes.values()) else COMMIT
            lcd = max((v[1][2] for v in votes.values() if v[1][2] is not None), default=None)
            for l in L:
                self.send(self.sim.omega(l), "decision", b=votes[l][0], tid=tid,
                          decision=decision, cv=cv, lc=lcd)
        self.sim.recorder.decide(tid, decision, cv, lcd, client)
        if decision == COMMIT:
            return CertOutcome(COMMIT, cv, LamportStamp(lcd, client))
        return CertOutcome(ABORT)

    def on_accept_ack(self, src, l, b, tid, vote, ts, lc):
        for sess in self.cert_sessions.get(tid, ()):
            sess.acks.setdefault(l, {}).setdefault(b, {})[src[1]] = (vote, ts, lc)

    def on_unknown_tx_ack(self, src, l, rid, tid):
        for sess in self.cert_sessions.get(tid, ()):
            if sess.rid == rid:
                sess.unknown.setdefault(l, set()).add(src[1])

    def on_already_decided(self, src, tid, decision, cv, lc):
        for sess in self.cert_sessions.get(tid, ()):
            if sess.already is None:
                sess.already = (decision, cv, lc)

    # --- leader: prepare, accept, decide, deliver ----------------------

    def on_prepare_strong(self, src, rid, mode, tid, wbuff, rset, snap, lc, client, coord):
        if self.status not in (LEADER, RESTORING):
            return
        if tid in self.decided_strong:
            e = self.decided_strong[tid]
            self.send(coord, "already_decided", tid=tid, decision=e.decision, cv=e.cv, lc=e.lc)
        elif tid in self.prepared_strong:
            self._send_accept(self.prepared_strong[tid], coord)
        elif mode == RESTORING:
            self.broadcast_m("unknown_tx", b=self.ballot, rid=rid, tid=tid, coord=coord)
        elif self.status == LEADER and tid not in self._preparing:
            self._preparing.add(tid)
            self.spawn(self._prepare_strong(tid, wbuff, rset, snap, lc, client, coord))

    def _prepare_strong(self, tid, wbuff, rset, snap, lc, client, coord):
        yield Until(lambda: self.clock_peek() > snap[STRONG], timed=True)
        self._preparing.discard(tid)
        if (self.status != LEADER or tid in self.decided_strong
                or tid in self.prepared_strong):
            return
        ts = self.clock_tick()
        W = set(wbuff.get(self.m, {}))
        vote, lc2 = certification_check(
            self.m, W, rset, snap, lc or 0, self.prepared_strong.values(),
            self._client_decided.values(),
            literal="literal_certification" in self.flags,
            skip_decided="skip_decided_check" in self.flags)
        entry = PreparedEntry(tid, wbuff, rset, snap, vote, ts, lc2, client)
        # Store locally at once so concurrent prepares see this entry.
        self._store_prepared(entry)
        self.emit("strong_prepared", tid=str(tid), vote=vote, ts=ts)
        self._send_accept(entry, coord)

    def _send_accept(self, e: PreparedEntry, coord) -> None:
        self.broadcast_m("accept", b=self.ballot, entry=e, coord=coord)

    def _store_prepared(self, e: PreparedEntry) -> None:
        if e.tid in self.decided_strong:
            return
        if e.tid not in self.prepared_strong:
            self._prepared_at[e.tid] = self.sim.now
        self.prepared_strong[e.tid] = e

    def on_accept(self, src, b, entry, coord):
        if self.status not in (LEADER, FOLLOWER, RESTORING) or self.ballot != b:
            return
        self._store_prepared(entry)
        self.send(coord, "accept_ack", l=self.m, b=b, tid=entry.tid,
                  vote=entry.vote, ts=entry.ts, lc=entry.lc)

    def on_decision(self, src, b, tid, decision, cv, lc):
        if self.status not in (LEADER, RESTORING):
            return
        if b is None:
            b = self.ballot
        if b != self.ballot:
            return
        self.spawn(self._decision(b, tid, decision, cv, lc))

    def _decision(self, b, tid, decision, cv, lc):
        yield Until(lambda: self.clock_peek() >= cv[STRONG], timed=True)
        self.broadcast_m("learn_decision", b=b, tid=tid, decision=decision, cv=cv, lc=lc)

    def on_learn_decision(self, src, b, tid, decision, cv, lc):
        if self.status not in (LEADER, FOLLOWER, RESTORING) or self.ballot != b:
            return
        p = self.prepared_strong.pop(tid, None)
        if p is None:
            return
        self._prepared_at.pop(tid, None)
        # The decision is taken once a replica learns it, before any delivery.
        self.sim.recorder.decide(tid, decision, cv, lc, p.client)
        self._add_decided(DecidedEntry(tid, p.wbuff, p.rset, decision, cv, lc, p.client))
        self._check_restored()
        self._try_deliver()

    def _add_decided(self, e: DecidedEntry) -> None:
        self.decided_strong[e.tid] = e
        if e.decision != COMMIT:
            return
        if e.wbuff or e.rset:
            self._client_decided[e.tid] = e
        ts = e.cv[STRONG]
        if ts not in self._commit_by_ts:
            bisect.insort(self._commit_ts, ts)
            self._commit_by_ts[ts] = []
        self._commit_by_ts[ts].append(e.tid)

    def _rebuild_decided(self, decided: dict) -> None:
        self.decided_strong = {}
        self._commit_ts = []
        self._commit_by_ts = {}
        self._client_decided = {}
        for tid in sorted(decided):
            self._add_decided(decided[tid])

    def _try_deliver(self) -> None:
        while self.status == LEADER:
            F = self._deliver_frontier
            i = bisect.bisect_right(self._commit_ts, F)
            if i == len(self._commit_ts):
                return
            ts = self._commit_ts[i]
            if any(p.vote == COMMIT and F < p.ts <= ts for p in self.prepared_strong.values()):
                return
            self._deliver_frontier = ts
            self.broadcast_m("deliver", b=self.ballot, ts=ts)

    def on_deliver(self, src, b, ts):
        if self.status not in (LEADER, FOLLOWER) or self.ballot != b:
            return
        if self.last_delivered >= ts:
            return
        # Deliver every committed timestamp up to ts, so a replica that
        # missed an earlier DELIVER (lost with a crashed leader) catches up.
        lo = bisect.bisect_right(self._commit_ts, self.last_delivered)
        hi = bisect.bisect_right(self._commit_ts, ts)
        self.last_delivered = ts
        for t in self._commit_ts[lo:hi]:
            W = []
            for tid in sorted(self._commit_by_ts[t]):
                e = self.decided_strong[tid]
                W.append((tid, e.wbuff.get(self.m, {}), e.cv, LamportStamp(e.lc or 0, e.client)))
            self.deliver_updates(W)

    def deliver_updates(self, W) -> None:
        for tid, writes, cv, lamport in sorted(W, key=lambda w: (w[2][STRONG], w[0])):
            self.append_log(tid, writes, cv, lamport)
            self._set_known(STRONG, max(self.known[STRONG], cv[STRONG]))
        self._last_strong_progress = self.sim.now
        self.sim.recorder.deliver(self.dc, self.m, [(w[0], w[2]) for w in W])

    def on_unknown_tx(self, src, b, rid, tid, coord):
        if self.status in (LEADER, FOLLOWER, RESTORING) and self.ballot == b:
            self.send(coord, "unknown_tx_ack", l=self.m, rid=rid, tid=tid)

    # --- periodic tasks -------------------------------------------------

    def retry_stuck(self) -> None:
        if self.status != LEADER:
            return
        for tid in sorted(self.prepared_strong):
            if tid in self.cert_sessions:
                continue
            if self.sim.now - self._prepared_at.get(tid, 0) < self.RETRY_AGE:
                continue
            e = self.prepared_strong[tid]
            self.spawn(self._retry(e))

    def _retry(self, e: PreparedEntry):
        yield from self.certify(NORMAL, e.tid, e.wbuff, e.rset, e.snap, e.lc, e.client)

    def heartbeat_strong(self) -> None:
        if self._hb_inflight:
            return
        if self.sim.now - self._last_strong_progress < self.HEARTBEAT_PERIOD:
            return
        self._hb_inflight = True
        self.spawn(self._heartbeat_strong())

    def _heartbeat_strong(self):
        tid = self.new_tid()
        yield from self.certify(NORMAL, tid, {}, frozenset(), VectorTimestamp.zero(self.D), 0, 0)
        self._hb_inflight = False

    # --- recovery --------------------------------------------------------

    def on_omega_change(self) -> None:
        omega = self.sim.omega(self.m)[1]
        if omega == self.trusted:
            return
        self.trusted = omega
        self.emit("omega", trusted=omega)
        if omega == self.dc:
            self.recover()
        else:
            self.send(replica_addr(omega, self.m), "nack", b=self.ballot)

    def on_nack(self, src, b):
        if self.trusted == self.dc and b > self.ballot:
            self.ballot = b
            self.recover()

    def recover(self) -> None:
        b = self.ballot + 1
        while leader_of(b, self.D) != self.dc:
            b += 1
        self.broadcast_m("new_leader", b=b)

    def on_new_leader(self, src, b):
        if self.trusted == src[1] and self.ballot < b:
            self.status = RECOVERING
            self.ballot = b
            self.do_not_wait_for = set()
            self.send(src, "new_leader_ack", b=b, cballot=self.cballot,
                      prepared=dict(self.prepared_strong), decided=dict(self.decided_strong))
        else:
            self.send(src, "nack", b=self.ballot)

    def on_new_leader_ack(self, src, b, cballot, prepared, decided):
        acks = self._nl_acks.setdefault(b, {})
        if acks is None:
            return
        acks[src[1]] = (cballot, prepared, decided)
        if len(acks) < self.quorum or self.status != RECOVERING or self.ballot != b:
            return
        self._nl_acks[b] = None
        top = max(c for c, _, _ in acks.values())
        J = [j for j in sorted(acks) if acks[j][0] == top]
        dec: dict = {}
        for j in J:
            dec.update(acks[j][2])
        prep: dict = {}
        for j in J:
            for tid, e in acks[j][1].items():
                if tid not in dec:
                    prep[tid] = e
        self._rebuild_decided(dec)
        self.prepared_strong = prep
        self._prepared_at = {tid: self.sim.now for tid in prep}
        target = max([e.ts for e in prep.values()] + [e.cv[STRONG] for e in dec.values()
                                                        if e.decision == COMMIT] + [0])
        self.spawn(self._finish_new_leader(b, target))

    def _finish_new_leader(self, b, target):
        yield Until(lambda: self.clock_peek() >= target, timed=True)
        if self.status != RECOVERING or self.ballot != b:
            return
        self.cballot = b
        self._ns_acks[b] = {self.dc}
        for a in self.replicas_m():
            if a != self.addr:
                self.send(a, "new_state", b=b, prepared=dict(self.prepared_strong),
                          decided=dict(self.decided_strong))
        self._maybe_restoring(b)

    def on_new_state(self, src, b, prepared, decided):
        if self.status != RECOVERING or b < self.ballot:
            return
        self.cballot = b
        self.prepared_strong = dict(prepared)
        self._prepared_at = {tid: self.sim.now for tid in prepared}
        self._rebuild_decided(decided)
        self.status = FOLLOWER
        self.send(src, "new_state_ack", b=b)

    def on_new_state_ack(self, src, b):
        if self.status != RECOVERING or self.ballot != b or b not in self._ns_acks:
            return
        self._ns_acks[b].add(src[1])
        self._maybe_restoring(b)

    def _maybe_restoring(self, b) -> None:
        if len(self._ns_acks[b]) < self.quorum:
            return
        self.status = RESTORING
        self.emit("restoring", ballot=b, prepared=[str(t) for t in sorted(self.prepared_strong)])
        for tid in sorted(self.prepared_strong):
            self.spawn(self._restore(self.prepared_strong[tid]))
        self._check_restored()

    def _restore(self, e: PreparedEntry):
        out = yield from self.certify(RESTORING, e.tid, e.wbuff, e.rset, e.snap, e.lc, e.client)
        if out.decision == UNKNOWN and self.status == RESTORING:
            self.do_not_wait_for.add(e.tid)
            self.emit("do_not_wait_for", tid=str(e.tid))
            self._check_restored()

    def _check_restored(self) -> None:
        if self.status == RESTORING and set(self.prepared_strong) <= self.do_not_wait_for:
            self.status = LEADER
            self.do_not_wait_for = set()
            self._deliver_frontier = self.last_delivered
            self.emit("leader", ballot=self.ballot)
            self._try_deliver()
