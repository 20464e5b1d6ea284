"""Replication of causal transactions, forwarding, and stability metadata."""

from __future__ import annotations

from itertools import combinations

from .metadata import VectorTimestamp
from .sim import replica_addr


def uniform_groups(D: int, f: int, d: int) -> list:
    """All groups of f+1 data centers that include ``d``."""
    others = [i for i in range(1, D + 1) if i != d]
    return [(d,) + g for g in combinations(others, f)]


def uniform_candidate(stable_matrix: dict, groups: list, j: int) -> int:
    """Max over groups of the min over members of stableMatrix[h][j]."""
    return max(min(stable_matrix[h][j] for h in g) for g in groups)


class ReplicationMixin:
    def propagate_local_txs(self) -> None:
        d = self.dc
        if not self.prepared_causal:
            self._set_known(d, self.clock_tick())
        else:
            self._set_known(d, min(ts for _, ts in self.prepared_causal.values()) - 1)
        mine = self.committed_causal[d]
        txs = sorted((r for r in mine.values() if r.commit_vec[d] <= self.known[d]),
                     key=lambda r: r.commit_vec[d])
        if txs:
            for i in self.other_dcs:
                self.send(replica_addr(i, self.m), "replicate", origin=d, txs=txs)
            for r in txs:
                del mine[r.tid]
            self.emit("replicate", origin=d, tids=[str(r.tid) for r in txs])
        else:
            for i in self.other_dcs:
                self.send(replica_addr(i, self.m), "heartbeat", origin=d, ts=self.known[d])

    def on_replicate(self, src, origin, txs):
        for r in sorted(txs, key=lambda r: r.commit_vec[origin]):
            if r.commit_vec[origin] > self.known[origin]:
                self.append_log(r.tid, r.writes, r.commit_vec, r.lamport)
                self.committed_causal[origin][r.tid] = r
                self._set_known(origin, r.commit_vec[origin])

    def on_heartbeat(self, src, origin, ts):
        if ts > self.known[origin]:
            self._set_known(origin, ts)

    def forward_remote_txs(self, i: int, j: int) -> None:
        """Forward txs received from suspected DC ``j`` to DC ``i``."""
        seen = self.global_matrix[i][j]
        txs = sorted((r for r in self.committed_causal[j].values() if r.commit_vec[j] > seen),
                     key=lambda r: r.commit_vec[j])
        if txs:
            self.send(replica_addr(i, self.m), "replicate", origin=j, txs=txs)
            self.emit("forward", to=i, about=j, tids=[str(r.tid) for r in txs])
        else:
            self.send(replica_addr(i, self.m), "heartbeat", origin=j, ts=self.known[j])

    def broadcast_vecs(self) -> None:
        for i in range(1, self.D + 1):
            self.send(replica_addr(i, self.m), "knownvec_global", frm=self.dc, vec=self.known)
        for l in range(1, self.N + 1):
            self.send(replica_addr(self.dc, l), "knownvec_local", frm=self.m, vec=self.known)
        for i in range(1, self.D + 1):
            self.send(replica_addr(i, self.m), "stablevec", frm=self.dc, vec=self.stable)

    def on_knownvec_local(self, src, frm, vec):
        self.local_matrix[frm] = vec
        rows = self.local_matrix.values()
        stable = VectorTimestamp._raw(tuple(min(r[i] for r in rows) for i in range(self.D + 1)))
        if stable != self.stable:
            self._set_stable(stable)

    def on_stablevec(self, src, frm, vec):
        self.stable_matrix[frm] = vec
        for j in range(1, self.D + 1):
            self._raise_uniform(j, uniform_candidate(self.stable_matrix, self.groups, j))

    def on_knownvec_global(self, src, frm, vec):
        self.global_matrix[frm] = vec

    def collect_garbage(self) -> None:
        """Drop committedCausal records every DC is known to store."""
        for j in self.other_dcs:
            floor = min(self.global_matrix[i][j] for i in range(1, self.D + 1))
            recs = self.committed_causal[j]
            for tid in [t for t, r in recs.items() if r.commit_vec[j] <= floor]:
                del recs[tid]


