"""A partition replica p^m_d: state, clock, timers and message plumbing."""

from __future__ import annotations

import inspect
import zlib

from .causal import CausalMixin, LogEntry
from .metadata import TxId, VectorTimestamp
from .replication import ReplicationMixin, uniform_groups
from .sim import Node, replica_addr
from .tcs import TcsMixin

SUBTICKS = 100  # clock resolution per simulation tick


def default_partition(key: str, N: int) -> int:
    return zlib.crc32(str(key).encode()) % N + 1


class Replica(CausalMixin, ReplicationMixin, TcsMixin, Node):
    PROPAGATE_PERIOD = 5
    BROADCAST_PERIOD = 5
    RETRY_PERIOD = 20

    def __init__(self, sim, dc: int, m: int, D: int, N: int, f: int, *,
                 skew: int = 0, flags=frozenset(), partition_map=None, monitor=None):
        super().__init__(sim, replica_addr(dc, m))
        self.dc, self.m, self.D, self.N, self.f = dc, m, D, N, f
        self.skew = skew
        self.flags = frozenset(flags)
        self.partition_map = partition_map or {}
        self.mon = monitor
        self.other_dcs = [i for i in range(1, D + 1) if i != dc]
        self.groups = uniform_groups(D, f, dc)
        self._clock_floor = -1
        self._tid_seq = 0
        self._req_seq = 0
        zero = VectorTimestamp.zero(D)
        self.known = self.stable = self.uniform = zero
        self.oplog: dict = {}
        self.log_tids: set = set()
        self.snap_vec: dict = {}
        self.wbuff: dict = {}
        self.rset: dict = {}
        self.tx_client: dict = {}
        self.replies: dict = {}
        self.prepare_acks: dict = {}
        self.prepared_causal: dict = {}
        self.committed_causal = {i: {} for i in range(1, D + 1)}
        self.local_matrix = {l: zero for l in range(1, N + 1)}
        self.stable_matrix = {i: zero for i in range(1, D + 1)}
        self.global_matrix = {i: zero for i in range(1, D + 1)}
        self.init_tcs()

    @property
    def alive(self) -> bool:
        return not self.sim.is_crashed(self.dc)

    # --- clock ------------------------------------------------------------

    def _clock_base(self) -> int:
        return ((self.sim.now + self.skew) * SUBTICKS * self.N) + (self.m - 1)

    def clock_peek(self) -> int:
        return max(self._clock_floor, self._clock_base())

    def clock_tick(self) -> int:
        """Read the clock; successive reads are strictly increasing.

        Values are congruent to m-1 modulo N, so replicas of one data
        center never hand out the same timestamp.
        """
        v = max(self._clock_base(), self._clock_floor + self.N)
        self._clock_floor = v
        return v

    # --- helpers ----------------------------------------------------------

    def partition(self, key: str) -> int:
        p = self.partition_map.get(key)
        return p if p is not None else default_partition(key, self.N)

    def new_tid(self) -> TxId:
        self._tid_seq += 1
        return TxId(self.dc, self.m, self._tid_seq)

    def new_req(self) -> int:
        self._req_seq += 1
        return self._req_seq

    def send(self, dst, kind: str, **msg) -> None:
        self.sim.send(self.addr, dst, kind, **msg)

    def emit(self, ev: str, **fields) -> None:
        self.sim.recorder.protocol(ev, dc=self.dc, m=self.m, **fields)

    def wake_after(self, delay: int) -> None:
        self.sim.schedule(delay, self._poll_once)

    def _poll_once(self) -> None:
        if self.alive:
            self._pump()

    def append_log(self, tid: TxId, writes: dict, cv: VectorTimestamp, lamport) -> None:
        for k in sorted(writes):
            self.oplog.setdefault(k, []).append(LogEntry(writes[k], cv, lamport, tid))
        self.log_tids.add(tid)
        if self.mon:
            self.mon.on_append(self, tid, cv)

    def _set_known(self, i: int, x: int) -> None:
        old = self.known[i]
        if x == old:
            return
        self.known = self.known.with_entry(i, x)
        if self.mon:
            self.mon.on_known(self, i, old, x)

    def _set_stable(self, v: VectorTimestamp) -> None:
        old = self.stable
        self.stable = v
        if self.mon:
            self.mon.on_stable(self, old, v)

    def _raise_uniform(self, i: int, x: int) -> None:
        old = self.uniform[i]
        if x <= old:
            return
        self.uniform = self.uniform.with_entry(i, x)
        if self.mon:
            self.mon.on_uniform(self, i, old, x)

    # --- client calls -----------------------------------------------------

    def on_call(self, src, req, op, args):
        self.spawn(self._serve(src, req, op, args))

    def _serve(self, src, req, op, args):
        res = getattr(self, op)(**args)
        if inspect.isgenerator(res):
            res = yield from res
        self.send(src, "reply", req=req, result=res)

    # --- timers -----------------------------------------------------------

    def start_timers(self, rng, jitter: int = 1) -> None:
        self._rng = rng
        self._jitter = jitter
        for fn, period in ((self._t_propagate, self.PROPAGATE_PERIOD),
                           (self._t_broadcast, self.BROADCAST_PERIOD),
                           (self._t_retry, self.RETRY_PERIOD),
                           (self._t_heartbeat, self.HEARTBEAT_PERIOD)):
            self.sim.schedule(rng.randint(1, period), fn)

    def _again(self, fn, period: int) -> None:
        self.sim.schedule(period + self._rng.randint(0, self._jitter), fn)

    def _t_propagate(self) -> None:
        if not self.alive:
            return
        self.propagate_local_txs()
        if "disable_forwarding" not in self.flags:
            for j in sorted(self.sim.suspected):
                if j == self.dc:
                    continue
                for i in self.other_dcs:
                    if i != j and not self.sim.is_crashed(i):
                        self.forward_remote_txs(i, j)
        if self.sim.gc:
            self.collect_garbage()
        self._pump()
        self._again(self._t_propagate, self.PROPAGATE_PERIOD)

    def _t_broadcast(self) -> None:
        if not self.alive:
            return
        self.broadcast_vecs()
        self._again(self._t_broadcast, self.BROADCAST_PERIOD)

    def _t_retry(self) -> None:
        if not self.alive:
            return
        self.retry_stuck()
        self._pump()
        self._again(self._t_retry, self.RETRY_PERIOD)

    def _t_heartbeat(self) -> None:
        if not self.alive:
            return
        self.heartbeat_strong()
        self._pump()
        self._again(self._t_heartbeat, self.HEARTBEAT_PERIOD)

    def state_snapshot(self) -> dict:
        return {
            "dc": self.dc, "m": self.m,
            "known": self.known.to_json(), "stable": self.stable.to_json(),
            "uniform": self.uniform.to_json(),
            "status": self.status, "ballot": self.ballot,
            "last_delivered": self.last_delivered,
        }
