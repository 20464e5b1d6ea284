"""Scripted client sessions (pastVec, Lamport clock, transactions, migration)."""

from __future__ import annotations

import random

from .metadata import LamportStamp, VectorTimestamp
from .sim import Node, Until, client_addr, replica_addr
from .tcs import COMMIT


class ClientUsageError(RuntimeError):
    pass


class Client(Node):
    """Runs a list of script ops one at a time against the store.

    Script ops (dicts):
      {"op": "tx", "kind": "causal"|"strong", "steps": [["r", k], ["w", k, v]],
       "label": str, "retry": bool, "max_retries": int, "coord": m}
      {"op": "barrier"}, {"op": "attach", "dc": j}
      {"op": "read_until", "key": k, "value": v, "max_tries": n, "pause": t}
      {"op": "sleep", "ticks": t}, {"op": "wait_label", "label": str}
    """

    def __init__(self, sim, cid: int, dc: int, D: int, N: int, script: list,
                 *, flags=frozenset(), seed: int = 0):
        super().__init__(sim, client_addr(cid))
        self.id = cid
        self.dc = dc
        self.D, self.N = D, N
        self.script = script
        self.flags = frozenset(flags)
        self.rng = random.Random(f"client-{seed}-{cid}")
        self.lc = 0
        self.past = VectorTimestamp.zero(D)
        self.coord = None
        self.ctid = None
        self.seq = 0
        self._req = 0
        self._replies: dict = {}
        self.done = False
        self.pending: str | None = None
        self.label: str | None = None
        self.aborts = 0

    # --- remote calls -------------------------------------------------------

    def on_reply(self, src, req, result):
        self._replies[req] = result

    def call(self, dst, op: str, **args):
        self._req += 1
        req = self._req
        self.sim.send(self.addr, dst, "call", req=req, op=op, args=args)
        yield Until(lambda: req in self._replies)
        return self._replies.pop(req)

    def _record(self, ev: str, **fields) -> None:
        self.seq += 1
        if self.label and ev in ("tx_start", "commit_causal", "commit_strong", "barrier", "attach"):
            fields["label"] = self.label
        self.sim.recorder.client(ev, client=self.id, seq=self.seq, **fields)

    def _pick(self, dc: int, pinned=None):
        m = pinned if pinned is not None else self.rng.randint(1, self.N)
        return replica_addr(dc, m)

    # --- Alg. 1 operations --------------------------------------------------

    def cl_start(self, pinned=None):
        if self.ctid is not None:
            raise ClientUsageError("transaction already open")
        self.coord = self._pick(self.dc, pinned)
        tid, snap = yield from self.call(self.coord, "start_tx", V=self.past, client=self.id)
        self.ctid = tid
        self._record("tx_start", tid=str(tid), dc=self.dc, snap=snap.to_json(),
                     lc=self.lc)
        return tid

    def cl_read(self, key):
        if self.ctid is None:
            raise ClientUsageError("read outside a transaction")
        value, lam = yield from self.call(self.coord, "do_read", tid=self.ctid, key=key)
        if lam is not None and "drop_lamport_merge" not in self.flags:
            self.lc = max(self.lc, lam.counter)
        self._record("read", tid=str(self.ctid), key=key, value=value,
                     writer=None if lam is None else lam.to_json(), lc=self.lc)
        return value

    def cl_update(self, key, value):
        if self.ctid is None:
            raise ClientUsageError("update outside a transaction")
        yield from self.call(self.coord, "do_update", tid=self.ctid, key=key, value=value)
        self._record("update", tid=str(self.ctid), key=key, value=value)
        return "ok"

    def cl_commit_causal(self):
        self.lc += 1
        cv = yield from self.call(self.coord, "commit_causal", tid=self.ctid, lc=self.lc)
        self.past = cv
        self._record("commit_causal", tid=str(self.ctid), cv=cv.to_json(),
                     lamport=LamportStamp(self.lc, self.id).to_json())
        self.ctid = None
        return "ok"

    def cl_commit_strong(self):
        self.lc += 1
        out = yield from self.call(self.coord, "commit_strong", tid=self.ctid, lc=self.lc)
        if out.decision == COMMIT:
            self.past = out.commit_vec
            self.lc = out.lamport.counter
            self._record("commit_strong", tid=str(self.ctid), decision=COMMIT,
                         cv=out.commit_vec.to_json(), lamport=out.lamport.to_json())
        else:
            self._record("commit_strong", tid=str(self.ctid), decision=out.decision)
        self.ctid = None
        return out.decision

    def cl_uniform_barrier(self):
        p = self._pick(self.dc)
        yield from self.call(p, "uniform_barrier", V=self.past)
        self.lc += 1
        self._record("barrier", dc=self.dc, ts=self.past.to_json(),
                     lamport=LamportStamp(self.lc, self.id).to_json())
        return "ok"

    def cl_attach(self, j: int):
        origin = self.dc
        # The client talks to dc j from now on, even if its old dc fails.
        self.dc = j
        p = self._pick(j)
        yield from self.call(p, "attach", V=self.past)
        self.lc += 1
        self._record("attach", dc=origin, to=j, ts=self.past.to_json(),
                     lamport=LamportStamp(self.lc, self.id).to_json())
        return "ok"

    # --- script driver ------------------------------------------------------

    def start(self) -> None:
        self.spawn(self._run())

    def _run(self):
        for op in self.script:
            self.label = op.get("label")
            self.pending = self.label or op["op"]
            kind = op["op"]
            if kind == "tx":
                yield from self._tx(op)
            elif kind == "barrier":
                yield from self.cl_uniform_barrier()
            elif kind == "attach":
                yield from self.cl_attach(op["dc"])
            elif kind == "read_until":
                yield from self._read_until(op)
            elif kind == "sleep":
                t = self.sim.now + op["ticks"]
                self.sim.schedule(op["ticks"], self._pump)
                yield Until(lambda: self.sim.now >= t)
            elif kind == "wait_label":
                label = op["label"]
                self.sim.label_waiters.append(self)
                yield Until(lambda: label in self.sim.labels)
            else:
                raise ClientUsageError(f"unknown op {kind!r}")
            if op.get("label"):
                self.sim.mark_label(op["label"])
        self.pending = None
        self.done = True
        self.sim.client_done(self)

    def _tx(self, op):
        tries = 0
        limit = op.get("max_retries")
        while True:
            yield from self.cl_start(op.get("coord"))
            for step in op["steps"]:
                if step[0] == "r":
                    yield from self.cl_read(step[1])
                else:
                    yield from self.cl_update(step[1], step[2])
            if op.get("kind", "causal") == "causal":
                yield from self.cl_commit_causal()
                return
            dec = yield from self.cl_commit_strong()
            if dec == COMMIT or not op.get("retry", True):
                return
            self.aborts += 1
            tries += 1
            if limit is not None and tries > limit:
                return
            pause = op.get("pause", 5)
            t = self.sim.now + pause
            self.sim.schedule(pause, self._pump)
            yield Until(lambda: self.sim.now >= t)

    def _read_until(self, op):
        for _ in range(op.get("max_tries", 1000)):
            yield from self.cl_start(op.get("coord"))
            v = yield from self.cl_read(op["key"])
            yield from self.cl_commit_causal()
            if v == op["value"]:
                return
            pause = op.get("pause", 5)
            t = self.sim.now + pause
            self.sim.schedule(pause, self._pump)
            yield Until(lambda: self.sim.now >= t)
