"""Omniscient runtime assertions of the replica-state properties.

Property 1  knownVec[i] at p^m_d covers every causal tx from i writing m.
Property 2  stableVec at any replica of d is <= knownVec at every replica of d.
Property 3  uniformVec[i] at p^m_d is <= knownVec[i] at every replica of some
            group of f+1 data centers that includes d.
Property 4  (end of run) txs with commitVec <= a correct replica's uniformVec
            are stored at all correct data centers.
Property 5  knownVec[strong] at p^m_d covers every committed strong tx writing m.
Property 6  stableVec[strong] at a replica of d covers every committed strong
            tx at every replica of d it writes.
Monotonicity of knownVec, stableVec and uniformVec is asserted as well.
"""

from __future__ import annotations

import bisect
from dataclasses import dataclass

from .metadata import STRONG


@dataclass
class Violation:
    prop: str
    detail: str
    t: int

    def to_json(self) -> dict:
        return {"property": self.prop, "detail": self.detail, "t": self.t}


class InvariantMonitor:
    def __init__(self, sim, D: int, N: int, f: int):
        self.sim = sim
        self.D, self.N, self.f = D, N, f
        self.replicas: dict = {}  # (dc, m) -> Replica
        self.violations: list = []
        self._causal: dict = {}  # (origin, m) -> sorted [(cv[origin], tid)]
        self._causal_all: list = []  # (tid, cv, partitions)
        self._strong: dict = {}  # m -> sorted [(cv.strong, tid)]

    def _fail(self, prop: str, detail: str) -> None:
        v = Violation(prop, detail, self.sim.now)
        self.violations.append(v)
        self.sim.recorder.note("invariant", **v.to_json())

    # --- hooks ------------------------------------------------------------

    def on_causal_commit(self, rep, rec) -> None:
        i, m = rep.dc, rep.m
        x = rec.commit_vec[i]
        bisect.insort(self._causal.setdefault((i, m), []), (x, rec.tid))
        self._causal_all.append((rec.tid, rec.commit_vec, m))
        for d in range(1, self.D + 1):
            r = self.replicas[(d, m)]
            if r.known[i] >= x and rec.tid not in r.log_tids:
                self._fail("P1", f"{rec.tid} (cv[{i}]={x}) committed below knownVec at {r.addr}")

    def on_decide(self, tid, cv, wbuff) -> None:
        x = cv[STRONG]
        for m in sorted(l for l, b in wbuff.items() if b):
            bisect.insort(self._strong.setdefault(m, []), (x, tid))
            for d in range(1, self.D + 1):
                r = self.replicas[(d, m)]
                if r.known[STRONG] >= x and tid not in r.log_tids:
                    self._fail("P5", f"strong {tid} (ts {x}) decided below knownVec at {r.addr}")

    def on_append(self, rep, tid, cv) -> None:
        pass

    def on_known(self, rep, i, old, new) -> None:
        if new < old:
            self._fail("Monotonic", f"knownVec[{i}] at {rep.addr} fell {old}->{new}")
            return
        if i == STRONG:
            lst = self._strong.get(rep.m, ())
            prop = "P5"
        else:
            lst = self._causal.get((i, rep.m), ())
            prop = "P1"
        lo = bisect.bisect_right(lst, (old, (1 << 62,)))
        hi = bisect.bisect_right(lst, (new, (1 << 62,)))
        for x, tid in lst[lo:hi]:
            if tid not in rep.log_tids:
                self._fail(prop, f"knownVec[{i}]={new} at {rep.addr} but {tid} (ts {x}) missing")

    def on_stable(self, rep, old, new) -> None:
        if not old <= new:
            self._fail("Monotonic", f"stableVec at {rep.addr} decreased {old}->{new}")
        for l in range(1, self.N + 1):
            r = self.replicas[(rep.dc, l)]
            if not new <= r.known:
                self._fail("P2", f"stableVec {new} at {rep.addr} exceeds knownVec {r.known} at {r.addr}")
        lo = old[STRONG]
        for l, lst in self._strong.items():
            r = self.replicas[(rep.dc, l)]
            a = bisect.bisect_right(lst, (lo, (1 << 62,)))
            b = bisect.bisect_right(lst, (new[STRONG], (1 << 62,)))
            for x, tid in lst[a:b]:
                if tid not in r.log_tids:
                    self._fail("P6", f"stableVec[strong]={new[STRONG]} at {rep.addr} but {tid} missing at {r.addr}")

    def on_uniform(self, rep, i, old, new) -> None:
        if new < old:
            self._fail("Monotonic", f"uniformVec[{i}] at {rep.addr} fell {old}->{new}")
        for g in rep.groups:
            if all(self.replicas[(h, l)].known[i] >= new
                   for h in g for l in range(1, self.N + 1)):
                return
        self._fail("P3", f"uniformVec[{i}]={new} at {rep.addr} not backed by f+1 data centers")

    # --- end of run -------------------------------------------------------

    def check_property4(self, correct: list) -> None:
        fronts = [self.replicas[(d, m)].uniform for d in correct for m in range(1, self.N + 1)]
        for tid, cv, m in self._causal_all:
            if any(cv.causal_le(u) for u in fronts):
                for d in correct:
                    if tid not in self.replicas[(d, m)].log_tids:
                        self._fail("P4", f"{tid} is below a uniformVec but missing at dc {d} partition {m}")
