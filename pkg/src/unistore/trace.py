"""Trace recording and line-delimited JSON trace files."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

TRACE_VERSION = 1

CLIENT_EVENTS = ("tx_start", "read", "update", "commit_causal", "commit_strong",
                 "barrier", "attach")
TCS_EVENTS = ("certify", "decide", "deliver")


class TraceError(ValueError):
    pass


class Recorder:
    """Collects trace events in emission order.

    ``level`` is "full" (everything) or "checker" (only what the checker
    consumes: client, TCS, crash, liveness, invariant and end events).
    """

    def __init__(self, sim, level: str = "full"):
        self.sim = sim
        self.level = level
        self.events: list = []
        self.triggers: list = []  # (match dict, callback)
        self._certified: set = set()
        self.decisions: dict = {}  # tid -> (decision, cv, lc) of the first decide
        self._wbuff: dict = {}
        self.monitor = None

    def _add(self, ev: str, fields: dict) -> None:
        rec = {"t": self.sim.now, "ev": ev}
        rec.update(fields)
        self.events.append(rec)

    def client(self, ev: str, **fields) -> None:
        self._add(ev, fields)

    def protocol(self, ev: str, **fields) -> None:
        for match, cb in list(self.triggers):
            if match.get("ev") == ev and all(fields.get(k) == v for k, v in match.items()
                                             if k != "ev"):
                self.triggers.remove((match, cb))
                cb()
        if self.level == "full":
            self._add(ev, fields)

    def certify(self, tid, wbuff, rset, snap, lc, client, partitions) -> None:
        if tid in self._certified:
            return
        self._certified.add(tid)
        self._wbuff[tid] = wbuff
        ws = {}
        for l in sorted(wbuff):
            ws.update(wbuff[l])
        self._add("certify", {"tid": str(tid), "ws": ws, "rs": sorted(rset),
                              "partitions": sorted(partitions), "snap": snap.to_json(),
                              "lc": lc, "client": client})

    def decide(self, tid, decision, cv, lc, client) -> None:
        """Record the first decision on ``tid``, and any later one that disagrees."""
        outcome = (decision, cv if decision == "commit" else None,
                   lc if decision == "commit" else None)
        if tid in self.decisions:
            if self.decisions[tid] == outcome:
                return
        else:
            self.decisions[tid] = outcome
        fields = {"tid": str(tid), "decision": decision}
        if decision == "commit":
            fields["cv"] = cv.to_json()
            fields["lamport"] = {"lc": lc, "client": client}
        self._add("decide", fields)
        if self.monitor and decision == "commit" and self.decisions[tid] is outcome:
            self.monitor.on_decide(tid, cv, self._wbuff.get(tid, {}))

    def deliver(self, dc, m, txs) -> None:
        self._add("deliver", {"dc": dc, "m": m,
                              "txs": [[str(tid), cv.strong] for tid, cv in txs]})

    def note(self, ev: str, **fields) -> None:
        self._add(ev, fields)


@dataclass
class Trace:
    header: dict
    events: list = field(default_factory=list)

    def to_jsonl(self) -> str:
        lines = [json.dumps(self.header, sort_keys=True)]
        lines += [json.dumps(e, sort_keys=True) for e in self.events]
        return "\n".join(lines) + "\n"

    def write(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_jsonl())

    @classmethod
    def from_jsonl(cls, text: str) -> "Trace":
        header = None
        events = []
        for n, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise TraceError(f"line {n}: {exc.msg}") from None
            if not isinstance(obj, dict):
                raise TraceError(f"line {n}: expected a JSON object")
            if header is None:
                if "version" not in obj:
                    raise TraceError(f"line {n}: missing trace header")
                header = obj
            else:
                if "ev" not in obj:
                    raise TraceError(f"line {n}: event without 'ev'")
                events.append(obj)
        if header is None:
            raise TraceError("empty trace")
        return cls(header, events)

    @classmethod
    def read(cls, path) -> "Trace":
        with open(path) as fh:
            return cls.from_jsonl(fh.read())

    def of(self, *kinds) -> list:
        return [e for e in self.events if e["ev"] in kinds]

    @property
    def end(self) -> dict | None:
        for e in reversed(self.events):
            if e["ev"] == "end":
                return e
        return None
