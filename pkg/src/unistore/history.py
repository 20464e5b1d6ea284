"""Client-visible histories extracted from traces."""

from __future__ import annotations

from dataclasses import dataclass, field

from .metadata import INITIAL_STAMP, LamportStamp, VectorTimestamp
from .trace import Trace, TraceError

INIT = "t0"


@dataclass
class Item:
    """An element of the history: the initial tx, a committed tx, a barrier or an attach."""

    name: str
    kind: str  # "init" | "causal" | "strong" | "barrier" | "attach"
    client: int
    dc: int
    ts: VectorTimestamp  # commit vector, or pastVec for barrier/attach
    lamport: LamportStamp
    snap: VectorTimestamp | None = None  # ts of the START event, txs only
    events: list = field(default_factory=list)  # ("r"|"w", key, value)
    seq: int = 0  # position in the client's session
    label: str | None = None
    acked: bool = True  # the client received the commit reply

    @property
    def title(self) -> str:
        return f"{self.name} ({self.label})" if self.label else self.name

    @property
    def is_tx(self) -> bool:
        return self.kind in ("init", "causal", "strong")

    @property
    def ws(self) -> dict:
        out = {}
        for op, k, v in self.events:
            if op == "w":
                out[k] = v
        return out

    @property
    def rs(self) -> set:
        return {k for op, k, _ in self.events if op == "r"}

    @property
    def R(self) -> set:
        return self.rs | set(self.ws)


@dataclass
class History:
    D: int
    items: list  # items[0] is t0
    sessions: dict  # client -> [item index in issue order]
    reads: list = field(default_factory=list)  # (item index, event index, key, value, writer)

    @property
    def X(self) -> list:
        return self.items[1:]


def initial_item(D: int) -> Item:
    return Item(INIT, "init", 0, 0, VectorTimestamp.zero(D), INITIAL_STAMP,
                snap=VectorTimestamp.zero(D))


def _vt(obj, what, ev):
    if obj is None:
        raise TraceError(f"{ev.get('ev')} event at t={ev.get('t')} lacks {what}")
    return VectorTimestamp.from_json(obj)


def history_from_trace(trace: Trace) -> History:
    D = trace.header.get("D")
    if D is None:
        # Fall back to the first vector we can find.
        for e in trace.events:
            if "snap" in e:
                D = len(e["snap"]["dc"])
                break
        else:
            D = 0
    items = [initial_item(D)]
    sessions: dict = {}
    open_tx: dict = {}
    outcome: dict = {}  # tid -> coordinator commit or certification decision
    for e in trace.events:
        if e["ev"] == "coord_commit" or (e["ev"] == "decide" and e["decision"] == "commit"):
            outcome.setdefault(e["tid"], e)
    for e in trace.events:
        ev = e["ev"]
        if ev == "tx_start":
            it = Item(e["tid"], "causal", e["client"], e["dc"], None, None,
                      snap=_vt(e.get("snap"), "snap", e), label=e.get("label"))
            open_tx[e["client"]] = it
        elif ev in ("read", "update"):
            it = open_tx.get(e["client"])
            if it is None or it.name != e["tid"]:
                raise TraceError(f"{ev} at t={e['t']} outside its transaction")
            op = "r" if ev == "read" else "w"
            it.events.append((op, e["key"], e["value"]))
        elif ev in ("commit_causal", "commit_strong"):
            it = open_tx.pop(e["client"], None)
            if it is None:
                raise TraceError(f"{ev} at t={e['t']} without an open transaction")
            if ev == "commit_strong":
                if e.get("decision") != "commit":
                    continue
                it.kind = "strong"
            it.ts = _vt(e.get("cv"), "cv", e)
            it.lamport = LamportStamp.from_json(e["lamport"])
            it.label = e.get("label", it.label)
            items.append(it)
            sessions.setdefault(it.client, []).append(len(items) - 1)
        elif ev in ("barrier", "attach"):
            it = Item(f"{ev}-{e['client']}-{e['seq']}", ev, e["client"], e["dc"],
                      _vt(e.get("ts"), "ts", e), LamportStamp.from_json(e["lamport"]),
                      label=e.get("label"))
            items.append(it)
            sessions.setdefault(it.client, []).append(len(items) - 1)
    # A transaction whose client never saw the reply (its dc crashed) still
    # belongs to the history if the store committed it.
    for c, it in sorted(open_tx.items()):
        e = outcome.get(it.name)
        if e is None:
            continue
        if e["ev"] == "decide":
            it.kind = "strong"
        it.ts = VectorTimestamp.from_json(e["cv"])
        it.lamport = LamportStamp.from_json(e["lamport"])
        it.acked = False
        items.append(it)
        sessions.setdefault(c, []).append(len(items) - 1)
    for c, idxs in sessions.items():
        for n, i in enumerate(idxs):
            items[i].seq = n
    return History(D, items, sessions)
