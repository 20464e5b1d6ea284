"""Offline consistency checker for simulation traces.

Rebuilds the client history from a trace, derives visibility from the
recorded commit vectors and arbitration from the recorded Lamport stamps,
then checks the consistency axioms, eventual visibility at the end of the
run, and the certification service history. A brute-force search decides
satisfiability directly on tiny histories.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field

from .history import INIT, History, history_from_trace
from .metadata import LamportStamp, VectorTimestamp
from .replica import default_partition
from .trace import Trace, TraceError

FINITE_EV = "finite-trace interpretation"
ORACLE_LIMIT = 8
HEARTBEAT_CLIENT = 0


class OracleRefused(ValueError):
    pass


@dataclass
class Finding:
    axiom: str
    message: str
    witnesses: list = field(default_factory=list)
    note: str | None = None

    def to_json(self) -> dict:
        out = {"axiom": self.axiom, "message": self.message, "witnesses": self.witnesses}
        if self.note:
            out["note"] = self.note
        return out

    def __str__(self) -> str:
        return f"[{self.axiom}] {self.message}"


@dataclass
class AbstractExecution:
    """A history plus vis (predecessor bitsets) and ar (a total order)."""

    h: History
    vis_in: list  # vis_in[j] has bit i set iff items[i] vis items[j]
    ar: list  # item indices in arbitration order
    rank: list  # rank[i] = position of item i in ar

    def vis(self, i: int, j: int) -> bool:
        return bool(self.vis_in[j] >> i & 1)

    def preds(self, j: int) -> list:
        return _bits(self.vis_in[j])


def _bits(x: int) -> list:
    out = []
    i = 0
    while x:
        if x & 1:
            out.append(i)
        x >>= 1
        i += 1
    return out


# --- relations ------------------------------------------------------------

def derive_relations(h: History) -> AbstractExecution:
    """vis from commit vectors and snapshots, ar from Lamport stamps."""
    items = h.items
    n = len(items)
    for it in items:
        if it.ts is None or it.lamport is None or (it.is_tx and it.snap is None):
            raise TraceError(f"{it.title} lacks its vector or Lamport stamp")
    ar = sorted(range(n), key=lambda i: (items[i].lamport, i))
    rank = [0] * n
    for pos, i in enumerate(ar):
        rank[i] = pos
    vis_in = [0] * n
    for j in range(n):
        target = items[j].snap if items[j].is_tx else items[j].ts
        lam = items[j].lamport
        acc = 0
        for i in range(n):
            if i != j and items[i].lamport < lam and items[i].ts <= target:
                acc |= 1 << i
        vis_in[j] = acc
    return AbstractExecution(h, vis_in, ar, rank)


def _writers(h: History) -> dict:
    out: dict = {}
    for i, it in enumerate(h.items):
        for k in it.ws:
            out.setdefault(k, []).append(i)
    return out


def _value_of(it, k):
    return None if it.kind == "init" else it.ws[k]


# --- axioms -----------------------------------------------------------------

def check_rval(ae: AbstractExecution) -> list:
    """Internal reads see the last own write, external reads the ar-last visible write."""
    h = ae.h
    items = h.items
    writers = _writers(h)
    out = []
    for j, it in enumerate(items):
        if not it.is_tx:
            continue
        local: dict = {}
        for op, k, v in it.events:
            if op == "w":
                local[k] = v
                continue
            if k in local:
                if v != local[k]:
                    out.append(Finding("IntRVal", f"{it.title} read {k}={v!r} after writing {local[k]!r}",
                                       [it.name]))
                continue
            best = 0  # t0 writes every key
            for i in writers.get(k, ()):
                if ae.vis(i, j) and ae.rank[i] > ae.rank[best]:
                    best = i
            want = _value_of(items[best], k)
            if v != want:
                out.append(Finding(
                    "ExtRVal",
                    f"{it.title} read {k}={v!r} but the ar-last visible write is "
                    f"{items[best].title} with {want!r}", [it.name, items[best].name]))
    return out


def check_causal(ae: AbstractExecution) -> list:
    """(so u vis)+ within vis, and vis within ar."""
    h = ae.h
    items = h.items
    n = len(items)
    out = []
    seen: dict = {}
    for i, it in enumerate(items):
        if it.lamport in seen:
            out.append(Finding("CausalArbitration",
                               f"{it.title} and {items[seen[it.lamport]].title} share Lamport stamp "
                               f"{tuple(it.lamport)}, so ar is not total",
                               [items[seen[it.lamport]].name, it.name]))
        seen.setdefault(it.lamport, i)
    for j in range(n):
        if ae.vis(j, j):
            out.append(Finding("CausalVisibility", f"{items[j].title} is visible to itself",
                               [items[j].name]))
        if j and not ae.vis(0, j):
            out.append(Finding("CausalVisibility", f"initial state not visible to {items[j].title}",
                               [INIT, items[j].name]))
        for i in ae.preds(j):
            if ae.rank[i] >= ae.rank[j]:
                out.append(Finding("CausalArbitration",
                                   f"{items[i].title} vis {items[j].title} but not ar-before it",
                                   [items[i].name, items[j].name]))
    for c, idxs in sorted(h.sessions.items()):
        for a, b in zip(idxs, idxs[1:]):
            if not ae.vis(a, b):
                out.append(Finding("CausalVisibility",
                                   f"session order {items[a].title} -> {items[b].title} of client {c} "
                                   f"not in vis", [items[a].name, items[b].name]))
    for j in range(n):
        mine = ae.vis_in[j]
        for i in ae.preds(j):
            extra = ae.vis_in[i] & ~mine
            if extra:
                k = _bits(extra)[0]
                out.append(Finding("CausalVisibility",
                                   f"vis not transitive: {items[k].title} vis {items[i].title} vis "
                                   f"{items[j].title} but not {items[k].title} vis {items[j].title}",
                                   [items[k].name, items[i].name, items[j].name]))
                break
    return out


def conflicts(a, b) -> bool:
    return bool(a.R & set(b.ws)) or bool(set(a.ws) & b.R)


def check_conflict_ordering(ae: AbstractExecution) -> list:
    """Conflicting committed strong transactions are vis-ordered one way."""
    items = ae.h.items
    strong = [i for i, it in enumerate(items) if it.kind == "strong"]
    out = []
    for a, b in itertools.combinations(strong, 2):
        if conflicts(items[a], items[b]) and not (ae.vis(a, b) or ae.vis(b, a)):
            out.append(Finding("ConflictOrdering",
                               f"conflicting strong {items[a].title} and {items[b].title} are not "
                               f"vis-related", [items[a].name, items[b].name]))
    return out


# --- eventual visibility -----------------------------------------------------

def _partition_fn(header: dict):
    N = header.get("N", 1)
    pmap = header.get("partition_map") or {}

    def part(k):
        p = pmap.get(k)
        return p if p is not None else default_partition(k, N)
    return part


def _required(h: History, correct: set) -> dict:
    """Transactions eventual visibility applies to, with the reason."""
    items = h.items
    barriers = [b for b in items if b.kind == "barrier"]
    req = {}
    for i, it in enumerate(items):
        if not it.is_tx or it.kind == "init":
            continue
        if it.kind == "strong":
            req[i] = "strong"
        elif it.dc in correct:
            req[i] = f"originates at correct dc {it.dc}"
        else:
            for b in barriers:
                if it.lamport < b.lamport and it.ts <= b.ts:
                    req[i] = f"visible to {b.name}"
                    break
    return req


def _ev_gaps(h: History, end: dict, part) -> list:
    correct = set(end["correct"])
    live = [r for r in end["replicas"] if r["dc"] in correct and not r["crashed"]]
    logs = {(r["dc"], r["m"]): set(r["log"]) for r in live}
    fronts = [(r["dc"], r["m"], VectorTimestamp.from_json(r["frontier"])) for r in live]
    out = []
    for i, why in sorted(_required(h, correct).items()):
        it = h.items[i]
        missing = []
        for m in sorted({part(k) for k in it.ws}):
            for d in sorted(correct):
                if it.name not in logs.get((d, m), ()):
                    missing.append(f"log of dc {d} partition {m}")
        for d, m, fr in fronts:
            if not it.ts <= fr:
                missing.append(f"frontier of dc {d} partition {m}")
        if missing:
            out.append((it.title, why, missing))
    return out


def check_eventual_visibility(h: History, end: dict | None, header: dict | None = None) -> list:
    """At the end of the run, required transactions are stored and exposed at all correct dcs."""
    if end is None:
        return [Finding("EventualVisibility", "trace has no end state", [], FINITE_EV)]
    out = []
    for name, why, missing in _ev_gaps(h, end, _partition_fn(header or {})):
        shown = ", ".join(missing[:4]) + (f" and {len(missing) - 4} more" if len(missing) > 4 else "")
        out.append(Finding("EventualVisibility", f"{name} ({why}) never reached {shown}",
                           [name], FINITE_EV))
    return out


# --- certification service ------------------------------------------------

@dataclass
class _Tcs:
    certify: dict  # tid -> (pos, event)
    decide: dict  # tid -> (pos, event) of the first decide
    delivers: list  # (pos, event)
    findings: list


def _tcs_actions(trace: Trace) -> _Tcs:
    certify, decide, delivers, out = {}, {}, [], []
    for pos, e in enumerate(trace.events):
        ev = e["ev"]
        if ev == "certify":
            if e["tid"] in certify:
                out.append(Finding("TCS.certify_once", f"{e['tid']} certified twice", [e["tid"]]))
            else:
                certify[e["tid"]] = (pos, e)
        elif ev == "decide":
            tid = e["tid"]
            if tid not in certify:
                out.append(Finding("TCS.decide_after_certify",
                                   f"{tid} decided without a prior certify", [tid]))
            if tid in decide:
                first = decide[tid][1]
                if (first["decision"], first.get("cv"), first.get("lamport")) != (
                        e["decision"], e.get("cv"), e.get("lamport")):
                    out.append(Finding("TCS.agreement",
                                       f"{tid} decided both {first['decision']} and {e['decision']}",
                                       [tid]))
            else:
                decide[tid] = (pos, e)
        elif ev == "deliver":
            delivers.append((pos, e))
    return _Tcs(certify, decide, delivers, out)


def _cert_sets(e: dict):
    ws = set(e["ws"])
    return ws, set(e["rs"]) | ws


def _delivery_gaps(acts: _Tcs, correct: set, replicas) -> list:
    seen: dict = {}
    for pos, e in acts.delivers:
        for tid, _ in e["txs"]:
            seen.setdefault((e["dc"], e["m"], tid), pos)
    gaps = []
    for tid, (pos, e) in sorted(acts.decide.items()):
        if e["decision"] != "commit" or tid not in acts.certify:
            continue
        c = acts.certify[tid][1]
        if c["client"] == HEARTBEAT_CLIENT:
            continue
        for m in c["partitions"]:
            for d in sorted(correct):
                if (d, m) not in replicas:
                    continue
                p = seen.get((d, m, tid))
                if p is None or p < pos:
                    gaps.append((tid, d, m))
    return gaps


def check_tcs(trace: Trace) -> list:
    """Certification history requirements, legality of the committed part and delivery."""
    acts = _tcs_actions(trace)
    out = list(acts.findings)
    # Deliveries.
    delivered: dict = {}
    last_ts: dict = {}
    for pos, e in acts.delivers:
        key = (e["dc"], e["m"])
        tss = [ts for _, ts in e["txs"]]
        if last_ts.get(key) is not None and tss and min(tss) <= last_ts[key]:
            out.append(Finding("TCS.deliver_order",
                               f"dc {key[0]} partition {key[1]} delivered ts {min(tss)} after "
                               f"{last_ts[key]}", [t for t, _ in e["txs"]]))
        if tss:
            last_ts[key] = max(tss + [last_ts.get(key) or 0])
        for tid, ts in e["txs"]:
            if tid in delivered.setdefault(key, set()):
                out.append(Finding("TCS.deliver_once",
                                   f"{tid} delivered twice at dc {key[0]} partition {key[1]}", [tid]))
            delivered[key].add(tid)
            c = acts.certify.get(tid)
            if c is None or c[0] > pos:
                out.append(Finding("TCS.certify_before_deliver",
                                   f"{tid} delivered before being certified", [tid]))
            d = acts.decide.get(tid)
            if d is not None and d[1]["decision"] == "abort":
                out.append(Finding("TCS.no_deliver_after_abort", f"aborted {tid} was delivered",
                                   [tid]))
            elif d is not None and VectorTimestamp.from_json(d[1]["cv"]).strong != ts:
                out.append(Finding("TCS.deliver_order",
                                   f"{tid} delivered with ts {ts} but committed with "
                                   f"{d[1]['cv']['strong']}", [tid]))
    out += _check_legality(acts)
    end = trace.end
    if end is not None:
        replicas = {(r["dc"], r["m"]) for r in end["replicas"]}
        for tid, d, m in _delivery_gaps(acts, set(end["correct"]), replicas):
            out.append(Finding("TCS.delivery_liveness",
                               f"committed {tid} never delivered at dc {d} partition {m}", [tid]))
    return out


def _check_legality(acts: _Tcs) -> list:
    """Replay the committed transactions in strong-timestamp order through the certification rules."""
    out = []
    committed = []
    for tid, (pos, e) in acts.decide.items():
        if e["decision"] == "commit" and tid in acts.certify:
            cpos, c = acts.certify[tid]
            committed.append((VectorTimestamp.from_json(e["cv"]), cpos, tid, c,
                              LamportStamp.from_json(e["lamport"])))
    committed.sort(key=lambda x: (x[0].strong, x[1]))
    # Session order must agree with the permutation.
    last: dict = {}
    for cv, cpos, tid, c, lam in sorted(committed, key=lambda x: x[1]):
        cl = c["client"]
        if cl == HEARTBEAT_CLIENT:
            continue
        if cl in last and last[cl][0] >= cv.strong:
            out.append(Finding("TCS.session_order",
                               f"client {cl} certified {tid} after {last[cl][1]} but its strong "
                               f"timestamp {cv.strong} is not larger", [last[cl][1], tid]))
        last[cl] = (cv.strong, tid)
    writers: dict = {}  # key -> [(tid, cv, lamport)] of prior committed writers
    readers: dict = {}  # key -> prior committed transactions with the key in R
    for cv, cpos, tid, c, lam in committed:
        W, R = _cert_sets(c)
        snap = VectorTimestamp.from_json(c["snap"])
        prior = {}
        for k in R:
            for t2, cv2, lam2 in writers.get(k, ()):
                prior[t2] = (cv2, lam2)
                if not cv2 <= snap:
                    out.append(Finding("TCS.decision_rule",
                                       f"{tid} committed although {t2} writes {k} and is not in "
                                       f"its snapshot", [t2, tid]))
        for k in W:
            for t2, cv2, lam2 in readers.get(k, ()):
                prior[t2] = (cv2, lam2)
        if cv.dc != snap.dc or not cv.strong > snap.strong:
            out.append(Finding("TCS.commit_vector_rule",
                               f"{tid} commit vector {cv} does not extend snapshot {snap}", [tid]))
        if lam.counter < (c["lc"] or 0):
            out.append(Finding("TCS.lamport_rule", f"{tid} Lamport clock {lam.counter} below the "
                                                   f"client clock {c['lc']}", [tid]))
        for t2, (cv2, lam2) in sorted(prior.items()):
            if not cv >= cv2:
                out.append(Finding("TCS.commit_vector_rule",
                                   f"{tid} commit vector {cv} not above conflicting {t2} {cv2}",
                                   [t2, tid]))
            if not lam.counter > lam2.counter:
                out.append(Finding("TCS.lamport_rule",
                                   f"{tid} Lamport clock {lam.counter} not above conflicting {t2} "
                                   f"{lam2.counter}", [t2, tid]))
        for k in W:
            writers.setdefault(k, []).append((tid, cv, lam))
        for k in R:
            readers.setdefault(k, []).append((tid, cv, lam))
    return out


# --- obligations and notes -------------------------------------------------

def pending_obligations(trace: Trace) -> list:
    """Outstanding end-of-run obligations; empty once the run may stop."""
    end = trace.end
    if end is None:
        return ["no end state"]
    h = history_from_trace(trace)
    out = [f"{name}: {', '.join(missing)}"
           for name, _, missing in _ev_gaps(h, end, _partition_fn(trace.header))]
    replicas = {(r["dc"], r["m"]) for r in end["replicas"]}
    acts = _tcs_actions(trace)
    out += [f"{tid} undelivered at dc {d} partition {m}"
            for tid, d, m in _delivery_gaps(acts, set(end["correct"]), replicas)]
    return out


def note_findings(trace: Trace) -> list:
    out = []
    for e in trace.of("liveness", "invariant"):
        if e["ev"] == "liveness":
            out.append(Finding("Liveness", e["detail"], [] if e.get("client") is None
                               else [f"client {e['client']}"]))
        else:
            out.append(Finding(f"Invariant.{e['property']}", e["detail"], []))
    return out


# --- paranoid re-derivation --------------------------------------------------

def check_paranoid(trace: Trace) -> list:
    """Re-derive client Lamport clocks and commit vectors from the client events."""
    out = []
    lc: dict = {}
    snaps: dict = {}
    past: dict = {}
    for e in trace.events:
        ev = e["ev"]
        if ev not in ("tx_start", "read", "commit_causal", "commit_strong", "barrier", "attach"):
            continue
        c = e["client"]
        cur = lc.setdefault(c, 0)
        if ev == "tx_start":
            snap = VectorTimestamp.from_json(e["snap"])
            snaps[c] = snap
            if c in past and not past[c] <= snap:
                out.append(Finding("Paranoid.snapshot", f"{e['tid']} snapshot {snap} below the "
                                   f"client's past {past[c]}", [e["tid"]]))
        elif ev == "read":
            if e.get("writer") is not None:
                cur = max(cur, e["writer"]["lc"])
            if e["lc"] != cur:
                out.append(Finding("Paranoid.lamport", f"client {c} clock after reading {e['key']} "
                                   f"in {e['tid']} is {e['lc']}, expected {cur}", [e["tid"]]))
                cur = e["lc"]
        elif ev in ("commit_causal", "barrier", "attach"):
            cur += 1
            got = e["lamport"]["lc"]
            if got != cur:
                out.append(Finding("Paranoid.lamport", f"client {c} {ev} stamped {got}, expected "
                                   f"{cur}", [e.get("tid", f"client {c}")]))
                cur = got
            if ev == "commit_causal":
                cv = VectorTimestamp.from_json(e["cv"])
                snap = snaps.get(c)
                if snap is not None and (not snap <= cv or cv.strong != snap.strong
                                         or sum(a != b for a, b in zip(cv.dc, snap.dc)) > 1):
                    out.append(Finding("Paranoid.commit_vector",
                                       f"{e['tid']} commit vector {cv} is not its snapshot {snap} "
                                       f"with one local entry raised", [e["tid"]]))
                past[c] = cv
        elif ev == "commit_strong":
            cur += 1
            if e["decision"] == "commit":
                got = e["lamport"]["lc"]
                if got < cur:
                    out.append(Finding("Paranoid.lamport", f"{e['tid']} stamped {got} below the "
                                       f"client clock {cur}", [e["tid"]]))
                cur = got
                cv = VectorTimestamp.from_json(e["cv"])
                snap = snaps.get(c)
                if snap is not None and (cv.dc != snap.dc or cv.strong <= snap.strong):
                    out.append(Finding("Paranoid.commit_vector",
                                       f"{e['tid']} commit vector {cv} does not extend snapshot "
                                       f"{snap}", [e["tid"]]))
                past[c] = cv
        lc[c] = cur
    return out


# --- brute force -----------------------------------------------------------

def brute_force_oracle(h: History) -> bool:
    """Is there any vis and ar making the history satisfy the axioms?

    Eventual visibility is not part of the search. Arbitration orders are
    enumerated depth-first with t0 first and session order respected. For
    each prefix the smallest admissible vis of the next element is built
    from its session predecessors, the writer it reads from and the
    conflicting strong transactions placed before it; any valid vis must
    contain this set, and if any valid vis exists the smallest one is valid
    too, so it suffices to test it.
    """
    X = h.X
    if len(X) > ORACLE_LIMIT:
        raise OracleRefused(f"history has {len(X)} elements; the oracle handles at most "
                            f"{ORACLE_LIMIT}")
    items = h.items
    n = len(items)
    sess_prev = {}
    for idxs in h.sessions.values():
        for a, b in zip(idxs, idxs[1:]):
            sess_prev[b] = a
    # Internal reads do not depend on vis or ar.
    ext_reads = {}
    for j, it in enumerate(items):
        local: dict = {}
        reads = []
        for op, k, v in it.events:
            if op == "w":
                local[k] = v
            elif k in local:
                if v != local[k]:
                    return False
            else:
                reads.append((k, v))
        ext_reads[j] = reads
    writers = _writers(h)
    strong = [i for i, it in enumerate(items) if it.kind == "strong"]
    conf = {(a, b) for a in strong for b in strong if a != b and conflicts(items[a], items[b])}

    def candidates(j, placed_mask, V):
        """Choices of visible writers for j's external reads that satisfy RVal."""
        choices = []
        for k, v in ext_reads[j]:
            opts = []
            for w in [0] + writers.get(k, []):
                if w != j and placed_mask >> w & 1 and _value_of(items[w], k) == v:
                    opts.append(w)
            if not opts:
                return None
            choices.append((k, opts))
        return choices

    def dfs(order, placed_mask, V):
        if len(order) == n:
            return True
        pos = {x: p for p, x in enumerate(order)}
        for j in range(1, n):
            if placed_mask >> j & 1:
                continue
            p = sess_prev.get(j)
            if p is not None and not placed_mask >> p & 1:
                continue
            choices = candidates(j, placed_mask, V)
            if choices is None:
                continue
            base = 1  # t0
            if p is not None:
                base |= 1 << p | V[p]
            for i in order:
                if (i, j) in conf:
                    base |= 1 << i | V[i]
            for pick in itertools.product(*[opts for _, opts in choices]):
                vj = base
                for w in pick:
                    vj |= 1 << w | V[w]
                if not _rval_ok(items, writers, choices, pick, vj, pos):
                    continue
                V2 = dict(V)
                V2[j] = vj
                if dfs(order + [j], placed_mask | 1 << j, V2):
                    return True
        return False

    return dfs([0], 1, {0: 0})


def _rval_ok(items, writers, choices, pick, vj, pos) -> bool:
    for (k, _), w in zip(choices, pick):
        for x in [0] + writers.get(k, []):
            if vj >> x & 1 and pos[x] > pos[w]:
                return False
    return True


def naive_oracle(h: History) -> bool:
    """Enumerate every ar and every vis within it; only for histories of at most 4 elements."""
    if len(h.X) > 4:
        raise OracleRefused("naive oracle handles at most 4 elements")
    items = h.items
    n = len(items)
    for perm in itertools.permutations(range(1, n)):
        ar = [0] + list(perm)
        rank = [0] * n
        for p, i in enumerate(ar):
            rank[i] = p
        pairs = [(ar[a], ar[b]) for a in range(n) for b in range(a + 1, n)]
        for mask in range(1 << len(pairs)):
            vis_in = [0] * n
            for bit, (i, j) in enumerate(pairs):
                if mask >> bit & 1:
                    vis_in[j] |= 1 << i
            ae = AbstractExecution(h, vis_in, ar, rank)
            if not (check_rval(ae) or check_causal(ae) or check_conflict_ordering(ae)):
                return True
    return False


# --- entry points ------------------------------------------------------------

def check_history(h: History) -> list:
    ae = derive_relations(h)
    return check_rval(ae) + check_causal(ae) + check_conflict_ordering(ae)


def check_trace(trace: Trace, *, paranoid: bool = False, oracle: bool = False) -> list:
    """All findings for a trace; an empty list means the trace is clean."""
    h = history_from_trace(trace)
    ae = derive_relations(h)
    out = check_rval(ae) + check_causal(ae) + check_conflict_ordering(ae)
    out += check_eventual_visibility(h, trace.end, trace.header)
    out += check_tcs(trace)
    out += note_findings(trace)
    if paranoid:
        out += check_paranoid(trace)
    if oracle:
        try:
            sat = brute_force_oracle(h)
        except OracleRefused as exc:
            out.append(Finding("Oracle", str(exc), []))
        else:
            if not sat:
                out.append(Finding("Oracle", "no abstract execution satisfies the axioms", []))
    return out


def report(trace: Trace, findings: list) -> dict:
    counts: dict = {}
    for f in findings:
        counts[f.axiom] = counts.get(f.axiom, 0) + 1
    return {"header": trace.header, "ok": not findings, "counts": counts,
            "findings": [f.to_json() for f in findings],
            "notes": [f"EventualVisibility uses a {FINITE_EV}: end-of-run log inclusion at "
                      "correct data centers plus frontier coverage"]}


def write_report(path, trace: Trace, findings: list) -> None:
    with open(path, "w") as fh:
        json.dump(report(trace, findings), fh, indent=2, sort_keys=True)
        fh.write("\n")
