"""Shared builders for the test suite."""

from unistore.history import History, Item, initial_item
from unistore.metadata import LamportStamp, VectorTimestamp
from unistore.scenario import Run, Scenario


def vt(dc, strong=0):
    return VectorTimestamp(dc, strong)


def idle_run(D=3, N=1, f=1, **kw):
    """A wired-up run whose simulator has not advanced; for poking replicas directly."""
    return Run(Scenario(D=D, N=N, f=f, **kw))


def tx(name, client, lc, ts, snap, events, kind="causal", dc=1):
    """A committed transaction item; ``events`` are (op, key, value) triples."""
    return Item(name, kind, client, dc, ts, LamportStamp(lc, client), snap=snap,
                events=list(events))


def barrier(name, client, lc, ts, dc=1, kind="barrier"):
    return Item(name, kind, client, dc, ts, LamportStamp(lc, client))


def history(D, *items):
    """History with t0 first and sessions in the given item order."""
    all_items = [initial_item(D)] + list(items)
    sessions: dict = {}
    for i, it in enumerate(all_items[1:], 1):
        sessions.setdefault(it.client, []).append(i)
    for idxs in sessions.values():
        for n, i in enumerate(idxs):
            all_items[i].seq = n
    return History(D, all_items, sessions)


GOLDEN_CASES = {
    "fig1": ("fig1", []),
    "fig1_no_forwarding": ("fig1", ["disable_forwarding"]),
    "fig2": ("fig2", []),
    "fig2_skip_barrier": ("fig2", ["skip_strong_uniform_barrier"]),
    "migration": ("migration", []),
    "recovery": ("recovery", []),
    "recovery_unknown": ("recovery_unknown", []),
}


def golden_outcome(case):
    """Run a built-in case and reduce it to the stable facts kept in tests/golden."""
    from unistore.checker import check_trace
    from unistore.history import history_from_trace
    from unistore.scenario import builtin, run

    name, flags = GOLDEN_CASES[case]
    sc = builtin(name)
    sc.flags = list(flags)
    tr = run(sc)
    h = history_from_trace(tr)
    aborts: dict = {}
    for e in tr.of("commit_strong"):
        if e["decision"] != "commit":
            aborts[e["client"]] = aborts.get(e["client"], 0) + 1
    return {
        "scenario": name,
        "flags": flags,
        "quiescent": tr.end["quiescent"],
        "end_tick": tr.end["t"],
        "crashes": [[e["dc"], e["t"]] for e in tr.of("crash")],
        "committed": [[it.title, it.kind] for it in h.X],
        "strong_aborts": {str(c): n for c, n in sorted(aborts.items())},
        "findings": sorted(str(f) for f in check_trace(tr)),
        "events": len(tr.events),
    }


ACCEPTANCE: dict = {}  # criterion number -> (passed, title, detail)


class Verdict:
    """Collects the outcome of one acceptance criterion for the summary line."""

    def __init__(self, n, title):
        self.n, self.title = n, title
        self.details = []

    def note(self, text):
        self.details.append(text)

    def __enter__(self):
        return self

    def __exit__(self, typ, exc, tb):
        detail = "; ".join(self.details)
        if exc is not None:
            detail = (detail + "; " if detail else "") + f"{typ.__name__}: {exc}".splitlines()[0]
        ACCEPTANCE[self.n] = (exc is None, self.title, detail)
        return False
