"""Random scenario generation and fuzz campaigns."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .checker import check_trace
from .scenario import Scenario, run
from .sim import DelayModel


@dataclass
class FuzzParams:
    D: int = 3
    N: int = 2
    f: int = 1
    clients: int = 3
    max_ops: int = 40  # per client
    max_crashes: int = 1
    keys: int = 4
    strong_ratio: float = 0.35
    max_ticks: int = 4000
    flags: list = field(default_factory=list)


def _step(rng, keys, tag, n):
    k = rng.choice(keys)
    if rng.random() < 0.5:
        return ["r", k]
    return ["w", k, f"{tag}.{n}"]


def random_scenario(seed: int, params: FuzzParams | None = None) -> Scenario:
    """A scenario whose every choice is drawn from ``seed``."""
    p = params or FuzzParams()
    rng = random.Random(f"fuzz-{seed}")
    keys = [f"k{i}" for i in range(p.keys)]
    per = [rng.randint(1, p.max_ops) for _ in range(p.clients)]
    clients = []
    for c in range(p.clients):
        cid = c + 1
        home = dc = rng.randint(1, p.D)
        script = []
        nval = 0
        for _ in range(per[c]):
            r = rng.random()
            if r < 0.8:
                steps = []
                for _ in range(rng.randint(1, 3)):
                    nval += 1
                    steps.append(_step(rng, keys, f"c{cid}", nval))
                kind = "strong" if rng.random() < p.strong_ratio else "causal"
                op = {"op": "tx", "kind": kind, "steps": steps}
                if kind == "strong":
                    op["max_retries"] = 2
                script.append(op)
            elif r < 0.88:
                script.append({"op": "barrier"})
            elif r < 0.93:
                # Migration is only safe once the client's past is uniform.
                dc = rng.choice([i for i in range(1, p.D + 1) if i != dc])
                script.append({"op": "barrier"})
                script.append({"op": "attach", "dc": dc})
            else:
                script.append({"op": "sleep", "ticks": rng.randint(1, 60)})
        clients.append({"id": cid, "dc": home, "script": script})
    crashes = []
    for _ in range(rng.randint(0, p.max_crashes)):
        dc = rng.randint(1, p.D)
        if all(c["dc"] != dc for c in crashes):
            crashes.append({"dc": dc, "at": rng.randint(1, 400)})
    inter_max = rng.choice([5, 20, 50])
    delays = DelayModel(local_min=1, local_max=rng.choice([1, 2, 3]), inter_min=1,
                        inter_max=inter_max, gst=rng.randint(200, 1500))
    return Scenario(name=f"fuzz-{seed}", D=p.D, N=p.N, f=p.f, seed=seed, clients=clients,
                    crashes=crashes, delays=delays, flags=list(p.flags),
                    max_ticks=p.max_ticks, trace_level="checker", snapshot_every=0)


@dataclass
class FuzzResult:
    seed: int
    findings: list
    trace: object = None


def fuzz(n: int, seed: int = 0, params: FuzzParams | None = None, *, stop_on_failure=True,
         keep_traces=False):
    """Run ``n`` random scenarios with seeds ``seed .. seed+n-1``."""
    results = []
    for s in range(seed, seed + n):
        tr = run(random_scenario(s, params))
        res = FuzzResult(s, check_trace(tr), tr if keep_traces else None)
        results.append(res)
        if res.findings and stop_on_failure:
            break
    return results
