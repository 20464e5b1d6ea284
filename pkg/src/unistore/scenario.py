"""Scenario configuration and the deterministic ``run(scenario) -> Trace``."""

from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, field
from importlib import resources

from .client import Client
from .invariants import InvariantMonitor
from .metadata import STRONG, ConfigError, check_dims
from .replica import Replica
from .sim import DelayModel, Simulator, replica_addr
from .trace import TRACE_VERSION, Recorder, Trace

ABLATIONS = ("disable_forwarding", "skip_strong_uniform_barrier", "expose_remote_before_uniform")
MUTATIONS = ("skip_decided_check", "drop_lamport_merge", "literal_certification")
BUILTINS = ("fig1", "fig2", "migration", "recovery", "recovery_unknown")


@dataclass
class Scenario:
    name: str = "custom"
    D: int = 3
    N: int = 2
    f: int = 1
    seed: int = 0
    clients: list = field(default_factory=list)  # [{"id", "dc", "script"}]
    crashes: list = field(default_factory=list)  # [{"dc", "at"|"after_label"|"on_event", "delay"}]
    delays: DelayModel = field(default_factory=DelayModel)
    flags: list = field(default_factory=list)
    partition_map: dict = field(default_factory=dict)
    max_skew: int = 2
    max_ticks: int = 5000
    check_every: int = 100
    grace: int = 40
    snapshot_every: int = 200
    trace_level: str = "full"
    gc: bool = False
    invariants: bool = True

    def validate(self) -> None:
        check_dims(self.D, self.f)
        for fl in self.flags:
            if fl not in ABLATIONS + MUTATIONS:
                raise ConfigError(f"unknown flag {fl!r}")
        ids = [c["id"] for c in self.clients]
        if len(set(ids)) != len(ids) or any(i < 1 for i in ids):
            raise ConfigError("client ids must be distinct positive integers")
        for c in self.clients:
            if not 1 <= c["dc"] <= self.D:
                raise ConfigError(f"client {c['id']} attached to unknown dc {c['dc']}")
        for cr in self.crashes:
            if not 1 <= cr["dc"] <= self.D:
                raise ConfigError(f"crash of unknown dc {cr['dc']}")

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj: dict) -> "Scenario":
        obj = dict(obj)
        if "delays" in obj:
            obj["delays"] = DelayModel(**obj["delays"])
        known = set(cls.__dataclass_fields__)
        extra = set(obj) - known
        if extra:
            raise ConfigError(f"unknown scenario fields {sorted(extra)}")
        return cls(**obj)

    @classmethod
    def load(cls, path) -> "Scenario":
        with open(path) as fh:
            return cls.from_json(json.load(fh))


def builtin(name: str) -> Scenario:
    if name not in BUILTINS:
        raise ConfigError(f"unknown built-in scenario {name!r}; choose from {BUILTINS}")
    text = resources.files("unistore.scenarios").joinpath(f"{name}.json").read_text()
    return Scenario.from_json(json.loads(text))


class Run:
    """One execution of a scenario; use :func:`run` for the common case."""

    def __init__(self, sc: Scenario):
        sc.validate()
        self.sc = sc
        sim = Simulator(sc.seed, sc.delays)
        self.sim = sim
        sim.recorder = Recorder(sim, sc.trace_level)
        sim.omega = self.omega
        sim.suspected = set()
        sim.gc = sc.gc
        sim.labels = set()
        sim.label_waiters = []
        sim.mark_label = self.mark_label
        sim.client_done = lambda c: None
        self.mon = InvariantMonitor(sim, sc.D, sc.N, sc.f) if sc.invariants else None
        sim.recorder.monitor = self.mon
        rng = random.Random(f"setup-{sc.seed}")
        flags = frozenset(sc.flags)
        self.replicas = {}
        for d in range(1, sc.D + 1):
            for m in range(1, sc.N + 1):
                r = Replica(sim, d, m, sc.D, sc.N, sc.f, skew=rng.randint(0, sc.max_skew),
                            flags=flags, partition_map=sc.partition_map, monitor=self.mon)
                self.replicas[(d, m)] = r
                sim.nodes[r.addr] = r
        if self.mon:
            self.mon.replicas = self.replicas
        for r in self.replicas.values():
            r.start_timers(random.Random(f"timers-{sc.seed}-{r.dc}-{r.m}"))
        self.clients = []
        for cs in sorted(sc.clients, key=lambda c: c["id"]):
            c = Client(sim, cs["id"], cs["dc"], sc.D, sc.N, cs["script"],
                       flags=flags, seed=sc.seed)
            self.clients.append(c)
            sim.nodes[c.addr] = c
            sim.schedule(0, c.start)
        self.label_crashes = {}
        for cr in sc.crashes:
            if "at" in cr:
                sim.schedule_at(cr["at"], self.crash, cr["dc"])
            elif "after_label" in cr:
                self.label_crashes.setdefault(cr["after_label"], []).append(cr["dc"])
            elif "on_event" in cr:
                dc, delay = cr["dc"], cr.get("delay", 0)
                sim.recorder.triggers.append(
                    (cr["on_event"], lambda dc=dc, delay=delay: self.sim.schedule(delay, self.crash, dc)))
            else:
                raise ConfigError(f"crash needs 'at', 'after_label' or 'on_event': {cr}")
        if sc.trace_level == "full" and sc.snapshot_every:
            sim.schedule(sc.snapshot_every, self.snapshot)
        self.quiescent = False
        self.liveness: list = []

    # --- harness services ---------------------------------------------------

    def live_dcs(self) -> list:
        return [d for d in range(1, self.sc.D + 1) if not self.sim.is_crashed(d)]

    def omega(self, m: int):
        return replica_addr(min(self.live_dcs()), m)

    def mark_label(self, label: str) -> None:
        self.sim.labels.add(label)
        for dc in self.label_crashes.pop(label, []):
            self.crash(dc)
        for c in list(self.sim.label_waiters):
            c._pump()

    def crash(self, dc: int) -> None:
        sim = self.sim
        if sim.is_crashed(dc):
            return
        if len(sim.crashed) >= self.sc.f:
            raise ConfigError(f"crashing dc {dc} would exceed f={self.sc.f}")
        sim.crashed[dc] = sim.now
        sim.suspected.add(dc)
        sim.recorder.note("crash", dc=dc)
        for key in sorted(self.replicas):
            r = self.replicas[key]
            if r.alive:
                sim.schedule(0, self._omega_changed, r)

    def _omega_changed(self, r) -> None:
        if r.alive:
            r.on_omega_change()
            r._pump()

    def snapshot(self) -> None:
        self.sim.recorder.note("stable_round", replicas=[
            self.replicas[k].state_snapshot() for k in sorted(self.replicas)])
        self.sim.schedule(self.sc.snapshot_every, self.snapshot)

    # --- execution ----------------------------------------------------------

    def clients_settled(self) -> bool:
        return all(c.done or self.sim.is_crashed(c.dc) for c in self.clients)

    def idle(self) -> bool:
        """No client transaction is mid-commit at a live replica."""
        for r in self.replicas.values():
            if not r.alive:
                continue
            if r.prepared_causal or any(e.client for e in r.prepared_strong.values()):
                return False
        return True

    def settled(self) -> bool:
        return self.clients_settled() and self.idle() and self.obligations_met()

    def final_state(self) -> dict:
        reps = []
        for key in sorted(self.replicas):
            r = self.replicas[key]
            frontier = r.uniform.with_entry(STRONG, r.stable[STRONG])
            reps.append({
                "dc": r.dc, "m": r.m, "crashed": not r.alive,
                "known": r.known.to_json(), "stable": r.stable.to_json(),
                "uniform": r.uniform.to_json(), "frontier": frontier.to_json(),
                "log": sorted(str(t) for t in r.log_tids),
                "last_delivered": r.last_delivered, "status": r.status,
            })
        return {"correct": self.live_dcs(), "replicas": reps}

    def obligations_met(self) -> bool:
        from .checker import pending_obligations
        trace = Trace(self.header(), self.sim.recorder.events + [dict(ev="end", **self.final_state())])
        return not pending_obligations(trace)

    def execute(self) -> Trace:
        sc, sim = self.sc, self.sim
        t = 0
        while t < sc.max_ticks:
            t = min(t + sc.check_every, sc.max_ticks)
            sim.run_until(t)
            if self.settled():
                # Confirm after a grace period, which lets late work surface.
                sim.run_until(sim.now + sc.grace)
                t = sim.now
                if self.settled():
                    self.quiescent = True
                    break
        for c in self.clients:
            if not c.done and not sim.is_crashed(c.dc):
                msg = f"client {c.id} still pending on {c.pending!r} at tick {sim.now}"
                if c.aborts:
                    msg += f" after {c.aborts} aborted attempts"
                self.liveness.append(msg)
                sim.recorder.note("liveness", client=c.id, op=c.pending, aborts=c.aborts,
                                  detail=msg)
        if not self.quiescent and not self.liveness:
            sim.recorder.note("liveness", client=None, op=None, aborts=0,
                              detail=f"obligations still pending at max_ticks={sc.max_ticks}")
        if self.mon and self.quiescent:
            self.mon.check_property4(self.live_dcs())
        sim.recorder.note("end", quiescent=self.quiescent, **self.final_state())
        return Trace(self.header(), sim.recorder.events)

    def header(self) -> dict:
        sc = self.sc
        out = {"version": TRACE_VERSION, "seed": sc.seed, "D": sc.D, "N": sc.N, "f": sc.f,
               "scenario": sc.name, "flags": sorted(sc.flags)}
        if sc.partition_map:
            out["partition_map"] = dict(sorted(sc.partition_map.items()))
        return out


def run(scenario: Scenario) -> Trace:
    """Execute ``scenario`` deterministically and return its trace."""
    return Run(scenario).execute()
