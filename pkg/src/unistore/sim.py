"""Deterministic discrete-event kernel: event queue, FIFO channels, processes."""

from __future__ import annotations

import heapq
import random
from dataclasses import dataclass, field
from typing import Any, Callable

Addr = tuple  # ("R", dc, partition) or ("C", client_id)


def replica_addr(dc: int, m: int) -> Addr:
    return ("R", dc, m)


def client_addr(cid: int) -> Addr:
    return ("C", cid)


@dataclass
class DelayModel:
    """Message delays in ticks.

    Before ``gst`` inter-DC delays are uniform in ``[inter_min, inter_max]``;
    from ``gst`` on they equal ``inter_min``. ``links`` overrides the range
    for a directed DC pair, written ``"1->3"``, or for a directed pair of
    partition replicas, written ``"1.2->3.2"`` (checked first).
    """

    local_min: int = 1
    local_max: int = 1
    inter_min: int = 1
    inter_max: int = 50
    gst: int = 2000
    links: dict = field(default_factory=dict)

    def link_range(self, src: Addr, dst: Addr, src_dc: int, dst_dc: int):
        if src[0] == "R" and dst[0] == "R":
            r = self.links.get(f"{src[1]}.{src[2]}->{dst[1]}.{dst[2]}")
            if r is not None:
                return r
        return self.links.get(f"{src_dc}->{dst_dc}")


class Until:
    """A wait condition parked by a process.

    ``timed`` conditions depend on the clock and are re-polled every tick;
    others are re-checked only when the owning node handles a message.
    """

    __slots__ = ("pred", "timed")

    def __init__(self, pred: Callable[[], bool], timed: bool = False):
        self.pred = pred
        self.timed = timed


class Node:
    """Something that receives messages and runs generator processes."""

    def __init__(self, sim: "Simulator", addr: Addr):
        self.sim = sim
        self.addr = addr
        self._waiting: list = []  # [generator, Until]
        self._poll_pending = False

    @property
    def alive(self) -> bool:
        return True

    def spawn(self, gen) -> None:
        self._advance(gen)
        self._pump()

    def _advance(self, gen) -> None:
        try:
            cond = next(gen)
            while cond.pred():
                cond = next(gen)
        except StopIteration:
            return
        self._waiting.append([gen, cond])

    def _pump(self) -> None:
        progress = True
        while progress and self._waiting and self.alive:
            progress = False
            for entry in list(self._waiting):
                if entry not in self._waiting:
                    continue
                if entry[1].pred():
                    self._waiting.remove(entry)
                    self._advance(entry[0])
                    progress = True
        if not self._poll_pending and any(c.timed for _, c in self._waiting):
            self._poll_pending = True
            self.sim.schedule(1, self._poll)

    def _poll(self) -> None:
        self._poll_pending = False
        if self.alive:
            self._pump()

    def receive(self, src: Addr, kind: str, msg: dict) -> None:
        getattr(self, "on_" + kind)(src, **msg)
        self._pump()


class Simulator:
    """Event heap ordered by (time, seq) plus reliable FIFO channels."""

    def __init__(self, seed: int, delays: DelayModel | None = None):
        self.now = 0
        self.seed = seed
        self.delays = delays or DelayModel()
        self.rng = random.Random(f"net-{seed}")
        self._heap: list = []
        self._seq = 0
        self._last_delivery: dict = {}
        self.nodes: dict = {}
        self.crashed: dict = {}  # dc -> crash tick
        self.messages_sent = 0
        self.stopped = False

    def schedule(self, delay: int, fn: Callable, *args: Any) -> None:
        self._seq += 1
        heapq.heappush(self._heap, (self.now + delay, self._seq, fn, args))

    def schedule_at(self, time: int, fn: Callable, *args: Any) -> None:
        self.schedule(max(0, time - self.now), fn, *args)

    def dc_of(self, addr: Addr) -> int:
        if addr[0] == "R":
            return addr[1]
        return self.nodes[addr].dc

    def is_crashed(self, dc: int) -> bool:
        return dc in self.crashed

    def _delay(self, src: Addr, dst: Addr) -> int:
        if src == dst:
            return 0
        sd, dd = self.dc_of(src), self.dc_of(dst)
        dm = self.delays
        if sd == dd:
            return self.rng.randint(dm.local_min, dm.local_max)
        rng = dm.link_range(src, dst, sd, dd)
        if rng is not None:
            return self.rng.randint(rng[0], rng[1])
        if self.now >= dm.gst:
            return dm.inter_min
        return self.rng.randint(dm.inter_min, dm.inter_max)

    def send(self, src: Addr, dst: Addr, kind: str, **msg: Any) -> None:
        if self.is_crashed(self.dc_of(src)) and src[0] == "R":
            return
        key = (src, dst)
        t = max(self.now + self._delay(src, dst), self._last_delivery.get(key, 0))
        self._last_delivery[key] = t
        self.messages_sent += 1
        self._seq += 1
        heapq.heappush(self._heap, (t, self._seq, self._deliver, (src, dst, kind, msg)))

    def _deliver(self, src: Addr, dst: Addr, kind: str, msg: dict) -> None:
        # Messages from or to a crashed DC are dropped from the crash onwards,
        # including those already in flight.
        if src[0] == "R" and self.is_crashed(src[1]):
            return
        node = self.nodes.get(dst)
        if node is None or not node.alive:
            return
        node.receive(src, kind, msg)

    def step(self) -> bool:
        if not self._heap:
            return False
        t, _, fn, args = heapq.heappop(self._heap)
        self.now = t
        fn(*args)
        return True

    def run_until(self, t_end: int, stop: Callable[[], bool] | None = None) -> None:
        while self._heap and not self.stopped:
            if self._heap[0][0] > t_end:
                self.now = t_end
                return
            self.step()
            if stop is not None and stop():
                return
