"""Deterministic event queue shared by the user-plane simulation and the control-plane scenarios."""

from __future__ import annotations

import enum
import heapq
import math
from dataclasses import dataclass
from typing import Any, Callable, List, Optional, Tuple


class SimulationError(RuntimeError):
    pass


class WatchdogExpired(SimulationError):
    """The simulation did not reach quiescence before its horizon."""


class EventKind(str, enum.Enum):
    TTI_TICK = "TtiTick"
    TX_ATTEMPT = "TxAttempt"
    ACK_NACK = "AckNack"
    XN_DELIVERY = "XnDelivery"
    RRC_DELIVERY = "RrcDelivery"
    TRAFFIC_ARRIVAL = "TrafficArrival"
    METRIC_SNAPSHOT = "MetricSnapshot"


@dataclass(frozen=True)
class SimEvent:
    time_ms: float
    seq: int
    kind: EventKind
    payload: Any = None


class Scheduler:
    """Min-heap of events ordered by (time, insertion sequence)."""

    def __init__(self, horizon_ms: float = math.inf):
        self.horizon_ms = horizon_ms
        self.now = 0.0
        self.processed = 0
        self._seq = 0
        self._heap: List[Tuple[float, int, SimEvent, Optional[Callable]]] = []

    def __len__(self):
        return len(self._heap)

    def schedule(self, time_ms: float, kind: EventKind, payload=None, handler: Optional[Callable] = None) -> SimEvent:
        if time_ms < self.now - 1e-9:
            raise SimulationError(f"cannot schedule {kind.value} at {time_ms} before now={self.now}")
        ev = SimEvent(time_ms, self._seq, kind, payload)
        self._seq += 1
        heapq.heappush(self._heap, (time_ms, ev.seq, ev, handler))
        return ev

    def pop(self) -> Tuple[SimEvent, Optional[Callable]]:
        time_ms, _, ev, handler = heapq.heappop(self._heap)
        if time_ms < self.now - 1e-9:
            raise SimulationError("event queue went back in time")
        if time_ms > self.horizon_ms:
            raise WatchdogExpired(f"event {ev.kind.value} at {time_ms} ms exceeds horizon {self.horizon_ms} ms")
        self.now = time_ms
        self.processed += 1
        return ev, handler

    def run(self, until: float = math.inf):
        while self._heap and self._heap[0][0] <= until:
            ev, handler = self.pop()
            if handler is not None:
                handler(ev)


@dataclass(frozen=True)
class XnLink:
    latency_ms: float = 2.0
    loss: float = 0.0
    endpoints: Tuple[str, str] = ("MN", "SN")

    def __post_init__(self):
        if self.latency_ms < 0:
            raise ValueError("Xn latency must be non-negative")
        if self.loss != 0.0:
            raise ValueError("the Xn backhaul is modelled as reliable")


def xn_forward(link: XnLink, sched: Scheduler, pdu, sent_at: float, handler: Optional[Callable] = None) -> SimEvent:
    """Schedule delivery of ``pdu`` across the backhaul; equal latency keeps deliveries FIFO."""
    return sched.schedule(sent_at + link.latency_ms, EventKind.XN_DELIVERY, pdu, handler)
