"""Scenario orchestration and Monte Carlo execution.

One iteration samples a deployment, associates UEs, builds one data bearer per
UE and precomputes the outcome of every possible transmission attempt
``success[bearer, leg, packet, attempt]``. Attempt outcomes are keyed by link,
packet and attempt index rather than by time, so paired runs (same seed,
different scenario or feature flag) see identical channel draws.

The user plane is then driven either by :class:`EventSimulation`, which pushes
PDUs through the PDCP/RLC/MAC entities over the event queue, or by the compiled
replay in :mod:`pdcpdup.kernel`, which is what campaigns use.
"""

from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from pdcpdup import kernel, radio
from pdcpdup.control import CONFIG_SIGNALING_BYTES
from pdcpdup.events import EventKind, Scheduler, SimEvent, WatchdogExpired, XnLink, xn_forward
from pdcpdup.metrics import CdfPoint, MetricsRecord, compute_cdf
from pdcpdup.protocol import (
    BearerConfig,
    ConfigurationError,
    MacEntity,
    PdcpSdu,
    PdcpTransmitter,
    ReceiverWindow,
    RlcTxEntity,
    RxAction,
    ca_duplicate_bearer,
    cross_leg_discard,
    dc_duplicate_bearer,
    single_leg_bearer,
)
from pdcpdup.radio import Scenario

DIRECTIONS = ("downlink", "uplink")


def derive_seed(*parts) -> int:
    """Stable 64-bit seed from any tuple of ints and strings."""
    h = hashlib.blake2b(digest_size=8)
    for p in parts:
        h.update(repr(p).encode())
        h.update(b"\x1f")
    return int.from_bytes(h.digest(), "little")


def stream(*parts) -> np.random.Generator:
    return np.random.default_rng(derive_seed(*parts))


@dataclass(frozen=True)
class RunConfig:
    scenario: str = "S1"
    direction: str = "downlink"
    iterations: int = 100
    packets_per_user: int = 1000
    latency_budget_ms: float = 5.0
    beta_db: float = 10.0
    beta_ul_db: Optional[float] = None
    n_sc: int = 2
    master_seed: int = 0
    xn_latency_ms: float = 2.0
    tti_ms: float = 1.0
    retx_delay_ms: float = 4.0
    max_retx: int = 3
    pdus_per_tti: int = 4
    rlc_buffer_limit: int = 4096
    cross_leg_discard: bool = False
    bandwidth_mhz: float = 20.0
    fading: str = "rayleigh_block"
    tier2_band: str = "dedicated"
    ues_per_tier1: int = 50
    n_tier1: int = 3
    watchdog_ms: float = 100_000.0

    def __post_init__(self):
        try:
            scenario = Scenario(self.scenario)
        except ValueError:
            raise ConfigurationError(f"unknown scenario {self.scenario!r}") from None
        object.__setattr__(self, "scenario", scenario.value)
        if self.direction not in DIRECTIONS:
            raise ConfigurationError(f"direction must be one of {DIRECTIONS}")
        if scenario.two_tier and self.n_sc < 1:
            raise ConfigurationError(f"scenario {scenario.value} needs at least one tier-2 node per tier-1 node")
        if self.n_sc < 0 or self.iterations < 1 or self.packets_per_user < 1 or self.ues_per_tier1 < 1:
            raise ConfigurationError("n_sc, iterations, packets_per_user and ues_per_tier1 must be positive")
        if self.pdus_per_tti < 1 or self.max_retx < 0 or self.rlc_buffer_limit < 1:
            raise ConfigurationError("invalid RLC/MAC parameters")
        if self.tti_ms <= 0 or self.retx_delay_ms < 0 or self.xn_latency_ms < 0 or self.latency_budget_ms < 0:
            raise ConfigurationError("times must be non-negative (TTI positive)")
        if self.fading not in radio.FADING_MODELS:
            raise ConfigurationError(f"unknown fading model {self.fading!r}")
        if self.bandwidth_mhz <= 0:
            raise ConfigurationError("bandwidth must be positive")
        if self.tier2_band not in ("shared", "dedicated"):
            raise ConfigurationError("tier2_band must be 'shared' or 'dedicated'")

    @property
    def scenario_enum(self) -> Scenario:
        return Scenario(self.scenario)

    def link_config(self) -> radio.LinkModelConfig:
        return radio.LinkModelConfig(bandwidth_mhz=self.bandwidth_mhz, beta_db=self.beta_db,
                                     beta_ul_db=self.beta_ul_db, fading=self.fading)

    def topology_config(self) -> radio.TopologyConfig:
        return radio.TopologyConfig(n_tier1=self.n_tier1, n_sc=self.n_sc, ues_per_tier1=self.ues_per_tier1)

    def as_dict(self) -> dict:
        return asdict(self)


def iteration_seed(master_seed: int, iteration: int) -> int:
    return derive_seed("iteration", master_seed, iteration)


def ticks(ms: float, tti: float) -> int:
    return int(math.ceil(ms / tti - 1e-9))


@dataclass
class IterationSetup:
    """Everything the user plane needs for one iteration, in array form."""

    n_legs: np.ndarray  # (B,)
    ready_off_ms: np.ndarray  # (B, 2) delay before the PDU reaches the leg
    deliver_off_ms: np.ndarray  # (B, 2) delay from reception to the PDCP receiver
    notify_delay_ms: np.ndarray  # (B,) cross-leg ACK notification delay
    success: np.ndarray  # (B, 2, P, max_retx + 1) bool
    dup: np.ndarray  # (B,) duplication active
    bearer_ue: np.ndarray  # (B,)
    tti_ms: float = 1.0
    retx_delay_ms: float = 4.0
    max_retx: int = 3
    capacity: int = 4
    buffer_limit: int = 4096
    cross_leg: bool = False
    latency_budget_ms: float = 5.0
    watchdog_ms: float = 100_000.0
    dup_mode: Optional[np.ndarray] = None  # (B,) "DC" / "CA" / ""
    mean_sinr_db: Optional[np.ndarray] = None  # (B, 2) before fading, downlink only
    topology: Optional[radio.Topology] = None
    associations: Optional[List[radio.Association]] = None

    @property
    def n_bearers(self) -> int:
        return len(self.n_legs)

    @property
    def n_packets(self) -> int:
        return self.success.shape[2]

    def created_ms(self) -> np.ndarray:
        return np.arange(self.n_packets) * self.tti_ms

    def with_flags(self, **kw) -> "IterationSetup":
        return replace(self, **kw)


@dataclass
class UserPlaneResult:
    delivery_ms: np.ndarray  # (B, P) first delivery at the PDCP receiver, inf if never
    dropped: np.ndarray  # (B, 2, P)
    counters: np.ndarray  # (B, 2, 6) attempts, retx, redundant, avoided, dropped, lost

    COUNTER_NAMES = ("attempts", "retx", "redundant_retx", "avoided_retx", "dropped", "lost")

    def counter(self, name: str) -> int:
        return int(self.counters[:, :, self.COUNTER_NAMES.index(name)].sum())

    def delivered_set(self) -> set:
        b, i = np.nonzero(np.isfinite(self.delivery_ms))
        return set(zip(b.tolist(), i.tolist()))


def script_setup(success, n_legs=None, dup=None, **kw) -> IterationSetup:
    """Hand-built setup from an explicit outcome table ``success[bearer, leg, packet, attempt]``."""
    success = np.asarray(success, bool)
    if success.ndim != 4 or success.shape[1] != 2:
        raise ValueError("success must have shape (bearers, 2, packets, attempts)")
    B = success.shape[0]
    n_legs = np.full(B, 2) if n_legs is None else np.asarray(n_legs)
    dup = (n_legs == 2) if dup is None else np.asarray(dup, bool)
    kw.setdefault("max_retx", success.shape[3] - 1)
    return IterationSetup(
        n_legs=n_legs,
        ready_off_ms=np.asarray(kw.pop("ready_off_ms", np.zeros((B, 2))), float),
        deliver_off_ms=np.asarray(kw.pop("deliver_off_ms", np.zeros((B, 2))), float),
        notify_delay_ms=np.asarray(kw.pop("notify_delay_ms", np.zeros(B)), float),
        success=success,
        dup=dup,
        bearer_ue=np.arange(B),
        **kw,
    )


# ---------------------------------------------------------------------------
# iteration construction


def build_iteration(cfg: RunConfig, seed: int) -> IterationSetup:
    scen = cfg.scenario_enum
    link = cfg.link_config()
    topo = radio.place_topology(cfg.topology_config(), stream(seed, "ue_xy"),
                                stream(seed, "tier2_xy") if cfg.n_sc > 0 else None)
    tiers = topo.gnb_tier
    n_t1 = topo.n_tier1
    shadow = np.hstack([
        radio.sample_shadowing(stream(seed, "shadow", 1), topo.n_ue, tiers[:n_t1], link),
        radio.sample_shadowing(stream(seed, "shadow", 2), topo.n_ue, tiers[n_t1:], link),
    ])
    active = np.ones(len(tiers), bool) if scen.two_tier else tiers == 1
    d = topo.distances()
    pl = radio.pathloss(d, link.carrier_ghz)
    assoc = radio.associate_all(topo, shadow, link, scen)

    B, P, R = topo.n_ue, cfg.packets_per_user, cfg.max_retx + 1
    n_legs = np.array([len(a.serving) for a in assoc])
    dup = n_legs == 2
    success = np.zeros((B, 2, P, R), bool)
    ready = np.zeros((B, 2))
    deliver = np.zeros((B, 2))
    notify = np.zeros(B)
    mode = np.array(["CA" if a.ca else "DC" if a.dc else "" for a in assoc])
    noise_lin = radio.db_to_lin(radio.noise_power_dbm(link))
    beta = link.beta_for(cfg.direction)
    mean_sinr = np.full((B, 2), np.nan)

    band = np.where(tiers == 2, int(cfg.tier2_band == "dedicated"), 0)
    # only nodes with at least one associated UE have traffic to send
    serving = np.zeros(len(tiers), bool)
    for a in assoc:
        serving[list(a.serving)] = True
    active &= serving
    shape = (P, R)
    if cfg.direction == "downlink":
        rx_lin = radio.db_to_lin(radio.dl_tx_power(tiers, link)[None, :] - pl - shadow)
        for a in assoc:
            u = a.ue
            if a.dc:
                ready[u, 1] = cfg.xn_latency_ms
                notify[u] = cfg.xn_latency_ms
            for leg, (g, c) in enumerate(zip(a.serving, a.carriers)):
                others = np.flatnonzero(active & (band == band[g]) & (np.arange(len(tiers)) != g))
                s = rx_lin[u, g]
                interferers = rx_lin[u, others][:, None, None]
                mean_sinr[u, leg] = 10 * np.log10(s / (noise_lin + interferers.sum()))
                p = success_probability(s, interferers, noise_lin, beta, link.fading)
                success[u, leg] = _draw(p, seed, shape, ("dl", u, g, c))
    else:
        rx_ul = radio.db_to_lin(link.tx_power_ul_dbm - pl - shadow)  # (ue, gnb)
        members = [np.array([a.ue for a in assoc if g in a.serving], int) for g in range(len(tiers))]
        scheduled = {}
        for a in assoc:
            u = a.ue
            if a.dc:
                deliver[u, 1] = cfg.xn_latency_ms
            for leg, (g, c) in enumerate(zip(a.serving, a.carriers)):
                if (g, c) not in scheduled:
                    cells = np.flatnonzero(active & (band == band[g]))
                    scheduled[(g, c)] = _uplink_schedule(seed, shape, g, c, cells, members)
                chosen = scheduled[(g, c)]  # (cells, P, R) UE ids
                # a UE never interferes with itself
                interferers = np.where(chosen == u, 0.0, rx_ul[chosen, g]) if len(chosen) else np.zeros((0,) + shape)
                s = rx_ul[u, g]
                mean_sinr[u, leg] = 10 * np.log10(s / (noise_lin + interferers.sum(axis=0).mean()))
                p = success_probability(s, interferers, noise_lin, beta, link.fading)
                success[u, leg] = _draw(p, seed, shape, ("ul", u, g, c))

    return IterationSetup(
        n_legs=n_legs, ready_off_ms=ready, deliver_off_ms=deliver, notify_delay_ms=notify,
        success=success, dup=dup, bearer_ue=np.arange(B), tti_ms=cfg.tti_ms,
        retx_delay_ms=cfg.retx_delay_ms, max_retx=cfg.max_retx, capacity=cfg.pdus_per_tti,
        buffer_limit=cfg.rlc_buffer_limit, cross_leg=cfg.cross_leg_discard,
        latency_budget_ms=cfg.latency_budget_ms, watchdog_ms=cfg.watchdog_ms, dup_mode=mode,
        mean_sinr_db=mean_sinr, topology=topo, associations=assoc,
    )


def success_probability(signal, interferers, noise, beta_db, fading):
    """Per-attempt success probability of a link; interferers are stacked along axis 0.

    ``rayleigh_block`` fades the desired link only, ``rayleigh_block_all`` fades
    every link independently, ``none`` gives a deterministic 0/1 outcome.
    """
    beta = float(radio.db_to_lin(beta_db))
    interferers = np.asarray(interferers, float)
    total = noise + interferers.sum(axis=0)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        if fading == "none":
            return (signal >= beta * total).astype(float)
        if fading == "rayleigh_block":
            return np.exp(-beta * total / signal)
        per = 1.0 / (1.0 + beta * interferers / signal)
        return np.exp(-beta * noise / signal) * np.prod(per, axis=0)


def _draw(p, seed, shape, key):
    """Attempt outcomes from one uniform per (packet, attempt) of the link, shared by every beta and scenario."""
    u = stream(seed, "fading", *key).random(shape)
    return u < np.broadcast_to(p, shape)


def _uplink_schedule(seed, shape, g, carrier, cells, members):
    """UE scheduled in every other co-channel cell, drawn uniformly per attempt slot."""
    rng = stream(seed, "ul_sched", g, carrier)
    chosen = [members[cell][rng.integers(members[cell].size, size=shape)]
              for cell in cells if cell != g and members[cell].size]
    return np.array(chosen, int).reshape((-1,) + shape)


# ---------------------------------------------------------------------------
# user plane: reference event-driven simulation


class EventSimulation:
    """Drives PDCP, RLC and MAC entities through the event queue.

    Each bearer belongs to its own UE; every leg has a MAC entity of its own
    with ``capacity`` PDUs per TTI. Packet ``i`` of every bearer is created at
    ``i * tti``.
    """

    def __init__(self, setup: IterationSetup, trace: Optional[list] = None):
        self.s = setup
        self.sched = Scheduler(horizon_ms=setup.watchdog_ms)
        self.trace = trace
        B, P = setup.n_bearers, setup.n_packets
        self.delivery = np.full((B, P), np.inf)
        self.dropped = np.zeros((B, 2, P), bool)
        self.pdcp: List[PdcpTransmitter] = []
        self.rx: List[ReceiverWindow] = []
        self.rlc: List[List[RlcTxEntity]] = []
        self.macs: List[MacEntity] = []
        self._leg_of = {}
        for b in range(B):
            bearer = self._bearer_config(b)
            self.pdcp.append(PdcpTransmitter(bearer))
            self.rx.append(ReceiverWindow(b))
            legs = []
            for leg in range(int(setup.n_legs[b])):
                rlc = RlcTxEntity((b, leg), setup.max_retx, setup.retx_delay_ms, setup.buffer_limit)
                mac = MacEntity((b, leg), setup.capacity)
                mac.add_channel(rlc, bearer.priority)
                self.macs.append(mac)
                legs.append(rlc)
                self._leg_of[id(rlc)] = (b, leg)
            self.rlc.append(legs)

    def _bearer_config(self, b) -> BearerConfig:
        if self.s.n_legs[b] == 1:
            return single_leg_bearer(b)
        mode = "" if self.s.dup_mode is None else self.s.dup_mode[b]
        if mode == "CA":
            return ca_duplicate_bearer(b, active=bool(self.s.dup[b]))
        return dc_duplicate_bearer(b, active=bool(self.s.dup[b]))

    def _log(self, kind, **info):
        if self.trace is not None:
            self.trace.append((self.sched.now, kind, info))

    def run(self) -> UserPlaneResult:
        s = self.s
        for i in range(s.n_packets):
            for b in range(s.n_bearers):
                self.sched.schedule(i * s.tti_ms, EventKind.TRAFFIC_ARRIVAL, (b, i), self._on_traffic)
        self.sched.schedule(0.0, EventKind.TTI_TICK, None, self._on_tick)
        self.sched.run()
        counters = np.zeros((s.n_bearers, 2, 6), np.int64)
        for b, legs in enumerate(self.rlc):
            for leg, rlc in enumerate(legs):
                c = rlc.counters
                counters[b, leg] = (c.attempts, c.retx, c.redundant_retx, c.avoided_retx, c.dropped, c.lost)
        return UserPlaneResult(self.delivery, self.dropped, counters)

    def _on_traffic(self, ev):
        b, i = ev.payload
        sdu = PdcpSdu(b, created_at=ev.time_ms)
        routed = self.pdcp[b].submit(sdu, bool(self.s.dup[b]))
        for leg, pdu in routed:
            # the replay works on TTI boundaries, so forwarding delays are rounded up to one
            delay = ticks(self.s.ready_off_ms[b, leg], self.s.tti_ms) * self.s.tti_ms
            if delay > 0:
                xn_forward(XnLink(delay), self.sched, (b, leg, pdu), ev.time_ms, self._on_forwarded)
            else:
                self._enqueue(b, leg, pdu)

    def _on_forwarded(self, ev):
        self._enqueue(*ev.payload)

    def _enqueue(self, b, leg, pdu):
        if self.rlc[b][leg].enqueue(pdu) is None:
            self.dropped[b, leg, pdu.count] = True

    def _on_tick(self, ev):
        now = ev.time_ms
        s = self.s
        busy = False
        for mac in self.macs:
            for rlc, pdu in mac.schedule(now):
                b, leg = self._leg_of[id(rlc)]
                ok = bool(s.success[b, leg, pdu.pdcp.count, pdu.retx_count])
                self._log(EventKind.TX_ATTEMPT, bearer=b, leg=leg, count=pdu.pdcp.count, attempt=pdu.retx_count)
                self.sched.schedule(now + s.tti_ms, EventKind.ACK_NACK, (rlc, pdu, ok, now), self._on_feedback)
            busy = busy or mac.has_work()
        if busy or len(self.sched):
            self.sched.schedule(now + s.tti_ms, EventKind.TTI_TICK, None, self._on_tick)

    def _on_feedback(self, ev):
        rlc, pdu, ok, attempt_time = ev.payload
        b, leg = self._leg_of[id(rlc)]
        s = self.s
        self._log(EventKind.ACK_NACK, bearer=b, leg=leg, count=pdu.pdcp.count, ok=ok)
        outcome = rlc.on_feedback(pdu, ok, attempt_time)
        if outcome != "acked":
            return
        count = pdu.pdcp.count
        delay = s.deliver_off_ms[b, leg]
        if delay > 0:
            xn_forward(XnLink(delay), self.sched, (b, pdu.pdcp), ev.time_ms, self._on_pdcp_rx)
        else:
            self._pdcp_rx(b, pdu.pdcp, ev.time_ms)
        if s.n_legs[b] == 2 and s.dup[b]:
            other = self.rlc[b][1 - leg]
            other.peer_acked(count, ev.time_ms)
            if s.cross_leg:
                notify = s.notify_delay_ms[b]
                if notify > 0:
                    self.sched.schedule(ev.time_ms + notify, EventKind.XN_DELIVERY, (other, count),
                                        self._on_discard_notice)
                else:
                    cross_leg_discard(other, count, ev.time_ms)

    def _on_discard_notice(self, ev):
        other, count = ev.payload
        cross_leg_discard(other, count, ev.time_ms)

    def _on_pdcp_rx(self, ev):
        b, pdu = ev.payload
        self._pdcp_rx(b, pdu, ev.time_ms)

    def _pdcp_rx(self, b, pdu, now):
        if self.rx[b].receive(pdu) is RxAction.DELIVER:
            self.delivery[b, pdu.count] = now
            self._log("Deliver", bearer=b, count=pdu.count)


def simulate(setup: IterationSetup, engine: str = "fast") -> UserPlaneResult:
    if engine == "event":
        return EventSimulation(setup).run()
    if engine != "fast":
        raise ValueError(f"unknown engine {engine!r}")
    max_ticks = int(setup.watchdog_ms / setup.tti_ms)
    delivery, dropped, counters, n_ticks = kernel.run_replay(
        setup.n_legs, np.array([[ticks(x, setup.tti_ms) for x in row] for row in setup.ready_off_ms]),
        setup.deliver_off_ms, setup.notify_delay_ms, _effective_success(setup),
        tti=setup.tti_ms, retx_ttis=ticks(setup.retx_delay_ms, setup.tti_ms), max_retx=setup.max_retx,
        capacity=setup.capacity, buffer_limit=setup.buffer_limit, cross_leg=setup.cross_leg,
        max_ticks=max_ticks,
    )
    if np.any(n_ticks < 0):
        raise WatchdogExpired(f"user plane not quiescent after {setup.watchdog_ms} ms")
    return UserPlaneResult(delivery, dropped, counters)


def _effective_success(setup):
    # bearers with two legs but duplication off only use leg 0 in the replay
    if np.all(setup.dup == (setup.n_legs == 2)):
        return setup.success
    raise ValueError("the compiled replay only handles single-leg or duplicating bearers")


# ---------------------------------------------------------------------------
# metrics


def duplication_efficiency(default_leg_first_ok) -> Optional[float]:
    """Share of duplicated packets whose default-leg first attempt failed; None when nothing was duplicated."""
    ok = np.asarray(default_leg_first_ok, bool)
    if ok.size == 0:
        return None
    return float(np.mean(~ok))


def summarize(cfg: RunConfig, setup: IterationSetup, res: UserPlaneResult, iteration: int) -> MetricsRecord:
    created = setup.created_ms()[None, :]
    latency = res.delivery_ms - created
    delivered = np.isfinite(latency)
    within = delivered & (latency <= setup.latency_budget_ms + 1e-9)
    generated = latency.size
    dup = setup.dup
    first_ok = setup.success[dup, 0, :, 0] & ~res.dropped[dup, 0, :]
    rrc = int(np.count_nonzero(dup)) * CONFIG_SIGNALING_BYTES
    return MetricsRecord(
        iteration=iteration,
        scenario=cfg.scenario,
        direction=cfg.direction,
        network_pdr=float(within.sum() / generated),
        dup_efficiency=duplication_efficiency(first_ok.ravel()),
        mean_latency_ms=float(latency[delivered].mean()) if delivered.any() else math.nan,
        redundant_retx=res.counter("redundant_retx"),
        avoided_retx=res.counter("avoided_retx"),
        signaling_bytes={"RRC": rrc, "PDCP_CTRL_PDU": 0, "MAC_CE": 0},
        generated=int(generated),
        delivered_within_budget=int(within.sum()),
        delivered_late=int((delivered & ~within).sum()),
        lost=int((~delivered).sum()),
        dropped=res.counter("dropped"),
        attempts=res.counter("attempts"),
        per_ue_pdr=tuple(float(x) for x in within.mean(axis=1)),
    )


def run_iteration(cfg: RunConfig, iteration: int = 0, engine: str = "fast", seed: Optional[int] = None,
                  return_setup: bool = False):
    seed = iteration_seed(cfg.master_seed, iteration) if seed is None else seed
    setup = build_iteration(cfg, seed)
    res = simulate(setup, engine)
    rec = summarize(cfg, setup, res, iteration)
    return (rec, setup, res) if return_setup else rec


@dataclass
class CampaignResult:
    config: RunConfig
    records: List[MetricsRecord]
    topology_dump: Optional[str] = None
    subdir: Optional[str] = None

    @property
    def pdr(self) -> np.ndarray:
        return np.array([r.network_pdr for r in self.records])

    @property
    def efficiency(self) -> np.ndarray:
        return np.array([r.dup_efficiency for r in self.records if r.dup_efficiency is not None])

    def pdr_cdf(self) -> List[CdfPoint]:
        return compute_cdf(self.pdr)

    def efficiency_cdf(self) -> List[CdfPoint]:
        return compute_cdf(self.efficiency)


def _iteration_job(args):
    cfg, i = args
    return run_iteration(cfg, i)


def run_campaign(cfg: RunConfig, workers: int = 1, with_topology: bool = True) -> CampaignResult:
    """Independent iterations seeded from ``master_seed``; results are ordered by iteration index."""
    jobs = [(cfg, i) for i in range(cfg.iterations)]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            records = list(pool.map(_iteration_job, jobs))
    else:
        records = [_iteration_job(j) for j in jobs]
    records.sort(key=lambda r: r.iteration)
    dump = None
    if with_topology:
        setup = build_iteration(cfg, iteration_seed(cfg.master_seed, 0))
        dump = radio.dump_topology(setup.topology, setup.associations)
    return CampaignResult(cfg, records, dump)


def paired(cfg: RunConfig, **changes) -> RunConfig:
    return replace(cfg, **changes)


def rlc_transmit(outcomes: Sequence[bool], max_retx: int = 3, retx_delay_ms: float = 4.0, tti_ms: float = 1.0,
                 start_ms: float = 0.0) -> List[SimEvent]:
    """Push one PDU through an RLC AM leg with scripted per-attempt outcomes.

    Returns the processed TxAttempt and AckNack events in order. Attempt ``k``
    reads ``outcomes[k]``; missing entries count as failures.
    """
    sched = Scheduler()
    rlc = RlcTxEntity(0, max_retx, retx_delay_ms)
    mac = MacEntity(0, 1)
    mac.add_channel(rlc)
    rlc.enqueue(PdcpTransmitter(single_leg_bearer(0)).number(PdcpSdu(0, created_at=start_ms)))
    log: List[SimEvent] = []

    def on_attempt(ev):
        log.append(ev)
        k = ev.payload["attempt"]
        ok = k < len(outcomes) and bool(outcomes[k])
        sched.schedule(ev.time_ms + tti_ms, EventKind.ACK_NACK,
                       {"pdu": ev.payload["pdu"], "attempt": k, "ok": ok, "attempt_time": ev.time_ms}, on_feedback)

    def on_feedback(ev):
        log.append(ev)
        rlc.on_feedback(ev.payload["pdu"], ev.payload["ok"], ev.payload["attempt_time"])

    def on_tick(ev):
        for _, pdu in mac.schedule(ev.time_ms):
            sched.schedule(ev.time_ms, EventKind.TX_ATTEMPT,
                           {"pdu": pdu, "rlc_sn": pdu.rlc_sn, "attempt": pdu.retx_count}, on_attempt)
        if mac.has_work() or len(sched):
            sched.schedule(ev.time_ms + tti_ms, EventKind.TTI_TICK, None, on_tick)

    sched.schedule(start_ms, EventKind.TTI_TICK, None, on_tick)
    sched.run()
    return log
