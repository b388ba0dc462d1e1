"""Control plane for duplication: RRC configuration, dynamic (de)activation and make-before-break handover."""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from pdcpdup.events import EventKind, Scheduler
from pdcpdup.protocol import (
    BearerConfig,
    BearerKind,
    ConfigurationError,
    DupMode,
    LegConfig,
    PdcpPdu,
    PdcpSdu,
    PdcpTransmitter,
    ReceiverWindow,
    RlcTxEntity,
    RxAction,
)

RRC_RECONFIG_BYTES = 80
RRC_COMPLETE_BYTES = 40
PDCP_CTRL_PDU_BYTES = 2
MAC_CE_BYTES = 1
CONFIG_SIGNALING_BYTES = RRC_RECONFIG_BYTES + RRC_COMPLETE_BYTES
RRC_LATENCY_MS_DEFAULT = 10.0


class ControlMode(str, enum.Enum):
    RRC = "RRC"
    PDCP_CTRL_PDU = "PDCP_CTRL_PDU"
    MAC_CE = "MAC_CE"


class RrcKind(str, enum.Enum):
    RECONFIG_ADD_SECONDARY = "ReconfigAddSecondary"
    RECONFIG_ACTIVATE_DUP = "ReconfigActivateDup"
    RECONFIG_DEACTIVATE_DUP = "ReconfigDeactivateDup"
    RECONFIG_COMPLETE = "ReconfigComplete"
    HANDOVER_COMMAND = "HandoverCommand"
    PATH_SWITCH = "PathSwitch"
    RELEASE_SOURCE = "ReleaseSource"


@dataclass(frozen=True)
class RrcMessage:
    kind: RrcKind
    bearer_ids: Tuple[int, ...]
    sent_at: float
    signaling_latency_ms: float = RRC_LATENCY_MS_DEFAULT

    @property
    def arrives_at(self) -> float:
        return self.sent_at + self.signaling_latency_ms


@dataclass
class DuplicationState:
    bearer_id: int
    configured: bool = False
    active: bool = False
    control_mode: ControlMode = ControlMode.RRC
    last_change_at: float = 0.0

    def __post_init__(self):
        if self.active and not self.configured:
            raise ConfigurationError(f"bearer {self.bearer_id}: duplication active but not configured")


@dataclass
class _Bearer:
    config: BearerConfig
    pdcp: PdcpTransmitter
    rlc: List[RlcTxEntity]
    state: DuplicationState


class UeDuplicationController:
    """Duplication state of the bearers of one UE plus the signaling that changes it.

    Activation and deactivation requests take effect after the latency of the
    chosen mechanism; until then the old state governs routing. PDUs leave the
    PDCP buffer through :meth:`pull`, which routes them with the state in force
    at that time, so PDUs already handed to RLC are never duplicated afterwards.
    """

    def __init__(self, ue_id=0, cell_groups: Iterable[str] = ("MCG",), mcg_carriers: Iterable[int] = (0,),
                 rrc_latency_ms: float = RRC_LATENCY_MS_DEFAULT, tti_ms: float = 1.0):
        self.ue_id = ue_id
        self.cell_groups = set(cell_groups)
        self.mcg_carriers = set(mcg_carriers)
        self.rrc_latency_ms = rrc_latency_ms
        self.tti_ms = tti_ms
        self.bearers: Dict[int, _Bearer] = {}
        self.overhead_bytes = {m.value: 0 for m in ControlMode}
        self.messages: List[RrcMessage] = []
        self.trace: List[Tuple[float, int, int, Tuple[int, ...]]] = []  # (time, bearer, count, legs)
        self._pending: List[Tuple[float, int, bool, ControlMode]] = []
        self.now = 0.0

    # -- configuration

    def add_bearer(self, config: BearerConfig) -> DuplicationState:
        if config.bearer_id in self.bearers:
            raise ConfigurationError(f"bearer {config.bearer_id} already exists")
        rlc = [RlcTxEntity((config.bearer_id, i)) for i in range(len(config.legs))]
        state = DuplicationState(config.bearer_id, config.duplication_configured, config.initial_duplication_active)
        self.bearers[config.bearer_id] = _Bearer(config, PdcpTransmitter(config), rlc, state)
        return state

    def _bearer(self, bearer_id) -> _Bearer:
        try:
            return self.bearers[bearer_id]
        except KeyError:
            raise ConfigurationError(f"UE {self.ue_id} has no bearer {bearer_id}") from None

    def configure_duplication(self, bearer_id: int, mode: DupMode, initial_active: bool = False,
                              at_time: float = 0.0, carriers: Optional[Tuple[int, int]] = None,
                              kind: Optional[BearerKind] = None) -> DuplicationState:
        """Add the second RLC entity and logical channel and set the initial duplication state."""
        mode = DupMode(mode)
        b = self._bearer(bearer_id)
        first = b.config.legs[0]
        if mode is DupMode.CA:
            if any(x.config.duplication_configured and x.config.dup_mode is DupMode.DC
                   for x in self.bearers.values()):
                raise ConfigurationError("CA duplication cannot be added while DC duplication is configured")
            if carriers is None:
                avail = sorted(self.mcg_carriers)
                carriers = tuple(avail[:2]) if len(avail) > 1 else (first.carrier, first.carrier)
            c1, c2 = carriers
            if c1 == c2:
                raise ConfigurationError("duplication on the same carrier is not supported")
            if not {c1, c2} <= self.mcg_carriers:
                raise ConfigurationError(f"UE {self.ue_id} is not configured with carriers {c1} and {c2}")
            legs = (LegConfig(first.cell_group, c1, first.lcid), LegConfig(first.cell_group, c2, first.lcid + 1))
        else:
            if not {"MCG", "SCG"} <= self.cell_groups:
                raise ConfigurationError(f"UE {self.ue_id} needs two cell groups for DC duplication")
            other = "SCG" if first.cell_group == "MCG" else "MCG"
            legs = (first, LegConfig(other, first.carrier, first.lcid + 1))
        if kind is None:
            kind = b.config.kind if b.config.kind in (BearerKind.SPLIT, BearerKind.SRB) else BearerKind.DUPLICATE
        config = replace(b.config, kind=kind, legs=legs, duplication_configured=True,
                         initial_duplication_active=initial_active, dup_mode=mode)
        b.config = config
        b.pdcp.bearer = config
        if len(b.rlc) < 2:
            b.rlc.append(RlcTxEntity((bearer_id, 1)))
        b.state = DuplicationState(bearer_id, True, initial_active, ControlMode.RRC, at_time)
        self._signal(ControlMode.RRC, RrcKind.RECONFIG_ADD_SECONDARY, (bearer_id,), at_time)
        return b.state

    # -- dynamic control

    def effective_delay(self, mode: ControlMode) -> float:
        if ControlMode(mode) is ControlMode.RRC:
            return 2 * self.rrc_latency_ms  # reconfiguration down, complete up
        return self.tti_ms

    def _signal(self, mode, kind, bearer_ids, at_time):
        mode = ControlMode(mode)
        if mode is ControlMode.RRC:
            msg = RrcMessage(kind, tuple(bearer_ids), at_time, self.rrc_latency_ms)
            self.messages.append(msg)
            self.messages.append(RrcMessage(RrcKind.RECONFIG_COMPLETE, tuple(bearer_ids), msg.arrives_at,
                                            self.rrc_latency_ms))
            self.overhead_bytes[mode.value] += CONFIG_SIGNALING_BYTES
        elif mode is ControlMode.PDCP_CTRL_PDU:
            self.overhead_bytes[mode.value] += PDCP_CTRL_PDU_BYTES * len(bearer_ids)
        else:
            self.overhead_bytes[mode.value] += MAC_CE_BYTES

    def target_state(self, bearer_id) -> bool:
        """State the bearer will be in once every pending change has taken effect."""
        mine = [p for p in self._pending if p[1] == bearer_id]
        if mine:
            # latest effective time wins; equal times go to the later request
            return max(enumerate(mine), key=lambda ip: (ip[1][0], ip[0]))[1][2]
        return self._bearer(bearer_id).state.active

    def activate(self, bearer_ids: Optional[Sequence[int]], mode: ControlMode, at_time: float) -> float:
        return self._toggle(bearer_ids, ControlMode(mode), at_time, True)

    def deactivate(self, bearer_ids: Optional[Sequence[int]], mode: ControlMode, at_time: float) -> float:
        return self._toggle(bearer_ids, ControlMode(mode), at_time, False)

    def _toggle(self, bearer_ids, mode, at_time, active) -> float:
        """Request a state change; returns the effective time (``at_time`` for a no-op)."""
        self.advance(at_time)
        configured = sorted(bid for bid, b in self.bearers.items() if b.state.configured)
        if bearer_ids is None:
            bearer_ids = configured
        bearer_ids = sorted(set(bearer_ids))
        for bid in bearer_ids:
            if not self._bearer(bid).state.configured:
                raise ConfigurationError(f"bearer {bid}: duplication not configured")
        if mode is ControlMode.MAC_CE and bearer_ids != configured:
            raise ConfigurationError("a MAC CE applies to all configured bearers of the UE")
        changing = [bid for bid in bearer_ids if self.target_state(bid) != active]
        if not changing:
            return at_time
        if mode is ControlMode.MAC_CE:
            changing = bearer_ids
        kind = RrcKind.RECONFIG_ACTIVATE_DUP if active else RrcKind.RECONFIG_DEACTIVATE_DUP
        self._signal(mode, kind, changing, at_time)
        effective = at_time + self.effective_delay(mode)
        for bid in changing:
            self._pending.append((effective, bid, active, mode))
        return effective

    def advance(self, now: float):
        if now < self.now - 1e-9:
            raise ValueError("controller time cannot go backwards")
        self.now = now
        still = []
        # changes apply in order of their effective time; equal times keep request order
        for eff, bid, active, mode in sorted(self._pending, key=lambda p: p[0]):
            if eff <= now + 1e-9:
                st = self.bearers[bid].state
                st.active, st.control_mode, st.last_change_at = active, mode, eff
            else:
                still.append((eff, bid, active, mode))
        self._pending = still

    def is_active(self, bearer_id, now: Optional[float] = None) -> bool:
        if now is not None:
            self.advance(now)
        return self._bearer(bearer_id).state.active

    def state(self, bearer_id) -> DuplicationState:
        return self._bearer(bearer_id).state

    # -- data path

    def submit(self, bearer_id: int, sdu: PdcpSdu) -> PdcpPdu:
        """Number an SDU and hold it in the PDCP buffer."""
        return self._bearer(bearer_id).pdcp.enqueue(sdu)

    def pull(self, bearer_id: int, n: Optional[int], now: float) -> List[Tuple[int, PdcpPdu]]:
        """Move up to ``n`` buffered PDUs to RLC using the duplication state in force at ``now``."""
        b = self._bearer(bearer_id)
        active = self.is_active(bearer_id, now)
        routed = b.pdcp.pull(n, active)
        by_count: Dict[int, List[int]] = {}
        for leg, pdu in routed:
            b.rlc[leg].enqueue(pdu)
            by_count.setdefault(pdu.count, []).append(leg)
        for count, legs in by_count.items():
            self.trace.append((now, bearer_id, count, tuple(legs)))
        return routed

    def rlc_queue(self, bearer_id: int, leg: int) -> List[PdcpPdu]:
        return [p.pdcp for p in self._bearer(bearer_id).rlc[leg].new]


class TriggerDecision(str, enum.Enum):
    ACTIVATE = "Activate"
    DEACTIVATE = "Deactivate"
    NO_CHANGE = "NoChange"


@dataclass(frozen=True)
class TriggerCriteria:
    """Long-term received-power thresholds in dBm; deactivation sits at or above activation."""

    activate_threshold_dbm: float = -95.0
    deactivate_threshold_dbm: float = -80.0

    def __post_init__(self):
        if self.deactivate_threshold_dbm < self.activate_threshold_dbm:
            raise ConfigurationError("hysteresis gap must be non-negative")


def evaluate_trigger(criteria: TriggerCriteria, measurements_dbm: Sequence[float],
                     currently_active: Optional[bool] = None) -> TriggerDecision:
    """Activate when every leg is weak, deactivate when any leg is strong."""
    m = list(measurements_dbm)
    if not m:
        return TriggerDecision.NO_CHANGE
    if all(x < criteria.activate_threshold_dbm for x in m):
        decision = TriggerDecision.ACTIVATE
    elif any(x > criteria.deactivate_threshold_dbm for x in m):
        decision = TriggerDecision.DEACTIVATE
    else:
        return TriggerDecision.NO_CHANGE
    if currently_active is not None and currently_active == (decision is TriggerDecision.ACTIVATE):
        return TriggerDecision.NO_CHANGE
    return decision


# ---------------------------------------------------------------------------
# make-before-break handover with duplication


class HandoverPhase(enum.IntEnum):
    IDLE = 0
    BEARER_ESTABLISHED = 1
    DUPLICATING = 2
    PATH_SWITCHED = 3
    SOURCE_RELEASED = 4

    @property
    def label(self) -> str:
        return {0: "Idle", 1: "BearerEstablished", 2: "Duplicating", 3: "PathSwitched", 4: "SourceReleased"}[self]


@dataclass
class HandoverContext:
    ue_id: int = 0
    source_gnb: str = "source"
    target_gnb: str = "target"
    phase: HandoverPhase = HandoverPhase.IDLE
    direction: str = "uplink"
    forwarded_sns: Set[int] = field(default_factory=set)

    def __post_init__(self):
        if self.direction not in ("uplink", "downlink"):
            raise ConfigurationError("direction must be uplink or downlink")

    def enter(self, phase: HandoverPhase):
        if phase < self.phase:
            raise ConfigurationError(f"handover phase cannot go back from {self.phase.label} to {phase.label}")
        self.phase = phase

    def eliminator(self) -> str:
        """Entity currently responsible for duplicate elimination."""
        if self.direction == "downlink":
            return "UE"
        return self.target_gnb if self.phase >= HandoverPhase.PATH_SWITCHED else self.source_gnb


@dataclass(frozen=True)
class TraceRecord:
    time_ms: float
    entity: str
    phase: str
    message_kind: str
    sn_range: str = "-"

    def line(self) -> str:
        return f"{self.time_ms:.3f} | {self.entity} | {self.phase} | {self.message_kind} | {self.sn_range}"


@dataclass
class HandoverResult:
    context: HandoverContext
    trace: List[TraceRecord]
    delivered: List[Tuple[int, float, str]]  # (sn, time, delivering entity)
    eliminations: List[Tuple[int, float, str]]
    aborted: bool = False
    path_switch_at: Optional[float] = None

    def lines(self) -> List[str]:
        return [r.line() for r in self.trace]

    def export(self) -> str:
        return "\n".join(self.lines()) + "\n"


def run_handover(ctx: HandoverContext, n_sdus: int = 8, switch_after: Optional[int] = None,
                 source_loss: Optional[Sequence[bool]] = None, target_loss: Optional[Sequence[bool]] = None,
                 xn_latency_ms: float = 2.0, rrc_latency_ms: float = RRC_LATENCY_MS_DEFAULT,
                 tti_ms: float = 1.0, xn_available: bool = True) -> HandoverResult:
    """Scripted duplication-based handover of ``n_sdus`` SDUs with per-link, per-SDU air loss masks.

    SDUs with SN below ``switch_after`` are anchored at the source node, the rest
    at the target. The PathSwitch is completed once every copy of the pre-switch
    SDUs can have reached the source; post-switch SDUs are sent afterwards.
    Every SDU crosses each air link once (no retransmissions), so an SDU is lost
    only when both of its copies are lost.
    """
    if ctx.phase is not HandoverPhase.IDLE:
        raise ConfigurationError("handover must start from Idle")
    switch_after = n_sdus // 2 if switch_after is None else switch_after
    if not 0 <= switch_after <= n_sdus:
        raise ConfigurationError("switch_after must lie within the SDU range")
    source_loss = [False] * n_sdus if source_loss is None else [bool(x) for x in source_loss]
    target_loss = [False] * n_sdus if target_loss is None else [bool(x) for x in target_loss]
    if len(source_loss) != n_sdus or len(target_loss) != n_sdus:
        raise ValueError("loss masks must have one entry per SDU")

    src, tgt = ctx.source_gnb, ctx.target_gnb
    sched = Scheduler()
    trace: List[TraceRecord] = []
    delivered: List[Tuple[int, float, str]] = []
    eliminated: List[Tuple[int, float, str]] = []
    uplink = ctx.direction == "uplink"

    def log(t, entity, kind, sns="-"):
        trace.append(TraceRecord(t, entity, ctx.phase.label, str(kind.value if isinstance(kind, enum.Enum) else kind),
                                 sns))

    def sn_str(lo, hi):
        if hi <= lo:
            return "-"
        return str(lo) if hi - lo == 1 else f"{lo}-{hi - 1}"

    def anchor(sn):
        return src if sn < switch_after else tgt

    # receivers performing duplicate elimination: one per anchor in uplink, the UE in downlink
    windows = {name: ReceiverWindow(0) for name in (src, tgt, "UE")}
    pdcp = PdcpTransmitter(BearerConfig(0, BearerKind.MCG, (LegConfig("MCG", 0, 4),)))

    def receive(entity, pdu: PdcpPdu, t):
        if windows[entity].receive(pdu) is RxAction.DELIVER:
            delivered.append((pdu.sn, t, entity))
            log(t, entity, "Deliver", str(pdu.sn))
        else:
            eliminated.append((pdu.sn, t, entity))
            log(t, entity, "Eliminate", str(pdu.sn))

    def on_air(ev):
        node, pdu = ev.payload
        t = ev.time_ms
        if not uplink:
            receive("UE", pdu, t)
            return
        if node == anchor(pdu.sn):
            receive(node, pdu, t)
        else:
            ctx.forwarded_sns.add(pdu.sn)
            log(t, node, "XnForward", str(pdu.sn))
            sched.schedule(t + xn_latency_ms, EventKind.XN_DELIVERY, (anchor(pdu.sn), pdu), on_xn_rx)

    def on_xn_rx(ev):
        node, pdu = ev.payload
        if uplink:
            receive(node, pdu, ev.time_ms)
        else:
            transmit(node, pdu, ev.time_ms)

    def transmit(node, pdu, t):
        lost = (source_loss if node == src else target_loss)[pdu.count]
        log(t, "UE" if uplink else node, f"{'AirLoss' if lost else 'AirTx'}({node})", str(pdu.sn))
        if not lost:
            sched.schedule(t + tti_ms, EventKind.TX_ATTEMPT, (node, pdu), on_air)

    def send_sdu(ev):
        i = ev.payload
        t = ev.time_ms
        pdu = pdcp.number(PdcpSdu(0, created_at=t))
        if uplink:
            for node in (src, tgt):
                transmit(node, pdu, t)
        else:
            owner = anchor(pdu.sn)
            other = tgt if owner == src else src
            transmit(owner, pdu, t)
            ctx.forwarded_sns.add(pdu.sn)
            log(t, owner, "XnForward", str(pdu.sn))
            sched.schedule(t + xn_latency_ms, EventKind.XN_DELIVERY, (other, pdu), on_xn_rx)

    t = 0.0
    log(t, src, "Trigger")
    log(t, src, RrcKind.RECONFIG_ADD_SECONDARY)
    t += rrc_latency_ms
    log(t, "UE", RrcKind.RECONFIG_COMPLETE)
    t += rrc_latency_ms
    if not xn_available:
        log(t, src, "HandoverAborted")
        # single-link fallback: everything stays with the source
        for i in range(n_sdus):
            pdu = pdcp.number(PdcpSdu(0, created_at=t + i * tti_ms))
            tx_t = t + i * tti_ms
            if source_loss[i]:
                log(tx_t, "UE" if uplink else src, f"AirLoss({src})", str(pdu.sn))
            else:
                receive(src if uplink else "UE", pdu, tx_t + tti_ms)
        return HandoverResult(ctx, trace, delivered, eliminated, aborted=True)

    ctx.enter(HandoverPhase.BEARER_ESTABLISHED)
    log(t, tgt, "BearerEstablished")
    ctx.enter(HandoverPhase.DUPLICATING)
    log(t, src, RrcKind.HANDOVER_COMMAND, sn_str(0, n_sdus))
    t_dup = t
    for i in range(switch_after):
        sched.schedule(t_dup + i * tti_ms, EventKind.TRAFFIC_ARRIVAL, i, send_sdu)
    last_pre = t_dup + (switch_after - 1) * tti_ms if switch_after else t_dup - tti_ms
    t_switch = max(t_dup, last_pre + tti_ms + xn_latency_ms)
    sched.run(until=t_switch)
    ctx.enter(HandoverPhase.PATH_SWITCHED)
    log(t_switch, tgt, RrcKind.PATH_SWITCH, sn_str(switch_after, n_sdus))
    for i in range(switch_after, n_sdus):
        sched.schedule(t_switch + (i - switch_after + 1) * tti_ms, EventKind.TRAFFIC_ARRIVAL, i, send_sdu)
    sched.run()
    t_end = max(sched.now, t_switch)
    ctx.enter(HandoverPhase.SOURCE_RELEASED)
    log(t_end, tgt, RrcKind.RELEASE_SOURCE)
    return HandoverResult(ctx, trace, delivered, eliminated, path_switch_at=t_switch)
