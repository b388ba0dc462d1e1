"""User-plane protocol entities: PDCP duplication and duplicate elimination, RLC AM legs, MAC multiplexing.

The transmitting PDCP entity assigns a sequence number to every SDU and, while
duplication is active, hands the *same* PDU to two RLC entities (legs). The
receiving PDCP entity keeps the first copy of each sequence number and drops
every later one.
"""

from __future__ import annotations

import enum
import itertools
import math
from collections import deque
from dataclasses import dataclass
from typing import Deque, Dict, List, Optional, Tuple

SN_BITS_DEFAULT = 12
MAX_RETX_DEFAULT = 3
RETX_DELAY_MS_DEFAULT = 4.0
TTI_MS_DEFAULT = 1.0
RLC_BUFFER_LIMIT_DEFAULT = 4096
PACKET_SIZE_BYTES = 100


class ConfigurationError(ValueError):
    """Raised for bearer or duplication configurations that the protocol forbids."""


class InvariantViolation(RuntimeError):
    """Raised when a caller asks an entity to do something its configuration cannot support."""


class BearerKind(str, enum.Enum):
    MCG = "MCG"
    SCG = "SCG"
    SPLIT = "Split"
    DUPLICATE = "Duplicate"
    SRB = "SRB"


class DupMode(str, enum.Enum):
    DC = "DC"
    CA = "CA"


class SrbType(str, enum.Enum):
    SRB1 = "SRB1"
    SRB2 = "SRB2"


# Lower value is served first within a MAC entity.
LOGICAL_CHANNEL_PRIORITY = {SrbType.SRB1: 1, SrbType.SRB2: 2, None: 10}


@dataclass(frozen=True)
class LegConfig:
    cell_group: str  # "MCG" or "SCG"
    carrier: int
    lcid: int


@dataclass(frozen=True)
class BearerConfig:
    bearer_id: int
    kind: BearerKind
    legs: Tuple[LegConfig, ...]
    default_leg: int = 0
    split_threshold_bytes: int = 0
    duplication_configured: bool = False
    initial_duplication_active: bool = False
    dup_mode: DupMode = DupMode.DC
    srb_type: Optional[SrbType] = None

    def __post_init__(self):
        object.__setattr__(self, "legs", tuple(self.legs))
        object.__setattr__(self, "kind", BearerKind(self.kind))
        object.__setattr__(self, "dup_mode", DupMode(self.dup_mode))
        if not 1 <= len(self.legs) <= 2:
            raise ConfigurationError(f"bearer {self.bearer_id}: needs 1 or 2 legs, got {len(self.legs)}")
        two_legs = self.kind in (BearerKind.SPLIT, BearerKind.DUPLICATE) or self.duplication_configured
        if two_legs and len(self.legs) != 2:
            raise ConfigurationError(f"bearer {self.bearer_id}: {self.kind.value} bearer requires exactly 2 legs")
        if not 0 <= self.default_leg < len(self.legs):
            raise ConfigurationError(f"bearer {self.bearer_id}: default_leg {self.default_leg} out of range")
        if self.split_threshold_bytes < 0:
            raise ConfigurationError("split_threshold_bytes must be non-negative")
        if self.initial_duplication_active and not self.duplication_configured:
            raise ConfigurationError(f"bearer {self.bearer_id}: duplication active but not configured")
        if self.kind is BearerKind.SRB and self.srb_type is None:
            object.__setattr__(self, "srb_type", SrbType.SRB1)
        if len(self.legs) == 2:
            a, b = self.legs
            if self.dup_mode is DupMode.CA:
                if a.cell_group != b.cell_group:
                    raise ConfigurationError("CA duplication needs both legs in one cell group")
                if a.carrier == b.carrier:
                    raise ConfigurationError("duplication on the same carrier is not supported")
            elif a.cell_group == b.cell_group:
                raise ConfigurationError("DC legs must belong to different cell groups")
            if a.lcid == b.lcid and a.cell_group == b.cell_group:
                raise ConfigurationError("duplicated legs need distinct logical channels")

    @property
    def priority(self) -> int:
        return LOGICAL_CHANNEL_PRIORITY[self.srb_type]


def dc_duplicate_bearer(bearer_id=1, kind=BearerKind.SPLIT, active=True, split_threshold_bytes=0,
                        default_leg=0) -> BearerConfig:
    """Two-leg bearer over MCG carrier 0 and SCG carrier 0 with duplication configured."""
    return BearerConfig(
        bearer_id=bearer_id,
        kind=kind,
        legs=(LegConfig("MCG", 0, 4), LegConfig("SCG", 0, 5)),
        default_leg=default_leg,
        split_threshold_bytes=split_threshold_bytes,
        duplication_configured=True,
        initial_duplication_active=active,
        dup_mode=DupMode.DC,
    )


def ca_duplicate_bearer(bearer_id=1, active=True) -> BearerConfig:
    return BearerConfig(
        bearer_id=bearer_id,
        kind=BearerKind.DUPLICATE,
        legs=(LegConfig("MCG", 0, 4), LegConfig("MCG", 1, 5)),
        duplication_configured=True,
        initial_duplication_active=active,
        dup_mode=DupMode.CA,
    )


def single_leg_bearer(bearer_id=1, cell_group="MCG", carrier=0) -> BearerConfig:
    kind = BearerKind.MCG if cell_group == "MCG" else BearerKind.SCG
    return BearerConfig(bearer_id=bearer_id, kind=kind, legs=(LegConfig(cell_group, carrier, 4),))


@dataclass(frozen=True)
class PdcpSdu:
    bearer_id: int
    payload_bytes: int = PACKET_SIZE_BYTES
    created_at: float = 0.0

    def __post_init__(self):
        if self.payload_bytes <= 0:
            raise ValueError("payload_bytes must be positive")


@dataclass(frozen=True)
class PdcpPdu:
    bearer_id: int
    sn: int
    payload_bytes: int
    is_duplicate: bool
    created_at: float
    count: int  # SN extended with the hyper frame number; never wraps

    def as_duplicate(self) -> "PdcpPdu":
        return PdcpPdu(self.bearer_id, self.sn, self.payload_bytes, True, self.created_at, self.count)


class PdcpTransmitter:
    """Transmitting PDCP entity of one radio bearer.

    ``enqueue`` numbers SDUs and holds them in the PDCP buffer; ``pull`` hands
    buffered PDUs to the lower layer using the duplication state at pull time,
    so a PDU that already left PDCP is never duplicated retroactively.
    """

    def __init__(self, bearer: BearerConfig, sn_bits: int = SN_BITS_DEFAULT, first_count: int = 0):
        if bearer is None:
            raise ConfigurationError("PDCP entity needs a configured bearer")
        if first_count < 0:
            raise ValueError("first_count must be non-negative")
        self.bearer = bearer
        self.sn_bits = sn_bits
        self.sn_modulus = 1 << sn_bits
        self._count = first_count
        self._last_created = -math.inf
        self._rr = itertools.cycle(range(len(bearer.legs)))
        self.buffer: Deque[PdcpPdu] = deque()

    @property
    def buffered_bytes(self) -> int:
        return sum(p.payload_bytes for p in self.buffer)

    def number(self, sdu: PdcpSdu) -> PdcpPdu:
        if sdu.bearer_id != self.bearer.bearer_id:
            raise ConfigurationError(f"SDU for bearer {sdu.bearer_id} submitted to bearer {self.bearer.bearer_id}")
        if sdu.created_at < self._last_created:
            raise ValueError("SDU creation times must be non-decreasing per bearer")
        self._last_created = sdu.created_at
        count = self._count
        self._count += 1
        return PdcpPdu(sdu.bearer_id, count % self.sn_modulus, sdu.payload_bytes, False, sdu.created_at, count)

    def route(self, pdu: PdcpPdu, dup_active: bool, buffered_volume: int = 0) -> List[Tuple[int, PdcpPdu]]:
        bearer = self.bearer
        if dup_active:
            if len(bearer.legs) != 2:
                raise InvariantViolation(f"bearer {bearer.bearer_id} has a single leg; cannot duplicate")
            # split threshold and path restriction do not apply while duplicating
            primary = bearer.default_leg
            return [(primary, pdu), (1 - primary, pdu.as_duplicate())]
        if bearer.kind is BearerKind.SPLIT and buffered_volume >= bearer.split_threshold_bytes:
            return [(next(self._rr), pdu)]
        return [(bearer.default_leg, pdu)]

    def submit(self, sdu: PdcpSdu, dup_active: bool, buffered_volume: int = 0) -> List[Tuple[int, PdcpPdu]]:
        """Number one SDU and route it straight to the legs."""
        return self.route(self.number(sdu), dup_active, buffered_volume)

    def enqueue(self, sdu: PdcpSdu) -> PdcpPdu:
        pdu = self.number(sdu)
        self.buffer.append(pdu)
        return pdu

    def pull(self, n: Optional[int], dup_active: bool) -> List[Tuple[int, PdcpPdu]]:
        out = []
        while self.buffer and (n is None or n > 0):
            volume = self.buffered_bytes
            pdu = self.buffer.popleft()
            out.extend(self.route(pdu, dup_active, volume))
            if n is not None:
                n -= 1
        return out


def pdcp_submit(tx: PdcpTransmitter, sdu: PdcpSdu, dup_active: bool, buffered_volume: int = 0):
    return tx.submit(sdu, dup_active, buffered_volume)


class RxAction(enum.Enum):
    DELIVER = "deliver"
    DISCARD = "discard"


class ReceiverWindow:
    """Duplicate detection over a modular SN space.

    Incoming SNs are placed relative to the highest COUNT seen so far; a COUNT
    more than ``window`` behind it is stale and dropped.
    """

    def __init__(self, bearer_id: int, sn_bits: int = SN_BITS_DEFAULT, window: Optional[int] = None,
                 first_count: int = 0):
        self.bearer_id = bearer_id
        self.modulus = 1 << sn_bits
        self.window = window if window is not None else self.modulus // 2
        # highest COUNT seen; starts just below the first COUNT the peer will send
        self.top = first_count - 1
        self.delivered: set = set()
        self.n_delivered = 0
        self.n_discarded = 0

    @property
    def next_expected(self) -> int:
        return (self.top + 1) % self.modulus

    def _count_of(self, sn: int) -> int:
        diff = (sn - self.top) % self.modulus
        if diff >= self.modulus // 2:
            diff -= self.modulus
        return self.top + diff

    def receive(self, pdu: PdcpPdu) -> RxAction:
        if pdu.bearer_id != self.bearer_id:
            raise ConfigurationError("PDU delivered to the wrong receiver window")
        count = self._count_of(pdu.sn % self.modulus)
        if count < 0 or count <= self.top - self.window or count in self.delivered:
            self.n_discarded += 1
            return RxAction.DISCARD
        self.delivered.add(count)
        if count > self.top:
            self.top = count
            floor = self.top - self.window
            if len(self.delivered) > 2 * self.window:
                self.delivered = {c for c in self.delivered if c > floor}
        self.n_delivered += 1
        return RxAction.DELIVER


def pdcp_receive(win: ReceiverWindow, pdu: PdcpPdu) -> RxAction:
    return win.receive(pdu)


@dataclass
class RlcPdu:
    leg_id: object
    rlc_sn: int
    pdcp: PdcpPdu
    retx_count: int = 0
    due: float = 0.0

    @property
    def pdcp_sn(self) -> int:
        return self.pdcp.sn

    @property
    def size_bytes(self) -> int:
        return self.pdcp.payload_bytes


@dataclass
class RlcCounters:
    attempts: int = 0
    retx: int = 0
    redundant_retx: int = 0
    avoided_retx: int = 0
    dropped: int = 0
    lost: int = 0


class RlcTxEntity:
    """Acknowledged-mode transmitting RLC entity of one leg.

    One RLC PDU per PDCP PDU. Retransmissions wait ``retx_delay_ms`` after the
    failed attempt and always go out before new PDUs.
    """

    def __init__(self, leg_id, max_retx=MAX_RETX_DEFAULT, retx_delay_ms=RETX_DELAY_MS_DEFAULT,
                 buffer_limit=RLC_BUFFER_LIMIT_DEFAULT):
        self.leg_id = leg_id
        self.max_retx = max_retx
        self.retx_delay_ms = retx_delay_ms
        self.buffer_limit = buffer_limit
        self.new: Deque[RlcPdu] = deque()
        self.retx: Dict[int, RlcPdu] = {}
        self.discard_at: Dict[int, float] = {}
        self.peer_acked_at: Dict[int, float] = {}
        self.counters = RlcCounters()
        self._rlc_sn = 0

    @property
    def occupancy(self) -> int:
        return len(self.new) + len(self.retx)

    def has_work(self) -> bool:
        return bool(self.new or self.retx)

    def enqueue(self, pdu: PdcpPdu) -> Optional[RlcPdu]:
        if self.occupancy >= self.buffer_limit:
            self.counters.dropped += 1
            return None
        rlc = RlcPdu(self.leg_id, self._rlc_sn, pdu)
        self._rlc_sn += 1
        self.new.append(rlc)
        return rlc

    def select(self, now: float, capacity: int) -> List[RlcPdu]:
        """PDUs to send in the TTI starting at ``now``: due retransmissions (oldest COUNT first), then new ones."""
        out: List[RlcPdu] = []
        for count in sorted(c for c, p in self.retx.items() if p.due <= now + 1e-9):
            if self.discard_at.get(count, math.inf) <= now + 1e-9:
                del self.retx[count]
                self.counters.avoided_retx += 1
                continue
            if len(out) >= capacity:
                break
            p = self.retx.pop(count)
            p.retx_count += 1
            self.counters.retx += 1
            if self.peer_acked_at.get(count, math.inf) <= now + 1e-9:
                self.counters.redundant_retx += 1
            out.append(p)
        while len(out) < capacity and self.new:
            out.append(self.new.popleft())
        self.counters.attempts += len(out)
        return out

    def on_feedback(self, pdu: RlcPdu, ok: bool, attempt_time: float) -> str:
        if ok:
            return "acked"
        if pdu.retx_count < self.max_retx:
            pdu.due = attempt_time + self.retx_delay_ms
            self.retx[pdu.pdcp.count] = pdu
            return "retx"
        self.counters.lost += 1
        return "lost"

    def peer_acked(self, count: int, at_time: float):
        self.peer_acked_at.setdefault(count, at_time)

    def discard(self, count: int, at_time: float):
        prev = self.discard_at.get(count, math.inf)
        self.discard_at[count] = min(prev, at_time)


def cross_leg_discard(leg_b: RlcTxEntity, count: int, effective_at: float, dup_active: bool = True):
    """Tell ``leg_b`` that the PDU carrying ``count`` was acknowledged on the other leg.

    Any retransmission of that PDU due at or after ``effective_at`` is cancelled.
    """
    if not dup_active:
        return
    leg_b.discard(count, effective_at)


class MacEntity:
    """Per-TTI multiplexing of logical channels onto one carrier of one node."""

    def __init__(self, name, capacity_per_tti: int = 4):
        self.name = name
        self.capacity_per_tti = capacity_per_tti
        self.channels: List[Tuple[int, RlcTxEntity]] = []

    def add_channel(self, rlc: RlcTxEntity, priority: int = 10):
        self.channels.append((priority, rlc))
        self.channels.sort(key=lambda pc: pc[0])

    def has_work(self) -> bool:
        return any(rlc.has_work() for _, rlc in self.channels)

    def schedule(self, now: float) -> List[Tuple[RlcTxEntity, RlcPdu]]:
        budget = self.capacity_per_tti
        out = []
        for _, rlc in self.channels:
            if budget <= 0:
                break
            picked = rlc.select(now, budget)
            budget -= len(picked)
            out.extend((rlc, p) for p in picked)
        return out
