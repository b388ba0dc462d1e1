"""Two-tier indoor topology, propagation and SINR-threshold link model."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0
BREAKPOINT_M = 15.0
FADING_MODELS = ("none", "rayleigh_block", "rayleigh_block_all")


class Scenario(str, enum.Enum):
    S1 = "S1"  # single tier, single connectivity
    S2 = "S2"  # two tiers, single connectivity, max received power
    S3 = "S3"  # two tiers, DC with duplication where both tiers cover the UE
    S1_CA = "S1_CA"  # single tier, duplication over two component carriers

    @property
    def two_tier(self) -> bool:
        return self in (Scenario.S2, Scenario.S3)


@dataclass(frozen=True)
class TopologyConfig:
    tier1_cell_radius_m: float = 30.0
    tier2_cell_radius_m: float = 20.0
    n_tier1: int = 3
    n_sc: int = 2
    ues_per_tier1: int = 50
    placement_seed: int = 0
    min_distance_m: float = 1.0


@dataclass(frozen=True)
class LinkModelConfig:
    carrier_ghz: float = 5.2
    tx_power_dl_tier1_dbm: float = 30.0
    tx_power_dl_tier2_dbm: float = 23.0
    tx_power_ul_dbm: float = 18.0
    shadow_std_tier1_db: float = 8.0
    shadow_std_tier2_db: float = 10.0
    noise_psd_dbm_hz: float = -174.0
    noise_figure_db: float = 5.0
    bandwidth_mhz: float = 20.0
    beta_db: float = 10.0
    beta_ul_db: Optional[float] = None
    fading: str = "rayleigh_block"

    def __post_init__(self):
        if self.fading not in FADING_MODELS:
            raise ValueError(f"unknown fading model {self.fading!r}")
        if self.bandwidth_mhz <= 0:
            raise ValueError("bandwidth must be positive")

    def beta_for(self, direction: str) -> float:
        if direction == "uplink" and self.beta_ul_db is not None:
            return self.beta_ul_db
        return self.beta_db


def db_to_lin(x_db):
    return np.power(10.0, np.asarray(x_db, dtype=float) / 10.0)


def lin_to_db(x_lin):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(x_lin, dtype=float))


def free_space_pathloss(d_m, carrier_ghz: float = 5.2):
    wavelength = SPEED_OF_LIGHT / (carrier_ghz * 1e9)
    return 20.0 * np.log10(4.0 * math.pi * np.asarray(d_m, dtype=float) / wavelength)


def pathloss(d_m, carrier_ghz: float = 5.2):
    """Indoor industrial path loss in dB: free space up to 15 m, log-distance beyond."""
    d = np.asarray(d_m, dtype=float)
    if np.any(~(d > 0)):
        raise ValueError("distance must be positive")
    far = 70.28 + 25.9 * np.log10(np.maximum(d, BREAKPOINT_M) / BREAKPOINT_M)
    out = np.where(d > BREAKPOINT_M, far, free_space_pathloss(np.minimum(d, BREAKPOINT_M), carrier_ghz))
    return float(out) if out.ndim == 0 else out


def noise_power_dbm(cfg: LinkModelConfig) -> float:
    return cfg.noise_psd_dbm_hz + 10.0 * math.log10(cfg.bandwidth_mhz * 1e6) + cfg.noise_figure_db


@dataclass(frozen=True)
class ChannelRealization:
    tx_id: object
    rx_id: object
    distance_m: float
    tx_power_dbm: float
    shadow_db: float = 0.0
    fading_db: float = 0.0
    carrier_ghz: float = 5.2

    @property
    def pathloss_db(self) -> float:
        return pathloss(self.distance_m, self.carrier_ghz)

    @property
    def rx_power_dbm(self) -> float:
        return self.tx_power_dbm - self.pathloss_db - self.shadow_db + self.fading_db


def sinr_from_powers(signal_dbm, interference_dbm: Sequence[float], noise_dbm: float):
    """SINR in dB from a received signal power and a list of interfering powers, all dBm."""
    total = db_to_lin(noise_dbm) + (np.sum(db_to_lin(np.asarray(interference_dbm, dtype=float)))
                                     if len(interference_dbm) else 0.0)
    return signal_dbm - lin_to_db(total)


def sinr(link: Optional[ChannelRealization], interferers: Sequence[ChannelRealization],
         cfg: LinkModelConfig) -> float:
    if link is None:
        raise ValueError("SINR needs a signal link")
    for other in interferers:
        if other.carrier_ghz != link.carrier_ghz:
            raise ValueError("interferer on a different carrier")
    return float(sinr_from_powers(link.rx_power_dbm, [i.rx_power_dbm for i in interferers], noise_power_dbm(cfg)))


def attempt_outcome(sinr_db, beta_db):
    """True (success) iff the SINR reaches the threshold; the boundary counts as success."""
    return np.asarray(sinr_db) >= beta_db if np.ndim(sinr_db) else bool(sinr_db >= beta_db)


def hex_sites(n: int, radius_m: float) -> np.ndarray:
    """Tier-1 sites on a hexagonal grid with inter-site distance sqrt(3) * radius."""
    isd = math.sqrt(3.0) * radius_m
    if n == 1:
        return np.zeros((1, 2))
    if n == 3:
        r = isd / math.sqrt(3.0)  # circumradius of the site triangle
        angles = np.deg2rad([90.0, 210.0, 330.0])
        return np.column_stack([r * np.cos(angles), r * np.sin(angles)])
    if n == 7:
        angles = np.deg2rad(np.arange(6) * 60.0 + 30.0)
        ring = np.column_stack([isd * np.cos(angles), isd * np.sin(angles)])
        return np.vstack([np.zeros((1, 2)), ring])
    raise ValueError("hexagonal layout supports 1, 3 or 7 tier-1 sites")


def uniform_in_disc(rng: np.random.Generator, centers: np.ndarray, radius: float) -> np.ndarray:
    n = len(centers)
    r = radius * np.sqrt(rng.random(n))
    theta = 2.0 * math.pi * rng.random(n)
    return centers + np.column_stack([r * np.cos(theta), r * np.sin(theta)])


@dataclass
class Topology:
    tier1_xy: np.ndarray
    tier2_xy: np.ndarray
    tier2_parent: np.ndarray
    ue_xy: np.ndarray
    ue_parent: np.ndarray
    cfg: TopologyConfig

    @property
    def n_tier1(self) -> int:
        return len(self.tier1_xy)

    @property
    def gnb_xy(self) -> np.ndarray:
        return np.vstack([self.tier1_xy, self.tier2_xy])

    @property
    def gnb_tier(self) -> np.ndarray:
        return np.concatenate([np.ones(len(self.tier1_xy), int), np.full(len(self.tier2_xy), 2)])

    @property
    def n_ue(self) -> int:
        return len(self.ue_xy)

    def distances(self) -> np.ndarray:
        d = np.linalg.norm(self.ue_xy[:, None, :] - self.gnb_xy[None, :, :], axis=2)
        return np.maximum(d, self.cfg.min_distance_m)

    def coverage(self) -> np.ndarray:
        """Boolean (ue, gnb): UE inside the gNB's nominal cell radius."""
        radius = np.where(self.gnb_tier == 1, self.cfg.tier1_cell_radius_m, self.cfg.tier2_cell_radius_m)
        return self.distances() <= radius[None, :]


def place_topology(cfg: TopologyConfig, ue_rng: np.random.Generator,
                   tier2_rng: Optional[np.random.Generator] = None) -> Topology:
    """Tier-1 hex sites, ``n_sc`` tier-2 nodes and ``ues_per_tier1`` UEs uniform in each tier-1 disc."""
    t1 = hex_sites(cfg.n_tier1, cfg.tier1_cell_radius_m)
    ue_parent = np.repeat(np.arange(cfg.n_tier1), cfg.ues_per_tier1)
    ue_xy = uniform_in_disc(ue_rng, t1[ue_parent], cfg.tier1_cell_radius_m)
    t2_parent = np.repeat(np.arange(cfg.n_tier1), cfg.n_sc)
    if cfg.n_sc > 0:
        if tier2_rng is None:
            raise ValueError("tier-2 placement needs its own RNG stream")
        t2 = uniform_in_disc(tier2_rng, t1[t2_parent], cfg.tier1_cell_radius_m)
    else:
        t2 = np.zeros((0, 2))
    return Topology(t1, t2, t2_parent, ue_xy, ue_parent, cfg)


def shadow_std(tiers: np.ndarray, link: LinkModelConfig) -> np.ndarray:
    return np.where(tiers == 1, link.shadow_std_tier1_db, link.shadow_std_tier2_db)


def sample_shadowing(rng: np.random.Generator, n_ue: int, tiers: np.ndarray, link: LinkModelConfig) -> np.ndarray:
    """Log-normal shadowing per (UE, gNB) link, drawn once per iteration and shared by UL and DL."""
    return rng.standard_normal((n_ue, len(tiers))) * shadow_std(tiers, link)[None, :]


def dl_tx_power(tiers: np.ndarray, link: LinkModelConfig) -> np.ndarray:
    return np.where(tiers == 1, link.tx_power_dl_tier1_dbm, link.tx_power_dl_tier2_dbm)


@dataclass(frozen=True)
class Association:
    ue: int
    serving: Tuple[int, ...]  # gNB indices; DC lists (master, secondary)
    carriers: Tuple[int, ...]  # carrier per leg
    dc: bool = False
    ca: bool = False

    @property
    def master(self) -> int:
        return self.serving[0]


def associate(ue: int, rx_dbm: np.ndarray, tiers: np.ndarray, covered: np.ndarray,
              distances: np.ndarray, scenario: Scenario) -> Association:
    """Serving node(s) of one UE from mean downlink received power (path loss + shadowing).

    ``rx_dbm``, ``covered`` and ``distances`` are the UE's rows over all gNBs of
    the deployment; tier-2 columns are ignored in single-tier scenarios.
    """
    scenario = Scenario(scenario)
    allowed = np.ones(len(tiers), bool) if scenario.two_tier else tiers == 1
    t1 = np.flatnonzero(tiers == 1)
    if not np.any(covered & allowed):
        # outside every cell: fall back to the nearest tier-1 node
        g = int(t1[np.argmin(distances[t1])])
        return Association(ue, (g,), (0,))

    def strongest(mask):
        idx = np.flatnonzero(mask)
        return int(idx[np.argmax(rx_dbm[idx])])

    if scenario in (Scenario.S1, Scenario.S1_CA):
        g = strongest(tiers == 1)
        if scenario is Scenario.S1_CA:
            return Association(ue, (g, g), (0, 1), ca=True)
        return Association(ue, (g,), (0,))
    best = strongest(allowed)
    if scenario is Scenario.S2:
        return Association(ue, (best,), (0,))
    in_both = np.any(covered & (tiers == 1)) and np.any(covered & (tiers == 2))
    if not in_both:
        return Association(ue, (best,), (0,))
    other_tier = 2 if tiers[best] == 1 else 1
    cand = covered & (tiers == other_tier)
    other = strongest(cand if np.any(cand) else tiers == other_tier)
    master, secondary = (best, other) if tiers[best] == 1 else (other, best)
    return Association(ue, (master, secondary), (0, 0), dc=True)


def associate_all(topo: Topology, shadow_db: np.ndarray, link: LinkModelConfig,
                  scenario: Scenario) -> List[Association]:
    tiers = topo.gnb_tier
    d = topo.distances()
    rx = dl_tx_power(tiers, link)[None, :] - pathloss(d, link.carrier_ghz) - shadow_db
    cov = topo.coverage()
    return [associate(u, rx[u], tiers, cov[u], d[u], scenario) for u in range(topo.n_ue)]


def dump_topology(topo: Topology, assoc: Optional[Sequence[Association]] = None) -> str:
    """Plain-text node/UE listing: ``kind,id,tier,x_m,y_m,serving``."""
    lines = ["kind,id,tier,x_m,y_m,serving"]
    for g, (xy, tier) in enumerate(zip(topo.gnb_xy, topo.gnb_tier)):
        lines.append(f"gnb,{g},{tier},{xy[0]:.6f},{xy[1]:.6f},")
    for u, xy in enumerate(topo.ue_xy):
        serving = "" if assoc is None else "+".join(str(g) for g in assoc[u].serving)
        lines.append(f"ue,{u},0,{xy[0]:.6f},{xy[1]:.6f},{serving}")
    return "\n".join(lines) + "\n"
