"""Metric records, empirical CDFs and the on-disk output layout."""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

QUANTILES = (0.5, 0.8, 0.95)


@dataclass
class MetricsRecord:
    iteration: int
    scenario: str
    direction: str
    network_pdr: float
    dup_efficiency: Optional[float]
    mean_latency_ms: float
    redundant_retx: int = 0
    avoided_retx: int = 0
    signaling_bytes: Dict[str, int] = field(default_factory=dict)
    generated: int = 0
    delivered_within_budget: int = 0
    delivered_late: int = 0
    lost: int = 0
    dropped: int = 0
    attempts: int = 0
    per_ue_pdr: Tuple[float, ...] = ()

    def __post_init__(self):
        if not 0.0 <= self.network_pdr <= 1.0:
            raise ValueError(f"network_pdr out of range: {self.network_pdr}")
        if self.dup_efficiency is not None and not 0.0 <= self.dup_efficiency <= 1.0:
            raise ValueError(f"dup_efficiency out of range: {self.dup_efficiency}")
        for name in ("redundant_retx", "avoided_retx", "generated", "delivered_within_budget",
                     "delivered_late", "lost", "dropped", "attempts"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


@dataclass(frozen=True)
class CdfPoint:
    value: float
    cum_prob: float


def compute_cdf(values: Iterable[float]) -> List[CdfPoint]:
    """Empirical CDF; equal values collapse onto the highest rank."""
    v = np.sort(np.asarray(list(values), dtype=float))
    if v.size == 0:
        raise ValueError("cannot build a CDF from no values")
    if np.any(np.isnan(v)):
        raise ValueError("CDF input contains NaN")
    n = v.size
    last = np.flatnonzero(np.append(v[1:] != v[:-1], True))
    return [CdfPoint(float(v[i]), (i + 1) / n) for i in last]


def cdf_quantile(points: Sequence[CdfPoint], q: float) -> float:
    """Smallest value x with CDF(x) >= q."""
    for p in points:
        if p.cum_prob >= q - 1e-12:
            return p.value
    return points[-1].value


def quantiles(values: Iterable[float], qs: Sequence[float] = QUANTILES) -> Dict[str, float]:
    cdf = compute_cdf(values)
    return {f"p{int(round(q * 100))}": cdf_quantile(cdf, q) for q in qs}


def fmt(x: float) -> str:
    return f"{x:.6f}"


def write_cdf_csv(path: str, points: Sequence[CdfPoint]):
    with open(path, "w", newline="\n") as fh:
        fh.write("value,cum_prob\n")
        for p in points:
            fh.write(f"{fmt(p.value)},{fmt(p.cum_prob)}\n")


def read_cdf_csv(path: str) -> List[CdfPoint]:
    with open(path) as fh:
        header = fh.readline().strip()
        if header != "value,cum_prob":
            raise ValueError(f"{path}: unexpected header {header!r}")
        return [CdfPoint(float(a), float(b)) for a, b in (line.strip().split(",") for line in fh if line.strip())]


def to_fixed_json(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON text with every float printed at six decimals, keys in insertion order."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_json_str(str(k))}: {to_fixed_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{to_fixed_json(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if math.isnan(x):
            return "null"
        if math.isinf(x):
            return '"inf"' if x > 0 else '"-inf"'
        return fmt(x)
    return _json_str(str(obj))


def _json_str(s: str) -> str:
    return json.dumps(s)


def ensure_dir(path: str):
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {path}: {exc.strerror}") from exc
    if not os.access(path, os.W_OK):
        raise OSError(f"output directory {path} is not writable")


def campaign_files(result, out_dir: str) -> Dict[str, float]:
    """Write the CDF files of one campaign and return its summary block."""
    cfg = result.config
    tag = f"{cfg.scenario}_{cfg.direction}"
    pdr = [r.network_pdr for r in result.records]
    write_cdf_csv(os.path.join(out_dir, f"cdf_pdr_{tag}.csv"), compute_cdf(pdr))
    ue = [x for r in result.records for x in r.per_ue_pdr]
    write_cdf_csv(os.path.join(out_dir, f"cdf_uepdr_{tag}.csv"), compute_cdf(ue))
    block = {"iterations": len(result.records), "pdr": {**quantiles(pdr), "mean": float(np.mean(pdr))}}
    eff = [r.dup_efficiency for r in result.records if r.dup_efficiency is not None]
    if eff:
        write_cdf_csv(os.path.join(out_dir, f"cdf_efficiency_{tag}.csv"), compute_cdf(eff))
        block["efficiency"] = {**quantiles(eff), "mean": float(np.mean(eff))}
    block["totals"] = {
        "generated": sum(r.generated for r in result.records),
        "delivered_within_budget": sum(r.delivered_within_budget for r in result.records),
        "delivered_late": sum(r.delivered_late for r in result.records),
        "lost": sum(r.lost for r in result.records),
        "dropped": sum(r.dropped for r in result.records),
        "redundant_retx": sum(r.redundant_retx for r in result.records),
        "avoided_retx": sum(r.avoided_retx for r in result.records),
        "mean_latency_ms": float(np.mean([r.mean_latency_ms for r in result.records])),
    }
    if result.topology_dump is not None:
        with open(os.path.join(out_dir, f"topology_{tag}.txt"), "w", newline="\n") as fh:
            fh.write(result.topology_dump)
    return block


def write_outputs(results, out_dir: str, config_echo: Optional[dict] = None) -> str:
    """Write CDF CSVs, topology dumps and ``summary.json`` for a list of campaign results."""
    ensure_dir(out_dir)
    summary = {"config": config_echo or {}, "campaigns": {}}
    for res in results:
        cfg = res.config
        key = f"{cfg.scenario}_{cfg.direction}"
        sub = out_dir if res.subdir is None else os.path.join(out_dir, res.subdir)
        ensure_dir(sub)
        block = campaign_files(res, sub)
        block = {"seed": cfg.master_seed, "beta_db": cfg.beta_db, "n_sc": cfg.n_sc,
                 "xn_latency_ms": cfg.xn_latency_ms, **block}
        summary["campaigns"][key if res.subdir is None else f"{res.subdir}/{key}"] = block
    path = os.path.join(out_dir, "summary.json")
    with open(path, "w", newline="\n") as fh:
        fh.write(to_fixed_json(summary) + "\n")
    return path
