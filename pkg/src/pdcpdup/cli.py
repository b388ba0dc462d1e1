"""Command-line front end: single campaigns, the preset multi-scenario sweep and the handover trace demo."""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import fields, replace
from typing import Dict, List, Optional

from pdcpdup.control import HandoverContext, run_handover
from pdcpdup.engine import CampaignResult, RunConfig, run_campaign
from pdcpdup.metrics import ensure_dir, quantiles, write_outputs
from pdcpdup.protocol import ConfigurationError

SCENARIOS = ("S1", "S2", "S3", "S1_CA", "handover-demo")
DIRECTION_ALIASES = {"dl": "downlink", "ul": "uplink", "downlink": "downlink", "uplink": "uplink"}
PRESET_SCENARIOS = ("S1", "S1_CA", "S2", "S3")
PRESET_BETA_DB = 10.0
PRESET_NSC = 2
SWEEP_BETA_DB = 4.0

# config-file keys and flag destinations that differ from RunConfig field names
ALIASES = {"nsc": "n_sc", "packets": "packets_per_user", "seed": "master_seed", "beta": "beta_db"}
RUN_FIELDS = {f.name: f.type for f in fields(RunConfig)}
EXTRA_KEYS = ("out", "workers")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="pdcpdup", description="PDCP duplication system-level simulator")
    p.add_argument("--scenario", choices=SCENARIOS)
    p.add_argument("--direction", choices=("dl", "ul"))
    p.add_argument("--beta-db", dest="beta_db", type=float)
    p.add_argument("--nsc", dest="n_sc", type=int)
    p.add_argument("--iterations", type=int)
    p.add_argument("--packets", dest="packets_per_user", type=int)
    p.add_argument("--xn-latency-ms", dest="xn_latency_ms", type=float)
    p.add_argument("--latency-budget-ms", dest="latency_budget_ms", type=float)
    p.add_argument("--seed", dest="master_seed", type=int)
    p.add_argument("--config", help="key=value file; command-line flags take precedence")
    p.add_argument("--out", help="output directory (default: out)")
    p.add_argument("--workers", type=int, help="parallel worker processes (output does not depend on it)")
    p.add_argument("--paper-fig4", dest="paper_fig4", action="store_true",
                   help="run the 4 scenarios x 2 directions preset plus the beta efficiency sweep")
    return p


def _coerce(key: str, raw: str):
    if key == "direction":
        try:
            return DIRECTION_ALIASES[raw]
        except KeyError:
            raise ConfigurationError(f"invalid direction {raw!r}") from None
    if key in ("out", "scenario", "fading"):
        return raw
    kind = RUN_FIELDS.get(key, "int" if key == "workers" else "str")
    try:
        if "bool" in kind:
            if raw.lower() not in ("1", "0", "true", "false", "yes", "no", "on", "off"):
                raise ValueError(raw)
            return raw.lower() in ("1", "true", "yes", "on")
        if "int" in kind:
            return int(raw)
        if "float" in kind:
            return float(raw)
    except ValueError:
        raise ConfigurationError(f"invalid value for {key}: {raw!r}") from None
    return raw


def load_config_file(path: str) -> Dict[str, object]:
    """Flat ``key = value`` file; ``#`` starts a comment."""
    out = {}
    try:
        fh = open(path)
    except OSError as exc:
        raise ConfigurationError(f"cannot read config file {path}: {exc.strerror}") from None
    with fh:
        for n, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{n}: expected key=value")
            key, raw = (x.strip() for x in line.split("=", 1))
            key = ALIASES.get(key.replace("-", "_"), key.replace("-", "_"))
            if key not in RUN_FIELDS and key not in EXTRA_KEYS:
                raise ConfigurationError(f"{path}:{n}: unknown key {key!r}")
            out[key] = _coerce(key, raw)
    return out


def resolve_settings(args: argparse.Namespace) -> Dict[str, object]:
    """Merge defaults, config file and flags (in increasing precedence)."""
    settings: Dict[str, object] = {"out": "out", "workers": 1}
    if args.config:
        settings.update(load_config_file(args.config))
    for key, value in vars(args).items():
        if key in ("config", "paper_fig4") or value is None:
            continue
        settings[key] = DIRECTION_ALIASES[value] if key == "direction" else value
    return settings


def run_config(settings: Dict[str, object], **override) -> RunConfig:
    kw = {k: v for k, v in settings.items() if k in RUN_FIELDS}
    kw.update(override)
    return RunConfig(**kw)


def preset_configs(settings: Dict[str, object]) -> List[tuple]:
    """(subdir, RunConfig) pairs of the preset sweep."""
    base = run_config({**settings, "scenario": "S1"}, beta_db=PRESET_BETA_DB, n_sc=PRESET_NSC)
    jobs = [(None, replace(base, scenario=s, direction=d))
            for d in ("downlink", "uplink") for s in PRESET_SCENARIOS]
    jobs += [(f"beta{SWEEP_BETA_DB:g}", replace(base, scenario="S3", direction=d, beta_db=SWEEP_BETA_DB))
             for d in ("downlink", "uplink")]
    return jobs


def _report(res: CampaignResult, out=None):
    cfg = res.config
    q = quantiles(res.pdr)
    line = (f"{cfg.scenario:6s} {cfg.direction:8s} beta={cfg.beta_db:g} n_sc={cfg.n_sc} "
            f"PDR p50={q['p50']:.4f} p80={q['p80']:.4f} p95={q['p95']:.4f}")
    if len(res.efficiency):
        e = quantiles(res.efficiency)
        line += f" | efficiency p50={e['p50']:.4f} p80={e['p80']:.4f}"
    print(line, file=out or sys.stdout)


def handover_demo(out_dir: str, settings: Dict[str, object]) -> int:
    ensure_dir(out_dir)
    xn = float(settings.get("xn_latency_ms", 2.0))
    with open(os.path.join(out_dir, "handover_trace.txt"), "w", newline="\n") as fh:
        for direction in ("uplink", "downlink"):
            res = run_handover(HandoverContext(direction=direction), n_sdus=8, switch_after=4, xn_latency_ms=xn)
            header = f"# {direction} handover, PathSwitch after SN 3"
            print(header)
            fh.write(header + "\n")
            for line in res.lines():
                print(line)
                fh.write(line + "\n")
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        settings = resolve_settings(args)
        out_dir = str(settings.pop("out"))
        workers = int(settings.pop("workers"))
        if workers < 1:
            raise ConfigurationError("workers must be at least 1")
        if settings.get("scenario") == "handover-demo" and not args.paper_fig4:
            return handover_demo(out_dir, settings)
        if args.paper_fig4:
            jobs = preset_configs({k: v for k, v in settings.items() if k != "scenario"})
            echo = {**jobs[0][1].as_dict(), "preset": "paper-fig4", "scenario": list(PRESET_SCENARIOS)}
        else:
            cfg = run_config(settings)
            jobs = [(None, cfg)]
            echo = cfg.as_dict()
        results = []
        for subdir, cfg in jobs:
            res = run_campaign(cfg, workers=workers)
            res.subdir = subdir
            _report(res)
            results.append(res)
        path = write_outputs(results, out_dir, echo)
        print(f"wrote {path}")
        return 0
    except ConfigurationError as exc:
        print(f"pdcpdup: configuration error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"pdcpdup: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
