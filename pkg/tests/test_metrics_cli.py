import json
import os

import pytest
from hypothesis import given
from hypothesis import strategies as st

from pdcpdup import cli
from pdcpdup.engine import RunConfig, run_campaign
from pdcpdup.metrics import (
    MetricsRecord,
    cdf_quantile,
    compute_cdf,
    quantiles,
    read_cdf_csv,
    to_fixed_json,
    write_cdf_csv,
    write_outputs,
)


def _pts(cdf):
    return [(p.value, p.cum_prob) for p in cdf]


def test_cdf_examples():
    assert _pts(compute_cdf([0.5])) == [(0.5, 1.0)]
    assert _pts(compute_cdf([0.4, 0.8, 0.2, 0.4])) == [(0.2, 0.25), (0.4, 0.75), (0.8, 1.0)]
    with pytest.raises(ValueError):
        compute_cdf([])


@given(st.lists(st.floats(-1e6, 1e6), min_size=1, max_size=200))
def test_cdf_validity(values):
    cdf = compute_cdf(values)
    vals = [p.value for p in cdf]
    probs = [p.cum_prob for p in cdf]
    assert vals == sorted(set(vals)) and len(vals) == len(set(values))
    assert all(a < b for a, b in zip(probs, probs[1:]))
    assert probs[-1] == 1.0 and probs[0] > 0
    # brute-force oracle: fraction of inputs <= each point
    for p in cdf:
        assert p.cum_prob == pytest.approx(sum(v <= p.value for v in values) / len(values))


def test_quantile_read_off():
    # a curve crossing 0.8 at 0.72 reads as "PDR up to 0.72 in 80% of iterations"
    values = [0.60, 0.65, 0.68, 0.70, 0.71, 0.71, 0.72, 0.72, 0.80, 0.90]
    assert cdf_quantile(compute_cdf(values), 0.8) == 0.72
    assert quantiles(values)["p80"] == 0.72
    assert quantiles(values)["p50"] == 0.71


def test_record_invariants():
    with pytest.raises(ValueError):
        MetricsRecord(0, "S1", "downlink", 1.2, None, 1.0)
    with pytest.raises(ValueError):
        MetricsRecord(0, "S1", "downlink", 0.5, None, 1.0, redundant_retx=-1)


def test_fixed_json():
    text = to_fixed_json({"a": 1, "b": 0.5, "c": [True, None], "d": "x"})
    assert json.loads(text) == {"a": 1, "b": 0.5, "c": [True, None], "d": "x"}
    assert '"b": 0.500000' in text


def test_cdf_csv_round_trip(tmp_path):
    pts = compute_cdf([0.123456789, 0.5, 0.5, 1.0])
    path = tmp_path / "c.csv"
    write_cdf_csv(str(path), pts)
    assert path.read_text().splitlines()[:2] == ["value,cum_prob", "0.123457,0.250000"]
    assert [p.cum_prob for p in read_cdf_csv(str(path))] == [0.25, 0.75, 1.0]


@pytest.fixture(scope="module")
def s1_campaign():
    return run_campaign(RunConfig(scenario="S1", master_seed=1))


def test_outputs_layout(s1_campaign, tmp_path):
    path = write_outputs([s1_campaign], str(tmp_path), s1_campaign.config.as_dict())
    csv = tmp_path / "cdf_pdr_S1_downlink.csv"
    assert csv.exists() and os.path.basename(path) == "summary.json"
    # one row per distinct value; the 100 iteration PDRs of this campaign are all distinct
    assert len(csv.read_text().splitlines()) == 1 + len(set(s1_campaign.pdr.tolist())) == 1 + 100
    assert (tmp_path / "topology_S1_downlink.txt").exists()
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["config"]["master_seed"] == 1
    assert summary["campaigns"]["S1_downlink"]["seed"] == 1


def test_summary_matches_csv(s1_campaign, tmp_path):
    write_outputs([s1_campaign], str(tmp_path))
    summary = json.loads((tmp_path / "summary.json").read_text())
    pts = read_cdf_csv(str(tmp_path / "cdf_pdr_S1_downlink.csv"))
    for key, q in (("p50", 0.5), ("p80", 0.8), ("p95", 0.95)):
        assert summary["campaigns"]["S1_downlink"]["pdr"][key] == cdf_quantile(pts, q)


def test_outputs_are_byte_stable(tmp_path):
    cfg = RunConfig(scenario="S3", iterations=3, packets_per_user=20, master_seed=1)
    for d in ("a", "b"):
        write_outputs([run_campaign(cfg)], str(tmp_path / d), cfg.as_dict())
    for name in sorted(os.listdir(tmp_path / "a")):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_unwritable_output_names_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(OSError, match="file"):
        write_outputs([], str(blocker / "sub"))


# -- command line


def test_cli_campaign_exit_zero(tmp_path, capsys):
    out = tmp_path / "o"
    rc = cli.main(["--scenario", "S3", "--beta-db", "10", "--nsc", "2", "--seed", "1",
                   "--iterations", "2", "--packets", "20", "--out", str(out)])
    assert rc == 0
    assert (out / "cdf_pdr_S3_downlink.csv").exists()
    assert (out / "cdf_efficiency_S3_downlink.csv").exists()
    assert "S3" in capsys.readouterr().out


def test_cli_s3_without_tier2_is_config_error(tmp_path, capsys):
    assert cli.main(["--scenario", "S3", "--nsc", "0", "--out", str(tmp_path)]) == 2
    assert "configuration error" in capsys.readouterr().err


def test_cli_usage_errors_exit_2():
    for argv in (["--bogus"], ["--scenario", "S9"], ["--iterations", "many"]):
        with pytest.raises(SystemExit) as exc:
            cli.main(argv)
        assert exc.value.code == 2


def test_cli_bad_config_file(tmp_path):
    cfg = tmp_path / "bad.cfg"
    cfg.write_text("colour = blue\n")
    assert cli.main(["--config", str(cfg), "--out", str(tmp_path)]) == 2
    assert cli.main(["--config", str(tmp_path / "missing.cfg")]) == 2


def test_config_precedence(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# three layers\nscenario = S2\nbeta = 7\niterations = 3\nnsc = 1\ndirection = ul\n")
    args = cli.build_parser().parse_args(["--config", str(cfg), "--beta-db", "5", "--iterations", "4"])
    rc = cli.run_config({k: v for k, v in cli.resolve_settings(args).items() if k not in ("out", "workers")})
    assert rc.beta_db == 5.0  # flag beats file
    assert rc.iterations == 4
    assert rc.scenario == "S2" and rc.n_sc == 1 and rc.direction == "uplink"  # file beats default
    assert rc.packets_per_user == RunConfig().packets_per_user  # default survives
    assert rc.master_seed == 0


def test_preset_jobs():
    jobs = cli.preset_configs({"master_seed": 7, "iterations": 1})
    main = [(c.scenario, c.direction) for sub, c in jobs if sub is None]
    assert sorted(main) == sorted((s, d) for s in ("S1", "S1_CA", "S2", "S3") for d in ("downlink", "uplink"))
    assert all(c.n_sc == 2 and c.master_seed == 7 for _, c in jobs)
    assert all(c.beta_db == 10 for sub, c in jobs if sub is None)
    sweep = [c for sub, c in jobs if sub is not None]
    assert [(c.scenario, c.beta_db) for c in sweep] == [("S3", 4.0), ("S3", 4.0)]


def test_handover_demo(tmp_path, capsys):
    assert cli.main(["--scenario", "handover-demo", "--out", str(tmp_path)]) == 0
    text = (tmp_path / "handover_trace.txt").read_text()
    printed = capsys.readouterr().out
    assert "PathSwitch" in text and "uplink" in text and "downlink" in text
    body = [line for line in text.splitlines() if not line.startswith("#")]
    assert all(len(line.split(" | ")) == 5 for line in body)
    assert body[0] in printed
