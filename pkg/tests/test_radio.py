import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pdcpdup import radio
from pdcpdup.radio import (
    ChannelRealization,
    LinkModelConfig,
    Scenario,
    TopologyConfig,
    associate,
    associate_all,
    attempt_outcome,
    db_to_lin,
    lin_to_db,
    noise_power_dbm,
    pathloss,
    place_topology,
    sinr,
    sinr_from_powers,
)


def friis_oracle(d_m, f_hz=5.2e9):
    # independent evaluation of free-space loss: (4 pi d f / c)^2 in dB
    return 10 * math.log10((4 * math.pi * d_m * f_hz / 299_792_458.0) ** 2)


def test_pathloss_anchor_at_breakpoint():
    assert pathloss(15.0) == pytest.approx(70.28, abs=0.05)
    assert 70.28 + 25.9 * math.log10(15 / 15) == pytest.approx(70.28)
    # the free-space branch meets the log-distance branch
    assert friis_oracle(15.0) == pytest.approx(70.28, abs=0.05)
    assert pathloss(15.0 - 1e-9) == pytest.approx(friis_oracle(15.0), abs=1e-6)


def test_pathloss_far_anchor():
    assert pathloss(150.0) == pytest.approx(96.18, abs=0.01)


def test_pathloss_near_is_free_space():
    for d in (1.0, 3.7, 10.0):
        assert pathloss(d) == pytest.approx(friis_oracle(d), abs=1e-9)


def test_pathloss_domain():
    for bad in (0.0, -1.0, float("nan")):
        with pytest.raises(ValueError):
            pathloss(bad)


@given(st.floats(0.01, 1e4), st.floats(0.0, 1e3))
def test_pathloss_monotone(d, extra):
    assert pathloss(d + extra) >= pathloss(d) - 1e-9


def test_pathloss_vectorised():
    d = np.array([5.0, 15.0, 150.0])
    out = pathloss(d)
    assert out.shape == (3,) and out[2] == pytest.approx(96.18, abs=0.01)


def test_noise_at_defaults():
    assert noise_power_dbm(LinkModelConfig()) == pytest.approx(-95.99, abs=0.01)


@given(st.floats(0.1, 1e4))
def test_doubling_bandwidth_adds_3db(bw):
    a = noise_power_dbm(LinkModelConfig(bandwidth_mhz=bw))
    b = noise_power_dbm(LinkModelConfig(bandwidth_mhz=2 * bw))
    assert b - a == pytest.approx(3.01, abs=0.01)


@given(st.floats(-200, 200))
def test_db_round_trip(x):
    assert lin_to_db(db_to_lin(x)) == pytest.approx(x, rel=1e-9, abs=1e-12)


def test_sinr_examples():
    assert sinr_from_powers(-90.0, [], -96.0) == pytest.approx(6.0)
    assert sinr_from_powers(-90.0, [-96.0], -96.0) == pytest.approx(6.0 - 10 * math.log10(2), abs=1e-9)
    cfg = LinkModelConfig()
    link = ChannelRealization("g", "u", 15.0, 30.0)
    n = noise_power_dbm(cfg)
    assert sinr(link, [], cfg) == pytest.approx(30.0 - pathloss(15.0) - n)


def test_sinr_errors():
    cfg = LinkModelConfig()
    with pytest.raises(ValueError):
        sinr(None, [], cfg)
    with pytest.raises(ValueError):
        sinr(ChannelRealization(0, 1, 10.0, 30.0), [ChannelRealization(2, 1, 10.0, 30.0, carrier_ghz=3.5)], cfg)


def test_attempt_outcome_boundary():
    assert attempt_outcome(12.0, 10.0)
    assert attempt_outcome(10.0, 10.0)
    assert not attempt_outcome(9.999, 10.0)


def test_lower_beta_enlarges_success_set():
    rng = np.random.default_rng(5)
    s = rng.normal(6.0, 8.0, size=10_000)
    hi, lo = attempt_outcome(s, 10.0), attempt_outcome(s, 4.0)
    assert np.all(lo >= hi) and lo.sum() > hi.sum()


def test_shadowing_statistics():
    link = LinkModelConfig()
    tiers = np.array([1, 2])
    draws = radio.sample_shadowing(np.random.default_rng(11), 20_000, tiers, link)
    assert draws[:, 0].std() == pytest.approx(8.0, rel=0.02)
    assert draws[:, 1].std() == pytest.approx(10.0, rel=0.02)


def _topo(seed, n_sc=2):
    cfg = TopologyConfig(n_sc=n_sc)
    return place_topology(cfg, np.random.default_rng(seed), np.random.default_rng(seed + 1000))


def test_topology_geometry():
    topo = _topo(3)
    isd = np.linalg.norm(topo.tier1_xy[0] - topo.tier1_xy[1])
    assert isd == pytest.approx(math.sqrt(3) * 30.0)
    assert topo.n_ue == 150 and len(topo.tier2_xy) == 6
    assert np.all(np.linalg.norm(topo.ue_xy - topo.tier1_xy[topo.ue_parent], axis=1) <= 30.0 + 1e-9)
    assert np.all(np.linalg.norm(topo.tier2_xy - topo.tier1_xy[topo.tier2_parent], axis=1) <= 30.0 + 1e-9)


def test_tier2_needs_its_stream():
    with pytest.raises(ValueError):
        place_topology(TopologyConfig(n_sc=1), np.random.default_rng(0))


def _row(ue_xy, gnb_xy, tiers, shadow=None):
    link = LinkModelConfig()
    d = np.maximum(np.linalg.norm(np.asarray(gnb_xy) - np.asarray(ue_xy), axis=1), 1.0)
    rx = radio.dl_tx_power(tiers, link) - pathloss(d) - (0 if shadow is None else shadow)
    cov = d <= np.where(tiers == 1, 30.0, 20.0)
    return rx, cov, d


def test_s3_degenerates_without_tier2_coverage():
    tiers = np.array([1, 2])
    rx, cov, d = _row([0.0, 0.0], [[0.0, 0.0], [45.0, 0.0]], tiers)
    a = associate(0, rx, tiers, cov, d, Scenario.S3)
    assert a.serving == (0,) and not a.dc


def test_s2_prefers_close_tier2():
    tiers = np.array([1, 2])
    gnbs = [[0.0, 0.0], [30.0, 0.0]]
    ue = [25.0, 0.0]  # 25 m from tier 1, 5 m from tier 2
    rx, cov, d = _row(ue, gnbs, tiers)
    # mean received power gap from an independent evaluation
    gap = (23.0 - friis_oracle(5.0)) - (30.0 - (70.28 + 25.9 * math.log10(25.0 / 15.0)))
    assert rx[1] - rx[0] == pytest.approx(gap)
    assert gap > 8.0
    assert associate(0, rx, tiers, cov, d, Scenario.S2).serving == (1,)
    # shadowing on the tier-2 link larger than the gap reverses the choice
    rx2, _, _ = _row(ue, gnbs, tiers, shadow=np.array([0.0, gap + 0.1]))
    assert associate(0, rx2, tiers, cov, d, Scenario.S2).serving == (0,)


def test_s3_dual_connectivity_in_both_coverages():
    tiers = np.array([1, 2])
    rx, cov, d = _row([25.0, 0.0], [[0.0, 0.0], [30.0, 0.0]], tiers)
    a = associate(0, rx, tiers, cov, d, Scenario.S3)
    assert a.dc and len(a.serving) == 2
    assert [tiers[g] for g in a.serving] == [1, 2]  # master first


def test_outside_coverage_falls_back_to_nearest_tier1():
    tiers = np.array([1, 1, 2])
    rx, cov, d = _row([100.0, 0.0], [[0.0, 0.0], [60.0, 0.0], [90.0, 30.0]], tiers, shadow=np.array([0, 20.0, 0]))
    for scen in Scenario:
        a = associate(0, rx, tiers, cov, d, scen)
        assert a.serving[0] == 1 and len(a.serving) == 1


def test_s1_ca_uses_two_carriers():
    topo = _topo(1)
    shadow = radio.sample_shadowing(np.random.default_rng(2), topo.n_ue, topo.gnb_tier, LinkModelConfig())
    for a in associate_all(topo, shadow, LinkModelConfig(), Scenario.S1_CA):
        assert a.ca and a.carriers == (0, 1) and a.serving[0] == a.serving[1]
        assert topo.gnb_tier[a.serving[0]] == 1


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_s3_contains_s2_node(seed):
    topo = _topo(seed)
    link = LinkModelConfig()
    shadow = radio.sample_shadowing(np.random.default_rng(seed), topo.n_ue, topo.gnb_tier, link)
    s2 = associate_all(topo, shadow, link, Scenario.S2)
    s3 = associate_all(topo, shadow, link, Scenario.S3)
    for a2, a3 in zip(s2, s3):
        assert a2.serving[0] in a3.serving
        if a3.dc:
            assert sorted(topo.gnb_tier[list(a3.serving)]) == [1, 2]


@given(st.floats(1.0, 200.0), st.floats(-30, 30), st.sampled_from([1, 2]))
def test_uplink_snr_not_above_downlink(d, shadow, tier):
    cfg = LinkModelConfig()
    p_dl = cfg.tx_power_dl_tier1_dbm if tier == 1 else cfg.tx_power_dl_tier2_dbm
    dl = sinr(ChannelRealization("g", "u", d, p_dl, shadow), [], cfg)
    ul = sinr(ChannelRealization("u", "g", d, cfg.tx_power_ul_dbm, shadow), [], cfg)
    assert ul <= dl


def test_topology_dump_format():
    topo = _topo(4)
    link = LinkModelConfig()
    assoc = associate_all(topo, np.zeros((topo.n_ue, 9)), link, Scenario.S3)
    lines = radio.dump_topology(topo, assoc).splitlines()
    assert lines[0] == "kind,id,tier,x_m,y_m,serving"
    assert len(lines) == 1 + 9 + 150
    gnb = lines[1].split(",")
    assert gnb[0] == "gnb" and gnb[2] == "1" and len(gnb[3].split(".")[1]) == 6


def test_link_config_validation():
    with pytest.raises(ValueError):
        LinkModelConfig(fading="nakagami")
    with pytest.raises(ValueError):
        LinkModelConfig(bandwidth_mhz=0)
    assert LinkModelConfig(beta_db=10, beta_ul_db=7).beta_for("uplink") == 7
