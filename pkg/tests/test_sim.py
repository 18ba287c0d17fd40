import json
import math
from dataclasses import replace

import numpy as np
import pytest

from zcssc import CapacityError, ConfigError, ParameterError
from zcssc.sim import (CSV_HEADER, NOMINAL_PAYLOADS, SimConfig, build_link, config_to_text, emit_results,
                       feasible_payload, load_results_json, parse_config_text, results_to_csv, run_campaign,
                       sweep)

SMALL = SimConfig(scheme="ssc_indicated", n_prb=1, K=12, channel="awgn", snr_db=-12.0,
                  trials=300, max_errors=0, drop_slots=20)


def test_csv_header_documented_string():
    assert CSV_HEADER == ("scheme,n_prb,K,L,alpha,L_prime,R,T_R,feedback,snr_db,trials,block_errors,bler,"
                          "bler_ci95,throughput_bits_per_slot,avg_tx_per_codeword,seed")


def test_config_parse_and_overrides():
    cfg = parse_config_text("scheme = mdc  # baseline\n\n# comment\nn_prb=4\nsnr_db = -9.5\n",
                            ["n_prb=8", "snr_db=none"])
    assert cfg.scheme == "mdc" and cfg.n_prb == 8 and cfg.snr_db is None
    assert parse_config_text(config_to_text(cfg)) == cfg
    assert parse_config_text("snr_db = inf").effective_snr_db == math.inf


@pytest.mark.parametrize("text", ["bogus = 1", "n_prb = two", "just words"])
def test_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config_text(text)


def test_effective_snr():
    assert SimConfig(n_prb=80).effective_snr_db == pytest.approx(-2.15 - 10 * math.log10(80))
    assert SimConfig(snr_db=-5.0, snr_offset_db=1.5).effective_snr_db == -3.5


@pytest.mark.parametrize("cfg,err", [
    (SimConfig(scheme="turbo"), ConfigError),
    (SimConfig(channel="rayleigh"), ConfigError),
    (SimConfig(scheme="mdc", R=2), ConfigError),
    (SimConfig(K=31), ConfigError),
    (SimConfig(scheme="ssc_indicated", alpha=1.0), ConfigError),
    (SimConfig(R=5), ConfigError),
    (SimConfig(trials=0), ConfigError),
    (SimConfig(K=32), CapacityError),
    (SimConfig(scheme="mdc", K=32), CapacityError),
])
def test_build_link_rejects(cfg, err):
    with pytest.raises(err):
        build_link(cfg)


def test_feasible_payloads():
    # 2 PRB: P = 331 tops out at 30 bits with L = 2
    assert feasible_payload(2, 2) == 30
    # 4 PRB: P = 661; 36 bits would need 2 * ceil(2**18 / 661) + 1 = 795 roots > 660
    assert 2 * -(-2 ** 18 // 661) + 1 > 660 and feasible_payload(4, 2) == 34
    assert feasible_payload(8, 2) == NOMINAL_PAYLOADS[8] == 38


def test_noiseless_campaign():
    r = run_campaign(replace(SMALL, snr_db=math.inf, trials=100))
    assert r.bler == 0 and r.block_errors == 0
    assert r.gamma == r.K
    assert r.throughput_bits_per_slot == r.K


def test_same_seed_identical():
    a, b = run_campaign(SMALL), run_campaign(SMALL)
    assert results_to_csv([a]) == results_to_csv([b])
    assert a.tx_histogram == b.tx_histogram


def test_throughput_identity():
    cfg = replace(SMALL, R=2, feedback_mode="genie", channel="rician", snr_db=-9.0)
    r = run_campaign(cfg)
    assert r.bits_delivered == (r.trials - r.block_errors) * r.K
    assert r.throughput_bits_per_slot * r.slots == pytest.approx(r.bits_delivered)
    assert sum(r.tx_histogram.values()) == r.trials
    assert set(r.tx_histogram) <= {1, 2}


def test_early_stop_on_errors():
    r = run_campaign(replace(SMALL, snr_db=-20.0, trials=10_000, max_errors=30))
    assert 30 <= r.block_errors < 60 and r.trials < 10_000


def test_ci_shrinks_with_trials():
    a = run_campaign(replace(SMALL, trials=400))
    b = run_campaign(replace(SMALL, trials=1600))
    assert 0.05 < a.bler < 0.95
    ratio = a.bler_ci95 / b.bler_ci95
    assert 1.5 < ratio < 2.7


def test_sweep_axis_checks():
    assert sweep(SMALL, "snr_db", []) == []
    with pytest.raises(ParameterError):
        sweep(SMALL, "scheme", ["mdc"])
    with pytest.raises(ParameterError):
        sweep(SMALL, "no_such_key", [1])


def test_sweep_n_prb_payloads():
    base = replace(SMALL, K=0, channel="awgn", snr_db=math.inf, trials=10, drop_slots=5)
    Ks = [r.K for r in sweep(base, "n_prb", [2, 4, 8])]
    assert Ks == [30, 34, 38]


def test_sweep_snr_monotone():
    rs = sweep(replace(SMALL, trials=600), "snr_offset_db", [-2, -1, 0, 1, 2])
    for a, b in zip(rs, rs[1:]):
        assert b.bler - a.bler <= math.hypot(a.bler_ci95, b.bler_ci95)


def test_json_round_trip(tmp_path):
    res = [run_campaign(SMALL), run_campaign(replace(SMALL, snr_db=-10.0))]
    path = tmp_path / "out.json"
    emit_results(res, path)
    assert load_results_json(path) == [r.row() for r in res]
    csv_path = tmp_path / "out.csv"
    emit_results(res, csv_path)
    lines = csv_path.read_text().splitlines()
    assert lines[0] == CSV_HEADER and len(lines) == 3


def test_zero_trial_guard(tmp_path):
    r = run_campaign(replace(SMALL, trials=5))
    r.trials = 0
    with pytest.raises(ValueError):
        results_to_csv([r])
    with pytest.raises(ValueError):
        emit_results([r], tmp_path / "x.json")
    with pytest.raises(ParameterError):
        emit_results([], tmp_path / "x.csv", fmt="xml")


def test_unwritable_path(tmp_path):
    with pytest.raises(OSError):
        emit_results([run_campaign(replace(SMALL, trials=5))], tmp_path / "missing" / "x.csv")


@pytest.mark.slow
def test_worker_count_independent():
    cfg = replace(SMALL, trials=200, drop_slots=10)
    outs = {w: results_to_csv([run_campaign(replace(cfg, workers=w))]) for w in (1, 2)}
    assert outs[1] == outs[2]
