import dataclasses
import math

import numpy as np
import pytest

from nfdmlab import harness
from nfdmlab import transceiver as trx
from nfdmlab.core import RunResult
from nfdmlab.harness import CSV_FIELDS, ExperimentConfig, parse_config

FAST = """
system = ofdm
link_mode = awgn-only
impairments = off
awgn.snr_db = 60
sweep.powers_dbm = -4, 0
n_bursts = 4
n_blocks = 2
seed = 7
"""


# -- presets ----------------------------------------------------------------


def test_tab1_presets():
    rows = harness.tab1_presets()
    assert len(rows) == 6
    assert [f.n_subcarriers for f in rows] == [64, 132, 154, 176, 198, 222]
    assert rows[0].guard_interval / rows[0].t0 == pytest.approx(2.0)
    assert all(f.guard_interval / f.t0 == pytest.approx(1.0) for f in rows[1:])
    r4 = trx.frame_rates(rows[3])
    assert (rows[3].t0, rows[3].guard_interval) == (3.5e-9, 3.5e-9)
    assert r4.gross_bps == pytest.approx(125.7e9, abs=0.05e9)


# -- configuration ------------------------------------------------------------


def test_parse_config_keys_and_units():
    cfg = parse_config("""
        # comment line
        system = nfdm, ofdm
        frame.preset = 6
        link.beta2_ps2_per_km = -20.0   # trailing comment
        link.n_spans = 3
        imp.linewidth_khz = 50
        synth.max_iterations = 4
        sweep.powers_dbm = -2, 0
        n_bursts = 8
        isolated_bursts = yes
    """)
    assert cfg.systems == ("nfdm", "ofdm")
    assert cfg.frame.n_subcarriers == 222
    assert cfg.link.beta2 == pytest.approx(-20e-27)
    assert cfg.link.n_spans == 3
    assert cfg.impairments.laser_linewidth == pytest.approx(50e3)
    assert cfg.synthesis.max_iterations == 4
    assert cfg.powers_dbm == (-2.0, 0.0) and cfg.n_bursts == 8 and cfg.isolated_bursts


@pytest.mark.parametrize("text", ["bogus = 1", "link.bogus = 1", "no equals sign", "system = qpsk",
                                  "sweep.powers_dbm = ", "n_bursts = 0", "link_mode = free-space"])
def test_parse_config_errors(text):
    with pytest.raises(ValueError):
        parse_config(text)


def test_impairments_switch():
    assert not parse_config("impairments = off").impairments.enable_dac
    cfg = parse_config("impairments = off\nimp.enable_adc = true")
    assert cfg.impairments.enable_adc and not cfg.impairments.enable_phase_noise
    assert parse_config("impairments = on").impairments == parse_config("").impairments


def test_seed_override():
    assert parse_config("seed = 3", seed=11).rng_seed == 11
    assert parse_config("seed = 3").rng_seed == 3


def test_config_hash_tracks_resolved_parameters():
    base = parse_config(FAST)
    assert harness.config_hash(base) == harness.config_hash(parse_config("# reordered\n" + FAST[::-1][::-1]))
    assert harness.config_hash(base) == harness.config_hash(parse_config(FAST.replace("= -4, 0", "= -4.0, 0.0")))
    changed = [
        FAST.replace("seed = 7", "seed = 8"),
        FAST.replace("= 60", "= 59.5"),
        FAST + "link.nf_db = 5.5\n",
        FAST + "synth.band_factor = 1.3\n",
    ]
    hashes = {harness.config_hash(parse_config(t)) for t in changed}
    assert len(hashes) == len(changed) and harness.config_hash(base) not in hashes


def test_points_share_index_across_systems():
    cfg = parse_config("system = nfdm, ofdm\nsweep.powers_dbm = -2, 0\nsweep.presets = 1, 2")
    pts = cfg.points()
    assert len(pts) == 8
    assert [p[0] for p in pts] == [0, 0, 1, 1, 2, 2, 3, 3]
    assert pts[4][2].n_subcarriers == 132


# -- execution ------------------------------------------------------------------


@pytest.fixture(scope="module")
def fast_results():
    cfg = parse_config(FAST)
    return cfg, harness.run_experiment(cfg)


def test_awgn_high_snr_is_error_free(fast_results):
    _, results = fast_results
    assert len(results) == 2
    for r in results:
        assert not r.failed and r.ber == 0.0 and r.errors == 0
        assert r.gmi_bits == pytest.approx(5.0, abs=1e-3)
        assert r.bits_counted == 2 * 4 * 60 * 5 - 60 * 5  # one training burst
        assert r.evm_db < -50


def test_nfdm_awgn_high_snr():
    cfg = parse_config(FAST.replace("system = ofdm", "system = nfdm").replace("-4, 0", "-2"))
    (r,) = harness.run_experiment(cfg)
    assert not r.failed and r.ber == 0.0
    assert r.gmi_bits == pytest.approx(5.0, abs=1e-3)
    assert r.achieved_power_dbm == pytest.approx(-2.0, abs=0.05)


def test_run_is_deterministic_and_thread_independent(fast_results, tmp_path):
    cfg, first = fast_results
    again = harness.run_experiment(cfg, threads=2)
    p1 = harness.emit_results(first, tmp_path / "a", cfg, fmt=("csv",))[0]
    p2 = harness.emit_results(again, tmp_path / "b", cfg, fmt=("csv",))[0]
    assert p1.read_bytes() == p2.read_bytes()
    for a, b in zip(first, again):
        np.testing.assert_array_equal(a.per_subcarrier_evm, b.per_subcarrier_evm)


def test_seed_changes_data():
    a = harness.run_experiment(parse_config(FAST.replace("-4, 0", "-4") + "awgn.snr_db = 15\n"))
    b = harness.run_experiment(parse_config(FAST.replace("-4, 0", "-4") + "awgn.snr_db = 15\n", seed=99))
    assert a[0].evm_db != b[0].evm_db


def test_failure_isolation(tmp_path):
    # +12 dBm lies outside the calibration range, the other point must still run
    cfg = parse_config(FAST.replace("-4, 0", "12, 0"))
    bad, good = harness.run_experiment(cfg)
    assert bad.failed and "PowerRangeError" in bad.error and math.isnan(bad.q_factor_db)
    assert not good.failed and good.ber == 0.0
    rows = harness.read_results_csv(harness.emit_results([bad, good], tmp_path, cfg, fmt=("csv",))[0])
    assert rows[0]["failed"] == "1" and rows[1]["failed"] == "0"


def test_isolated_burst_mode_runs():
    cfg = parse_config(FAST.replace("-4, 0", "-4") + "isolated_bursts = true\n")
    (r,) = harness.run_experiment(cfg)
    assert not r.failed and r.ber == 0.0


# -- output -------------------------------------------------------------------


def test_empty_results_header_only(tmp_path):
    (path,) = harness.emit_results([], tmp_path, fmt=("csv",))
    assert path.read_text() == ",".join(CSV_FIELDS) + "\n"
    assert CSV_FIELDS[:8] == ["system", "power_dbm", "ber", "q_db", "gmi", "evm_db", "seed", "config_hash"]


def test_csv_round_trip_twelve_digits(tmp_path):
    rng = np.random.default_rng(0)
    results = [RunResult(float(p), float(b), float(q), float(g), float(e), np.zeros(2), 300000, 64,
                         system="nfdm", errors=int(b * 300000))
               for p, b, q, g, e in rng.uniform([-8, 1e-5, 5, 3, -20], [2, 1e-2, 12, 5, -10], (5, 5))]
    cfg = ExperimentConfig()
    rows = harness.read_results_csv(harness.emit_results(results, tmp_path, cfg, fmt=("csv",))[0])
    for r, row in zip(results, rows):
        for key, attr in (("power_dbm", "launch_power_dbm"), ("ber", "ber"), ("q_db", "q_factor_db"),
                          ("gmi", "gmi_bits"), ("evm_db", "evm_db")):
            assert float(row[key]) == pytest.approx(getattr(r, attr), rel=1e-12)
        assert row["seed"] == str(cfg.rng_seed) and row["config_hash"] == harness.config_hash(cfg)


def test_ber_upper_bound_for_error_free_points(fast_results, tmp_path):
    cfg, results = fast_results
    rows = harness.read_results_csv(harness.emit_results(results, tmp_path, cfg, fmt=("csv",))[0])
    assert float(rows[0]["ber_upper"]) == pytest.approx(3.0 / results[0].bits_counted)


def test_plot_data_files(fast_results, tmp_path):
    cfg, results = fast_results
    paths = harness.emit_results(results, tmp_path, cfg, fmt=("plot-data",))
    names = sorted(p.name for p in paths)
    assert names == ["results_ofdm_ber.dat", "results_ofdm_gmi.dat", "results_ofdm_q_db.dat"]
    data = np.loadtxt(tmp_path / "results_ofdm_gmi.dat")
    np.testing.assert_allclose(data[:, 0], [-4.0, 0.0])


def test_optimum():
    def r(p, q, failed=False):
        return RunResult(p, 0.01, q, 4.0, -15.0, np.zeros(0), 1, 64, failed=failed, system="ofdm")

    rs = [r(-4, 5.0), r(-2, 6.0), r(0, 5.5), r(2, 9.0, failed=True)]
    assert harness.optimum(rs, "ofdm") == (-2, 6.0, True)
    assert harness.optimum(rs[:2], "ofdm")[2] is False
    assert harness.optimum(rs, "nfdm") == (None, None, False)


def test_config_validation():
    with pytest.raises(ValueError):
        ExperimentConfig(n_bursts=0)
    with pytest.raises(ValueError):
        ExperimentConfig(powers_dbm=())
    with pytest.raises(ValueError):
        dataclasses.replace(ExperimentConfig(), systems=())


def test_nfdm_evm_degrades_above_optimum():
    cfg = parse_config("""
        system = nfdm
        impairments = off
        sweep.powers_dbm = -1, 0.5, 2
        n_blocks = 1
        synth.max_iterations = 2
    """)
    evm = [r.evm_db for r in harness.run_experiment(cfg)]
    assert np.all(np.diff(evm) > 0), evm
