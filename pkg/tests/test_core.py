import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nfdmlab import metrics, qam
from nfdmlab.core import (
    FrameConfig,
    LinkConfig,
    NonlinearSpectrum,
    TimeSignal,
    UnsupportedRegimeError,
    denormalize,
    normalize,
    z_scale,
)

# Frozen oracle values, reproduced by tests/oracles/metrics_oracles.py
Q_AT_1E3_DB = 9.799822569043980
GMI_ORACLE = {20.0: 4.988956614699613, 12.0: 3.741926448196311}


# -- containers ---------------------------------------------------------------


def test_time_signal_validation():
    with pytest.raises(ValueError):
        TimeSignal(np.array([]), 1.0)
    with pytest.raises(ValueError):
        TimeSignal(np.ones(3), 0.0)
    with pytest.raises(ValueError):
        TimeSignal(np.ones(3), 1.0, "bogus")
    s = TimeSignal(np.array([1, 1j, -1]), 2.0, t0_offset=1.0)
    assert s.power() == pytest.approx(1.0)
    assert s.energy() == pytest.approx(1.5)
    np.testing.assert_allclose(s.times, [1.0, 1.5, 2.0])


def test_nonlinear_spectrum_validation():
    with pytest.raises(ValueError):
        NonlinearSpectrum(np.array([0.0, 0.0]), np.zeros(2))
    with pytest.raises(ValueError):
        NonlinearSpectrum(np.array([0.0, 1.0]), np.zeros(3))
    with pytest.raises(ValueError):
        NonlinearSpectrum(np.array([0.0, 1.0]), np.zeros(2), a_values=np.ones(2))


def test_frame_invariants():
    fr = FrameConfig(64, 2e-9, 4e-9)
    assert fr.t1 == pytest.approx(6e-9)
    assert set(fr.pilot_indices).isdisjoint(fr.data_indices)
    assert set(fr.pilot_indices) | set(fr.data_indices) == set(fr.subcarrier_indices)
    assert len(fr.subcarrier_indices) == 64
    with pytest.raises(ValueError):
        FrameConfig(0, 1e-9, 0)


def test_link_invariants():
    link = LinkConfig()
    assert link.total_length == pytest.approx(12 * 81.3e3)
    assert link.span_loss_db == pytest.approx(16.26)
    assert link.path_averaged().alpha == 0
    assert 0 < link.gamma_eff() < link.gamma
    with pytest.raises(ValueError):
        LinkConfig(alpha_db_per_km=-1)
    with pytest.raises(ValueError):
        LinkConfig(n_spans=-1)
    assert LinkConfig.for_distance(976e3).n_spans == 12


# -- normalization ---------------------------------------------------------------


def test_z_scale_example():
    assert z_scale(1e-12, -21.7e-27) == pytest.approx(2 / 21.7 * 1e3, rel=1e-12)


def test_normalize_round_trip_and_zero():
    rng = np.random.default_rng(0)
    link = LinkConfig()
    s = TimeSignal(rng.standard_normal(256) + 1j * rng.standard_normal(256), 64e9, t0_offset=-1e-9)
    back = denormalize(normalize(s, link, 62.5e-12), link, 62.5e-12)
    np.testing.assert_allclose(back.samples, s.samples, rtol=1e-12)
    assert back.sample_rate == pytest.approx(s.sample_rate, rel=1e-12)
    assert back.t0_offset == pytest.approx(s.t0_offset, rel=1e-12)
    z = normalize(TimeSignal(np.zeros(8), 1e9), link, 1e-12)
    assert z.units == "normalized" and not np.any(z.samples)


def test_normalize_errors():
    s = TimeSignal(np.ones(4), 1e9)
    with pytest.raises(UnsupportedRegimeError):
        normalize(s, LinkConfig(beta2=1e-27), 1e-12)
    with pytest.raises(ValueError):
        normalize(s, LinkConfig(), 0.0)
    with pytest.raises(ValueError):
        normalize(normalize(s, LinkConfig(), 1e-12), LinkConfig(), 1e-12)


# -- QAM -----------------------------------------------------------------------


def test_constellation_geometry():
    c = qam.CONSTELLATION
    assert np.mean(np.abs(c) ** 2) == pytest.approx(1.0, abs=1e-15)
    assert len(set(np.round(c * np.sqrt(20)).tolist())) == 32
    raw = {(round(z.real * math.sqrt(20)), round(z.imag * math.sqrt(20))) for z in c}
    corners = {(x, y) for x in (-5, 5) for y in (-5, 5)}
    square = {(x, y) for x in (-5, -3, -1, 1, 3, 5) for y in (-5, -3, -1, 1, 3, 5)}
    assert raw == square - corners


def test_raw_3_1_energy():
    label = [i for i, (x, y) in enumerate(qam._RAW_TABLE) if (x, y) == (3, 1)][0]
    sym = qam.qam32_map(qam.LABEL_BITS[label])
    assert abs(sym) ** 2 == pytest.approx(0.5, abs=1e-15)


def test_map_bijective_and_errors():
    pts = [qam.qam32_map(b) for b in qam.LABEL_BITS]
    assert len({complex(p) for p in pts}) == 32
    with pytest.raises(ValueError):
        qam.qam32_map([0, 1, 0, 1])
    with pytest.raises(ValueError):
        qam.qam32_map([0, 1, 2, 1, 0])


def test_labeling_is_quasi_gray():
    c = qam.CONSTELLATION * np.sqrt(20)
    flips = 0
    pairs = 0
    for i in range(32):
        for j in range(i + 1, 32):
            if abs(abs(c[i] - c[j]) - 2) < 1e-9:
                pairs += 1
                flips += int(np.sum(qam.LABEL_BITS[i] != qam.LABEL_BITS[j]))
    assert pairs == 52 and flips == 56


def test_demap_exact_points():
    for label in range(32):
        bits, llr = qam.qam32_demap(qam.CONSTELLATION[label], 0.02)
        np.testing.assert_array_equal(bits, qam.LABEL_BITS[label])
        assert np.all(np.sign(llr) == 1 - 2 * qam.LABEL_BITS[label].astype(int))


@pytest.mark.parametrize("i,j", [(0, 2), (16, 18), (16, 20), (24, 28), (26, 30)])
def test_llr_zero_on_bisector(i, j):
    # neighbours differing in one bit whose bisector is a symmetry axis of the labeling
    k = int(np.flatnonzero(qam.LABEL_BITS[i] != qam.LABEL_BITS[j])[0])
    mid = (qam.CONSTELLATION[i] + qam.CONSTELLATION[j]) / 2
    assert abs(qam.qam32_llr(mid, 0.05)[k]) < 1e-9


def test_demap_errors():
    with pytest.raises(ValueError):
        qam.qam32_demap(complex(np.nan, 0), 0.1)
    with pytest.raises(ValueError):
        qam.qam32_llr(0.1 + 0j, 0.0)


def test_map_demap_round_trip_1e6():
    rng = np.random.default_rng(1)
    bits = rng.integers(0, 2, 10**6 - 10**6 % 5, dtype=np.uint8)
    sym = qam.qam32_map(bits)
    rx = qam.labels_to_bits(qam.hard_decision(sym))
    assert metrics.ber_count(bits, rx) == (0.0, 0)


@given(st.lists(st.integers(0, 31), min_size=1, max_size=40))
def test_label_round_trip_property(labels):
    bits = qam.labels_to_bits(labels)
    np.testing.assert_array_equal(qam.hard_decision(qam.qam32_map(bits) if len(labels) > 1
                                                    else np.array([qam.qam32_map(bits)])), labels)


# -- metrics --------------------------------------------------------------------


def test_ber_count():
    a = np.zeros(10**6, np.uint8)
    assert metrics.ber_count(a, a) == (0.0, 0)
    assert metrics.ber_count(a[:10], 1 - a[:10]) == (1.0, 10)
    b = a.copy()
    b[::1000] = 1
    assert metrics.ber_count(a, b) == (1e-3, 1000)
    with pytest.raises(ValueError):
        metrics.ber_count(a[:3], a[:4])


def test_q_from_ber_oracle():
    assert metrics.q_from_ber(1e-3) == pytest.approx(Q_AT_1E3_DB, abs=1e-9)
    assert metrics.q_from_ber(0.5 - 1e-12) < -100
    for bad in (0.0, 0.5, -0.1, 0.7):
        with pytest.raises(ValueError):
            metrics.q_from_ber(bad)


@given(st.floats(1e-12, 0.4999), st.floats(1e-12, 0.4999))
def test_q_monotonic(b1, b2):
    if b1 < b2:
        assert metrics.q_from_ber(b1) > metrics.q_from_ber(b2)


def test_gmi_limits():
    rng = np.random.default_rng(2)
    bits = rng.integers(0, 2, 5000)
    assert metrics.gmi_estimate(np.where(bits == 0, 1e3, -1e3), bits) == pytest.approx(5.0, abs=1e-12)
    assert metrics.gmi_estimate(np.zeros(5000), bits) == pytest.approx(0.0, abs=1e-12)
    with pytest.raises(ValueError):
        metrics.gmi_estimate(np.zeros(4), bits[:4])


def _awgn_gmi(snr_db, n, seed):
    rng = np.random.default_rng(seed)
    labels = rng.integers(0, 32, n)
    bits = qam.labels_to_bits(labels)
    nv = 10 ** (-snr_db / 10)
    y = qam.CONSTELLATION[labels] + np.sqrt(nv / 2) * (rng.standard_normal(n) + 1j * rng.standard_normal(n))
    return metrics.gmi_estimate(qam.qam32_llr(y, nv), bits)


@pytest.mark.parametrize("snr_db", [20.0, 12.0])
def test_gmi_matches_monte_carlo_oracle(snr_db):
    assert _awgn_gmi(snr_db, 200_000, 5) == pytest.approx(GMI_ORACLE[snr_db], abs=0.05)


def test_noiseless_gmi_is_five():
    labels = np.arange(32).repeat(20)
    llr = qam.qam32_llr(qam.CONSTELLATION[labels], 1e-4)
    assert metrics.gmi_estimate(llr, qam.labels_to_bits(labels)) == pytest.approx(5.0, abs=1e-3)


@settings(max_examples=30)
@given(st.floats(-30, 30), st.integers(0, 2**32 - 1))
def test_gmi_bounds_property(snr_db, seed):
    g = _awgn_gmi(snr_db, 200, seed)
    assert 0.0 <= g <= 5.0


def test_evm():
    x = np.array([1, -1, 1j, -1j])
    assert metrics.evm_db(x * 1.1, x) == pytest.approx(-20.0)
