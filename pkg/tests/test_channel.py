import dataclasses
import math

import numpy as np
import pytest

from nfdmlab.channel import (
    AliasingWarning,
    ImpairmentConfig,
    StepControl,
    apply_tx_impairments,
    ase_variance,
    channel_memory,
    edfa,
    quantize,
    run_link,
    ssfm_propagate,
    wiener_phase,
)
from nfdmlab.core import LinkConfig, TimeSignal


def gaussian(n=4096, rate=200e9, width=20e-12, power=1e-3):
    t = (np.arange(n) - n / 2) / rate
    return TimeSignal(np.sqrt(power) * np.exp(-0.5 * (t / width) ** 2) * (1 + 0j), rate), t


def test_linear_propagator_matches_analytic_gaussian():
    # chirped-Gaussian closed form, independent of any FFT
    sig, t = gaussian(n=8192, rate=400e9, width=10e-12)
    link = LinkConfig(gamma=0.0, alpha_db_per_km=0.0)
    z = 50e3
    out = ssfm_propagate(sig, link, StepControl(max_step_m=1e9), length=z)
    t0, b2 = 10e-12, link.beta2
    # A_z = -i (b2/2) A_tt  ->  width parameter t0^2 - i b2 z
    q = t0**2 - 1j * b2 * z
    ref = np.sqrt(1e-3) * np.sqrt(t0**2 / q) * np.exp(-0.5 * t**2 / q)
    assert np.linalg.norm(out.samples - ref) / np.linalg.norm(ref) < 1e-10


def test_spm_only_phase():
    sig, _ = gaussian(power=20e-3)
    link = LinkConfig(beta2=0.0, alpha_db_per_km=0.0)
    z = 30e3
    out = ssfm_propagate(sig, link, length=z)
    a = sig.samples
    np.testing.assert_allclose(np.abs(out.samples), np.abs(a), atol=1e-8 * np.abs(a).max())
    expected = np.angle(a) + link.gamma * np.abs(a) ** 2 * z
    dphi = np.angle(out.samples * np.exp(-1j * expected))
    big = np.abs(a) > 1e-6 * np.abs(a).max()
    assert np.max(np.abs(dphi[big])) < 1e-8


def test_fundamental_soliton_keeps_shape():
    link = LinkConfig(alpha_db_per_km=0.0)
    t0 = 20e-12
    rate, n = 400e9, 8192
    t = (np.arange(n) - n / 2) / rate
    amp = math.sqrt(abs(link.beta2) / (link.gamma * t0**2))
    a = amp / np.cosh(t / t0)
    period = math.pi / 2 * t0**2 / abs(link.beta2)
    out = ssfm_propagate(TimeSignal(a + 0j, rate), link, length=period)
    corr = abs(np.vdot(a, out.samples)) / (np.linalg.norm(a) * np.linalg.norm(out.samples))
    assert corr >= 1 - 1e-4


def test_step_halving_self_convergence():
    sig, _ = gaussian(power=30e-3, width=30e-12)
    link = LinkConfig()
    out1 = ssfm_propagate(sig, link, StepControl(1e-3), length=20e3)
    out2 = ssfm_propagate(sig, link, StepControl(5e-4), length=20e3)
    assert np.linalg.norm(out1.samples - out2.samples) / np.linalg.norm(out2.samples) < 1e-6


def test_lossless_noiseless_link_conserves_energy():
    sig, _ = gaussian(power=10e-3)
    link = LinkConfig(alpha_db_per_km=0.0, n_spans=2, span_length=20e3)
    out = run_link(sig, link, rng_seed=1, noise=False)
    assert abs(out.energy() / sig.energy() - 1) < 1e-6


def test_zero_spans_is_identity():
    sig, _ = gaussian()
    out = run_link(sig, LinkConfig(n_spans=0), rng_seed=3)
    np.testing.assert_array_equal(out.samples, sig.samples)


def test_twelve_spans_for_976km():
    assert LinkConfig.for_distance(976e3).n_spans == 12
    assert LinkConfig().span_loss_db == pytest.approx(16.26)


def test_edfa_identity_and_noise_psd():
    sig, _ = gaussian()
    same = edfa(sig, 0.0, -math.inf, rng_seed=0)
    np.testing.assert_array_equal(same.samples, sig.samples)

    rate = 100e9
    zero = TimeSignal(np.zeros(10**6, complex), rate)
    out = edfa(zero, 16.26, 5.0, rng_seed=11)
    nu = LinkConfig().carrier_frequency
    g, nf = 10 ** 1.626, 10 ** 0.5
    psd = (g - 1) * 6.62607015e-34 * nu * nf / 2
    assert out.power() == pytest.approx(psd * rate, rel=0.02)
    assert ase_variance(16.26, 5.0, rate, nu) == pytest.approx(psd * rate, rel=1e-12)


def test_edfa_is_deterministic():
    zero = TimeSignal(np.zeros(1000, complex), 50e9)
    a = edfa(zero, 10, 5, rng_seed=5)
    b = edfa(zero, 10, 5, rng_seed=5)
    np.testing.assert_array_equal(a.samples, b.samples)


def test_channel_memory_values():
    assert channel_memory(0.0, 976e3, -21.7e-27) == 0
    tc = channel_memory(32e9, 976e3, -21.7e-27)
    assert tc == pytest.approx(2 * math.pi * 21.7e-27 * 32e9 * 976e3)
    assert 4.0e-9 <= tc <= 4.5e-9
    assert channel_memory(60e9, 976e3, -21.7e-27) == pytest.approx(7.98e-9, rel=2e-3)


def test_aliasing_warning():
    n, rate = 1024, 50e9
    t = np.arange(n) / rate
    tone = np.exp(2j * np.pi * 0.49 * rate * t) * 1e-3
    with pytest.warns(AliasingWarning):
        ssfm_propagate(TimeSignal(tone, rate), LinkConfig(), length=10.0)


def test_impairments_disabled_is_identity():
    sig, _ = gaussian()
    out = apply_tx_impairments(sig, ImpairmentConfig.disabled(), rng_seed=1)
    np.testing.assert_allclose(out.samples, sig.samples, atol=1e-9 * np.abs(sig.samples).max())


def test_dac_resample_round_trip_bandlimited():
    rate, n = 128e9, 1536
    t = np.arange(n) / rate
    x = np.exp(2j * np.pi * 5e9 * t) + 0.5 * np.exp(-2j * np.pi * 12e9 * t)
    imp = dataclasses.replace(ImpairmentConfig.disabled(), enable_dac=True)
    out = apply_tx_impairments(TimeSignal(x, rate), imp, rng_seed=0)
    assert np.max(np.abs(out.samples - x)) < 1e-9


def test_quantizer_sqnr_full_scale_sinusoid():
    n = 2**16
    x = np.exp(2j * np.pi * 0.0123456 * np.arange(n))
    y = quantize(x, 5.5, 1.0)
    sqnr = 10 * np.log10(np.mean(np.abs(x) ** 2) / np.mean(np.abs(y - x) ** 2))
    assert abs(sqnr - (6.02 * 5.5 + 1.76)) <= 1.5


def test_wiener_increment_variance():
    rng = np.random.default_rng(0)
    dt = 1e-6
    ends = np.array([wiener_phase(2, 1e3, dt, rng)[1] for _ in range(10**4)])
    assert np.var(ends) == pytest.approx(2 * math.pi * 1e3 * dt, rel=0.05)


def test_frequency_offset_rotation():
    rate = 80e9
    x = np.ones(800, complex)
    imp = dataclasses.replace(ImpairmentConfig.disabled(), enable_frequency_offset=True, frequency_offset=100e6)
    out = apply_tx_impairments(TimeSignal(x, rate), imp, rng_seed=0)
    slope = np.angle(out.samples[1] / out.samples[0]) * rate / (2 * np.pi)
    assert slope == pytest.approx(100e6)
