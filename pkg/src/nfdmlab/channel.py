"""Fiber link simulation: split-step propagation, EDFAs and transceiver impairments.

Propagation follows the physical model documented in :mod:`nfdmlab.core`::

    dA/dz = -(alpha/2) A - i (beta2/2) d2A/dt2 + i gamma |A|^2 A

With numpy's FFT convention the linear operator is
``exp((-alpha/2 + i beta2 omega^2 / 2) dz)`` and self-phase modulation advances
the phase by ``gamma |A|^2 dz``.
"""

from __future__ import annotations

import dataclasses
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import fft as sfft
from scipy import signal as ssig

from .core import PLANCK, LinkConfig, TimeSignal


class AliasingWarning(UserWarning):
    """Significant energy reached the edge of the simulation bandwidth."""


@dataclass(frozen=True)
class StepControl:
    max_nl_phase_rad: float = 1e-3
    max_step_m: float = 100.0

    def __post_init__(self):
        if not (self.max_nl_phase_rad > 0 and self.max_step_m > 0):
            raise ValueError("step limits must be positive")


@dataclass(frozen=True)
class ImpairmentConfig:
    """Transceiver impairments. Each stage has its own enable flag."""

    dac_enob: float = 5.5
    dac_bandwidth: float = 16e9
    dac_rate: float = 88e9
    adc_rate: float = 80e9
    laser_linewidth: float = 1e3
    frequency_offset: float = 0.0
    dac_full_scale_sigma: float = 4.0
    enable_dac: bool = True
    enable_quantization: bool = True
    enable_bandwidth: bool = True
    enable_phase_noise: bool = True
    enable_frequency_offset: bool = True
    enable_adc: bool = True

    def __post_init__(self):
        if min(self.dac_rate, self.adc_rate, self.dac_bandwidth, self.dac_enob) <= 0:
            raise ValueError("rates, bandwidth and ENOB must be positive")
        if self.laser_linewidth < 0:
            raise ValueError("laser_linewidth must be >= 0")
        if self.dac_full_scale_sigma <= 0:
            raise ValueError("dac_full_scale_sigma must be positive")

    @classmethod
    def disabled(cls) -> "ImpairmentConfig":
        flags = {f.name: False for f in dataclasses.fields(cls) if f.name.startswith("enable_")}
        return cls(**flags)


def _seed_sequence(seed) -> np.random.SeedSequence:
    return seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)


def _rng(seed) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(_seed_sequence(seed)))


def _omega(n: int, sample_rate: float) -> np.ndarray:
    return 2 * np.pi * sfft.fftfreq(n, 1.0 / sample_rate)


def aliasing_fraction(samples: np.ndarray, edge: float = 0.05) -> float:
    """Share of spectral energy in the outer ``edge`` fraction of the FFT bins."""
    spec = np.abs(sfft.fft(samples)) ** 2
    total = spec.sum()
    if total == 0:
        return 0.0
    f = np.abs(sfft.fftfreq(samples.size))
    return float(spec[f >= 0.5 * (1 - edge)].sum() / total)


def ssfm_propagate(
    signal: TimeSignal,
    link: LinkConfig,
    step_ctrl: StepControl = StepControl(),
    length: float | None = None,
) -> TimeSignal:
    """Symmetric split-step propagation over ``length`` (default one span).

    The step is the largest that keeps the peak nonlinear phase below
    ``max_nl_phase_rad`` and the step below ``max_step_m``.
    """
    if signal.units != "physical":
        raise ValueError("ssfm_propagate expects a physical signal")
    length = link.span_length if length is None else length
    a = signal.samples.copy()
    w2 = _omega(a.size, signal.sample_rate) ** 2
    lin_rate = -link.alpha / 2 + 0.5j * link.beta2 * w2
    z = 0.0
    cached_dz, half = None, None
    while z < length:
        peak = float(np.max(np.abs(a) ** 2))
        dz = step_ctrl.max_step_m
        if link.gamma * peak > 0:
            dz = min(dz, step_ctrl.max_nl_phase_rad / (link.gamma * peak))
        dz = min(dz, length - z)
        if dz != cached_dz:
            half = np.exp(lin_rate * (dz / 2))
            cached_dz = dz
        a = sfft.ifft(half * sfft.fft(a))
        if link.gamma:
            a *= np.exp(1j * link.gamma * dz * (a.real**2 + a.imag**2))
        a = sfft.ifft(half * sfft.fft(a))
        z += dz
        if length - z < 1e-9 * length:
            break
    if not np.all(np.isfinite(a)):
        raise FloatingPointError("split-step propagation produced non-finite samples")
    frac = aliasing_fraction(a)
    if frac >= 0.01:
        warnings.warn(f"{100 * frac:.2f}% of the energy sits at the band edge", AliasingWarning, stacklevel=2)
    return signal.replace(samples=a)


def ase_variance(gain_db: float, noise_figure_db: float, sample_rate: float, frequency: float) -> float:
    """Per-sample ASE variance: PSD ``(G-1) h nu NF / 2`` times the simulation bandwidth."""
    g = 10 ** (gain_db / 10)
    nf = 10 ** (noise_figure_db / 10) if math.isfinite(noise_figure_db) else 0.0
    return (g - 1) * PLANCK * frequency * nf / 2 * sample_rate


def edfa(
    signal: TimeSignal,
    gain_db: float,
    noise_figure_db: float,
    rng_seed,
    frequency: float = LinkConfig().carrier_frequency,
) -> TimeSignal:
    """Amplify and add circular white Gaussian ASE (single polarization)."""
    if gain_db < 0:
        raise ValueError("gain_db must be >= 0")
    out = signal.samples * 10 ** (gain_db / 20)
    var = ase_variance(gain_db, noise_figure_db, signal.sample_rate, frequency)
    if var > 0:
        rng = _rng(rng_seed)
        out = out + math.sqrt(var / 2) * (rng.standard_normal(out.size) + 1j * rng.standard_normal(out.size))
    return signal.replace(samples=out)


def run_link(
    signal: TimeSignal,
    link: LinkConfig,
    rng_seed,
    step_ctrl: StepControl = StepControl(),
    noise: bool = True,
) -> TimeSignal:
    """``n_spans`` x (lossy span, EDFA restoring the span loss)."""
    seeds = _seed_sequence(rng_seed).spawn(link.n_spans) if link.n_spans else []
    nf = link.noise_figure_db if noise else -math.inf
    out = signal
    for ss in seeds:
        out = ssfm_propagate(out, link, step_ctrl)
        out = edfa(out, link.span_loss_db, nf, ss, link.carrier_frequency)
    return out


def channel_memory(bandwidth_hz: float, length_m: float, beta2: float) -> float:
    """Dispersion-induced burst spreading ``2 pi |beta2| B L``."""
    if min(bandwidth_hz, length_m) < 0:
        raise ValueError("bandwidth and length must be non-negative")
    return 2 * math.pi * abs(beta2) * bandwidth_hz * length_m


def awgn(signal: TimeSignal, snr_db: float, rng_seed, reference_power: float | None = None) -> TimeSignal:
    """Add circular Gaussian noise at ``snr_db`` relative to ``reference_power`` (default: signal power)."""
    p = signal.power() if reference_power is None else reference_power
    var = p / 10 ** (snr_db / 10)
    rng = _rng(rng_seed)
    n = math.sqrt(var / 2) * (rng.standard_normal(len(signal)) + 1j * rng.standard_normal(len(signal)))
    return signal.replace(samples=signal.samples + n)


# -- transceiver impairments ---------------------------------------------


def resample(x: np.ndarray, n_out: int) -> np.ndarray:
    """Periodic FFT resampling to ``n_out`` samples (band-limited interpolation)."""
    if n_out == x.size:
        return x.copy()
    return ssig.resample(x, n_out)


def quantize(x: np.ndarray, enob: float, full_scale: float) -> np.ndarray:
    """Uniform mid-rise quantizer on I and Q over ``[-full_scale, full_scale]``."""
    step = 2 * full_scale / 2**enob
    top = full_scale - step / 2

    def q(v):
        return np.clip(step * (np.floor(v / step) + 0.5), -top, top)

    return q(x.real) + 1j * q(x.imag)


def bessel_lowpass(x: np.ndarray, sample_rate: float, bandwidth: float, order: int = 5) -> np.ndarray:
    """Analog Bessel response (-3 dB at ``bandwidth``) applied in the frequency domain, group delay removed."""
    b, a = ssig.bessel(order, 2 * np.pi * bandwidth, analog=True, norm="mag")
    w = _omega(x.size, sample_rate)
    h = ssig.freqs(b, a, worN=w)[1]
    # zero-frequency group delay of an all-pole filter: a1/a0 with a in descending powers
    tau = a[-2] / a[-1]
    return sfft.ifft(sfft.fft(x) * h * np.exp(1j * w * tau))


def wiener_phase(n: int, linewidth: float, dt: float, rng: np.random.Generator) -> np.ndarray:
    """Phase random walk with increment variance ``2 pi linewidth dt``."""
    steps = rng.standard_normal(n) * math.sqrt(2 * math.pi * linewidth * dt)
    steps[0] = 0.0
    return np.cumsum(steps)


def apply_tx_impairments(signal: TimeSignal, imp: ImpairmentConfig, rng_seed) -> TimeSignal:
    """DAC resampling, quantization, Bessel filtering, laser phase noise and frequency offset.

    Processing runs at ``dac_rate``; the result is returned at the input rate.
    """
    x = signal.samples
    rng = _rng(rng_seed)
    rate = signal.sample_rate
    n_in = x.size
    if imp.enable_dac:
        n_dac = int(round(n_in * imp.dac_rate / rate))
        x = resample(x, n_dac)
        rate = n_dac / signal.duration
    if imp.enable_quantization:
        sigma = math.sqrt(np.mean(x.real**2 + x.imag**2) / 2)
        if sigma > 0:
            x = quantize(x, imp.dac_enob, imp.dac_full_scale_sigma * sigma)
    if imp.enable_bandwidth:
        x = bessel_lowpass(x, rate, imp.dac_bandwidth)
    if imp.enable_dac:
        x = resample(x, n_in)
    dt = signal.dt
    if imp.enable_phase_noise and imp.laser_linewidth > 0:
        x = x * np.exp(1j * wiener_phase(n_in, imp.laser_linewidth, dt, rng))
    if imp.enable_frequency_offset and imp.frequency_offset:
        x = x * np.exp(2j * np.pi * imp.frequency_offset * dt * np.arange(n_in))
    return signal.replace(samples=np.asarray(x, dtype=np.complex128))


def apply_rx_impairments(signal: TimeSignal, imp: ImpairmentConfig, rng_seed) -> TimeSignal:
    """Local-oscillator phase noise and ADC band limitation (returned at the input rate)."""
    x = signal.samples
    rng = _rng(rng_seed)
    if imp.enable_phase_noise and imp.laser_linewidth > 0:
        x = x * np.exp(1j * wiener_phase(x.size, imp.laser_linewidth, signal.dt, rng))
    if imp.enable_adc and imp.adc_rate < signal.sample_rate:
        n_adc = int(round(x.size * imp.adc_rate / signal.sample_rate))
        x = resample(resample(x, n_adc), x.size)
    return signal.replace(samples=np.asarray(x, dtype=np.complex128))
