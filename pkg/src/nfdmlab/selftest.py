"""Fast oracle checks against closed forms, runnable without the test suite."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import channel, metrics, qam
from .core import LinkConfig, TimeSignal
from .nft import ScatteringConfig, forward_nft, linear_fourier, nft_energy


@dataclass(frozen=True)
class Check:
    name: str
    ok: bool
    detail: str


def _cells(q, dt, t_start):
    return TimeSignal(np.asarray(q, complex), 1 / dt, "normalized", t_start + dt / 2)


def nft_rectangle() -> Check:
    xi = np.linspace(-6, 6, 61)
    amp, length = 0.8 - 0.4j, 2.0
    d = np.sqrt(xi**2 + abs(amp) ** 2)
    a = np.exp(1j * xi * length) * (np.cos(d * length) - 1j * xi / d * np.sin(d * length))
    b = -amp * np.sin(d * length) / d * np.exp(-1j * xi * length)
    got = forward_nft(_cells(np.full(400, amp), length / 400, 0.0), ScatteringConfig(xi)).qc_values
    err = float(np.max(np.abs(got - b / a) / np.abs(b / a)))
    return Check("NFT rectangle closed form", err < 1e-3, f"max rel err {err:.1e}")


def nft_linear_limit() -> Check:
    xi = np.linspace(-6, 6, 61)
    t0, dt = -10.0, 0.02
    tc = t0 + dt / 2 + dt * np.arange(1000)
    shape = (1 + 0.5j * tc) * np.exp(-(tc**2))
    shape /= np.max(np.abs(shape))
    errs = []
    for amp in (0.02, 0.01, 0.005):
        sig = _cells(amp * shape, dt, t0)
        lin = linear_fourier(sig, xi)
        errs.append(np.max(np.abs(forward_nft(sig, ScatteringConfig(xi)).qc_values - lin)) / np.max(np.abs(lin)))
    ratios = np.array(errs[:-1]) / np.array(errs[1:])
    ok = bool(np.allclose(ratios, 4.0, rtol=0.05))
    return Check("NFT linear limit", ok, f"error ratios per amplitude halving {np.round(ratios, 3).tolist()}")


def nft_parseval() -> Check:
    t0, dt = -12.0, 0.01
    tc = t0 + dt / 2 + dt * np.arange(2400)
    sig = _cells(0.5 * np.exp(-(tc**2) / 2) * np.exp(0.3j * tc**2), dt, t0)
    spec = forward_nft(sig, ScatteringConfig(np.linspace(-15, 15, 3001)))
    gap = abs(nft_energy(spec) / sig.energy() - 1)
    return Check("NFT energy balance", gap < 0.01, f"relative gap {gap:.1e}")


def ssfm_linear() -> Check:
    rate, n, w, z = 400e9, 8192, 10e-12, 50e3
    t = (np.arange(n) - n / 2) / rate
    link = LinkConfig(gamma=0.0, alpha_db_per_km=0.0)
    sig = TimeSignal(np.sqrt(1e-3) * np.exp(-0.5 * (t / w) ** 2) + 0j, rate)
    out = channel.ssfm_propagate(sig, link, channel.StepControl(max_step_m=1e9), length=z)
    p = w**2 - 1j * link.beta2 * z
    ref = np.sqrt(1e-3) * np.sqrt(w**2 / p) * np.exp(-0.5 * t**2 / p)
    err = np.linalg.norm(out.samples - ref) / np.linalg.norm(ref)
    return Check("SSFM dispersion closed form", err < 1e-10, f"rel err {err:.1e}")


def ssfm_soliton() -> Check:
    rate, n, ts = 400e9, 8192, 20e-12
    t = (np.arange(n) - n / 2) / rate
    link = LinkConfig(alpha_db_per_km=0.0)
    a = math.sqrt(abs(link.beta2) / (link.gamma * ts**2)) / np.cosh(t / ts)
    out = channel.ssfm_propagate(TimeSignal(a + 0j, rate), link, length=math.pi / 2 * ts**2 / abs(link.beta2))
    corr = abs(np.vdot(a, out.samples)) / (np.linalg.norm(a) * np.linalg.norm(out.samples))
    return Check("SSFM fundamental soliton", corr >= 1 - 1e-4, f"1 - correlation {1 - corr:.1e}")


def q_factor() -> Check:
    q = metrics.q_from_ber(1e-3)
    return Check("Q factor at BER 1e-3", abs(q - 9.799822569043980) < 1e-9, f"{q:.6f} dB")


def noiseless_gmi() -> Check:
    labels = np.arange(32).repeat(20)
    g = metrics.gmi_estimate(qam.qam32_llr(qam.CONSTELLATION[labels], 1e-4), qam.labels_to_bits(labels))
    return Check("noiseless 32-QAM GMI", abs(g - 5) <= 1e-3, f"{g:.4f} bits")


CHECKS = (nft_rectangle, nft_linear_limit, nft_parseval, ssfm_linear, ssfm_soliton, q_factor, noiseless_gmi)


def run_all() -> list[Check]:
    return [c() for c in CHECKS]
