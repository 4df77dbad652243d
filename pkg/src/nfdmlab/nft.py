"""Forward nonlinear Fourier transform (Zakharov-Shabat scattering).

Convention: for a normalized signal ``q(t)`` the eigenproblem is

    dv/dt = [[-i xi, conj(q)], [-q, i xi]] v,    v ~ (exp(-i xi t), 0) as t -> -inf,

and ``v ~ (a exp(-i xi t), b exp(i xi t))`` as ``t -> +inf``. The continuous
spectrum is ``qhat = b/a``; in the linear limit ``qhat -> -int q exp(-2 i xi t) dt``.

Sample ``n`` is treated as constant on the cell ``[t_n - h/2, t_n + h/2]``.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from typing import Literal

import numba
import numpy as np

from .core import NonlinearSpectrum, TimeSignal

Scheme = Literal["transfer-matrix-exponential", "ablowitz-ladik"]
SCHEMES = ("transfer-matrix-exponential", "ablowitz-ladik")


class NearSingularError(ArithmeticError):
    """``|a(xi)|`` collapsed; the signal likely carries discrete eigenvalues."""


class SolitonWarning(UserWarning):
    pass


@dataclass(frozen=True)
class ScatteringConfig:
    xi_grid: np.ndarray
    scheme: Scheme = "transfer-matrix-exponential"
    samples_per_step: int = 1

    def __post_init__(self):
        xi = np.asarray(self.xi_grid, dtype=float)
        if xi.ndim != 1 or xi.size == 0 or not np.all(np.isfinite(xi)):
            raise ValueError("xi_grid must be a finite non-empty 1-D array")
        if xi.size > 1 and not np.all(np.diff(xi) > 0):
            raise ValueError("xi_grid must be strictly increasing")
        if self.scheme not in SCHEMES:
            raise ValueError(f"unknown scheme {self.scheme!r}")
        if self.samples_per_step < 1:
            raise ValueError("samples_per_step must be >= 1")
        object.__setattr__(self, "xi_grid", xi)


@numba.njit(cache=True, nogil=True)
def _scatter_exp(q, h, xi, t_left):
    nxi = xi.size
    a = np.empty(nxi, np.complex128)
    b = np.empty(nxi, np.complex128)
    t_right = t_left + q.size * h
    for j in range(nxi):
        x = xi[j]
        v1 = np.exp(-1j * x * t_left)
        v2 = 0j
        for n in range(q.size):
            p = np.conj(q[n])
            d2 = x * x + p.real * p.real + p.imag * p.imag
            d = np.sqrt(d2)
            c = np.cos(d * h)
            s = np.sin(d * h) / d if d > 0 else h
            m11 = c - 1j * x * s
            m22 = c + 1j * x * s
            m12 = p * s
            m21 = -np.conj(p) * s
            v1, v2 = m11 * v1 + m12 * v2, m21 * v1 + m22 * v2
        a[j] = v1 * np.exp(1j * x * t_right)
        b[j] = v2 * np.exp(-1j * x * t_right)
    return a, b


@numba.njit(cache=True, nogil=True)
def _scatter_split(q, h, xi, t_left):
    # Strang split: free half step, exact potential step, free half step.
    nxi = xi.size
    a = np.empty(nxi, np.complex128)
    b = np.empty(nxi, np.complex128)
    t_right = t_left + q.size * h
    for j in range(nxi):
        x = xi[j]
        zh = np.exp(-0.5j * x * h)
        z = zh * zh
        v1 = np.exp(-1j * x * t_left) * zh
        v2 = 0j
        for n in range(q.size):
            p = np.conj(q[n])
            r = np.abs(p)
            c = np.cos(r * h)
            u = p * (np.sin(r * h) / r) if r > 0 else 0j
            w1 = c * v1 + u * v2
            w2 = -np.conj(u) * v1 + c * v2
            v1 = w1 * z
            v2 = w2 / z
        v1 = v1 / zh
        v2 = v2 * zh
        a[j] = v1 * np.exp(1j * x * t_right)
        b[j] = v2 * np.exp(-1j * x * t_right)
    return a, b


def _coarsen(samples: np.ndarray, k: int) -> np.ndarray:
    if k == 1:
        return samples
    n = samples.size - samples.size % k
    if n != samples.size:
        raise ValueError("signal length must be a multiple of samples_per_step")
    return samples.reshape(-1, k).mean(axis=1)


def scattering_data(signal: TimeSignal, cfg: ScatteringConfig):
    """Return ``(a, b)`` on ``cfg.xi_grid``."""
    if signal.units != "normalized":
        raise ValueError("forward NFT requires a normalized signal")
    q = _coarsen(signal.samples, cfg.samples_per_step)
    h = signal.dt * cfg.samples_per_step
    t_left = signal.t0_offset - signal.dt / 2
    kernel = _scatter_exp if cfg.scheme == "transfer-matrix-exponential" else _scatter_split
    return kernel(q, h, cfg.xi_grid, t_left)


def forward_nft(signal: TimeSignal, cfg: ScatteringConfig, singular_tol: float = 1e-12) -> NonlinearSpectrum:
    """Continuous nonlinear spectrum of a normalized burst."""
    a, b = scattering_data(signal, cfg)
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise FloatingPointError("non-finite scattering data")
    bad = np.abs(a) < singular_tol
    if np.any(bad):
        raise NearSingularError(
            f"|a(xi)| < {singular_tol:g} at xi = {cfg.xi_grid[bad][0]:.6g}"
        )
    return NonlinearSpectrum(cfg.xi_grid, b / a, a, b)


def nft_energy(spectrum: NonlinearSpectrum) -> float:
    """``(1/pi) int log(1 + |qhat|^2) d xi`` by the trapezoidal rule."""
    xi = spectrum.xi_grid
    if xi.size < 2:
        return 0.0
    return float(np.trapezoid(np.log1p(np.abs(spectrum.qc_values) ** 2), xi) / np.pi)


def validate_solitonless(signal: TimeSignal, cfg: ScatteringConfig, rel_gap: float = 0.02) -> str:
    """``"ok"`` unless the time-domain energy exceeds the continuous-spectrum energy by ``rel_gap``."""
    e_time = signal.energy()
    if e_time == 0:
        return "ok"
    a, b = scattering_data(signal, cfg)
    with np.errstate(divide="ignore"):
        # log(1 + |b/a|^2) = -log|a|^2 whenever |a|^2 + |b|^2 = 1
        dens = -np.log(np.abs(a) ** 2)
    e_spec = float(np.trapezoid(dens, cfg.xi_grid) / np.pi)
    if e_time - e_spec > rel_gap * e_time:
        warnings.warn(
            f"energy gap {e_time - e_spec:.4g} of {e_time:.4g}: discrete eigenvalues present",
            SolitonWarning,
            stacklevel=2,
        )
        return "warning"
    return "ok"


def linear_fourier(signal: TimeSignal, xi) -> np.ndarray:
    """``-int q(t) exp(-2 i xi t) dt`` of the piecewise-constant signal (exact per cell)."""
    xi = np.asarray(xi, dtype=float)
    h = signal.dt
    cell = h * np.sinc(xi * h / np.pi)
    return -cell * (np.exp(-2j * np.outer(xi, signal.times)) @ signal.samples)


def dump_csv(spectrum: NonlinearSpectrum, path) -> None:
    """Write ``xi, a, b, qhat`` columns (real/imag split)."""
    a = spectrum.a_values if spectrum.a_values is not None else np.full(len(spectrum), np.nan)
    b = spectrum.b_values if spectrum.b_values is not None else np.full(len(spectrum), np.nan)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["xi", "a_re", "a_im", "b_re", "b_im", "q_re", "q_im"])
        for x, av, bv, qv in zip(spectrum.xi_grid, a, b, spectrum.qc_values):
            w.writerow([repr(float(v)) for v in (x, av.real, av.imag, bv.real, bv.imag, qv.real, qv.imag)])
