"""Inverse NFT for purely continuous spectra.

Synthesis runs in two stages:

1. Discrete layer peeling. On the lattice ``xi_j = j pi / (M h)`` the
   split-step scattering data are polynomials in ``w = exp(2 i xi h)``. ``a`` is
   rebuilt as the minimum-phase function with ``|a|^2 = 1/(1 + |qhat|^2)``
   (no bound states), ``b = qhat a``, and samples are stripped one by one from
   the right edge: the constant term of ``(b/a) exp(2 i xi t_last)`` fixes the
   last sample, whose layer is then removed exactly.
2. Defect correction against the default (matrix-exponential) forward
   transform until the residual on the input grid drops below ``tolerance``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .core import NonlinearSpectrum, TimeSignal
from .nft import ScatteringConfig, scattering_data


class INFTConvergenceError(ArithmeticError):
    """Refinement stalled above tolerance.

    ``residual`` is the best relative residual reached and ``signal`` the
    corresponding burst (``None`` if synthesis broke down completely).
    """

    def __init__(self, message, residual, signal=None):
        super().__init__(message)
        self.residual = residual
        self.signal = signal


class BoundStateError(ValueError):
    """The synthesized burst is inconsistent with a solitonless spectrum."""


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    dt: float
    n_samples: int

    @property
    def times(self) -> np.ndarray:
        return self.t_start + self.dt * np.arange(self.n_samples)

    @classmethod
    def centered(cls, duration: float, dt: float) -> "TimeGrid":
        n = int(round(duration / dt))
        return cls(-n * dt / 2 + dt / 2, dt, n)


def lattice(grid: TimeGrid, oversample: int = 2) -> np.ndarray:
    """Uniform xi grid matched to ``grid``: spacing ``pi / (M dt)``, ``M = oversample * n``.

    Covers one period ``[-pi/(2 dt), pi/(2 dt))`` of the discrete spectrum.
    """
    if oversample < 2:
        raise ValueError("oversample must be >= 2")
    m = oversample * grid.n_samples
    j = np.arange(-(m // 2), m - m // 2)
    return j * np.pi / (m * grid.dt)


def _lattice_index(xi: np.ndarray, grid: TimeGrid):
    """Integer lattice positions of ``xi`` and the lattice size ``M``."""
    if xi.size < 2:
        raise ValueError("need at least two xi points")
    dxi = np.diff(xi)
    step = dxi[0]
    if not np.allclose(dxi, step, rtol=1e-9, atol=0):
        raise ValueError("inverse NFT needs a uniform xi grid")
    m_float = np.pi / (step * grid.dt)
    m = int(round(m_float))
    if abs(m - m_float) > 1e-6 * m_float:
        raise ValueError("xi spacing must equal pi/(M dt) for an integer M")
    if m < 2 * grid.n_samples:
        raise ValueError(
            f"xi spacing too coarse: need pi/(M dt) with M >= 2 n = {2 * grid.n_samples}, got M = {m}"
        )
    pos = xi / step
    idx = np.round(pos).astype(np.int64)
    if not np.allclose(pos, idx, atol=1e-6):
        raise ValueError("xi grid is not aligned with the lattice (xi = j * spacing)")
    if idx.min() < -(m // 2) or idx.max() >= m - m // 2:
        raise ValueError("xi grid exceeds one spectral period of the time grid")
    return idx, m


def minimum_phase_a(qhat_on_circle: np.ndarray, refine: int = 16) -> np.ndarray:
    """``a`` with ``|a|^2 = 1/(1+|qhat|^2)``, analytic in ``|w| < 1``.

    Input is ordered as ``w_j = exp(2 pi i j / M)``, ``j = 0..M-1``. ``|a|^2``
    is trigonometrically interpolated onto a ``refine`` times denser circle
    before the cepstral factorization, which suppresses cepstral aliasing
    (exact spectra of finite bursts make ``|a|^2`` a trigonometric polynomial).
    """
    m = qhat_on_circle.size
    mag2 = 1.0 / (1.0 + np.abs(qhat_on_circle) ** 2)
    if refine > 1:
        mf = refine * m
        coef = np.fft.fft(mag2)
        pad = np.zeros(mf, dtype=np.complex128)
        half = m // 2
        pad[:half] = coef[:half]
        pad[mf - half + (m % 2 == 0):] = coef[half + (m % 2 == 0):]
        if m % 2 == 0:
            # split the Nyquist coefficient symmetrically
            pad[half] = pad[mf - half] = coef[half] / 2
        fine = np.fft.ifft(pad).real * refine
        # interpolation may undershoot slightly where |a| is small
        mag2 = np.maximum(fine, 1e-300)
    mf = mag2.size
    c = np.fft.fft(0.5 * np.log(mag2)) / mf  # coefficients of w^k (k mod mf)
    causal = np.zeros(mf, dtype=np.complex128)
    causal[0] = c[0]
    h = mf // 2
    causal[1:h] = 2 * c[1:h]
    causal[h] = c[h] if mf % 2 == 0 else 2 * c[h]
    a = np.exp(np.fft.ifft(causal) * mf)
    return a[::refine] if refine > 1 else a


@numba.njit(cache=True, nogil=True)
def _peel(a_hat, b_hat, w_inv, n, h):
    # With k+1 layers left, a_hat = alpha z^-(k+1) and b_hat = beta z^-k are
    # polynomials in w; their constant terms (circle means) fix the last sample.
    out = np.empty(n, np.complex128)
    m = a_hat.size
    for k in range(n - 1, -1, -1):
        a0 = 0j
        b0 = 0j
        for j in range(m):
            a0 += a_hat[j]
            b0 += b_hat[j]
        qc = -b0 / a0  # conj(Q)
        qq = np.conj(qc)
        r = np.abs(qq)
        cth = 1.0 / np.sqrt(1.0 + r * r)
        for j in range(m):
            aj = a_hat[j]
            bj = b_hat[j]
            a_hat[j] = cth * (aj - qq * bj)
            b_hat[j] = cth * w_inv[j] * (qc * aj + bj)
        # potential P = Q arctan|Q| / (|Q| h); the signal sample is conj(P)
        if r > 0:
            out[k] = np.conj(qq * (np.arctan(r) / (r * h)))
        else:
            out[k] = 0j
    return out


def layer_peel(qhat_lattice: np.ndarray, xi_lattice: np.ndarray, grid: TimeGrid) -> np.ndarray:
    """Samples whose split-step spectrum is ``qhat_lattice`` on the full lattice."""
    h = grid.dt
    m = xi_lattice.size
    order = np.argsort(np.mod(np.round(xi_lattice * m * h / np.pi).astype(np.int64), m))
    xi = xi_lattice[order]
    qh = qhat_lattice[order]
    a = minimum_phase_a(qh)
    b = qh * a
    n = grid.n_samples
    t_left = grid.t_start - h / 2
    t_right = t_left + n * h
    # a_hat = alpha z^-n = a, b_hat = beta z^(1-n) with z = exp(-i xi h)
    a_hat = a.astype(np.complex128)
    b_hat = b * np.exp(1j * xi * (t_left + t_right + (n - 1) * h))
    w_inv = np.exp(-2j * xi * h)
    return _peel(a_hat, b_hat.astype(np.complex128), w_inv, n, h)


def inverse_nft(
    spectrum: NonlinearSpectrum,
    time_grid: TimeGrid,
    tolerance: float = 1e-6,
    max_iterations: int = 50,
    refine: bool = True,
) -> TimeSignal:
    """Normalized burst on ``time_grid`` whose forward NFT reproduces ``spectrum``.

    The spectrum must sit on the lattice of ``time_grid`` (see :func:`lattice`);
    lattice points outside the given grid are treated as zero. The relative L2
    residual of the forward NFT on the input grid ends below ``tolerance``.
    With ``refine=False`` the bare layer-peeling output is returned unchecked.

    The exact burst of a band-limited spectrum has tails that grow with
    amplitude, so the grid must extend well past the nominal burst for the
    residual to fall below small tolerances.

    Raises:
        INFTConvergenceError: residual stalled or ``max_iterations`` ran out;
            the best iterate is attached.
        BoundStateError: burst energy disagrees with the spectral energy.
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    target = spectrum.qc_values
    if not np.all(np.isfinite(target)):
        raise ValueError("spectrum must be finite")
    idx, m = _lattice_index(spectrum.xi_grid, time_grid)
    full_xi = np.arange(-(m // 2), m - m // 2) * np.pi / (m * time_grid.dt)
    pos = idx + m // 2
    norm = np.linalg.norm(target)
    if norm == 0:
        return TimeSignal(np.zeros(time_grid.n_samples, complex), 1 / time_grid.dt, "normalized", time_grid.t_start)

    drive = np.zeros(m, dtype=np.complex128)
    drive[pos] = target
    cfg = ScatteringConfig(spectrum.xi_grid)
    best, best_res = None, math.inf
    stalled = 0
    for _ in range(max_iterations if refine else 1):
        q = layer_peel(drive, full_xi, time_grid)
        if not np.all(np.isfinite(q)):
            break
        sig = TimeSignal(q, 1 / time_grid.dt, "normalized", time_grid.t_start)
        if not refine:
            best, best_res = sig, 0.0
            break
        a, b = scattering_data(sig, cfg)
        err = target - b / a
        residual = float(np.linalg.norm(err) / norm)
        if not math.isfinite(residual):
            break
        if residual < best_res:
            # a step that gains less than 10% counts as a stall
            stalled = stalled + 1 if residual > 0.9 * best_res else 0
            best, best_res = sig, residual
        else:
            stalled += 1
        if residual <= tolerance or stalled >= 3:
            break
        drive[pos] += err
    if best is None:
        raise INFTConvergenceError("layer peeling produced non-finite samples", math.inf)
    if best_res > tolerance:
        raise INFTConvergenceError(
            f"inverse NFT residual {best_res:.3g} above tolerance {tolerance:.3g}", best_res, best
        )
    _check_energy(best, spectrum)
    return best


def _check_energy(sig: TimeSignal, spectrum: NonlinearSpectrum, rel_gap: float = 0.05):
    e_time = sig.energy()
    e_spec = float(np.trapezoid(np.log1p(np.abs(spectrum.qc_values) ** 2), spectrum.xi_grid) / np.pi)
    if e_time > 0 and abs(e_time - e_spec) > rel_gap * e_time + 1e-12:
        raise BoundStateError(
            f"synthesized energy {e_time:.6g} disagrees with spectral energy {e_spec:.6g}"
        )


def linear_inverse(spectrum: NonlinearSpectrum, time_grid: TimeGrid) -> TimeSignal:
    """``-(1/pi) int qhat(xi) exp(2 i xi t) d xi`` by the rectangle rule on the grid."""
    xi = spectrum.xi_grid
    dxi = xi[1] - xi[0]
    t = time_grid.times
    q = -(dxi / np.pi) * (np.exp(2j * np.outer(t, xi)) @ spectrum.qc_values)
    return TimeSignal(q, 1 / time_grid.dt, "normalized", time_grid.t_start)
