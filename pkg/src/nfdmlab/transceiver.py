"""NFDM and OFDM transmitter/receiver chains.

Each burst carries ``N`` subcarriers on the nonlinear spectrum

    qhat(xi) = A sum_k c_k sinc(xi T0 + k pi) exp(-2 i m xi T1),   k = -N/2 .. N/2-1

(normalized units, ``sinc(x) = sin(x)/x``). Subcarrier ``k`` peaks at
``xi = -k pi / T0``. The OFDM twin sends the same function as a linear spectrum,
``F(f) = qhat(pi f)``.

Half of the channel rotation ``exp(-4 i xi^2 l)`` is undone at the transmitter and the
other half at the receiver. NFDM bursts are normalized with the path-averaged
nonlinearity of the link, so the same chain serves lossy and lossless links.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import fft as sfft

from . import qam
from .core import (
    FrameConfig,
    LinkConfig,
    NonlinearSpectrum,
    TimeSignal,
    dbm_to_watt,
    denormalize,
    normalize,
    normalized_length,
    watt_to_dbm,
)
from .inft import BoundStateError, INFTConvergenceError, TimeGrid, inverse_nft, lattice
from .nft import ScatteringConfig, forward_nft, linear_fourier

PRECOMP_FRACTION = 0.5


class SyncError(RuntimeError):
    """No preamble found in the received stream."""


class PowerRangeError(ValueError):
    """Target launch power cannot be bracketed."""


@dataclass(frozen=True)
class SymbolGrid:
    """Symbols ``c[m, k]`` of consecutive bursts; column ``i`` is subcarrier ``k_range[i]``."""

    symbols: np.ndarray
    k_range: np.ndarray
    pilot_mask: np.ndarray
    first_burst: int = 0

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.symbols, dtype=np.complex128))
        k = np.asarray(self.k_range, dtype=np.int64)
        mask = np.broadcast_to(np.asarray(self.pilot_mask, dtype=bool), s.shape).copy()
        if s.shape[1] != k.size:
            raise ValueError("symbols need one column per subcarrier index")
        object.__setattr__(self, "symbols", s)
        object.__setattr__(self, "k_range", k)
        object.__setattr__(self, "pilot_mask", mask)

    @property
    def n_bursts(self) -> int:
        return self.symbols.shape[0]

    def burst(self, m: int) -> "SymbolGrid":
        return SymbolGrid(self.symbols[m : m + 1], self.k_range, self.pilot_mask[m : m + 1], self.first_burst + m)

    def to_csv(self, path) -> None:
        """Rows ``burst, subcarrier, re, im, pilot``."""
        with open(path, "w") as fh:
            fh.write("burst,subcarrier,re,im,pilot\n")
            for m in range(self.n_bursts):
                for i, k in enumerate(self.k_range):
                    v = complex(self.symbols[m, i])
                    fh.write(f"{self.first_burst + m},{k},{v.real!r},{v.imag!r},{int(self.pilot_mask[m, i])}\n")


@dataclass
class PowerControl:
    a_param: float
    target_launch_power_dbm: float = math.nan
    achieved_power_dbm: float = math.nan


@dataclass(frozen=True)
class SynthesisConfig:
    """Numerical settings shared by transmitter and receiver.

    Attributes:
        samples_per_unit: samples per normalized time unit (``T0/32``).
        window_slots: synthesis window length in slots. The exact burst of a
            band-limited spectrum has tails that grow with power.
        band_factor: synthesized band relative to the nominal ``N/T0``.
        tolerance: INFT residual target.
        max_iterations: INFT refinement cap.
        strict: raise on INFT non-convergence instead of sending the best iterate.
        rx_window_slots: receiver analysis window length in slots.
    """

    samples_per_unit: int = 8
    window_slots: int = 3
    band_factor: float = 1.25
    tolerance: float = 1e-3
    max_iterations: int = 12
    strict: bool = False
    rx_window_slots: float = 1.0


# -- framing --------------------------------------------------------------


def t0_norm(frame: FrameConfig) -> float:
    return frame.t0 / frame.time_scale


def t1_norm(frame: FrameConfig) -> float:
    return frame.t1 / frame.time_scale


def slot_samples(frame: FrameConfig, synth: SynthesisConfig = SynthesisConfig()) -> int:
    n = t1_norm(frame) * synth.samples_per_unit
    if abs(n - round(n)) > 1e-9:
        raise ValueError("slot duration is not a whole number of samples")
    return int(round(n))


def sample_rate(frame: FrameConfig, synth: SynthesisConfig = SynthesisConfig()) -> float:
    """Physical sample rate of synthesized waveforms."""
    return synth.samples_per_unit / frame.time_scale


def synthesis_grid(frame: FrameConfig, synth: SynthesisConfig = SynthesisConfig()) -> TimeGrid:
    n = synth.window_slots * slot_samples(frame, synth)
    return TimeGrid.centered(n / synth.samples_per_unit, 1.0 / synth.samples_per_unit)


def subcarrier_xi(frame: FrameConfig) -> np.ndarray:
    """Center ``-k pi / T0`` of every subcarrier, in ``frame.subcarrier_indices`` order."""
    return -frame.subcarrier_indices * np.pi / t0_norm(frame)


def pilot_values(frame: FrameConfig) -> np.ndarray:
    """Known symbols, one per subcarrier, used on pilot positions and training bursts."""
    rng = np.random.Generator(np.random.Philox(frame.pilots.seed))
    return qam.CONSTELLATION[rng.integers(0, 32, frame.n_subcarriers)]


def is_training(frame: FrameConfig, burst: int) -> bool:
    return burst % frame.pilots.training_period == 0


def pilot_mask(frame: FrameConfig, n_bursts: int, first_burst: int = 0) -> np.ndarray:
    k = frame.subcarrier_indices
    mask = np.tile(k % frame.pilots.subcarrier_spacing == 0, (n_bursts, 1))
    for m in range(n_bursts):
        if is_training(frame, first_burst + m):
            mask[m] = True
    return mask


def random_grid(frame: FrameConfig, n_bursts: int, rng: np.random.Generator, first_burst: int = 0):
    """Random data grid with pilots in place.

    Returns ``(grid, bits)`` where ``bits[m]`` holds the data bits of burst ``m``
    (empty for training bursts).
    """
    if frame.bits_per_symbol != qam.BITS_PER_SYMBOL:
        raise ValueError("only 32-QAM (5 bits per symbol) is implemented")
    mask = pilot_mask(frame, n_bursts, first_burst)
    pv = pilot_values(frame)
    symbols = np.tile(pv, (n_bursts, 1))
    bits = []
    for m in range(n_bursts):
        data = ~mask[m]
        b = rng.integers(0, 2, int(data.sum()) * qam.BITS_PER_SYMBOL, dtype=np.uint8)
        if b.size:
            symbols[m, data] = qam.CONSTELLATION[qam.bits_to_labels(b)]
        bits.append(b)
    return SymbolGrid(symbols, frame.subcarrier_indices, mask, first_burst), bits


# -- spectra --------------------------------------------------------------


def build_spectrum(grid: SymbolGrid, frame: FrameConfig, pc: PowerControl, xi_grid, burst: int = 0,
                   all_bursts: bool = False) -> NonlinearSpectrum:
    """Modulated spectrum of one burst (default) or of every burst of ``grid``.

    The burst time shift ``exp(-2 i m xi T1)`` uses ``frame.burst_index`` for a
    single burst and the row index for ``all_bursts``.
    """
    xi = np.asarray(xi_grid, dtype=float)
    t0, t1 = t0_norm(frame), t1_norm(frame)
    k = grid.k_range
    # np.sinc(x) = sin(pi x)/(pi x)
    basis = np.sinc(xi[:, None] * t0 / np.pi + k[None, :])
    if all_bursts:
        rows = range(grid.n_bursts)
        shifts = [np.exp(-2j * m * xi * t1) for m in rows]
        q = sum(s * (basis @ grid.symbols[m]) for m, s in zip(rows, shifts))
    else:
        q = (basis @ grid.symbols[burst]) * np.exp(-2j * frame.burst_index * xi * t1)
    return NonlinearSpectrum(xi, pc.a_param * q)


def rotation(xi, link: LinkConfig, frame: FrameConfig, fraction: float) -> np.ndarray:
    """``exp(+4 i xi^2 l fraction)``: undoes ``fraction`` of the channel rotation."""
    ell = normalized_length(link, frame.time_scale)
    return np.exp(4j * np.asarray(xi) ** 2 * ell * fraction)


def precompensate(spectrum: NonlinearSpectrum, link: LinkConfig, frame: FrameConfig,
                  fraction: float = PRECOMP_FRACTION) -> NonlinearSpectrum:
    if not 0 <= fraction <= 1:
        raise ValueError("fraction must lie in [0, 1]")
    return spectrum.with_values(spectrum.qc_values * rotation(spectrum.xi_grid, link, frame, fraction))


def nft_link(link: LinkConfig) -> LinkConfig:
    """Lossless model link used for NFT normalization."""
    return link.path_averaged()


def band_lattice(frame: FrameConfig, synth: SynthesisConfig = SynthesisConfig()):
    """Synthesis grid and the lattice points inside the modulated band."""
    grid = synthesis_grid(frame, synth)
    xi = lattice(grid, 2)
    half = synth.band_factor * np.pi * frame.n_subcarriers / (2 * t0_norm(frame))
    return grid, xi[np.abs(xi) <= half]


# -- transmitters ---------------------------------------------------------


def nfdm_modulate(grid: SymbolGrid, frame: FrameConfig, pc: PowerControl, link: LinkConfig,
                  synth: SynthesisConfig = SynthesisConfig(), burst: int = 0,
                  precomp: float = PRECOMP_FRACTION) -> TimeSignal:
    """Physical NFDM burst on the synthesis window, centered on its slot.

    ``t0_offset`` is the time of the first sample relative to the slot center.
    Unless ``synth.strict`` is set, a refinement that stalls above tolerance
    yields its best iterate.
    """
    tgrid, xi = band_lattice(frame, synth)
    spec = precompensate(build_spectrum(grid, frame, pc, xi, burst), link, frame, precomp)
    if not np.any(spec.qc_values):
        q = TimeSignal(np.zeros(tgrid.n_samples, complex), 1 / tgrid.dt, "normalized", tgrid.t_start)
    else:
        try:
            q = inverse_nft(spec, tgrid, synth.tolerance, synth.max_iterations)
        except INFTConvergenceError as exc:
            if synth.strict or exc.signal is None:
                raise
            q = exc.signal
    return denormalize(q, nft_link(link), frame.time_scale)


def _apply_linear_rotation(q: np.ndarray, dt: float, phase_per_xi2: float) -> np.ndarray:
    # component exp(i w t) has xi = w/2, so exp(i c xi^2) = exp(i c w^2 / 4)
    w = 2 * np.pi * sfft.fftfreq(q.size, dt)
    return sfft.ifft(sfft.fft(q) * np.exp(1j * phase_per_xi2 * w**2 / 4))


def ofdm_modulate(grid: SymbolGrid, frame: FrameConfig, pc: PowerControl, link: LinkConfig,
                  synth: SynthesisConfig = SynthesisConfig(), burst: int = 0,
                  precomp: float = PRECOMP_FRACTION) -> TimeSignal:
    """Physical OFDM burst (inverse DFT of the same symbols) with pre-EDC."""
    tgrid = synthesis_grid(frame, synth)
    t = tgrid.times
    h = tgrid.dt
    t0 = t0_norm(frame)
    n_fft = int(round(t0 / h))
    k = grid.k_range
    # cell-averaged samples whose sampled linear spectrum at -k pi/T0 is exactly A c_k
    cell = np.sinc(k * h / t0)
    inside = np.abs(t) < t0 / 2
    tones = np.exp(-2j * np.pi * np.outer(t[inside], k) / t0)
    q = np.zeros(t.size, complex)
    q[inside] = -(pc.a_param / (h * n_fft)) * (tones @ (grid.symbols[burst] / cell))
    if frame.burst_index:
        q = _apply_linear_shift(q, h, frame.burst_index * t1_norm(frame))
    ell = normalized_length(link, frame.time_scale)
    if ell and precomp:
        q = _apply_linear_rotation(q, h, 4 * ell * precomp)
    sig = TimeSignal(q, 1 / h, "normalized", tgrid.t_start)
    return denormalize(sig, nft_link(link), frame.time_scale)


def _apply_linear_shift(q, dt, shift):
    w = 2 * np.pi * sfft.fftfreq(q.size, dt)
    return sfft.ifft(sfft.fft(q) * np.exp(-1j * w * shift))


# -- power calibration ----------------------------------------------------


def burst_power(bursts, frame: FrameConfig) -> float:
    """Mean burst power: burst energy over the burst duration ``T0``, averaged over bursts.

    The guard interval is excluded, so the time-averaged power of a contiguous
    burst stream sits ``10 log10(T1/T0)`` dB lower.
    """
    return float(np.mean([b.energy() for b in bursts]) / frame.t0)


def _measure(grid, frame, link, a, system, synth, refined=False):
    pc = PowerControl(a)
    if system == "ofdm":
        bursts = [ofdm_modulate(grid, frame, pc, link, synth, m) for m in range(grid.n_bursts)]
        return burst_power(bursts, frame)
    if refined:
        try:
            bursts = [nfdm_modulate(grid, frame, pc, link, synth, m) for m in range(grid.n_bursts)]
        except (INFTConvergenceError, BoundStateError, ValueError):
            return math.inf
        return burst_power(bursts, frame)
    tgrid, xi = band_lattice(frame, synth)
    scale = denormalize(TimeSignal(np.ones(1), 1.0, "normalized"), nft_link(link), frame.time_scale).samples[0]
    energies = []
    for m in range(grid.n_bursts):
        spec = precompensate(build_spectrum(grid, frame, pc, xi, m), link, frame)
        try:
            q = inverse_nft(spec, tgrid, refine=False)
        except (INFTConvergenceError, ValueError):
            return math.inf
        energies.append(q.energy() * abs(scale) ** 2 * frame.time_scale)
    return float(np.mean(energies) / frame.t0)


def calibrate_power(grid_sample: SymbolGrid, frame: FrameConfig, link: LinkConfig, target_dbm: float,
                    system: str = "nfdm", synth: SynthesisConfig = SynthesisConfig(),
                    tol_db: float = 0.01, max_iterations: int = 30) -> PowerControl:
    """Find ``A`` whose synthesized bursts reach ``target_dbm`` mean power.

    Bisection on ``log A``; the bracket is grown geometrically from ``A = 1``.
    For NFDM the bisection runs on bare layer-peeling bursts, then a few
    log-secant steps correct for the refinement applied by the transmitter.
    """
    if not -10 <= target_dbm <= 10:
        raise PowerRangeError(f"target {target_dbm} dBm outside [-10, 10] dBm")
    if grid_sample.n_bursts < 8:
        raise ValueError("calibrate on at least 8 bursts")
    target = float(dbm_to_watt(target_dbm))

    def excess(a):
        p = _measure(grid_sample, frame, link, a, system, synth)
        if not math.isfinite(p):
            return math.inf
        return 10 * math.log10(p / target) if p > 0 else -math.inf

    lo, hi = 1.0, 1.0
    e = excess(1.0)
    it = 1
    if abs(e) <= tol_db:
        return PowerControl(1.0, target_dbm, target_dbm + e)
    e_lo = e_hi = e
    while e_lo > 0:
        if it >= max_iterations or lo < 1e-6:
            raise PowerRangeError(f"cannot reach {target_dbm} dBm from above")
        hi, e_hi = lo, e_lo
        lo /= 4
        e_lo = excess(lo)
        it += 1
    while e_hi < 0:
        if it >= max_iterations or hi > 1e3:
            raise PowerRangeError(f"cannot reach {target_dbm} dBm")
        lo, e_lo = hi, e_hi
        hi *= 2
        e_hi = excess(hi)
        it += 1
    best = (lo, e_lo) if abs(e_lo) < abs(e_hi) else (hi, e_hi)
    while it < max_iterations and abs(best[1]) > tol_db:
        mid = math.sqrt(lo * hi)
        e = excess(mid)
        it += 1
        if abs(e) < abs(best[1]):
            best = (mid, e)
        if e > 0:
            hi = mid
        else:
            lo = mid
    a, e = best
    if system == "nfdm":
        a, e = _refine_calibration(grid_sample, frame, link, synth, target, a, tol_db)
    if abs(e) > 0.05:
        raise PowerRangeError(f"calibration stalled {e:.3f} dB from {target_dbm} dBm")
    return PowerControl(a, target_dbm, target_dbm + e)


def _refine_calibration(grid, frame, link, synth, target, a, tol_db, steps=4):
    def excess(x):
        p = _measure(grid, frame, link, x, "nfdm", synth, refined=True)
        return 10 * math.log10(p / target) if 0 < p < math.inf else math.inf

    e = excess(a)
    # local slope of dB power over dB amplitude, close to 1 in the linear regime
    a_prev, e_prev = a * 1.02, excess(a * 1.02)
    for _ in range(steps):
        if abs(e) <= tol_db or not math.isfinite(e) or not math.isfinite(e_prev) or e == e_prev:
            break
        slope = (e - e_prev) / (20 * math.log10(a / a_prev))
        a_prev, e_prev = a, e
        a = a * 10 ** (-e / (20 * max(slope, 0.5)))
        e = excess(a)
    return a, e


# -- receivers ------------------------------------------------------------


def _normalized_window(burst: TimeSignal, frame: FrameConfig, link: LinkConfig) -> TimeSignal:
    if burst.units == "normalized":
        return burst
    return normalize(burst, nft_link(link), frame.time_scale)


def nfdm_spectrum(burst: TimeSignal, frame: FrameConfig, pc: PowerControl, link: LinkConfig,
                  precomp: float = PRECOMP_FRACTION) -> np.ndarray:
    """Received ``qhat`` at the subcarrier centers, de-rotated and divided by ``A``."""
    q = _normalized_window(burst, frame, link)
    xi = subcarrier_xi(frame)
    order = np.argsort(xi)
    spec = forward_nft(q, ScatteringConfig(xi[order]))
    out = np.empty(xi.size, complex)
    out[order] = spec.qc_values
    return out * rotation(xi, link, frame, 1 - precomp) / pc.a_param


def ofdm_spectrum(burst: TimeSignal, frame: FrameConfig, pc: PowerControl, link: LinkConfig,
                  precomp: float = PRECOMP_FRACTION) -> np.ndarray:
    """Linear counterpart of :func:`nfdm_spectrum` (DFT at the subcarrier centers, EDC)."""
    q = _normalized_window(burst, frame, link)
    xi = subcarrier_xi(frame)
    return linear_fourier(q, xi) * rotation(xi, link, frame, 1 - precomp) / pc.a_param


@dataclass
class Equalized:
    """Receiver output for a run of bursts."""

    estimates: SymbolGrid
    noise_variance: float
    taps: np.ndarray
    phases: np.ndarray = field(default_factory=lambda: np.zeros(0))


def equalize(raw: np.ndarray, frame: FrameConfig, first_burst: int = 0, smooth: int = 9) -> Equalized:
    """Single-tap least-squares equalizer plus pilot-aided common phase.

    ``raw[m, i]`` is the received value of subcarrier ``frame.subcarrier_indices[i]``
    in burst ``first_burst + m``. Taps come from the training bursts (or, if
    none are present, from the pilot subcarriers); the per-burst phase is a
    centered moving average of width ``smooth`` over the unwrapped pilot phases.
    """
    raw = np.atleast_2d(raw)
    n_b = raw.shape[0]
    mask = pilot_mask(frame, n_b, first_burst)
    pv = pilot_values(frame)
    if mask.sum() < 2:
        raise ValueError("at least two pilot symbols are needed")
    train = np.array([is_training(frame, first_burst + m) for m in range(n_b)])
    ref = np.broadcast_to(pv, raw.shape)
    use = np.zeros_like(mask)
    use[train] = True
    # remove each burst's common phase before averaging, so drift between training bursts does not shrink the taps
    common = np.array([np.vdot(ref[m, mask[m]], raw[m, mask[m]]) if mask[m].any() else 1.0 for m in range(n_b)])
    aligned = raw * np.exp(-1j * np.angle(common))[:, None]
    taps = np.empty(raw.shape[1], complex)
    for i in range(raw.shape[1]):
        sel = use[:, i] if use[:, i].any() else mask[:, i]
        if sel.any():
            taps[i] = np.vdot(ref[sel, i], aligned[sel, i]) / np.vdot(ref[sel, i], ref[sel, i])
        else:
            taps[i] = np.nan
    if np.any(~np.isfinite(taps)):
        # subcarriers without any pilot: interpolate the tap across frequency
        good = np.isfinite(taps)
        if good.sum() < 2:
            raise ValueError("at least two pilot subcarriers are needed")
        idx = np.arange(taps.size)
        taps = np.interp(idx, idx[good], taps[good].real) + 1j * np.interp(idx, idx[good], taps[good].imag)
    z = raw / taps
    phase = np.zeros(n_b)
    for m in range(n_b):
        p = mask[m]
        phase[m] = np.angle(np.vdot(ref[m, p], z[m, p]))
    phase = np.unwrap(phase)
    if smooth > 1 and n_b > 1:
        w = min(smooth, n_b if n_b % 2 else n_b - 1)
        pad = w // 2
        # odd reflection keeps a linear drift unbiased at the edges
        padded = np.pad(phase, pad, mode="reflect", reflect_type="odd")
        phase = np.convolve(padded, np.ones(w) / w, mode="valid")
    z = z * np.exp(-1j * phase)[:, None]
    resid = np.abs(z[mask] - ref[mask]) ** 2
    nv = float(np.mean(resid)) if resid.size else 1e-3
    grid = SymbolGrid(z, frame.subcarrier_indices, mask, first_burst)
    return Equalized(grid, max(nv, 1e-12), taps, phase)


def nfdm_demodulate(bursts, frame: FrameConfig, pc: PowerControl, link: LinkConfig,
                    first_burst: int = 0, precomp: float = PRECOMP_FRACTION) -> Equalized:
    """Receive a run of NFDM bursts (each a window centered on its slot)."""
    raw = np.array([nfdm_spectrum(b, frame, pc, link, precomp) for b in bursts])
    return equalize(raw, frame, first_burst)


def ofdm_demodulate(bursts, frame: FrameConfig, pc: PowerControl, link: LinkConfig,
                    first_burst: int = 0, precomp: float = PRECOMP_FRACTION) -> Equalized:
    raw = np.array([ofdm_spectrum(b, frame, pc, link, precomp) for b in bursts])
    return equalize(raw, frame, first_burst)


def detect(eq: Equalized, frame: FrameConfig):
    """Hard bits and LLRs of the data symbols, burst by burst.

    Returns two lists aligned with the bit lists of :func:`random_grid`.
    """
    bits, llrs = [], []
    for m in range(eq.estimates.n_bursts):
        data = ~eq.estimates.pilot_mask[m]
        y = eq.estimates.symbols[m, data]
        if y.size == 0:
            bits.append(np.zeros(0, np.uint8))
            llrs.append(np.zeros(0))
            continue
        hb, ll = qam.qam32_demap(y, eq.noise_variance)
        bits.append(hb.reshape(-1))
        llrs.append(ll.reshape(-1))
    return bits, llrs


# -- streams and synchronization ---------------------------------------------


def assemble_stream(bursts, frame: FrameConfig, synth: SynthesisConfig = SynthesisConfig()) -> TimeSignal:
    """Overlap-add bursts into consecutive slots of a cyclic stream.

    Sample ``i`` of the stream sits at ``(i + 1/2) dt``; slot ``m`` is centered
    at ``(m + 1/2) T1``.
    """
    n_slot = slot_samples(frame, synth)
    total = n_slot * len(bursts)
    out = np.zeros(total, complex)
    for m, b in enumerate(bursts):
        n = len(b)
        # burst sample j sits at (j - n/2 + 1/2) dt from its slot center
        start = m * n_slot + n_slot // 2 - n // 2
        idx = (start + np.arange(n)) % total
        np.add.at(out, idx, b.samples)
    rate = bursts[0].sample_rate
    return TimeSignal(out, rate, bursts[0].units, 0.5 / rate)


def extract_bursts(stream: TimeSignal, frame: FrameConfig, n_bursts: int,
                   synth: SynthesisConfig = SynthesisConfig(), offset: int = 0):
    """Receiver windows (``rx_window_slots`` long) centered on each slot of a cyclic stream."""
    n_slot = slot_samples(frame, synth)
    n_win = 2 * int(round(synth.rx_window_slots * n_slot / 2))
    out = []
    for m in range(n_bursts):
        start = offset + m * n_slot + n_slot // 2 - n_win // 2
        idx = (start + np.arange(n_win)) % len(stream)
        t_first = (-n_win / 2 + 0.5) * stream.dt
        out.append(TimeSignal(stream.samples[idx], stream.sample_rate, stream.units, t_first))
    return out


def make_preamble(n_half: int, rate: float, seed: int = 0) -> TimeSignal:
    """Two identical halves of random QPSK chips."""
    rng = np.random.Generator(np.random.Philox(seed))
    half = np.exp(0.5j * np.pi * (rng.integers(0, 4, n_half) + 0.5))
    return TimeSignal(np.concatenate([half, half]), rate)


@dataclass(frozen=True)
class SyncResult:
    start: int
    frequency_offset: float
    peak: float

    def boundaries(self, slot: int, n_bursts: int) -> np.ndarray:
        return self.start + slot * np.arange(n_bursts + 1)


def synchronize(rx: TimeSignal, known_preamble: TimeSignal, threshold: float = 0.5) -> SyncResult:
    """Locate the preamble and estimate the carrier frequency offset.

    Timing uses the non-coherent sum of the correlations with both preamble
    halves, which tolerates a phase ramp across the preamble. The frequency
    offset follows from the phase between the two halves.
    """
    x = rx.samples
    p = known_preamble.samples
    n = p.size
    half = n // 2
    if x.size < n:
        raise SyncError("received signal shorter than the preamble")
    nfft = sfft.next_fast_len(x.size + n)
    X = sfft.fft(x, nfft)
    c = sfft.ifft(X * np.conj(sfft.fft(p[:half], nfft)))
    c1 = c[: x.size - n + 1]
    c2 = c[half : half + x.size - n + 1]
    # normalize by the local energy of each half
    e = np.concatenate([[0.0], np.cumsum(np.abs(x) ** 2)])
    en1 = e[half : x.size - n + 1 + half] - e[: x.size - n + 1]
    en2 = e[n : x.size + 1] - e[half : x.size - half + 1]
    ep = np.sum(np.abs(p[:half]) ** 2)
    with np.errstate(invalid="ignore", divide="ignore"):
        metric = (np.abs(c1) / np.sqrt(en1 * ep) + np.abs(c2) / np.sqrt(en2 * ep)) / 2
    metric = np.nan_to_num(metric)
    start = int(np.argmax(metric))
    peak = float(metric[start])
    if peak < threshold:
        raise SyncError(f"preamble correlation {peak:.3f} below threshold {threshold}")
    r1 = x[start : start + half] * np.conj(p[:half])
    r2 = x[start + half : start + n] * np.conj(p[half:])
    fo = np.angle(np.vdot(r1, r2)) / (2 * np.pi * half * rx.dt)
    return SyncResult(start, float(fo), peak)


# -- rates ----------------------------------------------------------------


@dataclass(frozen=True)
class FrameRates:
    gross_bps: float
    bandwidth_hz: float
    se_bits_per_s_hz: float


def frame_rates(frame: FrameConfig, net_bps: float | None = None) -> FrameRates:
    """Gross rate ``N bits/(T0+GI)``, bandwidth ``N/T0``; SE from ``net_bps`` (gross if omitted)."""
    gross = frame.n_subcarriers * frame.bits_per_symbol / frame.t1
    bw = frame.n_subcarriers / frame.t0
    net = gross if net_bps is None else net_bps
    return FrameRates(gross, bw, net / bw)


def launch_power_dbm(bursts, frame: FrameConfig) -> float:
    return float(watt_to_dbm(burst_power(bursts, frame)))
