"""Signal containers, link/frame configuration and NLSE unit normalization.

Physical model (SI units throughout)::

    dA/dz = -(alpha/2) A - i (beta2/2) d2A/dt2 + i gamma |A|^2 A

With ``t' = t/T``, ``z' = z/Z`` where ``Z = 2 T^2/|beta2|`` and
``q = A sqrt(gamma Z / 2)`` the lossless equation becomes the focusing NLSE

    i q_z + q_tt + 2 |q|^2 q = 0,

whose continuous nonlinear spectrum evolves as ``qhat(xi) exp(-4 i xi^2 z)``.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Literal

import numpy as np

Units = Literal["physical", "normalized"]

SPEED_OF_LIGHT = 299792458.0
PLANCK = 6.62607015e-34


class UnsupportedRegimeError(ValueError):
    """Raised for normal (beta2 >= 0) dispersion, where the NFT model used here does not apply."""


@dataclass(frozen=True)
class TimeSignal:
    """Uniformly sampled complex baseband waveform.

    Sample ``n`` sits at ``t0_offset + n / sample_rate``.
    """

    samples: np.ndarray
    sample_rate: float
    units: Units = "physical"
    t0_offset: float = 0.0

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=np.complex128)
        if s.ndim != 1 or s.size == 0:
            raise ValueError("samples must be a non-empty 1-D array")
        if not self.sample_rate > 0:
            raise ValueError("sample_rate must be positive")
        if self.units not in ("physical", "normalized"):
            raise ValueError(f"unknown units flag {self.units!r}")
        object.__setattr__(self, "samples", s)

    def __len__(self):
        return self.samples.size

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate

    @property
    def times(self) -> np.ndarray:
        return self.t0_offset + np.arange(self.samples.size) * self.dt

    @property
    def duration(self) -> float:
        return self.samples.size * self.dt

    def power(self) -> float:
        """Mean of ``|sample|^2``."""
        return float(np.mean(np.abs(self.samples) ** 2))

    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.dt)

    def replace(self, **changes) -> "TimeSignal":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class NonlinearSpectrum:
    """Continuous nonlinear spectrum ``qhat(xi) = b(xi)/a(xi)`` on a real grid."""

    xi_grid: np.ndarray
    qc_values: np.ndarray
    a_values: np.ndarray | None = None
    b_values: np.ndarray | None = None

    def __post_init__(self):
        xi = np.asarray(self.xi_grid, dtype=float)
        qc = np.asarray(self.qc_values, dtype=np.complex128)
        if xi.ndim != 1 or xi.shape != qc.shape:
            raise ValueError("xi_grid and qc_values must be 1-D arrays of equal length")
        if xi.size > 1 and not np.all(np.diff(xi) > 0):
            raise ValueError("xi_grid must be strictly increasing")
        if not np.all(np.isfinite(xi)):
            raise ValueError("xi_grid must be finite")
        object.__setattr__(self, "xi_grid", xi)
        object.__setattr__(self, "qc_values", qc)
        if (self.a_values is None) != (self.b_values is None):
            raise ValueError("a_values and b_values must be given together")
        if self.a_values is not None:
            a = np.asarray(self.a_values, dtype=np.complex128)
            b = np.asarray(self.b_values, dtype=np.complex128)
            if a.shape != xi.shape or b.shape != xi.shape:
                raise ValueError("a_values/b_values must match xi_grid")
            object.__setattr__(self, "a_values", a)
            object.__setattr__(self, "b_values", b)

    def __len__(self):
        return self.xi_grid.size

    def with_values(self, qc_values) -> "NonlinearSpectrum":
        return NonlinearSpectrum(self.xi_grid, qc_values)


@dataclass(frozen=True)
class LinkConfig:
    """Multi-span fiber link. Defaults are textbook SSMF values at 1550 nm."""

    beta2: float = -21.7e-27  # s^2/m
    gamma: float = 1.3e-3  # 1/(W m)
    alpha_db_per_km: float = 0.2
    span_length: float = 81.3e3  # m
    n_spans: int = 12
    noise_figure_db: float = 5.0
    center_wavelength: float = 1550e-9

    def __post_init__(self):
        if self.alpha_db_per_km < 0:
            raise ValueError("alpha_db_per_km must be >= 0")
        if self.n_spans < 0:
            raise ValueError("n_spans must be >= 0")
        if self.span_length < 0:
            raise ValueError("span_length must be >= 0")

    @property
    def total_length(self) -> float:
        return self.span_length * self.n_spans

    @property
    def alpha(self) -> float:
        """Power attenuation in 1/m."""
        return self.alpha_db_per_km * 1e-3 * math.log(10) / 10

    @property
    def span_loss_db(self) -> float:
        return self.alpha_db_per_km * self.span_length * 1e-3

    @property
    def carrier_frequency(self) -> float:
        return SPEED_OF_LIGHT / self.center_wavelength

    def gamma_eff(self) -> float:
        """Path-averaged nonlinearity of one lossy span."""
        al = self.alpha * self.span_length
        if al == 0:
            return self.gamma
        return self.gamma * (1 - math.exp(-al)) / al

    def path_averaged(self) -> "LinkConfig":
        """Lossless link with the path-averaged nonlinearity."""
        return dataclasses.replace(self, gamma=self.gamma_eff(), alpha_db_per_km=0.0)

    @classmethod
    def for_distance(cls, total_length: float, span_length: float = 81.3e3, **kw) -> "LinkConfig":
        """Link with ``round(total_length/span_length)`` spans (976 km -> 12 x 81.3 km)."""
        return cls(span_length=span_length, n_spans=int(round(total_length / span_length)), **kw)


@dataclass(frozen=True)
class PilotLayout:
    """Pilot subcarriers every ``subcarrier_spacing`` indices plus periodic all-pilot bursts."""

    subcarrier_spacing: int = 16
    training_period: int = 32
    seed: int = 7


@dataclass(frozen=True)
class FrameConfig:
    """Burst framing. ``t1`` is derived as ``t0 + guard_interval``."""

    n_subcarriers: int
    t0: float
    guard_interval: float
    burst_index: int = 0
    bits_per_symbol: int = 5
    pilots: PilotLayout = field(default_factory=PilotLayout)

    def __post_init__(self):
        if self.n_subcarriers < 1:
            raise ValueError("n_subcarriers must be >= 1")
        if self.bits_per_symbol < 1:
            raise ValueError("bits_per_symbol must be >= 1")
        if not (self.t0 > 0 and self.guard_interval >= 0):
            raise ValueError("t0 must be positive and guard_interval non-negative")

    @property
    def t1(self) -> float:
        return self.t0 + self.guard_interval

    @property
    def subcarrier_indices(self) -> np.ndarray:
        n = self.n_subcarriers
        return np.arange(-(n // 2), n - n // 2)

    @property
    def pilot_indices(self) -> np.ndarray:
        k = self.subcarrier_indices
        return k[k % self.pilots.subcarrier_spacing == 0]

    @property
    def data_indices(self) -> np.ndarray:
        k = self.subcarrier_indices
        return k[k % self.pilots.subcarrier_spacing != 0]

    @property
    def time_scale(self) -> float:
        """Normalization time unit, ``T0/32``."""
        return self.t0 / 32.0

    def replace(self, **changes) -> "FrameConfig":
        return dataclasses.replace(self, **changes)


@dataclass
class RunResult:
    """Metrics of one sweep point."""

    launch_power_dbm: float
    ber: float
    q_factor_db: float
    gmi_bits: float
    evm_db: float
    per_subcarrier_evm: np.ndarray
    bits_counted: int
    n_subcarriers: int = 0
    failed: bool = False
    error: str = ""
    system: str = ""
    errors: int = 0
    a_param: float = math.nan
    achieved_power_dbm: float = math.nan


def z_scale(time_scale: float, beta2: float) -> float:
    return 2.0 * time_scale**2 / abs(beta2)


def amplitude_scale(link: LinkConfig, time_scale: float) -> float:
    """Factor mapping sqrt(W) to normalized amplitude."""
    return math.sqrt(link.gamma * z_scale(time_scale, link.beta2) / 2.0)


def _check_regime(link: LinkConfig):
    if link.beta2 >= 0:
        raise UnsupportedRegimeError("normal dispersion (beta2 >= 0) is not supported")


def normalize(signal: TimeSignal, link: LinkConfig, time_scale: float) -> TimeSignal:
    """Map a physical waveform to normalized focusing-NLSE units."""
    if signal.units != "physical":
        raise ValueError("signal is already normalized")
    if not time_scale > 0:
        raise ValueError("time_scale must be positive")
    _check_regime(link)
    return TimeSignal(
        signal.samples * amplitude_scale(link, time_scale),
        signal.sample_rate * time_scale,
        "normalized",
        signal.t0_offset / time_scale,
    )


def denormalize(signal: TimeSignal, link: LinkConfig, time_scale: float) -> TimeSignal:
    if signal.units != "normalized":
        raise ValueError("signal is not normalized")
    if not time_scale > 0:
        raise ValueError("time_scale must be positive")
    _check_regime(link)
    return TimeSignal(
        signal.samples / amplitude_scale(link, time_scale),
        signal.sample_rate / time_scale,
        "physical",
        signal.t0_offset * time_scale,
    )


def normalized_length(link: LinkConfig, time_scale: float, length: float | None = None) -> float:
    length = link.total_length if length is None else length
    return length / z_scale(time_scale, link.beta2)


def dbm_to_watt(p_dbm):
    return 10 ** (np.asarray(p_dbm) / 10) * 1e-3


def watt_to_dbm(p_w):
    return 10 * np.log10(np.asarray(p_w) / 1e-3)
