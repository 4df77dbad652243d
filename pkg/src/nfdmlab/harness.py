"""Seeded Monte-Carlo experiments: configuration, execution and result files.

Configuration files are flat ``key = value`` text with dotted sections::

    system = nfdm, ofdm
    link_mode = lossy-edfa
    sweep.powers_dbm = -8, -6, -4, -2, 0
    frame.preset = 1
    link.beta2_ps2_per_km = -21.7
    impairments = off

Random streams come from one Philox generator keyed by
``(seed, point index, block index)``, so every sweep point and block can run
in any order or thread without changing a single output byte.
"""

from __future__ import annotations

import csv
import dataclasses
import hashlib
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import channel, metrics, transceiver as trx
from .core import FrameConfig, LinkConfig, PilotLayout, RunResult, TimeSignal

SYSTEMS = ("nfdm", "ofdm")
LINK_MODES = ("lossy-edfa", "path-averaged-lossless", "awgn-only")
CSV_FIELDS = ["system", "power_dbm", "ber", "q_db", "gmi", "evm_db", "seed", "config_hash",
              "errors", "bits", "ber_upper", "a_param", "achieved_dbm", "n_subcarriers", "failed", "error"]

# (T0, GI, N) rows of the investigated systems with their printed gross rate,
# bandwidth and spectral efficiency
TAB1 = (
    (2.0e-9, 4.0e-9, 64, 53e9, 32e9, 1.56),
    (3.3e-9, 3.3e-9, 132, 100e9, 40e9, 2.30),
    (3.5e-9, 3.5e-9, 154, 110e9, 44e9, 2.24),
    (3.5e-9, 3.5e-9, 176, 125e9, 50e9, 2.17),
    (3.6e-9, 3.6e-9, 198, 137e9, 55e9, 2.12),
    (3.7e-9, 3.7e-9, 222, 150e9, 60e9, 2.08),
)


def tab1_presets() -> list[FrameConfig]:
    """The six (T0, GI, N) system configurations."""
    return [FrameConfig(n, t0, gi) for t0, gi, n, *_ in TAB1]


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a sweep.

    With ``isolated_bursts`` every burst crosses the link alone on its own
    synthesis window and is analysed over that whole window, which removes
    inter-burst overlap. Transmitter and receiver impairments are then drawn per
    burst, so laser phase is not continuous across bursts.
    """

    systems: tuple = ("nfdm",)
    frame: FrameConfig = field(default_factory=lambda: tab1_presets()[0])
    link: LinkConfig = field(default_factory=LinkConfig)
    impairments: channel.ImpairmentConfig = field(default_factory=channel.ImpairmentConfig)
    synthesis: trx.SynthesisConfig = field(default_factory=trx.SynthesisConfig)
    step: channel.StepControl = field(default_factory=lambda: channel.StepControl(0.02, 2000.0))
    powers_dbm: tuple = (-8.0, -6.0, -4.0, -2.0, 0.0, 2.0)
    presets: tuple = ()
    n_bursts: int = 16
    n_blocks: int = 21
    rng_seed: int = 1
    link_mode: str = "lossy-edfa"
    awgn_snr_db: float = 30.0
    isolated_bursts: bool = False

    def __post_init__(self):
        if self.n_bursts < 1 or self.n_blocks < 1:
            raise ValueError("n_bursts and n_blocks must be >= 1")
        if not self.powers_dbm:
            raise ValueError("sweep must not be empty")
        if self.link_mode not in LINK_MODES:
            raise ValueError(f"unknown link_mode {self.link_mode!r}")
        for s in self.systems:
            if s not in SYSTEMS:
                raise ValueError(f"unknown system {s!r}")
        if not self.systems:
            raise ValueError("at least one system is required")

    def points(self):
        """Sweep points ``(index, system, frame, power_dbm)``.

        Both systems share the index, hence the random data, of a point.
        """
        frames = [tab1_presets()[p - 1] for p in self.presets] or [self.frame]
        out = []
        idx = 0
        for fr in frames:
            for p in self.powers_dbm:
                for s in self.systems:
                    out.append((idx, s, fr, float(p)))
                idx += 1
        return out


# -- config text ------------------------------------------------------------

# key -> (object path, attribute, conversion factor to SI)
_UNIT_KEYS = {
    "frame.t0_ns": ("frame", "t0", 1e-9),
    "frame.gi_ns": ("frame", "guard_interval", 1e-9),
    "link.beta2_ps2_per_km": ("link", "beta2", 1e-27),
    "link.gamma_per_w_km": ("link", "gamma", 1e-3),
    "link.span_km": ("link", "span_length", 1e3),
    "link.wavelength_nm": ("link", "center_wavelength", 1e-9),
    "link.nf_db": ("link", "noise_figure_db", 1.0),
    "imp.dac_bandwidth_ghz": ("impairments", "dac_bandwidth", 1e9),
    "imp.dac_rate_gsps": ("impairments", "dac_rate", 1e9),
    "imp.adc_rate_gsps": ("impairments", "adc_rate", 1e9),
    "imp.linewidth_khz": ("impairments", "laser_linewidth", 1e3),
    "imp.frequency_offset_mhz": ("impairments", "frequency_offset", 1e6),
}
_SECTIONS = {"frame": "frame", "link": "link", "imp": "impairments", "synth": "synthesis", "ssfm": "step"}


def _parse_value(text: str, like):
    text = text.strip()
    if isinstance(like, bool):
        if text.lower() in ("1", "true", "yes", "on"):
            return True
        if text.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {text!r}")
    if isinstance(like, int):
        return int(text)
    if isinstance(like, float):
        return float(text)
    return text


def _split_list(text: str):
    return [t.strip() for t in text.split(",") if t.strip()]


def parse_config(text: str, seed: int | None = None) -> ExperimentConfig:
    """Build a config from ``key = value`` lines (``#`` starts a comment)."""
    cfg = ExperimentConfig()
    parts = {name: getattr(cfg, name) for name in _SECTIONS.values()}
    top = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected key = value")
        key, value = (s.strip() for s in line.split("=", 1))
        if key in _UNIT_KEYS:
            obj, attr, factor = _UNIT_KEYS[key]
            parts[obj] = dataclasses.replace(parts[obj], **{attr: float(value) * factor})
        elif key == "frame.preset":
            base = tab1_presets()[int(value) - 1]
            parts["frame"] = dataclasses.replace(base, pilots=parts["frame"].pilots)
        elif key.startswith("frame.pilots."):
            attr = key.split(".", 2)[2]
            pl = parts["frame"].pilots
            if attr not in {f.name for f in dataclasses.fields(PilotLayout)}:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
            pl = dataclasses.replace(pl, **{attr: int(value)})
            parts["frame"] = dataclasses.replace(parts["frame"], pilots=pl)
        elif "." in key and key.split(".", 1)[0] in _SECTIONS:
            sec, attr = key.split(".", 1)
            obj = parts[_SECTIONS[sec]]
            names = {f.name: f for f in dataclasses.fields(obj)}
            if attr not in names:
                raise ValueError(f"line {lineno}: unknown key {key!r}")
            parts[_SECTIONS[sec]] = dataclasses.replace(obj, **{attr: _parse_value(value, getattr(obj, attr))})
        elif key in ("system", "systems"):
            top["systems"] = tuple(_split_list(value))
        elif key == "sweep.powers_dbm":
            top["powers_dbm"] = tuple(float(v) for v in _split_list(value))
        elif key == "sweep.presets":
            top["presets"] = tuple(int(v) for v in _split_list(value))
        elif key in ("n_bursts", "n_blocks"):
            top[key] = int(value)
        elif key in ("seed", "rng_seed"):
            top["rng_seed"] = int(value)
        elif key == "link_mode":
            top["link_mode"] = value
        elif key == "awgn.snr_db":
            top["awgn_snr_db"] = float(value)
        elif key == "impairments":
            on = _parse_value(value, False)
            parts["impairments"] = channel.ImpairmentConfig() if on else channel.ImpairmentConfig.disabled()
        elif key == "isolated_bursts":
            top["isolated_bursts"] = _parse_value(value, False)
        else:
            raise ValueError(f"line {lineno}: unknown key {key!r}")
    if seed is not None:
        top["rng_seed"] = seed
    return dataclasses.replace(cfg, **parts, **top)


def load_config(path, seed: int | None = None) -> ExperimentConfig:
    return parse_config(Path(path).read_text(), seed)


def resolved_text(cfg: ExperimentConfig) -> str:
    """Canonical dump of every resolved parameter (input to the config hash)."""
    lines = []

    def walk(prefix, obj):
        if dataclasses.is_dataclass(obj):
            for f in dataclasses.fields(obj):
                walk(f"{prefix}.{f.name}" if prefix else f.name, getattr(obj, f.name))
        elif isinstance(obj, tuple):
            lines.append(f"{prefix} = {', '.join(repr(v) for v in obj)}")
        else:
            lines.append(f"{prefix} = {obj!r}")

    walk("", cfg)
    return "\n".join(lines) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(resolved_text(cfg).encode()).hexdigest()[:16]


# -- simulation -------------------------------------------------------------


def _seq(seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed, spawn_key=tuple(key))


def _gen(ss: np.random.SeedSequence) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(ss))


CALIBRATION_KEY = 2**31 - 1


def _model_link(cfg: ExperimentConfig) -> LinkConfig:
    if cfg.link_mode == "path-averaged-lossless":
        return cfg.link.path_averaged()
    return cfg.link


def _propagate(tx: TimeSignal, cfg: ExperimentConfig, link: LinkConfig, ss) -> TimeSignal:
    if cfg.link_mode == "awgn-only":
        # in-band SNR over the modulated bandwidth
        band = trx.frame_rates(cfg.frame).bandwidth_hz
        return channel.awgn(tx, cfg.awgn_snr_db - 10 * math.log10(tx.sample_rate / band), ss)
    return channel.run_link(tx, link, ss, cfg.step)


def simulate_point(cfg: ExperimentConfig, index: int, system: str, frame: FrameConfig,
                   power_dbm: float) -> RunResult:
    """One sweep point; raises on component errors."""
    link = _model_link(cfg)
    if cfg.link_mode == "awgn-only":
        link = dataclasses.replace(link, n_spans=0)
    synth = cfg.synthesis
    cal_grid, _ = trx.random_grid(frame, 8, _gen(_seq(cfg.rng_seed, index, CALIBRATION_KEY)), first_burst=1)
    pc = trx.calibrate_power(cal_grid, frame, link, power_dbm, system, synth)
    modulate = trx.nfdm_modulate if system == "nfdm" else trx.ofdm_modulate
    probe = trx.nfdm_spectrum if system == "nfdm" else trx.ofdm_spectrum
    raw, tx_bits = [], []
    for blk in range(cfg.n_blocks):
        ss = _seq(cfg.rng_seed, index, blk)
        s_data, s_tx, s_link, s_rx = ss.spawn(4)
        first = blk * cfg.n_bursts
        grid, bits = trx.random_grid(frame, cfg.n_bursts, _gen(s_data), first)
        bursts = [modulate(grid, frame, pc, link, synth, m) for m in range(cfg.n_bursts)]
        if cfg.isolated_bursts:
            # each burst travels alone on its synthesis window and is analysed over all of it
            seeds = zip(s_tx.spawn(cfg.n_bursts), s_link.spawn(cfg.n_bursts), s_rx.spawn(cfg.n_bursts))
            for b, (st, sl, sr) in zip(bursts, seeds):
                rx = _propagate(channel.apply_tx_impairments(b, cfg.impairments, st), cfg, link, sl)
                raw.append(probe(channel.apply_rx_impairments(rx, cfg.impairments, sr), frame, pc, link))
        else:
            tx = trx.assemble_stream(bursts, frame, synth)
            tx = channel.apply_tx_impairments(tx, cfg.impairments, s_tx)
            rx = _propagate(tx, cfg, link, s_link)
            rx = channel.apply_rx_impairments(rx, cfg.impairments, s_rx)
            for w in trx.extract_bursts(rx, frame, cfg.n_bursts, synth):
                raw.append(probe(w, frame, pc, link))
        tx_bits.extend(bits)
    eq = trx.equalize(np.array(raw), frame, 0)
    rx_bits, llrs = trx.detect(eq, frame)
    tb = np.concatenate(tx_bits)
    rb = np.concatenate(rx_bits)
    ber, errors = metrics.ber_count(tb, rb)
    floor = 0.5 / tb.size
    q_db = metrics.q_from_ber(min(max(ber, floor), 0.4999))
    gmi = metrics.gmi_estimate(np.concatenate(llrs), tb)
    mask = eq.estimates.pilot_mask
    ref = _reference_symbols(frame, tx_bits, mask)
    data = ~mask
    per_sc = np.array([
        metrics.evm_db(eq.estimates.symbols[data[:, i], i], ref[data[:, i], i]) if data[:, i].any() else np.nan
        for i in range(mask.shape[1])
    ])
    evm = float(metrics.evm_db(eq.estimates.symbols[data], ref[data]))
    return RunResult(power_dbm, ber, q_db, gmi, evm, per_sc, tb.size, frame.n_subcarriers,
                     system=system, errors=errors, a_param=pc.a_param, achieved_power_dbm=pc.achieved_power_dbm)


def _reference_symbols(frame, tx_bits, mask):
    from .qam import CONSTELLATION, bits_to_labels

    ref = np.tile(trx.pilot_values(frame), (mask.shape[0], 1))
    for m, b in enumerate(tx_bits):
        if b.size:
            ref[m, ~mask[m]] = CONSTELLATION[bits_to_labels(b)]
    return ref


def _failed(system, frame, power_dbm, exc) -> RunResult:
    return RunResult(power_dbm, math.nan, math.nan, math.nan, math.nan, np.zeros(0), 0, frame.n_subcarriers,
                     failed=True, error=f"{type(exc).__name__}: {exc}", system=system)


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> list[RunResult]:
    """Run every sweep point; a failing point is recorded and the sweep goes on."""

    def job(point):
        index, system, frame, power = point
        try:
            return simulate_point(cfg, index, system, frame, power)
        except Exception as exc:  # noqa: BLE001 - failure isolation per point
            return _failed(system, frame, power, exc)

    points = cfg.points()
    if threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(job, points))
    return [job(p) for p in points]


# -- output -----------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    return str(v)


def emit_results(results, out_dir, cfg: ExperimentConfig | None = None, fmt=("csv", "plot-data"),
                 stem: str = "results") -> list[Path]:
    """Write ``<stem>.csv`` and per-curve plot-data files; returns the written paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    seed = cfg.rng_seed if cfg else ""
    chash = config_hash(cfg) if cfg else ""
    written = []
    if "csv" in fmt:
        path = out / f"{stem}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_FIELDS)
            for r in results:
                row = {
                    "system": r.system,
                    "power_dbm": r.launch_power_dbm,
                    "ber": r.ber,
                    "q_db": r.q_factor_db,
                    "gmi": r.gmi_bits,
                    "evm_db": r.evm_db,
                    "seed": seed,
                    "config_hash": chash,
                    "errors": r.errors,
                    "bits": r.bits_counted,
                    "ber_upper": _ber_upper(r),
                    "a_param": r.a_param,
                    "achieved_dbm": r.achieved_power_dbm,
                    "n_subcarriers": r.n_subcarriers,
                    "failed": r.failed,
                    "error": r.error,
                }
                w.writerow([_fmt(row[k]) for k in CSV_FIELDS])
        written.append(path)
    if "plot-data" in fmt:
        curves = {}
        for r in results:
            if not r.failed:
                curves.setdefault(r.system or "run", []).append(r)
        for name, rs in curves.items():
            for metric, attr in (("q_db", "q_factor_db"), ("gmi", "gmi_bits"), ("ber", "ber")):
                path = out / f"{stem}_{name}_{metric}.dat"
                with open(path, "w") as fh:
                    fh.write(f"# power_dbm {metric}\n")
                    for r in rs:
                        fh.write(f"{_fmt(r.launch_power_dbm)} {_fmt(getattr(r, attr))}\n")
                written.append(path)
    return written


def _ber_upper(r: RunResult) -> float:
    """BER itself, or the rule-of-three 95% bound when no error was seen."""
    if r.failed or not r.bits_counted:
        return math.nan
    return r.ber if r.ber > 0 else 3.0 / r.bits_counted


def read_results_csv(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def optimum(results, system: str):
    """``(power, q)`` of the best valid point of ``system`` and whether it is interior."""
    rs = sorted((r for r in results if r.system == system and not r.failed),
                key=lambda r: r.launch_power_dbm)
    if not rs:
        return None, None, False
    q = [r.q_factor_db for r in rs]
    i = int(np.argmax(q))
    return rs[i].launch_power_dbm, q[i], 0 < i < len(rs) - 1
