"""Binary waveform files.

Layout (little-endian, no padding)::

    magic  b"NFDM"
    version  u32
    units    u8   (0 physical, 1 normalized)
    rate     f64
    n        u64
    n x (re f64, im f64)
"""

import struct
from pathlib import Path

import numpy as np

from .core import TimeSignal

MAGIC = b"NFDM"
VERSION = 1
_HEADER = struct.Struct("<4sIBdQ")
_UNITS = {"physical": 0, "normalized": 1}


def to_bytes(signal: TimeSignal) -> bytes:
    head = _HEADER.pack(MAGIC, VERSION, _UNITS[signal.units], signal.sample_rate, len(signal))
    body = np.empty(2 * len(signal), dtype="<f8")
    body[0::2] = signal.samples.real
    body[1::2] = signal.samples.imag
    return head + body.tobytes()


def from_bytes(data: bytes) -> TimeSignal:
    if len(data) < _HEADER.size:
        raise ValueError("truncated waveform header")
    magic, version, units, rate, n = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != VERSION:
        raise ValueError(f"unsupported waveform version {version}")
    if units not in (0, 1):
        raise ValueError(f"bad units flag {units}")
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    if body.size != 2 * n:
        raise ValueError(f"expected {n} samples, found {body.size / 2}")
    samples = body[0::2] + 1j * body[1::2]
    return TimeSignal(samples, rate, "physical" if units == 0 else "normalized")


def write_waveform(path, signal: TimeSignal) -> None:
    Path(path).write_bytes(to_bytes(signal))


def read_waveform(path) -> TimeSignal:
    return from_bytes(Path(path).read_bytes())
