import struct

import numpy as np
import pytest

from nfdmlab import waveio
from nfdmlab.core import TimeSignal


def test_header_layout_bit_exact():
    sig = TimeSignal(np.array([1 - 2j, 0.5 + 0.25j]), 64e9)
    data = waveio.to_bytes(sig)
    expect = (b"NFDM" + struct.pack("<I", 1) + b"\x00" + struct.pack("<d", 64e9) + struct.pack("<Q", 2)
              + struct.pack("<4d", 1.0, -2.0, 0.5, 0.25))
    assert data == expect
    assert len(data) == 25 + 2 * 16


@pytest.mark.parametrize("units", ["physical", "normalized"])
def test_round_trip(tmp_path, units):
    rng = np.random.default_rng(0)
    sig = TimeSignal(rng.standard_normal(1001) + 1j * rng.standard_normal(1001), 8.0, units)
    path = tmp_path / "w.bin"
    waveio.write_waveform(path, sig)
    back = waveio.read_waveform(path)
    assert back.units == units and back.sample_rate == sig.sample_rate
    np.testing.assert_array_equal(back.samples, sig.samples)


def _corrupt(data, offset, value):
    return data[:offset] + value + data[offset + len(value):]


def test_malformed_files():
    data = waveio.to_bytes(TimeSignal(np.ones(3, complex), 1.0))
    with pytest.raises(ValueError, match="header"):
        waveio.from_bytes(data[:10])
    with pytest.raises(ValueError, match="magic"):
        waveio.from_bytes(_corrupt(data, 0, b"XXXX"))
    with pytest.raises(ValueError, match="version"):
        waveio.from_bytes(_corrupt(data, 4, struct.pack("<I", 2)))
    with pytest.raises(ValueError, match="units"):
        waveio.from_bytes(_corrupt(data, 8, b"\x07"))
    with pytest.raises(ValueError, match="samples"):
        waveio.from_bytes(data[:-16])
