import numpy as np
import pytest

from tilewave.grid import GridSpec, Kernel, Signal
from tilewave.io import (read_kernel, read_signal_bin, read_signal_csv, signal_from_bytes, signal_to_bytes,
                         write_kernel, write_signal_bin, write_signal_csv)


def test_csv_roundtrip(tmp_path):
    rng = np.random.default_rng(0)
    f = Signal(GridSpec(6), rng.standard_normal(64) + 1j * rng.standard_normal(64))
    write_signal_csv(f, tmp_path / "f.csv")
    g = read_signal_csv(tmp_path / "f.csv")
    assert g.grid == f.grid and np.array_equal(g.samples, f.samples)


def test_binary_layout_and_roundtrip(tmp_path):
    f = Signal(GridSpec(3), np.arange(8) + 0.5j)
    buf = signal_to_bytes(f)
    assert buf[:6] == b"TWSIG1"
    assert int.from_bytes(buf[6:10], "little") == 3
    assert len(buf) == 10 + 16 * 8
    assert np.frombuffer(buf[10:26], "<f8").tolist() == [0.0, 0.5]
    write_signal_bin(f, tmp_path / "f.bin")
    assert np.array_equal(read_signal_bin(tmp_path / "f.bin").samples, f.samples)


def test_binary_rejects_bad_input():
    with pytest.raises(ValueError):
        signal_from_bytes(b"NOPE00" + bytes(4))
    f = Signal(GridSpec(2), np.ones(4))
    with pytest.raises(ValueError):
        signal_from_bytes(signal_to_bytes(f)[:-8])


def test_kernel_sidecar(tmp_path):
    g = GridSpec(5)
    K = Kernel.from_symbol(g, np.ones(g.L), {"name": "k", "nu": 8, "claimed_support": (-2.0, 3.0), "C0": 1.0})
    write_kernel(K, tmp_path / "k.bin")
    R = read_kernel(tmp_path / "k.bin")
    assert R.meta["name"] == "k" and R.meta["nu"] == 8 and R.meta["claimed_support"] == (-2.0, 3.0)
    assert np.allclose(R.symbol, K.symbol)
