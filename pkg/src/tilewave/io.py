"""Signal/kernel serialization: CSV, the ``TWSIG1`` binary container, JSON sidecars."""
from __future__ import annotations

import csv
import json
import struct
from pathlib import Path

import numpy as np

from .grid import GridSpec, Kernel, Signal

MAGIC = b"TWSIG1"


def write_signal_csv(f: Signal, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["index", "re", "im"])
        for i, v in enumerate(f.samples):
            w.writerow([i, repr(float(v.real)), repr(float(v.imag))])


def read_signal_csv(path) -> Signal:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    L = len(rows)
    m = L.bit_length() - 1
    if L == 0 or 1 << m != L:
        raise ValueError(f"{path}: sample count {L} is not a power of two")
    vals = np.zeros(L, dtype=complex)
    for r in rows:
        vals[int(r["index"])] = float(r["re"]) + 1j * float(r["im"])
    return Signal(GridSpec(m), vals)


def signal_to_bytes(f: Signal) -> bytes:
    inter = np.empty(2 * f.grid.L, dtype="<f8")
    inter[0::2] = f.samples.real
    inter[1::2] = f.samples.imag
    return MAGIC + struct.pack("<I", f.grid.m) + inter.tobytes()


def signal_from_bytes(buf: bytes) -> Signal:
    if buf[:6] != MAGIC:
        raise ValueError("not a TWSIG1 container")
    (m,) = struct.unpack("<I", buf[6:10])
    grid = GridSpec(int(m))
    data = np.frombuffer(buf[10:], dtype="<f8")
    if data.size != 2 * grid.L:
        raise ValueError(f"payload has {data.size} floats, expected {2 * grid.L}")
    return Signal(grid, data[0::2] + 1j * data[1::2])


def write_signal_bin(f: Signal, path) -> None:
    Path(path).write_bytes(signal_to_bytes(f))


def read_signal_bin(path) -> Signal:
    return signal_from_bytes(Path(path).read_bytes())


def kernel_sidecar(K: Kernel) -> dict:
    sup = K.meta.get("claimed_support")
    lo = hi = None
    if sup is not None:
        flat = np.asarray(sup, dtype=float).ravel()
        lo, hi = float(flat.min()), float(flat.max())
    return {
        "name": K.name,
        "nu": K.meta.get("nu"),
        "support_lo": lo,
        "support_hi": hi,
        "C0": K.meta.get("C0"),
        "C1": K.meta.get("C1"),
    }


def write_kernel(K: Kernel, path) -> None:
    """Write ``path`` (TWSIG1 spatial samples) and ``path + '.json'`` metadata."""
    write_signal_bin(Signal(K.grid, K.spatial), path)
    with open(str(path) + ".json", "w") as fh:
        json.dump(kernel_sidecar(K), fh, indent=2, sort_keys=True)


def read_kernel(path) -> Kernel:
    sig = read_signal_bin(path)
    meta = {}
    side = Path(str(path) + ".json")
    if side.exists():
        raw = json.loads(side.read_text())
        meta = {k: v for k, v in raw.items() if v is not None and k not in ("support_lo", "support_hi")}
        if raw.get("support_lo") is not None:
            meta["claimed_support"] = (raw["support_lo"], raw["support_hi"])
    return Kernel.from_spatial(sig.grid, sig.samples, meta)
