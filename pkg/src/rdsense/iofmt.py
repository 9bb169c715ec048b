"""Binary file formats: raw pulse blocks and range-Doppler map dumps.

Both carry a 64-byte little-endian self-describing header so files can be
read without the producing config.
"""

from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .rdmap import RangeDopplerMap

PULSE_MAGIC = b"RDPULSE\x00"
RDMAP_MAGIC = b"RDMAPV1\x00"
FORMAT_VERSION = 1

# magic(8s) version(u32) sequence_length(u32) pulse_count(u64) sample_rate(f8)
_PULSE_HDR = struct.Struct("<8sIIQd")
# magic(8s) version(u32) rows(u32) cols(u32) pad(u32) frame_index(u64)
# frame_time(f8) range_bin(f8) velocity_bin(f8)
_RDMAP_HDR = struct.Struct("<8sIIIIQddd")

HEADER_SIZE = 64


def _pad(header: bytes) -> bytes:
    return header + b"\x00" * (HEADER_SIZE - len(header))


def write_pulse_file(path: str | Path, blocks: np.ndarray, sample_rate: float) -> None:
    """Interleaved float32 I/Q, one block per pulse, after a 64-byte header."""
    blocks = np.atleast_2d(np.asarray(blocks))
    pulses, n = blocks.shape
    with open(path, "wb") as fh:
        fh.write(_pad(_PULSE_HDR.pack(PULSE_MAGIC, FORMAT_VERSION, n, pulses, sample_rate)))
        iq = np.empty((pulses, 2 * n), dtype="<f4")
        iq[:, 0::2] = blocks.real
        iq[:, 1::2] = blocks.imag
        fh.write(iq.tobytes())


def append_pulses(fh, blocks: np.ndarray) -> int:
    """Append blocks to an already-open pulse file; returns pulses written."""
    blocks = np.atleast_2d(np.asarray(blocks))
    iq = np.empty((blocks.shape[0], 2 * blocks.shape[1]), dtype="<f4")
    iq[:, 0::2] = blocks.real
    iq[:, 1::2] = blocks.imag
    fh.write(iq.tobytes())
    return blocks.shape[0]


def write_pulse_header(fh, sequence_length: int, pulse_count: int, sample_rate: float) -> None:
    fh.write(_pad(_PULSE_HDR.pack(PULSE_MAGIC, FORMAT_VERSION, sequence_length,
                                  pulse_count, sample_rate)))


def read_pulse_file(path: str | Path) -> tuple[np.ndarray, float]:
    """Returns (blocks complex64 (pulses, n), sample_rate)."""
    raw = Path(path).read_bytes()
    magic, version, n, pulses, fs = _PULSE_HDR.unpack(raw[:_PULSE_HDR.size])
    if magic != PULSE_MAGIC:
        raise ValueError(f"{path}: not a pulse file (bad magic)")
    if version != FORMAT_VERSION:
        raise ValueError(f"{path}: unsupported version {version}")
    iq = np.frombuffer(raw[HEADER_SIZE:], dtype="<f4").reshape(pulses, 2 * n)
    return (iq[:, 0::2] + 1j * iq[:, 1::2]).astype(np.complex64), fs


def write_rdmap(path: str | Path, rd: RangeDopplerMap) -> None:
    """Float32 dB grid (doppler rows x range cols) after a 64-byte header."""
    with open(path, "wb") as fh:
        fh.write(_pad(_RDMAP_HDR.pack(
            RDMAP_MAGIC, FORMAT_VERSION, rd.n_doppler, rd.n_range, 0,
            rd.frame_index, rd.frame_time, rd.range_bin, rd.velocity_bin,
        )))
        fh.write(rd.power_db.astype("<f4").tobytes())


def read_rdmap(path: str | Path) -> RangeDopplerMap:
    raw = Path(path).read_bytes()
    magic, version, rows, cols, _, fidx, ftime, rbin, vbin = _RDMAP_HDR.unpack(raw[:_RDMAP_HDR.size])
    if magic != RDMAP_MAGIC:
        raise ValueError(f"{path}: not a range-Doppler dump (bad magic)")
    grid = np.frombuffer(raw[HEADER_SIZE:], dtype="<f4").reshape(rows, cols).astype(float)
    return RangeDopplerMap(10.0 ** (grid / 10.0), rbin, vbin, fidx, ftime)


def write_rdmap_png(path: str | Path, rd: RangeDopplerMap,
                    db_min: float = -60.0, db_max: float = 0.0) -> None:
    """Grayscale quick-look image of the map."""
    from PIL import Image

    g = np.clip((rd.power_db - db_min) / (db_max - db_min), 0.0, 1.0)
    Image.fromarray((g * 255).astype(np.uint8), mode="L").save(path)
