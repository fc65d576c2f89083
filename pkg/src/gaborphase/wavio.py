"""WAV reading/writing and the portable grid format."""

from __future__ import annotations

import csv
import struct
import warnings
from pathlib import Path

import numpy as np
from scipy.io import wavfile


class WavError(OSError):
    pass


def load_wav(path, max_seconds: float | None = None) -> tuple[np.ndarray, int]:
    """Read a PCM16 or float32 WAV as floats in [-1, 1], first channel only."""
    path = Path(path)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", wavfile.WavFileWarning)
            rate, data = wavfile.read(path)
    except FileNotFoundError:
        raise
    except (ValueError, EOFError, struct.error) as exc:
        raise WavError(f"{path}: malformed or unsupported WAV ({exc})") from exc
    if data.ndim == 2:
        data = data[:, 0]
    if data.dtype == np.int16:
        x = data.astype(float) / 32768.0
    elif data.dtype == np.float32 or data.dtype == np.float64:
        x = data.astype(float)
    else:
        raise WavError(f"{path}: unsupported sample format {data.dtype}")
    if max_seconds is not None:
        x = x[: int(round(max_seconds * rate))]
    if x.size == 0:
        raise WavError(f"{path}: no audio samples")
    return x, int(rate)


def save_wav(path, signal, rate: int) -> None:
    """Write a PCM16 WAV, clipping to [-1, 1)."""
    if np.iscomplexobj(signal):
        raise ValueError("cannot write a complex signal")
    x = np.asarray(signal, dtype=float)
    pcm = np.clip(np.round(x * 32768.0), -32768, 32767).astype("<i2")
    wavfile.write(Path(path), int(rate), pcm)


# Grid files: 16-byte header (uint64 M, uint64 N, little-endian), then
# M * N little-endian float64 values in row-major order.
_HEADER = struct.Struct("<QQ")


def write_grid(path, grid) -> None:
    grid = np.asarray(grid, dtype="<f8")
    if grid.ndim != 2:
        raise ValueError("grid must be 2-D")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(*grid.shape))
        fh.write(np.ascontiguousarray(grid).tobytes())


def read_grid(path) -> np.ndarray:
    raw = Path(path).read_bytes()
    if len(raw) < _HEADER.size:
        raise WavError(f"{path}: truncated grid header")
    M, N = _HEADER.unpack_from(raw)
    body = raw[_HEADER.size :]
    if len(body) != 8 * M * N:
        raise WavError(f"{path}: expected {M}x{N} values, found {len(body) // 8}")
    return np.frombuffer(body, dtype="<f8").reshape(M, N).copy()


def write_grid_csv(path, grid) -> None:
    grid = np.asarray(grid, dtype=float)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        for row in grid:
            w.writerow(["" if np.isnan(v) else repr(float(v)) for v in row])
