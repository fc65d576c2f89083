"""Phase gradient estimated from the log-magnitude of Gabor coefficients.

For a Gaussian window ``exp(-pi l^2 / gamma)`` the partial derivatives of the
phase follow from those of the log-magnitude.  Expressed per lattice step
(one frequency channel, one time hop) they become

    fgrad = -(gamma / (a M)) * d/dn  log|c|
    tgrad =  (a M / gamma)   * d/dm  log|c|  +  2 pi a m / M

with unit-step central differences.  ``gamma = a M`` is the window matched to
the lattice, for which both prefactors are exactly one.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gabor import GaborParams

DEFAULT_FLOOR = 1e-10


@dataclass
class LogMagnitude:
    values: np.ndarray
    floor: float


@dataclass
class PhaseGradient:
    """Phase increments per frequency step (``fgrad``) and per time step (``tgrad``)."""

    fgrad: np.ndarray
    tgrad: np.ndarray

    @property
    def shape(self):
        return self.fgrad.shape


def log_magnitude(s, rel_floor: float = DEFAULT_FLOOR) -> LogMagnitude:
    """Elementwise ``log(max(s, rel_floor * max(s)))``."""
    s = np.asarray(s, dtype=float)
    if not 0 < rel_floor < 1:
        raise ValueError("rel_floor must lie in (0, 1)")
    if np.any(s < 0) or not np.all(np.isfinite(s)):
        raise ValueError("magnitudes must be finite and non-negative")
    peak = s.max() if s.size else 0.0
    if peak <= 0:
        raise ValueError("all-zero magnitude grid has no reference level")
    return LogMagnitude(np.log(np.maximum(s, rel_floor * peak)), rel_floor)


def _layout(rows: int, p: GaborParams, real: bool | None) -> bool:
    if real is None:
        if rows == p.M_half and rows != p.M:
            return True
        if rows == p.M:
            return False
        raise ValueError(f"grid with {rows} rows matches neither M={p.M} nor M//2+1={p.M_half}")
    expected = p.M_half if real else p.M
    if rows != expected:
        raise ValueError(f"grid has {rows} rows, expected {expected}")
    return real


def time_difference(x: np.ndarray) -> np.ndarray:
    """Central difference along frames, periodic in time."""
    if x.shape[1] < 2:
        return np.zeros_like(x)
    return (np.roll(x, -1, axis=1) - np.roll(x, 1, axis=1)) / 2


def frequency_difference(x: np.ndarray, periodic: bool) -> np.ndarray:
    """Central difference along channels.

    Full grids wrap around; half grids use one-sided differences on the
    first and last channel.
    """
    if x.shape[0] < 2:
        return np.zeros_like(x)
    if periodic:
        return (np.roll(x, -1, axis=0) - np.roll(x, 1, axis=0)) / 2
    d = np.empty_like(x)
    d[1:-1] = (x[2:] - x[:-2]) / 2
    d[0] = x[1] - x[0]
    d[-1] = x[-1] - x[-2]
    return d


def scaled_phase_gradient(
    slog: LogMagnitude | np.ndarray,
    p: GaborParams,
    gamma: float | None = None,
    real: bool | None = None,
) -> PhaseGradient:
    """Pre-scaled phase gradient on the lattice.

    Parameters
    ----------
    slog : LogMagnitude or ndarray
        Log-magnitude, either the full ``(M, N)`` grid or the half
        ``(M // 2 + 1, N)`` grid of a real signal.
    p : GaborParams
    gamma : float, optional
        Gaussian width ``lambda * L`` in samples^2.  Defaults to ``a * M``.
    real : bool, optional
        Force the half/full interpretation instead of inferring it from shape.
    """
    values = slog.values if isinstance(slog, LogMagnitude) else np.asarray(slog, dtype=float)
    if values.ndim != 2 or values.shape[1] != p.N:
        raise ValueError(f"log-magnitude grid shape {values.shape} does not fit N={p.N}")
    half = _layout(values.shape[0], p, real)
    if gamma is None:
        gamma = float(p.a * p.M)
    if not gamma > 0:
        raise ValueError("gamma must be positive")

    scale = gamma / (p.a * p.M)
    fgrad = -scale * time_difference(values)
    m = np.arange(values.shape[0])[:, None]
    tgrad = frequency_difference(values, periodic=not half) / scale + 2 * np.pi * p.a * m / p.M
    return PhaseGradient(fgrad, tgrad)
