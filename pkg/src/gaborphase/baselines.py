"""Reference reconstructions: single pass spectrogram inversion and Griffin-Lim."""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .gabor import GaborParams, Window
from .metrics import project, spectral_convergence, to_db, full_grid
from .pghi import PhaseEstimate


@dataclass
class IterTrace:
    c_db: list = field(default_factory=list)
    seconds: list = field(default_factory=list)

    def __len__(self):
        return len(self.c_db)


@dataclass
class GlaConfig:
    """``init`` is ``'zero'``, ``'random'`` or a phase grid / PhaseEstimate (warm start)."""

    max_iter: int = 100
    alpha: float = 0.99
    init: object = "zero"
    seed: int = 0

    def __post_init__(self):
        if self.max_iter < 0:
            raise ValueError("max_iter must be non-negative")
        if not 0 <= self.alpha < 1:
            raise ValueError("alpha must lie in [0, 1)")


# -- SPSI -------------------------------------------------------------------


@njit(cache=True)
def _spsi_kernel(logs, s, a, M, out):
    rows, ncols = s.shape
    phase = np.zeros(rows)
    for n in range(ncols):
        for m in range(1, rows - 1):
            if s[m, n] > s[m - 1, n] and s[m, n] > s[m + 1, n]:
                al = logs[m - 1, n]
                be = logs[m, n]
                ga = logs[m + 1, n]
                denom = al - 2.0 * be + ga
                shift = 0.5 * (al - ga) / denom if denom != 0.0 else 0.0
                peak_phase = phase[m] + 2.0 * np.pi * a * (m + shift) / M
                phase[m] = peak_phase
                k = m - 1
                while k >= 0 and s[k, n] < s[k + 1, n]:
                    phase[k] = peak_phase
                    k -= 1
                k = m + 1
                while k < rows and s[k, n] < s[k - 1, n]:
                    phase[k] = peak_phase
                    k += 1
        out[:, n] = phase


def spsi(s, p: GaborParams) -> PhaseEstimate:
    """Frame-by-frame phase from peak-picked instantaneous frequencies.

    Each local maximum of a frame gets a sub-bin frequency by a parabola
    through the log-magnitudes of the peak and its neighbours; its phase is
    advanced by ``2 pi a m0 / M`` from the previous frame and copied to the
    bins sloping down to the neighbouring valleys.  Untouched bins keep the
    phase they last had.
    """
    s = np.asarray(s, dtype=float)
    if s.ndim != 2 or s.shape[1] != p.N:
        raise ValueError(f"magnitude grid shape {s.shape} does not fit N={p.N}")
    if np.any(s < 0):
        raise ValueError("magnitudes must be non-negative")
    # frame-relative log: independent of overall gain and of later frames
    peak = s.max(axis=0, keepdims=True)
    rel = np.divide(s, peak, out=np.zeros_like(s), where=peak > 0)
    logs = np.log(np.maximum(rel, 1e-300))
    out = np.empty(s.shape)
    _spsi_kernel(logs, s, float(p.a), float(p.M), out)
    return PhaseEstimate(out, np.zeros(s.shape, bool))


# -- Griffin-Lim ------------------------------------------------------------


def _initial_phase(s: np.ndarray, cfg: GlaConfig) -> np.ndarray:
    init = cfg.init
    if isinstance(init, PhaseEstimate):
        init = init.phase
    if isinstance(init, str):
        if init == "zero":
            return np.zeros(s.shape)
        if init == "random":
            return np.random.default_rng(cfg.seed).uniform(0, 2 * np.pi, s.shape)
        raise ValueError(f"unknown init {init!r}")
    init = np.asarray(init, dtype=float)
    if init.shape != s.shape:
        raise ValueError("warm-start phase shape does not match magnitude")
    return init


def _gla_loop(s, g, gd, p, cfg: GlaConfig, alpha: float):
    s = np.asarray(s, dtype=float)
    s_full = np.abs(full_grid(s, p))
    s_norm = np.linalg.norm(s_full)
    c = s * np.exp(1j * _initial_phase(s, cfg))
    t = project(c, g, gd, p)
    t_prev = t
    trace = IterTrace()
    for _ in range(cfg.max_iter):
        tick = time.perf_counter()
        y = t + alpha * (t - t_prev) if alpha else t
        c = s * np.exp(1j * np.angle(y))
        t_prev = t
        t = project(c, g, gd, p)
        err = np.linalg.norm(s_full - np.abs(full_grid(t, p))) / s_norm
        trace.c_db.append(to_db(err))
        trace.seconds.append(time.perf_counter() - tick)
    return PhaseEstimate(np.angle(c), np.zeros(s.shape, bool)), trace


def gla(s, g: Window, gd: Window, p: GaborParams, cfg: GlaConfig | None = None):
    """Griffin-Lim: alternate between magnitude and consistency constraints.

    Returns the phase of the last magnitude-constrained iterate together with
    the spectral convergence (dB) after every iteration.  ``cfg.alpha`` is
    ignored.
    """
    cfg = cfg or GlaConfig()
    return _gla_loop(s, g, gd, p, cfg, 0.0)


def fgla(s, g: Window, gd: Window, p: GaborParams, cfg: GlaConfig | None = None):
    """Griffin-Lim with momentum ``cfg.alpha`` on the projected coefficients."""
    cfg = cfg or GlaConfig()
    return _gla_loop(s, g, gd, p, cfg, cfg.alpha)


def zero_phase_convergence(s, g: Window, gd: Window, p: GaborParams) -> float:
    """Spectral convergence (dB) of the magnitude with zero phase."""
    return spectral_convergence(s, np.asarray(s, dtype=complex), g, gd, p)[1]
