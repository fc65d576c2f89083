"""Error measures that do not depend on a global phase shift."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .gabor import GaborParams, Window, dgt, dgtreal, expand_half, idgt, idgtreal

# Reported in place of -inf dB for an exact match.
DB_FLOOR = -400.0


def to_db(ratio: float) -> float:
    return DB_FLOOR if ratio <= 0 else max(DB_FLOOR, 20 * math.log10(ratio))


@dataclass
class MetricReport:
    E: float = math.nan
    E_dB: float = math.nan
    C: float = math.nan
    C_dB: float = math.nan
    inconsistency: float = math.nan

    def as_dict(self) -> dict:
        return asdict(self)


def relative_error(x, y) -> tuple[float, float]:
    """``||x - y|| / ||x||`` and its value in dB."""
    x = np.asarray(x)
    y = np.asarray(y)
    if x.shape != y.shape:
        raise ValueError(f"shape mismatch {x.shape} vs {y.shape}")
    ref = np.linalg.norm(x)
    if ref == 0:
        raise ValueError("reference has zero norm")
    e = float(np.linalg.norm(x - y) / ref)
    return e, to_db(e)


def _is_half(c: np.ndarray, p: GaborParams) -> bool:
    if c.shape == (p.M, p.N):
        return False
    if c.shape == (p.M_half, p.N):
        return True
    raise ValueError(f"grid shape {c.shape} fits neither the full nor the half lattice")


def project(c, g: Window, gd: Window, p: GaborParams) -> np.ndarray:
    """Orthogonal projection onto consistent coefficients, ``dgt(idgt(c))``.

    A half grid is synthesised as a real signal and analysed back to a half
    grid.
    """
    c = np.asarray(c)
    if _is_half(c, p):
        return dgtreal(idgtreal(c, gd, p), g, p)
    return dgt(idgt(c, gd, p), g, p)


def full_grid(c, p: GaborParams) -> np.ndarray:
    c = np.asarray(c)
    return expand_half(c, p.M) if _is_half(c, p) else c


def spectral_convergence(s, c_hat, g: Window, gd: Window, p: GaborParams) -> tuple[float, float]:
    """Distance between the target magnitude and that of the projected coefficients."""
    s = np.asarray(s, dtype=float)
    c_hat = np.asarray(c_hat)
    if s.shape != c_hat.shape:
        raise ValueError("target magnitude and coefficients differ in shape")
    proj = np.abs(project(c_hat, g, gd, p))
    return relative_error(np.abs(full_grid(s, p)), np.abs(full_grid(proj, p)))


def inconsistency(c_hat, g: Window, gd: Window, p: GaborParams) -> float:
    """Normalised energy lost by the projection, ``E(c, P c) ** 2``."""
    c_hat = np.asarray(c_hat)
    proj = project(c_hat, g, gd, p)
    e, _ = relative_error(full_grid(c_hat, p), full_grid(proj, p))
    return e**2


def signal_snr_db(f, f_hat) -> float:
    """Signal-domain SNR; sensitive to per-coefficient phase shifts, report only."""
    return -relative_error(f, f_hat)[1]
