"""Discrete Gabor transform on a separable lattice.

Coefficient grids are ``(M, N)`` arrays: frequency channel ``m`` indexes rows,
time frame ``n`` indexes columns.  The phase convention is frequency-invariant
(the modulation is referenced to the window centre), i.e.

    c(m, n) = sum_l f(l) conj(g(l - n a)) exp(-2i pi m (l - n a) / M)

with ``l - n a`` taken modulo ``L``.  Windows are stored as length-``L``
vectors centred at index 0, so a window of support ``s`` occupies the first
and last ``s // 2`` entries.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

WINDOW_KINDS = ("gauss", "truncgauss", "hann", "hamming")

# Relative magnitude below which window samples are skipped by the FFT path.
COMPACT_THRESHOLD = 1e-20

# Reject frames whose frame operator has min/max eigenvalue below this.
FRAME_TOLERANCE = 1e-10

# Dual samples below this fraction of the peak are round-off from the
# spectral solve (its floor sits near 1e-16) and are set to zero.
DUAL_CUTOFF = 1e-14


class FrameError(ValueError):
    """The window/lattice pair does not form a numerically invertible frame."""


@dataclass(frozen=True)
class GaborParams:
    """Lattice with signal length ``L``, time hop ``a`` and ``M`` channels."""

    L: int
    a: int
    M: int

    def __post_init__(self):
        for name in ("L", "a", "M"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or v <= 0:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.L % self.a:
            raise ValueError(f"hop a={self.a} does not divide L={self.L}")
        if self.L % self.M:
            raise ValueError(f"M={self.M} does not divide L={self.L}")
        if self.M < self.a:
            raise ValueError(f"redundancy M/a={self.M / self.a:g} is below 1")

    @property
    def N(self) -> int:
        return self.L // self.a

    @property
    def b(self) -> int:
        return self.L // self.M

    @property
    def redundancy(self) -> float:
        return self.M / self.a

    @property
    def M_half(self) -> int:
        """Number of channels kept for real signals."""
        return self.M // 2 + 1

    @classmethod
    def for_length(cls, length: int, a: int, M: int) -> "GaborParams":
        """Smallest admissible lattice covering ``length`` samples."""
        step = math.lcm(a, M)
        L = max(step, -(-length // step) * step)
        return cls(L, a, M)


@dataclass(eq=False)
class Window:
    """Real window of length ``L`` centred at index 0 (zero delay)."""

    samples: np.ndarray
    kind: str
    lam: float | None = None
    support: int | None = None
    dual: bool = False
    _compact: tuple | None = field(default=None, repr=False)

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=float)
        if self.samples.ndim != 1:
            raise ValueError("window samples must be a vector")
        if not np.all(np.isfinite(self.samples)) or not np.any(self.samples):
            raise ValueError("window must be finite and not identically zero")
        if self.support is None:
            self.support = len(self.samples)

    @property
    def L(self) -> int:
        return len(self.samples)

    @property
    def gamma(self) -> float | None:
        """Time-frequency ratio times L, i.e. the Gaussian width in samples^2."""
        return None if self.lam is None else self.lam * self.L

    def compact(self) -> tuple[int, np.ndarray]:
        """``(start, values)``: the significant samples at offsets ``start, start+1, ...``."""
        if self._compact is None:
            self._compact = _compact(self.samples)
        return self._compact


def _signed_offsets(L: int) -> np.ndarray:
    idx = np.arange(L)
    return np.where(idx <= L // 2, idx, idx - L)


def _compact(g: np.ndarray, threshold: float = COMPACT_THRESHOLD):
    L = len(g)
    keep = np.abs(g) > threshold * np.abs(g).max()
    K = int(np.abs(_signed_offsets(L)[keep]).max())
    if 2 * K + 1 >= L:
        return 0, g.copy()
    return -K, g[np.arange(-K, K + 1) % L]


def periodized_gaussian(L: int, lam: float, ks=(-1, 0)) -> np.ndarray:
    """Sampled, periodized Gaussian including its ``(lam L / 2)^(-1/4)`` factor.

    ``ks`` lists the period shifts that are summed; two terms suffice whenever
    the Gaussian is short compared to ``L``.
    """
    if lam <= 0:
        raise ValueError("lambda must be positive")
    l = np.arange(L, dtype=float)
    gamma = lam * L
    acc = np.zeros(L)
    for k in ks:
        acc += np.exp(-np.pi * (l + k * L) ** 2 / gamma)
    return (gamma / 2) ** -0.25 * acc


def _gate(L: int, support: int) -> np.ndarray:
    # |offset| < support/2 keeps the window symmetric about index 0
    return (np.abs(_signed_offsets(L)) < support / 2).astype(float)


def make_window(
    kind: str,
    params: GaborParams,
    support: int | None = None,
    lam: float | None = None,
    *,
    wide_periodization: bool = False,
) -> Window:
    """Build a peak-normalised, zero-delay analysis window of length ``L``.

    Parameters
    ----------
    kind : {'gauss', 'truncgauss', 'hann', 'hamming'}
    params : GaborParams
    support : int, optional
        Truncation length for ``truncgauss`` and length of the cosine windows.
        Defaults to ``L`` for ``gauss`` and ``M`` otherwise.
    lam : float, optional
        Time-frequency ratio of the Gaussian kinds; defaults to ``a M / L``.
        For cosine windows it is only recorded (see ``fit_gamma`` for an
        equivalent Gaussian width).
    wide_periodization : bool
        Sum the Gaussian over nine periods instead of two (validation only).
    """
    L = params.L
    if kind not in WINDOW_KINDS:
        raise ValueError(f"unknown window kind {kind!r}; expected one of {WINDOW_KINDS}")
    if support is None:
        support = L if kind == "gauss" else params.M
    if not 0 < support <= L:
        raise ValueError(f"support must be in (0, L={L}], got {support}")
    if lam is None:
        lam = params.a * params.M / L
    if lam <= 0:
        raise ValueError("lambda must be positive")

    if kind in ("gauss", "truncgauss"):
        ks = range(-4, 5) if wide_periodization else (-1, 0)
        g = periodized_gaussian(L, lam, ks)
        if kind == "truncgauss":
            g = g * _gate(L, support)
    else:
        x = 2 * np.pi * _signed_offsets(L) / support
        a0 = 0.5 if kind == "hann" else 0.54
        g = (a0 + (1 - a0) * np.cos(x)) * _gate(L, support)
    g = g / g[0]
    return Window(g, kind, lam=lam, support=support)


def width_at_height(gamma: float, h: float) -> float:
    """Width in samples of a Gaussian ``exp(-pi l^2 / gamma)`` at relative height ``h``."""
    if not 0 < h < 1:
        raise ValueError("h must lie in (0, 1)")
    return math.sqrt(-4 * math.log(h) / math.pi * gamma)


def gamma_from_width(width: float, h: float) -> float:
    """Inverse of :func:`width_at_height`."""
    return width**2 * math.pi / (-4 * math.log(h))


def fit_gamma(g: Window) -> float:
    """Width ``gamma`` of the Gaussian ``exp(-pi l^2 / gamma)`` closest to ``g``.

    Least-squares fit over the window's non-zero samples; used to apply the
    Gaussian phase-magnitude relations to other windows.
    """
    k = _signed_offsets(g.L).astype(float)
    on = g.samples != 0
    k, w = k[on], g.samples[on] / g.samples[0]
    span = max(float(np.abs(k).max()), 1.0)

    def cost(log_gamma):
        return np.sum((w - np.exp(-np.pi * k**2 / np.exp(log_gamma))) ** 2)

    bounds = (0.0, np.log(100 * g.L * span))
    res = minimize_scalar(cost, bounds=bounds, method="bounded", options={"xatol": 1e-10})
    return float(np.exp(res.x))


# -- transform --------------------------------------------------------------


def _positions(start: int, width: int, a: int, N: int, L: int) -> np.ndarray:
    return (np.arange(N)[:, None] * a + start + np.arange(width)[None, :]) % L


def _check_window(g: Window, L: int):
    if g.L != L:
        raise ValueError(f"window length {g.L} does not match L={L}")


# elements per temporary (N, k*M) block; long windows are processed in slices
_BLOCK_BUDGET = 1 << 22


def _slices(P: int, N: int, M: int):
    k = max(1, _BLOCK_BUDGET // max(1, N * M))
    return [(j, min(P, j + k)) for j in range(0, P, k)]


def _frames(f: np.ndarray, g: Window, a: int, M: int, N: int) -> np.ndarray:
    """Windowed, folded frames of shape (N, M); frame ``n`` indexed by offset mod M."""
    start, vals = g.compact()
    P = -(-len(vals) // M)
    gpad = np.zeros(P * M)
    gpad[: len(vals)] = vals
    z = np.zeros((N, M), dtype=np.result_type(f, float))
    for j0, j1 in _slices(P, N, M):
        pos = _positions(start + j0 * M, (j1 - j0) * M, a, N, len(f))
        x = f[pos] * gpad[j0 * M : j1 * M]
        z += x.reshape(N, j1 - j0, M).sum(axis=1)
    return np.roll(z, start, axis=1)


def _as_signal(f, L: int) -> np.ndarray:
    f = np.asarray(f)
    if f.ndim != 1 or len(f) != L:
        raise ValueError(f"signal must be a vector of length L={L}, got shape {f.shape}")
    return f


def dgt(f, g: Window, p: GaborParams) -> np.ndarray:
    """Full ``(M, N)`` Gabor coefficients of a real or complex signal.

    Real input is transformed as a half spectrum and mirrored, so conjugate
    symmetry holds exactly.
    """
    f = _as_signal(f, p.L)
    _check_window(g, p.L)
    z = _frames(f, g, p.a, p.M, p.N)
    if not np.iscomplexobj(z):
        return expand_half(np.fft.rfft(z, axis=1).T, p.M)
    return np.fft.fft(z, axis=1).T


def dgtreal(f, g: Window, p: GaborParams) -> np.ndarray:
    """Non-negative-frequency half ``(M // 2 + 1, N)`` of the coefficients of a real signal."""
    f = _as_signal(f, p.L)
    if np.iscomplexobj(f):
        raise ValueError("dgtreal expects a real signal")
    _check_window(g, p.L)
    return np.fft.rfft(_frames(f, g, p.a, p.M, p.N), axis=1).T


def _overlap_add(y: np.ndarray, gd: Window, a: int, M: int, L: int) -> np.ndarray:
    N = y.shape[0]
    start, vals = gd.compact()
    P = -(-len(vals) // M)
    gpad = np.zeros(P * M)
    gpad[: len(vals)] = vals
    y = np.roll(y, -start, axis=1)
    out = np.zeros(L, dtype=y.dtype)
    for j0, j1 in _slices(P, N, M):
        w = np.tile(y, (1, j1 - j0)) * gpad[j0 * M : j1 * M]
        pos = _positions(start + j0 * M, (j1 - j0) * M, a, N, L).ravel()
        out += np.bincount(pos, w.real.ravel(), L)
        if np.iscomplexobj(w):
            out += 1j * np.bincount(pos, w.imag.ravel(), L)
    return out


def _check_grid(c: np.ndarray, rows: int, p: GaborParams):
    if c.shape != (rows, p.N):
        raise ValueError(f"coefficient grid has shape {c.shape}, expected {(rows, p.N)}")


def idgt(c, gd: Window, p: GaborParams) -> np.ndarray:
    """Synthesis from a full ``(M, N)`` grid; returns a complex signal."""
    c = np.asarray(c)
    _check_grid(c, p.M, p)
    _check_window(gd, p.L)
    y = np.fft.ifft(c.T, axis=1) * p.M
    return _overlap_add(y, gd, p.a, p.M, p.L)


def idgtreal(c, gd: Window, p: GaborParams) -> np.ndarray:
    """Real synthesis from a half grid, treating it as conjugate-symmetric."""
    c = np.asarray(c)
    _check_grid(c, p.M_half, p)
    _check_window(gd, p.L)
    y = np.fft.irfft(c.T, n=p.M, axis=1) * p.M
    return _overlap_add(y, gd, p.a, p.M, p.L)


def expand_half(c: np.ndarray, M: int) -> np.ndarray:
    """Fill negative frequencies of a half grid with conjugate mirrors."""
    half = M // 2 + 1
    if c.shape[0] != half:
        raise ValueError(f"half grid must have {half} rows, got {c.shape[0]}")
    full = np.empty((M,) + c.shape[1:], dtype=complex)
    full[:half] = c
    full[half:] = np.conj(c[1 : M - half + 1][::-1])
    return full


# -- dual window ------------------------------------------------------------


def _shift_matrix(g: np.ndarray, p: GaborParams) -> np.ndarray:
    """u[r, n] = g((r - n a) mod L) for r < M."""
    r = np.arange(p.M)[:, None]
    n = np.arange(p.N)[None, :]
    return g[(r - n * p.a) % p.L]


def frame_operator_spectrum(g: Window, p: GaborParams) -> np.ndarray:
    """Eigenvalues of the frame operator, shape ``(M, b)``.

    Needs ``a | M``: the operator then splits into ``M`` circulant blocks of
    size ``b = L / M`` coupling the samples congruent modulo ``M``.
    """
    _check_window(g, p.L)
    if p.M % p.a:
        raise ValueError("block-circulant path needs a to divide M")
    q = p.M // p.a
    u = _shift_matrix(g.samples, p)
    U = np.fft.fft(u, axis=1)
    autocorr = np.fft.ifft(np.abs(U) ** 2, axis=1).real  # lag in n
    alpha = p.M * autocorr[:, :: q][:, : p.b]
    return np.fft.fft(alpha, axis=1).real


def _dense_frame_operator(g: np.ndarray, p: GaborParams) -> np.ndarray:
    l = np.arange(p.L)
    G = g[(l[None, :] - np.arange(p.N)[:, None] * p.a) % p.L]  # (N, L)
    S = p.M * (G.T @ G)
    same = (l[:, None] - l[None, :]) % p.M == 0
    return np.where(same, S, 0.0)


def _check_bounds(eig: np.ndarray):
    lo, hi = eig.min(), eig.max()
    if hi <= 0 or lo < FRAME_TOLERANCE * hi:
        raise FrameError(
            f"frame operator is not invertible (eigenvalue ratio {lo / hi if hi > 0 else 0:.3g})"
        )


def canonical_dual(g: Window, p: GaborParams) -> Window:
    """Canonical dual window ``(F_g F_g^*)^-1 g``.

    Uses the block-circulant structure when ``a`` divides ``M``; otherwise falls
    back to a dense solve, which is limited to short signals.
    """
    _check_window(g, p.L)
    if p.M % p.a == 0:
        eig = frame_operator_spectrum(g, p)
        _check_bounds(eig)
        # samples congruent to r mod M form the circulant block r
        blocks = g.samples.reshape(p.b, p.M).T
        gd = np.fft.ifft(np.fft.fft(blocks, axis=1) / eig, axis=1).real
        gd = gd.T.ravel()
    else:
        if p.L > 4096:
            raise ValueError("dense dual computation limited to L <= 4096 when a does not divide M")
        S = _dense_frame_operator(g.samples, p)
        _check_bounds(np.linalg.eigvalsh(S))
        gd = np.linalg.solve(S, g.samples)
    gd[np.abs(gd) <= DUAL_CUTOFF * np.abs(gd).max()] = 0.0
    return Window(gd, g.kind, lam=g.lam, support=g.support, dual=not g.dual)


def dgtreal_hop(f, g: Window, a: int, M: int) -> np.ndarray:
    """Half-spectrum analysis of ``f`` with hop ``a`` independent of ``g``'s lattice.

    ``len(f)`` must be a multiple of ``a``; the window must be compact enough
    not to wrap around ``f``.  Used when analysis and synthesis hops differ.
    """
    f = np.asarray(f, dtype=float)
    if f.ndim != 1 or len(f) % a:
        raise ValueError(f"signal length {len(f)} is not a multiple of a={a}")
    start, vals = g.compact()
    if len(vals) > len(f) or (start == 0 and len(vals) == g.L != len(f)):
        raise ValueError("window does not fit inside the signal without wrapping")
    return np.fft.rfft(_frames(f, g, a, M, len(f) // a), axis=1).T
