"""Phase gradient heap integration.

The phase is integrated from the pre-scaled gradient with the trapezoidal
rule, always continuing from the largest coefficient reached so far.  Cells
below ``tol * max(s)`` receive uniformly random phase; every connected region
above the tolerance ("island") starts from its own maximum at phase 0.

Grids are integrated in frame-major order: the flat index of cell ``(m, n)``
is ``n * rows + m``.  Equal magnitudes are popped in ascending ``(n, m)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .gabor import GaborParams, Window, idgt, idgtreal
from .gradient import DEFAULT_FLOOR, PhaseGradient, log_magnitude, scaled_phase_gradient

PENDING, DONE, OUTSIDE = 0, 1, 2


@dataclass
class PhaseEstimate:
    """Estimated phase with bookkeeping of how each cell was assigned.

    ``phase`` is unwrapped; wrap with ``wrapped()`` before export.
    """

    phase: np.ndarray
    random_set: np.ndarray
    known_set: np.ndarray = field(default=None)

    def __post_init__(self):
        if self.known_set is None:
            self.known_set = np.zeros(self.phase.shape, dtype=bool)

    @property
    def integrated(self) -> np.ndarray:
        return ~(self.random_set | self.known_set)

    def wrapped(self) -> np.ndarray:
        """Phase mapped to (-pi, pi]."""
        w = np.angle(np.exp(1j * self.phase))
        w[w == -np.pi] = np.pi
        return w


@dataclass
class KnownPhaseMask:
    mask: np.ndarray
    phase: np.ndarray

    def __post_init__(self):
        self.mask = np.asarray(self.mask, dtype=bool)
        self.phase = np.asarray(self.phase, dtype=float)
        if self.mask.shape != self.phase.shape:
            raise ValueError("mask and phase shapes differ")
        if not np.all(np.isfinite(self.phase[self.mask])):
            raise ValueError("known phase must be finite on the mask")


# -- kernel -----------------------------------------------------------------


@njit(cache=True, inline="always")
def _before(s, i, j):
    # max-heap on magnitude, ties by flat (n, m) index
    return s[i] > s[j] or (s[i] == s[j] and i < j)


@njit(cache=True)
def _push(heap, size, s, idx):
    k = size
    heap[k] = idx
    while k > 0:
        parent = (k - 1) >> 1
        if _before(s, heap[k], heap[parent]):
            heap[k], heap[parent] = heap[parent], heap[k]
            k = parent
        else:
            break
    return size + 1


@njit(cache=True)
def _pop(heap, size, s):
    top = heap[0]
    size -= 1
    heap[0] = heap[size]
    k = 0
    while True:
        left = 2 * k + 1
        if left >= size:
            break
        best = left
        right = left + 1
        if right < size and _before(s, heap[right], heap[left]):
            best = right
        if _before(s, heap[best], heap[k]):
            heap[k], heap[best] = heap[best], heap[k]
            k = best
        else:
            break
    return top, size


@njit(cache=True)
def _integrate(s, fgrad, tgrad, phase, state, seeds, border, rows, order_out):
    """Run the heap integration in place on flat frame-major arrays.

    ``state`` holds PENDING for cells still to integrate, DONE for assigned
    cells and OUTSIDE for cells below tolerance.  ``seeds`` lists candidate
    island seeds in pop priority.  Returns the number of popped cells, whose
    indices are written to ``order_out``.
    """
    ncell = s.size
    ncols = ncell // rows
    heap = np.empty(ncell, dtype=np.int64)
    size = 0
    for idx in border:
        size = _push(heap, size, s, idx)
    npop = 0
    ptr = 0
    while True:
        if size == 0:
            while ptr < seeds.size and state[seeds[ptr]] != PENDING:
                ptr += 1
            if ptr == seeds.size:
                break
            idx = seeds[ptr]
            phase[idx] = 0.0
            state[idx] = DONE
            size = _push(heap, size, s, idx)
        while size > 0:
            idx, size = _pop(heap, size, s)
            order_out[npop] = idx
            npop += 1
            m = idx % rows
            n = idx // rows
            if m + 1 < rows:
                j = idx + 1
                if state[j] == PENDING:
                    phase[j] = phase[idx] + 0.5 * (fgrad[idx] + fgrad[j])
                    state[j] = DONE
                    size = _push(heap, size, s, j)
            if m > 0:
                j = idx - 1
                if state[j] == PENDING:
                    phase[j] = phase[idx] - 0.5 * (fgrad[idx] + fgrad[j])
                    state[j] = DONE
                    size = _push(heap, size, s, j)
            if n + 1 < ncols:
                j = idx + rows
                if state[j] == PENDING:
                    phase[j] = phase[idx] + 0.5 * (tgrad[idx] + tgrad[j])
                    state[j] = DONE
                    size = _push(heap, size, s, j)
            if n > 0:
                j = idx - rows
                if state[j] == PENDING:
                    phase[j] = phase[idx] - 0.5 * (tgrad[idx] + tgrad[j])
                    state[j] = DONE
                    size = _push(heap, size, s, j)
    return npop


# -- public API -------------------------------------------------------------


def _flat(x) -> np.ndarray:
    return np.ascontiguousarray(np.asarray(x, dtype=float).T).ravel()


def _unflat(x: np.ndarray, shape) -> np.ndarray:
    return x.reshape(shape[1], shape[0]).T.copy()


def _border_cells(mask: np.ndarray) -> np.ndarray:
    """Masked cells with at least one in-grid 4-neighbour outside the mask."""
    out = np.zeros_like(mask)
    out[1:, :] |= ~mask[:-1, :]
    out[:-1, :] |= ~mask[1:, :]
    out[:, 1:] |= ~mask[:, :-1]
    out[:, :-1] |= ~mask[:, 1:]
    return mask & out


def _run(s, grad: PhaseGradient, tol, known: KnownPhaseMask | None, seed):
    s = np.asarray(s, dtype=float)
    if s.ndim != 2:
        raise ValueError("magnitude must be a 2-D grid")
    if grad.fgrad.shape != s.shape or grad.tgrad.shape != s.shape:
        raise ValueError(f"gradient shape {grad.fgrad.shape} does not match magnitude {s.shape}")
    if not 0 < tol < 1:
        raise ValueError("tol must lie in (0, 1)")
    if known is not None and known.mask.shape != s.shape:
        raise ValueError("known-phase mask shape does not match magnitude")

    rows = s.shape[0]
    rng = np.random.default_rng(seed)
    phase = rng.uniform(0.0, 2 * np.pi, size=s.shape)
    inside = s > tol * s.max() if s.size else np.zeros(s.shape, bool)

    state = np.where(inside, PENDING, OUTSIDE).astype(np.int8)
    mask = np.zeros(s.shape, bool) if known is None else known.mask
    border = np.empty(0, dtype=np.int64)
    if known is not None:
        phase[mask] = known.phase[mask]
        state[mask] = DONE
        b = _border_cells(mask) & inside
        border = np.flatnonzero(_flat(b)).astype(np.int64)

    sf = _flat(s)
    statef = np.ascontiguousarray(state.T).ravel()
    cand = np.flatnonzero(statef == PENDING)
    seeds = cand[np.lexsort((cand, -sf[cand]))].astype(np.int64)
    phasef = _flat(phase)
    order = np.empty(s.size, dtype=np.int64)
    npop = _integrate(
        sf, _flat(grad.fgrad), _flat(grad.tgrad), phasef, statef, seeds, border, rows, order
    )
    est = PhaseEstimate(_unflat(phasef, s.shape), ~inside & ~mask, mask.copy())
    return est, order[:npop]


def heap_integrate(s, grad: PhaseGradient, tol: float = 1e-10, seed=0) -> PhaseEstimate:
    """Integrate the phase gradient over all cells above ``tol * max(s)``.

    Parameters
    ----------
    s : ndarray
        Magnitude grid (full or half spectrum).
    grad : PhaseGradient
        Pre-scaled gradient on the same grid.
    tol : float
        Relative magnitude threshold in (0, 1).
    seed : int or numpy Generator seed
        Seeds the random phase of sub-threshold cells.
    """
    return _run(s, grad, tol, None, seed)[0]


def heap_integrate_masked(
    s, grad: PhaseGradient, tol: float, known: KnownPhaseMask, seed=0
) -> PhaseEstimate:
    """Heap integration continuing from cells of known phase.

    Known cells keep their phase, including those below the tolerance.  The
    heap starts from the known cells above tolerance that touch an unknown
    cell; islands without any known cell are seeded at phase 0 as usual.
    """
    return _run(s, grad, tol, known, seed)[0]


def pghi_two_pass(
    s, grad: PhaseGradient, tol1: float = 1e-1, tol2: float = 1e-10, seed=0
) -> PhaseEstimate:
    """Integrate the strong coefficients first, then extend to weak ones.

    The second pass treats the cells integrated by the first pass (not the
    randomised ones) as known phase.
    """
    if tol1 < tol2:
        raise ValueError(f"first tolerance {tol1} must not be below second tolerance {tol2}")
    first = heap_integrate(s, grad, tol1, seed)
    known = KnownPhaseMask(first.integrated, first.phase)
    second = heap_integrate_masked(s, grad, tol2, known, seed)
    return PhaseEstimate(second.phase, second.random_set)


def reconstruct_phase(
    s,
    p: GaborParams,
    gamma: float | None = None,
    tol1: float = 1e-1,
    tol2: float | None = 1e-10,
    seed=0,
    real: bool | None = None,
) -> PhaseEstimate:
    """Phase estimate straight from a magnitude grid.

    Runs the two-pass scheme unless ``tol2`` is None, in which case a single
    pass at ``tol1`` is made.  The magnitude is normalised to its peak before
    taking the logarithm.
    """
    s = np.asarray(s, dtype=float)
    peak = s.max()
    if peak <= 0:
        raise ValueError("all-zero magnitude grid")
    grad = scaled_phase_gradient(log_magnitude(s / peak, DEFAULT_FLOOR), p, gamma, real)
    if tol2 is None:
        return heap_integrate(s, grad, tol1, seed)
    return pghi_two_pass(s, grad, tol1, tol2, seed)


def synthesize(
    s, phase: PhaseEstimate | np.ndarray, gd: Window, p: GaborParams, real_output: bool = True
) -> np.ndarray:
    """Combine magnitude and phase and invert with the dual window.

    With ``real_output`` the grid holds channels ``0 .. M // 2`` only and the
    negative frequencies are the conjugate mirror; the result is real.
    """
    s = np.asarray(s, dtype=float)
    ph = phase.phase if isinstance(phase, PhaseEstimate) else np.asarray(phase, dtype=float)
    if ph.shape != s.shape:
        raise ValueError(f"phase shape {ph.shape} does not match magnitude {s.shape}")
    c = s * np.exp(1j * ph)
    return idgtreal(c, gd, p) if real_output else idgt(c, gd, p)
