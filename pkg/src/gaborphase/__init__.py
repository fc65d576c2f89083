"""Phase retrieval from Gabor magnitudes by heap-ordered gradient integration."""

from .baselines import GlaConfig, IterTrace, fgla, gla, spsi, zero_phase_convergence
from .gabor import (
    WINDOW_KINDS,
    FrameError,
    GaborParams,
    Window,
    canonical_dual,
    dgt,
    dgtreal,
    expand_half,
    fit_gamma,
    frame_operator_spectrum,
    idgt,
    idgtreal,
    make_window,
    periodized_gaussian,
)
from .gradient import LogMagnitude, PhaseGradient, log_magnitude, scaled_phase_gradient
from .harness import JobConfig, pitch_shift, reconstruct, run_benchmark
from .metrics import MetricReport, inconsistency, project, relative_error, spectral_convergence
from .pghi import (
    KnownPhaseMask,
    PhaseEstimate,
    heap_integrate,
    heap_integrate_masked,
    pghi_two_pass,
    reconstruct_phase,
    synthesize,
)

__version__ = "0.1.0"
