"""Reconstruction jobs, corpus benchmarks and pitch shifting."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .baselines import GlaConfig, IterTrace, fgla, gla, spsi
from .gabor import (
    WINDOW_KINDS,
    GaborParams,
    Window,
    canonical_dual,
    dgtreal,
    dgtreal_hop,
    fit_gamma,
    make_window,
)
from .gradient import log_magnitude, scaled_phase_gradient
from .metrics import MetricReport, inconsistency, relative_error, spectral_convergence
from .pghi import PhaseEstimate, reconstruct_phase, synthesize
from .wavio import load_wav, save_wav, write_grid, write_grid_csv

log = logging.getLogger(__name__)

PRESETS = {
    "speech": {"a": 128, "M": 1024},
    "music": {"a": 256, "M": 2048},
}

ALGORITHMS = ("pghi", "pghi2", "spsi", "gla", "fgla", "gla-ws", "fgla-ws")

WORKERS_ENV = "GABORPHASE_WORKERS"


@dataclass(frozen=True)
class JobConfig:
    """One reconstruction setup.

    ``pghi`` is a single pass at ``tol2``; ``pghi2`` the two-pass scheme.  The
    ``-ws`` variants start the iterations from the ``pghi2`` phase.  ``gamma``
    of None uses ``a * M`` for Gaussian windows and a least-squares Gaussian
    fit otherwise.
    """

    window: str = "gauss"
    support: int | None = None
    a: int = 128
    M: int = 1024
    algo: str = "pghi2"
    tol1: float = 1e-1
    tol2: float = 1e-10
    max_iter: int = 100
    alpha: float = 0.99
    seed: int = 0
    gamma: float | None = None
    max_seconds: float | None = None
    export_phasediff: bool = False
    range_db: float = 60.0
    inputs: tuple = ()
    outdir: str | None = None

    def __post_init__(self):
        if self.algo not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algo!r}; expected one of {ALGORITHMS}")
        if self.window not in WINDOW_KINDS:
            raise ValueError(f"unknown window {self.window!r}")
        if self.a <= 0 or self.M < self.a:
            raise ValueError(f"invalid lattice a={self.a}, M={self.M}")
        if self.support is not None and self.support <= 0:
            raise ValueError("support must be positive")
        if not 0 < self.tol2 <= self.tol1 < 1:
            raise ValueError("tolerances must satisfy 0 < tol2 <= tol1 < 1")
        if self.max_iter < 0:
            raise ValueError("max_iter must be non-negative")
        if not 0 <= self.alpha < 1:
            raise ValueError("alpha must lie in [0, 1)")
        if self.gamma is not None and self.gamma <= 0:
            raise ValueError("gamma must be positive")
        if self.range_db <= 0:
            raise ValueError("range_db must be positive")

    @classmethod
    def preset(cls, name: str, **overrides) -> "JobConfig":
        if name not in PRESETS:
            raise ValueError(f"unknown preset {name!r}; expected one of {tuple(PRESETS)}")
        return cls(**{**PRESETS[name], **overrides})

    def digest(self) -> str:
        """Short hash of the numerical settings (paths excluded)."""
        d = {k: v for k, v in asdict(self).items() if k not in ("inputs", "outdir")}
        return hashlib.sha1(json.dumps(d, sort_keys=True).encode()).hexdigest()[:12]


@dataclass
class RunRecord:
    file: str
    config: JobConfig
    metrics: MetricReport = field(default_factory=MetricReport)
    trace: IterTrace | None = None
    runtime: float = 0.0
    error: str | None = None

    CSV_FIELDS = ("file", "algo", "window", "a", "M", "digest", "C", "C_dB",
                  "inconsistency", "E_dB", "iterations", "error")

    def to_row(self) -> dict:
        """Deterministic CSV fields (no timings)."""
        m = self.metrics
        return {
            "file": self.file,
            "algo": self.config.algo,
            "window": self.config.window,
            "a": self.config.a,
            "M": self.config.M,
            "digest": self.config.digest(),
            "C": _fmt(m.C),
            "C_dB": _fmt(m.C_dB),
            "inconsistency": _fmt(m.inconsistency),
            "E_dB": _fmt(m.E_dB),
            "iterations": len(self.trace) if self.trace is not None else 0,
            "error": self.error or "",
        }

    def to_json(self, timings: bool = True) -> dict:
        """JSON-ready record; ``timings=False`` drops wall-clock values for reproducible files."""
        cfg = asdict(self.config)
        cfg["inputs"] = list(cfg["inputs"])
        trace = None
        if self.trace is not None:
            trace = {"c_db": self.trace.c_db}
            if timings:
                trace["seconds"] = self.trace.seconds
        out = {
            "file": self.file,
            "config": cfg,
            "digest": self.config.digest(),
            "metrics": self.metrics.as_dict(),
            "trace": trace,
            "error": self.error,
        }
        if timings:
            out["runtime"] = self.runtime
        return out


def _fmt(v: float) -> str:
    return "" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v))


# -- core pipeline ----------------------------------------------------------


@dataclass
class Reconstruction:
    signal: np.ndarray
    params: GaborParams
    window: Window
    dual: Window
    magnitude: np.ndarray
    coefficients: np.ndarray
    estimate: PhaseEstimate
    metrics: MetricReport
    trace: IterTrace | None


def resolve_gamma(cfg: JobConfig, g: Window) -> float:
    if cfg.gamma is not None:
        return cfg.gamma
    if g.kind in ("gauss", "truncgauss"):
        return g.gamma
    return fit_gamma(g)


def estimate_phase(s, p: GaborParams, g: Window, gd: Window, cfg: JobConfig, gamma: float):
    """Run ``cfg.algo`` on a half-spectrum magnitude grid."""
    s = np.asarray(s, dtype=float)
    if s.max() <= 0:
        zero = PhaseEstimate(np.zeros(s.shape), np.zeros(s.shape, bool))
        return zero, (IterTrace() if cfg.algo.startswith(("gla", "fgla")) else None)
    if cfg.algo == "pghi":
        return reconstruct_phase(s, p, gamma, cfg.tol2, None, cfg.seed, real=True), None
    if cfg.algo == "spsi":
        return spsi(s, p), None
    pghi2 = reconstruct_phase(s, p, gamma, cfg.tol1, cfg.tol2, cfg.seed, real=True)
    if cfg.algo == "pghi2":
        return pghi2, None
    init = pghi2 if cfg.algo.endswith("-ws") else "zero"
    gcfg = GlaConfig(max_iter=cfg.max_iter, alpha=cfg.alpha, init=init, seed=cfg.seed)
    run = gla if cfg.algo.startswith("gla") else fgla
    return run(s, g, gd, p, gcfg)


def reconstruct(x, cfg: JobConfig) -> Reconstruction:
    """Analyse ``x``, drop the phase, rebuild it with ``cfg.algo`` and resynthesise."""
    x = np.asarray(x, dtype=float)
    p = GaborParams.for_length(len(x), cfg.a, cfg.M)
    xp = np.zeros(p.L)
    xp[: len(x)] = x
    g = make_window(cfg.window, p, cfg.support)
    gd = canonical_dual(g, p)
    c = dgtreal(xp, g, p)
    s = np.abs(c)
    est, trace = estimate_phase(s, p, g, gd, cfg, resolve_gamma(cfg, g))
    c_hat = s * np.exp(1j * est.phase)
    y = synthesize(s, est, gd, p, real_output=True)

    report = MetricReport()
    if s.max() > 0:
        report.C, report.C_dB = spectral_convergence(s, c_hat, g, gd, p)
        report.inconsistency = inconsistency(c_hat, g, gd, p)
    if np.any(x):
        report.E, report.E_dB = relative_error(x, y[: len(x)])
    return Reconstruction(y[: len(x)], p, g, gd, s, c, est, report, trace)


def phase_difference_map(c_true, c_rec, range_db: float) -> np.ndarray:
    """``|phase difference| / pi`` modulo 1 on the top ``range_db`` of ``|c_true|``; NaN elsewhere."""
    c_true = np.asarray(c_true)
    d = np.abs(np.angle(c_true * np.conj(c_rec))) / np.pi
    d = np.mod(d, 1.0)
    mag = np.abs(c_true)
    d[mag < mag.max() * 10 ** (-range_db / 20)] = np.nan
    return d


def _atomic_outputs(paths):
    for tmp, final in paths:
        os.replace(tmp, final)


def run_reconstruction(cfg: JobConfig, path, outdir=None, write_audio: bool = True) -> RunRecord:
    """Reconstruct one WAV file and persist the outputs.

    Writes ``<stem>.<algo>.wav``, ``<stem>.<algo>.json`` and, when requested,
    the phase-difference grid as ``.phasediff.bin`` plus ``.phasediff.csv``.
    Partially written files are removed if anything fails.
    """
    path = Path(path)
    outdir = Path(outdir or cfg.outdir or path.parent)
    tick = time.perf_counter()
    x, rate = load_wav(path, cfg.max_seconds)
    rec = reconstruct(x, cfg)
    record = RunRecord(path.stem, cfg, rec.metrics, rec.trace, time.perf_counter() - tick)

    outdir.mkdir(parents=True, exist_ok=True)
    base = outdir / f"{path.stem}.{cfg.algo}"
    pending = []
    try:
        if write_audio:
            tmp = base.with_name(base.name + ".wav.part")
            save_wav(tmp, rec.signal, rate)
            pending.append((tmp, base.with_name(base.name + ".wav")))
        if cfg.export_phasediff:
            p = rec.params
            xp = np.zeros(p.L)
            xp[: len(rec.signal)] = rec.signal
            c_rec = dgtreal(xp, rec.window, p)
            diff = phase_difference_map(rec.coefficients, c_rec, cfg.range_db)
            for ext, writer in ((".phasediff.bin", write_grid), (".phasediff.csv", write_grid_csv)):
                tmp = base.with_name(base.name + ext + ".part")
                writer(tmp, diff)
                pending.append((tmp, base.with_name(base.name + ext)))
        tmp = base.with_name(base.name + ".json.part")
        tmp.write_text(json.dumps(record.to_json(timings=False), indent=2, default=_json_default))
        pending.append((tmp, base.with_name(base.name + ".json")))
        _atomic_outputs(pending)
    except BaseException:
        for tmp, final in pending:
            for q in (tmp, final):
                if q.exists():
                    q.unlink()
        raise
    return record


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    raise TypeError(f"not serialisable: {type(o)}")


# -- benchmark --------------------------------------------------------------


def _bench_job(args):
    path, cfg = args
    path = Path(path)
    tick = time.perf_counter()
    try:
        x, _ = load_wav(path, cfg.max_seconds)
        rec = reconstruct(x, cfg)
        return RunRecord(path.stem, cfg, rec.metrics, rec.trace, time.perf_counter() - tick)
    except Exception as exc:  # recorded per file, not fatal
        log.warning("%s / %s failed: %s", path.name, cfg.algo, exc)
        return RunRecord(path.stem, cfg, runtime=time.perf_counter() - tick,
                         error=f"{type(exc).__name__}: {exc}")


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def summarize(records) -> dict:
    """Mean C_dB per lattice, algorithm and window, over successful runs."""
    groups: dict = {}
    for r in records:
        if r.error or math.isnan(r.metrics.C_dB):
            continue
        lattice = f"a={r.config.a},M={r.config.M}"
        groups.setdefault(lattice, {}).setdefault(r.config.algo, {}).setdefault(
            r.config.window, []).append(r.metrics.C_dB)
    table = {
        lat: {algo: {win: float(np.mean(v)) for win, v in sorted(wins.items())}
              for algo, wins in sorted(algos.items())}
        for lat, algos in sorted(groups.items())
    }
    counts = {
        lat: {algo: {win: len(v) for win, v in sorted(wins.items())}
              for algo, wins in sorted(algos.items())}
        for lat, algos in sorted(groups.items())
    }
    failures = sorted({r.file for r in records if r.error})
    return {"mean_C_dB": table, "count": counts, "failed_files": failures}


def run_benchmark(files, configs, outdir=None, workers: int | None = None) -> dict:
    """Run every (file, config) pair and aggregate mean C_dB.

    Writes ``results.csv`` (one row per pair, deterministic), ``summary.json``
    and ``records.jsonl`` (with timings and traces) when ``outdir`` is given.
    Returns the summary with the records under ``"records"``.
    """
    files = [Path(f) for f in files]
    configs = list(configs)
    if not files:
        raise ValueError("no input files")
    if not configs:
        raise ValueError("empty configuration matrix")
    jobs = [(f, c) for f in files for c in configs]
    workers = default_workers() if workers is None else workers
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            records = list(pool.map(_bench_job, jobs))
    else:
        records = [_bench_job(j) for j in jobs]

    summary = summarize(records)
    if outdir is not None:
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=RunRecord.CSV_FIELDS, lineterminator="\r\n")
        w.writeheader()
        for r in records:
            w.writerow(r.to_row())
        (outdir / "results.csv").write_text(buf.getvalue(), newline="")
        (outdir / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True))
        with open(outdir / "records.jsonl", "w") as fh:
            for r in records:
                fh.write(json.dumps(r.to_json(), default=_json_default) + "\n")
    return {**summary, "records": records}


def config_matrix(preset: str, algos, windows, **overrides) -> list[JobConfig]:
    return [JobConfig.preset(preset, algo=al, window=w, **overrides) for w in windows for al in algos]


# -- pitch shifting ---------------------------------------------------------


def pitch_shift(x, rate: int, semitones: int, cfg: JobConfig):
    """Shift pitch by analysing with a scaled hop and synthesising with ``cfg.a``.

    The output lasts ``2 ** (semitones / 12)`` times longer; its sample rate is
    relabelled by the same factor so that playback restores the duration and
    moves the pitch.  Returns ``(signal, output_rate, metadata)``.
    """
    if not isinstance(semitones, (int, np.integer)) or abs(semitones) > 12:
        raise ValueError("semitones must be an integer in [-12, 12]")
    x = np.asarray(x, dtype=float)
    ratio = 2.0 ** (semitones / 12)
    a_s = cfg.a
    a_a = int(round(a_s / ratio))
    if a_a < 1:
        raise ValueError("analysis hop below one sample")
    M = cfg.M
    if M % a_s:
        raise ValueError("synthesis hop must divide M")

    # frames: cover the input with the analysis hop; synthesis length must be a multiple of M
    step = M // math.gcd(M, a_s)
    N = max(step, -(-len(x) // a_a))
    N = -(-N // step) * step
    p = GaborParams(N * a_s, a_s, M)
    g = make_window(cfg.window, p, cfg.support)
    gd = canonical_dual(g, p)
    xp = np.zeros(N * a_a)
    xp[: len(x)] = x
    s = np.abs(dgtreal_hop(xp, g, a_a, M))
    est, _ = estimate_phase(s, p, g, gd, cfg, resolve_gamma(cfg, g))
    c_hat = s * np.exp(1j * est.phase)
    y = synthesize(s, est, gd, p, real_output=True)
    out_len = int(round(len(x) * a_s / a_a))
    y = y[:out_len]

    out_rate = int(round(rate * a_s / a_a))
    meta = {
        "semitones": int(semitones),
        "ratio": ratio,
        "analysis_hop": a_a,
        "synthesis_hop": a_s,
        "M": M,
        "input_rate": int(rate),
        "output_rate": out_rate,
        "resampling": "sample-rate relabelling; no resampling filter applied",
        "algo": cfg.algo,
        "window": cfg.window,
        "inconsistency": inconsistency(c_hat, g, gd, p) if s.max() > 0 else 0.0,
    }
    return y, out_rate, meta


def pitch_shift_file(path, out_path, semitones: int, cfg: JobConfig) -> dict:
    x, rate = load_wav(path, cfg.max_seconds)
    y, out_rate, meta = pitch_shift(x, rate, semitones, cfg)
    out_path = Path(out_path)
    peak = np.abs(y).max()
    if peak > 1:
        y = y / peak
        meta["normalised_by"] = float(peak)
    tmp = out_path.with_name(out_path.name + ".part")
    try:
        save_wav(tmp, y, out_rate)
        os.replace(tmp, out_path)
        out_path.with_suffix(".json").write_text(json.dumps(meta, indent=2))
    except BaseException:
        if tmp.exists():
            tmp.unlink()
        raise
    return meta


# -- gradient export --------------------------------------------------------


def export_gradients(path, outdir, cfg: JobConfig) -> dict:
    """Write log-magnitude and scaled gradient grids of a WAV file."""
    x, _ = load_wav(path, cfg.max_seconds)
    p = GaborParams.for_length(len(x), cfg.a, cfg.M)
    xp = np.zeros(p.L)
    xp[: len(x)] = x
    g = make_window(cfg.window, p, cfg.support)
    s = np.abs(dgtreal(xp, g, p))
    slog = log_magnitude(s / s.max())
    grad = scaled_phase_gradient(slog, p, resolve_gamma(cfg, g), real=True)
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    stem = Path(path).stem
    written = {}
    for name, grid in (("slog", slog.values), ("fgrad", grad.fgrad), ("tgrad", grad.tgrad)):
        target = outdir / f"{stem}.{name}.bin"
        write_grid(target, grid)
        written[name] = str(target)
    return written
