"""Command line entry point: ``gaborphase {reconstruct,bench,pitchshift,gradients,corpus}``.

Exit codes: 0 success, 1 usage error, 2 I/O error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .gabor import WINDOW_KINDS, FrameError
from .harness import (
    ALGORITHMS,
    PRESETS,
    JobConfig,
    config_matrix,
    export_gradients,
    pitch_shift_file,
    run_benchmark,
    run_reconstruction,
)

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_NUMERIC = 0, 1, 2, 3

DEFAULT_SEED = 0


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_job_args(p: argparse.ArgumentParser, algo_default="pghi2"):
    p.add_argument("--preset", choices=sorted(PRESETS), default="speech",
                   help="lattice preset (speech: M=1024 a=128, music: M=2048 a=256)")
    p.add_argument("--window", choices=WINDOW_KINDS, default="gauss")
    p.add_argument("--support", type=int, help="window support in samples (default M)")
    p.add_argument("-a", type=int, help="time hop, overrides the preset")
    p.add_argument("-M", type=int, help="number of channels, overrides the preset")
    p.add_argument("--algo", choices=ALGORITHMS, default=algo_default)
    p.add_argument("--tol1", type=float, default=1e-1)
    p.add_argument("--tol2", type=float, default=1e-10)
    p.add_argument("--maxit", type=int, default=100)
    p.add_argument("--alpha", type=float, default=0.99)
    p.add_argument("--gamma", type=float, help="Gaussian width lambda*L (default: matched to window)")
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--max-seconds", type=float, help="truncate inputs to this duration")


def _job(args, **extra) -> JobConfig:
    lattice = dict(PRESETS[args.preset])
    if args.a:
        lattice["a"] = args.a
    if args.M:
        lattice["M"] = args.M
    return JobConfig(
        window=args.window, support=args.support, algo=args.algo, tol1=args.tol1,
        tol2=args.tol2, max_iter=args.maxit, alpha=args.alpha, seed=args.seed,
        gamma=args.gamma, max_seconds=args.max_seconds, **lattice, **extra,
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gaborphase", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("reconstruct", help="rebuild the phase of WAV files")
    p.add_argument("inputs", nargs="+", type=Path)
    p.add_argument("-o", "--outdir", type=Path, default=Path("."))
    _add_job_args(p)
    p.add_argument("--export-phasediff", action="store_true",
                   help="write |phase difference|/pi mod 1 grids (.bin and .csv)")
    p.add_argument("--range-db", type=float, default=60.0,
                   help="magnitude range kept in the phase-difference grid")

    p = sub.add_parser("bench", help="benchmark algorithms over a corpus")
    p.add_argument("corpus", type=Path, help="directory of WAV files (searched recursively)")
    p.add_argument("-o", "--outdir", type=Path, default=Path("bench-out"))
    p.add_argument("--preset", choices=sorted(PRESETS), default="speech")
    p.add_argument("--algos", nargs="+", choices=ALGORITHMS, default=["pghi2", "spsi"])
    p.add_argument("--windows", nargs="+", choices=WINDOW_KINDS, default=list(WINDOW_KINDS))
    p.add_argument("--maxit", type=int, default=100)
    p.add_argument("--alpha", type=float, default=0.99)
    p.add_argument("--seed", type=int, default=DEFAULT_SEED)
    p.add_argument("--max-seconds", type=float, default=10.0,
                   help="analyse only the first seconds of each file (default 10)")
    p.add_argument("--workers", type=int, help="parallel worker processes (env GABORPHASE_WORKERS)")

    p = sub.add_parser("pitchshift", help="pitch shift by changing the analysis hop")
    p.add_argument("input", type=Path)
    p.add_argument("output", type=Path)
    p.add_argument("--semitones", type=int, required=True)
    _add_job_args(p)
    p.set_defaults(preset="music")

    p = sub.add_parser("gradients", help="export log-magnitude and phase gradient grids")
    p.add_argument("input", type=Path)
    p.add_argument("-o", "--outdir", type=Path, default=Path("."))
    _add_job_args(p)

    p = sub.add_parser("corpus", help="write the synthetic benchmark corpus")
    p.add_argument("outdir", type=Path)
    return parser


def _run(args) -> int:
    if args.command == "reconstruct":
        cfg = _job(args, export_phasediff=args.export_phasediff, range_db=args.range_db,
                   outdir=str(args.outdir))
        for path in args.inputs:
            rec = run_reconstruction(cfg, path, args.outdir)
            print(f"{path.name}\t{cfg.algo}\tC_dB={rec.metrics.C_dB:.2f}")
    elif args.command == "bench":
        files = sorted(args.corpus.rglob("*.wav"))
        if not files:
            raise FileNotFoundError(f"no WAV files under {args.corpus}")
        cfgs = config_matrix(args.preset, args.algos, args.windows, max_iter=args.maxit,
                             alpha=args.alpha, seed=args.seed, max_seconds=args.max_seconds)
        summary = run_benchmark(files, cfgs, args.outdir, args.workers)
        print(json.dumps(summary["mean_C_dB"], indent=2))
    elif args.command == "pitchshift":
        meta = pitch_shift_file(args.input, args.output, args.semitones, _job(args))
        print(json.dumps(meta, indent=2))
    elif args.command == "gradients":
        print(json.dumps(export_gradients(args.input, args.outdir, _job(args)), indent=2))
    elif args.command == "corpus":
        from .corpus import write_corpus

        for name, paths in write_corpus(args.outdir).items():
            print(f"{name}: {len(paths)} files")
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _run(args)
    except FrameError as exc:
        print(f"gaborphase: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"gaborphase: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ValueError, ArithmeticError) as exc:
        print(f"gaborphase: {exc}", file=sys.stderr)
        return EXIT_NUMERIC if isinstance(exc, ArithmeticError) else EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
