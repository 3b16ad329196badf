"""Command-line interface: ``ffrpitch {track,metrics,synth,avg,bench}``.

Settings are resolved as command-line flags > ``--config`` file > built-in
defaults. A config file is flat ``key=value`` text whose keys are the long
flag names with or without the leading dashes (``k=4``, ``--f0-min = 80``);
``#`` starts a comment. The effective configuration is echoed as ``# key=value``
comment lines at the top of every CSV written.
"""
from __future__ import annotations

import argparse
import logging
import sys
from contextlib import contextmanager
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .errors import FFRPitchError, FormatError
from .filterbank import HasConfig
from .fileio import atomic_write_text, data_lines

log = logging.getLogger("ffrpitch")

# Arguments that never go into the echoed config (paths and execution details).
_NOT_ECHOED = {"command", "config", "out", "out_dir", "truth", "response", "stimulus", "est",
               "ref", "input", "dump_diagnostics", "workers", "verbose", "filterbank_cache"}


class StageError(Exception):
    def __init__(self, stage: str, exc: BaseException):
        self.stage = stage
        self.exc = exc
        super().__init__(f"{stage}: {exc}")


@contextmanager
def stage(name: str):
    try:
        yield
    except StageError:
        raise
    except (FFRPitchError, OSError, ValueError) as exc:
        raise StageError(name, exc) from exc


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


def _int_list(text) -> tuple[int, ...]:
    if isinstance(text, (tuple, list)):
        return tuple(int(x) for x in text)
    try:
        vals = tuple(int(x) for x in str(text).split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not vals or min(vals) < 1:
        raise argparse.ArgumentTypeError("sweep counts must be positive integers")
    return vals


def read_config_file(path) -> dict[str, str]:
    path = Path(path)
    out = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in data_lines(fh):
            line = line.split(" #", 1)[0].strip()
            if "=" not in line:
                raise FormatError(path, f"line {lineno}", f"expected key=value, got {line!r}")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.lstrip("-").replace("-", "_")] = value
    return out


# -- parser --------------------------------------------------------------------

def _add_has_flags(p):
    g = p.add_argument_group("HAS tracker")
    d = HasConfig()
    g.add_argument("--method", choices=("has_pr", "has_ht", "acf"), default="has_pr")
    g.add_argument("--k", type=int, default=d.K, help="harmonics per filter (default %(default)s)")
    g.add_argument("--f0-min", type=float, default=d.f0_min_hz)
    g.add_argument("--f0-max", type=float, default=d.f0_max_hz)
    g.add_argument("--grid-step", type=float, default=d.grid_step_hz)
    g.add_argument("--halfwidth", type=float, default=d.search_halfwidth_hz,
                   help="search half-width around the stimulus F0, Hz")
    g.add_argument("--window-ms", type=float, default=d.window_ms)
    g.add_argument("--hop-ms", type=float, default=d.hop_ms)
    g.add_argument("--clamp-harmonics", type=_bool, default=False, nargs="?", const=True,
                   help="drop filter harmonics above min(Nyquist, --bp-high) instead of failing")


def _add_pre_flags(p):
    g = p.add_argument_group("preprocessing")
    g.add_argument("--pre-stim-ms", type=float, default=40.0)
    g.add_argument("--delay-ms", type=float, default=10.0)
    g.add_argument("--bp-low-margin", type=float, default=20.0,
                   help="band-pass low cutoff = min stimulus F0 minus this (Hz)")
    g.add_argument("--bp-high", type=float, default=2000.0)
    g.add_argument("--no-bandpass", type=_bool, default=False, nargs="?", const=True)


def _add_synth_flags(p, sweeps_default):
    g = p.add_argument_group("synthesis")
    g.add_argument("--preset", choices=("MS", "MH", "FS", "FH"), default="MH")
    g.add_argument("--contour-spec", default=None,
                   help="breakpoint CSV (time_s,f0_hz) used instead of --preset")
    g.add_argument("--duration", type=float, default=None,
                   help="duration for --contour-spec (default: last breakpoint time)")
    g.add_argument("--sweeps", type=int, default=sweeps_default)
    g.add_argument("--snr-db", type=float, default=-20.0, help="per-sweep SNR (inf = no noise)")
    g.add_argument("--noise", choices=("white", "pink"), default="pink")
    g.add_argument("--k-signal", type=int, default=4)
    g.add_argument("--rolloff", type=float, default=0.5)
    g.add_argument("--fs", type=float, default=1.0 / 175e-6)
    g.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ffrpitch", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", default=None, help="flat key=value config file")
        p.add_argument("-v", "--verbose", action="store_true")

    p = sub.add_parser("track", help="track the F0 contour of a response")
    common(p)
    p.add_argument("--response", nargs="+", required=True,
                   help="one averaged WAV, a sweep matrix (.csv/.bin), or several WAVs (one sweep each)")
    p.add_argument("--stimulus", required=True, help="stimulus F0 contour CSV (time_s,f0_hz)")
    p.add_argument("--out", required=True, help="response contour CSV to write")
    p.add_argument("--sweeps", type=int, default=None, help="average only the first N sweeps")
    p.add_argument("--avg-mode", choices=("add_all", "polarity_add", "polarity_subtract"), default="add_all")
    p.add_argument("--dump-diagnostics", default=None, metavar="PREFIX",
                   help="write PREFIX.y.csv and PREFIX.peaks.csv (HAS methods only)")
    p.add_argument("--filterbank-cache", default=None, metavar="DIR")
    _add_has_flags(p)
    _add_pre_flags(p)

    p = sub.add_parser("metrics", help="RMSE / RMSE20 / GPE between two contours")
    common(p)
    p.add_argument("--est", required=True)
    p.add_argument("--ref", required=True)
    p.add_argument("--out", default=None, help="append-free metrics CSV to write")
    p.add_argument("--threshold", type=float, default=0.20)
    p.add_argument("--condition", default="")
    p.add_argument("--method", default="")
    p.add_argument("--n-sweeps", type=int, default=0)

    p = sub.add_parser("synth", help="generate a synthetic sweep session and its ground truth")
    common(p)
    p.add_argument("--out", required=True, help="sweep matrix (.csv or binary)")
    p.add_argument("--truth", required=True, help="ground-truth contour CSV")
    p.add_argument("--pre-stim-ms", type=float, default=40.0)
    p.add_argument("--delay-ms", type=float, default=10.0)
    p.add_argument("--tail-ms", type=float, default=50.0)
    p.add_argument("--window-ms", type=float, default=50.0)
    p.add_argument("--hop-ms", type=float, default=10.0)
    _add_synth_flags(p, 3000)

    p = sub.add_parser("avg", help="average the first N sweeps of a sweep file")
    common(p)
    p.add_argument("--input", nargs="+", required=True)
    p.add_argument("--out", required=True, help=".wav (float32) or a one-row sweep matrix")
    p.add_argument("--sweeps", type=int, default=None)
    p.add_argument("--avg-mode", choices=("add_all", "polarity_add", "polarity_subtract"), default="add_all")

    p = sub.add_parser("bench", help="RMSE vs number of averaged sweeps on synthetic sessions")
    common(p)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--trials", type=int, default=20)
    p.add_argument("--sweep-counts", type=_int_list, default=(100, 300, 500, 1000, 2000, 3000))
    p.add_argument("--methods", default="has_pr,has_ht,acf")
    p.add_argument("--workers", type=int, default=1)
    _add_synth_flags(p, None)
    _add_has_flags(p)
    _add_pre_flags(p)
    p.set_defaults(k=None)
    return parser


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        with stage("config"):
            values = read_config_file(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = set(values) - known
        if unknown:
            raise StageError("config", FormatError(args.config, "keys", f"unknown keys {sorted(unknown)}"))
        # string defaults are converted by argparse; explicit flags still win
        sub.set_defaults(**values)
        args = parser.parse_args(argv)
        for action in sub._actions:
            if action.dest in values and isinstance(getattr(args, action.dest), str) and action.type:
                setattr(args, action.dest, action.type(getattr(args, action.dest)))
    return args


def effective_config(args: argparse.Namespace) -> dict:
    meta = {k: v for k, v in vars(args).items() if k not in _NOT_ECHOED and v is not None}
    for k, v in meta.items():
        if isinstance(v, (tuple, list)):
            meta[k] = ";".join(str(x) for x in v)
    return meta


def _has_config(args, K=None) -> HasConfig:
    return HasConfig(
        f0_min_hz=args.f0_min, f0_max_hz=args.f0_max, grid_step_hz=args.grid_step,
        K=args.k if K is None else K, search_halfwidth_hz=args.halfwidth,
        window_ms=args.window_ms, hop_ms=args.hop_ms,
    )


def _pipeline_config(args, K=None):
    from .pipeline import PipelineConfig

    return PipelineConfig(
        has=_has_config(args, K), pre_stimulus_ms=args.pre_stim_ms, neural_delay_ms=args.delay_ms,
        bp_low_margin_hz=args.bp_low_margin, bp_high_hz=args.bp_high,
        apply_bandpass=not args.no_bandpass, clamp_harmonics=args.clamp_harmonics,
    )


def _load_response(paths, n_sweeps, mode):
    from .preprocess import average_sweeps, read_sweeps, read_wav_sweeps
    from .wavio import read_wav

    paths = [Path(p) for p in paths]
    for p in paths:
        if not p.exists():
            raise FileNotFoundError(f"response file not found: {p}")
    if len(paths) == 1 and paths[0].suffix.lower() == ".wav":
        if n_sweeps not in (None, 1):
            raise ValueError("--sweeps needs a sweep matrix or several WAV files")
        return read_wav(paths[0])
    sweeps = read_wav_sweeps(paths) if len(paths) > 1 else read_sweeps(paths[0])
    return average_sweeps(sweeps, n_sweeps, mode)


def _load_spec(args):
    from .signal_core import read_contour_csv
    from .synth import PRESETS, ContourSpec

    if args.contour_spec:
        bp = read_contour_csv(args.contour_spec)
        duration = args.duration if args.duration is not None else float(bp.times_s[-1])
        return ContourSpec(tuple(zip(bp.times_s, bp.f0_hz)), duration, Path(args.contour_spec).stem)
    return PRESETS[args.preset]


# -- commands --------------------------------------------------------------------

def cmd_track(args) -> int:
    from .filterbank import cached_filterbank
    from .has import write_diagnostics
    from .pipeline import _HAS_MODE, prepare_frames, track_prepared
    from .signal_core import read_contour_csv, samples_for_ms, write_contour_csv
    from .spectrum import choose_dft_length

    with stage("read stimulus contour"):
        if not Path(args.stimulus).exists():
            raise FileNotFoundError(f"stimulus contour not found: {args.stimulus}")
        stimulus = read_contour_csv(args.stimulus)
    with stage("read response"):
        response = _load_response(args.response, args.sweeps, args.avg_mode)
    with stage("configure"):
        cfg = _pipeline_config(args)
    with stage("band-pass and align"):
        frames = prepare_frames(response, stimulus, cfg)
    with stage("track"):
        if args.filterbank_cache and args.method in _HAS_MODE:
            L = samples_for_ms(cfg.has.window_ms, response.sample_rate_hz)
            clamp = cfg.bp_high_hz if cfg.clamp_harmonics else None
            cached_filterbank(args.filterbank_cache, cfg.has,
                              choose_dft_length(response.sample_rate_hz, L), L, clamp)
        diag = {} if args.dump_diagnostics else None
        contour = track_prepared(frames, stimulus, cfg, [args.method], diag)[args.method]
    with stage("write output"):
        write_contour_csv(args.out, contour, effective_config(args))
        if diag and args.method in diag:
            frames_diag, grid = diag[args.method]
            write_diagnostics(args.dump_diagnostics, frames_diag, grid)
    log.info("wrote %d frames to %s", len(contour), args.out)
    return 0


def cmd_metrics(args) -> int:
    from .metrics import format_metrics_csv, gpe_and_rmse20
    from .signal_core import read_contour_csv

    with stage("read contours"):
        for p in (args.est, args.ref):
            if not Path(p).exists():
                raise FileNotFoundError(f"contour file not found: {p}")
        est, ref = read_contour_csv(args.est), read_contour_csv(args.ref)
    with stage("metrics"):
        rep = gpe_and_rmse20(est, ref, args.threshold)
    r20 = "n/a" if rep.rmse20_hz is None else f"{rep.rmse20_hz:.4f}"
    print(f"frames={rep.n_frames} rmse_hz={rep.rmse_hz:.4f} rmse20_hz={r20} "
          f"gpe_percent={rep.gpe_percent:.2f} n_gross={rep.n_gross}")
    if args.out:
        with stage("write output"):
            atomic_write_text(args.out, format_metrics_csv(
                [(args.condition, args.method, args.n_sweeps, rep)], effective_config(args)))
    return 0


def cmd_synth(args) -> int:
    from .preprocess import write_sweeps
    from .signal_core import write_contour_csv
    from .synth import SynthConfig, contour_from_spec, synth_session

    with stage("contour spec"):
        spec = _load_spec(args)
        truth = contour_from_spec(spec, args.window_ms, args.hop_ms)
    with stage("synthesise"):
        cfg = SynthConfig(
            K_signal=args.k_signal, harmonic_rolloff=args.rolloff, snr_db_per_sweep=args.snr_db,
            noise_kind=args.noise, sample_rate_hz=args.fs, seed=args.seed,
            lead_in_ms=args.pre_stim_ms + args.delay_ms, tail_ms=args.tail_ms,
        )
        session = synth_session(spec, cfg, args.sweeps)
    with stage("write output"):
        meta = effective_config(args)
        write_sweeps(args.out, session, meta if Path(args.out).suffix.lower() == ".csv" else None)
        write_contour_csv(args.truth, truth, meta)
    return 0


def cmd_avg(args) -> int:
    from .preprocess import SweepSet, write_sweeps
    from .wavio import write_wav

    with stage("read sweeps"):
        avg = _load_response(args.input, args.sweeps, args.avg_mode)
    with stage("write output"):
        if Path(args.out).suffix.lower() == ".wav":
            write_wav(args.out, avg)
        else:
            meta = effective_config(args) if Path(args.out).suffix.lower() == ".csv" else None
            write_sweeps(args.out, SweepSet(avg.samples[None, :], avg.sample_rate_hz), meta)
    return 0


def cmd_bench(args) -> int:
    from .bench import BenchSetup, format_bench_metrics, format_bench_trials, format_bench_ttests, run_benchmark
    from .pipeline import METHODS
    from .synth import PRESET_K, SynthConfig

    with stage("configure"):
        spec = _load_spec(args)
        methods = tuple(m.strip() for m in args.methods.split(",") if m.strip())
        bad = set(methods) - set(METHODS)
        if bad:
            raise ValueError(f"unknown method(s) {sorted(bad)}")
        if args.k is None:
            args.k = PRESET_K.get(spec.name, HasConfig().K) if not args.contour_spec else HasConfig().K
        if args.trials < 1:
            raise ValueError("--trials must be >= 1")
        synth = SynthConfig(
            K_signal=args.k_signal, harmonic_rolloff=args.rolloff, snr_db_per_sweep=args.snr_db,
            noise_kind=args.noise, sample_rate_hz=args.fs, seed=args.seed,
            lead_in_ms=args.pre_stim_ms + args.delay_ms, tail_ms=50.0,
        )
        setup = BenchSetup(spec, synth, _pipeline_config(args), tuple(args.sweep_counts), methods,
                           spec.name or "custom")
    with stage("benchmark"):
        result = run_benchmark(setup, args.trials, args.seed, args.workers)
    with stage("write output"):
        out = Path(args.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        meta = effective_config(args)
        atomic_write_text(out / "bench_metrics.csv", format_bench_metrics(result, meta))
        atomic_write_text(out / "bench_trials.csv", format_bench_trials(result, meta))
        atomic_write_text(out / "bench_ttests.csv", format_bench_ttests(result, meta))
    for n in setup.sweep_counts:
        row = "  ".join(f"{m}={result.rmse(m, n).mean():7.3f}" for m in methods)
        print(f"n_sweeps={n:5d}  mean RMSE (Hz): {row}")
    return 0


COMMANDS = {"track": cmd_track, "metrics": cmd_metrics, "synth": cmd_synth, "avg": cmd_avg, "bench": cmd_bench}


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(levelname)s %(name)s: %(message)s")
        return COMMANDS[args.command](args)
    except StageError as err:
        print(f"ffrpitch: error in stage '{err.stage}': {err.exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
