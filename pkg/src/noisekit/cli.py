"""noisekit command line: analyze, augment, features, eval, kernels selftest.

Exit codes: 0 success, 1 usage error, 2 data error under --strict.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys

from noisekit import pipeline
from noisekit.pitch import PitchConfig
from noisekit.spectral import FrameGeometry
from noisekit.wada import GainTable, default_gain_table

log = logging.getLogger("noisekit")

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", "-o", default="noisekit_out")
    p.add_argument("--strict", action="store_true")
    p.add_argument("--config", help="JSON file of option defaults; explicit flags win")
    return p


def _geometry_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sample-rate", type=int, default=24000)
    p.add_argument("--window", type=int, default=1024)
    p.add_argument("--hop", type=int, default=256)
    p.add_argument("--fft", type=int, default=1024)
    p.add_argument("--f0-min", type=float, default=50.0)
    p.add_argument("--f0-max", type=float, default=500.0)
    p.add_argument("--voicing-threshold", type=float, default=0.3)
    p.add_argument("--no-median-filter", action="store_true")


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, argparse.ArgumentParser]]:
    parser = _Parser(prog="noisekit", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    common = _common()
    subs = {}

    p = sub.add_parser("analyze", parents=[common], help="WADA-SNR report over a corpus")
    p.add_argument("inputs", nargs="*", help="WAV files, directories, or .txt/.lst manifests")
    p.add_argument("--gain-table", help="cached gain table JSON (built from --seed otherwise)")
    p.add_argument("--save-gain-table", help="write the gain table used to this path")
    subs["analyze"] = p

    p = sub.add_parser("augment", parents=[common], help="mix noise into speech at sampled SNRs")
    p.add_argument("--speech", nargs="+", default=[])
    p.add_argument("--noise", nargs="+", default=[])
    p.add_argument("--snr-range", nargs=2, type=float, default=[5.0, 25.0], metavar=("LOW", "HIGH"))
    p.add_argument("--region", default="full", help="full, second_half, or interval(START_S,END_S)")
    p.add_argument("--snr-reference", choices=["region_power", "active_power"], default="region_power")
    p.add_argument("--wraparound", action="store_true")
    p.add_argument("--encoding", choices=["float32", "pcm16"], default="float32")
    subs["augment"] = p

    p = sub.add_parser("features", parents=[common], help="mel-80, bark-20 and pitch dumps")
    p.add_argument("inputs", nargs="*")
    _geometry_args(p)
    subs["features"] = p

    p = sub.add_parser("eval", parents=[common], help="GPE/VDE/FFE/MCD over paired files")
    p.add_argument("--ref", dest="ref_dir")
    p.add_argument("--cand", dest="cand_dir")
    p.add_argument("--pairs", help="CSV of ref,cand paths (overrides basename pairing)")
    p.add_argument("--align", choices=["dtw", "none"], default="dtw")
    _geometry_args(p)
    subs["eval"] = p

    p = sub.add_parser("kernels", help="numeric kernel utilities")
    ksub = p.add_subparsers(dest="kernels_command", required=True, parser_class=_Parser)
    ksub.add_parser("selftest", help="run every oracle suite and report max errors")
    subs["kernels"] = p
    return parser, subs


def _parse(argv):
    parser, subs = build_parser()
    args = parser.parse_args(argv)
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            with open(config_path) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            parser.error(f"cannot read config {config_path}: {exc}")
        cfg = {k.replace("-", "_"): v for k, v in cfg.items()}
        subs[args.command].set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def _geometry(args) -> tuple[FrameGeometry, PitchConfig]:
    try:
        geom = FrameGeometry(args.window, args.hop, args.fft, args.sample_rate)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    cfg = PitchConfig(args.f0_min, args.f0_max, args.voicing_threshold, median_filter=not args.no_median_filter)
    return geom, cfg


def _finish(summary: dict, args, label: str) -> int:
    n_err = summary.get("n_errors", 0)
    for path, msg in sorted(summary.get("errors", {}).items()):
        log.warning("%s: %s", path, msg)
    unmatched = summary.get("unmatched", [])
    if unmatched:
        log.warning("%d unmatched file(s) skipped", len(unmatched))
    print(f"{label}: wrote results to {args.output} ({n_err} error(s))")
    if args.strict and (n_err or unmatched):
        return EXIT_DATA
    return EXIT_OK


def cmd_analyze(args) -> int:
    paths = pipeline.collect_inputs(args.inputs)
    if not paths:
        raise UsageError("analyze needs at least one input file")
    table = GainTable.load(args.gain_table) if args.gain_table else default_gain_table(args.seed)
    if args.save_gain_table:
        table.save(args.save_gain_table)
    summary = pipeline.run_analyze(paths, args.output, table, args.workers)
    print(f"mean WADA SNR {summary['mean']:.2f} dB over {summary['n']} file(s)")
    return _finish(summary, args, "analyze")


def cmd_augment(args) -> int:
    speech = pipeline.collect_inputs(args.speech)
    noise = pipeline.collect_inputs(args.noise)
    if not speech or not noise:
        raise UsageError("augment needs --speech and --noise inputs")
    low, high = args.snr_range
    if low > high:
        raise UsageError("--snr-range LOW must not exceed HIGH")
    summary = pipeline.run_augment(
        speech, noise, args.output, (low, high), args.region, args.seed, args.workers,
        args.encoding, args.snr_reference, args.wraparound,
    )
    return _finish(summary, args, "augment")


def cmd_features(args) -> int:
    paths = pipeline.collect_inputs(args.inputs)
    if not paths:
        raise UsageError("features needs at least one input file")
    geom, cfg = _geometry(args)
    summary = pipeline.run_features(paths, args.output, geom, cfg, args.workers)
    return _finish(summary, args, "features")


def cmd_eval(args) -> int:
    geom, cfg = _geometry(args)
    if args.pairs:
        pairs, unmatched = pipeline.read_pairs_file(args.pairs), []
    else:
        if not (args.ref_dir and args.cand_dir):
            raise UsageError("eval needs --ref and --cand directories, or --pairs")
        pairs, unmatched = pipeline.pair_by_basename(
            pipeline.collect_inputs([args.ref_dir]), pipeline.collect_inputs([args.cand_dir])
        )
    summary = pipeline.run_eval(pairs, args.output, geom, cfg, args.align, args.workers, unmatched)
    print(
        f"{summary['n_pairs']} pair(s): gpe={summary['gpe']:.4f} vde={summary['vde']:.4f} "
        f"ffe={summary['ffe']:.4f} mcd_db={summary['mcd_db']:.4f}"
    )
    return _finish(summary, args, "eval")


def cmd_kernels(args) -> int:
    from noisekit.selftest import run_all

    return EXIT_OK if run_all() else EXIT_DATA


COMMANDS = {"analyze": cmd_analyze, "augment": cmd_augment, "features": cmd_features,
            "eval": cmd_eval, "kernels": cmd_kernels}


def main(argv=None) -> int:
    args = _parse(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    if getattr(args, "workers", 1) < 1:
        print("noisekit: error: --workers must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"noisekit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ValueError as exc:
        print(f"noisekit: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
