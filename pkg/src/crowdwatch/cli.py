"""Command-line interface: synth, detect, features, eval.

Exit codes: 0 success, 2 bad arguments or config, 3 I/O failure,
4 malformed or insufficient data, 5 evaluation errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

import numpy as np

from . import evalkit, synthgen
from .errors import (
    EvaluationError,
    FormatError,
    IngestionError,
    ParameterError,
    TrainingError,
)
from .pipeline import (
    FeatureDump,
    PipelineConfig,
    read_scores_csv,
    run_detection,
    write_scores_csv,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_DATA = 4
EXIT_EVAL = 5


def _load_config(args) -> PipelineConfig:
    cfg = PipelineConfig.from_file(args.config) if args.config else PipelineConfig()
    overrides = {}
    for item in args.set or []:
        if "=" not in item:
            raise ParameterError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    cfg.apply_overrides(overrides)
    return cfg


def cmd_detect(args) -> int:
    cfg = _load_config(args)
    result = run_detection(args.manifest, cfg)
    write_scores_csv(args.out, result.scores, result.labels)
    if args.dump_config:
        Path(args.dump_config).write_text(cfg.to_text())
    fps = result.n_frames / result.elapsed if result.elapsed > 0 else float("inf")
    print(
        f"processed {result.n_frames} frames ({result.width}x{result.height}) "
        f"in {result.elapsed:.2f}s ({fps:.1f} fps), {result.n_atoms} dictionary atoms"
    )
    print(f"scores written to {args.out}")
    return EXIT_OK


def cmd_features(args) -> int:
    cfg = _load_config(args)
    dump = FeatureDump(
        out_dir=Path(args.out_dir),
        vectors=not args.no_vectors,
        descriptors=not args.no_descriptors,
        texture=not args.no_texture,
        masks=args.masks,
    )
    result = run_detection(args.manifest, cfg, dump=dump)
    for path in dump.flush():
        print(f"wrote {path}")
    print(f"processed {result.n_frames} frames")
    return EXIT_OK


def cmd_eval(args) -> int:
    curves = []
    for spec in args.scores:
        name, _, path = spec.rpartition("=")
        if not name:
            name = Path(path).stem
        scores, labels = read_scores_csv(path)
        labeled = labels >= 0
        curves.append((name, evalkit.roc(scores[labeled], labels[labeled])))
    evalkit.emit_reports(curves, args.out_csv, args.out_svg)
    for name, curve in curves:
        print(f"AUC {name}: {curve.auc:.4f}")
    print(f"reports written to {args.out_csv} and {args.out_svg}")
    return EXIT_OK


def cmd_synth(args) -> int:
    script = synthgen.preset(args.preset)
    if args.seed is not None:
        script = dataclasses.replace(script, seed=args.seed)
    manifest = synthgen.render(script, args.out_dir)
    print(f"rendered {script.n_frames} frames to {args.out_dir}")
    print(f"manifest: {manifest}")
    return EXIT_OK


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="crowdwatch",
        description="Crowd anomaly detection for grayscale video sequences.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", help="run the detection pipeline, write per-frame scores")
    p.add_argument("manifest", help="sequence manifest path")
    p.add_argument("--config", help="key = value config file")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
    p.add_argument("--out", default="scores.csv", help="output scores CSV")
    p.add_argument("--dump-config", help="write the effective config to this path")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("features", help="dump intermediate per-frame artifacts as CSV")
    p.add_argument("manifest")
    p.add_argument("--config")
    p.add_argument("--set", action="append", metavar="KEY=VALUE")
    p.add_argument("--out-dir", default="features_out")
    p.add_argument("--no-vectors", action="store_true", help="skip vectors.csv")
    p.add_argument("--no-descriptors", action="store_true", help="skip descriptors.csv")
    p.add_argument("--no-texture", action="store_true", help="skip texture.csv")
    p.add_argument("--masks", action="store_true", help="also dump foreground masks as PGM")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("eval", help="ROC/AUC reports from one or more scores CSVs")
    p.add_argument("scores", nargs="+", metavar="[NAME=]SCORES_CSV")
    p.add_argument("--out-csv", default="roc.csv")
    p.add_argument("--out-svg", default="roc.svg")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="render a synthetic labeled scene")
    p.add_argument("preset", help="walk, dispersal, or counterflow")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out-dir", default="synth_out")
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParameterError as exc:  # ConfigError included
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (IngestionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (FormatError, TrainingError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except EvaluationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_EVAL


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
