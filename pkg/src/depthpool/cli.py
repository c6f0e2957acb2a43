"""Command line interface.

Subcommands mirror the pipeline stages: segment, encode, train-baseline,
classify, eval, config.  Exit codes: 0 success, 1 usage error, 2 data
error (bad paths, unreadable input, invalid configuration), 3 internal
error.
"""

from __future__ import annotations

import argparse
import os
import sys
import traceback

from .errors import DepthPoolError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage problems; remap to 1
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="depthpool", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    def common(p, output_default):
        p.add_argument("--config", help="INI configuration file")
        p.add_argument("--output-dir", default=output_default, help="where results are written")

    p = sub.add_parser("segment", parents=[], help="split a depth stream into action segments")
    p.add_argument("--input", help="depth stream (png_dir directory or dseq file)")
    p.add_argument("--format", default="auto", choices=("auto", "png_dir", "dseq"))
    p.add_argument("--model", help="segmentation model JSON from an earlier --fit")
    p.add_argument("--fit", help='training spec JSON: [{"input":..., "segments":...}]')
    p.add_argument("--figures", action="store_true", help="also render the movement profile")
    common(p, "segment_out")

    p = sub.add_parser("encode", help="encode segments into dynamic image PNGs")
    p.add_argument("--input", required=True, help="depth stream (png_dir or dseq)")
    p.add_argument("--format", default="auto", choices=("auto", "png_dir", "dseq"))
    p.add_argument("--segments", required=True, help="segments JSON")
    p.add_argument("--channels", help="comma list of ddi,ddni,ddmni (overrides config)")
    p.add_argument("--jobs", type=int, help="parallel workers (overrides config)")
    p.add_argument("--seed", type=int, help="run seed recorded in the manifest")
    common(p, "encode_out")

    p = sub.add_parser("train-baseline", help="train the nearest-centroid baseline")
    p.add_argument(
        "--manifest", action="append", required=True, help="encode manifest (repeatable)"
    )
    p.add_argument("--labels", help="optional JSON {segment_id: class} label override")
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--output", default="baseline_model.json", help="model file to write")

    p = sub.add_parser("classify", help="score, fuse and label encoded segments")
    p.add_argument("--manifest", required=True, help="encode manifest")
    p.add_argument("--model", help="baseline model JSON")
    p.add_argument("--scores", help="external per-channel scores JSON")
    p.add_argument("--channels", help="comma list of channels to fuse (overrides config)")
    p.add_argument("--config", help="INI configuration file")
    p.add_argument("--output", default="predictions.json", help="predictions file to write")

    p = sub.add_parser("eval", help="compare predictions against truth segments")
    p.add_argument("--predictions", help="predictions JSON from classify")
    p.add_argument("--truth", help="truth segments JSON")
    p.add_argument(
        "--batch", help='JSON list [{"name":..., "predictions":..., "truth":...}] to evaluate'
    )
    p.add_argument("--frames", type=int, help="stream length when it exceeds the last segment")
    p.add_argument("--no-figures", action="store_true", help="skip figure rendering")
    common(p, "eval_out")

    p = sub.add_parser("config", help="inspect the configuration")
    p.add_argument("--dump", action="store_true", help="print the annotated default file")
    p.add_argument("--config", help="INI file to validate and dump instead of the defaults")

    return parser


def _load_config(args):
    from .config import load_config

    config = load_config(getattr(args, "config", None))
    channels = getattr(args, "channels", None)
    if channels:
        config.channels = tuple(c.strip() for c in channels.split(",") if c.strip())
        config.__post_init__()
    if getattr(args, "jobs", None):
        config.jobs = int(args.jobs)
        config.__post_init__()
    if getattr(args, "seed", None) is not None:
        config.seed = int(args.seed)
    return config


def _cmd_segment(args) -> int:
    from . import pipeline

    config = _load_config(args)
    if not args.fit and not args.model:
        raise UsageError("segment needs --model or --fit")
    if args.fit:
        model = pipeline.fit_from_spec(args.fit, config)
        os.makedirs(args.output_dir, exist_ok=True)
        pipeline.write_json(
            pipeline.model_to_json(model),
            os.path.join(args.output_dir, pipeline.MODEL_FILE),
        )
    else:
        model = pipeline.load_segmentation_model(args.model)
    if args.input:
        segments = pipeline.run_segment(
            args.input, model, config, args.output_dir, args.format, args.figures
        )
        print(f"{len(segments)} segments -> {os.path.join(args.output_dir, pipeline.SEGMENTS_FILE)}")
    return EXIT_OK


def _cmd_encode(args) -> int:
    from . import pipeline

    config = _load_config(args)
    manifest = pipeline.run_encode(
        args.input, args.segments, config, args.output_dir, args.format
    )
    n_images = sum(len(s["images"]) for s in manifest["segments"])
    n_errors = sum(len(s["errors"]) for s in manifest["segments"])
    print(f"{n_images} images, {n_errors} channel failures -> {args.output_dir}")
    return EXIT_OK


def _cmd_train_baseline(args) -> int:
    from . import pipeline

    config = _load_config(args)
    model = pipeline.run_train_baseline(args.manifest, config, args.output, args.labels)
    print(f"model over {len(model.classes)} classes, {len(model.channels)} channels -> {args.output}")
    return EXIT_OK


def _cmd_classify(args) -> int:
    from . import pipeline
    from .baseline import CentroidModel

    config = _load_config(args)
    if (args.model is None) == (args.scores is None):
        raise UsageError("classify needs exactly one of --model / --scores")
    model = CentroidModel.load(args.model) if args.model else None
    predictions = pipeline.run_classify(
        args.manifest, config, args.output, model=model, scores_path=args.scores
    )
    print(f"{len(predictions['segments'])} segments labeled -> {args.output}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    from . import pipeline

    if args.batch:
        if args.predictions or args.truth:
            raise UsageError("--batch replaces --predictions/--truth")
        spec = pipeline.read_json(args.batch)
        base = os.path.dirname(os.path.abspath(args.batch))
        pairs = [
            (
                entry.get("name", f"pair_{i:03d}"),
                os.path.join(base, entry["predictions"]),
                os.path.join(base, entry["truth"]),
            )
            for i, entry in enumerate(spec)
        ]
    else:
        if not args.predictions or not args.truth:
            raise UsageError("eval needs --predictions and --truth (or --batch)")
        name = os.path.splitext(os.path.basename(args.predictions))[0]
        pairs = [(name, args.predictions, args.truth)]
    metrics = pipeline.run_eval(
        pairs, args.output_dir, frames=args.frames, figures=not args.no_figures
    )
    print(
        f"recognition {metrics['recognition_rate']:.4f}, "
        f"mean Jaccard {metrics['mean_jaccard']:.4f} -> {args.output_dir}"
    )
    return EXIT_OK


def _cmd_config(args) -> int:
    from .config import dump_config, load_config

    config = load_config(args.config) if args.config else None
    if args.dump or config is not None:
        sys.stdout.write(dump_config(config))
        return EXIT_OK
    raise UsageError("config needs --dump (optionally with --config FILE)")


class UsageError(Exception):
    pass


_COMMANDS = {
    "segment": _cmd_segment,
    "encode": _cmd_encode,
    "train-baseline": _cmd_train_baseline,
    "classify": _cmd_classify,
    "eval": _cmd_eval,
    "config": _cmd_config,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if not args.command:
        parser.print_help()
        return EXIT_USAGE
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"depthpool {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DepthPoolError as exc:
        print(f"depthpool {args.command}: {exc}", file=sys.stderr)
        return EXIT_DATA
    except Exception:
        traceback.print_exc()
        return EXIT_INTERNAL


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
