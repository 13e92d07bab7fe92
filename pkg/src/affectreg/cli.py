"""Command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 embedding provider error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import ConfigError, load_config
from .container import ContainerError
from .corpus import DataError
from .embed import ProviderError

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_PROVIDER = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="affectreg", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(p):
        p.add_argument("--config", "-c", help="JSON run config")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config field, e.g. train.epochs=50")
        p.add_argument("--seed", type=int)
        p.add_argument("--task", choices=("primary", "adaptation"))
        p.add_argument("--output-dir")

    p = sub.add_parser("featurize", help="embed and lexicon-featurize every configured split")
    common(p)

    p = sub.add_parser("train", help="train models from featurized splits")
    common(p)

    p = sub.add_parser("predict", help="write a submission file for an input dataset")
    common(p)
    p.add_argument("run_dir")
    p.add_argument("input")
    p.add_argument("--output", "-o")

    for name, help_ in (("evaluate", "Pearson scores for a prediction file"),
                        ("analyze", "error analysis of predictions, or the gold distribution of a dataset")):
        p = sub.add_parser(name, help=help_)
        common(p)
        p.add_argument("predictions", nargs="?" if name == "analyze" else None)
        p.add_argument("gold", nargs="?" if name == "analyze" else None)
        p.add_argument("--report-dir")
        if name == "analyze":
            p.add_argument("--data", help="dataset with gold columns to describe")
            p.add_argument("--bin-width", type=float, default=1.0)
    return parser


def _config(args):
    return load_config(args.config, args.overrides, seed=args.seed, task=args.task,
                       output_dir=args.output_dir)


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = _config(args)
        if args.command == "featurize":
            for split, path in pipeline.featurize(config).items():
                print(f"{split}\t{path}")
        elif args.command == "train":
            print(pipeline.train(config))
        elif args.command == "predict":
            print(pipeline.predict(config, args.run_dir, args.input, args.output))
        elif args.command in ("evaluate", "analyze"):
            return _evaluate(args, config, parser)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataError, ContainerError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ProviderError as exc:
        print(f"provider error: {exc}", file=sys.stderr)
        return EXIT_PROVIDER
    return EXIT_OK


def _evaluate(args, config, parser) -> int:
    if args.command == "analyze" and args.data:
        print(pipeline.describe_data(config, args.data, args.bin_width), end="")
        return EXIT_OK
    if not (args.predictions and args.gold):
        parser.error("predictions and gold files are required")
    report = pipeline.evaluate(config, args.predictions, args.gold)
    out_dir = Path(args.report_dir or Path(args.predictions).parent)
    if args.command == "evaluate":
        out_dir.mkdir(parents=True, exist_ok=True)
        (out_dir / "eval_summary.tsv").write_text(report.summary_tsv(), encoding="utf-8")
        for t in report.targets:
            print(f"{t.target}\t{'undefined' if t.pearson is None else f'{t.pearson:.6f}'}")
        print(f"mean\t{'undefined' if report.mean_r is None else f'{report.mean_r:.6f}'}")
    else:
        report.write(out_dir, stem="analysis")
        print(report.text(), end="")
    if report.undefined:
        print(f"undefined correlation for: {', '.join(report.undefined)}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
