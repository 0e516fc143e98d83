"""Command-line entry point.

One subcommand per pipeline stage, plus `run` for a chain, `report` for
tabular exports, and `serve` for the review service.  Exit codes: 0 on
success, 1 for configuration or validation problems, 2 when an upstream
stage artifact is missing.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from . import pipeline
from .pipeline import ConfigError, MissingArtifactError, PipelineConfig

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_MISSING_ARTIFACT = 2


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chaptercoder",
        description="chapter-first ICD-9 coding pipeline",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--config", required=True, help="path to the JSON pipeline config")
        p.add_argument("--run", default=None, help="run id (default: derived from the config hash)")
        p.add_argument("--seed", type=int, default=None, help="override the configured seed")

    for stage in pipeline.STAGES:
        p = sub.add_parser(stage, help=f"run the {stage} stage")
        add_common(p)

    p = sub.add_parser("run", help="run stages in order")
    add_common(p)
    p.add_argument("--stage", default=None,
                   help="run only this stage (default: the full chain through eval)")

    p = sub.add_parser("report", help="print a tabular report for a finished run")
    add_common(p)
    p.add_argument("--kind", required=True,
                   help="one of: " + ", ".join(pipeline.REPORT_KINDS))

    p = sub.add_parser("serve", help="start the human-review HTTP service")
    add_common(p)
    return parser


def _load(args) -> PipelineConfig:
    return pipeline.load_config(args.config, run_id=args.run, seed=args.seed)


def _print_entry(stage: str, entry: dict) -> None:
    print(json.dumps({"stage": stage, "stats": entry["stats"]}, sort_keys=True))


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = _load(args)
        if args.command in pipeline.STAGES:
            _print_entry(args.command, pipeline.run_stage(args.command, config))
        elif args.command == "run":
            if args.stage is not None:
                _print_entry(args.stage, pipeline.run_stage(args.stage, config))
            else:
                for stage, entry in pipeline.run_all(config).items():
                    _print_entry(stage, entry)
        elif args.command == "report":
            sys.stdout.write(pipeline.export_report(config, args.kind))
        elif args.command == "serve":
            from .service import serve

            serve(config, port=_port_from_env(config))
    except MissingArtifactError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_MISSING_ARTIFACT
    except (ConfigError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    return EXIT_OK


def _port_from_env(config: PipelineConfig) -> int:
    raw = os.environ.get("CHAPTERCODER_PORT")
    if raw is None:
        return config.port
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"CHAPTERCODER_PORT must be an integer, got {raw!r}")


if __name__ == "__main__":
    sys.exit(main())
