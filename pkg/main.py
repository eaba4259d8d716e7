import argparse
import sys
from typing import List, Optional

from src.osad.config import load_config
from src.osad.errors import EXIT_ARTIFACT, EXIT_INVALID, EXIT_OK, OsadError
from src.osad.pipeline import OsadPipeline

VERBS = ("synth", "learn", "design", "run", "eval", "report", "all")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Selective anomaly detection toolkit")
    parser.add_argument(
        "--config",
        default=None,
        help="JSON config file (default: $OSAD_CONFIG or osad.json when present).",
    )
    parser.add_argument(
        "--set",
        dest="overrides",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="Override a config value, e.g. --set cusum.alpha=1e-3 (repeatable).",
    )
    sub = parser.add_subparsers(dest="verb", required=True)
    for verb, help_text in (
        ("synth", "Generate the synthetic bench."),
        ("learn", "Identify an LDS per subject."),
        ("design", "Design and verify the pattern-decoupled residual generator."),
        ("run", "Run both CUSUM streams and write alert intervals (live JSON feed on stdout)."),
        ("eval", "Score alerts against labels; print metric tables and the transfer grid."),
        ("report", "Write plot-ready CSVs."),
        ("all", "Run every stage in order."),
    ):
        sub.add_parser(verb, help=help_text)
    config = sub.add_parser("config", help="Configuration commands.")
    config.add_argument("action", choices=["show"], help="Print the resolved configuration.")
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, args.overrides)
        if args.verb == "config":
            print(cfg.model_dump_json(indent=2))
            return EXIT_OK
        pipeline = OsadPipeline(cfg)
        if args.verb == "all":
            pipeline.run()
        else:
            pipeline.stage(args.verb)
    except OsadError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ARTIFACT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
