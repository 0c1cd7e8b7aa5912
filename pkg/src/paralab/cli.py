"""Command-line entry point: ``paralab <pipeline> [--config FILE] [--set k=v]... --out DIR [--seed N]``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .pipelines import PIPELINES, list_pipelines, run

logger = logging.getLogger("paralab")

EXIT_PASS = 0
EXIT_ERROR = 1
EXIT_FAIL = 2


def _parse_value(text: str):
    """JSON literal when it parses (numbers, lists, booleans), otherwise the raw string."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _parse_sets(items: list[str]) -> dict:
    out = {}
    for item in items:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise ValueError(f"--set expects key=value, got {item!r}")
        out[key.strip()] = _parse_value(value.strip())
    return out


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="paralab",
        description="Run a named numerical experiment and write <out>/<pipeline>.{csv,json,plotdata}.",
    )
    parser.add_argument("pipeline", help="pipeline name, or 'list' to print the catalog")
    parser.add_argument("--config", type=Path, help="JSON file with parameter values")
    parser.add_argument("--set", dest="sets", action="append", default=[], metavar="KEY=VALUE",
                        help="override one parameter (JSON literal or plain string); repeatable")
    parser.add_argument("--out", type=Path, default=Path("paralab-out"), help="output directory")
    parser.add_argument("--seed", type=int, help="seed for randomized pipelines")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    return parser


def _print_catalog() -> None:
    for entry in list_pipelines():
        seed = " (needs --seed)" if entry["randomized"] else ""
        print(f"{entry['name']}{seed}: {entry['claim']}")
        for key, spec in entry["params"].items():
            print(f"    {key} [{spec['kind']}] = {json.dumps(spec['default'])}  {spec['help']}")


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.pipeline == "list":
        _print_catalog()
        return EXIT_PASS
    try:
        if args.pipeline not in PIPELINES:
            raise ValueError(f"unknown pipeline {args.pipeline!r}; run 'paralab list' for the catalog")
        params: dict = {}
        if args.config is not None:
            loaded = json.loads(args.config.read_text())
            if not isinstance(loaded, dict):
                raise ValueError("config file must hold a JSON object")
            params.update(loaded)
        params.update(_parse_sets(args.sets))
        if args.seed is not None:
            params["seed"] = args.seed
        record = run(args.pipeline, params)
        args.out.mkdir(parents=True, exist_ok=True)
        stem = args.out / args.pipeline
        stem.with_suffix(".csv").write_text(record.to_csv())
        stem.with_suffix(".json").write_text(record.to_json())
        stem.with_suffix(".plotdata").write_text(record.to_plotdata())
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"paralab: error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    for v in record.verdicts:
        status = "PASS" if v.passed else "FAIL"
        print(f"{status} {v.name}: measured={v.measured:.6g} predicted={v.predicted:.6g} "
              f"relation={v.relation} tolerance={v.tolerance:.3g}")
    return EXIT_PASS if record.passed else EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
