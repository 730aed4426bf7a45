"""Command-line driver.

Subcommands: inspect, flatten, select, pipeline, gen-corpus. Flags override
config-file keys of the same name. LOGFLAT_LOG (or TOOL_LOG) on stderr:
debug|info|warn. Exit codes: 0 ok, 1 usage/config, 2 input, 3 processing.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys

from . import __version__
from .corpus import TEMPLATES, generate_corpus
from .errors import ConfigError, InputError, LogflatError, exit_code_for
from .pipeline import PipelineConfig, run_flatten, run_inspect, run_pipeline

log = logging.getLogger("logflat")


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse defaults to exit code 2; usage is 1
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _setup_logging():
    level_name = os.environ.get("LOGFLAT_LOG") or os.environ.get("TOOL_LOG") or "warn"
    level = {
        "debug": logging.DEBUG,
        "info": logging.INFO,
        "warn": logging.WARNING,
        "warning": logging.WARNING,
    }.get(level_name.strip().lower(), logging.WARNING)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("%(levelname)s %(name)s: %(message)s"))
    log.handlers[:] = [handler]
    log.setLevel(level)


def _add_common(parser):
    parser.add_argument("inputs", nargs="*", metavar="INPUT", help="JSONL input file")
    parser.add_argument("--config", help="JSON config file; flags override its keys")
    parser.add_argument("--mode", choices=("local", "global"))
    parser.add_argument("--out", dest="out_dir", help="output directory")
    parser.add_argument("--format", dest="out_format", choices=("csv", "jsonl"))
    parser.add_argument("--report", dest="report_path", help="report file path")
    parser.add_argument("--error-policy", choices=("skip", "abort"))
    parser.add_argument("--workers", type=int)
    parser.add_argument("--max-depth", type=int)
    parser.add_argument("--null-fill", choices=("none", "mean", "median", "sentinel"))
    parser.add_argument("--sentinel", help="sentinel value for --null-fill sentinel")
    parser.add_argument("--strict-timestamps", action="store_true", default=None)
    parser.add_argument("--pearson-threshold", type=float)
    parser.add_argument("--chi", metavar="MODE=PARAM",
                        help="chi-square mode: numTopFeatures|percentile|fpr|fdr = value")
    parser.add_argument("--label", help="label column for chi-square / importance")
    parser.add_argument("--seed", type=int, help="selection RNG seed")
    parser.add_argument("--apply-merges", action="store_true", default=None)
    parser.add_argument("--pseudo-labels", action="store_true", default=None)
    parser.add_argument("--no-index-scale", action="store_true", default=None)
    parser.add_argument("--abbrev", dest="abbreviations",
                        help="extra short=long abbreviation file")


def _parse_chi(text: str) -> tuple[str, float]:
    mode, sep, param = text.partition("=")
    if not sep:
        raise ConfigError("--chi expects MODE=PARAM, e.g. fdr=0.1")
    try:
        return mode.strip(), float(param)
    except ValueError as exc:
        raise ConfigError(f"bad --chi parameter {param!r}") from exc


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path!r}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    return data


def _build_config(args) -> PipelineConfig:
    data = _load_config(args.config)
    flatten_cfg = dict(data.pop("flatten", {}))
    select_cfg = dict(data.pop("select", {}))

    if args.inputs:
        data["inputs"] = args.inputs
    for key in ("mode", "out_dir", "out_format", "report_path", "error_policy",
                "workers", "label", "abbreviations"):
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    if args.strict_timestamps is not None:
        data["strict_timestamps"] = args.strict_timestamps
    if args.apply_merges is not None:
        data["apply_merges"] = args.apply_merges
    if args.pseudo_labels is not None:
        data["pseudo_labels"] = args.pseudo_labels
    if args.no_index_scale:
        data["index_scale"] = False
    if args.max_depth is not None:
        flatten_cfg["max_depth"] = args.max_depth
    if args.null_fill is not None:
        flatten_cfg["null_fill"] = args.null_fill
    if args.sentinel is not None:
        flatten_cfg["sentinel"] = args.sentinel
    if args.pearson_threshold is not None:
        select_cfg["pearson_threshold"] = args.pearson_threshold
    if args.seed is not None:
        select_cfg["seed"] = args.seed
    if args.chi is not None:
        mode, param = _parse_chi(args.chi)
        select_cfg["chi_mode"] = mode
        select_cfg["chi_param"] = param
        data["chi_enabled"] = True
    if flatten_cfg:
        data["flatten"] = flatten_cfg
    if select_cfg:
        data["select"] = select_cfg
    cfg = PipelineConfig.from_dict(data)
    if not cfg.inputs:
        raise ConfigError("an input file is required (argument or config key 'inputs')")
    return cfg


def _emit(report: dict, to_stdout: bool):
    if to_stdout:
        json.dump(report, sys.stdout, sort_keys=True, indent=2, ensure_ascii=False)
        print()


def main(argv=None) -> int:
    _setup_logging()
    parser = _Parser(prog="logflat", description=__doc__)
    parser.add_argument("--version", action="version", version=f"logflat {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (
        ("inspect", "report schemas, classifications, and merge candidates"),
        ("flatten", "flatten only: write frames without selection"),
        ("select", "run the pipeline, emit the selection report, write no frames"),
        ("pipeline", "full extraction + selection, write frames and report"),
    ):
        p = sub.add_parser(name, help=helptext)
        _add_common(p)

    g = sub.add_parser("gen-corpus", help="write a seeded synthetic corpus")
    g.add_argument("--out", required=True, help="output JSONL path")
    g.add_argument("--seed", type=int, default=42)
    g.add_argument("--records-per-schema", type=int, default=100)
    g.add_argument("--templates", help="JSON file: list of payload field lists")

    args = parser.parse_args(argv)
    try:
        if args.command == "gen-corpus":
            templates = None
            if args.templates:
                with open(args.templates, "r", encoding="utf-8") as fh:
                    templates = json.load(fh)
                if not isinstance(templates, list) or not all(
                        isinstance(t, list) for t in templates):
                    raise ConfigError("templates file must hold a list of field lists")
            count = generate_corpus(args.out, seed=args.seed,
                                    records_per_schema=args.records_per_schema,
                                    templates=templates)
            print(f"wrote {count} records ({len(templates or TEMPLATES)} schemas) to {args.out}")
            return 0

        cfg = _build_config(args)
        if args.command == "inspect":
            report = run_inspect(cfg)
            _emit(report, to_stdout=True)
        elif args.command == "flatten":
            report = run_flatten(cfg)
            print(f"wrote {len(report.get('written', {}))} frame(s) to {cfg.out_dir}")
        elif args.command == "select":
            report = run_pipeline(cfg, write_frames=False)
            _emit(report, to_stdout=cfg.report_path is None)
        else:  # pipeline
            report = run_pipeline(cfg)
            print(f"wrote {len(report.get('written', {}))} frame(s) to {cfg.out_dir}")
        return 0
    except LogflatError as exc:
        print(f"logflat: error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    raise SystemExit(main())
