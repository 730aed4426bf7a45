"""Pipeline orchestration: ingest -> registry -> flatten -> timestamps ->
single-value pruning -> namespace merges -> index/scale -> Pearson pruning ->
chi-square (labeled) -> report, with per-stage wall-clock timings.

Two passes read the input: the first builds the registry (and the ingest
stats), the second flattens against the frozen registry, optionally across
worker processes.
"""

from __future__ import annotations

import json
import logging
import os
import time
from dataclasses import dataclass, field, fields as dc_fields

from . import __version__
from .errors import ConfigError, InputError
from .flatten import FlattenConfig, flatten_corpus
from .frame import Frame, column_from_values, convert_time_columns, string_index, write_csv, write_jsonl, zscale
from .ingest import read_corpus
from .schema import SchemaRegistry, build_registry
from .select import (
    REASON_ALL_NULL,
    REASON_CORRELATED,
    REASON_NOT_SELECTED_CHI,
    REASON_SINGLE_VALUED,
    SelectConfig,
    SelectionReport,
    apply_merges,
    chi_square_select,
    drop_single_valued,
    load_abbreviations,
    pearson_matrix,
    propose_namespace_merges,
    prune_by_correlation,
    pseudo_label_importances,
    tree_importance,
)

log = logging.getLogger("logflat")

SCHEMA_TYPE = "schemaType"
NUMERIC_KINDS = ("int", "float", "timestamp")


@dataclass
class PipelineConfig:
    inputs: list = field(default_factory=list)
    mode: str = "local"
    error_policy: str = "skip"
    out_dir: str = "out"
    out_format: str = "csv"
    report_path: str | None = None
    workers: int = 1
    strict_timestamps: bool = False
    index_scale: bool = True
    apply_merges: bool = False
    label: str | None = None
    pseudo_labels: bool = False
    chi_enabled: bool = False
    abbreviations: str | None = None
    flatten: FlattenConfig = field(default_factory=FlattenConfig)
    select: SelectConfig = field(default_factory=SelectConfig)

    def __post_init__(self):
        if self.mode not in ("local", "global"):
            raise ConfigError(f"mode must be local or global, not {self.mode!r}")
        if self.error_policy not in ("skip", "abort"):
            raise ConfigError(f"error_policy must be skip or abort, not {self.error_policy!r}")
        if self.out_format not in ("csv", "jsonl"):
            raise ConfigError(f"format must be csv or jsonl, not {self.out_format!r}")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        self.flatten.mode = self.mode

    @staticmethod
    def from_dict(data: dict) -> "PipelineConfig":
        data = dict(data)
        flatten_keys = {f.name for f in dc_fields(FlattenConfig)}
        select_keys = {f.name for f in dc_fields(SelectConfig)}
        top_keys = {f.name for f in dc_fields(PipelineConfig)}
        unknown = set(data) - top_keys
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            if "flatten" in data:
                sub = data["flatten"]
                bad = set(sub) - flatten_keys
                if bad:
                    raise ConfigError(f"unknown flatten keys: {sorted(bad)}")
                data["flatten"] = FlattenConfig(**sub)
            if "select" in data:
                sub = data["select"]
                bad = set(sub) - select_keys
                if bad:
                    raise ConfigError(f"unknown select keys: {sorted(bad)}")
                data["select"] = SelectConfig(**sub)
            return PipelineConfig(**data)
        except InputError as exc:
            raise ConfigError(str(exc)) from exc

    def echo(self) -> dict:
        out = {}
        for f in dc_fields(self):
            value = getattr(self, f.name)
            if f.name in ("flatten", "select"):
                out[f.name] = {g.name: getattr(value, g.name) for g in dc_fields(value)}
            else:
                out[f.name] = value
        return out


class _Timer:
    def __init__(self):
        self.timings: dict[str, float] = {}
        self._t0 = None
        self._stage = None

    def start(self, stage: str):
        self._stage = stage
        self._t0 = time.perf_counter()

    def stop(self):
        if self._stage is not None:
            elapsed = (time.perf_counter() - self._t0) * 1000.0
            self.timings[self._stage] = round(self.timings.get(self._stage, 0.0) + elapsed, 3)
            self._stage = None


def _single_input(cfg: PipelineConfig) -> str:
    if not cfg.inputs:
        raise ConfigError("no input file given")
    if len(cfg.inputs) > 1:
        raise ConfigError("one input file per run is supported")
    path = cfg.inputs[0]
    if not os.path.exists(path):
        raise InputError(f"input not found: {path}")
    return path


def _build_registry_pass(cfg: PipelineConfig, timer: _Timer):
    path = _single_input(cfg)
    timer.start("registry")
    records, stats = read_corpus(path, policy=cfg.error_policy,
                                 max_depth=cfg.flatten.max_depth)
    registry = build_registry(records, cfg.flatten.classify_config())
    timer.stop()
    return path, registry, stats


def _flatten_pass(cfg: PipelineConfig, path: str, registry: SchemaRegistry,
                  timer: _Timer) -> list[Frame]:
    timer.start("flatten")
    result, _ = flatten_corpus(path, registry, cfg.flatten,
                               workers=cfg.workers, policy=cfg.error_policy)
    timer.stop()
    return result if isinstance(result, list) else [result]


def _frame_summary(frames: list[Frame]) -> list[dict]:
    out = []
    for frame in frames:
        schema_type = None
        if frame.has_column(SCHEMA_TYPE):
            values = frame.column(SCHEMA_TYPE).distinct_non_null()
            schema_type = sorted(values)[0] if len(values) == 1 else None
        out.append({
            "name": frame.name,
            "schema_type": schema_type,
            "rows": frame.row_count,
            "width": frame.width,
            "columns": frame.names,
        })
    return out


def _width_stats(frames: list[Frame], mode: str) -> dict:
    data_frames = [f for f in frames if f.name != "rejected"]
    widths = [f.width for f in data_frames]
    stats = {
        "min_frame_width": min(widths) if widths else 0,
        "max_frame_width": max(widths) if widths else 0,
    }
    stats["global_width"] = widths[0] if mode == "global" and widths else None
    return stats


def _merge_samples(frames: list[Frame], exclude: set | None = None,
                   cap: int = 64) -> list[tuple]:
    exclude = exclude or set()
    pooled: dict[str, set] = {}
    order: list[str] = []
    for frame in frames:
        for col in frame.columns:
            if col.name == SCHEMA_TYPE or col.name in exclude:
                continue
            bucket = pooled.get(col.name)
            if bucket is None:
                bucket = pooled[col.name] = set()
                order.append(col.name)
            if len(bucket) < cap:
                for v in col.values:
                    if v is not None:
                        bucket.add(v)
                        if len(bucket) >= cap:
                            break
    return [(name, pooled[name]) for name in order]


def _write_frames(frames: list[Frame], cfg: PipelineConfig) -> dict:
    os.makedirs(cfg.out_dir, exist_ok=True)
    written = {}
    writer = write_csv if cfg.out_format == "csv" else write_jsonl
    for frame in frames:
        path = os.path.join(cfg.out_dir, f"{frame.name}.{cfg.out_format}")
        written[frame.name] = {"path": path, "bytes": writer(frame, path)}
    return written


def _write_report(report: dict, cfg: PipelineConfig) -> str:
    report_path = cfg.report_path or os.path.join(cfg.out_dir, "report.json")
    os.makedirs(os.path.dirname(report_path) or ".", exist_ok=True)
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2, ensure_ascii=False)
        fh.write("\n")
    return report_path


def _base_report(cfg: PipelineConfig, registry: SchemaRegistry, stats) -> dict:
    return {
        "tool": {"name": "logflat", "version": __version__},
        "config": cfg.echo(),
        "ingest": stats.as_dict(),
        "registry": registry.describe(),
        "rename_map": dict(registry.rename_map),
    }


def run_inspect(cfg: PipelineConfig) -> dict:
    """Schemas, classifications, and merge candidates; writes no frames."""
    timer = _Timer()
    _, registry, stats = _build_registry_pass(cfg, timer)
    columns = [
        (node.column, set(node.value_samples))
        for node in registry.root.walk()
        if node.path and not node.children and node.value_samples
    ]
    candidates = propose_namespace_merges(
        columns, abbreviations=load_abbreviations(cfg.abbreviations))
    report = _base_report(cfg, registry, stats)
    report["merge_candidates"] = [c.as_dict() for c in candidates]
    report["timings_ms"] = timer.timings
    return report


def run_flatten(cfg: PipelineConfig, write_frames: bool = True) -> dict:
    """Structural flatten only: no time conversion, no selection. The width
    numbers in this report line up with the raw schema landscape."""
    timer = _Timer()
    path, registry, stats = _build_registry_pass(cfg, timer)
    frames = _flatten_pass(cfg, path, registry, timer)
    report = _base_report(cfg, registry, stats)
    report["frames"] = _frame_summary(frames)
    report.update(_width_stats(frames, cfg.mode))
    if write_frames:
        report["written"] = _write_frames(frames, cfg)
    report["timings_ms"] = timer.timings
    _write_report(report, cfg)
    return report


def _select_stage(frames: list[Frame], cfg: PipelineConfig, report: dict,
                  timer: _Timer, derived_columns: set | None = None) -> list[Frame]:
    selections = {frame.name: SelectionReport(frame.name, input_columns=[
        c for c in frame.names if c != SCHEMA_TYPE]) for frame in frames}

    # single-value pruning
    timer.start("prune_single")
    pruned = []
    for frame in frames:
        sel = selections[frame.name]
        kept, drops = drop_single_valued(frame.drop([SCHEMA_TYPE]) if frame.has_column(SCHEMA_TYPE) else frame)
        if frame.has_column(SCHEMA_TYPE):
            kept = Frame(frame.name, (frame.column(SCHEMA_TYPE),) + kept.columns)
        for entry in drops:
            sel.drop(entry["column"], entry["reason"])
        pruned.append(kept)
    frames = pruned
    timer.stop()

    # namespace merges; columns this pipeline derived (instants and their
    # time windows) are not source attribute names, so they don't compete
    timer.start("merges")
    candidates = propose_namespace_merges(
        _merge_samples(frames, exclude=derived_columns),
        abbreviations=load_abbreviations(cfg.abbreviations))
    report["merge_candidates"] = [c.as_dict() for c in candidates]
    report["merges_applied"] = []
    if cfg.apply_merges and candidates:
        renamed_frames, applied = apply_merges(frames, candidates)
        report["merges_applied"] = applied
        rename = {}
        for group in applied:
            for member in group["columns"]:
                if member != group["canonical"]:
                    rename[member] = group["canonical"]
        for before, after in zip(frames, renamed_frames):
            sel = selections[before.name]
            for name in before.names:
                if name in rename:
                    sel.merge(name, rename[name])
            sel.merge_groups = [g for g in applied
                                if any(m in before.names for m in g["columns"])]
        frames = renamed_frames
    timer.stop()

    # indexing and scaling
    index_dictionaries: dict = {}
    indexed_columns: dict[str, list] = {}
    if cfg.index_scale:
        timer.start("index_scale")
        staged = []
        for frame in frames:
            dictionaries = {}
            indexed = []
            for col in list(frame.columns):
                if col.name == SCHEMA_TYPE:
                    continue
                if col.kind == "text":
                    column, dictionary = string_index(frame, col.name)
                    frame = frame.replace(column)
                    dictionaries[col.name] = dictionary.as_dict()
                    indexed.append(col.name)
                elif col.kind == "bool":
                    frame = frame.replace(column_from_values(
                        col.name, [int(v) if v is not None else None for v in col.values]))
                    indexed.append(col.name)
            for col in list(frame.columns):
                if col.name != SCHEMA_TYPE and col.kind in NUMERIC_KINDS:
                    frame = frame.replace(zscale(frame, col.name))
            index_dictionaries[frame.name] = dictionaries
            indexed_columns[frame.name] = indexed
            staged.append(frame)
        frames = staged
        timer.stop()
    report["index_dictionaries"] = index_dictionaries

    # Pearson pruning
    timer.start("pearson")
    staged = []
    for frame in frames:
        sel = selections[frame.name]
        numeric = [c.name for c in frame.columns
                   if c.name != SCHEMA_TYPE and c.kind in ("int", "float", "timestamp")]
        if len(numeric) >= 2:
            matrix = pearson_matrix(frame, numeric)
            pairs = matrix.pairs_above(cfg.select.pearson_threshold)
            sel.correlation_pairs = [
                {"a": a, "b": b, "r": matrix.r[i][j]} for _, a, b, i, j in pairs]
            drops, _ = prune_by_correlation(matrix, cfg.select.pearson_threshold)
            if drops:
                frame = frame.drop([victim for victim, _, _ in drops])
                for victim, kept_partner, _ in drops:
                    sel.drop(victim, f"{REASON_CORRELATED}:{kept_partner}")
        staged.append(frame)
    frames = staged
    timer.stop()

    # chi-square selection (labeled data only)
    if cfg.label:
        timer.start("chi_square")
        staged = []
        for frame in frames:
            sel = selections[frame.name]
            if not frame.has_column(cfg.label):
                staged.append(frame)
                continue
            features = [n for n in indexed_columns.get(frame.name, [])
                        if n != cfg.label and frame.has_column(n)]
            if features:
                result = chi_square_select(frame, features, cfg.label,
                                           cfg.select.chi_mode, cfg.select.chi_param)
                sel.chi_square = result.as_dict()
                not_selected = [n for n in features if n not in result.selected]
                if not_selected:
                    frame = frame.drop(not_selected)
                    for name in not_selected:
                        sel.drop(name, REASON_NOT_SELECTED_CHI)
            staged.append(frame)
        frames = staged
        timer.stop()

    # tree importance (labeled) / pseudo-label loop (unlabeled)
    timer.start("importance")
    for frame in frames:
        sel = selections[frame.name]
        if cfg.label and frame.has_column(cfg.label):
            features = [c.name for c in frame.columns
                        if c.name not in (SCHEMA_TYPE, cfg.label)
                        and c.kind in ("int", "float", "timestamp", "text", "bool")]
            if features:
                try:
                    sel.importances = tree_importance(frame, features, cfg.label, cfg.select)
                except Exception as exc:  # constant label in this frame, etc.
                    sel.importances = {"error": str(exc)}
        elif cfg.pseudo_labels:
            feats = [c.name for c in frame.columns if c.name != SCHEMA_TYPE]
            sel.pseudo_labels = pseudo_label_importances(
                frame.drop([SCHEMA_TYPE]) if frame.has_column(SCHEMA_TYPE) else frame,
                cfg.select, features=feats)
    timer.stop()

    for frame in frames:
        sel = selections[frame.name]
        sel.kept = [c for c in frame.names if c != SCHEMA_TYPE]
    report["selection"] = {name: sel.as_dict() for name, sel in selections.items()}
    return frames


def run_pipeline(cfg: PipelineConfig, write_frames: bool = True) -> dict:
    """The full extraction + selection pipeline; returns the run report."""
    timer = _Timer()
    path, registry, stats = _build_registry_pass(cfg, timer)
    frames = _flatten_pass(cfg, path, registry, timer)

    report = _base_report(cfg, registry, stats)
    report["frames_flattened"] = _frame_summary(frames)
    report.update(_width_stats(frames, cfg.mode))

    timer.start("timestamps")
    staged = []
    conversions = {}
    derived_columns: set = set()
    for frame in frames:
        converted, conv = convert_time_columns(
            frame, formats=cfg.flatten.timestamp_formats or None,
            strict=cfg.strict_timestamps)
        conversions[frame.name] = conv
        for entry in conv:
            derived_columns.add(entry["timestamp_column"])
            derived_columns.update(entry["window_columns"].values())
        staged.append(converted)
    frames = staged
    timer.stop()
    report["time_conversions"] = conversions

    frames = _select_stage(frames, cfg, report, timer, derived_columns)

    report["frames"] = _frame_summary(frames)
    if write_frames:
        timer.start("write")
        report["written"] = _write_frames(frames, cfg)
        timer.stop()
    report["timings_ms"] = timer.timings
    _write_report(report, cfg)
    return report
