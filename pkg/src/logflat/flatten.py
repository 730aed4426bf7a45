"""Recursive flattening of complex attributes into flat rows, and assembly
into frames: one per baseline structure (local mode) or one wide sparse
table (global mode).

Struct wrappers promote their leaves, lists spread one column per position,
delimiter-packed strings split into position-indexed columns (recursively),
and dictionary-union columns flatten under whichever inner schema the record
carries. No complex value survives into a row.
"""

from __future__ import annotations

import multiprocessing
from dataclasses import dataclass, field
from typing import Iterable, Iterator

from . import kernel
from .errors import FlattenError, InputError, ParseError
from .frame import Column, Frame, build_frame, column_from_values, fill_nulls
from .ingest import DEFAULT_MAX_DEPTH, IngestStats, iter_line_chunks, parse_record
from .schema import (
    CLS_DELIMITED,
    ClassifyConfig,
    SchemaFingerprint,
    SchemaRegistry,
    path_to_name,
)

REJECT_SCHEMA_TYPE = -1
SCHEMA_TYPE_COLUMN = "schemaType"
_CHUNK_LINES = 2048


@dataclass
class FlattenConfig:
    mode: str = "local"  # local | global
    dict_columns: dict = field(default_factory=dict)  # rendered path -> bool
    delimiters: dict = field(default_factory=dict)  # rendered path -> char|None
    max_depth: int = DEFAULT_MAX_DEPTH
    null_fill: str = "none"  # none | mean | median | sentinel
    sentinel: object = None
    sample_size: int = 1000
    timestamp_formats: tuple = ()

    def __post_init__(self):
        if self.mode not in ("local", "global"):
            raise InputError(f"unknown flatten mode {self.mode!r}")
        if self.max_depth < 1:
            raise InputError("max_depth must be >= 1")
        if self.null_fill not in ("none", "mean", "median", "sentinel"):
            raise InputError(f"unknown null_fill policy {self.null_fill!r}")
        if self.null_fill == "sentinel" and isinstance(self.sentinel, (dict, list)):
            raise InputError("sentinel must be a scalar")

    def classify_config(self) -> ClassifyConfig:
        return ClassifyConfig(
            sample_size=self.sample_size,
            delimiter_overrides=dict(self.delimiters),
            dict_overrides=dict(self.dict_columns),
            max_depth=self.max_depth,
            timestamp_formats=tuple(self.timestamp_formats),
        )


def _plan_for(registry: SchemaRegistry):
    cached = getattr(registry, "_plan_cache", None)
    if cached is not None and cached[0] == kernel.BACKEND:
        return cached[1]
    plan = kernel.compile_plan(registry)
    registry._plan_cache = (kernel.BACKEND, plan)
    return plan


def flatten_record(record: dict, registry: SchemaRegistry,
                   cfg: FlattenConfig | None = None) -> dict:
    """Flatten one record to an ordered column->scalar map."""
    plan = _plan_for(registry)
    cells, _ = kernel.walk_record(plan, record)
    return cells


def flatten_with_type(record: dict, registry: SchemaRegistry) -> tuple[dict, int | None]:
    """Flatten one record and resolve its partition (schemaType) index;
    None means no registered structure matches."""
    plan = _plan_for(registry)
    cells, entries = kernel.walk_record(plan, record)
    return cells, registry.partition_for_entries(entries)


def _typed_rows(records: Iterable[dict], registry: SchemaRegistry) -> Iterator[tuple[dict, int | None]]:
    plan = _plan_for(registry)
    walk = kernel.walk_record
    resolve = registry.partition_for_entries
    for record in records:
        cells, entries = walk(plan, record)
        yield cells, resolve(entries)


def _seal_local(groups: dict, rejects: list, registry: SchemaRegistry,
                cfg: FlattenConfig) -> list[Frame]:
    frames = []
    for partition in registry.partitions.values():
        rows = groups.get(partition.index)
        if not rows:
            continue
        frame = build_frame(
            f"schema_{partition.index}", rows,
            lead={SCHEMA_TYPE_COLUMN: [partition.index] * len(rows)},
        )
        frames.append(fill_nulls(frame, cfg.null_fill, cfg.sentinel))
    if rejects:
        frame = build_frame(
            "rejected", rejects,
            lead={SCHEMA_TYPE_COLUMN: [REJECT_SCHEMA_TYPE] * len(rejects)},
        )
        frames.append(fill_nulls(frame, cfg.null_fill, cfg.sentinel))
    return frames


def _seal_global(rows: list, types: list, cfg: FlattenConfig) -> Frame:
    frame = build_frame("global", rows, lead={SCHEMA_TYPE_COLUMN: types})
    return fill_nulls(frame, cfg.null_fill, cfg.sentinel)


def partition_by_schema(records: Iterable[dict], registry: SchemaRegistry,
                        cfg: FlattenConfig | None = None) -> list[Frame]:
    """Local mode: one frame per baseline structure, carrying its schemaType.
    Records matching no registered structure land in a 'rejected' frame."""
    cfg = cfg or FlattenConfig(mode="local")
    groups: dict[int, list] = {}
    rejects: list = []
    for cells, idx in _typed_rows(records, registry):
        if idx is None:
            rejects.append(cells)
        else:
            groups.setdefault(idx, []).append(cells)
    return _seal_local(groups, rejects, registry, cfg)


def unify_global(records: Iterable[dict], registry: SchemaRegistry,
                 cfg: FlattenConfig | None = None) -> Frame:
    """Global mode: one wide frame over the union of all flattened columns;
    cells a record lacks are null, then filled per the null policy."""
    cfg = cfg or FlattenConfig(mode="global")
    rows: list = []
    types: list = []
    for cells, idx in _typed_rows(records, registry):
        rows.append(cells)
        types.append(idx if idx is not None else REJECT_SCHEMA_TYPE)
    return _seal_global(rows, types, cfg)


# --------------------------------------------------------------------------
# reconstruction (round-trip oracle)


def _node_at(registry: SchemaRegistry, segments: tuple):
    node = registry.root
    for seg in segments:
        node = node.children.get(seg)
        if node is None:
            return None
    return node


def _join_parts(node, row):
    parts = []
    idx = 0
    while True:
        child = node.children.get(idx)
        if child is not None and child.cls.kind == CLS_DELIMITED:
            sub = _join_parts(child, row)
            if sub is None:
                break
            parts.append(sub)
            idx += 1
            continue
        column = child.column if child is not None else path_to_name(node.path + (idx,))
        if column in row:
            parts.append(row[column])
            idx += 1
            continue
        break
    if not parts:
        return None
    return node.cls.delimiter.join(parts)


_MISSING = object()


def _leaf_value(node, segments, kind, row):
    if kind == "empty_object":
        return {}
    if kind == "empty_array":
        return []
    if kind == "null":
        return None
    if node is not None and node.cls.kind == CLS_DELIMITED and kind == "text":
        joined = _join_parts(node, row)
        if joined is None:
            raise FlattenError(f"row lacks split parts for {node.rendered!r}")
        return joined
    column = node.column if node is not None else path_to_name(segments)
    value = row.get(column, _MISSING)
    if value is _MISSING:
        raise FlattenError(f"row/fingerprint mismatch: no cell for column {column!r}")
    return value


def _set_path(root: dict, segments: tuple, value):
    # Intermediate containers are dicts even for array positions (int keys);
    # _finalize converts them to lists once every position is in place.
    holder = root
    for seg in segments[:-1]:
        container = holder.get(seg)
        if container is None:
            container = {}
            holder[seg] = container
        holder = container
    holder[segments[-1]] = value


def _finalize(value):
    if isinstance(value, dict):
        keys = list(value)
        if keys and all(isinstance(k, int) for k in keys):
            if sorted(keys) != list(range(len(keys))):
                raise FlattenError("row/fingerprint mismatch: ragged array positions")
            return [_finalize(value[i]) for i in range(len(keys))]
        return {k: _finalize(v) for k, v in value.items()}
    return value


def reconstruct(row: dict, fingerprint: SchemaFingerprint,
                registry: SchemaRegistry) -> dict:
    """Rebuild the record a row came from (null_fill must have been 'none').

    The fingerprint lists the record's leaves; the registry's classification
    tree supplies column names and split delimiters. Equality with the source
    holds up to object key order.
    """
    if not fingerprint.paths and fingerprint.entries:
        raise FlattenError("fingerprint lacks path segments; rebuild it with fingerprint()")
    out: dict = {}
    for segments, kind in fingerprint.paths:
        node = _node_at(registry, segments)
        value = _leaf_value(node, segments, kind, row)
        _set_path(out, segments, value)
    rebuilt = _finalize(out)
    if not isinstance(rebuilt, dict):
        raise FlattenError("fingerprint does not describe an object record")
    return rebuilt


# --------------------------------------------------------------------------
# corpus driver (sequential or process-parallel, deterministic output)
#
# Workers hand back columnar blocks, not row dicts: one (names, columns,
# row-count) block per partition per chunk. That keeps the pickle volume and
# the parent's serial merge small, which is where parallel speedup would
# otherwise drown.

_WORKER_STATE: dict = {}


def _columnar_block():
    return ({}, [], [0])


def _block_add(block, cells):
    by_name, ordered, counter = block
    n = counter[0]
    for name, value in cells.items():
        col = by_name.get(name)
        if col is None:
            col = by_name[name] = [None] * n
            ordered.append((name, col))
        col.append(value)
    n += 1
    counter[0] = n
    for _, col in ordered:
        if len(col) < n:
            col.append(None)


def _block_pack(block):
    _, ordered, counter = block
    return [name for name, _ in ordered], [col for _, col in ordered], counter[0]


def _columnarize(pairs, mode: str):
    """Turn (cells, partition) pairs into columnar blocks.

    Local mode groups rows per partition (block per schema); global mode keeps
    one block in input order plus the per-row schemaType list. Cells a row
    lacks pad with None. Block = (names, value lists, row count).
    """
    if mode == "global":
        block = _columnar_block()
        types = []
        for cells, idx in pairs:
            _block_add(block, cells)
            types.append(idx if idx is not None else REJECT_SCHEMA_TYPE)
        return {"global": _block_pack(block), "types": types}
    blocks: dict = {}
    for cells, idx in pairs:
        block = blocks.get(idx)
        if block is None:
            block = blocks[idx] = _columnar_block()
        _block_add(block, cells)
    return {idx: _block_pack(block) for idx, block in blocks.items()}


class _Accumulator:
    """Merges columnar blocks in input order into one frame's columns."""

    __slots__ = ("by_name", "ordered", "rows")

    def __init__(self):
        self.by_name: dict = {}
        self.ordered: list = []
        self.rows = 0

    def add_block(self, names, columns, nrows):
        for name, col in zip(names, columns):
            mine = self.by_name.get(name)
            if mine is None:
                mine = self.by_name[name] = [None] * self.rows
                self.ordered.append((name, mine))
            mine.extend(col)
        self.rows += nrows
        for _, mine in self.ordered:
            if len(mine) < self.rows:
                mine.extend([None] * (self.rows - len(mine)))

    def to_frame(self, name: str, schema_types) -> Frame:
        if isinstance(schema_types, int):
            schema_types = [schema_types] * self.rows
        columns = [Column(SCHEMA_TYPE_COLUMN, "int", tuple(schema_types))]
        columns.extend(column_from_values(col_name, values)
                       for col_name, values in self.ordered)
        return Frame(name, tuple(columns))


def _flatten_chunk(args):
    chunk_index, lines = args
    registry = _WORKER_STATE["registry"]
    plan = _WORKER_STATE["plan"]
    policy = _WORKER_STATE["policy"]
    max_depth = _WORKER_STATE["max_depth"]
    mode = _WORKER_STATE["mode"]
    walk = kernel.walk_record
    resolve = registry.partition_for_entries
    pairs = []
    failures = []
    for line_number, raw in lines:
        try:
            record = parse_record(raw.decode("utf-8"), line_number, max_depth)
        except (UnicodeDecodeError, ParseError) as exc:
            if policy == "abort":
                raise
            failures.append((line_number, str(exc)))
            continue
        cells, entries = walk(plan, record)
        pairs.append((cells, resolve(entries)))
    return chunk_index, _columnarize(pairs, mode), len(pairs), failures


def _sequential_blocks(source, registry, cfg, policy, stats):
    from .ingest import read_corpus

    records, _ = read_corpus(source, policy=policy, max_depth=cfg.max_depth,
                             stats=stats)
    plan = _plan_for(registry)
    walk = kernel.walk_record
    resolve = registry.partition_for_entries
    pairs = []
    for record in records:
        cells, entries = walk(plan, record)
        pairs.append((cells, resolve(entries)))
        if len(pairs) >= _CHUNK_LINES:
            yield _columnarize(pairs, cfg.mode), 0, []  # stats already counted
            pairs = []
    if pairs:
        yield _columnarize(pairs, cfg.mode), 0, []


def _parallel_blocks(source, registry, cfg, policy, workers):
    plan = _plan_for(registry)
    _WORKER_STATE.update(
        registry=registry, plan=plan, policy=policy,
        max_depth=cfg.max_depth, mode=cfg.mode,
    )
    try:
        ctx = multiprocessing.get_context("fork")
        chunks = ((i, lines) for i, (_, lines)
                  in enumerate(iter_line_chunks(source, _CHUNK_LINES)))
        with ctx.Pool(workers) as pool:
            for _, blocks, n_ok, failures in pool.imap(_flatten_chunk, chunks):
                yield blocks, n_ok, failures
    finally:
        _WORKER_STATE.clear()


def flatten_corpus(source, registry: SchemaRegistry, cfg: FlattenConfig,
                   workers: int = 1, policy: str = "skip",
                   stats: IngestStats | None = None):
    """Parse and flatten a JSONL source end to end.

    Returns (frames, stats): a frame list in local mode, a single frame in
    global mode. Output is byte-identical for any worker count; rows keep
    input order.
    """
    stats = stats if stats is not None else IngestStats()
    if workers <= 1:
        stream = _sequential_blocks(source, registry, cfg, policy, stats)
    else:
        stream = _parallel_blocks(source, registry, cfg, policy, workers)

    if cfg.mode == "global":
        acc = _Accumulator()
        types: list = []
        for blocks, n_ok, failures in stream:
            for line_number, message in failures:
                stats.records_failed += 1
                stats.failed_lines.append((line_number, message))
            stats.records_ok += n_ok
            acc.add_block(*blocks["global"])
            types.extend(blocks["types"])
        frame = fill_nulls(acc.to_frame("global", types), cfg.null_fill, cfg.sentinel)
        return frame, stats

    accumulators: dict = {}
    for blocks, n_ok, failures in stream:
        for line_number, message in failures:
            stats.records_failed += 1
            stats.failed_lines.append((line_number, message))
        stats.records_ok += n_ok
        for idx, packed in blocks.items():
            acc = accumulators.get(idx)
            if acc is None:
                acc = accumulators[idx] = _Accumulator()
            acc.add_block(*packed)

    frames = []
    for partition in registry.partitions.values():
        acc = accumulators.get(partition.index)
        if acc is None or acc.rows == 0:
            continue
        frames.append(fill_nulls(acc.to_frame(f"schema_{partition.index}",
                                              partition.index),
                                 cfg.null_fill, cfg.sentinel))
    if None in accumulators and accumulators[None].rows:
        frames.append(fill_nulls(accumulators[None].to_frame(
            "rejected", REJECT_SCHEMA_TYPE), cfg.null_fill, cfg.sentinel))
    return frames, stats
