"""Immutable columnar frames: typed columns with null cells, timestamp
parsing/decomposition, categorical indexing, scaling, and CSV/JSONL I/O.

Timestamps are integers: nanoseconds since the Unix epoch, UTC. That keeps
the 9-digit fractional seconds seen in honeypot feeds exact, which datetime
alone cannot.
"""

from __future__ import annotations

import calendar
import json
import logging
import re
import statistics
from dataclasses import dataclass
from datetime import datetime, timezone
from typing import Iterable, Iterator

from .errors import InputError, KindError, ProcessingError
from .ingest import node_kind

log = logging.getLogger("logflat")

KINDS = ("text", "int", "float", "bool", "timestamp")
NANOS = 1_000_000_000

DEFAULT_TIME_FORMATS = ("rfc3339", "yyyy-MM-dd HH:mm:ss", "epoch_s", "epoch_ms")

_RFC3339 = re.compile(
    r"^(\d{4})-(\d{2})-(\d{2})[Tt](\d{2}):(\d{2}):(\d{2})"
    r"(?:\.(\d{1,9}))?(Z|z|[+-]\d{2}:\d{2})$"
)
_NAIVE = re.compile(r"^(\d{4})-(\d{2})-(\d{2}) (\d{2}):(\d{2}):(\d{2})$")
# 9-11 digits covers 1973..5138; anything shorter is a port/count, not an epoch
_EPOCH_S = re.compile(r"^\d{9,11}$")
_EPOCH_MS = re.compile(r"^\d{12,14}$")


# --------------------------------------------------------------------------
# columns and frames


@dataclass(frozen=True)
class Column:
    name: str
    kind: str
    values: tuple  # None marks null

    def __post_init__(self):
        if self.kind not in KINDS:
            raise KindError(f"unknown column kind {self.kind!r}")

    def non_null(self) -> list:
        return [v for v in self.values if v is not None]

    def distinct_non_null(self) -> set:
        return set(self.non_null())


@dataclass(frozen=True)
class Frame:
    name: str
    columns: tuple

    def __post_init__(self):
        seen = set()
        lengths = {len(c.values) for c in self.columns}
        if len(lengths) > 1:
            raise ProcessingError(f"ragged frame {self.name!r}: lengths {sorted(lengths)}")
        for col in self.columns:
            if col.name in seen:
                raise ProcessingError(f"duplicate column {col.name!r} in frame {self.name!r}")
            seen.add(col.name)

    @property
    def row_count(self) -> int:
        return len(self.columns[0].values) if self.columns else 0

    @property
    def width(self) -> int:
        return len(self.columns)

    @property
    def names(self) -> list[str]:
        return [c.name for c in self.columns]

    def column(self, name: str) -> Column:
        for col in self.columns:
            if col.name == name:
                return col
        raise KindError(f"no column {name!r} in frame {self.name!r}")

    def has_column(self, name: str) -> bool:
        return any(c.name == name for c in self.columns)

    def replace(self, *columns: Column) -> "Frame":
        by_name = {c.name: c for c in columns}
        return Frame(self.name, tuple(by_name.pop(c.name, c) for c in self.columns))

    def drop(self, names: Iterable[str]) -> "Frame":
        gone = set(names)
        return Frame(self.name, tuple(c for c in self.columns if c.name not in gone))

    def select(self, names: Iterable[str]) -> "Frame":
        return Frame(self.name, tuple(self.column(n) for n in names))

    def append(self, column: Column) -> "Frame":
        return Frame(self.name, self.columns + (column,))

    def renamed(self, mapping: dict) -> "Frame":
        return Frame(self.name, tuple(
            Column(mapping.get(c.name, c.name), c.kind, c.values) for c in self.columns
        ))

    def rows(self) -> Iterator[dict]:
        for i in range(self.row_count):
            yield {c.name: c.values[i] for c in self.columns}

    def cell(self, name: str, i: int):
        return self.column(name).values[i]


def _resolve_kind(kinds: set) -> str:
    if "text" in kinds:
        return "text"
    if "float" in kinds:
        return "float"
    if "int" in kinds:
        return "int"
    if "bool" in kinds:
        return "bool"
    return "text"  # all-null column


def _coerce(value, kind: str):
    if value is None:
        return None
    if kind == "text":
        if isinstance(value, str):
            return value
        if value is True:
            return "true"
        if value is False:
            return "false"
        if isinstance(value, float):
            return repr(value)
        return str(value)
    if kind == "float":
        return float(value)
    if kind == "int":
        return int(value)
    return value


def column_from_values(name: str, values) -> Column:
    """Column with the kind widened from its cells (bool < int < float; any
    text forces text)."""
    values = list(values)
    kinds = set()
    for v in values:
        if v is not None:
            k = node_kind(v)
            if k in ("object", "array"):
                raise ProcessingError(f"non-scalar cell in column {name!r}")
            kinds.add(k)
    kind = _resolve_kind(kinds)
    if len(kinds) > 1:
        values = [_coerce(v, kind) for v in values]
    return Column(name, kind, tuple(values))


def build_frame(name: str, rows: list[dict], lead: dict | None = None) -> Frame:
    """Assemble a frame from per-record cell dicts.

    Column order is first appearance across rows; `lead` columns (e.g. the
    schemaType index) come first. Cell kinds widen bool < int < float, and any
    text forces the whole column to text.
    """
    order: dict[str, None] = {}
    if lead:
        for key in lead:
            order[key] = None
    for row in rows:
        for key in row:
            order.setdefault(key, None)
    names = list(order)
    n = len(rows)
    columns = []
    for col_name in names:
        if lead and col_name in lead:
            values = list(lead[col_name])
        else:
            values = [row.get(col_name) for row in rows]
        kinds = set()
        for v in values:
            if v is not None:
                k = node_kind(v)
                if k in ("object", "array"):
                    raise ProcessingError(
                        f"non-scalar cell in column {col_name!r}"
                    )
                kinds.add(k)
        kind = _resolve_kind(kinds)
        if len(kinds) > 1:
            values = [_coerce(v, kind) for v in values]
        if len(values) != n:
            raise ProcessingError(f"column {col_name!r} length mismatch")
        columns.append(Column(col_name, kind, tuple(values)))
    return Frame(name, tuple(columns))


# --------------------------------------------------------------------------
# timestamps


@dataclass(frozen=True)
class TimeWindows:
    year: int
    month: int
    day_of_week: int  # 1=Monday .. 7=Sunday
    hour: int
    minute: int

    def __post_init__(self):
        if not (1 <= self.month <= 12 and 1 <= self.day_of_week <= 7
                and 0 <= self.hour <= 23 and 0 <= self.minute <= 59):
            raise ValueError(f"time windows out of range: {self}")


def _rfc3339_ns(text: str):
    m = _RFC3339.match(text)
    if not m:
        return None
    year, month, day, hour, minute, second = (int(m.group(i)) for i in range(1, 7))
    frac = m.group(7)
    offset = m.group(8)
    try:
        datetime(year, month, day, hour, minute, second)
    except ValueError:
        return None
    secs = calendar.timegm((year, month, day, hour, minute, second, 0, 0, 0))
    if offset not in ("Z", "z"):
        sign = 1 if offset[0] == "+" else -1
        secs -= sign * (int(offset[1:3]) * 3600 + int(offset[4:6]) * 60)
    ns = secs * NANOS
    if frac:
        ns += int(frac.ljust(9, "0"))
    return ns


def _naive_ns(text: str):
    m = _NAIVE.match(text)
    if not m:
        return None
    parts = tuple(int(m.group(i)) for i in range(1, 7))
    try:
        datetime(*parts)
    except ValueError:
        return None
    return calendar.timegm(parts + (0, 0, 0)) * NANOS


def _strptime_ns(text: str, pattern: str):
    try:
        dt = datetime.strptime(text, pattern)
    except ValueError:
        return None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    secs = calendar.timegm(dt.utctimetuple())
    return secs * NANOS + dt.microsecond * 1000


def try_parse_timestamp(value, formats=None):
    """Like parse_timestamp but silent on a miss (used by detection probes)."""
    formats = formats or DEFAULT_TIME_FORMATS
    if isinstance(value, str):
        for fmt in formats:
            if fmt == "rfc3339":
                ns = _rfc3339_ns(value)
            elif fmt == "yyyy-MM-dd HH:mm:ss":
                ns = _naive_ns(value)
            elif fmt == "epoch_s":
                ns = int(value) * NANOS if _EPOCH_S.match(value) else None
            elif fmt == "epoch_ms":
                ns = int(value) * 1_000_000 if _EPOCH_MS.match(value) else None
            elif "%" in fmt:
                ns = _strptime_ns(value, fmt)
            else:
                raise KindError(f"unknown timestamp format {fmt!r}")
            if ns is not None:
                return ns
    return None


def parse_timestamp(value: str, formats=None, strict: bool = False):
    """Parse text to UTC nanoseconds since epoch; first matching format wins.

    Returns None (with a warning) when nothing matches, unless strict.
    """
    ns = try_parse_timestamp(value, formats)
    if ns is not None:
        return ns
    if strict:
        raise ProcessingError(f"unparseable timestamp {value!r}")
    log.warning("unparseable timestamp %r -> null", value)
    return None


def format_timestamp(ns: int) -> str:
    """RFC 3339 UTC text; fractional part trimmed of trailing zeros."""
    secs, frac = divmod(ns, NANOS)
    dt = datetime.fromtimestamp(secs, timezone.utc)
    base = dt.strftime("%Y-%m-%dT%H:%M:%S")
    if frac:
        base += ("." + f"{frac:09d}").rstrip("0")
    return base + "Z"


def decompose_time(ns: int) -> TimeWindows:
    secs = ns // NANOS
    dt = datetime.fromtimestamp(secs, timezone.utc)
    return TimeWindows(dt.year, dt.month, dt.isoweekday(), dt.hour, dt.minute)


_WINDOW_SUFFIXES = ("year", "month", "day_of_week", "hour", "minute")


def convert_time_columns(
    frame: Frame,
    formats=None,
    strict: bool = False,
    min_fraction: float = 0.9,
    sample_size: int = 1000,
    decompose: bool = True,
) -> tuple[Frame, list[dict]]:
    """Detect text columns holding timestamps and replace each with a
    `<name>_ts` instant column plus its time-window decomposition."""
    formats = formats or DEFAULT_TIME_FORMATS
    taken = set(frame.names)
    out: list[Column] = []
    conversions: list[dict] = []
    for col in frame.columns:
        if col.kind != "text":
            out.append(col)
            continue
        sample = [v for v in col.values if v is not None][:sample_size]
        if not sample:
            out.append(col)
            continue
        hits = sum(1 for v in sample if try_parse_timestamp(v, formats) is not None)
        if hits < min_fraction * len(sample):
            out.append(col)
            continue
        parsed = []
        failed = 0
        for v in col.values:
            if v is None:
                parsed.append(None)
                continue
            ns = parse_timestamp(v, formats, strict=strict)
            if ns is None:
                failed += 1
            parsed.append(ns)

        def fresh(name):
            candidate = name
            k = 1
            while candidate in taken:
                k += 1
                candidate = f"{name}_{k}"
            taken.add(candidate)
            return candidate

        ts_name = fresh(f"{col.name}_ts")
        out.append(Column(ts_name, "timestamp", tuple(parsed)))
        window_names = {}
        if decompose:
            windows = [decompose_time(ns) if ns is not None else None for ns in parsed]
            for suffix in _WINDOW_SUFFIXES:
                w_name = fresh(f"{col.name}_{suffix}")
                window_names[suffix] = w_name
                out.append(Column(
                    w_name, "int",
                    tuple(getattr(w, suffix) if w is not None else None for w in windows),
                ))
        conversions.append({
            "column": col.name,
            "timestamp_column": ts_name,
            "window_columns": window_names,
            "parsed": sum(1 for p in parsed if p is not None),
            "failed": failed,
        })
    return Frame(frame.name, tuple(out)), conversions


# --------------------------------------------------------------------------
# indexing and scaling


@dataclass(frozen=True)
class IndexDictionary:
    column: str
    categories: tuple
    frequencies: tuple

    def index_of(self, category: str) -> int:
        return self.categories.index(category)

    def category_of(self, index: int) -> str:
        return self.categories[index]

    def as_dict(self, truncate: int = 100) -> dict:
        size = len(self.categories)
        cats = self.categories[:truncate]
        return {
            "column": self.column,
            "size": size,
            "truncated": size > truncate,
            "categories": list(cats),
            "frequencies": list(self.frequencies[:truncate]),
        }


def string_index(frame: Frame, column: str) -> tuple[Column, IndexDictionary]:
    """Map categories to 0..k-1 by descending frequency (ties lexicographic)."""
    col = frame.column(column)
    if col.kind != "text":
        raise KindError(f"string_index needs a text column, {column!r} is {col.kind}")
    counts: dict[str, int] = {}
    for v in col.values:
        if v is not None:
            counts[v] = counts.get(v, 0) + 1
    ordered = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    categories = tuple(cat for cat, _ in ordered)
    codes = {cat: i for i, cat in enumerate(categories)}
    indexed = Column(column, "int",
                     tuple(codes[v] if v is not None else None for v in col.values))
    dictionary = IndexDictionary(column, categories, tuple(c for _, c in ordered))
    return indexed, dictionary


def zscale(frame: Frame, column: str) -> Column:
    """Center and scale by the sample standard deviation (divisor n-1);
    constant columns become all zeros, nulls stay null."""
    col = frame.column(column)
    if col.kind not in ("int", "float", "timestamp", "bool"):
        raise KindError(f"zscale needs a numeric column, {column!r} is {col.kind}")
    present = [float(v) for v in col.values if v is not None]
    if not present:
        raise ProcessingError(f"zscale: column {column!r} has no non-null cells")
    mean = sum(present) / len(present)
    if len(present) < 2 or max(present) == min(present):
        return Column(column, "float",
                      tuple(0.0 if v is not None else None for v in col.values))
    var = sum((x - mean) ** 2 for x in present) / (len(present) - 1)
    sd = var ** 0.5
    if sd == 0.0:
        return Column(column, "float",
                      tuple(0.0 if v is not None else None for v in col.values))
    return Column(column, "float",
                  tuple((float(v) - mean) / sd if v is not None else None
                        for v in col.values))


def fill_nulls(frame: Frame, policy: str, sentinel=None) -> Frame:
    """Apply a null-fill policy: none, mean, median, or sentinel(value).

    mean/median touch numeric columns only; other columns get the empty-text
    sentinel. All-null numeric columns keep their nulls (no mean exists).
    """
    if policy == "none":
        return frame
    if policy not in ("mean", "median", "sentinel"):
        raise KindError(f"unknown null_fill policy {policy!r}")
    out = []
    for col in frame.columns:
        if None not in col.values:
            out.append(col)
            continue
        if policy == "sentinel":
            fill = sentinel
        elif col.kind in ("int", "float"):
            present = [float(v) for v in col.values if v is not None]
            if not present:
                out.append(col)
                continue
            fill = (sum(present) / len(present)) if policy == "mean" else statistics.median(present)
        else:
            fill = ""
        values = tuple(v if v is not None else fill for v in col.values)
        if col.kind == "timestamp" and not isinstance(fill, str):
            out.append(Column(col.name, "timestamp", values))
        else:
            out.append(column_from_values(col.name, values))
    return Frame(frame.name, tuple(out))


# --------------------------------------------------------------------------
# writers / readers


def _csv_field(value, kind) -> str:
    if value is None:
        return ""
    if kind == "timestamp" and isinstance(value, int):
        text = format_timestamp(value)
    elif value is True:
        text = "true"
    elif value is False:
        text = "false"
    elif isinstance(value, float):
        text = repr(value)
    else:
        text = str(value)
    if text == "" or any(ch in text for ch in (",", '"', "\n", "\r")):
        return '"' + text.replace('"', '""') + '"'
    return text


def _open_sink(sink):
    if isinstance(sink, (str, bytes)):
        return open(sink, "wb"), True
    return sink, False


def write_csv(frame: Frame, sink) -> int:
    """RFC 4180-style CSV with a header row; nulls are empty unquoted fields,
    empty text is quoted, lines end with LF. Returns bytes written."""
    handle, owned = _open_sink(sink)
    written = 0
    try:
        header = ",".join(_csv_field(c.name, "text") for c in frame.columns) + "\n"
        data = header.encode("utf-8")
        handle.write(data)
        written += len(data)
        kinds = [c.kind for c in frame.columns]
        cols = [c.values for c in frame.columns]
        for i in range(frame.row_count):
            line = ",".join(
                _csv_field(cols[j][i], kinds[j]) for j in range(len(cols))
            ) + "\n"
            data = line.encode("utf-8")
            handle.write(data)
            written += len(data)
    finally:
        if owned:
            handle.close()
    return written


def write_jsonl(frame: Frame, sink) -> int:
    """One JSON object per row, null cells omitted, timestamps as RFC 3339."""
    handle, owned = _open_sink(sink)
    written = 0
    try:
        names = frame.names
        kinds = {c.name: c.kind for c in frame.columns}
        for row in frame.rows():
            obj = {}
            for name in names:
                v = row[name]
                if v is None:
                    continue
                if kinds[name] == "timestamp" and isinstance(v, int):
                    v = format_timestamp(v)
                obj[name] = v
            data = (json.dumps(obj, ensure_ascii=False, separators=(",", ":")) + "\n").encode("utf-8")
            handle.write(data)
            written += len(data)
    finally:
        if owned:
            handle.close()
    return written


def _parse_csv_text(text: str) -> list[list]:
    """Minimal RFC 4180 reader that keeps the null (unquoted empty) vs empty
    string (quoted empty) distinction our writer makes."""
    rows: list[list] = []
    row: list = []
    buf: list[str] = []
    quoted = False
    in_quotes = False
    i = 0
    n = len(text)

    def finish_field():
        nonlocal buf, quoted
        value = "".join(buf)
        row.append(None if (value == "" and not quoted) else value)
        buf = []
        quoted = False

    while i < n:
        ch = text[i]
        if in_quotes:
            if ch == '"':
                if i + 1 < n and text[i + 1] == '"':
                    buf.append('"')
                    i += 2
                    continue
                in_quotes = False
                i += 1
                continue
            buf.append(ch)
            i += 1
            continue
        if ch == '"' and not buf:
            in_quotes = True
            quoted = True
            i += 1
            continue
        if ch == ",":
            finish_field()
            i += 1
            continue
        if ch == "\r":
            i += 1
            continue
        if ch == "\n":
            finish_field()
            rows.append(row)
            row = []
            i += 1
            continue
        buf.append(ch)
        i += 1
    if buf or quoted or row:
        finish_field()
        rows.append(row)
    return rows


def _coerce_read(value, kind):
    """Coerce a cell read back from CSV (text) or JSONL (native JSON types)."""
    if value is None:
        return None
    if kind == "text":
        return value
    if kind == "int":
        return int(value)
    if kind == "float":
        return float(value)
    if kind == "bool":
        if isinstance(value, bool):
            return value
        if value in ("true", "false"):
            return value == "true"
        raise InputError(f"bad bool cell {value!r}")
    if kind == "timestamp":
        if isinstance(value, int) and not isinstance(value, bool):
            return value
        ns = parse_timestamp(value, ("rfc3339",))
        if ns is None:
            raise InputError(f"bad timestamp cell {value!r}")
        return ns
    raise KindError(f"unknown kind {kind!r}")


def read_csv(source, schema: list | None = None, name: str = "frame") -> Frame:
    """Read a frame back from CSV. `schema` is [(name, kind), ...]; without it
    every column is text."""
    if isinstance(source, (str, bytes)):
        with open(source, "rb") as fh:
            text = fh.read().decode("utf-8")
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data
    rows = _parse_csv_text(text)
    if not rows:
        raise InputError("empty CSV input")
    header = [h if h is not None else "" for h in rows[0]]
    body = rows[1:]
    kinds = dict(schema) if schema else {}
    columns = []
    for j, col_name in enumerate(header):
        kind = kinds.get(col_name, "text")
        values = tuple(_coerce_read(r[j] if j < len(r) else None, kind) for r in body)
        columns.append(Column(col_name, kind, values))
    return Frame(name, tuple(columns))


def read_jsonl(source, schema: list | None = None, name: str = "frame") -> Frame:
    """Read a frame back from JSONL; with a schema, cells are coerced and
    column order follows it."""
    if isinstance(source, (str, bytes)):
        with open(source, "rb") as fh:
            raw = fh.read().decode("utf-8")
    else:
        data = source.read()
        raw = data.decode("utf-8") if isinstance(data, bytes) else data
    rows = [json.loads(line) for line in raw.splitlines() if line.strip()]
    if schema:
        names = [n for n, _ in schema]
        kinds = dict(schema)
    else:
        order: dict[str, None] = {}
        for row in rows:
            for key in row:
                order.setdefault(key, None)
        names = list(order)
        kinds = {}
    columns = []
    for col_name in names:
        kind = kinds.get(col_name)
        raw_values = [row.get(col_name) for row in rows]
        if kind:
            values = tuple(_coerce_read(v, kind) for v in raw_values)
            columns.append(Column(col_name, kind, values))
        else:
            observed = {node_kind(v) for v in raw_values if v is not None}
            columns.append(Column(col_name, _resolve_kind(observed), tuple(raw_values)))
    return Frame(name, tuple(columns))
