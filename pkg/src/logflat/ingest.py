"""JSON Lines ingestion: one event record per line, validated into value trees.

A record is represented with plain Python values (None, bool, int, float,
str, dict, list); dicts preserve source key order. Integral JSON numbers
with magnitude below 2**53 stay int so ports and IDs survive exactly;
everything else becomes float.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Iterator, Union

from .errors import DepthError, InputError, ParseError, StructureError

ValueNode = Union[None, bool, int, float, str, dict, list]

DEFAULT_MAX_DEPTH = 8
_INT_LIMIT = 2**53


@dataclass
class IngestStats:
    records_ok: int = 0
    records_failed: int = 0
    failed_lines: list = field(default_factory=list)  # (line_number, message)

    def as_dict(self) -> dict:
        return {
            "records_ok": self.records_ok,
            "records_failed": self.records_failed,
            "failed_lines": [[n, msg] for n, msg in self.failed_lines],
        }


class _DuplicateKey(ValueError):
    pass


def _object_pairs(pairs):
    obj = {}
    for key, value in pairs:
        if key in obj:
            raise _DuplicateKey(f"duplicate object key {key!r}")
        obj[key] = value
    return obj


def _parse_int(text: str):
    value = int(text)
    if -_INT_LIMIT < value < _INT_LIMIT:
        return value
    return float(text)


def node_kind(value: ValueNode) -> str:
    """Kind tag of one node: null/bool/int/float/text/object/array."""
    if value is None:
        return "null"
    if value is True or value is False:
        return "bool"
    if isinstance(value, int):
        return "int"
    if isinstance(value, float):
        return "float"
    if isinstance(value, str):
        return "text"
    if isinstance(value, dict):
        return "object"
    if isinstance(value, list):
        return "array"
    raise TypeError(f"not a value node: {type(value).__name__}")


def tree_depth(value: ValueNode) -> int:
    """Container nesting depth; scalars are 0, {} and [] are 1."""
    if isinstance(value, dict):
        return 1 + max((tree_depth(v) for v in value.values()), default=0)
    if isinstance(value, list):
        return 1 + max((tree_depth(v) for v in value), default=0)
    return 0


def _check_depth(value, line_number, max_depth):
    depth = tree_depth(value)
    if depth > max_depth:
        raise DepthError(
            f"record nesting depth {depth} exceeds max_depth {max_depth}",
            line_number,
        )


def parse_record(line: str, line_number: int = 0, max_depth: int = DEFAULT_MAX_DEPTH) -> dict:
    """Parse one JSON-Lines record; the top level must be an object."""
    try:
        value = json.loads(line, object_pairs_hook=_object_pairs, parse_int=_parse_int)
    except _DuplicateKey as exc:
        raise ParseError(str(exc), line_number) from exc
    except (json.JSONDecodeError, ValueError) as exc:
        raise ParseError(f"malformed JSON: {exc}", line_number) from exc
    if not isinstance(value, dict):
        raise StructureError(
            f"top level is {node_kind(value)}, expected object", line_number
        )
    _check_depth(value, line_number, max_depth)
    return value


def dumps_record(record: ValueNode) -> str:
    """Serialize a value tree back to one JSON line, preserving key order."""
    return json.dumps(record, ensure_ascii=False, separators=(",", ":"))


def _iter_lines(source) -> Iterator[bytes]:
    if isinstance(source, (str, bytes)):
        try:
            handle: IO[bytes] = open(source, "rb")
        except OSError as exc:
            raise InputError(f"cannot read {source!r}: {exc}") from exc
        with handle:
            yield from handle
    else:
        yield from source


def read_corpus(
    source,
    policy: str = "skip",
    max_depth: int = DEFAULT_MAX_DEPTH,
    stats: IngestStats | None = None,
) -> tuple[Iterator[dict], IngestStats]:
    """Stream records from a path, binary stream, or iterable of byte lines.

    Returns (record iterator, stats). The stats object fills in while the
    iterator is consumed and is final once it is exhausted. Blank lines are
    skipped silently. Under policy="skip" malformed lines are counted and
    listed; under "abort" the first one raises with its line number.
    """
    if policy not in ("skip", "abort"):
        raise InputError(f"unknown error policy {policy!r}")
    if stats is None:
        stats = IngestStats()

    def records() -> Iterator[dict]:
        for line_number, raw in enumerate(_iter_lines(source), start=1):
            stripped = raw.strip()
            if not stripped:
                continue
            try:
                text = stripped.decode("utf-8")
                record = parse_record(text, line_number, max_depth)
            except UnicodeDecodeError as exc:
                err: ParseError = ParseError(f"invalid UTF-8: {exc}", line_number)
                record = None
            except ParseError as exc:
                err = exc
                record = None
            if record is None:
                if policy == "abort":
                    raise err
                stats.records_failed += 1
                stats.failed_lines.append((line_number, str(err)))
                continue
            stats.records_ok += 1
            yield record

    return records(), stats


def iter_line_chunks(source, chunk_size: int) -> Iterator[tuple[int, list[tuple[int, bytes]]]]:
    """Yield (first line number, [(line number, raw line), ...]) batches.

    Blank lines are dropped here but still advance the line numbering, so
    diagnostics match the sequential reader.
    """
    chunk: list[tuple[int, bytes]] = []
    for line_number, raw in enumerate(_iter_lines(source), start=1):
        if not raw.strip():
            continue
        chunk.append((line_number, raw))
        if len(chunk) >= chunk_size:
            yield chunk[0][0], chunk
            chunk = []
    if chunk:
        yield chunk[0][0], chunk
