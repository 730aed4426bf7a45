"""logflat: heterogeneous JSON event logs -> flat columnar feature tables.

Ingest JSON Lines, infer the distinct baseline structures, flatten nested
attributes (structs, dictionary unions, lists, delimiter-packed strings)
into frames, then shrink the column set with single-value pruning, namespace
merges, Pearson pruning, chi-square selection, and tree importance.
"""

__version__ = "0.1.0"

from .errors import (
    ClassificationConflictError,
    ConfigError,
    DepthError,
    FlattenError,
    InputError,
    KindError,
    LogflatError,
    ParseError,
    ProcessingError,
    StructureError,
)
from .flatten import (
    FlattenConfig,
    flatten_corpus,
    flatten_record,
    partition_by_schema,
    reconstruct,
    unify_global,
)
from .frame import (
    Column,
    Frame,
    IndexDictionary,
    TimeWindows,
    build_frame,
    decompose_time,
    fill_nulls,
    format_timestamp,
    parse_timestamp,
    read_csv,
    read_jsonl,
    string_index,
    write_csv,
    write_jsonl,
    zscale,
)
from .ingest import IngestStats, node_kind, parse_record, read_corpus
from .schema import (
    ClassifyConfig,
    FieldClass,
    SchemaFingerprint,
    SchemaRegistry,
    build_registry,
    classify_field,
    fingerprint,
)
from .select import SelectConfig

__all__ = [
    "__version__",
    "LogflatError", "ConfigError", "InputError", "ProcessingError",
    "ParseError", "StructureError", "DepthError", "ClassificationConflictError",
    "FlattenError", "KindError",
    "parse_record", "read_corpus", "IngestStats", "node_kind",
    "fingerprint", "classify_field", "build_registry",
    "SchemaFingerprint", "SchemaRegistry", "FieldClass", "ClassifyConfig",
    "FlattenConfig", "flatten_record", "partition_by_schema", "unify_global",
    "reconstruct", "flatten_corpus",
    "Frame", "Column", "build_frame", "parse_timestamp", "format_timestamp",
    "decompose_time", "TimeWindows", "string_index", "IndexDictionary",
    "zscale", "fill_nulls", "write_csv", "write_jsonl", "read_csv", "read_jsonl",
    "SelectConfig",
]
