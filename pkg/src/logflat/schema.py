"""Per-record schema fingerprints, complex-field classification, and the
registry of distinct baseline structures.

A fingerprint is purely structural: the sorted set of leaf paths with their
scalar kinds. Changing a scalar value or permuting object keys never changes
the digest; adding, removing, or retyping a field always does.

Classification decides how each path is flattened later: a struct wrapper
(constant inner key-set), a dictionary union (varying inner key-sets, the
multi-sensor payload case), a delimiter-packed string, a list, or a plain
scalar.
"""

from __future__ import annotations

import hashlib
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

from .errors import ClassificationConflictError, DepthError, InputError
from .ingest import DEFAULT_MAX_DEPTH, node_kind

KIND_NULL = "null"
KIND_BOOL = "bool"
KIND_INT = "int"
KIND_FLOAT = "float"
KIND_TEXT = "text"
KIND_EMPTY_OBJECT = "empty_object"
KIND_EMPTY_ARRAY = "empty_array"

_SCALAR_ORDER = {KIND_NULL: 0, KIND_BOOL: 1, KIND_INT: 2, KIND_FLOAT: 3, KIND_TEXT: 4}

CLS_SCALAR = "scalar"
CLS_STRUCT = "struct"
CLS_DICT = "dict"
CLS_DELIMITED = "delimited"
CLS_LIST = "list"

DELIMITER_CANDIDATES = ":,;|"
RESERVED_COLUMNS = ("schemaType",)


def widen_kind(a: str, b: str) -> str:
    """Join on the scalar-kind lattice null < bool < int < float < text."""
    return a if _SCALAR_ORDER[a] >= _SCALAR_ORDER[b] else b


def escape_segment(name: str) -> str:
    return name.replace("\\", "\\\\").replace(".", "\\.").replace("[", "\\[")


def render_path(segments: tuple) -> str:
    """Render segments as text: object keys dotted, positions bracketed."""
    parts: list[str] = []
    for seg in segments:
        if isinstance(seg, int):
            if parts:
                parts[-1] += f"[{seg}]"
            else:
                parts.append(f"[{seg}]")
        else:
            parts.append(escape_segment(seg))
    return ".".join(parts)


def path_to_name(segments: tuple) -> str:
    """Default flat column name: '$'/'@' stripped, segments joined by '_'."""
    parts = []
    for seg in segments:
        if isinstance(seg, int):
            parts.append(str(seg))
        else:
            cleaned = seg.replace("$", "").replace("@", "")
            parts.append(cleaned if cleaned else "field")
    return "_".join(parts)


def _join_rel(prefix: str, rel: str) -> str:
    if rel == "":
        return prefix
    if rel.startswith("["):
        return prefix + rel
    return prefix + "." + rel


@dataclass(frozen=True)
class SchemaFingerprint:
    """Canonical (rendered path, kind) signature of one record's structure."""

    entries: tuple  # ((rendered path, kind), ...) sorted by rendered path
    digest: str
    paths: tuple = ()  # ((segments, kind), ...) aligned with entries

    @staticmethod
    def digest_of(entries: Iterable[tuple]) -> str:
        body = "\x1e".join(f"{p}\x1f{k}" for p, k in entries)
        return hashlib.sha256(body.encode("utf-8")).hexdigest()


def _collect_leaves(value, segments, out):
    kind = node_kind(value)
    if kind == "object":
        if not value:
            out.append((segments, KIND_EMPTY_OBJECT))
            return
        for key, child in value.items():
            _collect_leaves(child, segments + (key,), out)
    elif kind == "array":
        if not value:
            out.append((segments, KIND_EMPTY_ARRAY))
            return
        for idx, child in enumerate(value):
            _collect_leaves(child, segments + (idx,), out)
    else:
        out.append((segments, kind))


def fingerprint(record: dict) -> SchemaFingerprint:
    """Fingerprint one parsed record (top-level object)."""
    if not isinstance(record, dict):
        raise TypeError("fingerprint expects a top-level object")
    leaves: list = []
    for key, child in record.items():
        _collect_leaves(child, (key,), leaves)
    triples = sorted(
        ((render_path(segments), segments, kind) for segments, kind in leaves),
        key=lambda t: (t[0], t[2]),
    )
    entries = tuple((rendered, kind) for rendered, _, kind in triples)
    return SchemaFingerprint(
        entries=entries,
        digest=SchemaFingerprint.digest_of(entries),
        paths=tuple((segments, kind) for _, segments, kind in triples),
    )


@dataclass(frozen=True)
class FieldClass:
    kind: str
    delimiter: str | None = None

    def __str__(self) -> str:
        if self.kind == CLS_DELIMITED:
            return f"delimited({self.delimiter!r})"
        return self.kind


@dataclass
class ClassifyConfig:
    sample_size: int = 1000
    min_fraction: float = 0.9
    delimiter_candidates: str = DELIMITER_CANDIDATES
    delimiter_overrides: dict = field(default_factory=dict)  # rendered path -> char|None
    dict_overrides: dict = field(default_factory=dict)  # rendered path -> bool (True=dict)
    max_depth: int = DEFAULT_MAX_DEPTH
    timestamp_formats: tuple = ()  # () = frame defaults
    value_sample_cap: int = 64


def _looks_like_time(texts: list, formats, min_fraction: float) -> bool:
    from .frame import try_parse_timestamp  # local import avoids a load-time cycle

    if not texts:
        return False
    hits = sum(1 for t in texts if try_parse_timestamp(t, formats or None) is not None)
    return hits >= min_fraction * len(texts)


def _detect_delimiter(scalars: list, cfg: ClassifyConfig) -> str | None:
    """Pick the first candidate whose occurrence count is constant (>=1) in
    at least min_fraction of the non-null scalar samples."""
    total = len(scalars)
    if total == 0:
        return None
    texts = [s for s in scalars if isinstance(s, str)]
    if not texts:
        return None
    if _looks_like_time(texts, cfg.timestamp_formats, cfg.min_fraction):
        return None  # timestamps carry ':' but must reach the time converter intact
    for cand in cfg.delimiter_candidates:
        counts = Counter(t.count(cand) for t in texts)
        count_value, freq = max(counts.items(), key=lambda kv: (kv[1], -kv[0]))
        if count_value >= 1 and freq >= cfg.min_fraction * total:
            return cand
    return None


def classify_field(path: tuple, samples: list, cfg: ClassifyConfig | None = None) -> FieldClass:
    """Classify one field path from sampled values drawn across records."""
    if not samples:
        raise ValueError("classify_field needs at least one sample")
    cfg = cfg or ClassifyConfig()
    rendered = render_path(path)

    objects = [s for s in samples if isinstance(s, dict)]
    arrays = [s for s in samples if isinstance(s, list)]
    scalars = [s for s in samples if s is not None and not isinstance(s, (dict, list))]

    populated = [name for name, group in
                 (("object", objects), ("array", arrays), ("scalar", scalars)) if group]
    if len(populated) > 1:
        raise ClassificationConflictError(rendered, " vs ".join(populated))

    if objects:
        override = cfg.dict_overrides.get(rendered)
        if override is True:
            return FieldClass(CLS_DICT)
        if override is False:
            return FieldClass(CLS_STRUCT)
        keysets = {frozenset(o.keys()) for o in objects}
        return FieldClass(CLS_DICT if len(keysets) >= 2 else CLS_STRUCT)
    if arrays:
        return FieldClass(CLS_LIST)
    if scalars:
        if rendered in cfg.delimiter_overrides:
            forced = cfg.delimiter_overrides[rendered]
            return FieldClass(CLS_DELIMITED, forced) if forced else FieldClass(CLS_SCALAR)
        delim = _detect_delimiter(scalars, cfg)
        if delim is not None:
            return FieldClass(CLS_DELIMITED, delim)
    return FieldClass(CLS_SCALAR)


@dataclass
class InnerSchema:
    """One distinct inner structure of a dictionary-union column."""

    index: int
    digest: str
    entries: tuple
    count: int = 0


class ClassNode:
    """One node of the classification tree, with its flat column name."""

    __slots__ = (
        "path", "rendered", "cls", "children", "column",
        "kinds", "inner", "present", "nulls", "value_samples", "depth",
    )

    def __init__(self, path: tuple, depth: int):
        self.path = path
        self.rendered = render_path(path)
        self.cls = FieldClass(CLS_SCALAR)
        self.children: dict = {}
        self.column: str | None = None
        self.kinds: tuple = ()
        self.inner: dict | None = None  # relative entries tuple -> InnerSchema
        self.present = 0
        self.nulls = 0
        self.value_samples: tuple = ()
        self.depth = depth

    def walk(self):
        yield self
        for child in self.children.values():
            yield from child.walk()

    def describe(self) -> dict:
        info = {
            "path": self.rendered,
            "class": self.cls.kind,
            "column": self.column,
            "kinds": list(self.kinds),
        }
        if self.cls.delimiter:
            info["delimiter"] = self.cls.delimiter
        if self.inner is not None:
            info["inner_schemas"] = [
                {"index": s.index, "digest": s.digest, "count": s.count,
                 "entries": [list(e) for e in s.entries]}
                for s in sorted(self.inner.values(), key=lambda s: s.index)
            ]
        return info


class _BuildNode:
    __slots__ = (
        "children", "keysets", "scalars", "kinds", "present", "nulls",
        "objects", "arrays", "sub_schemas", "values", "depth",
    )

    def __init__(self, depth: int):
        self.children: dict = {}
        self.keysets: set = set()
        self.scalars: list = []
        self.kinds: set = set()
        self.present = 0
        self.nulls = 0
        self.objects = 0
        self.arrays = 0
        self.sub_schemas: dict = {}  # relative entries tuple -> count
        self.values: dict = {}  # rendered scalar text -> None (ordered distinct)
        self.depth = depth

    def child(self, seg):
        node = self.children.get(seg)
        if node is None:
            node = _BuildNode(self.depth + 1)
            self.children[seg] = node
        return node


def render_scalar(value) -> str:
    """Canonical text form of a scalar cell (used for value overlap/report)."""
    if value is True:
        return "true"
    if value is False:
        return "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _feed(value, node: _BuildNode, cfg: ClassifyConfig):
    """Accumulate sample statistics; returns entries relative to this value,
    where the empty rendered path stands for the value itself."""
    node.present += 1
    if isinstance(value, dict):
        if node.depth > cfg.max_depth:
            raise DepthError(f"nesting beyond max_depth {cfg.max_depth}")
        node.objects += 1
        if len(node.keysets) <= 64:
            node.keysets.add(frozenset(value.keys()))
        rel: list = []
        for key, child_value in value.items():
            sub = _feed(child_value, node.child(key), cfg)
            prefix = escape_segment(key)
            rel.extend((_join_rel(prefix, r), k) for r, k in sub)
        if not value:
            rel.append(("", KIND_EMPTY_OBJECT))
        key = tuple(sorted(rel))
        node.sub_schemas[key] = node.sub_schemas.get(key, 0) + 1
        return rel
    if isinstance(value, list):
        if node.depth > cfg.max_depth:
            raise DepthError(f"nesting beyond max_depth {cfg.max_depth}")
        node.arrays += 1
        rel = []
        for idx, child_value in enumerate(value):
            sub = _feed(child_value, node.child(idx), cfg)
            prefix = f"[{idx}]"
            rel.extend((_join_rel(prefix, r), k) for r, k in sub)
        if not value:
            rel.append(("", KIND_EMPTY_ARRAY))
        return rel
    if value is None:
        node.nulls += 1
        node.kinds.add(KIND_NULL)
        return [("", KIND_NULL)]
    kind = node_kind(value)
    node.kinds.add(kind)
    if len(node.scalars) < cfg.sample_size:
        node.scalars.append(value)
    if len(node.values) < cfg.value_sample_cap:
        node.values.setdefault(render_scalar(value), None)
    return [("", kind)]


class _NameAllocator:
    def __init__(self, reserved=RESERVED_COLUMNS):
        self.taken: dict = {name: None for name in reserved}

    def allocate(self, path: tuple) -> str:
        base = path_to_name(path)
        name = base
        suffix = 1
        while name in self.taken:
            suffix += 1
            name = f"{base}_{suffix}"
        self.taken[name] = path
        return name


@dataclass
class RegistrySchema:
    fingerprint: SchemaFingerprint
    count: int
    index: int


@dataclass
class Partition:
    key: tuple
    index: int
    count: int


class SchemaRegistry:
    """Distinct baseline structures plus the classification tree that drives
    flattening. Insertion order everywhere is first appearance in the input."""

    def __init__(self, root: ClassNode, max_depth: int):
        self.schemas: dict[str, RegistrySchema] = {}
        self.by_entries: dict[tuple, str] = {}
        self.root = root
        self.partitions: dict[tuple, Partition] = {}
        self.digest_partition: dict[str, tuple] = {}
        self.rename_map: dict[str, str] = {}
        self.record_count = 0
        self.max_depth = max_depth
        self.dict_nodes: list[ClassNode] = []

    def __len__(self) -> int:
        return len(self.schemas)

    @property
    def counts(self) -> dict[str, int]:
        return {digest: entry.count for digest, entry in self.schemas.items()}

    def partition_for_entries(self, entries: tuple):
        """Partition index for one record's sorted entries, or None to reject."""
        digest = self.by_entries.get(entries)
        if digest is not None:
            key = self.digest_partition[digest]
            return self.partitions[key].index
        key = self._derive_key(entries)
        if key is None:
            return None
        part = self.partitions.get(key)
        return part.index if part is not None else None

    def _derive_key(self, entries: tuple):
        if not self.dict_nodes:
            return None  # unseen top-level structure in a dict-free corpus
        parts = []
        for node in self.dict_nodes:
            rel = _extract_relative(entries, node.rendered)
            if rel is None:
                parts.append(("absent",))
                continue
            if rel == (("", KIND_NULL),):
                parts.append(("null",))
                continue
            inner = node.inner.get(rel) if node.inner else None
            if inner is None:
                return None
            parts.append(inner.index)
        return tuple(parts)

    def describe(self) -> dict:
        return {
            "record_count": self.record_count,
            "schema_count": len(self.schemas),
            "schemas": [
                {
                    "digest": s.fingerprint.digest,
                    "count": s.count,
                    "entries": [list(e) for e in s.fingerprint.entries],
                }
                for s in self.schemas.values()
            ],
            "classifications": [
                node.describe()
                for node in self.root.walk()
                if node.path and node.cls.kind != CLS_SCALAR
            ],
            "partitions": [
                {"schema_type": p.index, "count": p.count}
                for p in self.partitions.values()
            ],
        }


def _extract_relative(entries: tuple, rendered_prefix: str):
    """Entries under a rendered path, re-rooted; None if the path is absent."""
    rel = []
    dot = rendered_prefix + "."
    bracket = rendered_prefix + "["
    for rendered, kind in entries:
        if rendered == rendered_prefix:
            rel.append(("", kind))
        elif rendered.startswith(dot):
            rel.append((rendered[len(dot):], kind))
        elif rendered.startswith(bracket):
            rel.append((rendered[len(rendered_prefix):], kind))
    if not rel:
        return None
    return tuple(sorted(rel))


def _classify_build_node(node: _BuildNode, path: tuple, cfg: ClassifyConfig) -> ClassNode:
    rendered = render_path(path)
    out = ClassNode(path, node.depth)
    out.present = node.present
    out.nulls = node.nulls
    out.kinds = tuple(sorted(node.kinds, key=lambda k: _SCALAR_ORDER.get(k, 9)))
    out.value_samples = tuple(node.values)

    populated = [name for name, flag in
                 (("object", node.objects), ("array", node.arrays),
                  ("scalar", bool(node.scalars))) if flag]
    if len(populated) > 1:
        raise ClassificationConflictError(rendered, " vs ".join(populated))

    if node.objects:
        override = cfg.dict_overrides.get(rendered)
        if override is True:
            kind = CLS_DICT
        elif override is False:
            kind = CLS_STRUCT
        else:
            kind = CLS_DICT if len(node.keysets) >= 2 else CLS_STRUCT
        out.cls = FieldClass(kind)
        if kind == CLS_DICT:
            inner: dict = {}
            for entries_key, count in node.sub_schemas.items():
                inner[entries_key] = InnerSchema(
                    index=len(inner),
                    digest=SchemaFingerprint.digest_of(entries_key),
                    entries=entries_key,
                    count=count,
                )
            out.inner = inner
    elif node.arrays:
        out.cls = FieldClass(CLS_LIST)
    elif node.scalars:
        if rendered in cfg.delimiter_overrides:
            forced = cfg.delimiter_overrides[rendered]
            out.cls = FieldClass(CLS_DELIMITED, forced) if forced else FieldClass(CLS_SCALAR)
        else:
            delim = _detect_delimiter(node.scalars, cfg)
            if delim is not None:
                out.cls = FieldClass(CLS_DELIMITED, delim)

    for seg, child in node.children.items():
        out.children[seg] = _classify_build_node(child, path + (seg,), cfg)

    if out.cls.kind == CLS_DELIMITED and out.depth < cfg.max_depth:
        _classify_parts(out, node.scalars, cfg)
    return out


def _classify_parts(node: ClassNode, scalars: list, cfg: ClassifyConfig):
    """Split sampled text and classify each part position recursively."""
    delim = node.cls.delimiter
    parts_by_index: dict[int, list] = {}
    for sample in scalars:
        if not isinstance(sample, str):
            continue
        for idx, part in enumerate(sample.split(delim)):
            parts_by_index.setdefault(idx, []).append(part)
    for idx in sorted(parts_by_index):
        child = ClassNode(node.path + (idx,), node.depth + 1)
        child.present = len(parts_by_index[idx])
        child.kinds = (KIND_TEXT,)
        samples = parts_by_index[idx]
        child.value_samples = tuple(dict.fromkeys(samples[: cfg.value_sample_cap]))
        sub = _detect_delimiter(samples, cfg)
        if sub is not None and child.depth < cfg.max_depth:
            child.cls = FieldClass(CLS_DELIMITED, sub)
            _classify_parts(child, samples, cfg)
        node.children[idx] = child


def _allocate_columns(root: ClassNode, registry: SchemaRegistry):
    allocator = _NameAllocator()
    for node in root.walk():
        if not node.path:
            continue
        node.column = allocator.allocate(node.path)
        registry.rename_map[node.rendered] = node.column


def _find_dict_nodes(node: ClassNode, out: list):
    for child in node.children.values():
        if child.cls.kind == CLS_DICT:
            out.append(child)  # outermost dict nodes partition the corpus
        else:
            _find_dict_nodes(child, out)


def build_registry(records: Iterable[dict], cfg: ClassifyConfig | None = None) -> SchemaRegistry:
    """Single pass over parsed records: sample, fingerprint, classify, and
    assign partition indices (first-appearance order throughout)."""
    cfg = cfg or ClassifyConfig()
    build_root = _BuildNode(depth=1)
    ordered_fingerprints: dict[tuple, list] = {}  # entries -> [fingerprint, count]
    n = 0
    for record in records:
        n += 1
        rel: list = []
        build_root.present += 1
        build_root.objects += 1
        for key, child_value in record.items():
            sub = _feed(child_value, build_root.child(key), cfg)
            prefix = escape_segment(key)
            rel.extend((_join_rel(prefix, r), k) for r, k in sub)
        entries = tuple(sorted(rel))
        slot = ordered_fingerprints.get(entries)
        if slot is None:
            # segments are only needed once per distinct structure
            ordered_fingerprints[entries] = [fingerprint(record), 1]
        else:
            slot[1] += 1
    if n == 0:
        raise InputError("no records: input is empty after skipping failures")

    root = _classify_build_node(build_root, (), cfg)
    root.cls = FieldClass(CLS_STRUCT)  # the record itself

    registry = SchemaRegistry(root, cfg.max_depth)
    registry.record_count = n
    for index, (entries, (fp, count)) in enumerate(ordered_fingerprints.items()):
        registry.schemas[fp.digest] = RegistrySchema(fp, count, index)
        registry.by_entries[entries] = fp.digest

    _allocate_columns(root, registry)
    _find_dict_nodes(root, registry.dict_nodes)

    for entries, digest in registry.by_entries.items():
        if registry.dict_nodes:
            parts = []
            for node in registry.dict_nodes:
                rel = _extract_relative(entries, node.rendered)
                if rel is None:
                    parts.append(("absent",))
                elif rel == (("", KIND_NULL),):
                    parts.append(("null",))
                else:
                    inner = node.inner.get(rel)
                    parts.append(inner.index if inner else ("unknown", rel))
            key = tuple(parts)
        else:
            key = ("digest", digest)
        registry.digest_partition[digest] = key
        part = registry.partitions.get(key)
        if part is None:
            registry.partitions[key] = Partition(key, len(registry.partitions),
                                                 registry.schemas[digest].count)
        else:
            part.count += registry.schemas[digest].count
    return registry
