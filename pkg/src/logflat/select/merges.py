"""Namespace correlation: columns whose names and values say they carry the
same datum (proto vs connection_protocol) get one canonical column.

Name matching tokenizes snake_case and camelCase, expands abbreviations from
a plain short=long table, and compares token sets by Jaccard similarity;
value overlap is the Jaccard of sampled distinct values. Both scores must
clear their thresholds for a candidate to be proposed.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources

from ..frame import Frame, column_from_values

NAME_THRESHOLD = 0.5
VALUE_THRESHOLD = 0.5

_ACRONYM = re.compile(r"([A-Z]+)([A-Z][a-z])")
_CAMEL = re.compile(r"([a-z0-9])([A-Z])")
_SEPARATORS = re.compile(r"[_\-\s.]+")


def load_abbreviations(extra=None) -> dict:
    """Default short=long table, optionally extended from a file path or dict."""
    table: dict = {}
    text = resources.files("logflat.select").joinpath("abbreviations.txt").read_text("utf-8")
    for line in text.splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        short, _, long = line.partition("=")
        table[short.strip().lower()] = long.strip().lower()
    if extra is None:
        return table
    if isinstance(extra, dict):
        table.update({k.lower(): v.lower() for k, v in extra.items()})
        return table
    with open(extra, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            short, _, long = line.partition("=")
            table[short.strip().lower()] = long.strip().lower()
    return table


def tokenize(name: str, abbreviations: dict) -> tuple:
    """Lowercased tokens with camelCase/snake_case split and abbreviations
    expanded."""
    chunks = [c for c in _SEPARATORS.split(name) if c]
    tokens: list[str] = []
    for chunk in chunks:
        chunk = _ACRONYM.sub(r"\1_\2", chunk)
        chunk = _CAMEL.sub(r"\1_\2", chunk)
        for token in chunk.lower().split("_"):
            if token:
                tokens.append(abbreviations.get(token, token))
    return tuple(tokens)


def _jaccard(a: set, b: set) -> float:
    if not a or not b:
        return 0.0
    union = len(a | b)
    return len(a & b) / union if union else 0.0


def expanded_name(name: str, abbreviations: dict) -> str:
    return "_".join(tokenize(name, abbreviations))


@dataclass(frozen=True)
class MergeCandidate:
    columns: tuple  # (name_a, name_b)
    name_score: float
    value_score: float
    canonical: str

    def as_dict(self) -> dict:
        return {
            "columns": list(self.columns),
            "name_score": self.name_score,
            "value_score": self.value_score,
            "canonical": self.canonical,
        }


def _canonical_key(expanded: str):
    return (len(expanded.split("_")), len(expanded), expanded)


def propose_namespace_merges(columns, abbreviations=None,
                             name_threshold: float = NAME_THRESHOLD,
                             value_threshold: float = VALUE_THRESHOLD) -> list[MergeCandidate]:
    """Candidate pairs from (column name, sampled distinct values) entries.

    The canonical name is the longest expanded form of the pair.
    """
    table = abbreviations if isinstance(abbreviations, dict) else load_abbreviations(abbreviations)
    prepared = []
    for name, values in columns:
        prepared.append((
            name,
            set(tokenize(name, table)),
            {v for v in values if v is not None},
        ))
    out = []
    for i in range(len(prepared)):
        for j in range(i + 1, len(prepared)):
            name_a, tokens_a, values_a = prepared[i]
            name_b, tokens_b, values_b = prepared[j]
            if name_a == name_b:
                continue
            name_score = _jaccard(tokens_a, tokens_b)
            if name_score < name_threshold:
                continue
            value_score = _jaccard(values_a, values_b)
            if value_score < value_threshold:
                continue
            canonical = max(
                (expanded_name(name_a, table), expanded_name(name_b, table)),
                key=_canonical_key,
            )
            out.append(MergeCandidate((name_a, name_b), name_score, value_score, canonical))
    return out


def apply_merges(frames: list[Frame], candidates: list[MergeCandidate]):
    """Rename candidate columns to their canonical names across frames,
    coalescing when one frame holds several members (first non-null wins,
    left value kept on conflict).

    Returns (frames, applied) where applied records each merge group and its
    conflict count.
    """
    if not candidates:
        return list(frames), []

    parent: dict[str, str] = {}

    def find(x: str) -> str:
        while parent.setdefault(x, x) != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for cand in candidates:
        a, b = cand.columns
        parent[find(b)] = find(a)

    groups: dict[str, list[str]] = {}
    for name in list(parent):
        groups.setdefault(find(name), []).append(name)
    proposals: dict[str, list[str]] = {}
    for cand in candidates:
        proposals.setdefault(find(cand.columns[0]), []).append(cand.canonical)

    rename: dict[str, str] = {}
    applied = []
    for root, members in groups.items():
        canonical = max(proposals[root], key=_canonical_key)
        for m in members:
            rename[m] = canonical
        applied.append({"columns": sorted(members), "canonical": canonical, "conflicts": 0})

    by_canonical = {entry["canonical"]: entry for entry in applied}
    out_frames = []
    for frame in frames:
        members_present = [c.name for c in frame.columns if c.name in rename]
        packs: dict[str, list[str]] = {}
        for name in members_present:
            packs.setdefault(rename[name], []).append(name)
        new_frame = frame
        for canonical, names in packs.items():
            if len(names) == 1 and names[0] == canonical:
                continue
            if len(names) == 1:
                new_frame = new_frame.renamed({names[0]: canonical})
                continue
            first, *rest = names  # frame order: earlier column wins conflicts
            merged = list(new_frame.column(first).values)
            conflicts = 0
            for other in rest:
                for i, v in enumerate(new_frame.column(other).values):
                    if v is None:
                        continue
                    if merged[i] is None:
                        merged[i] = v
                    elif merged[i] != v:
                        conflicts += 1
            new_frame = new_frame.drop(rest).renamed({first: canonical})
            new_frame = new_frame.replace(column_from_values(canonical, merged))
            by_canonical[canonical]["conflicts"] += conflicts
        out_frames.append(new_frame)
    return out_frames, applied
