"""Machine-readable ledger of what selection did to every column and why."""

from __future__ import annotations

from dataclasses import dataclass, field

from ..errors import ProcessingError

REASON_SINGLE_VALUED = "single_valued"
REASON_ALL_NULL = "all_null"
REASON_CORRELATED = "correlated_with"
REASON_NOT_SELECTED_CHI = "not_selected_chi"


@dataclass
class SelectionReport:
    """Per-frame selection outcome; every input column lands in exactly one
    of kept / dropped / merged."""

    frame: str
    input_columns: list = field(default_factory=list)
    kept: list = field(default_factory=list)
    dropped: list = field(default_factory=list)  # {"column", "reason"}
    merged: list = field(default_factory=list)  # {"column", "into"}
    merge_groups: list = field(default_factory=list)
    correlation_pairs: list = field(default_factory=list)  # {"a","b","r"}
    chi_square: dict | None = None
    importances: dict | None = None
    pseudo_labels: dict | None = None

    def drop(self, column: str, reason: str):
        self.dropped.append({"column": column, "reason": reason})

    def merge(self, column: str, into: str):
        self.merged.append({"column": column, "into": into})

    def validate(self):
        accounted: dict[str, str] = {}
        canonicals = {g["canonical"] for g in self.merge_groups}
        for name in self.kept:
            accounted[name] = "kept"
        for entry in self.dropped:
            if entry["column"] in accounted:
                raise ProcessingError(
                    f"column {entry['column']!r} accounted twice in {self.frame!r}")
            accounted[entry["column"]] = "dropped"
        for entry in self.merged:
            if entry["column"] in accounted:
                raise ProcessingError(
                    f"column {entry['column']!r} accounted twice in {self.frame!r}")
            accounted[entry["column"]] = "merged"
        inputs = set(self.input_columns)
        missing = [c for c in self.input_columns if c not in accounted]
        # A kept name outside the input set must be a canonical a merge created.
        extra = [c for c in accounted if c not in inputs and c not in canonicals]
        if missing or extra:
            raise ProcessingError(
                f"selection accounting broken for {self.frame!r}: "
                f"missing={missing} extra={extra}")

    def as_dict(self) -> dict:
        self.validate()
        out = {
            "frame": self.frame,
            "input_columns": list(self.input_columns),
            "kept": list(self.kept),
            "dropped": list(self.dropped),
            "merged": list(self.merged),
            "merge_groups": list(self.merge_groups),
            "correlation_pairs": list(self.correlation_pairs),
        }
        if self.chi_square is not None:
            out["chi_square"] = self.chi_square
        if self.importances is not None:
            out["importances"] = self.importances
        if self.pseudo_labels is not None:
            out["pseudo_labels"] = self.pseudo_labels
        return out
