"""Pure-Python flatten walk: the per-record hot path.

Mirrors logflat._walk_c exactly; logflat.kernel picks whichever is available.
Given a plan compiled from the classification tree, one call turns a parsed
record into (flat cells, sorted structural entries). Cells map column name to
scalar; entries are (rendered path, kind) pairs identifying the record's
baseline structure.
"""

from __future__ import annotations

from .errors import DepthError, FlattenError
from .schema import (
    CLS_DELIMITED,
    CLS_DICT,
    CLS_LIST,
    CLS_SCALAR,
    CLS_STRUCT,
    escape_segment,
    path_to_name,
    render_path,
)

BACKEND = "python"

_K_SCALAR = 0
_K_STRUCT = 1
_K_DICT = 2
_K_DELIM = 3
_K_LIST = 4

_CLS_CODE = {
    CLS_SCALAR: _K_SCALAR,
    CLS_STRUCT: _K_STRUCT,
    CLS_DICT: _K_DICT,
    CLS_DELIMITED: _K_DELIM,
    CLS_LIST: _K_LIST,
}


class PlanNode:
    __slots__ = ("kind", "column", "delimiter", "obj_children", "pos_children",
                 "rendered", "path", "depth")

    def __init__(self, kind, column, delimiter, rendered, path, depth):
        self.kind = kind
        self.column = column
        self.delimiter = delimiter
        self.obj_children = {}
        self.pos_children = {}
        self.rendered = rendered
        self.path = path
        self.depth = depth


class Plan:
    __slots__ = ("root", "max_depth")

    def __init__(self, root, max_depth):
        self.root = root
        self.max_depth = max_depth


def _compile_node(cnode):
    node = PlanNode(
        _CLS_CODE[cnode.cls.kind],
        cnode.column,
        cnode.cls.delimiter,
        cnode.rendered,
        cnode.path,
        cnode.depth,
    )
    for seg, child in cnode.children.items():
        compiled = _compile_node(child)
        if isinstance(seg, int):
            node.pos_children[seg] = compiled
        else:
            node.obj_children[seg] = compiled
    return node


def compile_plan(registry):
    """Build the walk plan from a registry's classification tree."""
    return Plan(_compile_node(registry.root), registry.max_depth)


def _extend(parent, seg, max_depth):
    # Paths beyond the registry's universe (foreign data): pure, convention-
    # named, no collision suffixing.
    depth = parent.depth + 1
    if depth > max_depth:
        raise DepthError(
            f"flattening {render_path(parent.path + (seg,))!r} exceeds max_depth {max_depth}"
        )
    path = parent.path + (seg,)
    node = PlanNode(_K_SCALAR, path_to_name(path), None, render_path(path), path, depth)
    if isinstance(seg, int):
        parent.pos_children[seg] = node
    else:
        parent.obj_children[seg] = node
    return node


def _walk_part(node, text, cells, max_depth):
    if node.kind == _K_DELIM:
        parts = text.split(node.delimiter)
        children = node.pos_children
        for idx, part in enumerate(parts):
            child = children.get(idx)
            if child is None:
                child = _extend(node, idx, max_depth)
            _walk_part(child, part, cells, max_depth)
    else:
        cells[node.column] = text


def _walk_value(node, value, cells, entries, max_depth):
    if value is None:
        cells[node.column] = None
        entries.append((node.rendered, "null"))
        return
    cls = value.__class__
    if cls is bool:
        cells[node.column] = value
        entries.append((node.rendered, "bool"))
        return
    if cls is int:
        cells[node.column] = value
        entries.append((node.rendered, "int"))
        return
    if cls is float:
        cells[node.column] = value
        entries.append((node.rendered, "float"))
        return
    if cls is str:
        entries.append((node.rendered, "text"))
        if node.kind == _K_DELIM:
            _walk_part(node, value, cells, max_depth)
        else:
            cells[node.column] = value
        return
    if cls is dict:
        if not value:
            entries.append((node.rendered, "empty_object"))
            return
        children = node.obj_children
        for key, child_value in value.items():
            child = children.get(key)
            if child is None:
                child = _extend(node, key, max_depth)
            _walk_value(child, child_value, cells, entries, max_depth)
        return
    if cls is list:
        if not value:
            entries.append((node.rendered, "empty_array"))
            return
        children = node.pos_children
        for idx, child_value in enumerate(value):
            child = children.get(idx)
            if child is None:
                child = _extend(node, idx, max_depth)
            _walk_value(child, child_value, cells, entries, max_depth)
        return
    raise FlattenError(f"unsupported value of type {cls.__name__} at {node.rendered!r}")


def walk_record(plan, record):
    """Flatten one record against the plan.

    Returns (cells, entries): cells is the flat row in source order, entries
    the sorted (rendered path, kind) tuple identifying the structure.
    """
    cells: dict = {}
    entries: list = []
    root = plan.root
    max_depth = plan.max_depth
    children = root.obj_children
    for key, value in record.items():
        child = children.get(key)
        if child is None:
            child = _extend(root, key, max_depth)
        _walk_value(child, value, cells, entries, max_depth)
    entries.sort()
    return cells, tuple(entries)


__all__ = ["BACKEND", "Plan", "PlanNode", "compile_plan", "walk_record", "escape_segment"]
