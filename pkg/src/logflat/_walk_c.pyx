# cython: language_level=3, boundscheck=False, wraparound=False
"""Compiled flatten walk: the per-record hot path.

Exact mirror of logflat._walk_py; see that module for the contract. Keep the
two in lockstep -- the parity tests compare their output cell for cell.
"""

from .errors import DepthError, FlattenError
from .schema import (
    CLS_DELIMITED,
    CLS_DICT,
    CLS_LIST,
    CLS_SCALAR,
    CLS_STRUCT,
    path_to_name,
    render_path,
)

BACKEND = "cython"

DEF K_SCALAR = 0
DEF K_STRUCT = 1
DEF K_DICT = 2
DEF K_DELIM = 3
DEF K_LIST = 4

_CLS_CODE = {
    CLS_SCALAR: K_SCALAR,
    CLS_STRUCT: K_STRUCT,
    CLS_DICT: K_DICT,
    CLS_DELIMITED: K_DELIM,
    CLS_LIST: K_LIST,
}


cdef class PlanNode:
    cdef public int kind
    cdef public str column
    cdef public object delimiter
    cdef public dict obj_children
    cdef public dict pos_children
    cdef public str rendered
    cdef public tuple path
    cdef public int depth

    def __cinit__(self, int kind, column, delimiter, rendered, path, int depth):
        self.kind = kind
        self.column = column
        self.delimiter = delimiter
        self.obj_children = {}
        self.pos_children = {}
        self.rendered = rendered
        self.path = path
        self.depth = depth


cdef class Plan:
    cdef public PlanNode root
    cdef public int max_depth

    def __cinit__(self, PlanNode root, int max_depth):
        self.root = root
        self.max_depth = max_depth


cdef PlanNode _compile_node(cnode):
    cdef PlanNode node = PlanNode(
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


cdef PlanNode _extend(PlanNode parent, seg, int max_depth):
    cdef int depth = parent.depth + 1
    if depth > max_depth:
        raise DepthError(
            f"flattening {render_path(parent.path + (seg,))!r} exceeds max_depth {max_depth}"
        )
    path = parent.path + (seg,)
    cdef PlanNode node = PlanNode(
        K_SCALAR, path_to_name(path), None, render_path(path), path, depth)
    if isinstance(seg, int):
        parent.pos_children[seg] = node
    else:
        parent.obj_children[seg] = node
    return node


cdef void _walk_part(PlanNode node, str text, dict cells, int max_depth):
    cdef Py_ssize_t idx
    cdef PlanNode child
    if node.kind == K_DELIM:
        parts = text.split(<str> node.delimiter)
        children = node.pos_children
        for idx in range(len(parts)):
            child = <PlanNode> children.get(idx)
            if child is None:
                child = _extend(node, idx, max_depth)
            _walk_part(child, <str> parts[idx], cells, max_depth)
    else:
        cells[node.column] = text


cdef void _walk_value(PlanNode node, object value, dict cells, list entries,
                      int max_depth):
    cdef Py_ssize_t idx
    cdef PlanNode child
    if value is None:
        cells[node.column] = None
        entries.append((node.rendered, "null"))
        return
    cls = type(value)
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
        if node.kind == K_DELIM:
            _walk_part(node, <str> value, cells, max_depth)
        else:
            cells[node.column] = value
        return
    if cls is dict:
        if not (<dict> value):
            entries.append((node.rendered, "empty_object"))
            return
        children = node.obj_children
        for key, child_value in (<dict> value).items():
            child = <PlanNode> children.get(key)
            if child is None:
                child = _extend(node, key, max_depth)
            _walk_value(child, child_value, cells, entries, max_depth)
        return
    if cls is list:
        if not (<list> value):
            entries.append((node.rendered, "empty_array"))
            return
        children = node.pos_children
        for idx in range(len(<list> value)):
            child = <PlanNode> children.get(idx)
            if child is None:
                child = _extend(node, idx, max_depth)
            _walk_value(child, (<list> value)[idx], cells, entries, max_depth)
        return
    raise FlattenError(f"unsupported value of type {cls.__name__} at {node.rendered!r}")


def walk_record(Plan plan, dict record):
    """Flatten one record against the plan; see logflat._walk_py.walk_record."""
    cdef dict cells = {}
    cdef list entries = []
    cdef PlanNode root = plan.root
    cdef PlanNode child
    cdef int max_depth = plan.max_depth
    children = root.obj_children
    for key, value in record.items():
        child = <PlanNode> children.get(key)
        if child is None:
            child = _extend(root, key, max_depth)
        _walk_value(child, value, cells, entries, max_depth)
    entries.sort()
    return cells, tuple(entries)
