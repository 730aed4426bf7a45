import random

import pytest

from logflat import kernel
from logflat.errors import DepthError
from logflat.flatten import FlattenConfig
from logflat.ingest import read_corpus
from logflat.schema import build_registry, fingerprint

cython_missing = "cython" not in kernel.available_backends()
needs_cython = pytest.mark.skipif(cython_missing, reason="compiled kernel not built")


def _walk_both(registry, record):
    py = kernel.backend_module("python")
    cy = kernel.backend_module("cython")
    return (py.walk_record(py.compile_plan(registry), record),
            cy.walk_record(cy.compile_plan(registry), record))


def test_walk_entries_agree_with_fingerprint(corpus_path, corpus_registry):
    backend = kernel.backend_module("python")
    plan = backend.compile_plan(corpus_registry)
    records, _ = read_corpus(corpus_path)
    for i, record in enumerate(records):
        if i >= 50:
            break
        _, entries = backend.walk_record(plan, record)
        assert entries == fingerprint(record).entries


@needs_cython
def test_backends_identical_on_corpus(corpus_path, corpus_registry):
    py = kernel.backend_module("python")
    cy = kernel.backend_module("cython")
    plan_py = py.compile_plan(corpus_registry)
    plan_cy = cy.compile_plan(corpus_registry)
    records, _ = read_corpus(corpus_path)
    for record in records:
        cells_py, entries_py = py.walk_record(plan_py, record)
        cells_cy, entries_cy = cy.walk_record(plan_cy, record)
        assert cells_py == cells_cy
        assert list(cells_py) == list(cells_cy)  # same column order too
        assert entries_py == entries_cy


@needs_cython
def test_backends_identical_on_edge_shapes():
    records = [
        {"a": {"b": [1, {"c": "x:y:z"}]}, "d": None, "e": {}, "f": [],
         "g": True, "h": 1.5, "i": [[1], [2, 3]]},
        {"a": {"b": []}, "d": "q:w", "e": {"deep": {"er": 1}}, "f": [0],
         "g": False, "h": 2, "i": []},
    ] * 5
    registry = build_registry(records)
    for record in records:
        (c1, e1), (c2, e2) = _walk_both(registry, record)
        assert c1 == c2 and e1 == e2


@needs_cython
def test_backends_same_depth_error():
    registry = build_registry([{"a": 1}], FlattenConfig(max_depth=2).classify_config())
    deep = {"z": {"y": {"x": 1}}}
    for name in ("python", "cython"):
        backend = kernel.backend_module(name)
        plan = backend.compile_plan(registry)
        with pytest.raises(DepthError):
            backend.walk_record(plan, deep)


@needs_cython
def test_backends_identical_on_random_records():
    rng = random.Random(77)
    keys = ["k1", "k2", "k3", "k4"]

    def rand_value(depth):
        pick = rng.randrange(7 if depth < 3 else 4)
        if pick == 0:
            return None
        if pick == 1:
            return rng.randrange(-99, 99)
        if pick == 2:
            return rng.choice(["a:b", "x,y,z", "plain", "", "a|b|c"])
        if pick == 3:
            return rng.random() < 0.5
        if pick == 4:
            return {k: rand_value(depth + 1) for k in rng.sample(keys, rng.randrange(0, 3))}
        if pick == 5:
            return [rand_value(depth + 1) for _ in range(rng.randrange(0, 3))]
        return rng.uniform(-5, 5)

    for _ in range(40):
        records = [{k: rand_value(1) for k in rng.sample(keys, rng.randrange(1, 4))}
                   for _ in range(10)]
        try:
            registry = build_registry(records)
        except Exception:
            continue  # conflicting shapes are a classify error, not a parity case
        for record in records:
            (c1, e1), (c2, e2) = _walk_both(registry, record)
            assert c1 == c2 and e1 == e2
