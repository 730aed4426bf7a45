import random

import pytest

from conftest import random_json_scalar, strict_equal
from logflat.errors import DepthError
from logflat.flatten import (
    FlattenConfig,
    flatten_record,
    partition_by_schema,
    reconstruct,
    unify_global,
)
from logflat.schema import build_registry, fingerprint


def _registry(records, **kwargs):
    cfg = FlattenConfig(**kwargs) if kwargs else FlattenConfig()
    return build_registry(records, cfg.classify_config())


def test_struct_wrapper_promotes_leaf():
    records = [{"_id": {"$oid": f"5776664eb3c585471bf1bb{i}"}} for i in range(5)]
    registry = _registry(records)
    row = flatten_record(records[0], registry)
    assert row == {"_id_oid": "5776664eb3c585471bf1bb0"}


def test_delimited_string_splits_positionally():
    records = [{"raw_sig": f"a{i}:b{i}:c{i}"} for i in range(10)]
    registry = _registry(records)
    row = flatten_record({"raw_sig": "a:b:c"}, registry)
    assert row == {"raw_sig_0": "a", "raw_sig_1": "b", "raw_sig_2": "c"}


def test_level_two_split_recurses():
    # one ':' part itself carries a ',' pair, like an MSS,WSCALE tail
    records = [{"sig": f"x{i}:1024,0:tail"} for i in range(10)]
    registry = _registry(records)
    row = flatten_record({"sig": "x:1024,0:tail"}, registry)
    assert row["sig_1_0"] == "1024"
    assert row["sig_1_1"] == "0"
    assert "sig_1" not in row


def test_list_spreads_one_column_per_position():
    records = [{"xs": [1, 2, 3]}] * 4
    registry = _registry(records)
    row = flatten_record({"xs": [7, 8, 9]}, registry)
    assert row == {"xs_0": 7, "xs_1": 8, "xs_2": 9}


def test_varying_list_lengths_pad_with_union_columns():
    records = [{"p": {"a": 1}, "xs": [1]}, {"p": {"b": 2}, "xs": [1, 2, 3]}] * 3
    registry = _registry(records)
    frames = partition_by_schema(records, registry)
    for frame in frames:
        if "xs_2" in frame.names:
            assert None in frame.column("xs_2").values or frame.row_count == 3


def test_no_complex_values_survive():
    records = [{"a": {"b": [1, {"c": "x:y"}]}, "d": [[1], [2, 3]]}] * 3
    registry = _registry(records)
    row = flatten_record(records[0], registry)
    assert all(not isinstance(v, (dict, list)) for v in row.values())


def test_flatten_already_flat_is_identity():
    records = [{"a": 1, "b": "x", "c": 2.5}] * 3
    registry = _registry(records)
    assert flatten_record(records[0], registry) == records[0]


def test_flatten_empty_record():
    registry = _registry([{"a": 1}])
    assert flatten_record({}, registry) == {}


def test_depth_limit_error_names_path():
    registry = _registry([{"a": 1}], max_depth=2)
    deep = {"a": 1, "z": {"y": {"x": {"w": 1}}}}
    with pytest.raises(DepthError) as err:
        flatten_record(deep, registry)
    assert "z" in str(err.value)


def test_partition_counts_and_schema_types():
    templates = [
        {"p": {"kind": "a", "x": "1"}},
        {"p": {"kind": "b", "y": "1", "z": "2"}},
        {"p": {"w": "3"}},
    ]
    records = []
    for i in range(300):
        t = dict(templates[i % 3])
        records.append(t)
    registry = _registry(records)
    frames = partition_by_schema(records, registry)
    assert len(frames) == 3
    assert [f.row_count for f in frames] == [100, 100, 100]
    types = [f.column("schemaType").values[0] for f in frames]
    assert sorted(types) == [0, 1, 2]
    assert all(len(set(f.column("schemaType").values)) == 1 for f in frames)
    assert sum(f.row_count for f in frames) == len(records)


def test_single_schema_corpus_one_frame():
    records = [{"a": i} for i in range(10)]
    registry = _registry(records)
    frames = partition_by_schema(records, registry)
    assert len(frames) == 1
    assert frames[0].row_count == 10


def test_unseen_payload_schema_goes_to_reject_frame():
    known = [{"p": {"a": 1}}, {"p": {"b": 2}}] * 3
    registry = _registry(known)
    frames = partition_by_schema(known + [{"p": {"zz": 9}}], registry)
    names = [f.name for f in frames]
    assert "rejected" in names
    reject = frames[names.index("rejected")]
    assert reject.row_count == 1
    assert reject.column("schemaType").values == (-1,)


def test_global_union_and_null_cells():
    records = [{"p": {"a": 1}}, {"p": {"b": 2, "c": 3}}]
    registry = _registry(records)
    frame = unify_global(records, registry, FlattenConfig(mode="global"))
    assert set(frame.names) == {"schemaType", "p_a", "p_b", "p_c"}
    assert frame.column("p_c").values == (None, 3)


def test_global_sentinel_fill_leaves_no_nulls():
    records = [{"p": {"a": 1}}, {"p": {"b": 2}}]
    registry = _registry(records)
    frame = unify_global(records, registry,
                         FlattenConfig(mode="global", null_fill="sentinel", sentinel="NA"))
    assert all(None not in col.values for col in frame.columns)


def test_global_mean_fill_numeric_only():
    records = [{"p": {"a": 1}, "t": "x"}, {"p": {"a": 3, "b": 10}, "t": "y"}]
    registry = _registry(records)
    frame = unify_global(records, registry,
                         FlattenConfig(mode="global", null_fill="mean"))
    assert frame.column("p_b").values == (10.0, 10.0)


def test_global_local_consistency(corpus_path, corpus_registry):
    from logflat.ingest import read_corpus

    records1, _ = read_corpus(corpus_path)
    records1 = list(records1)
    locals_ = partition_by_schema(records1[:60], corpus_registry)
    global_ = unify_global(records1[:60], corpus_registry, FlattenConfig(mode="global"))
    local_rows = {}
    for frame in locals_:
        for row in frame.rows():
            key = tuple(sorted((k, v) for k, v in row.items() if v is not None and k != "schemaType"))
            local_rows.setdefault(key, 0)
            local_rows[key] += 1
    for row in global_.rows():
        key = tuple(sorted((k, v) for k, v in row.items() if v is not None and k != "schemaType"))
        assert local_rows.get(key, 0) > 0
        local_rows[key] -= 1


def test_column_collision_resolved_stably():
    records = [{"a": {"b": 1}, "a_b": 2}] * 3
    registry = _registry(records)
    row = flatten_record(records[0], registry)
    assert row == {"a_b": 1, "a_b_2": 2}


# --------------------------------------------------------------------------
# reconstruction


def _assert_round_trip(record, registry):
    row = flatten_record(record, registry)
    rebuilt = reconstruct(row, fingerprint(record), registry)
    ordered = _reorder_like(rebuilt, record)
    assert strict_equal(ordered, record), f"{record} != {rebuilt}"


def _reorder_like(built, template):
    if isinstance(built, dict) and isinstance(template, dict) and built.keys() == template.keys():
        return {k: _reorder_like(built[k], template[k]) for k in template}
    if isinstance(built, list) and isinstance(template, list):
        return [_reorder_like(b, t) for b, t in zip(built, template)]
    return built


def test_reconstruct_examples():
    records = [
        {"_id": {"$oid": "abc"}, "sig": "a:b:c", "xs": [1, 2], "n": None,
         "eo": {}, "ea": [], "f": 1.25, "t": True},
    ] * 3
    registry = _registry(records)
    _assert_round_trip(records[0], registry)
    empty_registry = _registry([{}])
    _assert_round_trip({}, empty_registry)


def test_reconstruct_null_at_delimited_path():
    records = [{"sig": "a:b"}] * 9 + [{"sig": None}]
    registry = _registry(records)
    _assert_round_trip(records[0], registry)
    _assert_round_trip({"sig": None}, registry)


def test_reconstruct_delimiter_free_value_single_part():
    records = [{"sig": f"a{i}:b"} for i in range(20)] + [{"sig": "plain"}]
    registry = _registry(records)
    _assert_round_trip({"sig": "plain"}, registry)


def _random_schema(rng, depth):
    """A consistent generator shape: each path has one structural kind."""
    kind = rng.randrange(6) if depth < 3 else 5
    if kind == 0:
        return {"obj": {f"k{i}": _random_schema(rng, depth + 1)
                        for i in range(rng.randrange(1, 4))}}
    if kind == 1:
        return {"list": [_random_schema(rng, depth + 1)
                         for _ in range(rng.randrange(0, 4))]}
    if kind == 2:
        return {"delim": rng.choice(":,;|"), "parts": rng.randrange(1, 5)}
    return {"scalar": True}


def _instantiate(shape, rng):
    if "obj" in shape:
        return {k: _instantiate(v, rng) for k, v in shape["obj"].items()}
    if "list" in shape:
        n = len(shape["list"])
        return [_instantiate(s, rng) for s in shape["list"][: rng.randrange(0, n + 1) if n else 0]]
    if "delim" in shape:
        d = shape["delim"]
        alphabet = "abcdef0123456789"
        return d.join("".join(rng.choice(alphabet) for _ in range(rng.randrange(0, 5)))
                      for _ in range(shape["parts"]))
    return random_json_scalar(rng)


def test_randomized_round_trip_batches():
    rng = random.Random(2024)
    for batch in range(30):
        shape = {"obj": {f"f{i}": _random_schema(rng, 1) for i in range(rng.randrange(1, 5))}}
        records = [_instantiate(shape, rng) for _ in range(20)]
        registry = _registry(records)
        for record in records:
            _assert_round_trip(record, registry)
