import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from logflat.errors import ClassificationConflictError
from logflat.ingest import read_corpus
from logflat.schema import (
    ClassifyConfig,
    build_registry,
    classify_field,
    fingerprint,
    path_to_name,
    render_path,
    widen_kind,
)


def test_fingerprint_simple_record():
    fp = fingerprint({"id": "a", "honeypot": "19"})
    assert fp.entries == (("honeypot", "text"), ("id", "text"))


def test_fingerprint_empty_record():
    fp = fingerprint({})
    assert fp.entries == ()
    assert fp.digest == fingerprint({}).digest


def test_fingerprint_ignores_values_and_key_order():
    a = fingerprint({"x": 1, "y": "hi"})
    b = fingerprint({"y": "bye", "x": 99})
    assert a.digest == b.digest


def test_fingerprint_structure_distinguishes():
    assert fingerprint({"a": 1}).digest != fingerprint({"a": 1.0}).digest
    assert fingerprint({"a": 1}).digest != fingerprint({"b": 1}).digest
    assert fingerprint({"a": None}).entries == (("a", "null"),)
    assert fingerprint({"a": {}}).entries == (("a", "empty_object"),)
    assert fingerprint({"a": []}).entries == (("a", "empty_array"),)


def test_fingerprint_nested_paths():
    fp = fingerprint({"_id": {"$oid": "x"}, "tags": ["a", "b"]})
    assert fp.entries == (
        ("_id.$oid", "text"), ("tags[0]", "text"), ("tags[1]", "text"))


def test_render_path_escaping_keeps_paths_distinct():
    dotted = fingerprint({"a.b": 1})
    nested = fingerprint({"a": {"b": 1}})
    assert dotted.digest != nested.digest
    assert render_path(("a.b",)) == "a\\.b"


def test_path_to_name_strips_decoration():
    assert path_to_name(("_id", "$oid")) == "_id_oid"
    assert path_to_name(("payload", "@timestamp")) == "payload_timestamp"
    assert path_to_name(("raw_sig", 2)) == "raw_sig_2"


def test_widen_kind_lattice():
    assert widen_kind("null", "int") == "int"
    assert widen_kind("int", "float") == "float"
    assert widen_kind("float", "text") == "text"
    assert widen_kind("bool", "int") == "int"


# --------------------------------------------------------------------------
# classification


def test_classify_struct_wrapper():
    samples = [{"$oid": f"{i}"} for i in range(20)]
    assert classify_field(("_id",), samples).kind == "struct"


def test_classify_dict_union():
    samples = [{"a": 1}, {"b": 2, "c": 3}] * 5
    assert classify_field(("payload",), samples).kind == "dict"


def test_classify_delimited_constant_colon_count():
    samples = [f"{i}:{i+1}:{i+2}:{i+3}" for i in range(50)]
    cls = classify_field(("raw_sig",), samples)
    assert cls.kind == "delimited"
    assert cls.delimiter == ":"


def test_classify_delimiter_priority_order():
    # both ':' and ',' appear with constant counts; ':' wins by priority
    samples = [f"a:b,{i}" for i in range(20)]
    assert classify_field(("x",), samples).delimiter == ":"


def test_classify_varying_count_is_scalar():
    rng = random.Random(5)
    samples = [":".join("x" * rng.randrange(1, 6) for _ in range(rng.randrange(1, 5)))
               for _ in range(100)]
    counts = {s.count(":") for s in samples}
    assert len(counts) > 2  # premise: counts really vary
    assert classify_field(("x",), samples).kind == "scalar"


def test_classify_list():
    assert classify_field(("xs",), [[1, 2], [3]]).kind == "list"


def test_classify_scalar_kind_mix_widens_not_errors():
    cls = classify_field(("port",), ["19", 19, 19.5])
    assert cls.kind == "scalar"


def test_classify_conflict_object_vs_text():
    with pytest.raises(ClassificationConflictError):
        classify_field(("a",), [{"x": 1}, "text"])


def test_classify_nulls_do_not_conflict():
    assert classify_field(("a",), [None, {"x": 1}, None]).kind == "struct"


def test_classify_timestamps_exempt_from_splitting():
    samples = [f"2016-07-01T14:48:{s:02d}.839+02:00" for s in range(50)]
    assert all(s.count(":") == 3 for s in samples)
    assert classify_field(("when",), samples).kind == "scalar"


def test_classify_monotone_stability():
    struct_samples = [{"k": i} for i in range(10)]
    assert classify_field(("a",), struct_samples).kind == "struct"
    assert classify_field(("a",), struct_samples + [{"k": 99}]).kind == "struct"
    dict_samples = [{"k": 1}, {"j": 2}]
    assert classify_field(("a",), dict_samples).kind == "dict"
    assert classify_field(("a",), dict_samples + [{"m": 3}]).kind == "dict"


def test_classify_overrides():
    cfg = ClassifyConfig(dict_overrides={"a": True}, delimiter_overrides={"b": None})
    assert classify_field(("a",), [{"k": 1}] * 3, cfg).kind == "dict"
    assert classify_field(("b",), ["1:2:3"] * 10, cfg).kind == "scalar"
    forced = ClassifyConfig(delimiter_overrides={"c": "|"})
    assert classify_field(("c",), ["a|b"] * 3, forced).delimiter == "|"


# --------------------------------------------------------------------------
# registry


def test_registry_13_baseline_structures(corpus_path):
    records, _ = read_corpus(corpus_path)
    registry = build_registry(records)
    assert len(registry) == 13
    assert len(registry.partitions) == 13
    assert registry.dict_nodes and registry.dict_nodes[0].rendered == "payload"
    assert len(registry.dict_nodes[0].inner) == 13


def test_registry_counts_sum_to_records(corpus_path):
    records, _ = read_corpus(corpus_path)
    registry = build_registry(records)
    assert sum(registry.counts.values()) == registry.record_count == 13 * 40


def test_registry_single_structure():
    records = [{"a": i, "b": "x"} for i in range(10)]
    registry = build_registry(records)
    assert len(registry) == 1
    assert next(iter(registry.schemas.values())).count == 10


def test_registry_k_distinct_templates():
    # enumerate k hand-built template shapes; registry must find exactly k
    templates = [
        {"a": 1},
        {"a": 1, "b": "x"},
        {"a": 1, "b": "x", "c": [1, 2]},
        {"a": 1, "nested": {"x": "y"}},
        {"b": None},
    ]
    records = [dict(t) for t in templates for _ in range(7)]
    registry = build_registry(records)
    assert len(registry) == len(templates)
    assert sorted(registry.counts.values()) == [7] * len(templates)


def test_registry_first_appearance_order():
    records = [{"b": 1}, {"a": 1}, {"b": 2}, {"c": "x"}]
    registry = build_registry(records)
    first_entries = [s.fingerprint.entries[0][0] for s in registry.schemas.values()]
    assert first_entries == ["b", "a", "c"]


def test_registry_rename_map_collisions_deterministic():
    records = [{"a": {"b": 1}, "a_b": 2}] * 3
    registry = build_registry(records)
    assert registry.rename_map["a.b"] == "a_b"  # first appearance wins
    assert registry.rename_map["a_b"] == "a_b_2"


def test_registry_reserves_schema_type_column():
    records = [{"schemaType": "z", "v": 1}] * 2
    registry = build_registry(records)
    assert registry.rename_map["schemaType"] == "schemaType_2"


_keys = st.sampled_from(["a", "b", "c", "d"])
_scalars = st.one_of(st.none(), st.booleans(), st.integers(-50, 50), st.text(max_size=4))


@given(st.dictionaries(_keys, _scalars, max_size=4), st.randoms(use_true_random=False))
@settings(max_examples=50, deadline=None)
def test_fingerprint_pure_function_of_structure(record, rng):
    base = fingerprint(record)
    shuffled_keys = list(record)
    rng.shuffle(shuffled_keys)
    permuted = {k: record[k] for k in shuffled_keys}
    assert fingerprint(permuted).digest == base.digest
    # changing scalar values (same kinds) never changes the digest
    mutated = {}
    for k, v in record.items():
        if isinstance(v, bool):
            mutated[k] = not v
        elif isinstance(v, int):
            mutated[k] = v + 1
        elif isinstance(v, str):
            mutated[k] = v + "zz"
        else:
            mutated[k] = v
    assert fingerprint(mutated).digest == base.digest
