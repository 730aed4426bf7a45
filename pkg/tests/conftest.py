import random

import pytest

from logflat.corpus import generate_corpus
from logflat.ingest import read_corpus
from logflat.schema import build_registry


@pytest.fixture(scope="session")
def corpus_path(tmp_path_factory):
    """Seeded 13-template corpus, 40 records per schema."""
    path = tmp_path_factory.mktemp("corpus") / "corpus.jsonl"
    generate_corpus(path, seed=42, records_per_schema=40)
    return str(path)


@pytest.fixture(scope="session")
def corpus_registry(corpus_path):
    records, _ = read_corpus(corpus_path)
    return build_registry(records)


def strict_equal(a, b) -> bool:
    """Structural equality with exact scalar types (True != 1, 1 != 1.0)."""
    if type(a) is not type(b):
        return False
    if isinstance(a, dict):
        return a.keys() == b.keys() and all(strict_equal(a[k], b[k]) for k in a)
    if isinstance(a, list):
        return len(a) == len(b) and all(strict_equal(x, y) for x, y in zip(a, b))
    return a == b


def random_json_scalar(rng: random.Random):
    pick = rng.randrange(5)
    if pick == 0:
        return None
    if pick == 1:
        return rng.random() < 0.5
    if pick == 2:
        return rng.randrange(-10_000, 10_000)
    if pick == 3:
        return round(rng.uniform(-1000, 1000), 6)
    return "".join(rng.choice("abcdefgh-xyz0123456789") for _ in range(rng.randrange(0, 12)))
