import json
from pathlib import Path

import pytest

from fidelity.benchgen import generate_benchmark, load_resources
from fidelity.hindi_text import default_lexicons

FIXTURE_PATH = Path(__file__).parent.parent / "src" / "fidelity" / "data" / "fixtures" / "classifier_fixtures.tsv"

# small but covers all three target categories plus neutral rows
SMALL_CONFIG = {
    "explicit_gender": 60,
    "late_binding": 20,
    "winograd_coref": 40,
    "neutral_profession": 20,
}


@pytest.fixture(scope="session")
def lex():
    return default_lexicons()


@pytest.fixture(scope="session")
def bundle():
    return load_resources()


@pytest.fixture(scope="session")
def small_bench(bundle):
    return generate_benchmark(SMALL_CONFIG, bundle, seed=0)


def load_fixture_rows():
    rows = []
    for line in FIXTURE_PATH.read_text(encoding="utf-8").splitlines():
        if not line.strip() or line.startswith("#"):
            continue
        source, hindi, expected = line.split("\t")
        rows.append((source, hindi, expected))
    return rows


def write_jsonl(records, path: Path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
