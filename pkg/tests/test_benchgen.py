import dataclasses
import json

import pytest
import hypothesis.strategies as st
from hypothesis import HealthCheck, given, settings

from fidelity.benchgen import (
    CATEGORY_ORDER,
    DEFAULT_CATEGORY_COUNTS,
    TARGET_CATEGORIES,
    GenerationError,
    ResourceError,
    generate_benchmark,
    load_config,
    load_resources,
    read_benchmark,
    select_target_subset,
    write_benchmark,
)
from fidelity.cue_analysis import extract_source_cue

from conftest import SMALL_CONFIG


class TestLoadResources:
    def test_counts(self, bundle):
        assert len(bundle.professions) == 45
        assert len(bundle.names) == 30
        assert len(bundle.cross_pairs) == 50

    def test_profession_class_split(self, bundle):
        by_class = {}
        for _term, cls in bundle.professions:
            by_class[cls] = by_class.get(cls, 0) + 1
        assert by_class == {
            "male_stereotyped": 12,
            "female_stereotyped": 12,
            "neutral": 12,
            "mixed": 9,
        }

    def test_count_mismatch_rejected(self, tmp_path):
        data_dir = tmp_path / "data"
        data_dir.mkdir()
        from fidelity.hindi_text import DATA_DIR

        for name in ("professions.tsv", "names.tsv", "cross_pairs.tsv",
                     "templates.tsv", "slots.tsv"):
            (data_dir / name).write_text((DATA_DIR / name).read_text(encoding="utf-8"),
                                         encoding="utf-8")
        lines = [l for l in (data_dir / "professions.tsv").read_text(encoding="utf-8").splitlines()
                 if l.strip() and not l.startswith("#")]
        (data_dir / "professions.tsv").write_text("\n".join(lines[:44]) + "\n", encoding="utf-8")
        with pytest.raises(ResourceError, match="45"):
            load_resources(data_dir)

    def test_empty_templates_rejected(self, tmp_path):
        data_dir = tmp_path / "data"
        data_dir.mkdir()
        from fidelity.hindi_text import DATA_DIR

        for name in ("professions.tsv", "names.tsv", "cross_pairs.tsv", "slots.tsv"):
            (data_dir / name).write_text((DATA_DIR / name).read_text(encoding="utf-8"),
                                         encoding="utf-8")
        (data_dir / "templates.tsv").write_text("# empty\n", encoding="utf-8")
        with pytest.raises(ResourceError):
            load_resources(data_dir)

    def test_missing_file_rejected(self, tmp_path):
        with pytest.raises(ResourceError, match="missing"):
            load_resources(tmp_path)


class TestGenerate:
    def test_counts_match_config(self, small_bench):
        got = {}
        for inst in small_bench.instances:
            got[inst.category] = got.get(inst.category, 0) + 1
        assert got == SMALL_CONFIG

    def test_ids_unique(self, small_bench):
        ids = [inst.id for inst in small_bench.instances]
        assert len(ids) == len(set(ids))

    def test_target_gold_labels(self, small_bench):
        for inst in small_bench.instances:
            assert inst.category in CATEGORY_ORDER
            if inst.category in TARGET_CATEGORIES:
                assert inst.gold in ("male", "female")

    def test_target_balance_exact(self, small_bench):
        for cat in TARGET_CATEGORIES:
            rows = [i for i in small_bench.instances if i.category == cat]
            assert sum(1 for i in rows if i.gold == "male") == len(rows) // 2

    def test_all_zero_config(self, bundle):
        bench = generate_benchmark({c: 0 for c in CATEGORY_ORDER}, bundle, seed=0)
        assert bench.instances == []
        assert all(v == 0 for v in bench.counts.values())

    def test_unknown_category_rejected(self, bundle):
        with pytest.raises(GenerationError, match="unknown"):
            generate_benchmark({"no_such_category": 5}, bundle, seed=0)

    def test_overlarge_count_names_category(self, bundle):
        with pytest.raises(GenerationError, match="counter_stereotype"):
            generate_benchmark({"counter_stereotype": 10_000}, bundle, seed=0)

    def test_odd_target_count_rejected(self, bundle):
        with pytest.raises(GenerationError, match="50/50"):
            generate_benchmark({"explicit_gender": 7}, bundle, seed=0)

    def test_no_duplicate_surfaces_within_category(self, small_bench):
        seen = set()
        for inst in small_bench.instances:
            key = (inst.category, inst.source_en)
            assert key not in seen
            seen.add(key)

    def test_determinism_byte_identical(self, bundle, tmp_path):
        a = generate_benchmark(SMALL_CONFIG, bundle, seed=7)
        b = generate_benchmark(SMALL_CONFIG, bundle, seed=7)
        pa, pb = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_benchmark(a, pa)
        write_benchmark(b, pb)
        assert pa.read_bytes() == pb.read_bytes()

    def test_seed_changes_sample(self, bundle):
        a = generate_benchmark(SMALL_CONFIG, bundle, seed=0)
        b = generate_benchmark(SMALL_CONFIG, bundle, seed=1)
        assert [i.id for i in a.instances] != [i.id for i in b.instances]

    @settings(max_examples=10, deadline=None,
              suppress_health_check=[HealthCheck.function_scoped_fixture])
    @given(seed=st.integers(0, 10_000))
    def test_determinism_property(self, bundle, seed):
        a = generate_benchmark({"minimal_context": 20}, bundle, seed=seed)
        b = generate_benchmark({"minimal_context": 20}, bundle, seed=seed)
        assert [dataclasses.asdict(x) for x in a.instances] == [
            dataclasses.asdict(x) for x in b.instances
        ]

    def test_label_locality(self, small_bench):
        """Gold labels on target rows are recoverable from the source text."""
        agree = 0
        rows = [i for i in small_bench.instances if i.category in TARGET_CATEGORIES]
        for inst in rows:
            if extract_source_cue(inst.source_en).gender == inst.gold:
                agree += 1
        assert agree / len(rows) >= 0.99


class TestTargetSubset:
    def test_only_neutral_rows_empty(self, bundle):
        bench = generate_benchmark({"neutral_profession": 20}, bundle, seed=0)
        assert select_target_subset(bench).instances == []

    def test_subset_categories(self, small_bench):
        subset = select_target_subset(small_bench)
        assert {i.category for i in subset.instances} == set(TARGET_CATEGORIES)
        assert len(subset.instances) == sum(SMALL_CONFIG[c] for c in TARGET_CATEGORIES)


class TestSerialization:
    def test_round_trip(self, small_bench, tmp_path):
        path = tmp_path / "bench.jsonl"
        write_benchmark(small_bench, path)
        back = read_benchmark(path)
        assert [i.id for i in back.instances] == [i.id for i in small_bench.instances]
        assert back.counts == SMALL_CONFIG

    def test_jsonl_schema(self, small_bench, tmp_path):
        path = tmp_path / "bench.jsonl"
        write_benchmark(small_bench, path)
        raw = path.read_bytes().decode("utf-8")
        assert "\r" not in raw
        for line in raw.splitlines():
            rec = json.loads(line)
            assert set(rec) == {"id", "category", "source_en", "gold", "meta"}


class TestConfigFile:
    def test_load(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text("categories:\n  explicit_gender: 10\n  name_only: 4\n")
        assert load_config(cfg) == {"explicit_gender": 10, "name_only": 4}

    def test_malformed(self, tmp_path):
        cfg = tmp_path / "cfg.yaml"
        cfg.write_text("- just\n- a list\n")
        with pytest.raises(GenerationError):
            load_config(cfg)


def test_default_counts_total():
    assert sum(DEFAULT_CATEGORY_COUNTS.values()) == 37_345
    assert sum(DEFAULT_CATEGORY_COUNTS[c] for c in TARGET_CATEGORIES) == 15_750
