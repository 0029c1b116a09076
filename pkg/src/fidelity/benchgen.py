"""Deterministic synthesis of the 12-category benchmark.

Templates, professions, names, and cross-stereotype pairs are plain data
files under ``data/``. Generation enumerates the full template x slot
space per category, deduplicates surfaces within the category, and draws a
seeded sample; the three target categories are drawn exactly 50/50
male/female.
"""
from __future__ import annotations

import hashlib
import json
import random
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .hindi_text import DATA_DIR

CATEGORY_ORDER = [
    "explicit_gender",
    "late_binding",
    "winograd_coref",
    "name_profession",
    "neutral_profession",
    "counter_stereotype",
    "coreference",
    "multi_sentence",
    "social_role",
    "temporal_aspect",
    "minimal_context",
    "name_only",
]

DEFAULT_CATEGORY_COUNTS = {
    "explicit_gender": 7500,
    "late_binding": 2250,
    "winograd_coref": 6000,
    "name_profession": 6750,
    "neutral_profession": 7500,
    "counter_stereotype": 960,
    "coreference": 550,
    "multi_sentence": 2340,
    "social_role": 1350,
    "temporal_aspect": 945,
    "minimal_context": 540,
    "name_only": 660,
}

TARGET_CATEGORIES = ("explicit_gender", "late_binding", "winograd_coref")

EXPECTED_PROFESSIONS = 45
EXPECTED_NAMES = 30
EXPECTED_PAIRS = 50

_SLOT_RE = re.compile(r"\{(\w+)\}")


class ResourceError(ValueError):
    pass


class GenerationError(ValueError):
    pass


@dataclass(frozen=True)
class Template:
    category: str
    template_id: str
    gold_rule: str  # pronoun | gword | name | role | neutral
    profession_filter: str  # any | counter | pair
    pattern: str

    @property
    def slots(self) -> list[str]:
        return _SLOT_RE.findall(self.pattern)


@dataclass
class ResourceBundle:
    professions: list[tuple[str, str]]  # (term, stereotype class)
    names: list[tuple[str, str, str]]  # (latin, gender, devanagari)
    cross_pairs: list[tuple[str, str]]
    templates: list[Template]
    slot_values: dict[str, list[tuple[str, str | None]]] = field(default_factory=dict)

    def professions_of_class(self, cls: str) -> list[str]:
        return [term for term, c in self.professions if c == cls]

    def profession_terms(self) -> set[str]:
        return {term for term, _ in self.professions}


@dataclass(frozen=True)
class BenchmarkInstance:
    id: str
    category: str
    source_en: str
    gold: str  # male | female | neutral | ambiguous
    meta: dict

    def to_json(self) -> str:
        record = {
            "id": self.id,
            "category": self.category,
            "source_en": self.source_en,
            "gold": self.gold,
            "meta": self.meta,
        }
        return json.dumps(record, ensure_ascii=False, sort_keys=True)


@dataclass
class BenchmarkSet:
    instances: list[BenchmarkInstance]
    seed: int
    counts: dict[str, int]


def _read_tsv(path: Path, n_fields: int) -> list[tuple[str, ...]]:
    if not path.exists():
        raise ResourceError(f"missing resource file: {path}")
    rows = []
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.rstrip("\n")
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        parts = tuple(line.split("\t"))
        if len(parts) != n_fields:
            raise ResourceError(
                f"{path}:{lineno}: expected {n_fields} tab-separated fields, got {len(parts)}"
            )
        rows.append(parts)
    return rows


def load_resources(data_dir: Path | None = None) -> ResourceBundle:
    """Load and validate the benchmark resource files."""
    data_dir = data_dir or DATA_DIR
    professions = [(t, c) for t, c in _read_tsv(data_dir / "professions.tsv", 2)]
    names = [(a, g, d) for a, g, d in _read_tsv(data_dir / "names.tsv", 3)]
    pairs = [(a, b) for a, b in _read_tsv(data_dir / "cross_pairs.tsv", 2)]
    templates = [
        Template(cat, tid, rule, pfilter, pattern)
        for cat, tid, rule, pfilter, pattern in _read_tsv(data_dir / "templates.tsv", 5)
    ]
    slot_values: dict[str, list[tuple[str, str | None]]] = {}
    for slot, value, gender in _read_tsv(data_dir / "slots.tsv", 3):
        slot_values.setdefault(slot, []).append((value, None if gender == "-" else gender))

    if len(professions) != EXPECTED_PROFESSIONS:
        raise ResourceError(
            f"professions.tsv: expected {EXPECTED_PROFESSIONS} rows, found {len(professions)}"
        )
    if len(names) != EXPECTED_NAMES:
        raise ResourceError(f"names.tsv: expected {EXPECTED_NAMES} rows, found {len(names)}")
    if len(pairs) != EXPECTED_PAIRS:
        raise ResourceError(f"cross_pairs.tsv: expected {EXPECTED_PAIRS} rows, found {len(pairs)}")
    if not templates:
        raise ResourceError("templates.tsv: no templates defined")

    bundle = ResourceBundle(professions, names, pairs, templates, slot_values)
    known_slots = {"Pronoun", "pronoun", "gword", "profession", "profA", "profB", "name", "role"}
    known_slots |= set(slot_values)
    for t in templates:
        unresolved = [s for s in t.slots if s not in known_slots]
        if unresolved:
            raise ResourceError(f"template {t.template_id}: unresolvable slots {unresolved}")
    return bundle


_PRONOUNS = {"female": ("she", "She"), "male": ("he", "He")}
_GWORDS = {"female": "woman", "male": "man"}


def _expand_template(t: Template, bundle: ResourceBundle):
    """Yield (surface, gold, meta) rows in a fixed deterministic order."""
    slots = t.slots
    genders: list[str | None]
    if t.gold_rule in ("pronoun", "gword"):
        genders = ["female", "male"]
    else:
        genders = [None]

    def aux_axes(values: dict, gold: str, gender: str | None):
        """Expand the plain list slots (year, ctx, ...) and yield rows."""
        aux = [s for s in slots if s in bundle.slot_values and s != "role"]

        def rec(i: int, acc: dict):
            if i == len(aux):
                surface = t.pattern.format(**{**values, **acc})
                meta = {"template": t.template_id}
                meta.update({k: v for k, v in {**values, **acc}.items()
                             if k not in ("Pronoun", "pronoun", "gword")})
                if gender is not None:
                    meta["cue_gender"] = gender
                yield surface, gold, meta
                return
            for value, _g in bundle.slot_values[aux[i]]:
                yield from rec(i + 1, {**acc, aux[i]: value})

        yield from rec(0, {})

    for gender in genders:
        fills: dict[str, str] = {}
        if gender is not None:
            fills["pronoun"], fills["Pronoun"] = _PRONOUNS[gender]
            fills["gword"] = _GWORDS[gender]
        if "profA" in slots:
            for a, b in bundle.cross_pairs:
                gold = gender if t.gold_rule in ("pronoun", "gword") else "neutral"
                yield from aux_axes({**fills, "profA": a, "profB": b}, gold, gender)
        elif "profession" in slots:
            if t.profession_filter == "counter":
                # Counter-stereotyped: pair each gender with the opposite class.
                cls = "male_stereotyped" if gender == "female" else "female_stereotyped"
                terms = bundle.professions_of_class(cls)
            else:
                terms = [term for term, _ in bundle.professions]
            for term in terms:
                if "name" in slots:
                    for latin, name_gender, _dev in bundle.names:
                        gold = name_gender if t.gold_rule == "name" else "neutral"
                        yield from aux_axes({**fills, "profession": term, "name": latin},
                                            gold, name_gender if t.gold_rule == "name" else gender)
                elif "role" in slots:
                    for role, role_gender in bundle.slot_values["role"]:
                        gold = role_gender if t.gold_rule == "role" else "neutral"
                        yield from aux_axes({**fills, "profession": term, "role": role},
                                            gold, role_gender if t.gold_rule == "role" else gender)
                else:
                    gold = gender if t.gold_rule in ("pronoun", "gword") else "neutral"
                    yield from aux_axes({**fills, "profession": term}, gold, gender)
        elif "name" in slots:
            for latin, name_gender, _dev in bundle.names:
                gold = name_gender if t.gold_rule == "name" else "neutral"
                yield from aux_axes({**fills, "name": latin}, gold,
                                    name_gender if t.gold_rule == "name" else gender)
        else:
            gold = gender if t.gold_rule in ("pronoun", "gword") else "neutral"
            yield from aux_axes(fills, gold, gender)


def _instance_id(category: str, template_id: str, meta: dict) -> str:
    digest = hashlib.sha1(
        json.dumps(meta, ensure_ascii=False, sort_keys=True).encode("utf-8")
    ).hexdigest()[:10]
    return f"{category}:{template_id}:{digest}"


def generate_benchmark(
    config: dict[str, int] | None,
    bundle: ResourceBundle,
    seed: int = 0,
) -> BenchmarkSet:
    """Generate the benchmark; identical (config, resources, seed) inputs
    produce byte-identical serialized output."""
    config = dict(DEFAULT_CATEGORY_COUNTS if config is None else config)
    unknown = set(config) - set(CATEGORY_ORDER)
    if unknown:
        raise GenerationError(f"unknown categories in config: {sorted(unknown)}")

    by_category: dict[str, list[Template]] = {}
    for t in bundle.templates:
        by_category.setdefault(t.category, []).append(t)

    instances: list[BenchmarkInstance] = []
    counts: dict[str, int] = {}
    for category in CATEGORY_ORDER:
        count = config.get(category, 0)
        counts[category] = count
        if count == 0:
            continue
        pool: list[tuple[str, str, dict]] = []
        seen: set[str] = set()
        for t in by_category.get(category, []):
            for surface, gold, meta in _expand_template(t, bundle):
                if surface in seen:  # no duplicate surfaces within a category
                    continue
                seen.add(surface)
                pool.append((surface, gold, {**meta, "template": t.template_id}))
        rng = random.Random(f"{seed}:{category}")
        if category in TARGET_CATEGORIES:
            if count % 2:
                raise GenerationError(
                    f"{category}: count {count} cannot be balanced 50/50"
                )
            half = count // 2
            chosen = []
            for gender in ("female", "male"):
                sub = [row for row in pool if row[1] == gender]
                if len(sub) < half:
                    raise GenerationError(
                        f"{category}: need {half} {gender} rows, template space "
                        f"only provides {len(sub)}"
                    )
                rng.shuffle(sub)
                chosen.extend(sub[:half])
            rng.shuffle(chosen)
        else:
            if len(pool) < count:
                raise GenerationError(
                    f"{category}: need {count} rows, template space only provides {len(pool)}"
                )
            rng.shuffle(pool)
            chosen = pool[:count]
        for surface, gold, meta in chosen:
            instances.append(
                BenchmarkInstance(
                    id=_instance_id(category, meta["template"], meta),
                    category=category,
                    source_en=surface,
                    gold=gold,
                    meta=meta,
                )
            )

    ids = [inst.id for inst in instances]
    if len(ids) != len(set(ids)):
        raise GenerationError("instance id collision")
    return BenchmarkSet(instances, seed, counts)


def select_target_subset(bench: BenchmarkSet) -> BenchmarkSet:
    """Target rows: the three target categories with a male/female gold cue."""
    subset = [
        inst
        for inst in bench.instances
        if inst.category in TARGET_CATEGORIES and inst.gold in ("male", "female")
    ]
    counts: dict[str, int] = {}
    for inst in subset:
        counts[inst.category] = counts.get(inst.category, 0) + 1
    return BenchmarkSet(subset, bench.seed, counts)


def write_benchmark(bench: BenchmarkSet, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for inst in bench.instances:
            fh.write(inst.to_json() + "\n")


def read_benchmark(path: Path) -> BenchmarkSet:
    instances = []
    counts: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            instances.append(
                BenchmarkInstance(rec["id"], rec["category"], rec["source_en"],
                                  rec["gold"], rec.get("meta", {}))
            )
            counts[rec["category"]] = counts.get(rec["category"], 0) + 1
    return BenchmarkSet(instances, seed=-1, counts=counts)


def load_config(path: Path) -> dict[str, int]:
    with open(path, encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict) or "categories" not in data:
        raise GenerationError(f"{path}: expected a mapping with a 'categories' key")
    return {str(k): int(v) for k, v in data["categories"].items()}
