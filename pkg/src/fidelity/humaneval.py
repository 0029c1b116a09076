"""Blinded human-evaluation protocol: stratified sampling, per-annotator
A/B blinding, append-only judgment storage, aggregation, and the HTTP
service consumed by the annotation UI.

System identities never leave the server: the items file keeps the
baseline/reranked texts keyed by system, every API payload is A/B only,
and de-blinding happens inside :func:`aggregate`.
"""
from __future__ import annotations

import hashlib
import json
import random
import threading
from dataclasses import dataclass, asdict
from datetime import datetime, timezone
from pathlib import Path

from .benchgen import BenchmarkSet, TARGET_CATEGORIES
from .metrics import bootstrap_ci

FLUENCY_SCALE = [1, 2, 3, 4, 5]
SYSTEMS = ("baseline", "reranked")


class DuplicateJudgmentError(ValueError):
    pass


@dataclass(frozen=True)
class EvalItem:
    item_id: str
    instance_id: str
    category: str
    source_en: str
    baseline_text: str  # internal only, never serialized to annotators
    reranked_text: str


@dataclass(frozen=True)
class Judgment:
    item_id: str
    annotator_id: str
    preserved_a: bool
    preserved_b: bool
    fluency_a: int
    fluency_b: int
    preference: str  # A | B | tie
    timestamp: str = ""

    def validate(self):
        if self.fluency_a not in FLUENCY_SCALE or self.fluency_b not in FLUENCY_SCALE:
            raise ValueError("fluency must be an integer 1-5")
        if self.preference not in ("A", "B", "tie"):
            raise ValueError("preference must be A, B, or tie")


def stratified_sample(target_subset: BenchmarkSet, per_category: int, seed: int = 0) -> list[str]:
    """Sample per_category ids from each target category without replacement."""
    if per_category == 0:
        return []
    by_cat: dict[str, list[str]] = {c: [] for c in TARGET_CATEGORIES}
    for inst in target_subset.instances:
        if inst.category in by_cat:
            by_cat[inst.category].append(inst.id)
    out: list[str] = []
    for cat in TARGET_CATEGORIES:
        ids = by_cat[cat]
        if per_category > len(ids):
            raise ValueError(
                f"category {cat}: requested {per_category} items, only {len(ids)} available"
            )
        rng = random.Random(f"{seed}:{cat}")
        out.extend(rng.sample(ids, per_category))
    return out


def baseline_is_a(item_id: str, annotator_id: str, seed: int) -> bool:
    """Deterministic per-(item, annotator) A/B assignment."""
    h = hashlib.sha256(f"{item_id}|{annotator_id}|{seed}".encode()).digest()
    return h[0] % 2 == 0


def blind_pair(item: EvalItem, annotator_id: str, seed: int) -> dict:
    """Annotator-facing view of one item; contains no system identities."""
    if baseline_is_a(item.item_id, annotator_id, seed):
        a, b = item.baseline_text, item.reranked_text
    else:
        a, b = item.reranked_text, item.baseline_text
    return {
        "item_id": item.item_id,
        "source_en": item.source_en,
        "text_A": a,
        "text_B": b,
        "fluency_scale": FLUENCY_SCALE,
    }


def build_items(
    bench: BenchmarkSet,
    sample_ids: list[str],
    baseline_texts: dict[str, str],
    reranked_texts: dict[str, str],
) -> list[EvalItem]:
    by_id = {inst.id: inst for inst in bench.instances}
    items = []
    for instance_id in sample_ids:
        inst = by_id.get(instance_id)
        if inst is None:
            raise ValueError(f"sampled id {instance_id} not present in benchmark")
        if instance_id not in baseline_texts or instance_id not in reranked_texts:
            raise ValueError(f"missing system output for sampled id {instance_id}")
        items.append(EvalItem(
            item_id=f"he:{instance_id}",
            instance_id=instance_id,
            category=inst.category,
            source_en=inst.source_en,
            baseline_text=baseline_texts[instance_id],
            reranked_text=reranked_texts[instance_id],
        ))
    return items


def write_items(items: list[EvalItem], path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for item in items:
            fh.write(json.dumps(asdict(item), ensure_ascii=False, sort_keys=True) + "\n")


def read_items(path: Path) -> list[EvalItem]:
    items = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                items.append(EvalItem(**json.loads(line)))
    return items


class JudgmentStore:
    """Append-only JSON Lines store with an in-memory index.

    Writes are serialized; a duplicate (item, annotator) pair is rejected,
    so the first submitted judgment wins.
    """

    def __init__(self, path: Path):
        self.path = Path(path)
        self._lock = threading.Lock()
        self._index: dict[tuple[str, str], Judgment] = {}
        if self.path.exists():
            with open(self.path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        j = Judgment(**json.loads(line))
                        self._index[(j.item_id, j.annotator_id)] = j

    def record_judgment(self, judgment: Judgment) -> Judgment:
        judgment.validate()
        if not judgment.timestamp:
            judgment = Judgment(**{**asdict(judgment),
                                   "timestamp": datetime.now(timezone.utc).isoformat()})
        key = (judgment.item_id, judgment.annotator_id)
        with self._lock:
            if key in self._index:
                raise DuplicateJudgmentError(
                    f"judgment already recorded for {judgment.item_id} / {judgment.annotator_id}"
                )
            with open(self.path, "a", encoding="utf-8", newline="\n") as fh:
                fh.write(json.dumps(asdict(judgment), ensure_ascii=False, sort_keys=True) + "\n")
            self._index[key] = judgment
        return judgment

    def judgments(self) -> list[Judgment]:
        with self._lock:
            return list(self._index.values())

    def judged_items(self, annotator_id: str) -> set[str]:
        with self._lock:
            return {item for item, ann in self._index if ann == annotator_id}


def aggregate(
    store: JudgmentStore,
    items: list[EvalItem],
    seed: int,
    ci_resamples: int = 2000,
) -> dict:
    """De-blind and pool judgments; each (item, annotator) pair counts once."""
    by_item = {item.item_id: item for item in items}
    per_system = {s: {"preserved": [], "fluency": []} for s in SYSTEMS}
    per_category: dict[str, dict[str, dict[str, list]]] = {}
    preference = {"baseline": 0, "reranked": 0, "tie": 0}

    for j in store.judgments():
        item = by_item.get(j.item_id)
        if item is None:
            continue
        if baseline_is_a(j.item_id, j.annotator_id, seed):
            mapping = {"baseline": ("a", j.preserved_a, j.fluency_a),
                       "reranked": ("b", j.preserved_b, j.fluency_b)}
            pref_system = {"A": "baseline", "B": "reranked", "tie": "tie"}[j.preference]
        else:
            mapping = {"baseline": ("b", j.preserved_b, j.fluency_b),
                       "reranked": ("a", j.preserved_a, j.fluency_a)}
            pref_system = {"A": "reranked", "B": "baseline", "tie": "tie"}[j.preference]
        preference[pref_system] += 1
        cat = per_category.setdefault(
            item.category, {s: {"preserved": [], "fluency": []} for s in SYSTEMS}
        )
        for system, (_side, preserved, fluency) in mapping.items():
            per_system[system]["preserved"].append(int(preserved))
            per_system[system]["fluency"].append(fluency)
            cat[system]["preserved"].append(int(preserved))
            cat[system]["fluency"].append(fluency)

    n = sum(preference.values())
    non_tie = preference["baseline"] + preference["reranked"]

    def system_summary(data, with_ci: bool):
        if not data["preserved"]:
            return {"preservation_pct": None, "mean_fluency": None, "n": 0}
        pres = 100.0 * sum(data["preserved"]) / len(data["preserved"])
        flu = sum(data["fluency"]) / len(data["fluency"])
        out = {"preservation_pct": pres, "mean_fluency": flu, "n": len(data["preserved"])}
        if with_ci and len(data["preserved"]) > 1:
            lo, hi = bootstrap_ci([100.0 * v for v in data["preserved"]],
                                  resamples=ci_resamples, seed=seed)
            out["preservation_ci"] = [lo, hi]
            lo, hi = bootstrap_ci(data["fluency"], resamples=ci_resamples, seed=seed + 1)
            out["fluency_ci"] = [lo, hi]
        return out

    return {
        "n_judgments": n,
        "systems": {s: system_summary(per_system[s], with_ci=True) for s in SYSTEMS},
        "preference": {
            "baseline": preference["baseline"],
            "reranked": preference["reranked"],
            "tie": preference["tie"],
            "baseline_pct": 100.0 * preference["baseline"] / n if n else None,
            "reranked_pct": 100.0 * preference["reranked"] / n if n else None,
            "non_tie_reranked_rate": (100.0 * preference["reranked"] / non_tie)
            if non_tie else None,
        },
        "per_category": {
            cat: {s: system_summary(data[s], with_ci=False) for s in SYSTEMS}
            for cat, data in sorted(per_category.items())
        },
    }


# --- HTTP service -----------------------------------------------------------

from pydantic import BaseModel


class JudgmentBody(BaseModel):
    item_id: str
    annotator_id: str
    preserved_a: bool
    preserved_b: bool
    fluency_a: int
    fluency_b: int
    preference: str


def create_app(
    items: list[EvalItem],
    store: JudgmentStore,
    annotators: list[str],
    seed: int,
    allow_partial: bool = False,
    ui_dir: Path | None = None,
):
    """FastAPI app implementing the annotation API (plus static UI files)."""
    from fastapi import FastAPI, HTTPException
    from fastapi.responses import JSONResponse

    by_id = {item.item_id: item for item in items}
    order = [item.item_id for item in items]

    app = FastAPI(title="annotation service")

    def _check_annotator(annotator: str):
        if annotator not in annotators:
            raise HTTPException(status_code=404, detail="unknown annotator")

    @app.get("/api/session")
    def session(annotator: str):
        _check_annotator(annotator)
        done = store.judged_items(annotator)
        pending = [i for i in order if i not in done]
        return {
            "total": len(order),
            "completed": len(order) - len(pending),
            "next_item": pending[0] if pending else None,
        }

    @app.get("/api/item/{item_id}")
    def get_item(item_id: str, annotator: str):
        _check_annotator(annotator)
        item = by_id.get(item_id)
        if item is None:
            raise HTTPException(status_code=404, detail="unknown item")
        return blind_pair(item, annotator, seed)

    @app.post("/api/judgment", status_code=201)
    def post_judgment(body: JudgmentBody):
        _check_annotator(body.annotator_id)
        if body.item_id not in by_id:
            raise HTTPException(status_code=404, detail="unknown item")
        try:
            judgment = Judgment(
                item_id=body.item_id,
                annotator_id=body.annotator_id,
                preserved_a=body.preserved_a,
                preserved_b=body.preserved_b,
                fluency_a=body.fluency_a,
                fluency_b=body.fluency_b,
                preference=body.preference,
            )
            store.record_judgment(judgment)
        except DuplicateJudgmentError as err:
            raise HTTPException(status_code=409, detail=str(err))
        except ValueError as err:
            raise HTTPException(status_code=422, detail=str(err))
        return {"status": "recorded"}

    @app.get("/api/results")
    def results():
        expected = len(order) * len(annotators)
        have = len(store.judgments())
        if have < expected and not allow_partial:
            return JSONResponse(
                status_code=409,
                content={"detail": f"partial results ({have}/{expected} judgments); "
                                   "start the server with --allow-partial to aggregate"},
            )
        return aggregate(store, items, seed)

    if ui_dir is not None and Path(ui_dir).exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app
