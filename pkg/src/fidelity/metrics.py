"""Accuracy tables, ergative rate, McNemar paired test, bootstrap
confidence intervals, and the ablation/frontier report builders.

Scoring convention: a target-subset row is correct iff its verdict is
``preserved``; a non-target row is correct iff the classifier found no
wrong-gender signal. The convention is recorded in every report.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .benchgen import BenchmarkSet, TARGET_CATEGORIES
from .hindi_text import Lexicons, detect_ergative, tokenize

SCORING_NOTE = (
    "target rows correct iff preserved; non-target rows correct iff no "
    "wrong-gender signal"
)

# Exact binomial p-values underflow for large discordant counts; values
# below this floor are reported as the floor with an underflow marker.
P_FLOOR = 1e-300


@dataclass
class CategoryAccuracy:
    per_category: dict[str, dict]  # name -> {correct, total, percent}
    target_acc: float
    full_acc: float
    correct_by_id: dict[str, bool] = field(default_factory=dict)


@dataclass
class PairedOutcome:
    b: int  # A correct, B wrong
    c: int  # A wrong, B correct
    n00: int = 0
    n11: int = 0


def _is_target(inst) -> bool:
    return inst.category in TARGET_CATEGORIES and inst.gold in ("male", "female")


def row_correct(inst, state: str) -> bool:
    if _is_target(inst):
        return state == "preserved"
    return state != "wrong_gender"


def score_outputs(verdicts: dict[str, str], bench: BenchmarkSet) -> CategoryAccuracy:
    """Join verdict states to benchmark rows by id and tabulate accuracy."""
    if not verdicts:
        raise ValueError("no verdict records to score")
    per_category: dict[str, list[bool]] = {}
    target_hits: list[bool] = []
    all_hits: list[bool] = []
    correct_by_id: dict[str, bool] = {}
    for inst in bench.instances:
        state = verdicts.get(inst.id)
        if state is None:
            continue
        ok = row_correct(inst, state)
        per_category.setdefault(inst.category, []).append(ok)
        all_hits.append(ok)
        correct_by_id[inst.id] = ok
        if _is_target(inst):
            target_hits.append(ok)
    if not all_hits:
        raise ValueError("verdict ids do not match any benchmark row")
    return CategoryAccuracy(
        per_category={
            cat: {
                "correct": sum(hits),
                "total": len(hits),
                "percent": 100.0 * sum(hits) / len(hits),
            }
            for cat, hits in sorted(per_category.items())
        },
        target_acc=100.0 * sum(target_hits) / len(target_hits) if target_hits else float("nan"),
        full_acc=100.0 * sum(all_hits) / len(all_hits),
        correct_by_id=correct_by_id,
    )


def ergative_rate(outputs: list[str], lex: Lexicons | None = None) -> float:
    """Percent of outputs containing the ergative marker (standalone or fused)."""
    if not outputs:
        raise ValueError("ergative_rate over empty corpus")
    n = sum(1 for y in outputs if detect_ergative(tokenize(y), lex))
    return 100.0 * n / len(outputs)


def paired_outcome(correct_a: dict[str, bool], correct_b: dict[str, bool]) -> PairedOutcome:
    ids = sorted(set(correct_a) & set(correct_b))
    b = sum(1 for i in ids if correct_a[i] and not correct_b[i])
    c = sum(1 for i in ids if not correct_a[i] and correct_b[i])
    n11 = sum(1 for i in ids if correct_a[i] and correct_b[i])
    n00 = sum(1 for i in ids if not correct_a[i] and not correct_b[i])
    return PairedOutcome(b=b, c=c, n00=n00, n11=n11)


def mcnemar(outcome: PairedOutcome) -> dict:
    """Continuity-corrected chi-square plus the exact two-sided binomial.

    The exact test is authoritative for small discordant counts.
    """
    b, c = outcome.b, outcome.c
    n = b + c
    if n == 0:
        return {"chi2_cc": 0.0, "p_chi2": 1.0, "p_exact": 1.0,
                "b": b, "c": c, "note": "no discordant pairs"}
    chi2_cc = (max(abs(b - c) - 1, 0)) ** 2 / n
    p_chi2 = float(stats.chi2.sf(chi2_cc, df=1))
    # Two-sided exact binomial via log-space summation; robust to underflow.
    k = min(b, c)
    log_terms = [
        stats.binom.logpmf(i, n, 0.5) for i in range(k + 1)
    ]
    log_tail = _logsumexp(log_terms)
    log_p = math.log(2) + log_tail
    underflow = log_p < math.log(P_FLOOR)
    p_exact = P_FLOOR if underflow else min(1.0, math.exp(log_p))
    result = {"chi2_cc": chi2_cc, "p_chi2": p_chi2, "p_exact": p_exact, "b": b, "c": c}
    if underflow:
        result["p_exact_log10"] = log_p / math.log(10)
        result["note"] = "exact p underflows; floored at 1e-300"
    return result


def _logsumexp(values: list[float]) -> float:
    m = max(values)
    return m + math.log(sum(math.exp(v - m) for v in values))


def bootstrap_ci(
    values,
    resamples: int = 10_000,
    level: float = 0.95,
    seed: int = 0,
) -> tuple[float, float]:
    """Seeded percentile bootstrap CI for the mean of ``values``."""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0:
        raise ValueError("bootstrap_ci over empty sample")
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, arr.size, size=(resamples, arr.size))
    means = arr[idx].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(means, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


def format_ci(value: float, lo: float, hi: float, digits: int = 1) -> str:
    return f"{value:.{digits}f} [{lo:.{digits}f}, {hi:.{digits}f}]"


def frontier_report(summaries: dict[str, dict]) -> list[dict]:
    """Preservation/fluency frontier points relative to the baseline.

    ``summaries`` maps system name -> {preservation_pct, mean_fluency};
    must contain a 'baseline' entry.
    """
    if "baseline" not in summaries:
        raise ValueError("frontier_report requires a 'baseline' summary")
    base = summaries["baseline"]
    points = []
    for name, summary in summaries.items():
        if name == "baseline":
            continue
        points.append({
            "system": name,
            "delta_preservation_pp": round(
                summary["preservation_pct"] - base["preservation_pct"], 1
            ),
            "delta_fluency": round(summary["mean_fluency"] - base["mean_fluency"], 2),
        })
    return points


def ablation_table(runs: dict[tuple[bool, bool], CategoryAccuracy]) -> dict:
    """2x2 factorial table keyed by (lexicalize, phenomenon_prompts)."""
    expected = {(False, False), (True, False), (False, True), (True, True)}
    if set(runs) != expected:
        raise ValueError("ablation_table requires exactly the four 2x2 configurations")
    rows = []
    for (lex, phen) in [(False, False), (True, False), (False, True), (True, True)]:
        acc = runs[(lex, phen)]
        rows.append({
            "lexicalize": "Yes" if lex else "No",
            "phenomenon_prompts": "Yes" if phen else "No",
            "explicit_gender": round(acc.per_category.get("explicit_gender", {}).get("percent", float("nan")), 1),
            "late_binding": round(acc.per_category.get("late_binding", {}).get("percent", float("nan")), 1),
            "winograd_coref": round(acc.per_category.get("winograd_coref", {}).get("percent", float("nan")), 1),
            "target_acc": round(acc.target_acc, 1),
        })
    return {"rows": rows, "note": SCORING_NOTE}


def render_accuracy_md(acc: CategoryAccuracy, erg: float | None = None) -> str:
    lines = ["| category | correct | total | percent |", "|---|---|---|---|"]
    for cat, row in acc.per_category.items():
        lines.append(f"| {cat} | {row['correct']} | {row['total']} | {row['percent']:.1f} |")
    lines.append("")
    lines.append(f"Target accuracy: {acc.target_acc:.2f}")
    lines.append(f"Full accuracy: {acc.full_acc:.2f}")
    if erg is not None:
        lines.append(f"Ergative rate: {erg:.1f}")
    lines.append(f"Scoring: {SCORING_NOTE}")
    return "\n".join(lines)
