"""English source-cue extraction, phenomenon routing, and the
rule-based Hindi gender-preservation classifier.

The classifier applies a fixed branch order over detector output:

    lexical gender words -> gendered names -> singular verb morphology
    -> ergative/honorific neutralization -> fallback (default: neutralized)

Branches are mutually exclusive; exactly one ``rule_path`` fires per call.
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Protocol

from .hindi_text import (
    DATA_DIR,
    Lexicons,
    default_lexicons,
    detect_ergative,
    detect_gendered_morphology,
    detect_gendered_names,
    detect_honorific,
    detect_lexical_gender,
    tokenize,
)

MALE_PRONOUNS = {"he", "him", "his", "himself"}
FEMALE_PRONOUNS = {"she", "her", "hers", "herself"}
MALE_WORDS = {"man", "boy", "gentleman", "father", "brother", "uncle", "son",
              "grandfather", "husband"}
FEMALE_WORDS = {"woman", "girl", "lady", "mother", "sister", "aunt", "daughter",
                "grandmother", "wife"}

# Intra-sentence clause boundaries; sentence boundaries are . ? ! and danda.
CLAUSE_CONJUNCTIONS = {"because", "so", "that", "when", "while"}

_EN_WORD_RE = re.compile(r"[A-Za-z']+")
_SENT_SPLIT_RE = re.compile(r"[.?!।]+")


@dataclass(frozen=True)
class SourceCue:
    gender: str  # male | female | neutral | ambiguous
    evidence: list[tuple[str, str]]  # (token, pronoun|gender_word|name)
    clause_index: int
    multi_clause: bool


@dataclass(frozen=True)
class PreservationVerdict:
    state: str  # preserved | neutralized | wrong_gender
    rule_path: str
    used_fallback: bool = False
    oracle_failed: bool = False


class FallbackOracle(Protocol):
    """Judgment function used when no classifier rule fires.

    Implementations must be deterministic for identical inputs and config.
    """

    def judge(self, source: str, hindi: str, expected_gender: str) -> PreservationVerdict: ...


@dataclass(frozen=True)
class _Clause:
    tokens: list[str]
    sentence_index: int
    dependent: bool  # introduced by a subordinating conjunction


@lru_cache(maxsize=1)
def _english_name_genders() -> dict[str, str]:
    out = {}
    for raw in (DATA_DIR / "names.tsv").read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        latin, gender, _dev = line.split("\t")
        out[latin.lower()] = gender
    return out


def _split_clauses(english: str) -> list[_Clause]:
    clauses = []
    for s_idx, sentence in enumerate(_SENT_SPLIT_RE.split(english)):
        words = [w.lower() for w in _EN_WORD_RE.findall(sentence)]
        if not words:
            continue
        current: list[str] = []
        dependent = False
        for w in words:
            if w in CLAUSE_CONJUNCTIONS and current:
                clauses.append(_Clause(current, s_idx, dependent))
                current = []
                dependent = True
            current.append(w)
        if current:
            clauses.append(_Clause(current, s_idx, dependent))
    return clauses


def _token_evidence(word: str, names: dict[str, str]) -> tuple[str, str] | None:
    """Return (gender, evidence-type) for a single lowercase English token."""
    if word in MALE_PRONOUNS:
        return "male", "pronoun"
    if word in FEMALE_PRONOUNS:
        return "female", "pronoun"
    if word in MALE_WORDS:
        return "male", "gender_word"
    if word in FEMALE_WORDS:
        return "female", "gender_word"
    if word in names:
        return names[word], "name"
    return None


def extract_source_cue(english: str) -> SourceCue:
    """Extract the expected gender of the English source referent."""
    names = _english_name_genders()
    clauses = _split_clauses(english)
    evidence: list[tuple[str, str]] = []
    genders: set[str] = set()
    clause_index = 0
    seen_first = False
    for c_idx, clause in enumerate(clauses):
        for w in clause.tokens:
            hit = _token_evidence(w, names)
            if hit is None:
                continue
            gender, ev_type = hit
            evidence.append((w, ev_type))
            genders.add(gender)
            if not seen_first:
                clause_index = c_idx
                seen_first = True
    if not genders:
        gender = "neutral"
    elif len(genders) > 1:
        # Conflicting evidence with no referent structure to resolve it.
        gender = "ambiguous"
    else:
        gender = genders.pop()
    return SourceCue(gender, evidence, clause_index, multi_clause=len(clauses) > 1)


def detect_phenomenon(english: str, cue: SourceCue, professions: set[str]) -> str:
    """Route a source sentence to explicit_gender / late_binding /
    winograd_coref / other using only source-side cues."""
    clauses = _split_clauses(english)
    words = [w for c in clauses for w in c.tokens]
    distinct_professions = {w for w in words if w in professions}
    names = _english_name_genders()

    pronoun_in_dependent = False
    first_evidence_sentence: int | None = None
    for clause in clauses:
        for w in clause.tokens:
            hit = _token_evidence(w, names)
            if hit is None:
                continue
            if first_evidence_sentence is None:
                first_evidence_sentence = clause.sentence_index
            if hit[1] == "pronoun" and clause.dependent:
                pronoun_in_dependent = True

    n_sentences = 1 + max((c.sentence_index for c in clauses), default=0)
    if len(distinct_professions) >= 2 and pronoun_in_dependent:
        return "winograd_coref"
    if n_sentences >= 2 and first_evidence_sentence is not None and first_evidence_sentence >= 1:
        return "late_binding"
    if cue.gender in ("male", "female"):
        return "explicit_gender"
    return "other"


def _resolve(signals, cue_gender: str, path: str) -> PreservationVerdict | None:
    """Shared match/conflict logic for a detector branch; None if no signal."""
    if not signals:
        return None
    matches = [s for s in signals if s.gender == cue_gender]
    conflicts = [s for s in signals if s.gender not in (cue_gender, "none")]
    if conflicts and not matches:
        return PreservationVerdict("wrong_gender", path)
    if matches and conflicts:
        # Mixed evidence within one branch: conservative, do not credit.
        return PreservationVerdict("wrong_gender", f"{path}_conflict_resolved")
    return PreservationVerdict("preserved", path)


def classify_preservation(
    cue: SourceCue,
    hindi: str,
    lex: Lexicons | None = None,
    oracle: FallbackOracle | None = None,
    source: str = "",
) -> PreservationVerdict:
    """Classify one Hindi output as preserved / neutralized / wrong_gender.

    Requires ``cue.gender`` in {male, female}; neutral/ambiguous sources are
    scored by the reporting convention in :mod:`fidelity.metrics`.
    """
    if cue.gender not in ("male", "female"):
        raise ValueError(f"classifier expects a male/female cue, got {cue.gender!r}")
    lex = lex or default_lexicons()
    tokens = tokenize(hindi)

    morph = detect_gendered_morphology(tokens, lex)

    def flag_morph_conflict(verdict: PreservationVerdict) -> PreservationVerdict:
        # Name/lexical evidence outranks morphology; flag overridden conflicts.
        if verdict.state == "preserved" and any(
            s.gender not in (cue.gender, "none") for s in morph
        ):
            return PreservationVerdict(verdict.state, verdict.rule_path + "+conflict_resolved")
        return verdict

    verdict = _resolve(detect_lexical_gender(tokens, lex), cue.gender, "lexical")
    if verdict is not None:
        return flag_morph_conflict(verdict)
    verdict = _resolve(detect_gendered_names(tokens, lex), cue.gender, "name")
    if verdict is not None:
        return flag_morph_conflict(verdict)
    verdict = _resolve(morph, cue.gender, "morphology")
    if verdict is not None:
        return verdict
    if detect_ergative(tokens, lex) or detect_honorific(tokens, lex):
        return PreservationVerdict("neutralized", "neutralizing_construction")
    if oracle is not None:
        try:
            judged = oracle.judge(source, hindi, cue.gender)
            return PreservationVerdict(judged.state, "fallback", used_fallback=True)
        except Exception:
            return PreservationVerdict("neutralized", "default", oracle_failed=True)
    return PreservationVerdict("neutralized", "default")


def agreement_report(
    rows: list[tuple[str, str, str]],
    lex: Lexicons | None = None,
) -> dict:
    """Percent agreement of the classifier against a labeled file.

    ``rows`` are (source_en, hindi, human_label) triples.
    """
    lex = lex or default_lexicons()
    per_label: dict[str, list[int]] = {}
    agree = 0
    for source, hindi, label in rows:
        cue = extract_source_cue(source)
        verdict = classify_preservation(cue, hindi, lex)
        hit = int(verdict.state == label)
        agree += hit
        per_label.setdefault(label, []).append(hit)
    n = len(rows)
    return {
        "n": n,
        "percent_agreement": 100.0 * agree / n if n else None,
        "per_label": {
            label: {"n": len(hits), "percent": 100.0 * sum(hits) / len(hits)}
            for label, hits in sorted(per_label.items())
        },
    }
