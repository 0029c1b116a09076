"""Candidate reranking: source-aware weighted scoring (SAR) and
phenomenon-routed token-match selection (PAR).

SAR score:  s = lq * q + lg * g - le * e
  q: quality heuristic in [0, 1] (length ratio, repetition, script density)
  g: preservation score mapped from the classifier verdict
  e: 1 if the candidate contains an ergative/honorific construction

PAR routes the prompt and a token-match threshold by detected phenomenon
and falls back to SAR when no candidate reaches the threshold.
"""
from __future__ import annotations

import hashlib
import json
from collections import Counter
from dataclasses import dataclass, field, asdict

from .cue_analysis import SourceCue, classify_preservation, detect_phenomenon, extract_source_cue
from .hindi_text import (
    Lexicons,
    default_lexicons,
    detect_ergative,
    detect_honorific,
    tokenize,
)

# Verdict -> G mapping; neutral/ambiguous sources score a flat 0.5 so that
# gender-agnostic pools rank purely by quality.
G_BY_VERDICT = {"preserved": 1.0, "neutralized": 0.0, "wrong_gender": -1.0}
G_NEUTRAL_SOURCE = 0.5

# Relative tie tolerance keeps argmax stable under score rescaling.
_TIE_RTOL = 1e-9


@dataclass(frozen=True)
class Candidate:
    text: str
    origin: str  # base_system | sampled
    index: int


@dataclass
class ScoreBreakdown:
    q: float
    g: float
    e: float
    s: float
    m: int


@dataclass
class RerankConfig:
    lambda_q: float = 0.35
    lambda_g: float = 1.0
    lambda_e: float = 0.35
    k: int = 5
    lexicalize: bool = True
    phenomenon_prompts: bool = True
    theta_explicit: int = 1
    theta_multiclause: int = 2

    def digest(self) -> str:
        payload = json.dumps(asdict(self), sort_keys=True)
        return hashlib.sha256(payload.encode()).hexdigest()[:12]


@dataclass
class SelectionResult:
    chosen: Candidate
    scores: list[ScoreBreakdown]
    method: str  # sar | par | par_fallback_sar


@dataclass(frozen=True)
class PromptSpec:
    instruction: str
    phenomenon: str


EXPLICIT_PROMPT = (
    "Translate the following English sentence into natural Hindi. "
    "The English source explicitly marks the relevant person as {gender}. "
    "Preserve this gender cue so that a Hindi reader can recover it. "
    "Output only the Hindi translation."
)
COREF_PROMPT = (
    "Translate the following English sentence into natural Hindi. "
    "Resolve the pronoun/coreference relation in the English source before "
    "translating. Preserve the gender of the referred person in Hindi if the "
    "English source explicitly provides it. Output only the Hindi translation."
)
GENERIC_PROMPT = (
    "Translate the following English sentence into natural Hindi. "
    "Output only the Hindi translation."
)
LEXICALIZE_SUFFIX = (
    " You may add a minimal lexical gender marker such as पुरुष or महिला "
    "if grammatical agreement alone would erase the gender cue."
)


def quality_score(x: str, y: str) -> float:
    """Reference-free quality heuristic in [0, 1]."""
    if not x or not y:
        raise ValueError("quality_score requires non-empty source and candidate")
    nx = sum(1 for c in x if not c.isspace())
    ny = sum(1 for c in y if not c.isspace())
    r = ny / nx

    if r <= 0.2 or r >= 4.0:
        q_len = 0.0
    elif r < 0.6:
        q_len = (r - 0.2) / 0.4
    elif r <= 2.5:
        q_len = 1.0
    else:
        q_len = (4.0 - r) / 1.5

    words = y.split()
    trigrams = Counter(zip(words, words[1:], words[2:]))
    repeats = sum(c - 1 for c in trigrams.values() if c > 1)
    q_rep = 1.0 - min(1.0, repeats / 4.0)

    chars = [c for c in y if not c.isspace()]
    ok = sum(
        1
        for c in chars
        if 0x0900 <= ord(c) <= 0x097F or c.isdigit() or not c.isalpha()
    )
    q_script = ok / len(chars) if chars else 0.0

    return q_len * q_rep * q_script


def gender_score(cue: SourceCue, y: str, lex: Lexicons | None = None) -> float:
    if cue.gender not in ("male", "female"):
        return G_NEUTRAL_SOURCE
    verdict = classify_preservation(cue, y, lex)
    return G_BY_VERDICT[verdict.state]


def ergative_penalty(y: str, lex: Lexicons | None = None) -> int:
    """1 iff the candidate contains an ergative or honorific construction."""
    if not y:
        return 0
    tokens = tokenize(y)
    return int(bool(detect_ergative(tokens, lex) or detect_honorific(tokens, lex)))


def _gender_token_sets(lex: Lexicons) -> dict[str, set[str]]:
    female = {w for w, g in lex.gender_words.items() if g == "female"} | lex.fem_verb_forms
    male = {w for w, g in lex.gender_words.items() if g == "male"} | lex.masc_verb_forms
    return {"female": female, "male": male}


def token_match_score(y: str, cue: SourceCue, lex: Lexicons | None = None) -> int:
    """Matching-set hits minus opposite-set hits over distinct tokens."""
    if cue.gender not in ("male", "female"):
        return 0
    lex = lex or default_lexicons()
    sets = _gender_token_sets(lex)
    opposite = "male" if cue.gender == "female" else "female"
    tokens = {t.surface for t in tokenize(y)}
    return len(tokens & sets[cue.gender]) - len(tokens & sets[opposite])


def _breakdowns(
    x: str,
    cue: SourceCue,
    pool: list[Candidate],
    config: RerankConfig,
    lex: Lexicons,
) -> list[ScoreBreakdown]:
    out = []
    for cand in pool:
        q = quality_score(x, cand.text)
        g = gender_score(cue, cand.text, lex)
        e = float(ergative_penalty(cand.text, lex))
        s = config.lambda_q * q + config.lambda_g * g - config.lambda_e * e
        m = token_match_score(cand.text, cue, lex)
        out.append(ScoreBreakdown(q=q, g=g, e=e, s=s, m=m))
    return out


def _argmax_lowest_index(values: list[float]) -> int:
    best_i = 0
    for i, v in enumerate(values[1:], 1):
        tol = _TIE_RTOL * max(1.0, abs(values[best_i]))
        if v > values[best_i] + tol:
            best_i = i
    return best_i


def sar_select(
    x: str,
    cue: SourceCue,
    pool: list[Candidate],
    config: RerankConfig | None = None,
    lex: Lexicons | None = None,
) -> SelectionResult:
    """Pick the candidate with the highest weighted score; ties go to the
    lowest index, which favors the base system in repair mode."""
    if not pool:
        raise ValueError("sar_select: empty candidate pool")
    config = config or RerankConfig()
    lex = lex or default_lexicons()
    scores = _breakdowns(x, cue, pool, config, lex)
    best = _argmax_lowest_index([sb.s for sb in scores])
    return SelectionResult(pool[best], scores, "sar")


def par_prompt(phenomenon: str, cue: SourceCue, x: str, config: RerankConfig | None = None) -> PromptSpec:
    config = config or RerankConfig()
    if not config.phenomenon_prompts or phenomenon == "other":
        text = GENERIC_PROMPT
    elif phenomenon == "winograd_coref":
        text = COREF_PROMPT
    else:  # explicit_gender and late_binding share the explicit template
        text = EXPLICIT_PROMPT.format(gender=cue.gender)
    if config.lexicalize and cue.gender in ("male", "female"):
        text += LEXICALIZE_SUFFIX
    return PromptSpec(text, phenomenon)


def par_threshold(phenomenon: str, config: RerankConfig) -> int:
    if phenomenon in ("late_binding", "winograd_coref"):
        return config.theta_multiclause
    return config.theta_explicit


def par_select(
    x: str,
    cue: SourceCue,
    phenomenon: str,
    pool: list[Candidate],
    config: RerankConfig | None = None,
    lex: Lexicons | None = None,
) -> SelectionResult:
    """Token-match selection above the routed threshold; SAR fallback below."""
    if not pool:
        raise ValueError("par_select: empty candidate pool")
    config = config or RerankConfig()
    lex = lex or default_lexicons()
    scores = _breakdowns(x, cue, pool, config, lex)
    theta = par_threshold(phenomenon, config)
    eligible = [i for i, sb in enumerate(scores) if sb.m >= theta]
    if not eligible:
        fallback = sar_select(x, cue, pool, config, lex)
        return SelectionResult(fallback.chosen, scores, "par_fallback_sar")
    best = eligible[0]
    for i in eligible[1:]:
        if scores[i].m > scores[best].m:
            best = i
        elif scores[i].m == scores[best].m:
            tol = _TIE_RTOL * max(1.0, abs(scores[best].s))
            if scores[i].s > scores[best].s + tol:
                best = i
    return SelectionResult(pool[best], scores, "par")


def run_pipeline(
    instance,
    backend,
    mode: str,
    config: RerankConfig | None = None,
    lex: Lexicons | None = None,
    base_text: str | None = None,
    professions: set[str] | None = None,
) -> dict:
    """Translate-or-rerank one benchmark instance and return an audit record."""
    from .backends import build_pool  # local import avoids a module cycle

    config = config or RerankConfig()
    lex = lex or default_lexicons()
    x = instance.source_en
    cue = extract_source_cue(x)

    def verdict_of(text: str) -> str | None:
        if cue.gender not in ("male", "female"):
            return None
        return classify_preservation(cue, text, lex).state

    if mode == "baseline":
        text = base_text if base_text is not None else backend.translate(GENERIC_PROMPT, x)
        return {
            "id": instance.id,
            "mode": mode,
            "chosen_text": text,
            "method": "baseline",
            "verdict": verdict_of(text),
            "scores": [],
            "config_digest": config.digest(),
        }

    if mode == "sar":
        prompt = GENERIC_PROMPT
        phenomenon = None
    elif mode == "par":
        phenomenon = detect_phenomenon(x, cue, professions or set())
        prompt = par_prompt(phenomenon, cue, x, config).instruction
    else:
        raise ValueError(f"unknown mode {mode!r}")

    candidates = backend.sample_candidates(prompt, x, config.k)
    pool = build_pool(base_text, candidates)
    if mode == "sar":
        result = sar_select(x, cue, pool, config, lex)
    else:
        result = par_select(x, cue, phenomenon, pool, config, lex)
    record = {
        "id": instance.id,
        "mode": mode,
        "chosen_text": result.chosen.text,
        "method": result.method,
        "verdict": verdict_of(result.chosen.text),
        "scores": [asdict(sb) for sb in result.scores],
        "config_digest": config.digest(),
    }
    if len(candidates) < config.k:
        record["warning"] = f"partial pool: {len(candidates)} of {config.k} candidates"
    return record
