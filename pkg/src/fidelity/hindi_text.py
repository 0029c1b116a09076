"""Devanagari-aware tokenization and low-level gender-signal detectors.

Everything here is a pure function of (text, Lexicons). Lexicon content is
data (``data/lexicons.tsv``); the only rules hard-coded in this module are
the feminine/masculine singular suffix fallbacks for verb morphology.
"""
from __future__ import annotations

import unicodedata
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
import re

DATA_DIR = Path(__file__).parent / "data"

# Devanagari block minus the dandas (U+0964, U+0965), which are punctuation.
_WORD_RE = re.compile(r"[ऀ-ॣ०-ॿ]+|[A-Za-z]+|[0-9]+|\S")

# Forms like किया/की/किए agree with the object, not the subject, and are
# deliberately absent from the verb lexicon: they carry no recoverable
# subject gender. The suffix fallbacks below cover productive -ta/-ti forms.
FEM_SUFFIX = "ती"
MASC_SUFFIX = "ता"


@dataclass(frozen=True)
class Token:
    surface: str
    span: tuple[int, int]
    script: str  # devanagari | latin | digit | punct | other


@dataclass(frozen=True)
class MorphSignal:
    kind: str  # ergative | honorific | fem_verb | masc_verb | lexical_gender | gendered_name
    gender: str  # male | female | none
    token_index: int


@dataclass
class Lexicons:
    ergative_fused: set[str] = field(default_factory=set)
    honorific_forms: set[str] = field(default_factory=set)
    plural_agreement: set[str] = field(default_factory=set)
    fem_verb_forms: set[str] = field(default_factory=set)
    masc_verb_forms: set[str] = field(default_factory=set)
    gender_words: dict[str, str] = field(default_factory=dict)
    name_genders: dict[str, str] = field(default_factory=dict)
    suffix_exceptions: set[str] = field(default_factory=set)

    def __post_init__(self):
        both = self.fem_verb_forms & self.masc_verb_forms
        if both:
            raise ValueError(f"forms listed as both fem_verb and masc_verb: {sorted(both)}")

    def suffix_skip(self, surface: str) -> bool:
        """Tokens that look verb-like by suffix but are known nouns/names.

        Exceptions match as word endings so compounds (कार्यकर्ता) are
        covered by their head noun (कर्ता).
        """
        return (
            any(surface.endswith(e) for e in self.suffix_exceptions)
            or surface in self.gender_words
            or surface in self.name_genders
        )


def _is_devanagari_char(ch: str) -> bool:
    return 0x0900 <= ord(ch) <= 0x097F and ch not in "।॥"


def _script_of(surface: str) -> str:
    if all(_is_devanagari_char(c) for c in surface):
        return "devanagari"
    if surface.isascii() and surface.isalpha():
        return "latin"
    if surface.isdigit():
        return "digit"
    if all(unicodedata.category(c).startswith(("P", "S")) or c in "।॥" for c in surface):
        return "punct"
    return "other"


def tokenize(text: str) -> list[Token]:
    """Split text into word/digit/punct tokens with codepoint spans."""
    return [
        Token(m.group(), (m.start(), m.end()), _script_of(m.group()))
        for m in _WORD_RE.finditer(text)
    ]


def load_lexicons(lexicon_path: Path, names_path: Path | None = None) -> Lexicons:
    lex = Lexicons()
    kind_targets = {
        "ergative_fused": lex.ergative_fused,
        "honorific": lex.honorific_forms,
        "plural_agreement": lex.plural_agreement,
        "fem_verb": lex.fem_verb_forms,
        "masc_verb": lex.masc_verb_forms,
        "suffix_exception": lex.suffix_exceptions,
    }
    for lineno, raw in enumerate(lexicon_path.read_text(encoding="utf-8").splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 3:
            raise ValueError(f"{lexicon_path}:{lineno}: expected 3 tab-separated fields")
        form, kind, gender = parts
        if kind == "gender_word":
            lex.gender_words[form] = gender
        elif kind in kind_targets:
            kind_targets[kind].add(form)
        else:
            raise ValueError(f"{lexicon_path}:{lineno}: unknown kind {kind!r}")
    if names_path is not None:
        for lineno, raw in enumerate(names_path.read_text(encoding="utf-8").splitlines(), 1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            latin, gender, devanagari = line.split("\t")
            lex.name_genders[devanagari] = gender
    lex.__post_init__()
    return lex


@lru_cache(maxsize=1)
def default_lexicons() -> Lexicons:
    return load_lexicons(DATA_DIR / "lexicons.tsv", DATA_DIR / "names.tsv")


def detect_ergative(tokens: list[Token], lex: Lexicons | None = None) -> list[MorphSignal]:
    """Standalone ने and fused pronoun+ने forms. Never fires inside a longer word."""
    lex = lex or default_lexicons()
    return [
        MorphSignal("ergative", "none", i)
        for i, t in enumerate(tokens)
        if t.surface == "ने" or t.surface in lex.ergative_fused
    ]


def detect_honorific(tokens: list[Token], lex: Lexicons | None = None) -> list[MorphSignal]:
    lex = lex or default_lexicons()
    out = []
    surfaces = [t.surface for t in tokens]
    has_plural_agreement = any(s in lex.plural_agreement for s in surfaces)
    for i, t in enumerate(tokens):
        if t.surface == "आप":
            # आप counts as honorific only alongside plural agreement.
            if has_plural_agreement:
                out.append(MorphSignal("honorific", "none", i))
        elif t.surface in lex.honorific_forms:
            out.append(MorphSignal("honorific", "none", i))
    return out


def detect_gendered_morphology(tokens: list[Token], lex: Lexicons | None = None) -> list[MorphSignal]:
    """Singular gendered verb/adjective forms; form lists beat suffix rules."""
    lex = lex or default_lexicons()
    out = []
    for i, t in enumerate(tokens):
        if t.script != "devanagari":
            continue
        s = t.surface
        if s in lex.fem_verb_forms:
            out.append(MorphSignal("fem_verb", "female", i))
        elif s in lex.masc_verb_forms:
            out.append(MorphSignal("masc_verb", "male", i))
        elif len(s) >= 3 and not lex.suffix_skip(s):
            if s.endswith(FEM_SUFFIX):
                out.append(MorphSignal("fem_verb", "female", i))
            elif s.endswith(MASC_SUFFIX):
                out.append(MorphSignal("masc_verb", "male", i))
    return out


def detect_lexical_gender(tokens: list[Token], lex: Lexicons | None = None) -> list[MorphSignal]:
    lex = lex or default_lexicons()
    return [
        MorphSignal("lexical_gender", lex.gender_words[t.surface], i)
        for i, t in enumerate(tokens)
        if t.surface in lex.gender_words
    ]


def detect_gendered_names(tokens: list[Token], lex: Lexicons | None = None) -> list[MorphSignal]:
    lex = lex or default_lexicons()
    return [
        MorphSignal("gendered_name", lex.name_genders[t.surface], i)
        for i, t in enumerate(tokens)
        if t.surface in lex.name_genders
    ]


def lookup_name_gender(surface: str, lex: Lexicons | None = None) -> str | None:
    lex = lex or default_lexicons()
    return lex.name_genders.get(surface)


def has_neutralizing_construction(text: str, lex: Lexicons | None = None) -> bool:
    """True iff the text contains an ergative or honorific construction."""
    tokens = tokenize(text)
    return bool(detect_ergative(tokens, lex) or detect_honorific(tokens, lex))
