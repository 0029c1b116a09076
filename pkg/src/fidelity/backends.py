"""Translation backends: OpenAI-style chat client, generic MT HTTP client,
and a deterministic mock for offline runs.

The mock is the workhorse for tests and the ablation harness: given a seed
it produces candidate pools whose properties (ergative vs. gendered
morphology vs. lexical marker) depend on the prompt style and the source
phenomenon, via a tunable success-probability table.
"""
from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import requests

from .rerank import Candidate


class BackendError(RuntimeError):
    pass


@dataclass
class BackendSpec:
    kind: str  # chat_llm | mt_api | mock
    endpoint: str = ""
    model_name: str = ""
    auth_env: str = ""
    temperature: float = 0.7
    k: int = 5
    max_in_flight: int = 4
    retries: int = 3
    timeout: float = 30.0
    seed: int = 0
    script_path: str = ""

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if self.kind == "mock" and self.endpoint:
            raise ValueError("mock backend takes no endpoint")

    @classmethod
    def parse(cls, text: str) -> "BackendSpec":
        """Parse a CLI backend spec: 'mock', 'mock:seed=7', or
        'chat_llm:endpoint=...,model=...'."""
        kind, _, rest = text.partition(":")
        kwargs: dict = {}
        if rest:
            for part in rest.split(","):
                key, _, value = part.partition("=")
                key = {"model": "model_name", "auth": "auth_env", "script": "script_path"}.get(key, key)
                if key in ("k", "max_in_flight", "retries", "seed"):
                    kwargs[key] = int(value)
                elif key in ("temperature", "timeout"):
                    kwargs[key] = float(value)
                else:
                    kwargs[key] = value
        return cls(kind=kind, **kwargs)


def build_pool(base: str | None, candidates: list[str]) -> list[Candidate]:
    """Base system first (index 0), sampled candidates after, exact
    duplicates collapsed keeping the lowest index."""
    pool: list[Candidate] = []
    seen: set[str] = set()
    if base is not None:
        pool.append(Candidate(base, "base_system", 0))
        seen.add(base)
    for text in candidates:
        if text in seen:
            continue
        seen.add(text)
        pool.append(Candidate(text, "sampled", len(pool)))
    return pool


def _digest(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()[:16]


def _unit_interval(*parts) -> float:
    h = hashlib.sha256(":".join(str(p) for p in parts).encode()).digest()
    return int.from_bytes(h[:8], "big") / 2**64


# --- deterministic mock -----------------------------------------------------

_FILLERS = ["दफ़्तर में", "परियोजना पर", "अस्पताल में", "संस्थान में",
            "पुस्तकालय में", "विभाग में", "कारख़ाने में", "कार्यालय में"]

# Probability that the candidate pool contains a preservation-winning
# candidate, keyed by (source phenomenon, lexicalized prompt, routed prompt).
# Tuned so the 2x2 ablation reproduces the qualitative factorial pattern:
# lexicalization mainly helps explicit rows, routed prompts mainly help
# multi-clause rows, and the combination is strongest overall.
DEFAULT_WIN_PROBS = {
    "explicit_gender": {(False, False): 0.40, (True, False): 0.57,
                        (False, True): 0.24, (True, True): 0.64},
    "late_binding": {(False, False): 0.05, (True, False): 0.04,
                     (False, True): 1.00, (True, True): 0.50},
    "winograd_coref": {(False, False): 0.03, (True, False): 0.06,
                       (False, True): 0.18, (True, True): 0.44},
    "other": {(False, False): 0.10, (True, False): 0.10,
              (False, True): 0.10, (True, True): 0.10},
}

BASELINE_PRESERVE_PROB = 0.10

_MALE_EN = {"he", "him", "his", "himself", "man", "boy"}
_FEMALE_EN = {"she", "her", "hers", "herself", "woman", "girl"}


class MockBackend:
    """Seeded offline backend. Scripted entries win; otherwise candidates
    come from a transformation table with controlled gender properties."""

    kind = "mock"

    def __init__(self, seed: int = 0, script: dict[str, list[str]] | None = None,
                 win_probs: dict | None = None):
        self.seed = seed
        self.script = script or {}
        self.win_probs = win_probs or DEFAULT_WIN_PROBS

    @classmethod
    def from_spec(cls, spec: BackendSpec) -> "MockBackend":
        script = {}
        if spec.script_path:
            script = json.loads(Path(spec.script_path).read_text(encoding="utf-8"))
        return cls(seed=spec.seed, script=script)

    # -- source-side heuristics (the mock only sees the raw strings) --------

    @staticmethod
    def _source_gender(source: str) -> str:
        words = set(re.findall(r"[a-z']+", source.lower()))
        if words & _FEMALE_EN:
            return "female"
        if words & _MALE_EN:
            return "male"
        return "neutral"

    @staticmethod
    def _source_phenomenon(source: str) -> str:
        lower = source.lower()
        sentences = [s for s in re.split(r"[.?!]+", source) if s.strip()]
        words = re.findall(r"[a-z']+", lower)
        pronouns = _MALE_EN | _FEMALE_EN
        if any(c in words for c in ("because", "when", "while")) and sum(
            1 for w in set(words) if w in pronouns
        ):
            # two "the X" noun phrases approximate the two-referent check
            if len(re.findall(r"\bthe [a-z]+", lower)) >= 2:
                return "winograd_coref"
        if len(sentences) >= 2:
            first = set(re.findall(r"[a-z']+", sentences[0].lower()))
            if not (first & pronouns) and (set(words) & pronouns):
                return "late_binding"
        if set(words) & pronouns or set(words) & {"man", "woman", "boy", "girl"}:
            return "explicit_gender"
        return "other"

    @staticmethod
    def _prompt_features(prompt: str) -> tuple[bool, bool]:
        lexicalized = "महिला" in prompt or "पुरुष" in prompt
        routed = "explicitly marks" in prompt or "Resolve the pronoun" in prompt
        return lexicalized, routed

    # -- candidate construction --------------------------------------------

    def _filler(self, *parts) -> str:
        return _FILLERS[int(_unit_interval(self.seed, "filler", *parts) * len(_FILLERS))]

    def _neutral_candidate(self, source: str, variant: int) -> str:
        f = self._filler(source, variant)
        if variant % 3 == 2:
            return f"उन्होंने {f} काम किया।"
        return f"उसने {f} काम पूरा किया।"

    def _winning_candidate(self, source: str, gender: str, lexical: bool, variant: int) -> str:
        f = self._filler(source, "win", variant)
        if gender == "male":
            if lexical:
                return f"वह पुरुष {f} के रूप में काम करता था।"
            return f"वह {f} के रूप में काम करता था।"
        if lexical:
            return f"वह महिला {f} के रूप में काम करती थी।"
        return f"वह {f} के रूप में काम करती थी।"

    def translate(self, prompt: str, source: str) -> str:
        key = f"{_digest(source)}:{_digest(prompt)}"
        if key in self.script:
            return self.script[key][0]
        gender = self._source_gender(source)
        u = _unit_interval(self.seed, "baseline", source)
        if gender in ("male", "female") and u < BASELINE_PRESERVE_PROB:
            return self._winning_candidate(source, gender, False, 0)
        return self._neutral_candidate(source, int(u * 7))

    def sample_candidates(self, prompt: str, source: str, k: int) -> list[str]:
        key = f"{_digest(source)}:{_digest(prompt)}"
        if key in self.script:
            return list(self.script[key])[:k]
        gender = self._source_gender(source)
        lexicalized, routed = self._prompt_features(prompt)
        phenomenon = self._source_phenomenon(source)
        win_p = self.win_probs.get(phenomenon, self.win_probs["other"])[(lexicalized, routed)]
        u = _unit_interval(self.seed, "pool", source, _digest(prompt))
        wins = gender in ("male", "female") and u < win_p
        win_slot = int(_unit_interval(self.seed, "slot", source, _digest(prompt)) * k)
        out = []
        for i in range(k):
            if wins and i == win_slot:
                out.append(self._winning_candidate(source, gender, lexicalized, i))
            else:
                out.append(self._neutral_candidate(source, i))
        return out


# --- live HTTP backends -----------------------------------------------------


class _TokenBucket:
    def __init__(self, rate_per_s: float, burst: int):
        self.rate = rate_per_s
        self.capacity = burst
        self.tokens = float(burst)
        self.updated = time.monotonic()
        self.lock = threading.Lock()

    def acquire(self):
        while True:
            with self.lock:
                now = time.monotonic()
                self.tokens = min(self.capacity, self.tokens + (now - self.updated) * self.rate)
                self.updated = now
                if self.tokens >= 1:
                    self.tokens -= 1
                    return
                wait = (1 - self.tokens) / self.rate
            time.sleep(wait)


class _LiveBackendBase:
    def __init__(self, spec: BackendSpec, session=None, rate_per_s: float = 5.0):
        self.spec = spec
        self.session = session or requests.Session()
        self._semaphore = threading.BoundedSemaphore(spec.max_in_flight)
        self._bucket = _TokenBucket(rate_per_s, spec.max_in_flight)
        self.in_flight = 0
        self.max_observed_in_flight = 0
        self._counter_lock = threading.Lock()

    def _api_key(self) -> str:
        env = self.spec.auth_env or f"FIDELITY_{self.spec.kind.upper()}_API_KEY"
        key = os.environ.get(env)
        if not key:
            raise BackendError(f"missing API key environment variable {env}")
        return key

    def _request(self, payload: dict) -> dict:
        last_error: Exception | None = None
        for attempt in range(self.spec.retries + 1):
            self._bucket.acquire()
            with self._semaphore:
                with self._counter_lock:
                    self.in_flight += 1
                    self.max_observed_in_flight = max(self.max_observed_in_flight, self.in_flight)
                try:
                    resp = self.session.post(
                        self.spec.endpoint,
                        json=payload,
                        headers={"Authorization": f"Bearer {self._api_key()}"},
                        timeout=self.spec.timeout,
                    )
                    if resp.status_code == 429 or resp.status_code >= 500:
                        last_error = BackendError(f"HTTP {resp.status_code}")
                    else:
                        resp.raise_for_status()
                        return resp.json()
                except BackendError as err:
                    last_error = err
                except Exception as err:  # connection / timeout / HTTP error
                    last_error = err
                finally:
                    with self._counter_lock:
                        self.in_flight -= 1
            if attempt < self.spec.retries:
                time.sleep(min(2.0, 0.1 * 2**attempt))
        raise BackendError(f"backend request failed after {self.spec.retries + 1} attempts: {last_error}")


class ChatLLMBackend(_LiveBackendBase):
    """OpenAI-compatible chat-completions client; k candidates come from k
    independent n=1 requests so candidate order stays well-defined."""

    kind = "chat_llm"

    def _one(self, prompt: str, source: str, index: int) -> str:
        payload = {
            "model": self.spec.model_name,
            "temperature": self.spec.temperature,
            "n": 1,
            "messages": [{"role": "user", "content": f"{prompt}\n\n{source}"}],
        }
        data = self._request(payload)
        try:
            return data["choices"][0]["message"]["content"].strip()
        except (KeyError, IndexError, TypeError) as err:
            raise BackendError(f"malformed chat completion response: {err}") from err

    def translate(self, prompt: str, source: str) -> str:
        return self._one(prompt, source, 0)

    def sample_candidates(self, prompt: str, source: str, k: int) -> list[str]:
        out: list[str] = []
        for i in range(k):
            try:
                out.append(self._one(prompt, source, i))
            except BackendError:
                if not out:
                    raise
        seen: set[str] = set()
        deduped = [t for t in out if not (t in seen or seen.add(t))]
        return deduped


class MTBackend(_LiveBackendBase):
    """Generic MT HTTP API: POST {text, source_lang, target_lang}."""

    kind = "mt_api"

    def translate(self, prompt: str, source: str) -> str:
        data = self._request({"text": source, "source_lang": "en", "target_lang": "hi"})
        try:
            return data["translation"].strip()
        except (KeyError, AttributeError) as err:
            raise BackendError(f"malformed MT response: {err}") from err

    def sample_candidates(self, prompt: str, source: str, k: int) -> list[str]:
        return [self.translate(prompt, source)]


def make_backend(spec: BackendSpec, session=None):
    if spec.kind == "mock":
        return MockBackend.from_spec(spec)
    if spec.kind == "chat_llm":
        return ChatLLMBackend(spec, session=session)
    if spec.kind == "mt_api":
        return MTBackend(spec, session=session)
    raise ValueError(f"unknown backend kind {spec.kind!r}")
