"""Character n-gram naive-Bayes language identifier.

Order-2 (bigram) models with additive smoothing and uniform priors over
the supported languages. The bundled training snippets under
data/langmodel/ cover the major Wikipedia languages; posteriors over the
supported set always sum to 1.
"""

import math
import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from .errors import InsufficientData

DEFAULT_ORDER = 2
DEFAULT_ALPHA = 0.5


def _normalize(text: str) -> str:
    return unicodedata.normalize("NFC", text).lower()


def _ngrams(text: str, order: int):
    t = _normalize(text)
    return [t[i:i + order] for i in range(len(t) - order + 1)]


@dataclass(frozen=True)
class LanguageModel:
    order: int
    alpha: float
    languages: tuple[str, ...]
    log_probs: dict  # lang -> {ngram -> log probability}
    log_unseen: dict  # lang -> log probability of any unseen ngram

    def supports(self, lang) -> bool:
        return lang in self.log_probs


def train_language_model(samples: dict, order: int = DEFAULT_ORDER,
                         alpha: float = DEFAULT_ALPHA) -> LanguageModel:
    """Build per-language smoothed bigram tables; deterministic for fixed input."""
    cleaned = {lang: text for lang, text in samples.items() if text and text.strip()}
    if len(cleaned) < 2:
        raise InsufficientData(
            f"need sample text for at least 2 languages, got {len(cleaned)}")

    counts = {}
    vocab = set()
    for lang in sorted(cleaned):
        grams = _ngrams(cleaned[lang], order)
        if not grams:
            raise InsufficientData(f"sample for {lang!r} is shorter than the model order")
        table = {}
        for g in grams:
            table[g] = table.get(g, 0) + 1
        counts[lang] = table
        vocab.update(table)

    # one extra vocabulary slot represents every unseen ngram, which keeps
    # each per-language distribution normalized
    v = len(vocab) + 1
    log_probs = {}
    log_unseen = {}
    for lang in sorted(counts):
        table = counts[lang]
        total = sum(table.values())
        denom = total + alpha * v
        log_probs[lang] = {g: math.log((c + alpha) / denom)
                           for g, c in sorted(table.items())}
        log_unseen[lang] = math.log(alpha / denom)
    return LanguageModel(order=order, alpha=alpha,
                         languages=tuple(sorted(counts)),
                         log_probs=log_probs, log_unseen=log_unseen)


def posterior(model: LanguageModel, text: str) -> dict:
    """P(language | text) under uniform priors; uniform when text carries
    no ngrams of the model order."""
    grams = _ngrams(text, model.order)
    logs = {}
    for lang in model.languages:
        table = model.log_probs[lang]
        unseen = model.log_unseen[lang]
        logs[lang] = sum(table.get(g, unseen) for g in grams)
    peak = max(logs.values())
    weights = {lang: math.exp(v - peak) for lang, v in logs.items()}
    z = sum(weights.values())
    return {lang: w / z for lang, w in weights.items()}


def lang_match_prob(model: LanguageModel, tail: str, stated_lang) -> float | None:
    """Posterior mass on the language the comment claims; None when the
    claim is unsupported or the tail is empty."""
    if not tail or stated_lang is None or not model.supports(stated_lang):
        return None
    return posterior(model, tail)[stated_lang]


@lru_cache(maxsize=1)
def default_model() -> LanguageModel:
    """Model trained from the bundled per-language snippets."""
    samples = {}
    root = resources.files(__package__) / "data" / "langmodel"
    for entry in sorted(root.iterdir(), key=lambda e: e.name):
        if entry.name.endswith(".txt"):
            code = entry.name[:-4]
            text = entry.read_text(encoding="utf-8")
            body = "\n".join(
                line for line in text.splitlines() if not line.startswith("#"))
            samples[code] = body
    return train_language_model(samples)
