"""Character-, word- and sentence-level features of the comment tail.

An empty tail yields missing values (None) rather than zeros, so "no text"
stays distinguishable from "text without uppercase". Fuzzy similarity is
computed against the language-matched label or sitelink of the post-edit
entity, falling back to the most similar candidate of that kind.
"""

import re
import unicodedata
from dataclasses import dataclass
from functools import lru_cache
from importlib import resources

from . import langmodel
from .fuzzy import fuzzy_partial_ratio, fuzzy_ratio

SYMBOL_CHARS = set("&%$#@+-_*/\\")
BRACKET_CHARS = set("()[]{}<>")

_URL_RE = re.compile(r"https?://\S+|\bwww\.\S+", re.IGNORECASE)
_WORD_RE = re.compile(r"[^\W\d_]+", re.UNICODE)


@dataclass(frozen=True)
class CharFeatures:
    upper_case_ratio: float | None
    lower_case_ratio: float | None
    alphanumeric_ratio: float | None
    digit_ratio: float | None
    punctuation_ratio: float | None
    bracket_ratio: float | None
    symbol_ratio: float | None
    whitespace_ratio: float | None
    latin_ratio: float | None
    non_latin_ratio: float | None
    longest_character_sequence: int | None
    main_alphabet: str | None


@dataclass(frozen=True)
class WordFeatures:
    lower_case_word_ratio: float | None
    upper_case_word_ratio: float | None
    bad_word_ratio: float | None
    language_word_ratio: float | None
    longest_word: int
    contains_language_word: bool
    contains_url: bool


@dataclass(frozen=True)
class SentenceFeatures:
    comment_tail_length: int
    fuzzy_total: int | None
    fuzzy_partial: int | None
    lang_match_prob: float | None


@lru_cache(maxsize=8192)
def _char_flags(ch):
    cat = unicodedata.category(ch)
    letter = cat.startswith("L")
    script = None
    if letter:
        try:
            script = unicodedata.name(ch).split(" ")[0].title()
        except ValueError:
            script = None
    return (
        cat == "Lu",
        cat == "Ll",
        ch.isalnum(),
        cat == "Nd",
        cat.startswith("P"),
        ch in BRACKET_CHARS,
        ch in SYMBOL_CHARS,
        ch.isspace(),
        letter,
        script,
    )


def char_features(tail: str) -> CharFeatures:
    total = len(tail)
    if total == 0:
        return CharFeatures(*([None] * 12))
    upper = lower = alnum = digit = punct = bracket = symbol = space = 0
    latin = non_latin = 0
    scripts = {}
    for ch in tail:
        up, lo, an, dg, pu, br, sy, sp, letter, script = _char_flags(ch)
        upper += up
        lower += lo
        alnum += an
        digit += dg
        punct += pu
        bracket += br
        symbol += sy
        space += sp
        if letter:
            if script == "Latin":
                latin += 1
            else:
                non_latin += 1
            if script is not None:
                scripts[script] = scripts.get(script, 0) + 1

    longest = 1
    run = 1
    for a, b in zip(tail, tail[1:]):
        run = run + 1 if a == b else 1
        if run > longest:
            longest = run

    main = None
    if scripts:
        # mode; ties broken by the lexicographically smallest script name
        main = min(scripts, key=lambda s: (-scripts[s], s))

    return CharFeatures(
        upper_case_ratio=upper / total,
        lower_case_ratio=lower / total,
        alphanumeric_ratio=alnum / total,
        digit_ratio=digit / total,
        punctuation_ratio=punct / total,
        bracket_ratio=bracket / total,
        symbol_ratio=symbol / total,
        whitespace_ratio=space / total,
        latin_ratio=latin / total,
        non_latin_ratio=non_latin / total,
        longest_character_sequence=longest,
        main_alphabet=main,
    )


@lru_cache(maxsize=1)
def load_bad_words() -> frozenset:
    text = (resources.files(__package__) / "data" / "badwords.txt").read_text("utf-8")
    return frozenset(
        line.strip().lower() for line in text.splitlines()
        if line.strip() and not line.startswith("#"))


@lru_cache(maxsize=1)
def language_name_pattern():
    text = (resources.files(__package__) / "data" / "language_names.txt").read_text("utf-8")
    names = [line.strip() for line in text.splitlines()
             if line.strip() and not line.startswith("#")]
    names.sort(key=len, reverse=True)  # longest-first keeps the alternation unambiguous
    return re.compile("|".join(re.escape(n) for n in names), re.IGNORECASE)


def word_features(tail: str, bad_words=None, lang_pattern=None) -> WordFeatures:
    bad_words = load_bad_words() if bad_words is None else bad_words
    lang_pattern = language_name_pattern() if lang_pattern is None else lang_pattern

    contains_url = _URL_RE.search(tail) is not None
    stripped = _URL_RE.sub(" ", tail) if contains_url else tail
    words = _WORD_RE.findall(stripped)
    if not words:
        return WordFeatures(None, None, None, None, 0, False, contains_url)

    lower = upper = bad = langw = 0
    longest = 0
    for w in words:
        cat = unicodedata.category(w[0])
        lower += cat == "Ll"
        upper += cat == "Lu"
        bad += w.lower() in bad_words
        langw += lang_pattern.fullmatch(w) is not None
        if len(w) > longest:
            longest = len(w)
    n = len(words)
    return WordFeatures(
        lower_case_word_ratio=lower / n,
        upper_case_word_ratio=upper / n,
        bad_word_ratio=bad / n,
        language_word_ratio=langw / n,
        longest_word=longest,
        contains_language_word=langw > 0,
        contains_url=contains_url,
    )


def _text_value(v):
    if isinstance(v, str):
        return v
    if isinstance(v, dict):
        for key in ("value", "title"):
            if isinstance(v.get(key), str):
                return v[key]
    return None


def _entity_texts(entity, section):
    out = {}
    table = entity.get(section) if isinstance(entity, dict) else None
    if isinstance(table, dict):
        for key, v in table.items():
            text = _text_value(v)
            if text is not None:
                out[key] = text
    return out


def _pick_reference(tail, candidates, match_key):
    if match_key is not None and match_key in candidates:
        return candidates[match_key]
    best, best_score = None, -1
    for key in sorted(candidates):
        score = fuzzy_ratio(tail, candidates[key])
        if score > best_score:
            best, best_score = candidates[key], score
    return best


def sentence_features(pc, entity, model=None) -> SentenceFeatures:
    """entity is the parsed post-edit JSON document (dict) or None when it
    failed to parse; parse failures degrade to missing fuzzy fields."""
    tail = pc.tail
    model = langmodel.default_model() if model is None else model
    prob = langmodel.lang_match_prob(model, tail, pc.lang)

    action = pc.action or ""
    candidates = None
    match_key = None
    if isinstance(entity, dict):
        if action.startswith("wbsetsitelink"):
            candidates = _entity_texts(entity, "labels")
            match_key = pc.lang
        elif action.startswith("wbsetlabel"):
            candidates = _entity_texts(entity, "sitelinks")
            match_key = f"{pc.lang}wiki" if pc.lang else None

    fuzzy_total = fuzzy_partial = None
    if candidates:
        ref = _pick_reference(tail, candidates, match_key)
        if ref is not None:
            fuzzy_total = fuzzy_ratio(tail, ref)
            fuzzy_partial = fuzzy_partial_ratio(tail, ref)

    return SentenceFeatures(
        comment_tail_length=len(tail),
        fuzzy_total=fuzzy_total,
        fuzzy_partial=fuzzy_partial,
        lang_match_prob=prob,
    )
