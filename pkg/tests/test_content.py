import math
import random

import pytest

from vandalscore import langmodel
from vandalscore.comments import analyze_comment
from vandalscore.content import (
    CharFeatures,
    char_features,
    language_name_pattern,
    load_bad_words,
    sentence_features,
    word_features,
)
from vandalscore.errors import InsufficientData


# ---------------------------------------------------------------- char level

def test_char_features_mixed_case_example():
    cf = char_features("AAb1")
    assert cf.upper_case_ratio == 0.5
    assert cf.lower_case_ratio == 0.25
    assert cf.digit_ratio == 0.25
    assert cf.alphanumeric_ratio == 1.0
    assert cf.longest_character_sequence == 2
    assert cf.main_alphabet == "Latin"


def test_char_features_empty_is_all_missing():
    cf = char_features("")
    for name in CharFeatures.__dataclass_fields__:
        assert getattr(cf, name) is None


def test_char_features_symbols():
    cf = char_features("$$$$")
    assert cf.symbol_ratio == 1.0
    assert cf.longest_character_sequence == 4
    assert cf.upper_case_ratio == 0.0
    assert cf.main_alphabet is None


def test_char_features_brackets_and_whitespace():
    cf = char_features("(a) [b]")
    assert cf.bracket_ratio == pytest.approx(4 / 7)
    assert cf.whitespace_ratio == pytest.approx(1 / 7)


def test_char_features_nonlatin_script():
    cf = char_features("привет")
    assert cf.non_latin_ratio == 1.0
    assert cf.latin_ratio == 0.0
    assert cf.main_alphabet == "Cyrillic"


def test_char_script_tie_breaks_lexicographically():
    # one Latin and one Cyrillic letter: Cyrillic < Latin
    cf = char_features("aя")
    assert cf.main_alphabet == "Cyrillic"


def test_char_ratios_bounded_and_reversal_invariant():
    rng = random.Random(60)
    pool = "abXY19 .$()я中!"
    ratios = [
        "upper_case_ratio", "lower_case_ratio", "alphanumeric_ratio",
        "digit_ratio", "punctuation_ratio", "bracket_ratio", "symbol_ratio",
        "whitespace_ratio", "latin_ratio", "non_latin_ratio",
    ]
    for _ in range(200):
        s = "".join(rng.choice(pool) for _ in range(rng.randint(1, 25)))
        a = char_features(s)
        b = char_features(s[::-1])
        for name in ratios:
            v = getattr(a, name)
            assert 0.0 <= v <= 1.0
            assert v == getattr(b, name)
        assert a.longest_character_sequence == b.longest_character_sequence
        assert a.upper_case_ratio + a.lower_case_ratio <= 1.0
        assert a.digit_ratio <= a.alphanumeric_ratio
        assert a.latin_ratio + a.non_latin_ratio <= 1.0


# ---------------------------------------------------------------- word level

def test_word_features_bad_word_example():
    wf = word_features("Hello damn world", bad_words=frozenset({"damn"}))
    assert wf.bad_word_ratio == pytest.approx(1 / 3)
    assert wf.upper_case_word_ratio == pytest.approx(1 / 3)
    assert wf.lower_case_word_ratio == pytest.approx(2 / 3)
    assert wf.longest_word == 5


def test_word_features_url_detection():
    wf = word_features("see www.example.com")
    assert wf.contains_url
    # the URL must not leak into the word tokens
    assert wf.longest_word == 3
    assert word_features("go to https://example.org/x now").contains_url


def test_word_features_language_word():
    import re
    pattern = re.compile("english|spanish", re.IGNORECASE)
    wf = word_features("english text", lang_pattern=pattern)
    assert wf.language_word_ratio == 0.5
    assert wf.contains_language_word


def test_word_features_no_words():
    wf = word_features("123 !!! $$$")
    assert wf.lower_case_word_ratio is None
    assert wf.bad_word_ratio is None
    assert wf.longest_word == 0
    assert not wf.contains_language_word


def test_bundled_dictionaries_load():
    words = load_bad_words()
    assert "damn" in words and len(words) > 100
    assert language_name_pattern().fullmatch("English")
    assert language_name_pattern().fullmatch("français")


# ---------------------------------------------------------------- sentence level

ENTITY = {
    "id": "Q42",
    "labels": {
        "en": {"language": "en", "value": "Douglas Adams"},
        "fr": {"language": "fr", "value": "Douglas Adams"},
    },
    "sitelinks": {
        "enwiki": {"site": "enwiki", "title": "Douglas Adams"},
        "frwiki": {"site": "frwiki", "title": "tailtext"},
    },
}


def toy_model():
    return langmodel.train_language_model({"aa": "aaaaaaaaaa", "bb": "bbbbbbbbbb"})


def test_sitelink_edit_compares_against_language_label():
    pc = analyze_comment("/* wbsetsitelink-add:1|enwiki */ Douglas Adams")
    sf = sentence_features(pc, ENTITY, model=toy_model())
    assert sf.fuzzy_total == 100
    assert sf.fuzzy_partial == 100
    assert sf.comment_tail_length == len("Douglas Adams")


def test_description_edit_has_no_fuzzy():
    pc = analyze_comment("/* wbsetdescription-add:1|en */ English writer")
    sf = sentence_features(pc, ENTITY, model=toy_model())
    assert sf.fuzzy_total is None
    assert sf.fuzzy_partial is None


def test_label_edit_falls_back_to_most_similar_sitelink():
    pc = analyze_comment("/* wbsetlabel-set:1|de */ tailtext")
    sf = sentence_features(pc, ENTITY, model=toy_model())
    assert sf.fuzzy_total == 100  # frwiki title wins the argmax


def test_label_edit_prefers_language_matched_sitelink():
    pc = analyze_comment("/* wbsetlabel-set:1|en */ tailtext")
    sf = sentence_features(pc, ENTITY, model=toy_model())
    # enwiki exists for the stated language, so the fallback must not fire
    assert sf.fuzzy_total < 100


def test_malformed_entity_degrades_to_missing():
    pc = analyze_comment("/* wbsetlabel-set:1|en */ X")
    sf = sentence_features(pc, None, model=toy_model())
    assert sf.fuzzy_total is None and sf.fuzzy_partial is None
    sf = sentence_features(pc, {"sitelinks": "not-a-dict"}, model=toy_model())
    assert sf.fuzzy_total is None


def test_no_candidates_is_missing():
    pc = analyze_comment("/* wbsetlabel-set:1|en */ X")
    sf = sentence_features(pc, {"labels": {}, "sitelinks": {}}, model=toy_model())
    assert sf.fuzzy_total is None


# ---------------------------------------------------------------- language model

def test_lang_match_prob_empty_tail_missing():
    model = toy_model()
    assert langmodel.lang_match_prob(model, "", "aa") is None


def test_lang_match_prob_unsupported_language_missing():
    model = toy_model()
    assert langmodel.lang_match_prob(model, "aaa", "zz") is None


def test_disjoint_alphabets_confident_posterior():
    model = langmodel.train_language_model({"aa": "a" * 40, "bb": "b" * 40})
    assert langmodel.lang_match_prob(model, "aaaa", "aa") > 0.99
    assert langmodel.lang_match_prob(model, "aaaa", "bb") < 0.01


def test_posterior_matches_closed_form_bayes():
    # two languages over {a, b}: counts give exact multinomial posteriors
    model = langmodel.train_language_model({"x": "aaab", "y": "abbb"}, order=2, alpha=0.5)
    text = "aa"  # single bigram "aa"
    # x: bigrams aaa b -> aa:2 ab:1 ; y: ab:1 bb:2 ; vocab {aa,ab,bb}, V=4
    px = (2 + 0.5) / (3 + 0.5 * 4)
    py = (0 + 0.5) / (3 + 0.5 * 4)
    expected_x = px / (px + py)
    post = langmodel.posterior(model, text)
    assert post["x"] == pytest.approx(expected_x, abs=1e-12)
    assert sum(post.values()) == pytest.approx(1.0, abs=1e-9)


def test_posteriors_sum_to_one_on_default_model():
    model = langmodel.default_model()
    assert len(model.languages) >= 20
    for text in ("hello there", "der schnelle fuchs", "こんにちは世界", "перевод"):
        post = langmodel.posterior(model, text)
        assert sum(post.values()) == pytest.approx(1.0, abs=1e-9)


def test_default_model_identifies_obvious_text():
    model = langmodel.default_model()
    post = langmodel.posterior(model, "the history of the free encyclopedia shows")
    assert max(post, key=post.get) == "en"
    post = langmodel.posterior(model, "la historia de la enciclopedia libre muestra que")
    assert max(post, key=post.get) == "es"


def test_training_is_deterministic():
    samples = {"aa": "abcabc", "bb": "xyzxyz"}
    m1 = langmodel.train_language_model(samples)
    m2 = langmodel.train_language_model(samples)
    assert m1.log_probs == m2.log_probs
    assert m1.log_unseen == m2.log_unseen


def test_single_language_rejected():
    with pytest.raises(InsufficientData):
        langmodel.train_language_model({"en": "abc"})
    with pytest.raises(InsufficientData):
        langmodel.train_language_model({"en": "abc", "de": "   "})


def test_no_grams_gives_uniform_prior():
    model = toy_model()
    post = langmodel.posterior(model, "x")  # shorter than the bigram order
    assert post["aa"] == pytest.approx(0.5)
    assert langmodel.lang_match_prob(model, "x", "aa") == pytest.approx(0.5)
