"""Lexicon resources and word-level features.

Covers lexical richness (TTR/MATTR/Brunet/Honoré + reconstruction extras),
psycholinguistic and sentiment norm averages, word-category proportions,
noun ratios, word length, invalid words and speech rate.

Conventions (each pinned here because the source descriptions leave them
open): fillers are excluded from token counts for richness/norm features;
``xxx`` nonwords count toward the invalid-word proportion but never toward
norms or richness; MATTR uses a 20-token window by default; Brunet
W = N^(V^-0.165); Honoré R = 100*ln(N) / (1 - V1/V).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional

LEXICAL_NORMS = ("imageability", "age_of_acquisition", "familiarity", "frequency")
SENTIMENT_NORMS = ("valence", "arousal", "dominance")
NORM_SCOPES = ("all", "nouns", "verbs")

MATTR_WINDOW_DEFAULT = 20

NOUN_TAGS = {"NN", "NNS", "NNP", "NNPS"}
VERB_TAGS = {"VB", "VBD", "VBG", "VBN", "VBP", "VBZ"}
PRONOUN_TAGS = {"PRP", "PRP$"}
INFLECTED_VERB_TAGS = {"VBD", "VBG", "VBN", "VBZ"}
ADJ_TAGS = {"JJ", "JJR", "JJS"}
ADV_TAGS = {"RB", "RBR", "RBS"}
CONJ_PREP_TAGS = {"CC", "IN"}
PROPOSITION_TAGS = VERB_TAGS | ADJ_TAGS | ADV_TAGS | CONJ_PREP_TAGS

_VOWELS = set("aeiouy")


@dataclass
class NormLexicon:
    """word -> {norm name -> value}; lookups are case-insensitive and a
    missing word is absent, never defaulted."""
    values: dict[str, dict[str, float]] = field(default_factory=dict)

    def add(self, word: str, norm: str, value: float):
        self.values.setdefault(word.lower(), {})[norm] = value

    def lookup(self, word: str, norm: str) -> Optional[float]:
        return self.values.get(word.lower(), {}).get(norm)

    @classmethod
    def from_tsv(cls, text: str) -> "NormLexicon":
        lex = cls()
        for line in text.splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            word, norm, value = line.split("\t")
            lex.add(word, norm, float(value))
        return lex


@dataclass
class WordLists:
    demonstratives: frozenset[str]
    function_words: frozenset[str]
    light_verbs: frozenset[str]
    english_dictionary: frozenset[str]

    def __post_init__(self):
        if not self.english_dictionary:
            raise ValueError("english dictionary must be nonempty")


def _read_word_set(text: str) -> frozenset[str]:
    return frozenset(l.strip().lower() for l in text.splitlines()
                     if l.strip() and not l.startswith("# "))


def load_word_lists(demonstratives: Optional[str] = None,
                    function_words: Optional[str] = None,
                    light_verbs: Optional[str] = None,
                    dictionary: Optional[str] = None) -> WordLists:
    """Load word lists from supplied texts, defaulting to the shipped data."""
    def data(name):
        return resources.files("cogspeech.data").joinpath(name).read_text(encoding="utf-8")
    return WordLists(
        demonstratives=_read_word_set(demonstratives if demonstratives is not None
                                      else data("demonstratives.txt")),
        function_words=_read_word_set(function_words if function_words is not None
                                      else data("function_words.txt")),
        light_verbs=_read_word_set(light_verbs if light_verbs is not None
                                   else data("light_verbs.txt")),
        english_dictionary=_read_word_set(dictionary if dictionary is not None
                                          else data("english_words.txt")))


def count_syllables(word: str) -> int:
    """Vowel-group syllable count, minimum 1 per word."""
    groups = 0
    prev_vowel = False
    for c in word.lower():
        is_vowel = c in _VOWELS
        if is_vowel and not prev_vowel:
            groups += 1
        prev_vowel = is_vowel
    return max(groups, 1)


# ---------------------------------------------------------------------------
# Richness

def _ttr(words: list[str]) -> float:
    return len(set(words)) / len(words)


def richness_features(words: list[str],
                      mattr_window: int = MATTR_WINDOW_DEFAULT
                      ) -> dict[str, Optional[float]]:
    """Six lexical-richness measures over normalized non-filler words.

    Honoré's statistic is undefined when every type is a hapax (V1 == V)
    and reported missing.  MATTR degenerates to plain TTR when the window
    exceeds the token count; segmental TTR averages disjoint full windows
    (the incomplete tail is dropped unless it is all there is).
    """
    if not words:
        raise ValueError("richness features need at least one word")
    n = len(words)
    types = set(words)
    v = len(types)
    counts: dict[str, int] = {}
    for w in words:
        counts[w] = counts.get(w, 0) + 1
    v1 = sum(1 for c in counts.values() if c == 1)

    feats: dict[str, Optional[float]] = {}
    feats["rich_ttr"] = v / n
    w_len = min(mattr_window, n)
    feats["rich_mattr"] = (sum(_ttr(words[i:i + w_len])
                               for i in range(n - w_len + 1)) / (n - w_len + 1))
    feats["rich_brunet"] = n ** (v ** -0.165)
    feats["rich_honore"] = (100.0 * math.log(n) / (1.0 - v1 / v)) if v1 < v else None
    segments = [words[i:i + w_len] for i in range(0, n - w_len + 1, w_len)]
    if not segments:
        segments = [words]
    feats["rich_msttr"] = sum(_ttr(seg) for seg in segments) / len(segments)
    feats["rich_hapax_prop"] = v1 / n
    return feats


# ---------------------------------------------------------------------------
# Norms

def norm_features(tagged: list[tuple[str, str]],
                  lexicon: NormLexicon) -> dict[str, Optional[float]]:
    """21 norm averages: 4 lexical + 3 sentiment norms, each over all
    words, nouns only and verbs only.  A scope with zero lexicon hits
    yields a missing value for that feature."""
    scopes = {
        "all": [w for w, tag in tagged],
        "nouns": [w for w, tag in tagged if tag in NOUN_TAGS],
        "verbs": [w for w, tag in tagged if tag in VERB_TAGS],
    }
    feats: dict[str, Optional[float]] = {}
    for norm in LEXICAL_NORMS + SENTIMENT_NORMS:
        for scope in NORM_SCOPES:
            hits = [v for v in (lexicon.lookup(w, norm) for w in scopes[scope])
                    if v is not None]
            feats[f"norm_{norm}_{scope}"] = sum(hits) / len(hits) if hits else None
    return feats


def norm_feature_names() -> list[str]:
    lexical = [f"norm_{n}_{s}" for n in LEXICAL_NORMS for s in NORM_SCOPES]
    sentiment = [f"norm_{n}_{s}" for n in SENTIMENT_NORMS for s in NORM_SCOPES]
    return lexical + sentiment


# ---------------------------------------------------------------------------
# Categories, ratios, length, invalid words, rate

def category_and_ratio_features(words: list[str],
                                n_nonwords: int,
                                tagged: Optional[list[tuple[str, str]]],
                                lists: WordLists,
                                audio_seconds: Optional[float] = None,
                                speech_seconds: Optional[float] = None
                                ) -> dict[str, Optional[float]]:
    """12 features: 5 word-category proportions, 3 noun/pronoun ratios,
    average word length (letters), invalid-word proportion and the two
    audio-anchored rates (words per second of audio, syllables per second
    of speech).

    List-based categories run over the transcript's normalized words;
    POS-based categories and the noun ratios need tree-derived tags and
    are missing without them.  Rates are missing without durations.
    """
    feats: dict[str, Optional[float]] = {}
    n_words = len(words)

    for key, wordset in (("demonstrative", lists.demonstratives),
                         ("function", lists.function_words),
                         ("light_verb", lists.light_verbs)):
        feats[f"cat_{key}_prop"] = (sum(1 for w in words if w in wordset) / n_words
                                    if n_words else None)

    if tagged:
        word_tags = [tag for w, tag in tagged if any(c.isalpha() for c in tag)]
        n_tagged = len(word_tags)
        nouns = sum(1 for tag in word_tags if tag in NOUN_TAGS)
        verbs = sum(1 for tag in word_tags if tag in VERB_TAGS)
        pronouns = sum(1 for tag in word_tags if tag in PRONOUN_TAGS)
        inflected = sum(1 for tag in word_tags if tag in INFLECTED_VERB_TAGS)
        propositions = sum(1 for tag in word_tags if tag in PROPOSITION_TAGS)
        feats["cat_inflected_verb_prop"] = _safe_div(inflected, n_tagged)
        feats["cat_proposition_prop"] = _safe_div(propositions, n_tagged)
        feats["ratio_nouns_to_nouns_verbs"] = _safe_div(nouns, nouns + verbs)
        feats["ratio_nouns_to_verbs"] = _safe_div(nouns, verbs)
        feats["ratio_pronouns_to_nouns_pronouns"] = _safe_div(pronouns, pronouns + nouns)
    else:
        for key in ("cat_inflected_verb_prop", "cat_proposition_prop",
                    "ratio_nouns_to_nouns_verbs", "ratio_nouns_to_verbs",
                    "ratio_pronouns_to_nouns_pronouns"):
            feats[key] = None

    letters = [sum(1 for c in w if c.isalpha()) for w in words]
    feats["avg_word_length"] = sum(letters) / n_words if n_words else None
    total_forms = n_words + n_nonwords
    invalid = n_nonwords + sum(1 for w in words if w not in lists.english_dictionary)
    feats["invalid_word_prop"] = invalid / total_forms if total_forms else None

    feats["rate_words_per_sec"] = (n_words / audio_seconds
                                   if audio_seconds and n_words else None)
    syllables = sum(count_syllables(w) for w in words)
    feats["rate_syllables_per_sec"] = (syllables / speech_seconds
                                       if speech_seconds and n_words else None)
    return feats


def _safe_div(num: float, den: float) -> Optional[float]:
    return num / den if den else None


CATEGORY_FEATURE_NAMES = [
    "cat_demonstrative_prop", "cat_function_prop", "cat_light_verb_prop",
    "cat_inflected_verb_prop", "cat_proposition_prop",
    "ratio_nouns_to_nouns_verbs", "ratio_nouns_to_verbs",
    "ratio_pronouns_to_nouns_pronouns",
    "avg_word_length", "invalid_word_prop",
    "rate_words_per_sec", "rate_syllables_per_sec",
]

RICHNESS_FEATURE_NAMES = ["rich_ttr", "rich_mattr", "rich_brunet", "rich_honore",
                          "rich_msttr", "rich_hapax_prop"]
