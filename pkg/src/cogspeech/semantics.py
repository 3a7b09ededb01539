"""Embedding-based coherence and picture content-unit features.

Utterances are embedded as the mean of their in-vocabulary word vectors
over five embedding spaces (default dims 50/100/200/300/300).  Local
coherence tracks cosine distance between consecutive utterances per space;
the pairwise block (similarity-threshold fractions and pair distances)
runs on one designated primary space.  Content-unit features score
mentions of the scene inventory in ``data/content_units.tsv`` and the
distance between utterances and the content-unit centroid per space.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from typing import Optional

import numpy as np

CATEGORIES = ("subject", "place", "object", "action")

# Light suffix-stripping table used when matching words to unit lemmas.
_SUFFIX_RULES = (("ies", "y"), ("ing", ""), ("ed", ""), ("es", ""), ("s", ""))
_MIN_STEM = 3


class ResourceError(ValueError):
    """A required semantic resource is missing or malformed."""


@dataclass
class EmbeddingSpace:
    name: str
    dim: int
    vectors: dict[str, np.ndarray]

    def lookup(self, word: str) -> Optional[np.ndarray]:
        return self.vectors.get(word.lower())

    @classmethod
    def from_text(cls, name: str, text: str) -> "EmbeddingSpace":
        """Parse the common 'word v1 v2 ... vd' plain-text format."""
        vectors: dict[str, np.ndarray] = {}
        dim = None
        for line in text.splitlines():
            if not line.strip():
                continue
            parts = line.split()
            vec = np.asarray([float(x) for x in parts[1:]], dtype=np.float64)
            if dim is None:
                dim = vec.size
            elif vec.size != dim:
                raise ResourceError(
                    f"embedding {name!r}: inconsistent dims {vec.size} vs {dim}")
            vectors[parts[0].lower()] = vec
        if dim is None:
            raise ResourceError(f"embedding {name!r}: empty file")
        return cls(name=name, dim=dim, vectors=vectors)


@dataclass(frozen=True)
class ContentUnit:
    name: str
    category: str
    lemmas: frozenset[str]


@dataclass
class ContentUnitLexicon:
    units: list[ContentUnit]

    def __post_init__(self):
        if not self.units:
            raise ResourceError("content-unit lexicon is empty")
        names = [u.name for u in self.units]
        if len(set(names)) != len(names):
            raise ResourceError("duplicate content-unit names")
        for u in self.units:
            if not u.lemmas:
                raise ResourceError(f"unit {u.name!r} has no lemmas")

    @classmethod
    def from_tsv(cls, text: str) -> "ContentUnitLexicon":
        units = []
        for line in text.splitlines():
            if not line.strip() or line.startswith("#"):
                continue
            name, category, lemmas = line.split("\t")
            if category not in CATEGORIES:
                raise ResourceError(f"unknown content-unit category {category!r}")
            units.append(ContentUnit(name, category,
                                     frozenset(w.strip().lower()
                                               for w in lemmas.split(","))))
        return cls(units)

    @classmethod
    def shipped(cls) -> "ContentUnitLexicon":
        text = resources.files("cogspeech.data").joinpath(
            "content_units.tsv").read_text(encoding="utf-8")
        return cls.from_tsv(text)


def strip_suffix(word: str) -> str:
    for suffix, repl in _SUFFIX_RULES:
        if word.endswith(suffix) and len(word) - len(suffix) >= _MIN_STEM:
            return word[:-len(suffix)] + repl
    return word


def cosine_distance(a: np.ndarray, b: np.ndarray) -> float:
    return 1.0 - float(np.dot(a, b) / (np.linalg.norm(a) * np.linalg.norm(b)))


def utterance_vector(words: list[str], space: EmbeddingSpace) -> Optional[np.ndarray]:
    """Mean of in-vocabulary word vectors; None when nothing is in vocab."""
    hits = [space.lookup(w) for w in words]
    hits = [v for v in hits if v is not None]
    if not hits:
        return None
    return np.mean(hits, axis=0)


def _usable_vectors(utterance_words: list[list[str]],
                    space: EmbeddingSpace) -> list[np.ndarray]:
    vecs = []
    for words in utterance_words:
        v = utterance_vector(words, space)
        if v is not None and np.linalg.norm(v) > 0:
            vecs.append(v)
    return vecs


def coherence_features(utterance_words: list[list[str]],
                       spaces: list[EmbeddingSpace],
                       primary_index: int = 3) -> dict[str, Optional[float]]:
    """20 features: avg/max/min consecutive-utterance cosine distance per
    space (15) plus, on the primary space, the fraction of utterance pairs
    with similarity below 0.5 / 0.3 / 0 and the average and minimum
    pairwise distance (5).  Blocks needing >= 2 embeddable utterances are
    missing otherwise."""
    feats: dict[str, Optional[float]] = {}
    for space in spaces:
        vecs = _usable_vectors(utterance_words, space)
        dists = [cosine_distance(a, b) for a, b in zip(vecs, vecs[1:])]
        prefix = f"coh_{space.name}"
        feats[f"{prefix}_dist_avg"] = sum(dists) / len(dists) if dists else None
        feats[f"{prefix}_dist_max"] = max(dists) if dists else None
        feats[f"{prefix}_dist_min"] = min(dists) if dists else None

    primary = spaces[primary_index]
    vecs = _usable_vectors(utterance_words, primary)
    pair_dists = [cosine_distance(vecs[i], vecs[j])
                  for i in range(len(vecs)) for j in range(i + 1, len(vecs))]
    if pair_dists:
        sims = [1.0 - d for d in pair_dists]
        n_pairs = len(pair_dists)
        feats["dist_frac_below_05"] = sum(1 for s in sims if s < 0.5) / n_pairs
        feats["dist_frac_below_03"] = sum(1 for s in sims if s < 0.3) / n_pairs
        feats["dist_frac_below_00"] = sum(1 for s in sims if s < 0.0) / n_pairs
        feats["dist_pair_avg"] = sum(pair_dists) / n_pairs
        feats["dist_pair_min"] = min(pair_dists)
    else:
        for key in ("dist_frac_below_05", "dist_frac_below_03", "dist_frac_below_00",
                    "dist_pair_avg", "dist_pair_min"):
            feats[key] = None
    return feats


def _match_units(words: list[str], lexicon: ContentUnitLexicon
                 ) -> tuple[dict[str, int], int]:
    """Mention count per unit (a word mentions a unit if it or its
    suffix-stripped form is in the unit's lemma set) and total mentions."""
    mentions = {u.name: 0 for u in lexicon.units}
    total = 0
    for word in words:
        stripped = strip_suffix(word)
        for unit in lexicon.units:
            if word in unit.lemmas or stripped in unit.lemmas:
                mentions[unit.name] += 1
                total += 1
    return mentions, total


def content_unit_features(words: list[str],
                          utterance_words: list[list[str]],
                          lexicon: ContentUnitLexicon,
                          spaces: list[EmbeddingSpace]
                          ) -> dict[str, Optional[float]]:
    """25 features: 10 content-unit frequency measures plus avg/min/max
    cosine distance between utterance vectors and the content-unit lemma
    centroid per embedding space (15)."""
    mentions, total_mentions = _match_units(words, lexicon)
    by_cat: dict[str, list[ContentUnit]] = {c: [] for c in CATEGORIES}
    for unit in lexicon.units:
        by_cat[unit.category].append(unit)
    distinct = {name for name, count in mentions.items() if count > 0}

    feats: dict[str, Optional[float]] = {}
    feats["cu_distinct_to_total"] = len(distinct) / len(lexicon.units)
    for cat in CATEGORIES:
        units = by_cat[cat]
        hit = sum(1 for u in units if u.name in distinct)
        feats[f"cu_{cat}_distinct_ratio"] = hit / len(units) if units else None
    feats["cu_mentions_per_token"] = (total_mentions / len(words)) if words else None
    for cat in ("subject", "object", "action"):
        cat_mentions = sum(mentions[u.name] for u in by_cat[cat])
        feats[f"cu_{cat}_mention_prop"] = (cat_mentions / total_mentions
                                           if total_mentions else None)
    feats["cu_distinct_to_mentions"] = (len(distinct) / total_mentions
                                        if total_mentions else None)

    all_lemmas = sorted({lemma for u in lexicon.units for lemma in u.lemmas})
    for space in spaces:
        centroid = utterance_vector(all_lemmas, space)
        vecs = _usable_vectors(utterance_words, space)
        prefix = f"gcoh_{space.name}"
        if centroid is None or np.linalg.norm(centroid) == 0 or not vecs:
            feats[f"{prefix}_dist_avg"] = None
            feats[f"{prefix}_dist_min"] = None
            feats[f"{prefix}_dist_max"] = None
            continue
        dists = [cosine_distance(v, centroid) for v in vecs]
        feats[f"{prefix}_dist_avg"] = sum(dists) / len(dists)
        feats[f"{prefix}_dist_min"] = min(dists)
        feats[f"{prefix}_dist_max"] = max(dists)
    return feats


def coherence_feature_names(space_names: list[str]) -> list[str]:
    names = []
    for s in space_names:
        names += [f"coh_{s}_dist_avg", f"coh_{s}_dist_max", f"coh_{s}_dist_min"]
    names += ["dist_frac_below_05", "dist_frac_below_03", "dist_frac_below_00",
              "dist_pair_avg", "dist_pair_min"]
    return names


def content_unit_feature_names(space_names: list[str]) -> list[str]:
    names = ["cu_distinct_to_total"]
    names += [f"cu_{c}_distinct_ratio" for c in CATEGORIES]
    names += ["cu_mentions_per_token"]
    names += [f"cu_{c}_mention_prop" for c in ("subject", "object", "action")]
    names += ["cu_distinct_to_mentions"]
    for s in space_names:
        names += [f"gcoh_{s}_dist_avg", f"gcoh_{s}_dist_min", f"gcoh_{s}_dist_max"]
    return names
