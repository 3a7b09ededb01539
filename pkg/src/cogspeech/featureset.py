"""Canonical 509-feature registry, per-transcript extraction, imputation
and matrix persistence.

Group arithmetic (fixed): 297 lexico-syntactic + 187 acoustic + 25
semantic.  The two rate features live in the lexico-syntactic block but
depend on audio, so a missing recording masks 187 + 2 features.  Matrices
carry the registry hash; reading a matrix against a different registry is
a version error.
"""

from __future__ import annotations

import csv
import hashlib
import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import acoustics, lexical, semantics, speechgraph, treebank
from .chat_ingest import Transcript, participant_utterances
from .config import Resources
from .ml import apply_impute, fit_medians

log = logging.getLogger(__name__)

GROUPS = ("lexicosyntactic", "acoustic", "semantic")
GROUP_COUNTS = {"lexicosyntactic": 297, "acoustic": 187, "semantic": 25}
MATRIX_FORMAT = "cogspeech-matrix v1"


@dataclass(frozen=True)
class FeatureDescriptor:
    name: str
    group: str
    module: str


@dataclass
class FeatureRegistry:
    descriptors: list[FeatureDescriptor]

    def __post_init__(self):
        names = [d.name for d in self.descriptors]
        if len(names) != 509:
            raise ValueError(f"registry must have 509 features, got {len(names)}")
        if len(set(names)) != len(names):
            dupes = sorted({n for n in names if names.count(n) > 1})
            raise ValueError(f"duplicate feature names: {dupes[:5]}")
        for group, expected in GROUP_COUNTS.items():
            actual = sum(1 for d in self.descriptors if d.group == group)
            if actual != expected:
                raise ValueError(f"group {group}: {actual} != {expected}")

    @property
    def names(self) -> list[str]:
        return [d.name for d in self.descriptors]

    def group_of(self) -> dict[str, str]:
        return {d.name: d.group for d in self.descriptors}

    def indices_of_group(self, group: str) -> np.ndarray:
        return np.asarray([i for i, d in enumerate(self.descriptors)
                           if d.group == group])

    def hash(self) -> str:
        payload = "\n".join(f"{d.name}|{d.group}" for d in self.descriptors)
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()[:16]


# Features in the lexico-syntactic block that are unavailable without audio.
AUDIO_DEPENDENT_LEXSYN = ("rate_words_per_sec", "rate_syllables_per_sec")


def registry_from_parts(prod_registry: treebank.ProductionRegistry,
                        space_names: list[str],
                        frame_config: Optional[acoustics.FrameConfig] = None
                        ) -> FeatureRegistry:
    """Assemble the 509-name registry; production rules and embedding-space
    names fix part of the ordering.  Embedding files themselves are not
    needed, so matrix-only commands can build the registry cheaply."""
    desc: list[FeatureDescriptor] = []

    def add(names, group, module):
        desc.extend(FeatureDescriptor(n, group, module) for n in names)

    add(treebank.syntax_feature_names(prod_registry), "lexicosyntactic",
        "treebank")
    add(lexical.norm_feature_names(), "lexicosyntactic", "lexical")
    add(lexical.RICHNESS_FEATURE_NAMES, "lexicosyntactic", "lexical")
    add(lexical.CATEGORY_FEATURE_NAMES, "lexicosyntactic", "lexical")
    add(semantics.coherence_feature_names(space_names), "lexicosyntactic",
        "semantics")
    add(speechgraph.GRAPH_FEATURE_NAMES, "lexicosyntactic", "speechgraph")
    add(acoustics.acoustic_feature_names(frame_config), "acoustic", "acoustics")
    add(semantics.content_unit_feature_names(space_names), "semantic", "semantics")
    return FeatureRegistry(desc)


def build_registry(resources: Resources) -> FeatureRegistry:
    return registry_from_parts(resources.registry, resources.space_names,
                               resources.frame_config)


@dataclass
class FeatureVector:
    transcript_id: str
    values: np.ndarray                  # 509 floats, NaN = masked
    provenance: dict = field(default_factory=dict)

    @property
    def mask(self) -> np.ndarray:
        return np.isnan(self.values)

    @property
    def n_masked(self) -> int:
        return int(self.mask.sum())


@dataclass
class Dataset:
    ids: list[str]
    X: np.ndarray                       # (n, 509), NaN = masked
    labels: Optional[np.ndarray] = None  # 1 = AD, 0 = non-AD
    mmse: Optional[np.ndarray] = None    # float with NaN for unknown

    def __post_init__(self):
        n = len(self.ids)
        if self.X.shape[0] != n:
            raise ValueError("ids/X length mismatch")
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=int)
            if self.labels.shape[0] != n:
                raise ValueError("labels length mismatch")
            bad = set(np.unique(self.labels)) - {0, 1}
            if bad:
                raise ValueError(f"labels must be binary, got extra {bad}")
        if self.mmse is not None:
            self.mmse = np.asarray(self.mmse, dtype=np.float64)
            if self.mmse.shape[0] != n:
                raise ValueError("mmse length mismatch")


class RegistryMismatchError(ValueError):
    """Matrix file was produced under a different feature registry."""


def extract_all(transcript: Transcript,
                trees: Optional[list[Optional[treebank.ParseTree]]],
                audio: Optional[acoustics.AudioSignal],
                resources: Resources,
                registry: Optional[FeatureRegistry] = None) -> FeatureVector:
    """Compute or mask every registry feature for one transcript.

    Absent trees mask the syntax block plus the POS-dependent lexical
    features; absent audio masks the acoustic group and the two rate
    features; empty participant speech masks all text features.
    """
    registry = registry or build_registry(resources)
    feats: dict[str, Optional[float]] = {}
    provenance: dict = {"id": transcript.id, "masked_inputs": []}

    utts = participant_utterances(transcript, resources.participant_tier)
    words = [t.normalized for u in utts for t in u.tokens if t.is_word]
    utterance_words = [[t.normalized for t in u.tokens if t.is_word] for u in utts]
    n_fillers = sum(len(u.fillers()) for u in utts)
    n_nonwords = sum(1 for u in utts for t in u.tokens if t.is_nonword)
    if not words:
        provenance["masked_inputs"].append("no_speech")

    # Syntax block (needs trees with content)
    parsed = [t for t in (trees or []) if t is not None]
    syntax_names = treebank.syntax_feature_names(resources.registry)
    if parsed:
        try:
            feats.update(treebank.syntax_features(trees, resources.registry))
        except treebank.DegenerateInputError:
            parsed = []
    if not parsed:
        provenance["masked_inputs"].append("no_trees")
        feats.update({name: None for name in syntax_names})

    # POS-dependent lexical features draw tags from tree preterminals.
    tagged = [(w.lower(), tag) for tree in parsed for w, tag in tree.pos_pairs()]
    feats.update(lexical.norm_features(tagged, resources.norms) if tagged
                 else {n: None for n in lexical.norm_feature_names()})

    if words:
        feats.update(lexical.richness_features(words, resources.mattr_window))
    else:
        feats.update({n: None for n in lexical.RICHNESS_FEATURE_NAMES})

    # Acoustics (also feeds the two rate features)
    audio_seconds = speech_seconds = None
    acoustic_names = acoustics.acoustic_feature_names(resources.frame_config)
    if audio is not None:
        sig = audio
        if resources.restrict_audio:
            from .chat_ingest import participant_segments
            segments = participant_segments(transcript, resources.participant_tier)
            if segments is not None:
                sig = acoustics.restrict_to_segments(audio, segments)
        n_words_all = len(words)
        feats.update(acoustics.pause_and_duration_features(
            sig, resources.frame_config, n_words_all, n_fillers))
        feats.update(acoustics.f0_stats(sig, resources.frame_config))
        feats.update(acoustics.zcr_stats(sig, resources.frame_config)
                     if acoustics.frame_signal(sig.samples, sig.sample_rate,
                                               resources.frame_config).shape[0]
                     else {n: None for n in acoustics.ZCR_FEATURE_NAMES})
        feats.update(acoustics.mfcc_block(sig, resources.frame_config))
        audio_seconds = feats.get("dur_total_sec")
        speech_seconds = feats.get("dur_spoken_sec")
    else:
        provenance["masked_inputs"].append("no_audio")
        feats.update({name: None for name in acoustic_names})

    feats.update(lexical.category_and_ratio_features(
        words, n_nonwords, tagged or None, resources.word_lists,
        audio_seconds, speech_seconds))

    feats.update(semantics.coherence_features(
        utterance_words, resources.spaces, resources.primary_space))

    feats.update(speechgraph.graph_features(speechgraph.build_graph(words)))

    feats.update(semantics.content_unit_features(
        words, utterance_words, resources.content_units, resources.spaces))

    values = np.full(509, np.nan)
    for i, name in enumerate(registry.names):
        v = feats.get(name)
        if v is not None:
            values[i] = float(v)
    vec = FeatureVector(transcript_id=transcript.id, values=values,
                        provenance=provenance)
    provenance["n_masked"] = vec.n_masked
    return vec


def assemble_dataset(vectors: list[FeatureVector],
                     labels: Optional[dict[str, int]] = None,
                     mmse: Optional[dict[str, Optional[int]]] = None) -> Dataset:
    ids = [v.transcript_id for v in vectors]
    X = np.stack([v.values for v in vectors]) if vectors else np.zeros((0, 509))
    label_arr = mmse_arr = None
    if labels is not None:
        label_arr = np.asarray([labels[i] for i in ids], dtype=int)
    if mmse is not None:
        mmse_arr = np.asarray([np.nan if mmse.get(i) is None else float(mmse[i])
                               for i in ids])
    return Dataset(ids=ids, X=X, labels=label_arr, mmse=mmse_arr)


def impute(dataset: Dataset) -> tuple[Dataset, np.ndarray]:
    """Median-impute masked entries; all-masked features impute 0 with a
    warning.  Returns the filled dataset and the medians for reuse at
    prediction time."""
    all_masked = np.flatnonzero(np.all(np.isnan(dataset.X), axis=0))
    if all_masked.size:
        log.warning("imputing %d all-masked feature(s) with 0: columns %s",
                    all_masked.size, all_masked[:10].tolist())
    medians = fit_medians(dataset.X)
    filled = apply_impute(dataset.X, medians)
    return Dataset(ids=list(dataset.ids), X=filled,
                   labels=None if dataset.labels is None else dataset.labels.copy(),
                   mmse=None if dataset.mmse is None else dataset.mmse.copy()), medians


# ---------------------------------------------------------------------------
# Matrix persistence (CSV with a hash-stamped comment header)

def write_matrix(path, dataset: Dataset, registry: FeatureRegistry):
    with open(path, "w", encoding="utf-8", newline="") as f:
        f.write(f"# {MATRIX_FORMAT} registry={registry.hash()}\n")
        writer = csv.writer(f)
        writer.writerow(["id", *registry.names, "label", "mmse"])
        for i, tid in enumerate(dataset.ids):
            row = [tid]
            for v in dataset.X[i]:
                row.append("" if np.isnan(v) else format(v, ".17g"))
            if dataset.labels is None:
                row.append("")
            else:
                row.append(str(int(dataset.labels[i])))
            if dataset.mmse is None or np.isnan(dataset.mmse[i]):
                row.append("")
            else:
                row.append(format(dataset.mmse[i], ".17g"))
            writer.writerow(row)


def read_matrix(path, registry: FeatureRegistry) -> Dataset:
    with open(path, "r", encoding="utf-8", newline="") as f:
        first = f.readline().rstrip("\n")
        expected = f"# {MATRIX_FORMAT} registry={registry.hash()}"
        if first != expected:
            raise RegistryMismatchError(
                f"matrix header {first!r} does not match current registry "
                f"({registry.hash()})")
        reader = csv.reader(f)
        header = next(reader)
        if header != ["id", *registry.names, "label", "mmse"]:
            raise RegistryMismatchError("matrix columns do not match registry order")
        ids, rows, labels, mmse = [], [], [], []
        has_labels = has_mmse = False
        for rec in reader:
            if not rec:
                continue
            ids.append(rec[0])
            rows.append([float(v) if v else np.nan for v in rec[1:510]])
            if rec[510]:
                has_labels = True
                labels.append(int(rec[510]))
            else:
                labels.append(-1)
            if rec[511]:
                has_mmse = True
                mmse.append(float(rec[511]))
            else:
                mmse.append(np.nan)
    X = np.asarray(rows) if rows else np.zeros((0, 509))
    return Dataset(ids=ids, X=X,
                   labels=np.asarray(labels) if has_labels else None,
                   mmse=np.asarray(mmse) if has_mmse else None)
