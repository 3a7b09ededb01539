"""Pipeline configuration and resource loading.

The config file is JSON; unknown keys are rejected.  Relative resource
paths resolve against ``resource_root`` (or the COGSPEECH_RESOURCES
environment variable, or the config file's own directory).  Registry,
word-list and content-unit files default to the shipped data; norm and
embedding files have no usable default and must be supplied for
extraction (the fixture generator writes a complete resource set).
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from .acoustics import FrameConfig
from .lexical import NormLexicon, WordLists, load_word_lists, MATTR_WINDOW_DEFAULT
from .semantics import ContentUnitLexicon, EmbeddingSpace
from .treebank import ProductionRegistry, load_registry

RESOURCE_ENV = "COGSPEECH_RESOURCES"

DEFAULT_SPACE_DIMS = (50, 100, 200, 300, 300)
DEFAULT_SPACE_NAMES = ("glove_50", "w2v_100", "w2v_200", "w2v_300", "w2v_news_300")


class ConfigError(ValueError):
    """Bad or incomplete pipeline configuration."""


@dataclass
class PipelineConfig:
    participant_tier: str = "PAR"
    mattr_window: int = MATTR_WINDOW_DEFAULT
    vad_threshold_frac: float = 0.02
    restrict_audio_to_participant: bool = True
    seeds: tuple[int, ...] = (0, 1, 2)
    primary_space: int = 3
    embeddings: tuple[dict, ...] = ()        # {name, dim, path} x 5
    norms_path: Optional[str] = None
    demonstratives_path: Optional[str] = None
    function_words_path: Optional[str] = None
    light_verbs_path: Optional[str] = None
    dictionary_path: Optional[str] = None
    content_units_path: Optional[str] = None
    production_rules_path: Optional[str] = None
    pos_tags_path: Optional[str] = None
    universal_map_path: Optional[str] = None
    resource_root: Optional[str] = None

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        cfg = cls(**d)
        cfg.seeds = tuple(cfg.seeds)
        cfg.embeddings = tuple(cfg.embeddings)
        return cfg

    @classmethod
    def from_json_file(cls, path) -> "PipelineConfig":
        path = Path(path)
        cfg = cls.from_dict(json.loads(path.read_text(encoding="utf-8")))
        if cfg.resource_root is None:
            cfg.resource_root = str(path.parent)
        return cfg

    def resolve(self, rel: str) -> Path:
        p = Path(rel)
        if p.is_absolute():
            return p
        root = self.resource_root or os.environ.get(RESOURCE_ENV) or "."
        return Path(root) / p


@dataclass
class Resources:
    """Everything extraction needs, loaded once and shared read-only."""
    registry: ProductionRegistry
    word_lists: WordLists
    norms: NormLexicon
    content_units: ContentUnitLexicon
    spaces: list[EmbeddingSpace]
    primary_space: int
    frame_config: FrameConfig
    mattr_window: int = MATTR_WINDOW_DEFAULT
    participant_tier: str = "PAR"
    restrict_audio: bool = True

    @property
    def space_names(self) -> list[str]:
        return [s.name for s in self.spaces]


def _read(path: Path, what: str) -> str:
    if not path.exists():
        raise ConfigError(f"{what} file not found: {path}")
    return path.read_text(encoding="utf-8")


def load_resources(cfg: PipelineConfig) -> Resources:
    """Load and validate every resource the config names."""
    registry = load_registry(
        rules_text=_read(cfg.resolve(cfg.production_rules_path), "production rules")
        if cfg.production_rules_path else None,
        pos_text=_read(cfg.resolve(cfg.pos_tags_path), "POS tags")
        if cfg.pos_tags_path else None,
        upos_text=_read(cfg.resolve(cfg.universal_map_path), "universal map")
        if cfg.universal_map_path else None)

    word_lists = load_word_lists(
        demonstratives=_read(cfg.resolve(cfg.demonstratives_path), "demonstratives")
        if cfg.demonstratives_path else None,
        function_words=_read(cfg.resolve(cfg.function_words_path), "function words")
        if cfg.function_words_path else None,
        light_verbs=_read(cfg.resolve(cfg.light_verbs_path), "light verbs")
        if cfg.light_verbs_path else None,
        dictionary=_read(cfg.resolve(cfg.dictionary_path), "dictionary")
        if cfg.dictionary_path else None)

    if not cfg.norms_path:
        raise ConfigError("norms_path is required for extraction "
                          "(run `cogspeech fixtures generate` for a synthetic set)")
    norms = NormLexicon.from_tsv(_read(cfg.resolve(cfg.norms_path), "norms"))

    if cfg.content_units_path:
        content_units = ContentUnitLexicon.from_tsv(
            _read(cfg.resolve(cfg.content_units_path), "content units"))
    else:
        content_units = ContentUnitLexicon.shipped()

    if len(cfg.embeddings) != 5:
        raise ConfigError(f"need exactly 5 embedding spaces, got "
                          f"{len(cfg.embeddings)} (dims {list(DEFAULT_SPACE_DIMS)} "
                          "by convention)")
    spaces = []
    for entry in cfg.embeddings:
        space = EmbeddingSpace.from_text(
            entry["name"], _read(cfg.resolve(entry["path"]),
                                 f"embedding {entry['name']}"))
        if "dim" in entry and space.dim != entry["dim"]:
            raise ConfigError(f"embedding {entry['name']}: dim {space.dim} != "
                              f"declared {entry['dim']}")
        spaces.append(space)

    frame_config = FrameConfig(vad_threshold_frac=cfg.vad_threshold_frac)
    return Resources(registry=registry, word_lists=word_lists, norms=norms,
                     content_units=content_units, spaces=spaces,
                     primary_space=cfg.primary_space, frame_config=frame_config,
                     mattr_window=cfg.mattr_window,
                     participant_tier=cfg.participant_tier,
                     restrict_audio=cfg.restrict_audio_to_participant)
