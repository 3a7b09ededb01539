"""Corpus directory loading.

Layout: ``corpus/{id}.cha`` (required), ``corpus/{id}.trees`` and
``corpus/{id}.wav`` (optional per sample), ``corpus/labels.csv`` with
columns ``id,label,mmse`` (label ``AD``/``non-AD`` or ``1``/``0``; blank
fields allowed).  This mirrors per-sample challenge-style corpora without
redistributing one.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .acoustics import AudioSignal, read_wav
from .chat_ingest import Transcript, parse_chat
from .treebank import ParseTree, read_trees_file


class CorpusError(ValueError):
    """Corpus directory is missing or malformed."""


@dataclass
class CorpusItem:
    transcript: Transcript
    trees: Optional[list[Optional[ParseTree]]]
    audio: Optional[AudioSignal]


def read_labels(path: Path) -> dict[str, tuple[Optional[int], Optional[int]]]:
    out: dict[str, tuple[Optional[int], Optional[int]]] = {}
    with open(path, encoding="utf-8", newline="") as f:
        for rec in csv.DictReader(f):
            label_txt = (rec.get("label") or "").strip()
            if not label_txt:
                label = None
            elif label_txt.lower() in ("ad", "1"):
                label = 1
            elif label_txt.lower() in ("non-ad", "nonad", "0"):
                label = 0
            else:
                raise CorpusError(f"unrecognized label {label_txt!r} "
                                  f"for id {rec.get('id')}")
            mmse_txt = (rec.get("mmse") or "").strip()
            mmse = int(float(mmse_txt)) if mmse_txt else None
            out[rec["id"].strip()] = (label, mmse)
    return out


def load_corpus(corpus_dir, with_audio: bool = True) -> list[CorpusItem]:
    """Parse every .cha in the directory (sorted by id) with its sibling
    trees/audio when present; labels.csv fills label/MMSE fields."""
    root = Path(corpus_dir)
    if not root.is_dir():
        raise CorpusError(f"not a corpus directory: {root}")
    cha_files = sorted(root.glob("*.cha"))
    if not cha_files:
        raise CorpusError(f"no .cha files in {root}")
    labels_path = root / "labels.csv"
    labels = read_labels(labels_path) if labels_path.exists() else {}

    items = []
    for cha in cha_files:
        tid = cha.stem
        transcript = parse_chat(cha.read_text(encoding="utf-8"), transcript_id=tid)
        if tid in labels:
            transcript.label, transcript.mmse = labels[tid]
        trees = None
        trees_path = root / f"{tid}.trees"
        if trees_path.exists():
            trees = read_trees_file(trees_path.read_text(encoding="utf-8"))
        audio = None
        wav_path = root / f"{tid}.wav"
        if with_audio and wav_path.exists():
            transcript.audio_path = str(wav_path)
            audio = read_wav(wav_path)
        items.append(CorpusItem(transcript=transcript, trees=trees, audio=audio))
    return items
