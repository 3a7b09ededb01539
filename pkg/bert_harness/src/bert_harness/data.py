"""Transcript CSV ingestion (``id,text,label``) and the bridge from the
feature pipeline's extract sidecar to that CSV."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Optional


def read_transcripts_csv(path) -> tuple[list[str], list[str], Optional[list[int]]]:
    """(ids, texts, labels or None).  Labels may be AD/non-AD or 1/0; an
    entirely blank label column yields None."""
    ids, texts, labels = [], [], []
    any_label = False
    with open(path, encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        missing = {"id", "text"} - set(reader.fieldnames or [])
        if missing:
            raise ValueError(f"transcripts CSV missing columns: {sorted(missing)}")
        for rec in reader:
            ids.append(rec["id"].strip())
            texts.append(rec["text"])
            raw = (rec.get("label") or "").strip().lower()
            if raw in ("ad", "1"):
                labels.append(1)
                any_label = True
            elif raw in ("non-ad", "nonad", "0"):
                labels.append(0)
                any_label = True
            else:
                labels.append(-1)
    if any_label and -1 in labels:
        raise ValueError("transcripts CSV mixes labeled and unlabeled rows")
    return ids, texts, labels if any_label else None


def write_transcripts_csv(path, ids, texts, labels=None):
    with open(path, "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["id", "text", "label"])
        for i, tid in enumerate(ids):
            label = "" if labels is None else str(int(labels[i]))
            writer.writerow([tid, texts[i], label])


def sidecar_to_transcripts(sidecar_path, labels_path, out_path):
    """Build the harness input CSV from the feature pipeline's
    ``*.provenance.json`` sidecar (participant-only text) and the corpus
    labels.csv."""
    sidecar = json.loads(Path(sidecar_path).read_text(encoding="utf-8"))
    texts = sidecar["participant_text"]
    labels: dict[str, str] = {}
    with open(labels_path, encoding="utf-8", newline="") as f:
        for rec in csv.DictReader(f):
            labels[rec["id"].strip()] = (rec.get("label") or "").strip()
    ids = sorted(texts)
    label_vals = []
    for tid in ids:
        raw = labels.get(tid, "").lower()
        if raw in ("ad", "1"):
            label_vals.append(1)
        elif raw in ("non-ad", "nonad", "0"):
            label_vals.append(0)
        else:
            raise ValueError(f"no label for transcript {tid!r}")
    write_transcripts_csv(out_path, ids, [texts[t] for t in ids], label_vals)
    return out_path
