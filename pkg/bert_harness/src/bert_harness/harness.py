"""Fine-tuning, cross-validation and majority prediction.

Protocol mirrors the feature pipeline's evaluation: stratified k-fold
(default 10), per-seed reshuffling, pooled per-run metrics averaged across
seeds (default 3).  Optimizer is Adam at 2e-5 with a linear schedule
(one-epoch warmup, then linear decay); sequences truncate at 512 subword
tokens.  Folds run sequentially in a single process.

Report CSVs use the ``metric,value`` schema of the feature pipeline so its
reader and comparison tables consume them directly; prediction CSVs use
``id,prediction``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np
import torch

from .data import read_transcripts_csv, write_transcripts_csv
from .model import (FinetuneSpec, OfflineModelError, WhitespaceTokenizer,
                    build_model)

METRIC_ORDER = ("accuracy", "precision", "recall", "specificity", "f1")


def binary_metrics(y_true, y_pred) -> dict:
    """Same definitions as the feature pipeline (AD=1 positive, missing on
    zero denominators); reimplemented locally so the harness stays
    independent."""
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    tp = int(np.sum((y_true == 1) & (y_pred == 1)))
    fp = int(np.sum((y_true == 0) & (y_pred == 1)))
    fn = int(np.sum((y_true == 1) & (y_pred == 0)))
    tn = int(np.sum((y_true == 0) & (y_pred == 0)))
    precision = tp / (tp + fp) if tp + fp else None
    recall = tp / (tp + fn) if tp + fn else None
    specificity = tn / (tn + fp) if tn + fp else None
    f1 = (2 * precision * recall / (precision + recall)
          if precision is not None and recall is not None and precision + recall
          else None)
    return {"accuracy": (tp + tn) / y_true.size, "precision": precision,
            "recall": recall, "specificity": specificity, "f1": f1}


def stratified_folds(labels: np.ndarray, k: int,
                     rng: np.random.Generator) -> list[list[int]]:
    folds: list[list[int]] = [[] for _ in range(k)]
    counter = 0
    for c in np.unique(labels):
        idx = np.flatnonzero(labels == c)
        idx = idx[rng.permutation(idx.size)]
        for i in idx:
            folds[counter % k].append(int(i))
            counter += 1
    return [f for f in folds if f]


def _linear_schedule(optimizer, warmup_steps: int, total_steps: int):
    def factor(step):
        if step < warmup_steps:
            return (step + 1) / max(1, warmup_steps)
        remaining = max(1, total_steps - warmup_steps)
        return max(0.0, (total_steps - step) / remaining)
    return torch.optim.lr_scheduler.LambdaLR(optimizer, factor)


def train_model(texts: list[str], labels: list[int], spec: FinetuneSpec,
                seed: int, epochs: int | None = None):
    """Fine-tune one model; returns (model, tokenizer).  ``epochs``
    overrides the spec (capacity checks push past the tuning range)."""
    epochs = epochs if epochs is not None else spec.epochs
    torch.manual_seed(seed)
    model, tokenizer = build_model(spec, texts, seed)
    model.train()
    y = torch.tensor(labels, dtype=torch.long)
    n = len(texts)
    steps_per_epoch = math.ceil(n / spec.batch_size)
    optimizer = torch.optim.Adam(model.parameters(), lr=spec.effective_lr)
    scheduler = _linear_schedule(optimizer, warmup_steps=steps_per_epoch,
                                 total_steps=steps_per_epoch * epochs)
    order_rng = torch.Generator().manual_seed(seed)
    for _ in range(epochs):
        order = torch.randperm(n, generator=order_rng)
        for start in range(0, n, spec.batch_size):
            batch = order[start:start + spec.batch_size].tolist()
            enc = tokenizer.encode([texts[i] for i in batch], spec.max_length)
            out = model(**enc, labels=y[batch])
            optimizer.zero_grad()
            out.loss.backward()
            optimizer.step()
            scheduler.step()
    model.eval()
    return model, tokenizer


@torch.no_grad()
def predict(model, tokenizer, texts: list[str], spec: FinetuneSpec,
            batch_size: int = 16) -> np.ndarray:
    model.eval()
    preds = []
    for start in range(0, len(texts), batch_size):
        enc = tokenizer.encode(texts[start:start + batch_size], spec.max_length)
        logits = model(**enc).logits
        preds.extend(torch.argmax(logits, dim=1).tolist())
    return np.asarray(preds, dtype=int)


def finetune_cv(transcripts_csv, spec: FinetuneSpec, out_dir) -> dict:
    """k-fold CV averaged across seeds; writes report.csv (metric,value),
    one pooled predictions CSV per seed, and a run manifest.  Returns the
    averaged metrics."""
    ids, texts, labels = read_transcripts_csv(transcripts_csv)
    if labels is None:
        raise ValueError("cross-validation needs labeled transcripts")
    y = np.asarray(labels)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    per_seed = []
    for seed in spec.seeds:
        rng = np.random.default_rng(seed)
        folds = stratified_folds(y, spec.folds, rng)
        pooled_ids: list[str] = []
        pooled_true: list[int] = []
        pooled_pred: list[int] = []
        for fold in folds:
            test = np.asarray(fold)
            train = np.setdiff1d(np.arange(len(ids)), test)
            model, tokenizer = train_model([texts[i] for i in train],
                                           y[train].tolist(), spec, seed)
            fold_pred = predict(model, tokenizer,
                                [texts[i] for i in test], spec)
            pooled_ids.extend(ids[i] for i in test)
            pooled_true.extend(y[test].tolist())
            pooled_pred.extend(fold_pred.tolist())
        metrics = binary_metrics(pooled_true, pooled_pred)
        per_seed.append(metrics)
        with open(out_dir / f"predictions_seed{seed}.csv", "w",
                  encoding="utf-8") as f:
            f.write("id,prediction\n")
            for tid, p in zip(pooled_ids, pooled_pred):
                f.write(f"{tid},{p}\n")

    averaged = {}
    for name in METRIC_ORDER:
        vals = [m[name] for m in per_seed if m[name] is not None]
        averaged[name] = sum(vals) / len(vals) if vals else None
    _write_report(out_dir / "report.csv", averaged)
    (out_dir / "run.json").write_text(json.dumps({
        "protocol": f"kfold:{spec.folds}", "seeds": list(spec.seeds),
        "epochs": spec.epochs, "pretrained": spec.pretrained,
        "tiny_fallback": spec.tiny_fallback,
        "per_seed": per_seed}), encoding="utf-8")
    return averaged


def _write_report(path, metrics: dict):
    lines = ["metric,value"]
    for name in METRIC_ORDER:
        v = metrics.get(name)
        lines.append(f"{name},{'' if v is None else f'{v:.6f}'}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# Checkpoints and majority prediction

def save_checkpoint(model, tokenizer, spec: FinetuneSpec, path):
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    torch.save(model.state_dict(), path / "weights.pt")
    (path / "meta.json").write_text(json.dumps({
        "tiny_fallback": spec.tiny_fallback, "pretrained": spec.pretrained,
        "tiny_hidden": spec.tiny_hidden, "tiny_layers": spec.tiny_layers,
        "tiny_heads": spec.tiny_heads, "max_length": spec.max_length,
        "vocab_size": getattr(model.config, "vocab_size", None)}),
        encoding="utf-8")
    if isinstance(tokenizer, WhitespaceTokenizer):
        tokenizer.save(path / "vocab.json")
    else:
        tokenizer.inner.save_pretrained(path / "tokenizer")


def load_checkpoint(path, spec: FinetuneSpec):
    path = Path(path)
    meta = json.loads((path / "meta.json").read_text(encoding="utf-8"))
    if meta["tiny_fallback"]:
        from transformers import BertConfig, BertForSequenceClassification
        tokenizer = WhitespaceTokenizer.load(path / "vocab.json")
        config = BertConfig(vocab_size=meta["vocab_size"],
                            hidden_size=meta["tiny_hidden"],
                            num_hidden_layers=meta["tiny_layers"],
                            num_attention_heads=meta["tiny_heads"],
                            intermediate_size=meta["tiny_hidden"] * 4,
                            max_position_embeddings=max(meta["max_length"], 64),
                            num_labels=2)
        model = BertForSequenceClassification(config)
    else:
        from transformers import (AutoModelForSequenceClassification,
                                  AutoTokenizer)
        from .model import HubTokenizer
        tokenizer = HubTokenizer(AutoTokenizer.from_pretrained(path / "tokenizer"))
        model = AutoModelForSequenceClassification.from_pretrained(
            meta["pretrained"], num_labels=2)
    model.load_state_dict(torch.load(path / "weights.pt", weights_only=True))
    model.eval()
    return model, tokenizer


def train_seed_checkpoints(transcripts_csv, spec: FinetuneSpec, out_dir
                           ) -> list[Path]:
    """Fine-tune one model per seed on the full training CSV and save the
    checkpoints (the inputs to majority prediction)."""
    ids, texts, labels = read_transcripts_csv(transcripts_csv)
    if labels is None:
        raise ValueError("training needs labeled transcripts")
    out_dir = Path(out_dir)
    paths = []
    for seed in spec.seeds:
        model, tokenizer = train_model(texts, labels, spec, seed)
        path = out_dir / f"seed{seed}"
        save_checkpoint(model, tokenizer, spec, path)
        paths.append(path)
    return paths


def predict_majority(checkpoint_paths, transcripts_csv, spec: FinetuneSpec,
                     out_csv) -> np.ndarray:
    """Element-wise majority over exactly 3 seed checkpoints; output schema
    matches the feature pipeline's prediction CSVs."""
    if len(checkpoint_paths) != 3:
        raise ValueError(f"majority prediction needs 3 checkpoints, "
                         f"got {len(checkpoint_paths)}")
    ids, texts, _ = read_transcripts_csv(transcripts_csv)
    votes = []
    for path in checkpoint_paths:
        model, tokenizer = load_checkpoint(path, spec)
        votes.append(predict(model, tokenizer, texts, spec))
    stack = np.stack(votes)
    majority = (stack.sum(axis=0) >= 2).astype(int)
    with open(out_csv, "w", encoding="utf-8") as f:
        f.write("id,prediction\n")
        for tid, p in zip(ids, majority):
            f.write(f"{tid},{int(p)}\n")
    return majority
