"""Model construction: pretrained transformer or tiny offline fallback.

The pretrained path loads weights through the transformers hub cache and
needs either network access or a local cache.  When weights are
unavailable, ``tiny_fallback`` builds a small randomly initialized
bidirectional encoder with a whitespace vocabulary grown from the training
texts; it carries no pretrained knowledge but exercises the identical
training/evaluation path (and is what the capacity tests use).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import torch

TINY_SPECIALS = ("[PAD]", "[UNK]", "[CLS]", "[SEP]")


class OfflineModelError(RuntimeError):
    """Pretrained weights could not be loaded; suggests the tiny fallback."""


@dataclass
class FinetuneSpec:
    pretrained: str = "bert-base-uncased"
    epochs: int = 10                  # tuned value; search range is 1..12
    lr: float = 2e-5
    seeds: tuple[int, ...] = (0, 1, 2)
    max_length: int = 512
    folds: int = 10
    batch_size: int = 8
    tiny_fallback: bool = False
    tiny_hidden: int = 32
    tiny_layers: int = 2
    tiny_heads: int = 2
    tiny_lr: float = 1e-3        # random-init training; 2e-5 presumes pretrained

    @property
    def effective_lr(self) -> float:
        return self.tiny_lr if self.tiny_fallback else self.lr

    def __post_init__(self):
        if not (1 <= self.epochs <= 12):
            raise ValueError(f"epochs must be in [1, 12], got {self.epochs}")
        self.seeds = tuple(self.seeds)


class WhitespaceTokenizer:
    """Lowercased whitespace tokenizer over a corpus-grown vocabulary;
    id layout [PAD]=0 [UNK]=1 [CLS]=2 [SEP]=3 then words."""

    def __init__(self, vocab: dict[str, int]):
        self.vocab = vocab

    @classmethod
    def build(cls, texts: list[str]) -> "WhitespaceTokenizer":
        words = sorted({w for t in texts for w in t.lower().split()})
        vocab = {tok: i for i, tok in enumerate(TINY_SPECIALS)}
        for w in words:
            vocab[w] = len(vocab)
        return cls(vocab)

    def encode(self, texts: list[str], max_length: int) -> dict[str, torch.Tensor]:
        unk = self.vocab["[UNK]"]
        rows = []
        for text in texts:
            ids = [self.vocab["[CLS]"]]
            ids += [self.vocab.get(w, unk) for w in text.lower().split()]
            ids = ids[:max_length - 1] + [self.vocab["[SEP]"]]
            rows.append(ids)
        width = max(len(r) for r in rows)
        input_ids = torch.zeros((len(rows), width), dtype=torch.long)
        attention = torch.zeros((len(rows), width), dtype=torch.long)
        for i, r in enumerate(rows):
            input_ids[i, :len(r)] = torch.tensor(r)
            attention[i, :len(r)] = 1
        return {"input_ids": input_ids, "attention_mask": attention}

    def save(self, path: Path):
        path.write_text(json.dumps(self.vocab), encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "WhitespaceTokenizer":
        return cls(json.loads(path.read_text(encoding="utf-8")))


class HubTokenizer:
    """Uniform encode() facade over a transformers tokenizer."""

    def __init__(self, inner):
        self.inner = inner

    def encode(self, texts: list[str], max_length: int) -> dict[str, torch.Tensor]:
        enc = self.inner(texts, padding=True, truncation=True,
                         max_length=max_length, return_tensors="pt")
        return {"input_ids": enc["input_ids"],
                "attention_mask": enc["attention_mask"]}


def build_tiny(spec: FinetuneSpec, train_texts: list[str], seed: int):
    from transformers import BertConfig, BertForSequenceClassification
    tokenizer = WhitespaceTokenizer.build(train_texts)
    config = BertConfig(vocab_size=len(tokenizer.vocab),
                        hidden_size=spec.tiny_hidden,
                        num_hidden_layers=spec.tiny_layers,
                        num_attention_heads=spec.tiny_heads,
                        intermediate_size=spec.tiny_hidden * 4,
                        max_position_embeddings=max(spec.max_length, 64),
                        num_labels=2)
    torch.manual_seed(seed)
    return BertForSequenceClassification(config), tokenizer


def build_model(spec: FinetuneSpec, train_texts: list[str], seed: int):
    """(model, tokenizer) per the spec; raises OfflineModelError when the
    pretrained weights are unreachable and the fallback is off."""
    if spec.tiny_fallback:
        return build_tiny(spec, train_texts, seed)
    try:
        from transformers import (AutoModelForSequenceClassification,
                                  AutoTokenizer)
        tokenizer = HubTokenizer(AutoTokenizer.from_pretrained(spec.pretrained))
        torch.manual_seed(seed)
        model = AutoModelForSequenceClassification.from_pretrained(
            spec.pretrained, num_labels=2)
        return model, tokenizer
    except Exception as exc:
        raise OfflineModelError(
            f"could not load pretrained weights {spec.pretrained!r} ({exc}); "
            "pass tiny_fallback=True / --tiny-fallback to train a small "
            "randomly initialized encoder instead") from exc
