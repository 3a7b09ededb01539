"""Command-line interface: from-sidecar, cv, train, predict-majority."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .data import sidecar_to_transcripts
from .harness import finetune_cv, predict_majority, train_seed_checkpoints
from .model import FinetuneSpec, OfflineModelError


def _spec_from_args(args) -> FinetuneSpec:
    return FinetuneSpec(
        pretrained=args.pretrained, epochs=args.epochs,
        seeds=tuple(int(s) for s in args.seed.split(",")),
        max_length=args.max_length, folds=args.folds,
        batch_size=args.batch_size, tiny_fallback=args.tiny_fallback)


def _add_spec_args(p):
    p.add_argument("--pretrained", default="bert-base-uncased")
    p.add_argument("--epochs", type=int, default=10)
    p.add_argument("--seed", default="0,1,2")
    p.add_argument("--max-length", type=int, default=512, dest="max_length")
    p.add_argument("--folds", type=int, default=10)
    p.add_argument("--batch-size", type=int, default=8, dest="batch_size")
    p.add_argument("--tiny-fallback", action="store_true", dest="tiny_fallback",
                   help="train a small randomly initialized encoder instead of "
                        "downloading pretrained weights")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="bert-harness")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("from-sidecar",
                       help="build id,text,label CSV from an extract sidecar")
    p.add_argument("sidecar")
    p.add_argument("labels_csv")
    p.add_argument("--out", default="transcripts.csv")

    p = sub.add_parser("cv", help="k-fold CV averaged across seeds")
    p.add_argument("transcripts")
    p.add_argument("--out", default="bert_cv")
    _add_spec_args(p)

    p = sub.add_parser("train", help="fit one checkpoint per seed")
    p.add_argument("transcripts")
    p.add_argument("--out", default="bert_checkpoints")
    _add_spec_args(p)

    p = sub.add_parser("predict-majority",
                       help="majority vote over 3 seed checkpoints")
    p.add_argument("checkpoints", nargs=3)
    p.add_argument("transcripts")
    p.add_argument("--out", default="bert_predictions.csv")
    _add_spec_args(p)

    args = parser.parse_args(argv)
    try:
        if args.command == "from-sidecar":
            out = sidecar_to_transcripts(args.sidecar, args.labels_csv, args.out)
            print(f"wrote {out}")
        elif args.command == "cv":
            metrics = finetune_cv(args.transcripts, _spec_from_args(args),
                                  args.out)
            print(f"report -> {Path(args.out) / 'report.csv'}")
            for name, value in metrics.items():
                print(f"  {name:<12} "
                      f"{'missing' if value is None else f'{value:.4f}'}")
        elif args.command == "train":
            paths = train_seed_checkpoints(args.transcripts,
                                           _spec_from_args(args), args.out)
            print("checkpoints: " + ", ".join(str(p) for p in paths))
        elif args.command == "predict-majority":
            predict_majority(args.checkpoints, args.transcripts,
                             _spec_from_args(args), args.out)
            print(f"wrote {args.out}")
        return 0
    except OfflineModelError as exc:
        print(f"offline error: {exc}", file=sys.stderr)
        return 4
    except (ValueError, FileNotFoundError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
