"""Command-line interface.

Commands: extract, cv, train, predict, stats, tsne, fixtures.  Every
command is deterministic given config + seeds, and all outputs are
written atomically (temp file + rename).  Exit codes: 0 success, 2 usage,
3 data error, 4 convergence failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import featureset
from .config import ConfigError, PipelineConfig, DEFAULT_SPACE_NAMES, load_resources
from .corpus import CorpusError, load_corpus
from .evaluation import (feature_differentiation, grid_search_cv,
                         kfold_cv, loso_cv, majority_vote, tsne_embed)
from .featureset import (Dataset, RegistryMismatchError, assemble_dataset,
                         build_registry, read_matrix, registry_from_parts,
                         write_matrix)
from .ml import ConvergenceError, ModelPipeline, ModelSpec
from .treebank import load_registry

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_CONVERGENCE = 4


class UsageError(ValueError):
    pass


class DataError(ValueError):
    pass


def _atomic_write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name + ".")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_config(args) -> PipelineConfig:
    if getattr(args, "config", None):
        return PipelineConfig.from_json_file(args.config)
    return PipelineConfig()


def _registry_for_matrix(cfg: PipelineConfig):
    """Feature registry without loading embedding/norm files."""
    prod = load_registry(
        rules_text=(cfg.resolve(cfg.production_rules_path).read_text(encoding="utf-8")
                    if cfg.production_rules_path else None),
        pos_text=(cfg.resolve(cfg.pos_tags_path).read_text(encoding="utf-8")
                  if cfg.pos_tags_path else None),
        upos_text=(cfg.resolve(cfg.universal_map_path).read_text(encoding="utf-8")
                   if cfg.universal_map_path else None))
    names = ([e["name"] for e in cfg.embeddings] if cfg.embeddings
             else list(DEFAULT_SPACE_NAMES))
    return registry_from_parts(prod, names)


def _parse_seeds(text) -> tuple[int, ...]:
    try:
        return tuple(int(s) for s in str(text).split(","))
    except ValueError as exc:
        raise UsageError(f"bad --seed value {text!r}") from exc


def _dataset_for_task(dataset: Dataset, task: str):
    if task == "classify":
        if dataset.labels is None:
            raise DataError("matrix has no labels; cannot run classification")
        return dataset.X, dataset.labels, np.arange(len(dataset.ids))
    if dataset.mmse is None:
        raise DataError("matrix has no MMSE column; cannot run regression")
    keep = ~np.isnan(dataset.mmse)
    if keep.sum() < 3:
        raise DataError("fewer than 3 samples carry MMSE scores")
    return dataset.X[keep], dataset.mmse[keep], np.flatnonzero(keep)


# ---------------------------------------------------------------------------
# Commands

def cmd_extract(args) -> int:
    cfg = _load_config(args)
    resources = load_resources(cfg)
    registry = build_registry(resources)
    items = load_corpus(args.corpus_dir)
    vectors = []
    provenance = {"registry_hash": registry.hash(), "transcripts": []}
    for item in items:
        vec = featureset.extract_all(item.transcript, item.trees, item.audio,
                                     resources, registry)
        vectors.append(vec)
        provenance["transcripts"].append(vec.provenance)
    labels = {it.transcript.id: it.transcript.label for it in items
              if it.transcript.label is not None}
    mmse = {it.transcript.id: it.transcript.mmse for it in items}
    dataset = assemble_dataset(vectors,
                               labels=labels if labels else None,
                               mmse=mmse)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    tmp = out.with_suffix(out.suffix + ".tmp")
    write_matrix(tmp, dataset, registry)
    os.replace(tmp, out)

    texts = {it.transcript.id: _participant_text(it.transcript,
                                                 resources.participant_tier)
             for it in items}
    sidecar = {"registry_hash": registry.hash(),
               "transcripts": provenance["transcripts"],
               "participant_text": texts}
    _atomic_write(out.with_suffix(".provenance.json"), json.dumps(sidecar, indent=2))
    print(f"wrote {out} ({len(items)} transcripts x 509 features)")
    return EXIT_OK


def _participant_text(transcript, tier):
    from .chat_ingest import participant_text
    return participant_text(transcript, tier)


def cmd_cv(args) -> int:
    cfg = _load_config(args)
    registry = _registry_for_matrix(cfg)
    dataset = read_matrix(args.matrix, registry)
    X, y, _ = _dataset_for_task(dataset, args.task)
    seeds = _parse_seeds(args.seed)
    spec = _spec_from_args(args)
    protocol, k = _parse_protocol(args.protocol)

    if args.grid:
        report, chosen = grid_search_cv(X, y, spec, k=k, seeds=seeds,
                                        task=args.task, protocol=protocol)
    else:
        if protocol == "loso":
            report = loso_cv(X, y, spec, seeds=seeds, task=args.task)
        else:
            report = kfold_cv(X, y, spec, k=k, seeds=seeds, task=args.task)
        chosen = None

    prefix = Path(args.out)
    _atomic_write(prefix.with_suffix(".csv"), report.to_csv())
    _atomic_write(prefix.with_suffix(".txt"), report.to_table())
    if chosen is not None:
        _atomic_write(prefix.with_suffix(".chosen.json"), json.dumps(chosen))
        print(f"grid selected: {chosen}")
    print(report.to_table())
    return EXIT_OK


def _parse_protocol(text: str) -> tuple[str, int]:
    if text == "loso":
        return "loso", 0
    if text.startswith("kfold"):
        k = int(text.split(":", 1)[1]) if ":" in text else 10
        return "kfold", k
    raise UsageError(f"unknown protocol {text!r} (use loso or kfold:K)")


def _spec_from_args(args) -> ModelSpec:
    kwargs = {"kind": args.model}
    if getattr(args, "k_features", None) is not None:
        kwargs["k_features"] = args.k_features
    if getattr(args, "alpha", None) is not None:
        kwargs["alpha"] = args.alpha
    spec = ModelSpec(**kwargs)
    if args.task == "classify" and not spec.is_classifier:
        raise DataError(f"model {spec.kind} is a regressor; task is classify")
    if args.task == "regress" and spec.is_classifier:
        raise DataError(f"model {spec.kind} is a classifier; task is regress")
    return spec


def cmd_train(args) -> int:
    cfg = _load_config(args)
    registry = _registry_for_matrix(cfg)
    dataset = read_matrix(args.matrix, registry)
    X, y, _ = _dataset_for_task(dataset, args.task)
    seeds = _parse_seeds(args.seed)
    spec = _spec_from_args(args)
    models = []
    for seed in seeds:
        pipe = ModelPipeline(spec, seed=seed)
        pipe.fit(X, y)
        models.append(json.loads(pipe.to_json(registry.hash())))
    payload = {"task": args.task, "registry_hash": registry.hash(),
               "models": models}
    _atomic_write(args.out, json.dumps(payload))
    print(f"trained {len(models)} model(s) -> {args.out}")
    return EXIT_OK


def cmd_predict(args) -> int:
    cfg = _load_config(args)
    registry = _registry_for_matrix(cfg)
    dataset = read_matrix(args.matrix, registry)
    payload = json.loads(Path(args.model).read_text(encoding="utf-8"))
    if payload["registry_hash"] != registry.hash():
        raise DataError("model file was trained under a different feature "
                        "registry (hash mismatch)")
    pipes = [ModelPipeline.from_json(json.dumps(m))[0] for m in payload["models"]]
    task = payload["task"]
    if args.majority:
        if len(pipes) % 2 == 0:
            raise DataError(f"majority vote needs an odd model count, "
                            f"got {len(pipes)}")
        if task != "classify":
            raise DataError("majority vote applies to classification models")
        votes = [p.predict(dataset.X) for p in pipes]
        preds = majority_vote(votes)
    else:
        preds = pipes[0].predict(dataset.X)
    lines = ["id,prediction"]
    for tid, p in zip(dataset.ids, preds):
        if task == "classify":
            lines.append(f"{tid},{int(p)}")
        else:
            lines.append(f"{tid},{float(p):.6f}")
    _atomic_write(args.out, "\n".join(lines) + "\n")
    print(f"wrote predictions -> {args.out}")
    return EXIT_OK


def ridge_weights_loso(X, mmse, k: int, alpha: float, d: int) -> np.ndarray:
    """Average per-feature ridge weight across LOSO folds (features not
    selected in a fold contribute 0 for that fold); weights are in
    standardized-input space."""
    n = X.shape[0]
    total = np.zeros(d)
    for i in range(n):
        train = np.setdiff1d(np.arange(n), [i])
        pipe = ModelPipeline(ModelSpec(kind="ridge", alpha=alpha,
                                       k_features=min(k, d)), seed=0)
        pipe.fit(X[train], mmse[train])
        w_full = np.zeros(d)
        w_full[pipe.selector_.chosen] = pipe.model_.weights
        total += w_full
    return total / n


def cmd_stats(args) -> int:
    cfg = _load_config(args)
    registry = _registry_for_matrix(cfg)
    dataset = read_matrix(args.matrix, registry)
    if dataset.labels is None:
        raise DataError("matrix has no labels; stats needs both classes")
    report = feature_differentiation(
        dataset.X, dataset.labels, feature_names=registry.names,
        mmse=dataset.mmse, bonferroni_n=args.bonferroni_n)
    prefix = Path(args.out)
    _atomic_write(prefix.with_suffix(".csv"), report.to_csv())

    weights = None
    if dataset.mmse is not None and (~np.isnan(dataset.mmse)).sum() >= 4:
        keep = ~np.isnan(dataset.mmse)
        weights = ridge_weights_loso(dataset.X[keep], dataset.mmse[keep],
                                     k=args.weights_k, alpha=args.weights_alpha,
                                     d=dataset.X.shape[1])
        lines = ["feature,avg_loso_ridge_weight"]
        for name, w in zip(registry.names, weights):
            lines.append(f"{name},{w:.10g}")
        _atomic_write(prefix.with_suffix(".weights.csv"), "\n".join(lines) + "\n")

    _atomic_write(prefix.with_suffix(".txt"),
                  _stats_table(report, registry.names, weights))
    sig = report.significant_names()
    print(f"{len(sig)} feature(s) significant at Bonferroni threshold "
          f"{report.bonferroni_threshold:.3g}")
    return EXIT_OK


def _stats_table(report, names, weights) -> str:
    lines = [f"feature differentiation: {report.n_tested} tests, "
             f"threshold {report.bonferroni_threshold:.3g}", ""]
    lines.append(f"{'feature':<40} {'mean_AD':>10} {'mean_non':>10} "
                 f"{'p':>10} {'rho':>7}")
    for row in report.rows:
        if row.significant_bonferroni:
            rho = "" if row.spearman_rho is None else f"{row.spearman_rho:.2f}"
            lines.append(f"{row.name:<40} {row.mean_ad:>10.4f} "
                         f"{row.mean_non_ad:>10.4f} {row.p:>10.3g} {rho:>7}")
    if weights is not None:
        order = np.argsort(weights)
        lines.append("")
        lines.append("five lowest regression weights:")
        for i in order[:5]:
            lines.append(f"  {names[i]:<40} {weights[i]: .4f}")
        lines.append("five highest regression weights:")
        for i in order[-5:][::-1]:
            lines.append(f"  {names[i]:<40} {weights[i]: .4f}")
    return "\n".join(lines) + "\n"


def _scatter_svg(coords: np.ndarray, labels) -> str:
    size, margin, r = 480, 30, 5
    lo = coords.min(axis=0)
    hi = coords.max(axis=0)
    span = np.where(hi - lo == 0, 1.0, hi - lo)
    pts = (coords - lo) / span * (size - 2 * margin) + margin
    colors = {1: "#d62728", 0: "#1f77b4", None: "#7f7f7f"}
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" '
             f'height="{size}" viewBox="0 0 {size} {size}">',
             f'<rect width="{size}" height="{size}" fill="white"/>']
    for i, (x, y) in enumerate(pts):
        label = None if labels is None else int(labels[i])
        parts.append(f'<circle cx="{x:.1f}" cy="{size - y:.1f}" r="{r}" '
                     f'fill="{colors[label]}" fill-opacity="0.75"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_tsne(args) -> int:
    cfg = _load_config(args)
    registry = _registry_for_matrix(cfg)
    dataset = read_matrix(args.matrix, registry)
    if dataset.labels is None:
        raise DataError("matrix has no labels; t-SNE coloring needs them")
    X = dataset.X
    names = registry.names
    if args.significant_only:
        report = feature_differentiation(X, dataset.labels, feature_names=names)
        keep = [i for i, row in enumerate(report.rows) if row.significant_bonferroni]
        if not keep:
            raise DataError("no Bonferroni-significant features to embed")
        X = X[:, keep]
        names = [names[i] for i in keep]
    from .ml import apply_impute, fit_medians
    X = apply_impute(X, fit_medians(X))
    std = X.std(axis=0)
    X = (X - X.mean(axis=0)) / np.where(std == 0, 1.0, std)
    coords, kl = tsne_embed(X, perplexity=args.perplexity, iters=args.iters,
                            seed=_parse_seeds(args.seed)[0])
    lines = ["id,x,y,label"]
    for tid, (x, y), label in zip(dataset.ids, coords, dataset.labels):
        lines.append(f"{tid},{x:.6f},{y:.6f},{int(label)}")
    prefix = Path(args.out)
    _atomic_write(prefix.with_suffix(".csv"), "\n".join(lines) + "\n")
    _atomic_write(prefix.with_suffix(".svg"), _scatter_svg(coords, dataset.labels))
    print(f"t-SNE over {X.shape[1]} feature(s), final KL {kl[-1]:.4f}")
    return EXIT_OK


def cmd_fixtures(args) -> int:
    from .fixtures import generate_corpus
    out = generate_corpus(args.out, seed=args.gen_seed)
    print(f"synthetic corpus -> {out}")
    return EXIT_OK


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cogspeech",
        description="Speech-based cognitive-impairment feature pipeline")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("extract", help="extract the 509-feature matrix")
    p.add_argument("corpus_dir")
    p.add_argument("--config", help="pipeline config JSON")
    p.add_argument("--out", default="features.csv")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("cv", help="cross-validated evaluation")
    p.add_argument("matrix")
    p.add_argument("--config")
    p.add_argument("--task", choices=("classify", "regress"), default="classify")
    p.add_argument("--model", default="svm",
                   choices=("svm", "nn", "rf", "nb", "ols", "ridge"))
    p.add_argument("--protocol", default="kfold:10")
    p.add_argument("--k-features", type=int, dest="k_features")
    p.add_argument("--alpha", type=float)
    p.add_argument("--grid", action="store_true")
    p.add_argument("--seed", default="0,1,2")
    p.add_argument("--out", default="cv_report")
    p.set_defaults(func=cmd_cv)

    p = sub.add_parser("train", help="fit on the full matrix, save model file")
    p.add_argument("matrix")
    p.add_argument("--config")
    p.add_argument("--task", choices=("classify", "regress"), default="classify")
    p.add_argument("--model", default="svm",
                   choices=("svm", "nn", "rf", "nb", "ols", "ridge"))
    p.add_argument("--k-features", type=int, dest="k_features")
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", default="0,1,2")
    p.add_argument("--out", default="model.json")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="predict labels/MMSE from a model file")
    p.add_argument("model")
    p.add_argument("matrix")
    p.add_argument("--config")
    p.add_argument("--majority", action="store_true",
                   help="majority vote across the stored seed models")
    p.add_argument("--out", default="predictions.csv")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("stats", help="feature differentiation report")
    p.add_argument("matrix")
    p.add_argument("--config")
    p.add_argument("--bonferroni-n", type=int, dest="bonferroni_n")
    p.add_argument("--weights-k", type=int, default=25, dest="weights_k")
    p.add_argument("--weights-alpha", type=float, default=10.0,
                   dest="weights_alpha")
    p.add_argument("--out", default="stats")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("tsne", help="2-D t-SNE embedding + SVG scatter")
    p.add_argument("matrix")
    p.add_argument("--config")
    p.add_argument("--significant-only", action="store_true",
                   dest="significant_only")
    p.add_argument("--perplexity", type=float, default=3.0)
    p.add_argument("--iters", type=int, default=400)
    p.add_argument("--seed", default="0")
    p.add_argument("--out", default="tsne")
    p.set_defaults(func=cmd_tsne)

    p = sub.add_parser("fixtures", help="fixture utilities")
    fsub = p.add_subparsers(dest="fixtures_command", required=True)
    g = fsub.add_parser("generate", help="emit the synthetic test corpus")
    g.add_argument("--out", default="fixture_corpus")
    g.add_argument("--seed", type=int, default=7, dest="gen_seed")
    g.set_defaults(func=cmd_fixtures)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConvergenceError as exc:
        print(f"convergence error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except (ConfigError, CorpusError, RegistryMismatchError, DataError,
            FileNotFoundError, ValueError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
