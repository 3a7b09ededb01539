"""Cross-validation protocols, metrics, statistical analysis and t-SNE.

Protocols: leave-one-subject-out and stratified k-fold, both refitting
the full pipeline (imputer/selector/scaler/model) per fold on the training
split only, with metrics computed on pooled predictions per run and
averaged across seeds (mean of per-run pooled metrics, default 3 seeds).

Statistics: Welch two-sample t-tests per feature with Bonferroni flags,
Spearman correlation against MMSE, and a tie-corrected Kruskal-Wallis H
for comparing model accuracy distributions.  p-values go through a
continued-fraction incomplete-beta implementation (validated against
tabulated critical values in the tests).

t-SNE is the exact (non-approximate) algorithm: per-point precision from
a binary search matching the target perplexity, gradient descent with
momentum and early exaggeration, and a final monotone phase so the KL
divergence is non-increasing over the last stretch of iterations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .ml import ModelPipeline, ModelSpec

DEFAULT_SEEDS = (0, 1, 2)

CLASSIFICATION_METRICS = ("accuracy", "precision", "recall", "specificity", "f1")
REGRESSION_METRICS = ("rmse", "mae")


# ---------------------------------------------------------------------------
# Metrics

def binary_metrics(y_true, y_pred) -> dict[str, Optional[float]]:
    """Accuracy/precision/recall/specificity/F1 with AD (label 1) positive;
    zero-denominator ratios are reported missing."""
    y_true = np.asarray(y_true, dtype=int)
    y_pred = np.asarray(y_pred, dtype=int)
    if y_true.size == 0:
        raise ValueError("empty prediction set")
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


def regression_metrics(y_true, y_pred) -> dict[str, float]:
    y_true = np.asarray(y_true, dtype=np.float64)
    y_pred = np.asarray(y_pred, dtype=np.float64)
    if y_true.size == 0:
        raise ValueError("empty prediction set")
    residuals = y_pred - y_true
    return {"rmse": float(np.sqrt(np.mean(residuals ** 2))),
            "mae": float(np.mean(np.abs(residuals)))}


def majority_vote(prediction_sets: Sequence[np.ndarray]) -> np.ndarray:
    """Element-wise mode over an odd number of aligned label vectors."""
    if len(prediction_sets) % 2 == 0:
        raise ValueError("majority vote needs an odd number of prediction sets")
    stack = np.stack([np.asarray(p, dtype=int) for p in prediction_sets])
    out = np.empty(stack.shape[1], dtype=int)
    for i in range(stack.shape[1]):
        vals, counts = np.unique(stack[:, i], return_counts=True)
        out[i] = vals[np.argmax(counts)]
    return out


# ---------------------------------------------------------------------------
# Cross-validation

@dataclass
class CvReport:
    protocol: str
    task: str                               # classify | regress
    seeds: tuple[int, ...]
    metrics: dict[str, Optional[float]]     # averaged across seeds
    per_seed: list[dict] = field(default_factory=list)
    chosen: dict = field(default_factory=dict)   # grid-search selections

    def to_csv(self) -> str:
        names = (CLASSIFICATION_METRICS if self.task == "classify"
                 else REGRESSION_METRICS)
        lines = ["metric,value"]
        for name in names:
            v = self.metrics.get(name)
            lines.append(f"{name},{'' if v is None else f'{v:.6f}'}")
        return "\n".join(lines) + "\n"

    def to_table(self) -> str:
        names = (CLASSIFICATION_METRICS if self.task == "classify"
                 else REGRESSION_METRICS)
        rows = [f"{self.protocol} ({self.task}), seeds {list(self.seeds)}"]
        for name in names:
            v = self.metrics.get(name)
            rows.append(f"  {name:<12} {'missing' if v is None else f'{v:.4f}'}")
        return "\n".join(rows) + "\n"


def read_report_csv(text: str) -> dict[str, Optional[float]]:
    """Parse a report CSV (``metric,value`` lines) back into a metrics dict;
    the schema shared with external harnesses that feed comparison tables."""
    lines = [l for l in text.splitlines() if l.strip()]
    if not lines or lines[0] != "metric,value":
        raise ValueError("not a report CSV: missing 'metric,value' header")
    metrics: dict[str, Optional[float]] = {}
    for line in lines[1:]:
        name, _, value = line.partition(",")
        known = set(CLASSIFICATION_METRICS) | set(REGRESSION_METRICS)
        if name not in known:
            raise ValueError(f"unknown metric {name!r} in report CSV")
        metrics[name] = float(value) if value else None
    return metrics


def loso_folds(n: int) -> list[list[int]]:
    return [[i] for i in range(n)]


def stratified_kfold_folds(y: np.ndarray, k: int,
                           rng: np.random.Generator) -> list[list[int]]:
    """Shuffle within class, then deal class blocks round-robin so per-fold
    class counts are equal wherever divisible."""
    y = np.asarray(y)
    folds: list[list[int]] = [[] for _ in range(k)]
    counter = 0
    for c in np.unique(y):
        idx = np.flatnonzero(y == c)
        idx = idx[rng.permutation(idx.size)]
        for i in idx:
            folds[counter % k].append(int(i))
            counter += 1
    return [f for f in folds if f]


def plain_kfold_folds(n: int, k: int, rng: np.random.Generator) -> list[list[int]]:
    idx = rng.permutation(n)
    return [list(map(int, fold)) for fold in np.array_split(idx, k) if fold.size]


def _run_folds(X, y, folds, spec: ModelSpec, seed: int, task: str):
    """Fit per fold on the training split, predict the test split; returns
    pooled (y_true, y_pred) in fold order."""
    y_true_all: list = []
    y_pred_all: list = []
    n = X.shape[0]
    for fold in folds:
        test = np.asarray(fold, dtype=int)
        train = np.setdiff1d(np.arange(n), test)
        pipe = ModelPipeline(spec, seed=seed)
        pipe.fit(X[train], y[train])
        pred = pipe.predict(X[test])
        y_true_all.extend(y[test].tolist())
        y_pred_all.extend(np.asarray(pred).tolist())
    return np.asarray(y_true_all), np.asarray(y_pred_all)


def _average_metrics(per_seed: list[dict], names) -> dict[str, Optional[float]]:
    out: dict[str, Optional[float]] = {}
    for name in names:
        vals = [s["metrics"][name] for s in per_seed if s["metrics"][name] is not None]
        out[name] = sum(vals) / len(vals) if vals else None
    return out


def _cv(X, y, folds_per_seed, spec, seeds, task, protocol) -> CvReport:
    per_seed = []
    names = CLASSIFICATION_METRICS if task == "classify" else REGRESSION_METRICS
    for seed, folds in zip(seeds, folds_per_seed):
        flat = sorted(i for fold in folds for i in fold)
        if flat != list(range(X.shape[0])):
            raise ValueError("folds do not partition the dataset")
        y_true, y_pred = _run_folds(X, y, folds, spec, seed, task)
        metrics = (binary_metrics(y_true, y_pred) if task == "classify"
                   else regression_metrics(y_true, y_pred))
        per_seed.append({"seed": seed, "folds": folds,
                         "y_true": y_true.tolist(), "y_pred": y_pred.tolist(),
                         "metrics": metrics})
    return CvReport(protocol=protocol, task=task, seeds=tuple(seeds),
                    metrics=_average_metrics(per_seed, names), per_seed=per_seed)


def loso_cv(X, y, spec: ModelSpec, seeds=DEFAULT_SEEDS,
            task: str = "classify") -> CvReport:
    """Leave-one-subject-out: n singleton test folds, pooled metrics,
    averaged across seeds (seeds matter only for stochastic models)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if X.shape[0] < 2:
        raise ValueError("LOSO needs at least 2 samples")
    folds = loso_folds(X.shape[0])
    return _cv(X, y, [folds] * len(seeds), spec, seeds, task, "loso")


def kfold_cv(X, y, spec: ModelSpec, k: int = 10, seeds=DEFAULT_SEEDS,
             task: str = "classify") -> CvReport:
    """k-fold CV, stratified for classification, reshuffled per seed."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    if k > X.shape[0]:
        raise ValueError(f"k={k} exceeds n={X.shape[0]}")
    folds_per_seed = []
    for seed in seeds:
        rng = np.random.default_rng(seed)
        if task == "classify":
            folds_per_seed.append(stratified_kfold_folds(y, k, rng))
        else:
            folds_per_seed.append(plain_kfold_folds(X.shape[0], k, rng))
    return _cv(X, y, folds_per_seed, spec, seeds, task, f"kfold:{k}")


def grid_search_cv(X, y, base_spec: ModelSpec, k_grid=None, alpha_grid=None,
                   k: int = 10, seeds=DEFAULT_SEEDS, task: str = "classify",
                   protocol: str = "kfold") -> tuple[CvReport, dict]:
    """Joint grid over the selector size (and alpha for ridge); picks the
    setting with the best mean accuracy (classification) or lowest RMSE
    (regression) and returns its report.  Deduplicated k values keep the
    cost of k-grids larger than the feature count bounded."""
    from .ml import GRID_K, GRID_ALPHA
    k_grid = list(k_grid) if k_grid is not None else list(GRID_K)
    alpha_grid = (list(alpha_grid) if alpha_grid is not None
                  else (list(GRID_ALPHA) if base_spec.kind == "ridge" else [None]))
    seen_k = []
    for k_feat in k_grid:
        k_eff = min(k_feat, X.shape[1])
        if k_eff not in seen_k:
            seen_k.append(k_eff)
    best = None
    for k_eff in seen_k:
        for alpha in alpha_grid:
            spec = ModelSpec(**{**_spec_dict(base_spec), "k_features": k_eff,
                                **({"alpha": alpha} if alpha is not None else {})})
            if protocol == "loso":
                report = loso_cv(X, y, spec, seeds=seeds, task=task)
            else:
                report = kfold_cv(X, y, spec, k=k, seeds=seeds, task=task)
            score = (report.metrics["accuracy"] if task == "classify"
                     else -report.metrics["rmse"])
            if best is None or score > best[0]:
                best = (score, {"k_features": k_eff,
                                **({"alpha": alpha} if alpha is not None else {})},
                        report)
    report = best[2]
    report.chosen = best[1]
    return report, best[1]


def _spec_dict(spec: ModelSpec) -> dict:
    from dataclasses import asdict
    d = asdict(spec)
    d["hidden"] = tuple(d["hidden"])
    return d


# ---------------------------------------------------------------------------
# Special functions (continued-fraction incomplete beta) and tests

def _betacf(a: float, b: float, x: float) -> float:
    """Lentz continued fraction for the regularized incomplete beta."""
    max_iter, eps, fpmin = 300, 3e-16, 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < fpmin:
        d = fpmin
    d = 1.0 / d
    h = d
    for m in range(1, max_iter + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < fpmin:
            d = fpmin
        c = 1.0 + aa / c
        if abs(c) < fpmin:
            c = fpmin
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < eps:
            return h
    raise RuntimeError(f"incomplete beta did not converge (a={a}, b={b}, x={x})")


def betainc(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                + a * math.log(x) + b * math.log(1.0 - x))
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf_two_sided(t: float, df: float) -> float:
    """Two-sided p for a t statistic: I_{df/(df+t^2)}(df/2, 1/2)."""
    if not math.isfinite(t):
        return 0.0
    return betainc(df / 2.0, 0.5, df / (df + t * t))


def chi2_sf_1df(h: float) -> float:
    return math.erfc(math.sqrt(max(h, 0.0) / 2.0))


def welch_t_test(a: np.ndarray, b: np.ndarray
                 ) -> tuple[Optional[float], Optional[float]]:
    """(t, two-sided p) for unequal-variance samples; undefined (None, None)
    when both samples are constant."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n1, n2 = a.size, b.size
    if n1 < 2 or n2 < 2:
        raise ValueError("welch_t_test needs >= 2 values per group")
    v1, v2 = a.var(ddof=1), b.var(ddof=1)
    se2 = v1 / n1 + v2 / n2
    if se2 == 0.0:
        return None, None
    t = (a.mean() - b.mean()) / math.sqrt(se2)
    df = se2 ** 2 / ((v1 / n1) ** 2 / (n1 - 1) + (v2 / n2) ** 2 / (n2 - 1))
    return float(t), t_sf_two_sided(t, df)


def _rank_with_ties(values: np.ndarray) -> np.ndarray:
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.size, dtype=np.float64)
    i = 0
    while i < values.size:
        j = i
        while j + 1 < values.size and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0   # 1-based mid-rank
        i = j + 1
    return ranks


def spearman_rho(x: np.ndarray, y: np.ndarray
                 ) -> tuple[Optional[float], Optional[float]]:
    """(rho, two-sided p) with mid-rank ties; p via the t approximation."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = x.size
    if n < 3:
        raise ValueError("spearman_rho needs n >= 3")
    rx, ry = _rank_with_ties(x), _rank_with_ties(y)
    sx, sy = rx.std(), ry.std()
    if sx == 0.0 or sy == 0.0:
        return None, None
    rho = float(np.mean((rx - rx.mean()) * (ry - ry.mean())) / (sx * sy))
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) == 1.0:
        return rho, 0.0
    t = rho * math.sqrt((n - 2) / (1.0 - rho * rho))
    return rho, t_sf_two_sided(t, n - 2)


def kruskal_wallis(sample_a, sample_b) -> dict[str, float]:
    """Tie-corrected two-sample Kruskal-Wallis H with chi-square (1 df) p."""
    a = np.asarray(sample_a, dtype=np.float64)
    b = np.asarray(sample_b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise ValueError("both samples must be nonempty")
    pooled = np.concatenate([a, b])
    n = pooled.size
    ranks = _rank_with_ties(pooled)
    ra, rb = ranks[:a.size], ranks[a.size:]
    h = (12.0 / (n * (n + 1))
         * (a.size * (ra.mean() - (n + 1) / 2.0) ** 2
            + b.size * (rb.mean() - (n + 1) / 2.0) ** 2))
    _, counts = np.unique(pooled, return_counts=True)
    tie_term = float(np.sum(counts ** 3 - counts))
    denom = 1.0 - tie_term / (n ** 3 - n) if n > 1 else 1.0
    h = h / denom if denom > 0 else 0.0
    return {"H": float(h), "p": chi2_sf_1df(h)}


# ---------------------------------------------------------------------------
# Feature differentiation report

@dataclass
class StatsRow:
    name: str
    mean_ad: Optional[float]
    mean_non_ad: Optional[float]
    t: Optional[float]
    p: Optional[float]
    significant_bonferroni: bool
    spearman_rho: Optional[float] = None
    spearman_p: Optional[float] = None
    spearman_significant: bool = False


@dataclass
class StatsReport:
    rows: list[StatsRow]
    bonferroni_threshold: float
    n_tested: int

    def significant_names(self) -> list[str]:
        return [r.name for r in self.rows if r.significant_bonferroni]

    def to_csv(self) -> str:
        lines = ["feature,mean_ad,mean_non_ad,t,p,significant,"
                 "spearman_rho,spearman_p,spearman_significant"]
        for r in self.rows:
            vals = [r.name]
            for v in (r.mean_ad, r.mean_non_ad, r.t, r.p):
                vals.append("" if v is None else f"{v:.10g}")
            vals.append(str(int(r.significant_bonferroni)))
            for v in (r.spearman_rho, r.spearman_p):
                vals.append("" if v is None else f"{v:.10g}")
            vals.append(str(int(r.spearman_significant)))
            lines.append(",".join(vals))
        return "\n".join(lines) + "\n"


def feature_differentiation(X, y, feature_names=None, mmse=None,
                            bonferroni_n: Optional[int] = None) -> StatsReport:
    """Per-feature Welch t-test between classes (AD=1 positive), Bonferroni
    flags at 0.05 / n_tested, and Spearman correlation with MMSE at the
    same corrected threshold.  NaN entries are dropped per feature."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=int)
    d = X.shape[1]
    names = list(feature_names) if feature_names is not None else [
        f"f{i}" for i in range(d)]
    n_tested = bonferroni_n if bonferroni_n is not None else d
    threshold = 0.05 / n_tested
    mmse_arr = None if mmse is None else np.asarray(mmse, dtype=np.float64)

    rows = []
    for j in range(d):
        col = X[:, j]
        ok = ~np.isnan(col)
        a = col[ok & (y == 1)]
        b = col[ok & (y == 0)]
        if a.size >= 2 and b.size >= 2:
            t, p = welch_t_test(a, b)
        else:
            t, p = None, None
        row = StatsRow(
            name=names[j],
            mean_ad=float(a.mean()) if a.size else None,
            mean_non_ad=float(b.mean()) if b.size else None,
            t=t, p=p,
            significant_bonferroni=(p is not None and p < threshold))
        if mmse_arr is not None:
            pair_ok = ok & ~np.isnan(mmse_arr)
            if pair_ok.sum() >= 3:
                rho, sp = spearman_rho(col[pair_ok], mmse_arr[pair_ok])
                row.spearman_rho = rho
                row.spearman_p = sp
                row.spearman_significant = sp is not None and sp < threshold
        rows.append(row)
    return StatsReport(rows=rows, bonferroni_threshold=threshold, n_tested=n_tested)


# ---------------------------------------------------------------------------
# Exact t-SNE

def _conditional_probs(sq_dists: np.ndarray, perplexity: float,
                       tol: float = 1e-6, max_iter: int = 80) -> np.ndarray:
    """Row-normalized conditional probabilities with per-point precision
    found by binary search so each row's entropy matches log(perplexity)."""
    n = sq_dists.shape[0]
    target = math.log(perplexity)
    P = np.zeros((n, n))
    for i in range(n):
        beta, beta_min, beta_max = 1.0, 0.0, math.inf
        di = np.delete(sq_dists[i], i)
        for _ in range(max_iter):
            w = np.exp(-di * beta)
            sum_w = w.sum()
            if sum_w <= 0:
                h = 0.0
                p = np.zeros_like(w)
            else:
                p = w / sum_w
                h = float(beta * np.sum(di * p) + math.log(sum_w))
            diff = h - target
            if abs(diff) < tol:
                break
            if diff > 0:
                beta_min = beta
                beta = beta * 2.0 if beta_max == math.inf else (beta + beta_max) / 2.0
            else:
                beta_max = beta
                beta = beta / 2.0 if beta_min == 0.0 else (beta + beta_min) / 2.0
        row = np.insert(p, i, 0.0)
        P[i] = row
    return P


def _kl_and_grad(P: np.ndarray, Y: np.ndarray) -> tuple[float, np.ndarray]:
    n = Y.shape[0]
    sq = np.sum(Y ** 2, axis=1)
    num = 1.0 / (1.0 + sq[:, None] + sq[None, :] - 2.0 * Y @ Y.T)
    np.fill_diagonal(num, 0.0)
    Q = num / num.sum()
    Q = np.maximum(Q, 1e-12)
    kl = float(np.sum(P * np.log(np.maximum(P, 1e-12) / Q)))
    PQ = (P - Q) * num
    grad = 4.0 * ((np.diag(PQ.sum(axis=1)) - PQ) @ Y)
    return kl, grad


def tsne_embed(X, perplexity: float = 10.0, iters: int = 500, seed: int = 0,
               learning_rate: Optional[float] = None,
               early_exaggeration: float = 4.0,
               monotone_tail: int = 100) -> tuple[np.ndarray, list[float]]:
    """Exact t-SNE to 2 dimensions; returns (n, 2) coordinates and the KL
    history.  The default learning rate scales with the sample count
    (n / (4 * exaggeration), floored at 10), which keeps small embeddings
    from inflating.  The last ``monotone_tail`` iterations use backtracking
    plain gradient steps, so that stretch of the KL history never
    increases."""
    X = np.asarray(X, dtype=np.float64)
    n = X.shape[0]
    if n < 3 * perplexity:
        raise ValueError(f"perplexity {perplexity} too large for n={n}")
    if learning_rate is None:
        learning_rate = max(n / (4.0 * early_exaggeration), 10.0)
    sq = np.sum(X ** 2, axis=1)
    sq_dists = np.maximum(sq[:, None] + sq[None, :] - 2.0 * X @ X.T, 0.0)
    P_cond = _conditional_probs(sq_dists, perplexity)
    P = (P_cond + P_cond.T) / (2.0 * n)
    P = np.maximum(P, 1e-12)

    rng = np.random.default_rng(seed)
    Y = rng.normal(0.0, 1e-4, size=(n, 2))
    velocity = np.zeros_like(Y)
    gains = np.ones_like(Y)
    kl_history: list[float] = []
    exaggeration_end = min(100, max(0, iters - monotone_tail))
    main_end = max(exaggeration_end, iters - monotone_tail)

    for it in range(main_end):
        P_eff = P * early_exaggeration if it < exaggeration_end else P
        _, grad = _kl_and_grad(P_eff, Y)
        momentum = 0.5 if it < 250 else 0.8
        same_sign = np.sign(grad) == np.sign(velocity)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, 0.01)
        velocity = momentum * velocity - learning_rate * gains * grad
        Y = Y + velocity
        Y = Y - Y.mean(axis=0)
        kl, _ = _kl_and_grad(P, Y)
        kl_history.append(kl)

    # Monotone tail: plain gradient with backtracking on the true objective.
    step = learning_rate
    kl, grad = _kl_and_grad(P, Y)
    for _ in range(main_end, iters):
        trial_step = step
        for _ in range(30):
            Y_new = Y - trial_step * grad
            kl_new, grad_new = _kl_and_grad(P, Y_new)
            if kl_new <= kl:
                break
            trial_step /= 2.0
        else:
            kl_new, grad_new, Y_new = kl, grad, Y
        Y, kl, grad = Y_new, kl_new, grad_new
        step = trial_step * 1.2
        kl_history.append(kl)
    return Y, kl_history
