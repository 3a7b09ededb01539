"""From-scratch models: feature scoring/selection, Gaussian naive Bayes,
RBF-kernel SVM trained by SMO, random forest, a small MLP trained with
Adam, and OLS/ridge regression with clipped predictions.

Hyperparameter defaults follow the tuned settings this pipeline ships
with: SVM C=100, gamma=0.001; RF 200 trees, sqrt(d) features per split,
min-split 2, min-leaf 2, bootstrap; NB balanced priors with variance
smoothing 1e-10 (as a fraction of the max feature variance); NN two
hidden layers of 10 ReLU units trained full-batch with Adam for 200
epochs.  Regression predictions are clipped to the MMSE range [0, 30].
All stochastic fits are deterministic under a fixed seed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, asdict
from typing import Optional

import numpy as np

MMSE_RANGE = (0.0, 30.0)
CLASSIFIER_KINDS = ("svm_rbf", "nn", "rf", "nb")
REGRESSOR_KINDS = ("ols", "ridge")
KIND_ALIASES = {"svm": "svm_rbf", "svm_rbf": "svm_rbf", "nn": "nn", "rf": "rf",
                "nb": "nb", "ols": "ols", "lr": "ols", "ridge": "ridge"}

# Grid mirrored by `cogspeech cv --grid`; model-specific grids stay small
# because k is the axis that matters in this regime.
GRID_K = (10, 25, 35, 50, 80, 509)
GRID_ALPHA = (1.0, 10.0, 12.0, 100.0)


class ConvergenceError(RuntimeError):
    """An iterative fit failed to converge; carries diagnostics."""


class SingularMatrixError(np.linalg.LinAlgError):
    """OLS normal equations are singular; use selection or ridge."""


@dataclass
class ModelSpec:
    kind: str
    c: float = 100.0
    gamma: float = 0.001
    alpha: float = 10.0
    n_trees: int = 200
    min_split: int = 2
    min_leaf: int = 2
    hidden: tuple[int, ...] = (10, 10)
    epochs: int = 200
    lr: float = 1e-3
    nb_smoothing: float = 1e-10
    k_features: Optional[int] = None
    standardize: Optional[bool] = None   # None = by-kind default

    def __post_init__(self):
        self.kind = KIND_ALIASES.get(self.kind, self.kind)
        if self.kind not in CLASSIFIER_KINDS + REGRESSOR_KINDS:
            raise ValueError(f"unknown model kind {self.kind!r}")
        self.hidden = tuple(self.hidden)

    @property
    def is_classifier(self) -> bool:
        return self.kind in CLASSIFIER_KINDS

    @property
    def wants_standardize(self) -> bool:
        if self.standardize is not None:
            return self.standardize
        return self.kind in ("svm_rbf", "nn", "ols", "ridge")


# ---------------------------------------------------------------------------
# Feature scoring and selection

def anova_f_classif(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Two-class ANOVA F per feature: between-group mean square over
    within-group mean square.  Zero within-variance with nonzero between
    gives +inf (ranked first); zero both ways gives 0."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y)
    classes = np.unique(y)
    if classes.size != 2:
        raise ValueError("anova_f_classif needs exactly two classes present")
    n = X.shape[0]
    grand = X.mean(axis=0)
    ss_between = np.zeros(X.shape[1])
    ss_within = np.zeros(X.shape[1])
    for c in classes:
        Xc = X[y == c]
        mean_c = Xc.mean(axis=0)
        ss_between += Xc.shape[0] * (mean_c - grand) ** 2
        ss_within += ((Xc - mean_c) ** 2).sum(axis=0)
    df_between = classes.size - 1
    df_within = n - classes.size
    ms_between = ss_between / df_between
    ms_within = ss_within / df_within
    with np.errstate(divide="ignore", invalid="ignore"):
        f = ms_between / ms_within
    f[(ms_within == 0) & (ms_between > 0)] = np.inf
    f[(ms_within == 0) & (ms_between == 0)] = 0.0
    return f


def f_regression_scores(X: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Correlation-based F per feature: F = r^2/(1-r^2) * (n-2)."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = X.shape[0]
    if n < 3:
        raise ValueError("f_regression_scores needs n >= 3")
    xc = X - X.mean(axis=0)
    yc = y - y.mean()
    x_norm = np.sqrt((xc ** 2).sum(axis=0))
    y_norm = np.sqrt((yc ** 2).sum())
    with np.errstate(divide="ignore", invalid="ignore"):
        r = (xc * yc[:, None]).sum(axis=0) / (x_norm * y_norm)
    r = np.where(x_norm == 0, 0.0, r)
    if y_norm == 0:
        return np.zeros(X.shape[1])
    r = np.clip(r, -1.0, 1.0)
    r2 = r ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        f = r2 / (1.0 - r2) * (n - 2)
    f[r2 >= 1.0] = np.inf
    return f


def select_top_k(scores: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest scores, descending, lower index wins ties."""
    scores = np.asarray(scores, dtype=np.float64)
    if not (1 <= k <= scores.size):
        raise ValueError(f"k={k} out of range [1, {scores.size}]")
    order = np.argsort(-scores, kind="stable")   # stable: ties keep low index
    return order[:k]


@dataclass
class SelectorState:
    scores: np.ndarray
    chosen: np.ndarray   # descending-score order, ties broken by lower index

    @classmethod
    def fit(cls, X, y, k: int, classification: bool) -> "SelectorState":
        scores = anova_f_classif(X, y) if classification else f_regression_scores(X, y)
        scores = np.nan_to_num(scores, nan=0.0, posinf=np.inf)
        return cls(scores=scores, chosen=select_top_k(scores, k))


# ---------------------------------------------------------------------------
# Gaussian naive Bayes

class GaussianNB:
    """Balanced-prior Gaussian NB; smoothing adds eps = coeff * max feature
    variance to every per-class variance."""

    def __init__(self, smoothing: float = 1e-10):
        self.smoothing = smoothing
        self.classes_ = None
        self.means_ = None
        self.vars_ = None
        self.priors_ = None

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        self.classes_ = np.unique(y)
        if self.classes_.size != 2:
            raise ValueError("GaussianNB here is binary")
        max_var = float(np.max(X.var(axis=0))) if X.size else 0.0
        eps = self.smoothing * max_var if max_var > 0 else self.smoothing
        self.means_ = np.stack([X[y == c].mean(axis=0) for c in self.classes_])
        self.vars_ = np.stack([X[y == c].var(axis=0) + eps for c in self.classes_])
        self.priors_ = np.full(2, 0.5)
        return self

    def _log_posteriors(self, X):
        X = np.asarray(X, dtype=np.float64)
        out = np.zeros((X.shape[0], 2))
        for idx in range(2):
            diff = X - self.means_[idx]
            log_like = -0.5 * (np.log(2 * np.pi * self.vars_[idx])
                               + diff ** 2 / self.vars_[idx]).sum(axis=1)
            out[:, idx] = np.log(self.priors_[idx]) + log_like
        return out

    def predict_proba(self, X):
        logp = self._log_posteriors(X)
        logp -= logp.max(axis=1, keepdims=True)
        p = np.exp(logp)
        return p / p.sum(axis=1, keepdims=True)

    def predict(self, X):
        return self.classes_[np.argmax(self._log_posteriors(X), axis=1)]

    def to_dict(self):
        return {"smoothing": self.smoothing, "classes": self.classes_.tolist(),
                "means": self.means_.tolist(), "vars": self.vars_.tolist()}

    @classmethod
    def from_dict(cls, d):
        m = cls(d["smoothing"])
        m.classes_ = np.asarray(d["classes"])
        m.means_ = np.asarray(d["means"])
        m.vars_ = np.asarray(d["vars"])
        m.priors_ = np.full(2, 0.5)
        return m


# ---------------------------------------------------------------------------
# SVM with RBF kernel, SMO dual solver

def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    sq = (np.sum(A ** 2, axis=1)[:, None] + np.sum(B ** 2, axis=1)[None, :]
          - 2.0 * A @ B.T)
    return np.exp(-gamma * np.maximum(sq, 0.0))


class SvmRbf:
    """Binary RBF-kernel SVM; dual solved by SMO with the max-violating-pair
    working set (deterministic, no RNG).  Labels are exposed as {0, 1} and
    handled internally as {-1, +1}."""

    def __init__(self, c: float = 100.0, gamma: float = 0.001, tol: float = 1e-3,
                 max_iter: int = 200_000):
        self.c = c
        self.gamma = gamma
        self.tol = tol
        self.max_iter = max_iter
        self.X_ = None
        self.y_signed_ = None
        self.alphas_ = None
        self.b_ = 0.0
        self.n_iter_ = 0

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        y_signed = np.where(y == 1, 1.0, -1.0)
        n = X.shape[0]
        K = rbf_kernel(X, X, self.gamma)
        alphas = np.zeros(n)
        F = -y_signed.copy()     # F_i = sum_j a_j y_j K_ij - y_i
        C = self.c

        for it in range(self.max_iter):
            up_mask = ((y_signed > 0) & (alphas < C)) | ((y_signed < 0) & (alphas > 0))
            low_mask = ((y_signed < 0) & (alphas < C)) | ((y_signed > 0) & (alphas > 0))
            if not up_mask.any() or not low_mask.any():
                break
            f_up = np.where(up_mask, F, np.inf)
            f_low = np.where(low_mask, F, -np.inf)
            i = int(np.argmin(f_up))
            j = int(np.argmax(f_low))
            b_up, b_low = F[i], F[j]
            if b_low <= b_up + 2 * self.tol:
                self.n_iter_ = it
                break
            eta = K[i, i] + K[j, j] - 2.0 * K[i, j]
            if eta <= 1e-15:
                eta = 1e-15
            # Two-variable subproblem on (i, j).
            ai_old, aj_old = alphas[i], alphas[j]
            yi, yj = y_signed[i], y_signed[j]
            aj_new = aj_old + yj * (F[i] - F[j]) / eta
            if yi == yj:
                lo, hi = max(0.0, ai_old + aj_old - C), min(C, ai_old + aj_old)
            else:
                lo, hi = max(0.0, aj_old - ai_old), min(C, C + aj_old - ai_old)
            aj_new = min(max(aj_new, lo), hi)
            ai_new = ai_old + yi * yj * (aj_old - aj_new)
            # Snap to the box: arithmetic residue (~1e-15) at a bound would
            # keep a point in the working set forever with zero progress.
            snap = 1e-10 * C
            if aj_new < snap:
                aj_new = 0.0
            elif aj_new > C - snap:
                aj_new = C
            if ai_new < snap:
                ai_new = 0.0
            elif ai_new > C - snap:
                ai_new = C
            alphas[i], alphas[j] = ai_new, aj_new
            F += yi * (ai_new - ai_old) * K[i] + yj * (aj_new - aj_old) * K[j]
        else:
            raise ConvergenceError(
                f"SMO did not converge in {self.max_iter} iterations "
                f"(gap {b_low - b_up:.3e}, tol {self.tol})")

        up_mask = ((y_signed > 0) & (alphas < C)) | ((y_signed < 0) & (alphas > 0))
        low_mask = ((y_signed < 0) & (alphas < C)) | ((y_signed > 0) & (alphas > 0))
        b_up = F[up_mask].min() if up_mask.any() else 0.0
        b_low = F[low_mask].max() if low_mask.any() else 0.0
        self.b_ = -0.5 * (b_up + b_low)
        self.X_ = X
        self.y_signed_ = y_signed
        self.alphas_ = alphas
        return self

    def decision_function(self, X):
        K = rbf_kernel(np.asarray(X, dtype=np.float64), self.X_, self.gamma)
        return K @ (self.alphas_ * self.y_signed_) + self.b_

    def predict(self, X):
        return (self.decision_function(X) >= 0).astype(int)

    def dual_objective(self) -> float:
        K = rbf_kernel(self.X_, self.X_, self.gamma)
        ay = self.alphas_ * self.y_signed_
        return float(self.alphas_.sum() - 0.5 * ay @ K @ ay)

    def kkt_violation(self) -> float:
        """Max violation of the KKT conditions (0 at the exact optimum)."""
        margins = self.y_signed_ * self.decision_function(self.X_)
        viol = np.zeros_like(margins)
        free = (self.alphas_ > 1e-8) & (self.alphas_ < self.c - 1e-8)
        at_zero = self.alphas_ <= 1e-8
        at_c = self.alphas_ >= self.c - 1e-8
        viol[free] = np.abs(margins[free] - 1.0)
        viol[at_zero] = np.maximum(0.0, 1.0 - margins[at_zero])
        viol[at_c] = np.maximum(0.0, margins[at_c] - 1.0)
        return float(viol.max()) if viol.size else 0.0

    def to_dict(self):
        return {"c": self.c, "gamma": self.gamma, "b": self.b_,
                "alphas": self.alphas_.tolist(), "X": self.X_.tolist(),
                "y_signed": self.y_signed_.tolist()}

    @classmethod
    def from_dict(cls, d):
        m = cls(c=d["c"], gamma=d["gamma"])
        m.b_ = d["b"]
        m.alphas_ = np.asarray(d["alphas"])
        m.X_ = np.asarray(d["X"])
        m.y_signed_ = np.asarray(d["y_signed"])
        return m


# ---------------------------------------------------------------------------
# Random forest (CART, Gini)

def _gini(counts: np.ndarray) -> float:
    total = counts.sum()
    if total == 0:
        return 0.0
    p = counts / total
    return 1.0 - float((p ** 2).sum())


def _best_split(X, y, feature_ids, min_leaf):
    """Best (feature, threshold, gini) over the candidate features;
    thresholds are midpoints between distinct consecutive sorted values."""
    best = (None, None, np.inf)
    n = y.size
    for f in feature_ids:
        values = X[:, f]
        order = np.argsort(values, kind="stable")
        v_sorted = values[order]
        y_sorted = y[order]
        left_pos = np.cumsum(y_sorted == 1)
        left_n = np.arange(1, n + 1)
        total_pos = left_pos[-1]
        # candidate split after position i (1-based count i on the left)
        for i in range(min_leaf, n - min_leaf + 1):
            if i < n and v_sorted[i - 1] == v_sorted[i]:
                continue
            if i == n:
                continue
            lp = left_pos[i - 1]
            ln = i
            rp = total_pos - lp
            rn = n - i
            g = (ln * _gini(np.array([ln - lp, lp]))
                 + rn * _gini(np.array([rn - rp, rp]))) / n
            if g < best[2]:
                best = (int(f), float((v_sorted[i - 1] + v_sorted[i]) / 2.0), g)
    return best


class _TreeNode:
    __slots__ = ("feature", "threshold", "left", "right", "counts")

    def __init__(self, feature=None, threshold=None, left=None, right=None,
                 counts=None):
        self.feature = feature
        self.threshold = threshold
        self.left = left
        self.right = right
        self.counts = counts

    def to_dict(self):
        if self.feature is None:
            return {"counts": self.counts.tolist()}
        return {"feature": self.feature, "threshold": self.threshold,
                "left": self.left.to_dict(), "right": self.right.to_dict()}

    @classmethod
    def from_dict(cls, d):
        if "counts" in d:
            return cls(counts=np.asarray(d["counts"]))
        return cls(feature=d["feature"], threshold=d["threshold"],
                   left=cls.from_dict(d["left"]), right=cls.from_dict(d["right"]))


class DecisionTree:
    def __init__(self, min_split=2, min_leaf=2, n_candidates=None):
        self.min_split = min_split
        self.min_leaf = min_leaf
        self.n_candidates = n_candidates
        self.root = None

    def fit(self, X, y, rng: np.random.Generator):
        d = X.shape[1]
        n_cand = self.n_candidates or d
        self.root = self._grow(X, y, rng, n_cand)
        return self

    def _grow(self, X, y, rng, n_cand):
        counts = np.bincount(y, minlength=2)
        node = _TreeNode(counts=counts)
        if y.size < self.min_split or counts.max() == y.size:
            return node
        feature_ids = rng.choice(X.shape[1], size=min(n_cand, X.shape[1]),
                                 replace=False)
        f, thr, g = _best_split(X, y, feature_ids, self.min_leaf)
        if f is None:
            return node
        mask = X[:, f] <= thr
        if mask.sum() < self.min_leaf or (~mask).sum() < self.min_leaf:
            return node
        node.feature, node.threshold = f, thr
        node.left = self._grow(X[mask], y[mask], rng, n_cand)
        node.right = self._grow(X[~mask], y[~mask], rng, n_cand)
        return node

    def predict_counts(self, X):
        out = np.zeros((X.shape[0], 2))
        for i, row in enumerate(X):
            node = self.root
            while node.feature is not None:
                node = node.left if row[node.feature] <= node.threshold else node.right
            out[i] = node.counts
        return out


class RandomForest:
    """200-tree Gini CART forest: bootstrap rows, sqrt(d) candidate features
    per split, majority vote; fully seeded (per-tree spawned RNG streams, so
    the vote is reduction-order independent)."""

    def __init__(self, n_trees=200, min_split=2, min_leaf=2, seed=0):
        self.n_trees = n_trees
        self.min_split = min_split
        self.min_leaf = min_leaf
        self.seed = seed
        self.trees_: list[DecisionTree] = []

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=int)
        n, d = X.shape
        n_cand = max(1, int(np.sqrt(d)))
        streams = np.random.SeedSequence(self.seed).spawn(self.n_trees)
        self.trees_ = []
        for ss in streams:
            rng = np.random.default_rng(ss)
            idx = rng.integers(0, n, size=n)
            tree = DecisionTree(self.min_split, self.min_leaf, n_cand)
            tree.fit(X[idx], y[idx], rng)
            self.trees_.append(tree)
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        votes = np.zeros((X.shape[0], 2))
        for tree in self.trees_:
            counts = tree.predict_counts(X)
            votes[np.arange(X.shape[0]), np.argmax(counts, axis=1)] += 1
        return np.argmax(votes, axis=1)

    def to_dict(self):
        return {"n_trees": self.n_trees, "min_split": self.min_split,
                "min_leaf": self.min_leaf, "seed": self.seed,
                "trees": [t.root.to_dict() for t in self.trees_]}

    @classmethod
    def from_dict(cls, d):
        m = cls(d["n_trees"], d["min_split"], d["min_leaf"], d["seed"])
        for td in d["trees"]:
            tree = DecisionTree(d["min_split"], d["min_leaf"])
            tree.root = _TreeNode.from_dict(td)
            m.trees_.append(tree)
        return m


# ---------------------------------------------------------------------------
# MLP (d -> 10 -> 10 -> 2), Adam, full batch

def _relu(x):
    return np.maximum(x, 0.0)


def _softmax(z):
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


class Mlp:
    def __init__(self, hidden=(10, 10), epochs=200, lr=1e-3, seed=0,
                 beta1=0.9, beta2=0.999, eps=1e-8):
        self.hidden = tuple(hidden)
        self.epochs = epochs
        self.lr = lr
        self.seed = seed
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.params_: list[np.ndarray] = []

    def _init_params(self, d):
        rng = np.random.default_rng(self.seed)
        sizes = [d, *self.hidden, 2]
        params = []
        for fan_in, fan_out in zip(sizes, sizes[1:]):
            limit = np.sqrt(6.0 / fan_in)
            params.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
            params.append(np.zeros(fan_out))
        return params

    @staticmethod
    def _forward(params, X):
        acts = [X]
        h = X
        n_layers = len(params) // 2
        for layer in range(n_layers):
            W, b = params[2 * layer], params[2 * layer + 1]
            z = h @ W + b
            h = z if layer == n_layers - 1 else _relu(z)
            acts.append(h)
        return acts

    @classmethod
    def loss_and_grads(cls, params, X, y):
        """Mean cross-entropy and gradients (exposed for the finite
        difference check)."""
        n = X.shape[0]
        acts = cls._forward(params, X)
        probs = _softmax(acts[-1])
        eps = 1e-12
        loss = -float(np.mean(np.log(probs[np.arange(n), y] + eps)))
        delta = probs.copy()
        delta[np.arange(n), y] -= 1.0
        delta /= n
        grads = [None] * len(params)
        n_layers = len(params) // 2
        for layer in reversed(range(n_layers)):
            W = params[2 * layer]
            a_prev = acts[layer]
            grads[2 * layer] = a_prev.T @ delta
            grads[2 * layer + 1] = delta.sum(axis=0)
            if layer > 0:
                delta = (delta @ W.T) * (acts[layer] > 0)
        return loss, grads

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=int)
        params = self._init_params(X.shape[1])
        m = [np.zeros_like(p) for p in params]
        v = [np.zeros_like(p) for p in params]
        for t in range(1, self.epochs + 1):
            loss, grads = self.loss_and_grads(params, X, y)
            if not np.isfinite(loss):
                raise ConvergenceError(f"NaN/inf loss at epoch {t}")
            for i, g in enumerate(grads):
                m[i] = self.beta1 * m[i] + (1 - self.beta1) * g
                v[i] = self.beta2 * v[i] + (1 - self.beta2) * g ** 2
                m_hat = m[i] / (1 - self.beta1 ** t)
                v_hat = v[i] / (1 - self.beta2 ** t)
                params[i] -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)
        self.params_ = params
        return self

    def predict_proba(self, X):
        acts = self._forward(self.params_, np.asarray(X, dtype=np.float64))
        return _softmax(acts[-1])

    def predict(self, X):
        return np.argmax(self.predict_proba(X), axis=1)

    def to_dict(self):
        return {"hidden": list(self.hidden), "epochs": self.epochs, "lr": self.lr,
                "seed": self.seed, "params": [p.tolist() for p in self.params_]}

    @classmethod
    def from_dict(cls, d):
        m = cls(tuple(d["hidden"]), d["epochs"], d["lr"], d["seed"])
        m.params_ = [np.asarray(p) for p in d["params"]]
        return m


# ---------------------------------------------------------------------------
# Linear regression (OLS / ridge), clipped predictions

@dataclass
class LinearModel:
    weights: np.ndarray
    intercept: float

    def predict(self, X):
        return np.asarray(X, dtype=np.float64) @ self.weights + self.intercept

    def predict_clipped(self, X, lo=MMSE_RANGE[0], hi=MMSE_RANGE[1]):
        return np.clip(self.predict(X), lo, hi)

    def to_dict(self):
        return {"weights": self.weights.tolist(), "intercept": self.intercept}

    @classmethod
    def from_dict(cls, d):
        return cls(np.asarray(d["weights"]), d["intercept"])


def fit_ridge(X, y, alpha: float) -> LinearModel:
    """Closed-form ridge with unpenalized intercept via centering:
    w = (Xc'Xc + alpha I)^-1 Xc' yc, b = mean(y) - mean(X) w."""
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    x_mean = X.mean(axis=0)
    y_mean = y.mean()
    xc = X - x_mean
    yc = y - y_mean
    d = X.shape[1]
    gram = xc.T @ xc + alpha * np.eye(d)
    if alpha == 0.0:
        rank = np.linalg.matrix_rank(xc)
        if rank < d:
            raise SingularMatrixError(
                f"X'X is singular (rank {rank} < {d}); "
                "select fewer features or use ridge")
        w = np.linalg.lstsq(xc, yc, rcond=None)[0]
    else:
        w = np.linalg.solve(gram, xc.T @ yc)
    return LinearModel(weights=w, intercept=float(y_mean - x_mean @ w))


def fit_ols(X, y) -> LinearModel:
    return fit_ridge(X, y, alpha=0.0)


# ---------------------------------------------------------------------------
# End-to-end pipeline: impute -> select -> standardize -> model

def fit_medians(X: np.ndarray) -> np.ndarray:
    """Per-column medians ignoring NaN; all-NaN columns impute 0."""
    X = np.asarray(X, dtype=np.float64)
    import warnings
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        med = np.nanmedian(X, axis=0)
    return np.where(np.isnan(med), 0.0, med)


def apply_impute(X: np.ndarray, medians: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64).copy()
    rows, cols = np.nonzero(np.isnan(X))
    X[rows, cols] = medians[cols]
    return X


class ModelPipeline:
    """Imputation, optional top-k selection, optional standardization and
    the model itself, fit jointly on a training split; everything learned
    is stored so prediction-time transforms reuse the training statistics."""

    FORMAT_VERSION = 1

    def __init__(self, spec: ModelSpec, seed: int = 0):
        self.spec = spec
        self.seed = seed
        self.medians_ = None
        self.selector_ = None
        self.scaler_mean_ = None
        self.scaler_std_ = None
        self.model_ = None

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        self.medians_ = fit_medians(X)
        X = apply_impute(X, self.medians_)
        if self.spec.k_features is not None:
            k = min(self.spec.k_features, X.shape[1])
            self.selector_ = SelectorState.fit(X, y, k, self.spec.is_classifier)
            X = X[:, self.selector_.chosen]
        if self.spec.wants_standardize:
            self.scaler_mean_ = X.mean(axis=0)
            std = X.std(axis=0)
            self.scaler_std_ = np.where(std == 0, 1.0, std)
            X = (X - self.scaler_mean_) / self.scaler_std_
        self.model_ = self._fit_model(X, y)
        return self

    def _fit_model(self, X, y):
        s = self.spec
        if s.kind == "nb":
            return GaussianNB(s.nb_smoothing).fit(X, y)
        if s.kind == "svm_rbf":
            return SvmRbf(c=s.c, gamma=s.gamma).fit(X, y)
        if s.kind == "rf":
            return RandomForest(s.n_trees, s.min_split, s.min_leaf,
                                seed=self.seed).fit(X, y)
        if s.kind == "nn":
            return Mlp(s.hidden, s.epochs, s.lr, seed=self.seed).fit(X, y)
        if s.kind == "ols":
            return fit_ols(X, y)
        if s.kind == "ridge":
            return fit_ridge(X, y, s.alpha)
        raise ValueError(s.kind)

    def _transform(self, X):
        X = apply_impute(np.asarray(X, dtype=np.float64), self.medians_)
        if self.selector_ is not None:
            X = X[:, self.selector_.chosen]
        if self.scaler_mean_ is not None:
            X = (X - self.scaler_mean_) / self.scaler_std_
        return X

    def predict(self, X):
        X = self._transform(X)
        if self.spec.is_classifier:
            return np.asarray(self.model_.predict(X), dtype=int)
        return self.model_.predict_clipped(X)

    # -- persistence -------------------------------------------------------

    def to_json(self, registry_hash: str = "") -> str:
        spec_d = asdict(self.spec)
        spec_d["hidden"] = list(spec_d["hidden"])
        payload = {
            "format_version": self.FORMAT_VERSION,
            "registry_hash": registry_hash,
            "spec": spec_d,
            "seed": self.seed,
            "medians": self.medians_.tolist(),
            "selector": None if self.selector_ is None else {
                "scores": self.selector_.scores.tolist(),
                "chosen": self.selector_.chosen.tolist()},
            "scaler_mean": None if self.scaler_mean_ is None
            else self.scaler_mean_.tolist(),
            "scaler_std": None if self.scaler_std_ is None
            else self.scaler_std_.tolist(),
            "model": self.model_.to_dict(),
        }
        return json.dumps(payload)

    @classmethod
    def from_json(cls, text: str) -> tuple["ModelPipeline", str]:
        d = json.loads(text)
        if d.get("format_version") != cls.FORMAT_VERSION:
            raise ValueError(f"unsupported model file version: "
                             f"{d.get('format_version')}")
        spec = ModelSpec(**{**d["spec"], "hidden": tuple(d["spec"]["hidden"])})
        pipe = cls(spec, seed=d["seed"])
        pipe.medians_ = np.asarray(d["medians"])
        if d["selector"] is not None:
            pipe.selector_ = SelectorState(np.asarray(d["selector"]["scores"]),
                                           np.asarray(d["selector"]["chosen"]))
        if d["scaler_mean"] is not None:
            pipe.scaler_mean_ = np.asarray(d["scaler_mean"])
            pipe.scaler_std_ = np.asarray(d["scaler_std"])
        model_d = d["model"]
        if spec.kind == "nb":
            pipe.model_ = GaussianNB.from_dict(model_d)
        elif spec.kind == "svm_rbf":
            pipe.model_ = SvmRbf.from_dict(model_d)
        elif spec.kind == "rf":
            pipe.model_ = RandomForest.from_dict(model_d)
        elif spec.kind == "nn":
            pipe.model_ = Mlp.from_dict(model_d)
        else:
            pipe.model_ = LinearModel.from_dict(model_d)
        return pipe, d.get("registry_hash", "")
