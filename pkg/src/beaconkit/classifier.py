"""Decision-tree classifier and the resampled under-sampling experiment.

The tree is plain greedy CART with Gini impurity, grown deterministically:
candidate thresholds are midpoints between consecutive distinct sorted
feature values, the best split maximizes the weighted impurity decrease, and
ties go to the lowest feature index, then the lowest threshold.  The
experiment balances the classes by random under-sampling, runs stratified
k-fold cross-validation per resample, and aggregates recall/precision/
accuracy over every fold.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence, Union

import numpy as np

__all__ = [
    "Dataset",
    "TreeConfig",
    "Leaf",
    "Split",
    "TreeNode",
    "FoldMetrics",
    "ExperimentReport",
    "EmptyDataset",
    "SingleClass",
    "TooFewRows",
    "gini",
    "best_split",
    "fit",
    "predict",
    "under_sample",
    "cross_validate",
    "experiment",
]


class EmptyDataset(ValueError):
    pass


class SingleClass(ValueError):
    pass


class TooFewRows(ValueError):
    pass


@dataclass(frozen=True)
class Dataset:
    """Numeric feature matrix plus binary labels (True = beacon class)."""

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]

    def __post_init__(self) -> None:
        X = np.asarray(self.X, dtype=np.float64)
        y = np.asarray(self.y, dtype=bool)
        if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
            raise ValueError("X must be (rows, features) aligned with y")
        if X.shape[1] != len(self.feature_names):
            raise ValueError("feature_names must match matrix arity")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.X.shape[0]

    def subset(self, names: Sequence[str]) -> "Dataset":
        idx = [self.feature_names.index(n) for n in names]
        return Dataset(self.X[:, idx], self.y, tuple(names))


@dataclass(frozen=True)
class TreeConfig:
    """Growth limits.  ``seed`` is carried for interface stability; the
    greedy grower itself is deterministic and never draws from it."""

    max_depth: Optional[int] = None
    min_samples_leaf: int = 1
    seed: int = 0


@dataclass(frozen=True)
class Leaf:
    predicted: bool
    counts: tuple[int, int]  # (negatives, positives)


@dataclass(frozen=True)
class Split:
    feature: int
    threshold: float
    left: "TreeNode"   # rows with value <= threshold
    right: "TreeNode"


TreeNode = Union[Leaf, Split]


def gini(counts: tuple[int, int]) -> float:
    """Two-class Gini impurity, 0 for pure nodes up to 0.5 at parity."""
    c0, c1 = counts
    n = c0 + c1
    if n == 0:
        raise ValueError("empty node")
    p0 = c0 / n
    p1 = c1 / n
    return 1.0 - p0 * p0 - p1 * p1


def best_split(X: np.ndarray, y: np.ndarray,
               feature_indices: Optional[Sequence[int]] = None,
               min_leaf: int = 1) -> Optional[tuple[int, float, float]]:
    """Exhaustive best (feature, threshold, impurity_decrease), or None.

    Candidates are midpoints between consecutive distinct sorted values; the
    winner maximizes the weighted Gini decrease with ties broken by lowest
    feature index then lowest threshold.  None when nothing decreases
    impurity or no candidate leaves ``min_leaf`` rows on both sides.
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=bool)
    n = y.shape[0]
    if n < 2:
        return None
    total_pos = int(y.sum())
    parent = gini((n - total_pos, total_pos))
    nf = float(n)

    if feature_indices is None:
        feature_indices = range(X.shape[1])

    best: Optional[tuple[int, float, float]] = None
    best_gain = 0.0
    for f in feature_indices:
        col = X[:, f]
        order = np.argsort(col, kind="stable")
        sv = col[order]
        sy = y[order]
        boundaries = np.nonzero(sv[:-1] != sv[1:])[0]
        if boundaries.size == 0:
            continue
        nl = boundaries + 1
        keep = (nl >= min_leaf) & (n - nl >= min_leaf)
        if not keep.any():
            continue
        boundaries = boundaries[keep]
        nl = nl[keep]
        l1 = np.cumsum(sy)[boundaries]
        l0 = nl - l1
        nr = n - nl
        r1 = total_pos - l1
        r0 = nr - r1

        # Same arithmetic, in the same order, as the scalar gini() above, so
        # equal-gain candidates compare bitwise-equal.
        nlf = nl.astype(np.float64)
        nrf = nr.astype(np.float64)
        p0l = l0 / nlf
        p1l = l1 / nlf
        gl = 1.0 - p0l * p0l - p1l * p1l
        p0r = r0 / nrf
        p1r = r1 / nrf
        gr = 1.0 - p0r * p0r - p1r * p1r
        gains = parent - (nlf / nf) * gl - (nrf / nf) * gr

        i = int(np.argmax(gains))
        gain = float(gains[i])
        if gain > best_gain:
            b = int(boundaries[i])
            best_gain = gain
            best = (int(f), (sv[b] + sv[b + 1]) / 2.0, gain)
    return best


def fit(dataset: Dataset, config: TreeConfig = TreeConfig()) -> TreeNode:
    """Grow a tree.  Leaves predict the majority class; exact ties predict
    the negative (normal-image) class."""
    if len(dataset) == 0:
        raise EmptyDataset("cannot fit on zero rows")
    X, y = dataset.X, dataset.y

    def grow(idx: np.ndarray, depth: int) -> TreeNode:
        sub_y = y[idx]
        pos = int(sub_y.sum())
        neg = idx.size - pos
        if (
            pos == 0
            or neg == 0
            or (config.max_depth is not None and depth >= config.max_depth)
            or idx.size < 2 * config.min_samples_leaf
        ):
            return Leaf(predicted=pos > neg, counts=(neg, pos))
        found = best_split(X[idx], sub_y, min_leaf=config.min_samples_leaf)
        if found is None:
            return Leaf(predicted=pos > neg, counts=(neg, pos))
        feature, threshold, _ = found
        mask = X[idx, feature] <= threshold
        return Split(
            feature=feature,
            threshold=threshold,
            left=grow(idx[mask], depth + 1),
            right=grow(idx[~mask], depth + 1),
        )

    return grow(np.arange(len(dataset)), 0)


def predict(tree: TreeNode, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    out = np.empty(X.shape[0], dtype=bool)

    def walk(node: TreeNode, idx: np.ndarray) -> None:
        if isinstance(node, Leaf):
            out[idx] = node.predicted
            return
        mask = X[idx, node.feature] <= node.threshold
        walk(node.left, idx[mask])
        walk(node.right, idx[~mask])

    walk(tree, np.arange(X.shape[0]))
    return out


def under_sample(dataset: Dataset, seed: int) -> Dataset:
    """Balance the classes: keep every minority row, draw an equally sized
    uniform sample (without replacement) from the majority, then shuffle.
    Deterministic for a given seed."""
    rng = np.random.default_rng(seed)
    pos = np.nonzero(dataset.y)[0]
    neg = np.nonzero(~dataset.y)[0]
    if pos.size == 0 or neg.size == 0:
        raise SingleClass("under-sampling needs both classes")
    minority, majority = (pos, neg) if pos.size <= neg.size else (neg, pos)
    drawn = rng.choice(majority, size=minority.size, replace=False)
    idx = np.concatenate([minority, drawn])
    idx = idx[rng.permutation(idx.size)]
    return Dataset(dataset.X[idx], dataset.y[idx], dataset.feature_names)


class FoldMetrics(NamedTuple):
    recall: float
    precision: float
    accuracy: float


def _evaluate(y_true: np.ndarray, y_pred: np.ndarray) -> FoldMetrics:
    tp = int(np.sum(y_pred & y_true))
    fp = int(np.sum(y_pred & ~y_true))
    fn = int(np.sum(~y_pred & y_true))
    tn = int(np.sum(~y_pred & ~y_true))
    recall = tp / (tp + fn) if tp + fn else 0.0
    precision = tp / (tp + fp) if tp + fp else 0.0
    accuracy = (tp + tn) / y_true.size
    return FoldMetrics(recall, precision, accuracy)


def cross_validate(dataset: Dataset, k: int = 10, seed: int = 0,
                   config: TreeConfig = TreeConfig(),
                   stratified: bool = True) -> list[FoldMetrics]:
    """k-fold CV metrics for the positive (beacon) class, one entry per fold.

    Folds are stratified by default: each class is shuffled and dealt
    round-robin, so every fold sees both classes.
    """
    y = dataset.y
    folds = np.empty(len(dataset), dtype=np.int64)
    rng = np.random.default_rng(seed)
    if stratified:
        for cls in (False, True):
            idx = np.nonzero(y == cls)[0]
            if idx.size < k:
                raise TooFewRows(f"class {cls} has {idx.size} rows, need {k}")
            shuffled = idx[rng.permutation(idx.size)]
            folds[shuffled] = np.arange(shuffled.size) % k
    else:
        if len(dataset) < k:
            raise TooFewRows(f"{len(dataset)} rows, need {k}")
        folds[rng.permutation(len(dataset))] = np.arange(len(dataset)) % k

    metrics = []
    for fold in range(k):
        test = folds == fold
        train = Dataset(dataset.X[~test], y[~test], dataset.feature_names)
        tree = fit(train, config)
        metrics.append(_evaluate(y[test], predict(tree, dataset.X[test])))
    return metrics


@dataclass
class ExperimentReport:
    """Everything needed to reproduce and re-verify one experiment run."""

    seed: int
    resamples: int
    k: int
    feature_subset: Optional[tuple[str, ...]]
    aggregate: str
    tree: dict
    fold_metrics: list[list[FoldMetrics]]  # [resample][fold]
    summary: dict[str, dict[str, float]]
    extras: dict = field(default_factory=dict)

    def to_json(self) -> str:
        payload = {
            "seed": self.seed,
            "resamples": self.resamples,
            "k": self.k,
            "feature_subset": list(self.feature_subset) if self.feature_subset else None,
            "aggregate": self.aggregate,
            "tree": self.tree,
            "summary": self.summary,
            "extras": self.extras,
            "fold_metrics": [
                [[m.recall, m.precision, m.accuracy] for m in resample]
                for resample in self.fold_metrics
            ],
        }
        return json.dumps(payload, sort_keys=True, indent=2) + "\n"

    def to_text(self, title: str = "Classification results") -> str:
        lines = [
            title,
            f"  resamples={self.resamples} folds={self.k} seed={self.seed}",
            f"  features: {', '.join(self.feature_subset) if self.feature_subset else 'all'}",
            "",
            f"  {'':12s}{'Mean':>8s}  {'Std. dev.':>10s}",
        ]
        for name in ("recall", "precision", "accuracy"):
            stats = self.summary[name]
            lines.append(f"  {name.capitalize():12s}{stats['mean']:8.3f}  {stats['std']:10.3f}")
        return "\n".join(lines) + "\n"


def _aggregate(per_fold: list[list[FoldMetrics]], how: str) -> dict[str, dict[str, float]]:
    flat = np.asarray([[m.recall, m.precision, m.accuracy]
                       for resample in per_fold for m in resample])
    if how == "per_resample":
        flat = np.asarray([
            np.mean([[m.recall, m.precision, m.accuracy] for m in resample], axis=0)
            for resample in per_fold
        ])
    elif how != "pooled":
        raise ValueError(f"unknown aggregation {how!r}")
    summary = {}
    for j, name in enumerate(("recall", "precision", "accuracy")):
        summary[name] = {
            "mean": float(np.mean(flat[:, j])),
            "std": float(np.std(flat[:, j])),  # population std, recomputable
        }
    return summary


def experiment(dataset: Dataset, resamples: int = 250, k: int = 10, seed: int = 0,
               config: TreeConfig = TreeConfig(),
               feature_subset: Optional[Sequence[str]] = None,
               aggregate: str = "pooled",
               extras: Optional[dict] = None) -> ExperimentReport:
    """Run the full balanced-resampling experiment.

    Resample ``r`` seeds both its under-sample draw and its fold assignment
    from ``seed + r``, so resamples are independent of each other and the
    whole report is byte-reproducible for a fixed seed.
    """
    working = dataset.subset(feature_subset) if feature_subset else dataset
    per_fold: list[list[FoldMetrics]] = []
    for r in range(1, resamples + 1):
        balanced = under_sample(working, seed + r)
        per_fold.append(cross_validate(balanced, k=k, seed=seed + r, config=config))
    return ExperimentReport(
        seed=seed,
        resamples=resamples,
        k=k,
        feature_subset=tuple(feature_subset) if feature_subset else None,
        aggregate=aggregate,
        tree={"max_depth": config.max_depth, "min_samples_leaf": config.min_samples_leaf},
        fold_metrics=per_fold,
        summary=_aggregate(per_fold, aggregate),
        extras=dict(extras or {}),
    )
