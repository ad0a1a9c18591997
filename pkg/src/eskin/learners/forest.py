"""Random-forest classifier built on from-scratch Gini CART trees.

Trees are plain nested dicts (JSON-friendly for the model bundle): internal
nodes {"feature", "threshold", "left", "right"}, leaves {"counts": per-class
sample counts}. Each tree trains on a seeded bootstrap resample and each
split scans a seeded subset of ceil(sqrt(d)) features, so a fit is a pure
function of (data, config).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int | None = None
    min_leaf: int = 1
    features_per_split: int | None = None   # None -> ceil(sqrt(d))
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValidationError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 1:
            raise ValidationError("max_depth must be >= 1 or None")
        if self.min_leaf < 1:
            raise ValidationError("min_leaf must be >= 1")
        if self.features_per_split is not None and self.features_per_split < 1:
            raise ValidationError("features_per_split must be >= 1 or None")

    def to_dict(self) -> dict:
        return {
            "n_trees": self.n_trees,
            "max_depth": self.max_depth,
            "min_leaf": self.min_leaf,
            "features_per_split": self.features_per_split,
            "bootstrap": self.bootstrap,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ForestConfig":
        return cls(**d)


@dataclass(frozen=True)
class ForestModel:
    trees: tuple[dict, ...]
    n_classes: int
    n_features: int
    config: ForestConfig

    def to_dict(self) -> dict:
        return {
            "trees": list(self.trees),
            "n_classes": self.n_classes,
            "n_features": self.n_features,
            "config": self.config.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ForestModel":
        return cls(
            trees=tuple(d["trees"]),
            n_classes=int(d["n_classes"]),
            n_features=int(d["n_features"]),
            config=ForestConfig.from_dict(d["config"]),
        )


def _check_labels(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.shape[0]:
        raise ValidationError("need x (n, d) and y (n,) with matching n")
    if x.shape[0] == 0:
        raise ValidationError("empty training set")
    if not np.all(np.isfinite(x)):
        raise ValidationError("features must be finite")
    yf = y.astype(float)
    if not np.all(yf == np.floor(yf)) or np.any(yf < 0):
        raise ValidationError("labels must be non-negative integers")
    return x, y.astype(int)


def _best_split(
    x: np.ndarray, y: np.ndarray, feats: np.ndarray, n_classes: int, min_leaf: int
) -> tuple[int, float] | None:
    """Max Gini-gain (feature, threshold) over candidate features, or None.

    Maximising sum_sq_left/n_left + sum_sq_right/n_right is equivalent to
    maximising gain; a split must beat the unsplit node strictly.
    """
    n = y.shape[0]
    onehot = np.zeros((n, n_classes))
    onehot[np.arange(n), y] = 1.0
    total = onehot.sum(axis=0)
    base = float(total @ total) / n
    best_score = base + 1e-12
    best: tuple[int, float] | None = None
    for f in feats:
        order = np.argsort(x[:, f], kind="stable")
        xs = x[order, f]
        cum = np.cumsum(onehot[order], axis=0)
        nl = np.arange(1, n)
        valid = (xs[:-1] < xs[1:]) & (nl >= min_leaf) & (n - nl >= min_leaf)
        if not np.any(valid):
            continue
        left = cum[:-1]
        right = total[None, :] - left
        score = np.full(n - 1, -np.inf)
        score[valid] = (
            np.sum(left[valid] ** 2, axis=1) / nl[valid]
            + np.sum(right[valid] ** 2, axis=1) / (n - nl[valid])
        )
        i = int(np.argmax(score))
        if score[i] > best_score:
            best_score = float(score[i])
            best = (int(f), float(0.5 * (xs[i] + xs[i + 1])))
    return best


def _grow(
    x: np.ndarray,
    y: np.ndarray,
    depth: int,
    rng: np.random.Generator,
    n_classes: int,
    max_depth: int | None,
    min_leaf: int,
    n_feats: int,
) -> dict:
    counts = np.bincount(y, minlength=n_classes)
    n, d = x.shape
    if (
        np.max(counts) == n
        or (max_depth is not None and depth >= max_depth)
        or n < 2 * min_leaf
    ):
        return {"counts": counts.tolist()}
    if n_feats < d:
        feats = np.sort(rng.choice(d, size=n_feats, replace=False))
    else:
        feats = np.arange(d)
    split = _best_split(x, y, feats, n_classes, min_leaf)
    if split is None:
        return {"counts": counts.tolist()}
    f, t = split
    mask = x[:, f] <= t
    return {
        "feature": f,
        "threshold": t,
        "left": _grow(x[mask], y[mask], depth + 1, rng, n_classes, max_depth, min_leaf, n_feats),
        "right": _grow(x[~mask], y[~mask], depth + 1, rng, n_classes, max_depth, min_leaf, n_feats),
    }


def forest_fit(
    x: np.ndarray, y: np.ndarray, config: ForestConfig | None = None
) -> ForestModel:
    config = config or ForestConfig()
    x, y = _check_labels(x, y)
    n, d = x.shape
    n_classes = int(y.max()) + 1
    n_feats = config.features_per_split or math.ceil(math.sqrt(d))
    trees = []
    for t in range(config.n_trees):
        rng = np.random.default_rng(
            np.random.SeedSequence([config.seed, t]).generate_state(1)[0]
        )
        if config.bootstrap:
            idx = rng.integers(0, n, n)
            xt, yt = x[idx], y[idx]
        else:
            xt, yt = x, y
        trees.append(
            _grow(xt, yt, 0, rng, n_classes, config.max_depth, config.min_leaf, n_feats)
        )
    return ForestModel(trees=tuple(trees), n_classes=n_classes, n_features=d, config=config)


def _tree_votes(tree: dict, x: np.ndarray, out: np.ndarray) -> None:
    """Add one vote per row at the leaf's argmax class (in place)."""
    idx = np.arange(x.shape[0])
    stack = [(tree, idx)]
    while stack:
        node, rows = stack.pop()
        if rows.size == 0:
            continue
        if "counts" in node:
            out[rows, int(np.argmax(node["counts"]))] += 1
            continue
        mask = x[rows, node["feature"]] <= node["threshold"]
        stack.append((node["left"], rows[mask]))
        stack.append((node["right"], rows[~mask]))


def forest_predict(model: ForestModel, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """(labels, per-class vote fractions); vote ties go to the smaller class."""
    x = np.atleast_2d(np.asarray(x, dtype=float))
    if x.shape[1] != model.n_features:
        raise ValidationError(
            f"expected {model.n_features} features, got {x.shape[1]}"
        )
    votes = np.zeros((x.shape[0], model.n_classes))
    for tree in model.trees:
        _tree_votes(tree, x, votes)
    labels = np.argmax(votes, axis=1)
    return labels, votes / len(model.trees)
