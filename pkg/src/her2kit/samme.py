"""Multi-class boosting with stagewise additive modelling and the
multi-class exponential loss: depth-limited axis-aligned decision trees,
round weights alpha = ln((1 - err)/err) + ln(K - 1).

Training is fully deterministic (greedy exact split search, no RNG), so
identical data always yields an identical serialized model.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import FormatError, IntegrityError, ShapeError, TrainingError

#: Round weight assigned when a tree classifies its weighted sample
#: perfectly (err = 0); training stops at that point.
ALPHA_MAX = math.log(1e12)


@dataclass
class _Node:
    feature: int = -1
    threshold: float = 0.0
    left: Optional["_Node"] = None
    right: Optional["_Node"] = None
    prediction: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.left is None


class DecisionTree:
    """Weighted CART-style tree with axis-aligned splits and Gini impurity."""

    def __init__(self, max_depth: int = 2, min_leaf_weight: float = 1e-12):
        self.max_depth = max_depth
        self.min_leaf_weight = min_leaf_weight
        self.root: Optional[_Node] = None
        self.n_classes = 0

    def fit(self, X: np.ndarray, y: np.ndarray, w: np.ndarray) -> "DecisionTree":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        w = np.asarray(w, dtype=np.float64)
        self.n_classes = int(y.max()) + 1
        self.root = self._build(X, y, w, depth=0)
        return self

    def _majority(self, y, w):
        counts = np.bincount(y, weights=w, minlength=self.n_classes)
        return int(np.argmax(counts))

    def _build(self, X, y, w, depth):
        node = _Node(prediction=self._majority(y, w))
        if depth >= self.max_depth or len(np.unique(y)) <= 1:
            return node
        split = self._best_split(X, y, w)
        if split is None:
            return node
        feature, threshold = split
        mask = X[:, feature] <= threshold
        node.feature = feature
        node.threshold = threshold
        node.left = self._build(X[mask], y[mask], w[mask], depth + 1)
        node.right = self._build(X[~mask], y[~mask], w[~mask], depth + 1)
        return node

    def _best_split(self, X, y, w):
        total = w.sum()
        if total <= self.min_leaf_weight:
            return None
        best = None
        best_impurity = np.inf
        onehot = np.zeros((len(y), self.n_classes))
        onehot[np.arange(len(y)), y] = 1.0
        weighted = onehot * w[:, None]
        for f in range(X.shape[1]):
            order = np.argsort(X[:, f], kind="stable")
            xs = X[order, f]
            cum = np.cumsum(weighted[order], axis=0)  # (n, K)
            wl = cum.sum(axis=1)
            wr = total - wl
            # split between consecutive distinct values only
            cut = np.nonzero(xs[:-1] < xs[1:])[0]
            if len(cut) == 0:
                continue
            wl_c, wr_c = wl[cut], wr[cut]
            left_sq = (cum[cut] ** 2).sum(axis=1)
            right_sq = ((cum[-1] - cum[cut]) ** 2).sum(axis=1)
            with np.errstate(divide="ignore", invalid="ignore"):
                gini_l = wl_c - left_sq / wl_c
                gini_r = wr_c - right_sq / wr_c
            impurity = np.where(
                (wl_c > self.min_leaf_weight) & (wr_c > self.min_leaf_weight),
                gini_l + gini_r,
                np.inf,
            )
            i = int(np.argmin(impurity))
            if impurity[i] < best_impurity - 1e-15:
                best_impurity = impurity[i]
                best = (f, float((xs[cut[i]] + xs[cut[i] + 1]) / 2.0))
        return best

    def predict(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        out = np.zeros(len(X), dtype=np.int64)
        self._predict_into(self.root, X, np.arange(len(X)), out)
        return out

    def _predict_into(self, node, X, idx, out):
        if node.is_leaf:
            out[idx] = node.prediction
            return
        mask = X[idx, node.feature] <= node.threshold
        self._predict_into(node.left, X, idx[mask], out)
        self._predict_into(node.right, X, idx[~mask], out)


@dataclass(frozen=True)
class SammeModel:
    n_classes: int
    n_features: int
    trees: tuple
    alphas: tuple
    feature_checksum: str = ""


def train_samme(
    X: np.ndarray,
    y: np.ndarray,
    rounds: int = 100,
    max_depth: int = 2,
    feature_checksum: str = "",
) -> SammeModel:
    """Boost depth-limited trees on reweighted samples.

    Each round keeps the tree with weight alpha = ln((1-err)/err) +
    ln(K-1); rounds whose weighted error reaches (K-1)/K are rejected and
    stop training, and a perfect round gets the capped ALPHA_MAX weight
    and also stops (nothing left to reweight).
    """
    X = np.asarray(X, dtype=np.float64)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or len(X) != len(y):
        raise ShapeError("X must be (n, f) with matching labels")
    classes = np.unique(y)
    if len(classes) < 2:
        raise TrainingError("training requires at least two categories")
    if rounds < 1:
        raise TrainingError("at least one boosting round required")
    k = int(y.max()) + 1
    n = len(y)
    w = np.full(n, 1.0 / n)
    trees: list[DecisionTree] = []
    alphas: list[float] = []
    for _ in range(rounds):
        tree = DecisionTree(max_depth=max_depth).fit(X, y, w)
        miss = tree.predict(X) != y
        err = float(w[miss].sum())
        if err >= (k - 1) / k:
            break  # no better than chance: reject the round and stop
        if err <= 0.0:
            trees.append(tree)
            alphas.append(ALPHA_MAX)
            break
        alpha = math.log((1.0 - err) / err) + math.log(k - 1)
        trees.append(tree)
        alphas.append(alpha)
        w = w * np.exp(alpha * miss)
        w = w / w.sum()
    if not trees:
        raise TrainingError("no boosting round beat chance level")
    return SammeModel(k, X.shape[1], tuple(trees), tuple(alphas), feature_checksum)


def predict_samme(model: SammeModel, X: np.ndarray):
    """Alpha-weighted vote; returns (categories, confidences).

    Confidence is the winning vote mass over the total; ties break toward
    the lower category index.  A single (f,) vector yields scalars.
    """
    arr = np.asarray(X, dtype=np.float64)
    single = arr.ndim == 1
    if single:
        arr = arr[None, :]
    if arr.shape[1] != model.n_features:
        raise ShapeError(
            f"feature vector length {arr.shape[1]} does not match model ({model.n_features})"
        )
    votes = np.zeros((len(arr), model.n_classes))
    for tree, alpha in zip(model.trees, model.alphas):
        pred = tree.predict(arr)
        votes[np.arange(len(arr)), pred] += alpha
    winners = np.argmax(votes, axis=1)  # argmax takes the lowest index on ties
    confidence = votes[np.arange(len(arr)), winners] / votes.sum(axis=1)
    if single:
        return int(winners[0]), float(confidence[0])
    return winners, confidence


# ---------------------------------------------------------------------------
# Serialization: versioned plain text with a feature-ordering checksum.
# ---------------------------------------------------------------------------

_FORMAT_TAG = "her2kit-samme v1"


def _serialize_node(node: _Node, lines: list) -> None:
    if node.is_leaf:
        lines.append(f"L {node.prediction}")
    else:
        lines.append(f"N {node.feature} {node.threshold!r}")
        _serialize_node(node.left, lines)
        _serialize_node(node.right, lines)


def save_model(model: SammeModel, path) -> None:
    lines = [
        _FORMAT_TAG,
        f"checksum {model.feature_checksum}",
        f"classes {model.n_classes}",
        f"features {model.n_features}",
        f"rounds {len(model.trees)}",
    ]
    for tree, alpha in zip(model.trees, model.alphas):
        lines.append(f"round {alpha!r}")
        _serialize_node(tree.root, lines)
    Path(path).write_text("\n".join(lines) + "\n")


def _parse_node(lines: list, pos: int, n_classes: int):
    kind, _, rest = lines[pos].partition(" ")
    if kind == "L":
        node = _Node(prediction=int(rest))
        return node, pos + 1
    if kind != "N":
        raise FormatError(f"bad node line {lines[pos]!r}")
    feature, threshold = rest.split()
    node = _Node(feature=int(feature), threshold=float(threshold))
    node.left, pos = _parse_node(lines, pos + 1, n_classes)
    node.right, pos = _parse_node(lines, pos, n_classes)
    node.prediction = node.left.prediction
    return node, pos


def load_model(path, expected_checksum: Optional[str] = None) -> SammeModel:
    """Load a serialized model, refusing checksum mismatches."""
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != _FORMAT_TAG:
        raise FormatError(f"not a {_FORMAT_TAG} model file: {path}")
    checksum = lines[1].split(" ", 1)[1] if " " in lines[1] else ""
    if expected_checksum is not None and checksum != expected_checksum:
        raise IntegrityError(
            f"model feature checksum {checksum!r} does not match expected {expected_checksum!r}"
        )
    n_classes = int(lines[2].split()[1])
    n_features = int(lines[3].split()[1])
    rounds = int(lines[4].split()[1])
    trees = []
    alphas = []
    pos = 5
    for _ in range(rounds):
        if not lines[pos].startswith("round "):
            raise FormatError(f"expected round header at line {pos + 1}")
        alphas.append(float(lines[pos].split()[1]))
        root, pos = _parse_node(lines, pos + 1, n_classes)
        tree = DecisionTree()
        tree.root = root
        tree.n_classes = n_classes
        trees.append(tree)
    return SammeModel(n_classes, n_features, tuple(trees), tuple(alphas), checksum)


def feature_checksum(names) -> str:
    """Stable checksum of an ordered feature-name list."""
    return hashlib.sha256(",".join(names).encode()).hexdigest()[:16]
