"""CART regression trees and bootstrap-aggregated forests.

Splits minimise the weighted variance of the two children, scanning thresholds
at midpoints between consecutive distinct values of each candidate feature.
Samples with ``x[feature] <= threshold`` go left.  A forest predicts the plain
arithmetic mean of its trees.

Randomness: tree ``i`` owns the stream ``SplitMix64(derive_seed(seed, i))``.  It
first draws the bootstrap resample (``n`` calls to ``randbelow(n)``), then, if
``feature_fraction < 1``, one feature subset per node in pre-order (left
subtree before right).  Trees share no state, so building them concurrently
gives the same forest as building them in sequence.
"""

from __future__ import annotations

import json
import math
from collections.abc import Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any, NamedTuple

import numpy as np

from .errors import ParseError, ValidationError
from .rng import SplitMix64, derive_seed

FORMAT_VERSION = 1

# splits whose child SSE lie within this fraction of the parent SSE of the best
# one are tied; the lowest feature index, then the lowest threshold, wins
TIE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ForestConfig:
    n_trees: int = 100
    max_depth: int | None = None
    min_samples_leaf: int = 1
    min_samples_split: int = 2
    feature_fraction: float = 1.0
    bootstrap: bool = True
    seed: int = 42

    def __post_init__(self) -> None:
        if self.n_trees < 1:
            raise ValidationError("n_trees must be >= 1")
        if self.max_depth is not None and self.max_depth < 0:
            raise ValidationError("max_depth must be >= 0 or None")
        if self.min_samples_leaf < 1:
            raise ValidationError("min_samples_leaf must be >= 1")
        if self.min_samples_split < 2:
            raise ValidationError("min_samples_split must be >= 2")
        if not 0 < self.feature_fraction <= 1:
            raise ValidationError("feature_fraction must lie in (0, 1]")
        if not 0 <= self.seed < 1 << 64:
            raise ValidationError("seed must be an unsigned 64-bit integer")


class Split(NamedTuple):
    feature: int
    threshold: float
    score: float  # weighted child variance, sum of child SSE / n


def _midpoint(a: float, b: float) -> float:
    m = (a + b) / 2
    # adjacent floats: keep b strictly on the right
    return a if m >= b else m


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    candidate_features: Sequence[int],
    min_samples_leaf: int = 1,
) -> Split | None:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) != len(y):
        raise ValidationError(f"X has {len(X)} rows but y has {len(y)} targets")
    n = len(y)
    if n == 0:
        raise ValidationError("cannot split an empty sample")
    if np.all(y == y[0]):
        return None

    yc = y - y.mean()
    parent_sse = float(np.dot(yc, yc))
    counts = np.arange(1, n, dtype=float)

    scanned: list[tuple[int, np.ndarray, np.ndarray]] = []
    for j in sorted(candidate_features):
        order = np.argsort(X[:, j], kind="stable")
        xs = X[order, j]
        ys = yc[order]
        valid = xs[:-1] < xs[1:]
        valid &= (counts >= min_samples_leaf) & (n - counts >= min_samples_leaf)
        if not valid.any():
            continue
        csum = np.cumsum(ys)[:-1]
        csq = np.cumsum(ys * ys)[:-1]
        total, total_sq = csum[-1] + ys[-1], csq[-1] + ys[-1] ** 2
        left = csq - csum**2 / counts
        right = (total_sq - csq) - (total - csum) ** 2 / (n - counts)
        sse = np.where(valid, np.maximum(left, 0) + np.maximum(right, 0), np.inf)
        scanned.append((j, xs, sse))
    if not scanned:
        return None

    # lowest (feature, threshold) among candidates within tolerance of the optimum
    floor = min(float(sse.min()) for _, _, sse in scanned) + TIE_TOLERANCE * parent_sse
    for j, xs, sse in scanned:
        hits = np.flatnonzero(sse <= floor)
        if hits.size:
            i = int(hits[0])
            return Split(j, _midpoint(xs[i], xs[i + 1]), float(sse[i]) / n)
    return None


class RegressionTree:
    """Array-backed tree.  ``feature[k] == -1`` marks node ``k`` as a leaf."""

    def __init__(self, feature, threshold, left, right, value, n_samples) -> None:
        self.feature = np.asarray(feature, dtype=np.int64)
        self.threshold = np.asarray(threshold, dtype=float)
        self.left = np.asarray(left, dtype=np.int64)
        self.right = np.asarray(right, dtype=np.int64)
        self.value = np.asarray(value, dtype=float)
        self.n_samples = np.asarray(n_samples, dtype=np.int64)

    @property
    def node_count(self) -> int:
        return len(self.feature)

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while True:
            feat = self.feature[node]
            internal = feat >= 0
            if not internal.any():
                return node
            r, nd = rows[internal], node[internal]
            go_left = X[r, feat[internal]] <= self.threshold[nd]
            node[internal] = np.where(go_left, self.left[nd], self.right[nd])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def to_dict(self, k: int = 0) -> dict[str, Any]:
        if self.feature[k] < 0:
            return {"value": float(self.value[k]), "n_samples": int(self.n_samples[k])}
        return {
            "feature": int(self.feature[k]),
            "threshold": float(self.threshold[k]),
            "n_samples": int(self.n_samples[k]),
            "value": float(self.value[k]),
            "left": self.to_dict(int(self.left[k])),
            "right": self.to_dict(int(self.right[k])),
        }

    @classmethod
    def from_dict(cls, root: dict[str, Any]) -> RegressionTree:
        cols: dict[str, list] = {k: [] for k in ("feature", "threshold", "left", "right", "value", "n")}
        stack: list[tuple[dict, int, str]] = [(root, -1, "")]
        while stack:
            node, parent, side = stack.pop()
            k = len(cols["feature"])
            if parent >= 0:
                cols[side][parent] = k
            try:
                leaf = "feature" not in node
                cols["feature"].append(-1 if leaf else int(node["feature"]))
                cols["threshold"].append(0.0 if leaf else float(node["threshold"]))
                cols["value"].append(float(node["value"]))
                cols["n"].append(int(node["n_samples"]))
            except (KeyError, TypeError, ValueError) as exc:
                raise ParseError(f"malformed tree node: {exc}") from None
            cols["left"].append(-1)
            cols["right"].append(-1)
            if not leaf:
                stack.append((node["right"], k, "right"))
                stack.append((node["left"], k, "left"))
        return cls(cols["feature"], cols["threshold"], cols["left"], cols["right"],
                   cols["value"], cols["n"])


def _leaf_value(y: np.ndarray) -> float:
    if np.all(y == y[0]):
        return float(y[0])
    return math.fsum(y.tolist()) / len(y)


def train_tree(
    X: np.ndarray, y: np.ndarray, cfg: ForestConfig, rng: SplitMix64 | None = None
) -> RegressionTree:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise ValidationError("training matrix must be 2-D and non-empty")
    if len(X) != len(y):
        raise ValidationError(f"X has {len(X)} rows but y has {len(y)} targets")
    n_features = X.shape[1]
    k = math.ceil(cfg.feature_fraction * n_features)
    if cfg.feature_fraction < 1 and rng is None:
        raise ValidationError("feature subsampling needs a random stream")

    feature, threshold, left, right, value, count = [], [], [], [], [], []
    # (sample indices, depth, parent node, is-left-child)
    stack: list[tuple[np.ndarray, int, int, bool]] = [(np.arange(len(y)), 0, -1, True)]
    while stack:
        idx, depth, parent, is_left = stack.pop()
        node = len(feature)
        if parent >= 0:
            (left if is_left else right)[parent] = node
        ys = y[idx]
        feature.append(-1)
        threshold.append(0.0)
        left.append(-1)
        right.append(-1)
        value.append(_leaf_value(ys))
        count.append(len(idx))

        if (cfg.max_depth is not None and depth >= cfg.max_depth) or len(idx) < cfg.min_samples_split:
            continue
        if cfg.feature_fraction < 1:
            candidates = sorted(rng.sample(n_features, k))
        else:
            candidates = range(n_features)
        split = best_split(X[idx], ys, candidates, cfg.min_samples_leaf)
        if split is None:
            continue
        feature[node] = split.feature
        threshold[node] = split.threshold
        go_left = X[idx, split.feature] <= split.threshold
        stack.append((idx[~go_left], depth + 1, node, False))
        stack.append((idx[go_left], depth + 1, node, True))

    return RegressionTree(feature, threshold, left, right, value, count)


class RandomForest:
    def __init__(
        self,
        trees: Sequence[RegressionTree],
        config: ForestConfig,
        feature_names: Sequence[str],
        target_name: str,
    ) -> None:
        if len(trees) != config.n_trees:
            raise ValidationError(f"expected {config.n_trees} trees, got {len(trees)}")
        self.trees = list(trees)
        self.config = config
        self.feature_names = list(feature_names)
        self.target_name = target_name

    def _check(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1 and X.size == 0:
            X = X.reshape(0, len(self.feature_names))
        if X.ndim != 2 or X.shape[1] != len(self.feature_names):
            got = X.shape[-1] if X.ndim else 0
            raise ValidationError(
                f"expected {len(self.feature_names)} features "
                f"({', '.join(self.feature_names)}), got {got}"
            )
        return X

    def per_tree(self, X: np.ndarray) -> np.ndarray:
        """Matrix of shape (n_trees, n_rows) holding each tree's prediction."""
        X = self._check(X)
        return np.stack([t.predict(X) for t in self.trees])

    def predict_batch(self, X: np.ndarray) -> np.ndarray:
        X = self._check(X)
        if len(X) == 0:
            return np.zeros(0)
        # correctly rounded sums: a row's prediction does not depend on its batch
        per_tree = self.per_tree(X)
        return np.array([math.fsum(col) for col in per_tree.T.tolist()]) / len(self.trees)

    def predict(self, x: Sequence[float]) -> float:
        x = np.asarray(x, dtype=float)
        if x.ndim != 1:
            raise ValidationError("predict takes a single feature vector")
        return float(self.predict_batch(x.reshape(1, -1))[0])

    def to_dict(self) -> dict[str, Any]:
        return {
            "format_version": FORMAT_VERSION,
            "config": asdict(self.config),
            "feature_names": self.feature_names,
            "target_name": self.target_name,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, doc: dict[str, Any]) -> RandomForest:
        if doc.get("format_version") != FORMAT_VERSION:
            raise ParseError(f"unsupported forest format_version {doc.get('format_version')!r}")
        try:
            config = ForestConfig(**doc["config"])
            trees = [RegressionTree.from_dict(t) for t in doc["trees"]]
            return cls(trees, config, doc["feature_names"], doc["target_name"])
        except (KeyError, TypeError) as exc:
            raise ParseError(f"malformed forest document: {exc}") from None

    def dumps(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @classmethod
    def loads(cls, text: str) -> RandomForest:
        return cls.from_dict(json.loads(text))


def _build_one(X: np.ndarray, y: np.ndarray, cfg: ForestConfig, i: int) -> RegressionTree:
    rng = SplitMix64(derive_seed(cfg.seed, i))
    if cfg.bootstrap:
        n = len(y)
        idx = np.fromiter((rng.randbelow(n) for _ in range(n)), dtype=np.int64, count=n)
        return train_tree(X[idx], y[idx], cfg, rng)
    return train_tree(X, y, cfg, rng)


def train_forest(
    X: np.ndarray,
    y: np.ndarray,
    cfg: ForestConfig,
    feature_names: Sequence[str] | None = None,
    target_name: str = "target",
    n_jobs: int = 1,
) -> RandomForest:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) == 0:
        raise ValidationError("training matrix must be 2-D and non-empty")
    if len(X) != len(y):
        raise ValidationError(f"X has {len(X)} rows but y has {len(y)} targets")
    if feature_names is None:
        feature_names = [f"x{j}" for j in range(X.shape[1])]
    if len(feature_names) != X.shape[1]:
        raise ValidationError("feature_names length does not match X")
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            trees = list(pool.map(lambda i: _build_one(X, y, cfg, i), range(cfg.n_trees)))
    else:
        trees = [_build_one(X, y, cfg, i) for i in range(cfg.n_trees)]
    return RandomForest(trees, cfg, feature_names, target_name)
