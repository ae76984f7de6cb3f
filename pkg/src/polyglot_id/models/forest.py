"""Random forest: bootstrap-sampled gini trees, plurality vote."""

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from ..features import as_csr
from ._common import resolve_classes
from .tree import DecisionTree, tree_fit


@dataclass
class RandomForestModel:
    trees: list
    classes: np.ndarray
    n_features: int
    n_estimators: int
    features_per_split: int
    max_depth: int
    min_samples_leaf: int
    seed: int

    model_type = "rf"

    def votes(self, X):
        """Vote counts, one column per class."""
        X = as_csr(X, self.n_features)
        counts = np.zeros((X.shape[0], len(self.classes)))
        rows = np.arange(X.shape[0])
        for tree in self.trees:
            pick = np.argmax(tree.value[tree.apply(X)], axis=1)
            np.add.at(counts, (rows, pick), 1.0)
        return counts

    def predict(self, X):
        # first maximum = lowest class code on ties
        return self.classes[np.argmax(self.votes(X), axis=1)]

    def predict_proba(self, X):
        return self.votes(X) / len(self.trees)

    def to_dict(self):
        return {
            "classes": self.classes.tolist(),
            "n_features": self.n_features,
            "n_estimators": self.n_estimators,
            "features_per_split": self.features_per_split,
            "max_depth": self.max_depth,
            "min_samples_leaf": self.min_samples_leaf,
            "seed": self.seed,
            "trees": [t.to_dict() for t in self.trees],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            trees=[DecisionTree.from_dict(t) for t in d["trees"]],
            classes=np.array(d["classes"], dtype=np.int64),
            n_features=d["n_features"],
            n_estimators=d["n_estimators"],
            features_per_split=d["features_per_split"],
            max_depth=d["max_depth"],
            min_samples_leaf=d["min_samples_leaf"],
            seed=d["seed"],
        )


def rf_fit(matrix, n_estimators=100, max_depth=None, features_per_split=None,
           min_samples_leaf=1, seed=0, classes=None, workers=1):
    """Fit ``n_estimators`` trees, each on a bootstrap sample of size N.

    ``features_per_split`` defaults to ``ceil(sqrt(V))``. All randomness is
    drawn up front from ``seed`` so the result does not depend on
    ``workers``.
    """
    if n_estimators < 1:
        raise ValueError("n_estimators must be >= 1")
    classes, _ = resolve_classes(matrix.labels, classes)
    n = len(matrix)
    if features_per_split is None:
        features_per_split = math.ceil(math.sqrt(matrix.dim))
    rng = np.random.default_rng(seed)
    plans = [(rng.integers(0, n, size=n), int(rng.integers(2**32)))
             for _ in range(n_estimators)]

    def grow(plan):
        sample, tree_seed = plan
        return tree_fit(matrix.subset(sample), criterion="gini", max_depth=max_depth,
                        min_samples_leaf=min_samples_leaf,
                        features_per_split=features_per_split, seed=tree_seed,
                        classes=classes)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            trees = list(pool.map(grow, plans))
    else:
        trees = [grow(p) for p in plans]
    return RandomForestModel(trees, classes, matrix.dim, n_estimators,
                             features_per_split, max_depth, min_samples_leaf, seed)


def rf_predict(model, vec):
    return int(model.predict(vec)[0])
