"""Multiclass gradient boosting with second-order, regularised trees.

Each round computes softmax probabilities from the current scores and grows
one regression tree per class on the gradients ``p - y`` and hessians
``p (1 - p)`` of the log-loss. Leaf weights are ``-T(G, alpha) / (H + lambda)``
and are added to the scores after scaling by the learning rate.
"""

from dataclasses import dataclass, field

import numpy as np

from ..features import as_csr
from ._common import resolve_classes, softmax
from .tree import SECOND_ORDER, ColumnIndex, DecisionTree, tree_fit


def softmax_logloss(scores, y):
    """Mean negative log-likelihood of class indices ``y`` under ``scores``."""
    scores = np.atleast_2d(np.asarray(scores, dtype=np.float64))
    z = scores - scores.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(z).sum(axis=1))
    return float(np.mean(log_norm - z[np.arange(len(z)), np.asarray(y)]))


def grad_hess(scores, y):
    """Per-row, per-class gradient and diagonal hessian of the log-loss."""
    p = softmax(np.atleast_2d(scores))
    onehot = np.zeros_like(p)
    onehot[np.arange(len(p)), np.asarray(y)] = 1.0
    return p - onehot, p * (1.0 - p)


@dataclass
class BoostedModel:
    rounds: list
    classes: np.ndarray
    base_score: np.ndarray
    n_features: int
    learning_rate: float
    reg_lambda: float
    reg_alpha: float
    gamma: float
    min_child_weight: float
    max_depth: int
    seed: int = 0
    train_loss: list = field(default_factory=list)

    model_type = "gbt"

    def decision_function(self, X):
        X = as_csr(X, self.n_features)
        scores = np.tile(self.base_score, (X.shape[0], 1))
        for trees in self.rounds:
            for k, tree in enumerate(trees):
                scores[:, k] += self.learning_rate * tree.value[tree.apply(X)]
        return scores

    def predict_proba(self, X):
        return softmax(self.decision_function(X))

    def predict(self, X):
        return self.classes[np.argmax(self.decision_function(X), axis=1)]

    def to_dict(self):
        return {
            "classes": self.classes.tolist(),
            "base_score": self.base_score.tolist(),
            "n_features": self.n_features,
            "learning_rate": self.learning_rate,
            "reg_lambda": self.reg_lambda,
            "reg_alpha": self.reg_alpha,
            "gamma": self.gamma,
            "min_child_weight": self.min_child_weight,
            "max_depth": self.max_depth,
            "seed": self.seed,
            "train_loss": self.train_loss,
            "rounds": [[t.to_dict() for t in trees] for trees in self.rounds],
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            rounds=[[DecisionTree.from_dict(t) for t in trees] for trees in d["rounds"]],
            classes=np.array(d["classes"], dtype=np.int64),
            base_score=np.array(d["base_score"]),
            n_features=d["n_features"],
            learning_rate=d["learning_rate"],
            reg_lambda=d["reg_lambda"],
            reg_alpha=d["reg_alpha"],
            gamma=d["gamma"],
            min_child_weight=d["min_child_weight"],
            max_depth=d["max_depth"],
            seed=d["seed"],
            train_loss=list(d["train_loss"]),
        )


def gbt_fit(matrix, n_rounds=30, learning_rate=0.3, reg_lambda=1.0, reg_alpha=0.0,
            gamma=0.0, min_child_weight=1.0, max_depth=6, seed=0, classes=None,
            base_score=None):
    """Fit a boosted ensemble of ``n_rounds`` x K trees.

    ``base_score`` defaults to the log class frequencies.
    """
    if n_rounds < 0:
        raise ValueError("n_rounds must be >= 0")
    if not 0 < learning_rate <= 1:
        raise ValueError("learning_rate must be in (0, 1]")
    if reg_lambda < 0 or reg_alpha < 0 or gamma < 0:
        raise ValueError("regularisation terms must be >= 0")
    classes, y = resolve_classes(matrix.labels, classes)
    n, n_classes = len(y), len(classes)
    if base_score is None:
        base_score = np.log(np.bincount(y, minlength=n_classes) / n)
    base_score = np.asarray(base_score, dtype=np.float64)
    scores = np.tile(base_score, (n, 1))
    index = ColumnIndex(matrix.X)
    losses = [softmax_logloss(scores, y)]
    rounds = []
    for _ in range(n_rounds):
        g, h = grad_hess(scores, y)
        trees = []
        for k in range(n_classes):
            tree, leaves = tree_fit(matrix, criterion=SECOND_ORDER, grad=g[:, k], hess=h[:, k],
                                    max_depth=max_depth, reg_lambda=reg_lambda,
                                    reg_alpha=reg_alpha, gamma=gamma,
                                    min_child_weight=min_child_weight, index=index,
                                    return_leaves=True)
            scores[:, k] += learning_rate * tree.value[leaves]
            trees.append(tree)
        rounds.append(trees)
        losses.append(softmax_logloss(scores, y))
    return BoostedModel(rounds, classes, base_score, matrix.dim, float(learning_rate),
                        float(reg_lambda), float(reg_alpha), float(gamma),
                        float(min_child_weight), max_depth, seed, losses)


def gbt_predict_proba(model, vec):
    return model.predict_proba(vec)[0]
