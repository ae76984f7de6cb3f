"""Multinomial naive Bayes with Laplace smoothing."""

from dataclasses import dataclass

import numpy as np

from ..features import as_csr
from ._common import resolve_classes, softmax


@dataclass
class NaiveBayesModel:
    classes: np.ndarray
    class_log_prior: np.ndarray
    term_log_prob: np.ndarray
    alpha: float

    model_type = "nb"

    @property
    def n_features(self):
        return self.term_log_prob.shape[1]

    def joint_log_likelihood(self, X):
        X = as_csr(X, self.n_features)
        return np.asarray(X @ self.term_log_prob.T) + self.class_log_prior

    def predict_proba(self, X):
        return softmax(self.joint_log_likelihood(X))

    def predict(self, X):
        return self.classes[np.argmax(self.joint_log_likelihood(X), axis=1)]

    def to_dict(self):
        return {
            "classes": self.classes.tolist(),
            "class_log_prior": self.class_log_prior.tolist(),
            "term_log_prob": self.term_log_prob.tolist(),
            "alpha": self.alpha,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            classes=np.array(d["classes"], dtype=np.int64),
            class_log_prior=np.array(d["class_log_prior"]),
            term_log_prob=np.array(d["term_log_prob"]).reshape(len(d["classes"]), -1),
            alpha=d["alpha"],
        )


def nb_fit(matrix, alpha=1.0, classes=None):
    """Estimate priors from class frequencies and smoothed term probabilities
    ``(weighted count + alpha) / (class total + alpha * V)``."""
    if not alpha > 0:
        raise ValueError(f"alpha must be > 0, got {alpha}")
    if len(matrix) == 0:
        raise ValueError("cannot fit on an empty matrix")
    classes, y = resolve_classes(matrix.labels, classes)
    n_classes = len(classes)
    onehot = np.zeros((len(y), n_classes))
    onehot[np.arange(len(y)), y] = 1.0
    counts = np.asarray(matrix.X.T @ onehot).T          # classes x terms
    smoothed = counts + alpha
    term_log_prob = np.log(smoothed) - np.log(smoothed.sum(axis=1, keepdims=True))
    class_count = onehot.sum(axis=0)
    class_log_prior = np.log(class_count) - np.log(class_count.sum())
    return NaiveBayesModel(classes, class_log_prior, term_log_prob, float(alpha))


def nb_predict_proba(model, vec):
    return model.predict_proba(vec)[0]
