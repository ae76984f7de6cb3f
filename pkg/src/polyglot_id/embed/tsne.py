"""Exact t-SNE down to two dimensions.

Per-point Gaussian bandwidths are found by bisection on the precision so
that each conditional distribution's entropy equals ``log(perplexity)``.
The symmetrised affinities are matched by a Student-t layout using gradient
descent with momentum and per-coordinate adaptive gains. The first
``exaggeration_iters`` iterations multiply the affinities by
``early_exaggeration`` and use momentum 0.5; later ones use 0.8.

The initial layout is ``N(0, 1e-4)`` drawn from ``seed`` in row order, so a
permuted input with the matching permuted ``init`` yields the permuted
output.
"""

from dataclasses import dataclass, field

import numpy as np

from ..errors import PolyglotError

_P_FLOOR = 1e-12


class TSNEError(PolyglotError, ValueError):
    code = "tsne"


@dataclass
class Projection2D:
    coords: np.ndarray
    kl_trace: list = field(default_factory=list)
    terms: tuple = ()

    @property
    def points(self):
        return {t: (float(x), float(y)) for t, (x, y) in zip(self.terms, self.coords)}


def squared_distances(X):
    sq = np.sum(X * X, axis=1)
    D = sq[:, None] + sq[None, :] - 2.0 * X @ X.T
    np.fill_diagonal(D, 0.0)
    return np.maximum(D, 0.0)


def _row_entropy(d, beta):
    """Entropy (nats) and probabilities of exp(-beta * d), d excluding self."""
    logits = -beta * (d - d.min())
    p = np.exp(logits)
    s = p.sum()
    p /= s
    H = np.log(s) - np.sum(p * logits)
    return H, p


def conditional_affinities(D, perplexity, tol=1e-5, max_iter=200):
    """Row-stochastic P with each row's perplexity matched within ``tol``
    (measured on the entropy in nats)."""
    n = D.shape[0]
    target = np.log(perplexity)
    P = np.zeros((n, n))
    betas = np.ones(n)
    for i in range(n):
        d = np.delete(D[i], i)
        beta, lo, hi = 1.0, 0.0, np.inf
        if d.max() > 0:
            beta = 1.0 / np.median(d[d > 0]) if np.any(d > 0) else 1.0
        for _ in range(max_iter):
            H, p = _row_entropy(d, beta)
            diff = H - target
            if abs(diff) < tol:
                break
            if diff > 0:          # too flat: sharpen
                lo = beta
                beta = beta * 2.0 if hi == np.inf else 0.5 * (beta + hi)
            else:
                hi = beta
                beta = 0.5 * (beta + lo)
        P[i, np.arange(n) != i] = p
        betas[i] = beta
    return P, betas


def joint_affinities(X, perplexity, tol=1e-5):
    P, _ = conditional_affinities(squared_distances(np.asarray(X, dtype=np.float64)),
                                  perplexity, tol)
    P = (P + P.T) / (2.0 * P.shape[0])
    return np.maximum(P, _P_FLOOR)


def _student_q(Y):
    num = 1.0 / (1.0 + squared_distances(Y))
    np.fill_diagonal(num, 0.0)
    return num / num.sum(), num


def kl_divergence(P, Y):
    """KL(P || Q) with the diagonal excluded."""
    Q, _ = _student_q(Y)
    mask = ~np.eye(len(P), dtype=bool)
    p, q = P[mask], np.maximum(Q[mask], _P_FLOOR)
    return float(np.sum(p * np.log(p / q)))


def kl_gradient(P, Y):
    """Gradient of :func:`kl_divergence` with respect to the layout ``Y``."""
    Q, num = _student_q(Y)
    W = (P - Q) * num
    np.fill_diagonal(W, 0.0)
    return 4.0 * (np.diag(W.sum(axis=1)) - W) @ Y


def initial_layout(n, seed):
    return np.random.default_rng(seed).normal(0.0, 1e-4, size=(n, 2))


def tsne_project(vectors, perplexity=30.0, iterations=1000, learning_rate=200.0,
                 early_exaggeration=12.0, exaggeration_iters=250, seed=0, init=None,
                 record_every=50, terms=()):
    """Project ``vectors`` (N x dim) to N x 2.

    Raises:
        TSNEError: fewer than ``3 * perplexity + 1`` points, or all points
            identical.
    """
    X = np.asarray(vectors, dtype=np.float64)
    n = X.shape[0]
    need = int(np.floor(3 * perplexity)) + 1
    if n < need:
        raise TSNEError(f"perplexity {perplexity} needs at least {need} points, got {n}")
    if np.all(X == X[0]):
        raise TSNEError("all points are identical")

    P = joint_affinities(X, perplexity)
    Y = initial_layout(n, seed) if init is None else np.array(init, dtype=np.float64)
    if Y.shape != (n, 2):
        raise ValueError(f"init must have shape ({n}, 2)")
    update = np.zeros_like(Y)
    gains = np.ones_like(Y)
    trace = [kl_divergence(P, Y)]
    for it in range(iterations):
        exaggerating = it < exaggeration_iters
        momentum = 0.5 if exaggerating else 0.8
        grad = kl_gradient(P * early_exaggeration if exaggerating else P, Y)
        same_sign = np.sign(grad) == np.sign(update)
        gains = np.where(same_sign, gains * 0.8, gains + 0.2)
        gains = np.maximum(gains, 0.01)
        update = momentum * update - learning_rate * gains * grad
        Y = Y + update
        Y = Y - Y.mean(axis=0)
        if (it + 1) % record_every == 0 or it + 1 == iterations:
            trace.append(kl_divergence(P, Y))
    return Projection2D(Y, trace, tuple(terms))
