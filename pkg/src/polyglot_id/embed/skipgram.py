"""Skip-gram word vectors trained with negative sampling.

Training runs minibatch SGD over (center, context) pairs taken from a
fixed window around each token. Negatives are drawn from the unigram
distribution raised to the 0.75 power, and the learning rate decays
linearly to ``min_lr`` over all epochs. With one process the result is a
pure function of the inputs and the seed.
"""

import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from ..errors import PolyglotError

NOISE_POWER = 0.75


class EmbeddingError(PolyglotError):
    code = "embedding"


@dataclass
class EmbeddingModel:
    terms: tuple
    counts: np.ndarray
    input_vectors: np.ndarray
    output_vectors: np.ndarray
    epoch_loss: list = field(default_factory=list)
    params: dict = field(default_factory=dict)
    term_index: dict = field(init=False, repr=False)

    def __post_init__(self):
        self.term_index = {t: i for i, t in enumerate(self.terms)}

    @property
    def dim(self):
        return self.input_vectors.shape[1]

    def __len__(self):
        return len(self.terms)

    def vector(self, term):
        try:
            return self.input_vectors[self.term_index[term]]
        except KeyError:
            raise KeyError(f"term not in vocabulary: {term!r}") from None

    def to_dict(self):
        return {
            "params": self.params,
            "terms": list(self.terms),
            "counts": self.counts.tolist(),
            "epoch_loss": self.epoch_loss,
            "input_vectors": self.input_vectors.tolist(),
            "output_vectors": self.output_vectors.tolist(),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            terms=tuple(d["terms"]),
            counts=np.array(d["counts"], dtype=np.int64),
            input_vectors=np.array(d["input_vectors"], dtype=np.float64),
            output_vectors=np.array(d["output_vectors"], dtype=np.float64),
            epoch_loss=list(d["epoch_loss"]),
            params=dict(d["params"]),
        )

    @property
    def sha256(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def _log_sigmoid(x):
    return -np.logaddexp(0.0, -x)


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


def context_pairs(docs, term_index, window):
    centers, contexts = [], []
    for doc in docs:
        ids = [term_index[str(t)] for t in doc if str(t) in term_index]
        n = len(ids)
        for i, c in enumerate(ids):
            for j in range(max(0, i - window), min(n, i + window + 1)):
                if j != i:
                    centers.append(c)
                    contexts.append(ids[j])
    return np.array(centers, dtype=np.int64), np.array(contexts, dtype=np.int64)


def train_skipgram(docs, dim=300, window=5, negatives=5, epochs=5, initial_lr=0.025,
                   min_lr=1e-4, min_count=1, batch_size=32, seed=0):
    """Train input/output vectors for every term seen ``min_count`` times.

    Raises:
        EmbeddingError: fewer than two terms survive ``min_count`` or the
            documents yield no context pair.
    """
    if not docs:
        raise EmbeddingError("no documents to train on")
    if dim < 2:
        raise ValueError("dim must be >= 2")
    freq = Counter(str(t) for doc in docs for t in doc)
    terms = tuple(sorted(t for t, c in freq.items() if c >= min_count))
    if len(terms) < 2:
        raise EmbeddingError(f"vocabulary has {len(terms)} term(s); at least 2 are needed")
    term_index = {t: i for i, t in enumerate(terms)}
    counts = np.array([freq[t] for t in terms], dtype=np.int64)
    centers, contexts = context_pairs(docs, term_index, window)
    if len(centers) == 0:
        raise EmbeddingError("documents contain no context pairs")

    rng = np.random.default_rng(seed)
    V = len(terms)
    w_in = (rng.random((V, dim)) - 0.5) / dim
    w_out = np.zeros((V, dim))
    noise = counts.astype(np.float64) ** NOISE_POWER
    noise_cdf = np.cumsum(noise / noise.sum())
    noise_cdf[-1] = 1.0

    n_pairs = len(centers)
    total_steps = epochs * n_pairs
    done = 0
    epoch_loss = []
    for _ in range(epochs):
        order = rng.permutation(n_pairs)
        loss_sum = 0.0
        for start in range(0, n_pairs, batch_size):
            batch = order[start:start + batch_size]
            lr = max(min_lr, initial_lr * (1.0 - done / total_steps))
            c = centers[batch]
            o = contexts[batch]
            neg = np.searchsorted(noise_cdf, rng.random((len(batch), negatives)), side="right")
            neg = np.minimum(neg, V - 1)

            v = w_in[c]                                   # B x d
            targets = np.concatenate([o[:, None], neg], axis=1)   # B x (1+k)
            u = w_out[targets]                            # B x (1+k) x d
            score = np.einsum("bkd,bd->bk", u, v)
            sign = np.ones_like(score)
            sign[:, 1:] = -1.0
            loss_sum -= _log_sigmoid(sign * score).sum()
            # d(-log sigmoid(s * x)) / dx = -s * sigmoid(-s * x)
            coef = -sign * _sigmoid(-sign * score)        # B x (1+k)
            grad_v = np.einsum("bk,bkd->bd", coef, u)
            grad_u = coef[:, :, None] * v[:, None, :]
            np.add.at(w_in, c, -lr * grad_v)
            np.add.at(w_out, targets.ravel(), -lr * grad_u.reshape(-1, dim))
            done += len(batch)
        epoch_loss.append(float(loss_sum / n_pairs))

    params = {"dim": dim, "window": window, "negatives": negatives, "epochs": epochs,
              "initial_lr": initial_lr, "min_lr": min_lr, "min_count": min_count,
              "batch_size": batch_size, "seed": seed}
    return EmbeddingModel(terms, counts, w_in, w_out, epoch_loss, params)


def cosine(a, b):
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def most_similar(model, term, k=10):
    """The ``k`` terms with highest cosine similarity to ``term``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if term not in model.term_index:
        raise KeyError(f"term not in vocabulary: {term!r}")
    W = model.input_vectors
    norms = np.linalg.norm(W, axis=1)
    q = W[model.term_index[term]]
    with np.errstate(divide="ignore", invalid="ignore"):
        sims = np.where(norms > 0, W @ q / (norms * np.linalg.norm(q)), 0.0)
    order = sorted(range(len(model.terms)), key=lambda i: (-sims[i], model.terms[i]))
    out = [(model.terms[i], float(sims[i])) for i in order if model.terms[i] != term]
    return out[:k]


def select_top_frequent(model, fraction=0.03):
    """The ``ceil(fraction * V)`` most frequent terms, ties by term."""
    if not 0 < fraction <= 1:
        raise ValueError("fraction must be in (0, 1]")
    # exact decimal arithmetic: 0.07 * 100 is 7.000000000000001 in floats
    n = math.ceil(Fraction(str(fraction)) * len(model.terms))
    order = sorted(range(len(model.terms)), key=lambda i: (-model.counts[i], model.terms[i]))
    return [model.terms[i] for i in order[:n]]
