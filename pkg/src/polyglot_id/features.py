"""Per-channel vocabularies and L2-normalised TF-IDF vectors.

Weights use raw term counts and the smoothed inverse document frequency
``ln((1 + n_docs) / (1 + df)) + 1``; every document vector is scaled to unit
Euclidean length. The combined channel concatenates the text and code
vectors, each keeping its own normalisation.
"""

import hashlib
import json
import re
from collections import Counter
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import DimensionMismatch, EmptyVocabularyError

CHANNELS = ("text", "code")

_CODE_TOKEN = re.compile(r"\w{2,}")
_CODE_TOKEN_PUNCT = re.compile(r"\w{2,}|[^\w\s]")


def tokenize_code(snippet, punct_tokens=False):
    """Lowercased runs of letters, digits and underscore, at least two long.

    With ``punct_tokens`` every single punctuation character is also a token.
    """
    pattern = _CODE_TOKEN_PUNCT if punct_tokens else _CODE_TOKEN
    return pattern.findall(snippet.lower())


def smoothed_idf(n_docs, doc_freq):
    return np.log((1.0 + n_docs) / (1.0 + np.asarray(doc_freq, dtype=np.float64))) + 1.0


@dataclass(frozen=True)
class Vocabulary:
    channel: str
    terms: tuple
    doc_freq: np.ndarray
    idf: np.ndarray
    n_docs: int
    min_df: int
    term_index: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "term_index", {t: i for i, t in enumerate(self.terms)})

    def __len__(self):
        return len(self.terms)

    def to_dict(self):
        return {
            "channel": self.channel,
            "n_docs": self.n_docs,
            "min_df": self.min_df,
            "terms": [
                {"term": t, "df": int(df), "idf": float(idf)}
                for t, df, idf in zip(self.terms, self.doc_freq, self.idf)
            ],
        }

    @classmethod
    def from_dict(cls, d):
        terms = d["terms"]
        return cls(
            channel=d["channel"],
            terms=tuple(t["term"] for t in terms),
            doc_freq=np.array([t["df"] for t in terms], dtype=np.int64),
            idf=np.array([t["idf"] for t in terms], dtype=np.float64),
            n_docs=int(d["n_docs"]),
            min_df=int(d["min_df"]),
        )

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True, ensure_ascii=False)

    @property
    def sha256(self):
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()


def fit_vocabulary(docs, min_df=10, channel="text"):
    """Keep the terms present in at least ``min_df`` of ``docs``.

    Raises:
        EmptyVocabularyError: no term reaches ``min_df``.
    """
    if not docs:
        raise ValueError("cannot fit a vocabulary on zero documents")
    if min_df < 1:
        raise ValueError("min_df must be >= 1")
    if channel not in CHANNELS:
        raise ValueError(f"unknown channel {channel!r}")
    df = Counter()
    for doc in docs:
        df.update(set(doc))
    terms = sorted(t for t, c in df.items() if c >= min_df)
    if not terms:
        raise EmptyVocabularyError(
            f"no {channel} term occurs in {min_df} or more of {len(docs)} documents")
    doc_freq = np.array([df[t] for t in terms], dtype=np.int64)
    return Vocabulary(
        channel=channel,
        terms=tuple(terms),
        doc_freq=doc_freq,
        idf=smoothed_idf(len(docs), doc_freq),
        n_docs=len(docs),
        min_df=min_df,
    )


@dataclass(frozen=True)
class SparseVector:
    indices: np.ndarray
    weights: np.ndarray
    dim: int

    def __post_init__(self):
        if len(self.indices) and int(self.indices[-1]) >= self.dim:
            raise ValueError("index out of range")

    @property
    def norm(self):
        return float(np.sqrt(np.dot(self.weights, self.weights)))

    def to_dense(self):
        out = np.zeros(self.dim)
        out[self.indices] = self.weights
        return out

    def to_csr(self):
        return sp.csr_matrix(
            (self.weights, self.indices, [0, len(self.indices)]), shape=(1, self.dim))

    @classmethod
    def zeros(cls, dim):
        return cls(np.zeros(0, dtype=np.int64), np.zeros(0), dim)


def vectorize(doc, vocab):
    """TF-IDF vector of one token list; unknown terms are ignored."""
    counts = Counter(t for t in doc if t in vocab.term_index)
    if not counts:
        return SparseVector.zeros(len(vocab))
    idx = np.array(sorted(vocab.term_index[t] for t in counts), dtype=np.int64)
    tf = np.array([counts[vocab.terms[i]] for i in idx], dtype=np.float64)
    w = tf * vocab.idf[idx]
    return SparseVector(idx, w / np.linalg.norm(w), len(vocab))


def vectorize_many(docs, vocab):
    """Row-stacked TF-IDF vectors as a CSR matrix."""
    indptr = [0]
    indices = []
    data = []
    for doc in docs:
        v = vectorize(doc, vocab)
        indices.append(v.indices)
        data.append(v.weights)
        indptr.append(indptr[-1] + len(v.indices))
    return sp.csr_matrix(
        (np.concatenate(data) if data else np.zeros(0),
         np.concatenate(indices) if indices else np.zeros(0, dtype=np.int64),
         np.array(indptr)),
        shape=(len(docs), len(vocab)),
    )


def combine_channels(text_vec, code_vec):
    """Concatenate a text and a code vector; code indices shift by the text dim."""
    return SparseVector(
        np.concatenate([text_vec.indices, code_vec.indices + text_vec.dim]).astype(np.int64),
        np.concatenate([text_vec.weights, code_vec.weights]),
        text_vec.dim + code_vec.dim,
    )


@dataclass
class FeatureMatrix:
    """Document vectors (CSR rows) with their integer class labels."""

    X: sp.csr_matrix
    labels: np.ndarray
    channel_dims: tuple = ()

    def __post_init__(self):
        self.X = sp.csr_matrix(self.X)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.X.shape[0] != len(self.labels):
            raise DimensionMismatch(
                f"{self.X.shape[0]} rows but {len(self.labels)} labels")

    def __len__(self):
        return len(self.labels)

    @property
    def dim(self):
        return self.X.shape[1]

    def row(self, i):
        r = self.X.getrow(i)
        order = np.argsort(r.indices)
        return SparseVector(r.indices[order].astype(np.int64), r.data[order], self.dim)

    def subset(self, idx):
        idx = np.asarray(idx, dtype=np.int64)
        return FeatureMatrix(self.X[idx], self.labels[idx], self.channel_dims)


def combine_matrices(text_X, code_X):
    return sp.hstack([text_X, code_X], format="csr")


def as_csr(x, dim=None):
    """Accept a SparseVector, a sequence of them, a CSR matrix or a dense array."""
    if isinstance(x, SparseVector):
        m = x.to_csr()
    elif isinstance(x, (list, tuple)) and x and isinstance(x[0], SparseVector):
        m = sp.vstack([v.to_csr() for v in x], format="csr")
    elif sp.issparse(x):
        m = sp.csr_matrix(x)
    else:
        m = sp.csr_matrix(np.atleast_2d(np.asarray(x, dtype=np.float64)))
    if dim is not None and m.shape[1] != dim:
        raise DimensionMismatch(f"expected dimension {dim}, got {m.shape[1]}")
    return m


def write_triplets(X, path):
    """Sparse matrix as ``row col weight`` lines, preceded by a shape header."""
    coo = sp.coo_matrix(X)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(f"# shape {X.shape[0]} {X.shape[1]}\n")
        for r, c, w in zip(coo.row[order], coo.col[order], coo.data[order]):
            fh.write(f"{r} {c} {float(w)!r}\n")


def read_triplets(path):
    rows, cols, vals = [], [], []
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        shape = (int(header[2]), int(header[3]))
        for line in fh:
            r, c, w = line.split()
            rows.append(int(r))
            cols.append(int(c))
            vals.append(float(w))
    return sp.csr_matrix((vals, (rows, cols)), shape=shape)
