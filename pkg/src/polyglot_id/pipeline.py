"""Questions to feature matrices for one of the three channels.

``text`` uses the preprocessed title and body, ``code`` the tokenised
snippet, ``combined`` the concatenation of both vectors. Each channel has
its own vocabulary, fitted on that channel's training documents.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .features import (FeatureMatrix, Vocabulary, combine_channels, combine_matrices,
                       fit_vocabulary, tokenize_code, vectorize, vectorize_many)
from .languages import code_of
from .textprep import PipelineConfig, preprocess_text

CHANNEL_CHOICES = ("text", "code", "combined")


def channel_parts(channel):
    if channel not in CHANNEL_CHOICES:
        raise ValueError(f"unknown channel {channel!r}")
    return ("text", "code") if channel == "combined" else (channel,)


@dataclass
class FeaturePipeline:
    channel: str
    text_config: PipelineConfig = field(default_factory=PipelineConfig)
    min_df: int = 10
    code_punct_tokens: bool = False
    vocabs: dict = field(default_factory=dict)

    def __post_init__(self):
        channel_parts(self.channel)

    @property
    def parts(self):
        return channel_parts(self.channel)

    def tokens(self, part, title="", body="", snippet=""):
        if part == "text":
            return preprocess_text(f"{title} {body}", self.text_config)
        return tokenize_code(snippet, self.code_punct_tokens)

    def _docs(self, part, questions):
        return [self.tokens(part, q.title, q.body_text, q.snippet) for q in questions]

    def fit(self, questions):
        self.vocabs = {
            part: fit_vocabulary(self._docs(part, questions), self.min_df, part)
            for part in self.parts
        }
        return self

    @property
    def dims(self):
        return tuple(len(self.vocabs[p]) for p in self.parts)

    def transform(self, questions):
        blocks = [vectorize_many(self._docs(part, questions), self.vocabs[part])
                  for part in self.parts]
        X = combine_matrices(*blocks) if len(blocks) == 2 else sp.csr_matrix(blocks[0])
        labels = np.array([code_of(q.label) for q in questions], dtype=np.int64)
        return FeatureMatrix(X, labels, self.dims)

    def transform_one(self, title="", body="", snippet=""):
        vecs = [vectorize(self.tokens(p, title, body, snippet), self.vocabs[p])
                for p in self.parts]
        return combine_channels(*vecs) if len(vecs) == 2 else vecs[0]

    def to_dict(self):
        return {
            "channel": self.channel,
            "min_df": self.min_df,
            "code_punct_tokens": self.code_punct_tokens,
            "text_config": self.text_config.to_dict(),
        }

    @classmethod
    def from_dict(cls, d, vocabs=None, stopword_list=None):
        return cls(
            channel=d["channel"],
            text_config=PipelineConfig.from_dict(d["text_config"], stopword_list),
            min_df=d["min_df"],
            code_punct_tokens=d["code_punct_tokens"],
            vocabs=dict(vocabs or {}),
        )

    def vocab_hashes(self):
        return {p: self.vocabs[p].sha256 for p in self.parts}


def load_vocab(d):
    return Vocabulary.from_dict(d)
