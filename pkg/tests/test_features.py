import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from polyglot_id.errors import DimensionMismatch, EmptyVocabularyError
from polyglot_id.features import (FeatureMatrix, SparseVector, Vocabulary, as_csr,
                                  combine_channels, fit_vocabulary, read_triplets,
                                  smoothed_idf, tokenize_code, vectorize, vectorize_many,
                                  write_triplets)
from polyglot_id.pipeline import FeaturePipeline

from oracles import tfidf_bruteforce

TERMS = [f"t{i}" for i in range(10)]
small_docs = st.lists(st.lists(st.sampled_from(TERMS), min_size=0, max_size=8),
                      min_size=1, max_size=5)
# at least one term overall, so a min_df=1 vocabulary exists
filled_docs = small_docs.filter(lambda docs: any(docs))


class TestTokenizeCode:
    @pytest.mark.parametrize("snippet,tokens", [
        ("int x = 0;", ["int"]),
        ("SELECT * FROM t1", ["select", "from", "t1"]),
        ("foo_bar(baz)", ["foo_bar", "baz"]),
        ("", []),
    ])
    def test_rule(self, snippet, tokens):
        assert tokenize_code(snippet) == tokens

    def test_punct_mode(self):
        assert tokenize_code("a->b;", punct_tokens=True) == ["-", ">", ";"]


class TestFitVocabulary:
    DOCS = [["a", "b"], ["b", "c"], ["b", "d"]]

    def test_min_df_cutoff(self):
        vocab = fit_vocabulary(self.DOCS, min_df=2)
        assert vocab.terms == ("b",)
        assert vocab.doc_freq.tolist() == [3]

    def test_no_cutoff(self):
        assert fit_vocabulary(self.DOCS, min_df=1).terms == ("a", "b", "c", "d")

    def test_idf_of_ubiquitous_term(self):
        vocab = fit_vocabulary(self.DOCS, min_df=2)
        assert vocab.idf[0] == pytest.approx(1.0, abs=1e-12)

    def test_empty_vocabulary(self):
        with pytest.raises(EmptyVocabularyError):
            fit_vocabulary(self.DOCS, min_df=4)

    def test_preconditions(self):
        with pytest.raises(ValueError):
            fit_vocabulary([], min_df=1)
        with pytest.raises(ValueError):
            fit_vocabulary(self.DOCS, min_df=0)

    def test_roundtrip_and_hash(self):
        vocab = fit_vocabulary(self.DOCS, min_df=1, channel="code")
        again = Vocabulary.from_dict(vocab.to_dict())
        assert again.terms == vocab.terms
        assert again.sha256 == vocab.sha256
        assert [t["term"] for t in vocab.to_dict()["terms"]] == sorted(vocab.terms)

    @given(small_docs, st.integers(1, 5))
    def test_invariants(self, docs, min_df):
        try:
            vocab = fit_vocabulary(docs, min_df)
        except EmptyVocabularyError:
            return
        assert np.all(vocab.doc_freq >= min_df)
        assert list(vocab.terms) == sorted(vocab.terms)
        assert sorted(vocab.term_index.values()) == list(range(len(vocab)))
        assert_allclose(vocab.idf, np.log((1 + len(docs)) / (1 + vocab.doc_freq)) + 1)
        assert np.all(vocab.idf > 0)

    @given(small_docs, st.integers(1, 4))
    def test_raising_min_df_never_grows(self, docs, min_df):
        def size(k):
            try:
                return len(fit_vocabulary(docs, k))
            except EmptyVocabularyError:
                return 0
        assert size(min_df + 1) <= size(min_df)


class TestVectorize:
    def vocab(self, terms, idf):
        return Vocabulary("text", tuple(terms), np.ones(len(terms), dtype=np.int64),
                          np.asarray(idf, dtype=float), 1, 1)

    def test_single_term(self):
        v = vectorize(["b", "b"], self.vocab(["b"], [1.0]))
        assert v.indices.tolist() == [0]
        assert v.weights.tolist() == [1.0]

    def test_two_terms(self):
        v = vectorize(["b", "c"], self.vocab(["b", "c"], [1.0, 1.0]))
        assert_allclose(v.weights, [0.70710678, 0.70710678], atol=1e-8)

    def test_out_of_vocabulary(self):
        v = vectorize(["zzz"], self.vocab(["b"], [1.0]))
        assert len(v.indices) == 0 and v.norm == 0.0

    def test_matches_vectorize_many(self):
        docs = [["a", "b", "b"], ["c"], []]
        vocab = fit_vocabulary(docs, 1)
        X = vectorize_many(docs, vocab)
        for i, d in enumerate(docs):
            assert_allclose(X[i].toarray().ravel(), vectorize(d, vocab).to_dense())

    @given(small_docs, st.integers(1, 3))
    @settings(max_examples=100)
    def test_bruteforce_oracle(self, docs, min_df):
        try:
            vocab = fit_vocabulary(docs, min_df)
        except EmptyVocabularyError:
            return
        terms, rows = tfidf_bruteforce(docs, min_df)
        assert list(vocab.terms) == terms
        for d, expected in zip(docs, rows):
            assert_allclose(vectorize(d, vocab).to_dense(), expected, atol=1e-9, rtol=0)

    @given(filled_docs)
    def test_norm_invariant(self, docs):
        vocab = fit_vocabulary(docs, 1)
        for d in docs:
            v = vectorize(d, vocab)
            assert np.all(np.isfinite(v.weights))
            assert np.all(np.diff(v.indices) > 0)
            assert v.norm == pytest.approx(1.0 if len(v.indices) else 0.0, abs=1e-12)


class TestCombineChannels:
    def test_offset(self):
        text = SparseVector(np.array([1]), np.array([1.0]), 5)
        code = SparseVector(np.array([3]), np.array([1.0]), 7)
        both = combine_channels(text, code)
        assert both.dim == 12
        assert both.indices.tolist() == [1, 8]

    def test_zero_code_channel(self):
        text = SparseVector(np.array([0, 2]), np.array([0.6, 0.8]), 3)
        both = combine_channels(text, SparseVector.zeros(4))
        assert both.indices.tolist() == [0, 2]
        assert both.norm == pytest.approx(1.0)

    def test_norm_sqrt2(self):
        text = SparseVector(np.array([0]), np.array([1.0]), 2)
        code = SparseVector(np.array([0, 1]), np.array([0.6, 0.8]), 2)
        assert combine_channels(text, code).norm == pytest.approx(1.41421356, abs=1e-8)

    @given(filled_docs, filled_docs)
    def test_channel_weights_preserved(self, text_docs, code_docs):
        tv, cv = fit_vocabulary(text_docs, 1), fit_vocabulary(code_docs, 1, "code")
        t, c = vectorize(text_docs[0], tv), vectorize(code_docs[0], cv)
        both = combine_channels(t, c).to_dense()
        assert_array_equal(both[:len(tv)], t.to_dense())
        assert_array_equal(both[len(tv):], c.to_dense())
        nonzero = int(len(t.indices) > 0) + int(len(c.indices) > 0)
        assert np.linalg.norm(both) == pytest.approx(math.sqrt(nonzero), abs=1e-12)


class TestFeatureMatrix:
    def test_length_mismatch(self):
        with pytest.raises(DimensionMismatch):
            FeatureMatrix(np.zeros((2, 3)), np.array([0]))

    def test_as_csr_dimension_check(self):
        with pytest.raises(DimensionMismatch):
            as_csr(SparseVector.zeros(3), dim=4)

    def test_triplets_roundtrip(self, tmp_path):
        X = as_csr(np.array([[0.0, 0.5], [0.25, 0.0], [0.0, 0.0]]))
        write_triplets(X, tmp_path / "m.txt")
        lines = (tmp_path / "m.txt").read_text().splitlines()
        assert lines[0] == "# shape 3 2"
        assert lines[1:] == ["0 1 0.5", "1 0 0.25"]
        assert_array_equal(read_triplets(tmp_path / "m.txt").toarray(), X.toarray())


class TestPipeline:
    def test_channels(self, small_corpus):
        qs = small_corpus.questions
        dims = {}
        for channel in ("text", "code", "combined"):
            pipe = FeaturePipeline(channel, min_df=3).fit(qs)
            m = pipe.transform(qs)
            dims[channel] = m.dim
            assert len(m) == len(qs)
            norms = np.sqrt(np.asarray(m.X.multiply(m.X).sum(axis=1)).ravel())
            expected = {"text": [1.0], "code": [1.0], "combined": [math.sqrt(2)]}[channel]
            assert_allclose(np.unique(np.round(norms, 12)), expected)
        assert dims["combined"] == dims["text"] + dims["code"]

    def test_transform_one_matches_matrix(self, small_corpus):
        qs = small_corpus.questions
        pipe = FeaturePipeline("combined", min_df=3).fit(qs)
        m = pipe.transform(qs[:3])
        for i, q in enumerate(qs[:3]):
            v = pipe.transform_one(q.title, q.body_text, q.snippet)
            assert_allclose(v.to_dense(), m.X[i].toarray().ravel())

    def test_unknown_channel(self):
        with pytest.raises(ValueError):
            FeaturePipeline("audio")

    def test_smoothed_idf(self):
        assert smoothed_idf(3, 3) == pytest.approx(1.0)
        assert smoothed_idf(3, 1) == pytest.approx(math.log(2) + 1)
