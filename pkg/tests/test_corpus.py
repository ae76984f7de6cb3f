import io
import json
import tracemalloc

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from polyglot_id.corpus import (Corpus, Question, RawPost, build_corpus, extract_question,
                                parse_posts_stream, parse_tags, read_corpus, sample_balanced,
                                split_body, write_corpus)
from polyglot_id.errors import DumpTruncatedError, RowError
from polyglot_id.languages import LANGUAGES, N_LANGUAGES, UnknownLanguage, code_of, name_of
from polyglot_id.synth import write_dump


def dump_bytes(rows):
    return ('<?xml version="1.0" encoding="utf-8"?>\n<posts>\n' + "\n".join(rows)
            + "\n</posts>\n").encode("utf-8")


def question_row(post_id, tags="&lt;java&gt;", body="&lt;p&gt;hi&lt;/p&gt;", title="t"):
    return (f'<row Id="{post_id}" PostTypeId="1" Title="{title}" Body="{body}" '
            f'Tags="{tags}" />')


class TestLanguages:
    def test_codes_are_alphabetical_and_stable(self):
        assert N_LANGUAGES == 24
        assert list(LANGUAGES) == sorted(LANGUAGES)
        assert code_of("assembly") == 0
        assert code_of("vba") == 23
        assert name_of(code_of("c#")) == "c#"

    def test_unknown_language(self):
        with pytest.raises(UnknownLanguage):
            code_of("cobol")


class TestParseTags:
    def test_angle_brackets(self):
        assert parse_tags("<java><spring><java>") == ("java", "spring")

    def test_pipe_encoding(self):
        assert parse_tags("|python|pandas|") == ("python", "pandas")

    def test_lowercased(self):
        assert parse_tags("<Java>") == ("java",)


class TestParsePostsStream:
    def test_single_question(self):
        posts = list(parse_posts_stream(io.BytesIO(dump_bytes([question_row(1)]))))
        assert len(posts) == 1
        assert posts[0].tags == ("java",)
        assert posts[0].body_markup == "<p>hi</p>"

    def test_answers_skipped(self):
        src = dump_bytes(['<row Id="2" PostTypeId="2" Body="x" />'])
        assert list(parse_posts_stream(io.BytesIO(src))) == []

    def test_missing_body_names_attribute(self):
        src = dump_bytes(['<row Id="3" PostTypeId="1" Title="t" Tags="&lt;c&gt;" />'])
        with pytest.raises(RowError) as info:
            list(parse_posts_stream(io.BytesIO(src)))
        assert info.value.attribute == "Body"
        assert info.value.row_offset == 0
        assert "Body" in str(info.value)

    def test_malformed_row_can_be_skipped(self):
        src = dump_bytes([question_row(1),
                          '<row Id="x" PostTypeId="1" />',
                          question_row(2)])
        errors = []
        posts = list(parse_posts_stream(io.BytesIO(src), on_error=errors.append))
        assert [p.id for p in posts] == [1, 2]
        assert len(errors) == 1 and errors[0].row_offset == 1

    def test_duplicate_id_is_row_error(self):
        src = dump_bytes([question_row(1), question_row(1)])
        with pytest.raises(RowError, match="duplicate"):
            list(parse_posts_stream(io.BytesIO(src)))

    def test_truncated_stream_is_fatal(self):
        src = dump_bytes([question_row(1)])[:-20]
        with pytest.raises(DumpTruncatedError):
            list(parse_posts_stream(io.BytesIO(src)))

    def test_lazy(self):
        src = dump_bytes([question_row(i) for i in range(1, 4)])
        stream = parse_posts_stream(io.BytesIO(src))
        assert next(stream).id == 1

    def test_entities_decoded_once(self):
        body = "&lt;p&gt;a &amp;amp; b&lt;/p&gt;"
        post = next(parse_posts_stream(io.BytesIO(dump_bytes([question_row(1, body=body)]))))
        assert post.body_markup == "<p>a &amp; b</p>"
        text, _ = split_body(post.body_markup)
        assert text == "a & b"


class TestStreamingMemory:
    @staticmethod
    def _peak(path):
        tracemalloc.start()
        n = 0
        with open(path, "rb") as fh:
            for _ in parse_posts_stream(fh):
                n += 1
        _, peak = tracemalloc.get_traced_memory()
        tracemalloc.stop()
        return n, peak

    def test_peak_independent_of_file_size(self, tmp_path):
        body = "<p>" + "word " * 40 + "</p><pre><code>x = y(1);</code></pre>"
        small, large = tmp_path / "small.xml", tmp_path / "large.xml"
        write_dump([RawPost(i, 1, "title", body, ("java",)) for i in range(1, 501)], small)
        write_dump([RawPost(i, 1, "title", body, ("java",)) for i in range(1, 5001)], large)
        n_small, peak_small = self._peak(small)
        n_large, peak_large = self._peak(large)
        assert (n_small, n_large) == (500, 5000)
        # ten times the rows; the id bitmap grows by one bit per id
        assert peak_large < 1.5 * peak_small


class TestSplitBody:
    def test_block_code_separated_inline_kept(self):
        markup = "<p>Use <code>len</code> here</p><pre><code>x = len(a)</code></pre><p>end</p>"
        text, blocks = split_body(markup)
        assert blocks == ["x = len(a)"]
        assert text == "Use len here end"

    def test_code_blocks_in_document_order(self):
        _, blocks = split_body("<pre><code>first</code></pre><pre><code>second</code></pre>")
        assert blocks == ["first", "second"]

    def test_whitespace_collapsed(self):
        text, _ = split_body("<p>a\n\n   b</p>\t<p>c</p>")
        assert text == "a b c"


class TestExtractQuestion:
    BLOCK = "x" * 30

    def post(self, tags, body=None):
        body = body or f"<p>text</p><pre><code>{self.BLOCK}</code></pre>"
        return RawPost(7, 1, "  A   title ", body, tuple(tags))

    def test_two_languages_dropped(self, tag_map):
        assert extract_question(self.post(["java", "python"]), tag_map) is None

    def test_no_language_dropped(self, tag_map):
        assert extract_question(self.post(["spring"]), tag_map) is None

    def test_version_tag_and_merged_blocks(self, tag_map):
        a, b = "a" * 30, "b" * 30
        body = f"<p>x</p><pre><code>{a}</code></pre><p>y</p><pre><code>{b}</code></pre>"
        q = extract_question(self.post(["python-3.x"], body), tag_map)
        assert q.label == "python"
        assert q.snippet == a + "\n" + b
        assert q.body_text == "x y"
        assert q.title == "A title"

    def test_same_language_twice_kept(self, tag_map):
        q = extract_question(self.post(["java", "java-8"]), tag_map)
        assert q is not None and q.label == "java"

    def test_short_snippet_dropped(self, tag_map):
        body = "<pre><code>abcde</code></pre>"
        assert extract_question(self.post(["java"], body), tag_map, 10) is None
        assert extract_question(self.post(["java"], body), tag_map, 5) is not None

    def test_no_code_dropped(self, tag_map):
        body = "<p>only <code>inline code that is long</code></p>"
        assert extract_question(self.post(["java"], body), tag_map) is None

    @pytest.mark.parametrize("tag,lang", [("python-2.7", "python"), ("java-7", "java"),
                                          ("c++11", "c++"), ("c++98", "c++")])
    def test_version_tags(self, tag_map, tag, lang):
        assert extract_question(self.post([tag]), tag_map).label == lang

    @given(st.lists(st.sampled_from(["java", "python", "c", "go", "spring", "numpy", "sql"]),
                    max_size=4, unique=True),
           st.text(alphabet="ab ;", max_size=40))
    @settings(max_examples=60, deadline=None)
    def test_invariants(self, tag_map, tags, code):
        body = f"<pre><code>{code}</code></pre>"
        post = RawPost(1, 1, "t", body, tuple(tags))
        q = extract_question(post, tag_map, 10)
        assert q == extract_question(post, tag_map, 10)
        langs = {tag_map[t] for t in tags if t in tag_map}
        if q is not None:
            assert len(q.snippet) >= 10
            assert langs == {q.label}
        else:
            assert len(langs) != 1 or len(code) < 10


def make_corpus(sizes):
    qs = []
    i = 0
    for lang, n in sizes.items():
        for _ in range(n):
            qs.append(Question(i, "t", "b", "snippet...", lang))
            i += 1
    return Corpus(qs)


class TestSampleBalanced:
    def test_keeps_all_when_fewer_available(self):
        corpus = make_corpus({"coffeescript": 42, "java": 80})
        out = sample_balanced(corpus, 50, seed=0)
        assert out.counts["coffeescript"] == 42
        assert out.counts["java"] == 50

    def test_zero_rejected(self):
        with pytest.raises(ValueError):
            sample_balanced(make_corpus({"java": 3}), 0, seed=0)

    def test_missing_language_warns(self):
        out = sample_balanced(make_corpus({"java": 3}), 2, seed=0)
        assert any("'go'" in w for w in out.warnings)

    def test_order_preserved(self):
        corpus = make_corpus({"java": 30, "go": 30})
        ids = [q.id for q in sample_balanced(corpus, 10, seed=3).questions]
        assert ids == sorted(ids)

    def test_deterministic_bytes(self, tmp_path):
        corpus = make_corpus({"java": 30, "go": 30})
        a, b = tmp_path / "a.jsonl", tmp_path / "b.jsonl"
        write_corpus(sample_balanced(corpus, 10, seed=5), a)
        write_corpus(sample_balanced(corpus, 10, seed=5), b)
        assert a.read_bytes() == b.read_bytes()

    @given(st.dictionaries(st.sampled_from(LANGUAGES), st.integers(0, 25), max_size=6),
           st.integers(1, 20), st.integers(0, 2**16))
    @settings(max_examples=50, deadline=None)
    def test_counts(self, sizes, per_language, seed):
        corpus = make_corpus(sizes)
        out = sample_balanced(corpus, per_language, seed)
        assert sum(out.counts.values()) == len(out.questions)
        for lang in LANGUAGES:
            assert out.counts[lang] == min(per_language, sizes.get(lang, 0))


class TestCorpusFiles:
    def test_roundtrip_and_format(self, tmp_path, small_corpus):
        path = tmp_path / "c.jsonl"
        write_corpus(small_corpus, path)
        raw = path.read_bytes()
        assert b"\r\n" not in raw
        first = json.loads(raw.splitlines()[0])
        assert set(first) == {"id", "title", "body_text", "snippet", "label"}
        assert read_corpus(path).questions == small_corpus.questions

    def test_counts_consistent(self, small_corpus):
        assert sum(small_corpus.counts.values()) == len(small_corpus)
        assert set(small_corpus.counts) == set(LANGUAGES)

    def test_build_corpus_from_dump(self, tmp_path, tag_map):
        body = "<p>a</p><pre><code>print(1234567)</code></pre>"
        posts = [RawPost(1, 1, "t", body, ("python",)),
                 RawPost(2, 1, "t", body, ("python", "java")),
                 RawPost(3, 2, "", "<p>answer</p>", ())]
        write_dump(posts, tmp_path / "d.xml")
        with open(tmp_path / "d.xml", "rb") as fh:
            corpus = build_corpus(parse_posts_stream(fh), tag_map)
        assert [q.id for q in corpus.questions] == [1]


class TestIdBitmap:
    @given(st.lists(st.integers(0, 5000), max_size=200), st.lists(st.integers(0, 6000)))
    def test_matches_builtin_set(self, added, probes):
        from polyglot_id.corpus import _IdBitmap

        bitmap, ref = _IdBitmap(), set()
        for i in added:
            bitmap.add(i)
            ref.add(i)
        for i in probes + added:
            assert (i in bitmap) == (i in ref)
