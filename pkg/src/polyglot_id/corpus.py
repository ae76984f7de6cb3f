"""Reading Stack Exchange post dumps and building a labelled corpus.

A dump is an XML document of ``<row .../>`` elements. Only question rows
(``PostTypeId="1"``) are kept. Each question is reduced to its title, its
body text with block-level code removed, and the merged code snippet.
"""

import json
import logging
import re
import xml.etree.ElementTree as ET
from dataclasses import asdict, dataclass, field
from html.parser import HTMLParser
from importlib import resources

import numpy as np

from .errors import DumpTruncatedError, RowError
from .languages import LANGUAGES, code_of

logger = logging.getLogger(__name__)

QUESTION_POST_TYPE = 1
DEFAULT_MIN_SNIPPET_CHARS = 10

_WHITESPACE = re.compile(r"\s+")


@dataclass(frozen=True)
class RawPost:
    id: int
    post_type: int
    title: str
    body_markup: str
    tags: tuple


@dataclass(frozen=True)
class Question:
    id: int
    title: str
    body_text: str
    snippet: str
    label: str

    @property
    def label_code(self):
        return code_of(self.label)


@dataclass
class Corpus:
    questions: list
    warnings: list = field(default_factory=list)

    @property
    def counts(self):
        counts = {name: 0 for name in LANGUAGES}
        for q in self.questions:
            counts[q.label] += 1
        return counts

    def __len__(self):
        return len(self.questions)


def parse_tags(raw):
    """Split a dump tag string into an ordered, de-duplicated list.

    Both the ``<a><b>`` and the newer ``|a|b|`` encodings are accepted.
    """
    if raw.startswith("<"):
        parts = re.findall(r"<([^<>]+)>", raw)
    else:
        parts = raw.strip("|").split("|")
    seen = []
    for tag in parts:
        tag = tag.strip().lower()
        if tag and tag not in seen:
            seen.append(tag)
    return tuple(seen)


class _IdBitmap:
    """Set of non-negative post ids, one bit per possible id.

    Memory follows the largest id rather than the number of rows, so a
    stream of fixed-size rows is parsed in bounded memory.
    """

    def __init__(self):
        self._bits = bytearray()

    def __contains__(self, i):
        byte = i >> 3
        return byte < len(self._bits) and bool(self._bits[byte] & (1 << (i & 7)))

    def add(self, i):
        byte = i >> 3
        if byte >= len(self._bits):
            self._bits.extend(bytes(max(byte + 1 - len(self._bits), len(self._bits) // 2)))
        self._bits[byte] |= 1 << (i & 7)


def _row_to_post(attrib, offset, seen_ids):
    def require(name):
        if name not in attrib:
            raise RowError(offset, f"missing attribute {name}", attribute=name)
        return attrib[name]

    try:
        post_id = int(require("Id"))
        post_type = int(require("PostTypeId"))
    except ValueError as exc:
        raise RowError(offset, f"non-integer id field: {exc}") from None
    if post_id < 0:
        raise RowError(offset, f"negative post id {post_id}", attribute="Id")
    if post_type != QUESTION_POST_TYPE:
        return None
    if post_id in seen_ids:
        raise RowError(offset, f"duplicate post id {post_id}", attribute="Id")
    # Attribute values arrive entity-decoded from the XML parser; the body
    # keeps its HTML markup for the snippet extractor.
    post = RawPost(
        id=post_id,
        post_type=post_type,
        title=require("Title"),
        body_markup=require("Body"),
        tags=parse_tags(require("Tags")),
    )
    seen_ids.add(post_id)
    return post


def parse_posts_stream(source, on_error=None):
    """Lazily yield a :class:`RawPost` for every question row in ``source``.

    Args:
        source: path or binary file object holding the dump XML.
        on_error: called with the :class:`RowError` of each malformed row,
            which is then skipped. When ``None`` the error is raised and the
            stream stops.

    Raises:
        DumpTruncatedError: the XML ends early or is not well formed.
    """
    seen_ids = _IdBitmap()
    offset = 0
    root = None
    try:
        for event, elem in ET.iterparse(source, events=("start", "end")):
            if event == "start":
                if root is None:
                    root = elem
                continue
            if elem.tag != "row":
                continue
            try:
                post = _row_to_post(elem.attrib, offset, seen_ids)
            except RowError as err:
                if on_error is None:
                    raise
                on_error(err)
                post = None
            offset += 1
            elem.clear()
            root.clear()
            if post is not None:
                yield post
    except ET.ParseError as exc:
        raise DumpTruncatedError(f"dump is truncated or malformed after row {offset}: {exc}") from None


class _BodySplitter(HTMLParser):
    """Separate ``<pre><code>`` blocks from the surrounding prose."""

    def __init__(self):
        super().__init__(convert_charrefs=True)
        self.text_parts = []
        self.blocks = []
        self._pre_depth = 0
        self._block_code_depth = 0
        self._current = None

    def handle_starttag(self, tag, attrs):
        if tag == "pre":
            self._pre_depth += 1
        elif tag == "code" and self._pre_depth:
            if self._block_code_depth == 0:
                self._current = []
            self._block_code_depth += 1
        if self._block_code_depth == 0:
            self.text_parts.append(" ")

    def handle_endtag(self, tag):
        if tag == "code" and self._block_code_depth:
            self._block_code_depth -= 1
            if self._block_code_depth == 0:
                self.blocks.append("".join(self._current))
                self._current = None
        elif tag == "pre" and self._pre_depth:
            self._pre_depth -= 1
        if self._block_code_depth == 0:
            self.text_parts.append(" ")

    def handle_data(self, data):
        if self._block_code_depth:
            self._current.append(data)
        else:
            self.text_parts.append(data)


def split_body(markup):
    """Return ``(plain_text, code_blocks)`` for a post body."""
    parser = _BodySplitter()
    parser.feed(markup)
    parser.close()
    if parser._current is not None:
        # unclosed <code> at end of body still counts as a block
        parser.blocks.append("".join(parser._current))
    text = _WHITESPACE.sub(" ", "".join(parser.text_parts)).strip()
    return text, parser.blocks


def load_tag_map(path=None):
    """Load the tag -> language mapping, by default the bundled one."""
    if path is None:
        raw = resources.files("polyglot_id.data").joinpath("tag_map.json").read_text("utf-8")
    else:
        with open(path, encoding="utf-8") as fh:
            raw = fh.read()
    tags = json.loads(raw)["tags"]
    for lang in tags.values():
        code_of(lang)
    return tags


def extract_question(post, language_tag_map, min_snippet_chars=DEFAULT_MIN_SNIPPET_CHARS):
    """Reduce a question post to a labelled :class:`Question`, or ``None``.

    The post is dropped when its tags name zero or several languages, when
    it has no code block, or when the merged snippet is shorter than
    ``min_snippet_chars``. Tags missing from the map are ignored.
    """
    languages = {language_tag_map[t] for t in post.tags if t in language_tag_map}
    if len(languages) != 1:
        return None
    body_text, blocks = split_body(post.body_markup)
    if not blocks:
        return None
    snippet = "\n".join(blocks)
    if len(snippet) < min_snippet_chars:
        return None
    return Question(
        id=post.id,
        title=_WHITESPACE.sub(" ", post.title).strip(),
        body_text=body_text,
        snippet=snippet,
        label=languages.pop(),
    )


def build_corpus(posts, language_tag_map, min_snippet_chars=DEFAULT_MIN_SNIPPET_CHARS):
    questions = []
    for post in posts:
        q = extract_question(post, language_tag_map, min_snippet_chars)
        if q is not None:
            questions.append(q)
    return Corpus(questions)


def sample_balanced(corpus, per_language, seed):
    """Keep at most ``per_language`` randomly chosen questions per language.

    Languages with fewer questions keep all of them. The input order of the
    retained questions is preserved. Languages with no questions at all
    produce a warning on the returned corpus.
    """
    if per_language < 1:
        raise ValueError(f"per_language must be >= 1, got {per_language}")
    rng = np.random.default_rng(seed)
    by_lang = {name: [] for name in LANGUAGES}
    for i, q in enumerate(corpus.questions):
        by_lang[q.label].append(i)

    keep = set()
    warnings = list(corpus.warnings)
    for name in LANGUAGES:
        idx = by_lang[name]
        if not idx:
            warnings.append(f"no questions for language {name!r}")
            continue
        if len(idx) <= per_language:
            keep.update(idx)
        else:
            chosen = rng.choice(len(idx), size=per_language, replace=False)
            keep.update(idx[j] for j in chosen)
    questions = [q for i, q in enumerate(corpus.questions) if i in keep]
    return Corpus(questions, warnings)


def write_corpus(corpus, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for q in corpus.questions:
            fh.write(json.dumps(asdict(q), ensure_ascii=False, sort_keys=False))
            fh.write("\n")


def read_corpus(path):
    questions = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            rec = json.loads(line)
            try:
                q = Question(
                    id=int(rec["id"]),
                    title=rec["title"],
                    body_text=rec["body_text"],
                    snippet=rec["snippet"],
                    label=rec["label"],
                )
            except KeyError as exc:
                raise ValueError(f"{path}:{lineno}: missing field {exc}") from None
            code_of(q.label)
            questions.append(q)
    return Corpus(questions)
