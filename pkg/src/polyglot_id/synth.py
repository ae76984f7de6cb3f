"""Synthetic Q&A posts for tests and demos.

Every language gets a pool of code keywords and a pool of prose terms
(library and tool names). A fixed share of each pool (``overlap``, 20% by
default) is the same for all languages, so any two pools overlap by exactly
that share. Questions mix pool words with generic filler that carries no
language signal; snippets can optionally be cut down to a few generic
characters to mimic uninformative short code.

The corpus is produced as dump rows (HTML bodies, tag strings) and reaches
the classifier only through the regular extraction path.
"""

from dataclasses import dataclass
from xml.sax.saxutils import quoteattr

import numpy as np

from .corpus import Corpus, RawPost, extract_question

DEFAULT_SEED = 2017

DEFAULT_LANGUAGES = (
    "c#", "c++", "go", "haskell", "java", "javascript", "php", "python", "r",
    "ruby", "sql", "swift",
)

# tags used for a share of the posts to exercise version-tag mapping
_VERSION_TAGS = {
    "python": ("python-3.x", "python-2.7"),
    "java": ("java-8",),
    "c++": ("c++11", "c++14"),
}

_FILLER = (
    "how", "can", "get", "the", "value", "from", "this", "function", "when", "trying",
    "to", "use", "it", "error", "works", "but", "not", "with", "my", "code", "problem",
    "result", "list", "file", "data", "string", "need", "help", "want", "return",
    "output", "input", "way", "example", "question", "should", "does", "what", "is",
    "there", "any", "better", "change", "run", "program", "line", "number", "array",
    "object", "call", "method", "new", "simple", "after", "about", "all", "and",
    "studies", "studied", "running", "values", "errors", "returns",
)

_GENERIC_CODE = (
    "if", "else", "return", "for", "while", "print", "value", "result", "data",
    "item", "index", "count", "name", "error", "test", "foo", "bar", "tmp", "len",
    "new", "true", "false", "null", "get", "set", "add",
)

_SYLLABLES = [c + v for c in "bcdfghklmnprstvz" for v in "aeiou"]


@dataclass(frozen=True)
class SynthConfig:
    languages: tuple = DEFAULT_LANGUAGES
    per_language: int = 200
    overlap: float = 0.2
    code_pool_size: int = 40
    text_pool_size: int = 40
    code_signal: float = 0.18
    text_signal: float = 0.12
    short_snippet_fraction: float = 0.0
    noise_rows: bool = False
    seed: int = DEFAULT_SEED


def _make_words(rng, n, taken):
    words = []
    while len(words) < n:
        k = int(rng.integers(2, 4))
        w = "".join(_SYLLABLES[i] for i in rng.integers(0, len(_SYLLABLES), size=k))
        if w not in taken:
            taken.add(w)
            words.append(w)
    return words


def make_pools(rng, languages, pool_size, overlap):
    """Per-language word pools sharing ``round(overlap * pool_size)`` words."""
    taken = set(_FILLER) | set(_GENERIC_CODE)
    n_shared = int(round(overlap * pool_size))
    shared = _make_words(rng, n_shared, taken)
    return {lang: shared + _make_words(rng, pool_size - n_shared, taken) for lang in languages}


def _pick(rng, pool, generic, signal, n):
    out = []
    for _ in range(n):
        src = pool if rng.random() < signal else generic
        out.append(src[int(rng.integers(len(src)))])
    return out


def _camel(a, b):
    return a + b[:1].upper() + b[1:]


def _snippet(rng, pool, cfg):
    lines = []
    for _ in range(int(rng.integers(2, 7))):
        toks = _pick(rng, pool, _GENERIC_CODE, cfg.code_signal, int(rng.integers(3, 8)))
        head, rest = toks[0], toks[1:]
        lines.append(f"{head} = {rest[0]}(" + ", ".join(rest[1:]) + ");")
    return "\n".join(lines)


def _short_snippet(rng):
    a, b = (_GENERIC_CODE[i] for i in rng.integers(0, len(_GENERIC_CODE), size=2))
    return f"{a} = {b}(1);"


def _escape(text):
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


def _prose(rng, pool, cfg, n):
    words = _pick(rng, pool, _FILLER, cfg.text_signal, n)
    if rng.random() < 0.5:
        # an identifier-shaped mention, e.g. a library call
        words.insert(int(rng.integers(len(words) + 1)),
                     _camel(pool[int(rng.integers(len(pool)))], "Helper"))
    return " ".join(words)


def generate_posts(cfg=SynthConfig()):
    """Synthetic question posts (plus optional non-question noise rows)."""
    rng = np.random.default_rng(cfg.seed)
    code_pools = make_pools(rng, cfg.languages, cfg.code_pool_size, cfg.overlap)
    text_pools = make_pools(rng, cfg.languages, cfg.text_pool_size, cfg.overlap)
    plan = [lang for lang in cfg.languages for _ in range(cfg.per_language)]
    order = rng.permutation(len(plan))
    posts = []
    next_id = 1
    for i in order:
        lang = plan[i]
        title = _prose(rng, text_pools[lang], cfg, int(rng.integers(4, 9)))
        body_a = _prose(rng, text_pools[lang], cfg, int(rng.integers(10, 30)))
        body_b = _prose(rng, text_pools[lang], cfg, int(rng.integers(5, 20)))
        inline = _GENERIC_CODE[int(rng.integers(len(_GENERIC_CODE)))]
        if rng.random() < cfg.short_snippet_fraction:
            snippet = _short_snippet(rng)
        else:
            snippet = _snippet(rng, code_pools[lang], cfg)
        body = (f"<p>{_escape(body_a)} <code>{inline}</code></p>\n"
                f"<pre><code>{_escape(snippet)}</code></pre>\n<p>{_escape(body_b)}</p>")
        tag = lang
        if lang in _VERSION_TAGS and rng.random() < 0.3:
            options = _VERSION_TAGS[lang]
            tag = options[int(rng.integers(len(options)))]
        posts.append(RawPost(next_id, 1, title, body, (tag, "debugging")))
        next_id += 1
        if cfg.noise_rows and rng.random() < 0.1:
            # a question tagged with two languages, and an answer row
            other = cfg.languages[int(rng.integers(len(cfg.languages)))]
            if other != lang:
                posts.append(RawPost(next_id, 1, title, body, (lang, other)))
                next_id += 1
            posts.append(RawPost(next_id, 2, "", "<p>try this</p>", ()))
            next_id += 1
    return posts


def generate_corpus(cfg=SynthConfig(), tag_map=None):
    from .corpus import load_tag_map

    tag_map = load_tag_map() if tag_map is None else tag_map
    questions = []
    for post in generate_posts(cfg):
        if post.post_type != 1:
            continue
        q = extract_question(post, tag_map)
        if q is not None:
            questions.append(q)
    return Corpus(questions)


def write_dump(posts, path):
    """Write posts as a dump XML file (``<posts><row .../></posts>``)."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write('<?xml version="1.0" encoding="utf-8"?>\n<posts>\n')
        for p in posts:
            attrs = [f"Id={quoteattr(str(p.id))}", f"PostTypeId={quoteattr(str(p.post_type))}"]
            if p.post_type == 1:
                tags = "".join(f"<{t}>" for t in p.tags)
                attrs += [f"Title={quoteattr(p.title)}", f"Tags={quoteattr(tags)}"]
            attrs.append(f"Body={quoteattr(p.body_markup)}")
            fh.write("  <row " + " ".join(attrs) + " />\n")
        fh.write("</posts>\n")


def two_block_docs(n_docs=200, block_size=10, doc_len=20, seed=DEFAULT_SEED):
    """Documents drawn from two disjoint vocabularies ("sublanguages").

    Terms ``a0..`` only co-occur with each other, as do ``b0..``; even
    documents use block ``a`` and odd ones block ``b``.

    Returns:
        ``(docs, blocks)`` with ``blocks`` mapping each term to ``"a"`` or
        ``"b"``.
    """
    rng = np.random.default_rng(seed)
    vocab = {name: [f"{name}{i}" for i in range(block_size)] for name in ("a", "b")}
    docs = []
    for d in range(n_docs):
        words = vocab["a" if d % 2 == 0 else "b"]
        docs.append([words[i] for i in rng.integers(0, block_size, size=doc_len)])
    blocks = {t: name for name, words in vocab.items() for t in words}
    return docs, blocks
