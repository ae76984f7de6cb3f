"""Cleaning of title/body prose into feature tokens.

Steps, in order: identifier-shaped tokens are detected on the raw text and
protected; everything that is not a letter or digit becomes a space; the
text is lowercased and split on whitespace; stop words are dropped; the
remaining unprotected tokens are Porter-stemmed. Standalone numbers and
tokens shorter than ``min_token_len`` are discarded.
"""

import hashlib
import re
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources

from .porter import stem_token

__all__ = ["PipelineConfig", "preprocess_text", "stem_token", "load_stopwords",
           "is_entity", "stopwords_sha256"]

_NON_ALNUM = re.compile(r"[\W_]+")
_EDGE_PUNCT = re.compile(r"^[^\w]+|[^\w]+$")

_CAMEL = re.compile(r"[a-z][A-Z]|[A-Z]{2,}[a-z]")
_SNAKE = re.compile(r"[A-Za-z0-9]_[A-Za-z0-9]")
_DOTTED = re.compile(r"^[A-Za-z_]\w+(\.[A-Za-z_]\w+)+$")
_LETTER_DIGIT = re.compile(r"[A-Za-z][0-9]|[0-9][A-Za-z]")
# characters kept inside a protected token; anything else is dropped
_ENTITY_JUNK = re.compile(r"[^\w.]+")


@lru_cache(maxsize=None)
def _bundled_stopwords():
    text = resources.files("polyglot_id.data").joinpath("stopwords.txt").read_text("utf-8")
    return frozenset(w.strip().lower() for w in text.splitlines() if w.strip())


def load_stopwords(path=None):
    """Read a stop-word file (one word per line); the bundled list by default."""
    if path is None:
        return _bundled_stopwords()
    with open(path, encoding="utf-8") as fh:
        return frozenset(w.strip().lower() for w in fh if w.strip())


def stopwords_sha256():
    data = resources.files("polyglot_id.data").joinpath("stopwords.txt").read_bytes()
    return hashlib.sha256(data).hexdigest()


@dataclass(frozen=True)
class PipelineConfig:
    strip_non_alphanumeric: bool = True
    remove_stopwords: bool = True
    retain_entities: bool = True
    stem: bool = True
    min_token_len: int = 2
    stopword_list: frozenset = field(default_factory=_bundled_stopwords)

    def __post_init__(self):
        if self.min_token_len < 1:
            raise ValueError("min_token_len must be >= 1")
        if self.remove_stopwords and not self.stopword_list:
            raise ValueError("stopword_list is empty but remove_stopwords is on")

    def to_dict(self):
        return {
            "strip_non_alphanumeric": self.strip_non_alphanumeric,
            "remove_stopwords": self.remove_stopwords,
            "retain_entities": self.retain_entities,
            "stem": self.stem,
            "min_token_len": self.min_token_len,
            "stopwords_sha256": hashlib.sha256(
                "\n".join(sorted(self.stopword_list)).encode("utf-8")).hexdigest(),
        }

    @classmethod
    def from_dict(cls, d, stopword_list=None):
        return cls(
            strip_non_alphanumeric=d["strip_non_alphanumeric"],
            remove_stopwords=d["remove_stopwords"],
            retain_entities=d["retain_entities"],
            stem=d["stem"],
            min_token_len=d["min_token_len"],
            stopword_list=stopword_list if stopword_list is not None else _bundled_stopwords(),
        )


def is_entity(word):
    """True for identifier-shaped words: camelCase, snake_case, dotted
    paths, or a letter directly next to a digit."""
    return bool(_CAMEL.search(word) or _SNAKE.search(word)
                or _DOTTED.match(word) or _LETTER_DIGIT.search(word))


def _split_plain(chunk, strip):
    if strip:
        return [t for t in _NON_ALNUM.sub(" ", chunk).lower().split() if not t.isdigit()]
    return chunk.lower().split()


def preprocess_text(text, config=None):
    """Turn prose into a list of feature tokens.

    >>> preprocess_text("after about all and from")
    []
    """
    if config is None:
        config = PipelineConfig()
    # (token, protected) pairs
    tokens = []
    for raw in text.split():
        if config.retain_entities:
            core = _EDGE_PUNCT.sub("", raw)
            if core and is_entity(core):
                entity = _ENTITY_JUNK.sub("", core).strip(".").lower()
                if entity:
                    tokens.append((entity, True))
                continue
        tokens.extend((t, False) for t in _split_plain(raw, config.strip_non_alphanumeric))

    stop = config.stopword_list if config.remove_stopwords else frozenset()
    out = []
    for tok, protected in tokens:
        if tok in stop:
            continue
        if not protected:
            if config.stem and tok.isalpha():
                tok = stem_token(tok)
                # a stem can collide with a stop word ("doing" -> "do")
                if tok in stop:
                    continue
            if len(tok) < config.min_token_len:
                continue
        out.append(tok)
    return out
