class PolyglotError(Exception):
    """Base class for errors raised by this package.

    ``code`` is a short stable slug used by the CLI for machine-parsable
    error lines.
    """

    code = "error"


class RowError(PolyglotError):
    """A single dump row could not be turned into a post.

    Recoverable: the parser can skip the row and continue.
    """

    code = "malformed-row"

    def __init__(self, row_offset, message, attribute=None):
        super().__init__(f"row {row_offset}: {message}")
        self.row_offset = row_offset
        self.attribute = attribute


class DumpTruncatedError(PolyglotError):
    code = "truncated-dump"


class EmptyVocabularyError(PolyglotError):
    code = "empty-vocabulary"


class DimensionMismatch(PolyglotError, ValueError):
    code = "dimension-mismatch"


class UndersizedClassError(PolyglotError, ValueError):
    code = "undersized-class"

    def __init__(self, label, size, required):
        super().__init__(f"class {label!r} has {size} sample(s), needs at least {required}")
        self.label = label


class MissingClassError(PolyglotError, ValueError):
    code = "missing-class"

    def __init__(self, label):
        super().__init__(f"class {label!r} has no training samples")
        self.label = label


class VocabularyMismatch(PolyglotError):
    code = "vocab-hash-mismatch"


class MissingFieldError(PolyglotError, ValueError):
    code = "missing-field"


class AllTrialsFailed(PolyglotError):
    code = "all-trials-failed"
