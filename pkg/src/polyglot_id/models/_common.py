import numpy as np

from ..errors import MissingClassError


def softmax(scores):
    """Row-wise softmax with max subtraction, so finite scores never overflow."""
    scores = np.asarray(scores, dtype=np.float64)
    z = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def resolve_classes(labels, classes=None):
    """Sorted class codes and the per-row index into them.

    Every class in an explicit ``classes`` list must occur in ``labels``.
    """
    labels = np.asarray(labels, dtype=np.int64)
    present = np.unique(labels)
    if classes is None:
        classes = present
    else:
        classes = np.unique(np.asarray(classes, dtype=np.int64))
        missing = np.setdiff1d(classes, present)
        if len(missing):
            from ..languages import LANGUAGES
            c = int(missing[0])
            raise MissingClassError(LANGUAGES[c] if 0 <= c < len(LANGUAGES) else c)
        extra = np.setdiff1d(present, classes)
        if len(extra):
            raise ValueError(f"labels {extra.tolist()} are not among the given classes")
    return classes, np.searchsorted(classes, labels)
