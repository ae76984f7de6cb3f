"""Splits, cross-validation, random search, metrics and the snippet-length study."""

import math
from dataclasses import asdict, dataclass, field
from fractions import Fraction

import numpy as np

from .errors import AllTrialsFailed, DimensionMismatch, UndersizedClassError
from .languages import LANGUAGES


def _label_name(code):
    if isinstance(code, str):
        return code
    code = int(code)
    return LANGUAGES[code] if 0 <= code < len(LANGUAGES) else str(code)


# ---------------------------------------------------------------------------
# splitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.8
    seed: int = 0
    stratified: bool = True

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise ValueError("train_fraction must be in (0, 1)")
        if not self.stratified:
            raise ValueError("only stratified splits are supported")


def train_count(n, train_fraction=0.8):
    """Training samples taken from a class of size ``n``.

    Round half up of ``train_fraction * n``, kept within ``[1, n - 1]`` so
    both sides get at least one sample.
    """
    exact = Fraction(str(train_fraction)) * n
    k = math.floor(exact + Fraction(1, 2))
    return min(max(k, 1), n - 1)


def _by_class(labels):
    labels = np.asarray(labels)
    return {c.item(): np.flatnonzero(labels == c) for c in np.unique(labels)}


def holdout_indices(labels, spec=SplitSpec()):
    """Stratified ``(train_idx, test_idx)``; both sorted."""
    rng = np.random.default_rng(spec.seed)
    train, test = [], []
    for c, idx in _by_class(labels).items():
        if len(idx) < 2:
            raise UndersizedClassError(_label_name(c), len(idx), 2)
        perm = rng.permutation(idx)
        k = train_count(len(idx), spec.train_fraction)
        train.append(perm[:k])
        test.append(perm[k:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def stratified_holdout(matrix, spec=SplitSpec()):
    train_idx, test_idx = holdout_indices(matrix.labels, spec)
    return matrix.subset(train_idx), matrix.subset(test_idx)


def stratified_kfold(labels, k=10, seed=0):
    """Partition sample indices into ``k`` folds with per-class sizes
    differing by at most one. Within a class the first ``n % k`` folds get
    the extra sample."""
    if k < 2:
        raise ValueError("k must be >= 2")
    rng = np.random.default_rng(seed)
    folds = [[] for _ in range(k)]
    for c, idx in _by_class(labels).items():
        if len(idx) < k:
            raise UndersizedClassError(_label_name(c), len(idx), k)
        perm = rng.permutation(idx)
        base, extra = divmod(len(idx), k)
        start = 0
        for f in range(k):
            size = base + (1 if f < extra else 0)
            folds[f].append(perm[start:start + size])
            start += size
    return [np.sort(np.concatenate(parts)) for parts in folds]


# ---------------------------------------------------------------------------
# metrics
# ---------------------------------------------------------------------------

@dataclass
class ConfusionMatrix:
    counts: np.ndarray
    labels: np.ndarray

    @property
    def total(self):
        return int(self.counts.sum())

    def percentages(self):
        """Row-normalised view in percent; empty rows stay zero."""
        rows = self.counts.sum(axis=1, keepdims=True)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(rows > 0, 100.0 * self.counts / rows, 0.0)

    def to_csv(self):
        names = [_label_name(c) for c in self.labels]
        lines = ["true\\predicted," + ",".join(names)]
        for name, row in zip(names, self.counts):
            lines.append(name + "," + ",".join(str(int(v)) for v in row))
        return "\n".join(lines) + "\n"


def confusion_matrix(true_labels, predicted_labels, labels=None):
    """Counts of (true, predicted) pairs; rows are true classes."""
    true_labels = np.asarray(true_labels, dtype=np.int64)
    predicted_labels = np.asarray(predicted_labels, dtype=np.int64)
    if len(true_labels) != len(predicted_labels):
        raise DimensionMismatch(
            f"{len(true_labels)} true labels but {len(predicted_labels)} predictions")
    if len(true_labels) == 0:
        raise ValueError("confusion matrix of zero samples")
    if labels is None:
        labels = np.union1d(true_labels, predicted_labels)
    labels = np.asarray(labels, dtype=np.int64)
    pos = {int(c): i for i, c in enumerate(labels)}
    try:
        ti = np.array([pos[int(c)] for c in true_labels])
        pi = np.array([pos[int(c)] for c in predicted_labels])
    except KeyError as exc:
        raise ValueError(f"label {exc} not among {labels.tolist()}") from None
    counts = np.zeros((len(labels), len(labels)), dtype=np.int64)
    np.add.at(counts, (ti, pi), 1)
    return ConfusionMatrix(counts, labels)


def f1_score(precision, recall):
    if precision + recall == 0:
        return 0.0
    return float(2.0 * precision * recall / (precision + recall))


@dataclass
class ClassMetrics:
    label: str
    precision: float
    recall: float
    f1: float
    support: int
    undefined_precision: bool = False
    undefined_recall: bool = False


@dataclass
class MetricsReport:
    per_class: list
    accuracy: float
    macro_precision: float
    macro_recall: float
    macro_f1: float
    total: int
    confusion: ConfusionMatrix = field(repr=False, default=None)

    def to_dict(self):
        d = {
            "accuracy": self.accuracy,
            "macro_precision": self.macro_precision,
            "macro_recall": self.macro_recall,
            "macro_f1": self.macro_f1,
            "total": self.total,
            "per_class": [asdict(c) for c in self.per_class],
        }
        if self.confusion is not None:
            d["confusion"] = {
                "labels": [_label_name(c) for c in self.confusion.labels],
                "counts": self.confusion.counts.tolist(),
            }
        return d

    @classmethod
    def from_dict(cls, d):
        confusion = None
        if d.get("confusion") is not None:
            confusion = ConfusionMatrix(np.array(d["confusion"]["counts"], dtype=np.int64),
                                        np.array(d["confusion"]["labels"]))
        return cls(
            per_class=[ClassMetrics(**c) for c in d["per_class"]],
            accuracy=d["accuracy"],
            macro_precision=d["macro_precision"],
            macro_recall=d["macro_recall"],
            macro_f1=d["macro_f1"],
            total=d["total"],
            confusion=confusion,
        )

    def to_table(self):
        """Plain-text table: one row per language, two-decimal scores."""
        rows = [("Programming", "Precision", "Recall", "F1-score")]
        for c in self.per_class:
            rows.append((c.label, f"{c.precision:.2f}", f"{c.recall:.2f}", f"{c.f1:.2f}"))
        rows.append(("macro avg", f"{self.macro_precision:.2f}", f"{self.macro_recall:.2f}",
                     f"{self.macro_f1:.2f}"))
        widths = [max(len(r[i]) for r in rows) for i in range(4)]
        lines = ["  ".join(cell.ljust(w) if i == 0 else cell.rjust(w)
                           for i, (cell, w) in enumerate(zip(r, widths))).rstrip()
                 for r in rows]
        lines.append(f"accuracy {100 * self.accuracy:.1f}% on {self.total} samples")
        return "\n".join(lines) + "\n"


def metrics_from_confusion(cm):
    counts = np.asarray(cm.counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise ValueError("confusion matrix is empty")
    diag = np.diag(counts)
    col = counts.sum(axis=0)
    row = counts.sum(axis=1)
    per_class = []
    for i, c in enumerate(cm.labels):
        p = diag[i] / col[i] if col[i] > 0 else 0.0
        r = diag[i] / row[i] if row[i] > 0 else 0.0
        per_class.append(ClassMetrics(
            label=_label_name(c), precision=float(p), recall=float(r),
            f1=f1_score(p, r), support=int(row[i]),
            undefined_precision=bool(col[i] == 0), undefined_recall=bool(row[i] == 0)))
    return MetricsReport(
        per_class=per_class,
        accuracy=float(np.trace(counts) / total),
        macro_precision=float(np.mean([c.precision for c in per_class])),
        macro_recall=float(np.mean([c.recall for c in per_class])),
        macro_f1=float(np.mean([c.f1 for c in per_class])),
        total=int(total),
        confusion=cm,
    )


def evaluate(model, matrix, labels=None):
    pred = model.predict(matrix.X)
    if labels is None:
        labels = np.union1d(getattr(model, "classes", []), matrix.labels)
    return metrics_from_confusion(confusion_matrix(matrix.labels, pred, labels))


# ---------------------------------------------------------------------------
# random search
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IntRange:
    low: int
    high: int   # inclusive

    def sample(self, rng):
        return int(rng.integers(self.low, self.high + 1))

    def __contains__(self, v):
        return isinstance(v, (int, np.integer)) and self.low <= v <= self.high


@dataclass(frozen=True)
class RealRange:
    low: float
    high: float

    def sample(self, rng):
        return float(rng.uniform(self.low, self.high))

    def __contains__(self, v):
        return self.low <= v <= self.high


@dataclass(frozen=True)
class LogRealRange:
    low: float
    high: float

    def __post_init__(self):
        if not 0 < self.low <= self.high:
            raise ValueError("log range needs 0 < low <= high")

    def sample(self, rng):
        v = float(math.exp(rng.uniform(math.log(self.low), math.log(self.high))))
        return min(max(v, self.low), self.high)

    def __contains__(self, v):
        return self.low <= v <= self.high


@dataclass(frozen=True)
class Choice:
    options: tuple

    def sample(self, rng):
        v = self.options[int(rng.integers(len(self.options)))]
        return v.item() if hasattr(v, "item") else v

    def __contains__(self, v):
        return v in self.options


def parse_space(spec):
    """Build a search space from plain data, e.g. from a config file.

    ``{"max_depth": {"int": [2, 8]}, "reg_lambda": {"log": [0.01, 10]},
    "learning_rate": {"real": [0.05, 0.5]}, "n_rounds": {"choice": [10, 20]}}``
    """
    kinds = {"int": IntRange, "real": RealRange, "log": LogRealRange}
    space = {}
    for name, rule in spec.items():
        (kind, args), = rule.items()
        space[name] = Choice(tuple(args)) if kind == "choice" else kinds[kind](*args)
    return space


@dataclass
class TrialResult:
    index: int
    params: dict
    fold_accuracies: list = field(default_factory=list)
    mean_accuracy: float = None
    error: str = None

    @property
    def failed(self):
        return self.error is not None


@dataclass
class SearchResult:
    best: TrialResult
    trials: list

    def to_dict(self):
        return {"best": asdict(self.best), "trials": [asdict(t) for t in self.trials]}


def random_search(space, budget, folds, seed, trainer, matrix, fixed_params=None):
    """Sample ``budget`` configurations and score each by mean stratified
    k-fold accuracy.

    Args:
        space: parameter name -> range object (``IntRange``, ``RealRange``,
            ``LogRealRange`` or ``Choice``).
        trainer: ``trainer(train_matrix, params)`` returning a model with a
            ``predict`` method.
        fixed_params: passed to every trial unchanged.

    Returns:
        SearchResult whose ``best`` is the highest mean accuracy, earliest
        trial on ties. Trials whose trainer raised are kept but never win.
    """
    if budget < 1:
        raise ValueError("budget must be >= 1")
    if folds < 2:
        raise ValueError("folds must be >= 2")
    rng = np.random.default_rng(seed)
    names = sorted(space)
    configs = [{name: space[name].sample(rng) for name in names} for _ in range(budget)]
    fold_idx = stratified_kfold(matrix.labels, folds, seed)
    everything = np.arange(len(matrix))

    trials = []
    for i, params in enumerate(configs):
        trial = TrialResult(i, dict(params))
        full = {**(fixed_params or {}), **params}
        try:
            for test in fold_idx:
                train = np.setdiff1d(everything, test)
                model = trainer(matrix.subset(train), full)
                pred = model.predict(matrix.X[test])
                trial.fold_accuracies.append(float(np.mean(pred == matrix.labels[test])))
            trial.mean_accuracy = float(np.mean(trial.fold_accuracies))
        except Exception as exc:  # noqa: BLE001 - a failing trial must not stop the search
            trial.error = f"{type(exc).__name__}: {exc}"
            trial.fold_accuracies = []
        trials.append(trial)

    done = [t for t in trials if not t.failed]
    if not done:
        raise AllTrialsFailed(f"all {budget} trials failed; first error: {trials[0].error}")
    best = max(done, key=lambda t: (t.mean_accuracy, -t.index))
    return SearchResult(best, trials)


# ---------------------------------------------------------------------------
# snippet-length study
# ---------------------------------------------------------------------------

@dataclass
class ThresholdResult:
    threshold: int
    n_samples: int
    metrics: MetricsReport = None
    skipped: str = None

    def to_dict(self):
        return {
            "threshold": self.threshold,
            "n_samples": self.n_samples,
            "skipped": self.skipped,
            "metrics": None if self.metrics is None else self.metrics.to_dict(),
        }


def snippet_length_experiment(corpus, thresholds, model="gbt", model_params=None,
                              min_df=10, seed=0, train_fraction=0.8,
                              code_punct_tokens=False):
    """Retrain and evaluate the code channel on snippets of at least each
    threshold length.

    A threshold is skipped when it leaves any language of the input corpus
    with fewer than two questions.
    """
    from .models import fit_model
    from .pipeline import FeaturePipeline

    thresholds = list(thresholds)
    if any(t < 1 for t in thresholds) or thresholds != sorted(thresholds):
        raise ValueError("thresholds must be ascending and >= 1")
    questions = list(corpus.questions)
    languages = sorted({q.label for q in questions})
    results = []
    for thr in thresholds:
        kept = [q for q in questions if len(q.snippet) >= thr]
        sizes = {lang: 0 for lang in languages}
        for q in kept:
            sizes[q.label] += 1
        short = [lang for lang, n in sizes.items() if n < 2]
        if short:
            results.append(ThresholdResult(
                thr, len(kept), skipped=f"too few questions left for {', '.join(short)}"))
            continue
        labels = [q.label for q in kept]
        train_idx, test_idx = holdout_indices(labels, SplitSpec(train_fraction, seed))
        train_q = [kept[i] for i in train_idx]
        test_q = [kept[i] for i in test_idx]
        try:
            pipe = FeaturePipeline("code", min_df=min_df,
                                   code_punct_tokens=code_punct_tokens).fit(train_q)
        except Exception as exc:  # noqa: BLE001
            results.append(ThresholdResult(thr, len(kept), skipped=str(exc)))
            continue
        train_m, test_m = pipe.transform(train_q), pipe.transform(test_q)
        fitted = fit_model(model, train_m, model_params)
        results.append(ThresholdResult(thr, len(kept), metrics=evaluate(fitted, test_m)))
    return results
