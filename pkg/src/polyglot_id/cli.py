"""Command-line interface.

Every command is a batch job that reads its inputs, writes its artifacts and
exits. Settings come from command-line flags, then an optional ``--config``
file (JSON or YAML), then built-in defaults. The effective settings, the seed
and the SHA-256 of every input file are written into each artifact. JSON
artifacts use sorted keys and carry no timestamps, so equal inputs give
byte-identical files.

Failures print one line, ``error: <code>: <message>``, to stderr and exit
with status 1.
"""

import csv
import hashlib
import io
import json
import os
import sys
from pathlib import Path

import click
import numpy as np
import yaml
from click.core import ParameterSource

from . import __version__
from .corpus import (build_corpus, load_tag_map, parse_posts_stream, read_corpus,
                     sample_balanced, write_corpus)
from .embed import EmbeddingModel, most_similar, select_top_frequent, train_skipgram, tsne_project
from .errors import MissingFieldError, PolyglotError, VocabularyMismatch
from .eval import (MetricsReport, SplitSpec, evaluate, holdout_indices, parse_space,
                   random_search, snippet_length_experiment)
from .features import tokenize_code
from .languages import name_of
from .models import fit_model, model_from_dict
from .pipeline import CHANNEL_CHOICES, FeaturePipeline, load_vocab
from .synth import DEFAULT_SEED, SynthConfig, generate_posts, write_dump
from .textprep import PipelineConfig, preprocess_text

FORMAT_VERSION = 1
MODEL_CHOICES = ("nb", "rf", "gbt")
WORKERS_ENV = "POLYGLOT_ID_WORKERS"

# option name -> dotted key in the config file
CONFIG_KEYS = {
    "channel": "channel",
    "model": "model",
    "seed": "seed",
    "min_df": "features.min_df",
    "code_punct_tokens": "features.code_punct_tokens",
    "stem": "textprep.stem",
    "stopwords": "textprep.remove_stopwords",
    "strip": "textprep.strip_non_alphanumeric",
    "entities": "textprep.retain_entities",
    "min_token_len": "textprep.min_token_len",
    "train_fraction": "split.train_fraction",
    "min_snippet_chars": "corpus.min_snippet_chars",
    "per_language": "corpus.per_language",
    "folds": "tune.folds",
    "budget": "tune.budget",
    "thresholds": "study.thresholds",
    "dim": "embed.dim",
    "window": "embed.window",
    "negatives": "embed.negatives",
    "epochs": "embed.epochs",
    "min_count": "embed.min_count",
    "fraction": "project.fraction",
    "perplexity": "project.perplexity",
    "iterations": "project.iterations",
    "k": "project.k",
}

DEFAULT_SPACES = {
    "nb": {"alpha": {"log": [0.01, 10.0]}},
    "rf": {"n_estimators": {"choice": [25, 50, 100]},
           "max_depth": {"choice": [None, 10, 20]},
           "min_samples_leaf": {"int": [1, 5]}},
    "gbt": {"n_rounds": {"choice": [10, 20, 30]},
            "max_depth": {"int": [2, 6]},
            "learning_rate": {"real": [0.1, 0.5]},
            "reg_lambda": {"log": [0.1, 10.0]}},
}


# ---------------------------------------------------------------------------
# plumbing
# ---------------------------------------------------------------------------

def workers():
    """Worker cap from the environment; 1 when unset."""
    raw = os.environ.get(WORKERS_ENV, "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise click.UsageError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise click.UsageError(f"{WORKERS_ENV} must be a positive integer, got {raw!r}")
    return n


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def dumps(obj):
    return json.dumps(obj, sort_keys=True, indent=2, ensure_ascii=False) + "\n"


def write_text(path, text):
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def write_json(path, obj):
    write_text(path, dumps(obj))


def envelope(kind, config, seed, inputs):
    """Header fields shared by every artifact."""
    return {
        "format_version": FORMAT_VERSION,
        "kind": kind,
        "config": config,
        "seed": seed,
        "input_hashes": {name: file_sha256(p) for name, p in sorted(inputs.items())},
    }


def write_meta(path, kind, config, seed, inputs, **extra):
    """Sidecar ``<path>.meta.json`` for artifacts whose own format has no header."""
    write_json(f"{path}.meta.json", {**envelope(kind, config, seed, inputs),
                                     "output_sha256": file_sha256(path), **extra})


def load_config(path):
    if path is None:
        return {}
    text = Path(path).read_text(encoding="utf-8")
    data = json.loads(text) if str(path).endswith(".json") else yaml.safe_load(text)
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise click.UsageError(f"config file {path} must hold a mapping")
    return data


def _lookup(cfg, dotted):
    if dotted in cfg:
        return True, cfg[dotted]
    node = cfg
    for part in dotted.split("."):
        if not isinstance(node, dict) or part not in node:
            return False, None
        node = node[part]
    return True, node


def resolve(ctx, names):
    """Effective value of each option: flag, else config file, else default."""
    cfg = getattr(ctx, "obj_config", {})
    out = {}
    for name in names:
        value = ctx.params[name]
        source = ctx.get_parameter_source(name)
        if source in (ParameterSource.DEFAULT, None):
            found, cfg_value = _lookup(cfg, CONFIG_KEYS.get(name, name))
            if found:
                value = cfg_value
        out[name] = value
    return out


def _parse_value(raw):
    try:
        return json.loads(raw)
    except json.JSONDecodeError:
        return raw


def model_params(ctx, model, seed, extra):
    """Hyperparameters: config ``model_params`` then ``--param`` flags."""
    params = {}
    found, cfg_params = _lookup(getattr(ctx, "obj_config", {}), "model_params")
    if found and cfg_params:
        # either flat, or keyed by model type
        nested = cfg_params.get(model) if all(k in MODEL_CHOICES for k in cfg_params) else cfg_params
        params.update(nested or {})
    for item in extra:
        key, sep, value = item.partition("=")
        if not sep or not key:
            raise click.BadParameter(f"expected key=value, got {item!r}", param_hint="--param")
        params[key.strip()] = _parse_value(value)
    if model in ("rf", "gbt"):
        params.setdefault("seed", seed)
    return params


def text_config(s):
    return PipelineConfig(
        strip_non_alphanumeric=s["strip"], remove_stopwords=s["stopwords"],
        retain_entities=s["entities"], stem=s["stem"], min_token_len=s["min_token_len"])


class PolyglotGroup(click.Group):
    """Turns package errors into one-line messages with exit status 1."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (click.exceptions.Exit, click.exceptions.Abort, click.ClickException):
            raise
        except PolyglotError as exc:
            self._fail(exc.code, exc)
        except KeyError as exc:
            self._fail("invalid-input", exc.args[0] if exc.args else exc)
        except (ValueError, TypeError, json.JSONDecodeError) as exc:
            self._fail("invalid-input", exc)
        except OSError as exc:
            self._fail("io-error", exc)

    @staticmethod
    def _fail(code, exc):
        message = " ".join(str(exc).split())
        click.echo(f"error: {code}: {message}", err=True)
        sys.exit(1)


def _configurable(func):
    """Adds ``--config`` and loads it into the context before the command runs."""

    def load(ctx, _param, value):
        ctx.obj_config = load_config(value)
        return value

    return click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
                        callback=load, is_eager=True, expose_value=False,
                        help="JSON or YAML file with default settings.")(func)


def _seed_option(default=0):
    return click.option("--seed", type=int, default=default, show_default=True)


def _text_options(func):
    for opt in reversed([
        click.option("--channel", type=click.Choice(CHANNEL_CHOICES), default="combined",
                     show_default=True),
        click.option("--min-df", type=click.IntRange(min=1), default=10, show_default=True,
                     help="Minimum document frequency of a vocabulary term."),
        click.option("--stem/--no-stem", default=True, show_default=True),
        click.option("--stopwords/--no-stopwords", default=True, show_default=True),
        click.option("--strip/--no-strip", default=True, show_default=True,
                     help="Replace non-alphanumeric characters by spaces."),
        click.option("--entities/--no-entities", default=True, show_default=True,
                     help="Keep identifier-shaped tokens unstemmed."),
        click.option("--min-token-len", type=click.IntRange(min=1), default=2,
                     show_default=True),
        click.option("--code-punct-tokens/--no-code-punct-tokens", default=False,
                     show_default=True, help="Also emit punctuation runs as code tokens."),
    ]):
        func = opt(func)
    return func


_TEXT_NAMES = ("channel", "min_df", "stem", "stopwords", "strip", "entities", "min_token_len",
               "code_punct_tokens")


def _model_options(func):
    func = click.option("--param", "params", multiple=True, metavar="KEY=VALUE",
                        help="Model hyperparameter; repeatable. Values are parsed as JSON.")(func)
    return click.option("--model", type=click.Choice(MODEL_CHOICES), default="gbt",
                        show_default=True)(func)


def _read_questions(path):
    corpus = read_corpus(path)
    if not corpus.questions:
        raise ValueError(f"corpus {path} holds no questions")
    return corpus


# ---------------------------------------------------------------------------
# model artifacts
# ---------------------------------------------------------------------------

MODEL_FILE = "model.json"


def vocab_file(part):
    return f"vocab-{part}.json"


def save_model_dir(out_dir, pipe, model, model_type, params, config, seed, inputs):
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    head = envelope("vocabulary", config, seed, inputs)
    for part in pipe.parts:
        write_json(out_dir / vocab_file(part), {**head, **pipe.vocabs[part].to_dict()})
    write_json(out_dir / MODEL_FILE, {
        **envelope("model", config, seed, inputs),
        "model_type": model_type,
        "hyperparams": params,
        "pipeline": pipe.to_dict(),
        "vocab_hashes": pipe.vocab_hashes(),
        "model": model.to_dict(),
    })


def load_model_dir(model_dir):
    """``(pipeline, model, artifact)``; checks each vocabulary against its
    recorded hash."""
    model_dir = Path(model_dir)
    with open(model_dir / MODEL_FILE, encoding="utf-8") as fh:
        art = json.load(fh)
    if art.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format_version {art.get('format_version')!r}")
    vocabs = {}
    for part, expected in art["vocab_hashes"].items():
        with open(model_dir / vocab_file(part), encoding="utf-8") as fh:
            vocab = load_vocab(json.load(fh))
        if vocab.sha256 != expected:
            raise VocabularyMismatch(
                f"{part} vocabulary hash {vocab.sha256[:12]} does not match the model's "
                f"{expected[:12]}")
        vocabs[part] = vocab
    pipe = FeaturePipeline.from_dict(art["pipeline"], vocabs)
    model = model_from_dict(art["model_type"], art["model"])
    return pipe, model, art


def write_report(out_dir, report, head):
    out_dir = Path(out_dir)
    write_json(out_dir / "report.json", {**head, "metrics": report.to_dict()})
    write_text(out_dir / "report.txt", report.to_table())
    write_text(out_dir / "confusion.csv", report.confusion.to_csv())


def _echo_summary(report, out_dir):
    click.echo(f"accuracy {report.accuracy:.4f} on {report.total} test questions; "
               f"artifacts in {out_dir}")


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

@click.group(cls=PolyglotGroup)
@click.version_option(__version__, prog_name="polyglot-id")
def main():
    """Identify the programming language of Q&A posts."""


@main.command("generate-corpus")
@_configurable
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="Corpus JSON-lines file to write.")
@click.option("--dump", "dump_path", type=click.Path(dir_okay=False),
              help="Also write the generated posts as dump XML.")
@_seed_option(DEFAULT_SEED)
@click.option("--per-language", type=click.IntRange(min=1), default=200, show_default=True)
@click.option("--short-snippet-fraction", type=click.FloatRange(0, 1), default=0.0,
              show_default=True, help="Share of questions given a short generic snippet.")
@click.option("--noise-rows/--no-noise-rows", default=False, show_default=True,
              help="Add answers and multi-language questions (dropped on extraction).")
@click.pass_context
def generate_corpus_cmd(ctx, out, dump_path, seed, per_language, short_snippet_fraction,
                        noise_rows):
    """Write the bundled synthetic corpus (12 languages)."""
    s = resolve(ctx, ["seed", "per_language"])
    cfg = SynthConfig(per_language=s["per_language"],
                      short_snippet_fraction=short_snippet_fraction,
                      noise_rows=noise_rows, seed=s["seed"])
    posts = generate_posts(cfg)
    if dump_path:
        write_dump(posts, dump_path)
    corpus = build_corpus((p for p in posts if p.post_type == 1), load_tag_map())
    write_corpus(corpus, out)
    config = {"per_language": cfg.per_language, "short_snippet_fraction": short_snippet_fraction,
              "noise_rows": noise_rows, "languages": list(cfg.languages),
              "code_signal": cfg.code_signal, "text_signal": cfg.text_signal,
              "overlap": cfg.overlap}
    write_meta(out, "corpus", config, s["seed"], {}, counts=corpus.counts)
    click.echo(f"wrote {len(corpus)} questions to {out}")


@main.command()
@_configurable
@click.argument("dump", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--min-snippet-chars", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--tag-map", type=click.Path(exists=True, dir_okay=False),
              help="JSON tag map; the bundled one by default.")
@click.option("--skip-malformed/--strict", default=False, show_default=True,
              help="Skip malformed rows instead of failing.")
@click.pass_context
def ingest(ctx, dump, out, min_snippet_chars, tag_map, skip_malformed):
    """Extract single-language questions with code from a posts dump."""
    s = resolve(ctx, ["min_snippet_chars"])
    skipped = []
    on_error = skipped.append if skip_malformed else None
    with open(dump, "rb") as fh:
        corpus = build_corpus(parse_posts_stream(fh, on_error=on_error),
                              load_tag_map(tag_map), s["min_snippet_chars"])
    write_corpus(corpus, out)
    inputs = {"dump": dump, **({"tag_map": tag_map} if tag_map else {})}
    write_meta(out, "corpus", {"min_snippet_chars": s["min_snippet_chars"]}, None, inputs,
               counts=corpus.counts, skipped_rows=[str(e) for e in skipped])
    click.echo(f"wrote {len(corpus)} questions to {out} ({len(skipped)} malformed rows skipped)")


@main.command()
@_configurable
@click.argument("corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--per-language", type=click.IntRange(min=1), default=10000, show_default=True)
@_seed_option()
@click.pass_context
def sample(ctx, corpus_path, out, per_language, seed):
    """Keep at most --per-language random questions of each language."""
    s = resolve(ctx, ["per_language", "seed"])
    corpus = sample_balanced(read_corpus(corpus_path), s["per_language"], s["seed"])
    write_corpus(corpus, out)
    write_meta(out, "corpus", {"per_language": s["per_language"]}, s["seed"],
               {"corpus": corpus_path}, counts=corpus.counts, warnings=corpus.warnings)
    click.echo(f"wrote {len(corpus)} questions to {out}")


@main.command()
@_configurable
@click.argument("corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@_text_options
@_model_options
@click.option("--train-fraction", type=float, default=0.8, show_default=True)
@_seed_option()
@click.pass_context
def train(ctx, corpus_path, out_dir, **_):
    """Fit a model on a stratified split and evaluate it on the rest.

    Writes model.json, vocab-<channel>.json, report.json, report.txt and
    confusion.csv to --out-dir.
    """
    s = resolve(ctx, [*_TEXT_NAMES, "model", "train_fraction", "seed"])
    params = model_params(ctx, s["model"], s["seed"], ctx.params["params"])
    corpus = _read_questions(corpus_path)
    qs = corpus.questions
    train_idx, test_idx = holdout_indices([q.label for q in qs],
                                          SplitSpec(s["train_fraction"], s["seed"]))
    train_q = [qs[i] for i in train_idx]
    test_q = [qs[i] for i in test_idx]
    pipe = FeaturePipeline(s["channel"], text_config(s), s["min_df"],
                           s["code_punct_tokens"]).fit(train_q)
    fit_params = dict(params)
    if s["model"] == "rf":
        fit_params.setdefault("workers", workers())
    model = fit_model(s["model"], pipe.transform(train_q), fit_params)
    report = evaluate(model, pipe.transform(test_q))
    config = {**s, "model_params": params}
    inputs = {"corpus": corpus_path}
    save_model_dir(out_dir, pipe, model, s["model"], params, config, s["seed"], inputs)
    head = envelope("report", config, s["seed"], inputs)
    head["n_train"], head["n_test"] = len(train_q), len(test_q)
    write_report(out_dir, report, head)
    _echo_summary(report, out_dir)


@main.command("evaluate")
@_configurable
@click.argument("model_dir", type=click.Path(exists=True, file_okay=False))
@click.argument("corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
def evaluate_cmd(model_dir, corpus_path, out_dir):
    """Score a trained model on every question of a corpus."""
    pipe, model, art = load_model_dir(model_dir)
    corpus = _read_questions(corpus_path)
    report = evaluate(model, pipe.transform(corpus.questions))
    inputs = {"corpus": corpus_path, "model": str(Path(model_dir) / MODEL_FILE)}
    write_report(out_dir, report, envelope("report", art["config"], art["seed"], inputs))
    _echo_summary(report, out_dir)


def _required_fields(channel):
    return {"text": ("title/body",), "code": ("snippet",),
            "combined": ("title/body", "snippet")}[channel]


def predict_one(pipe, model, title=None, body=None, snippet=None):
    """Prediction dict for one question; raises on fields the channel needs."""
    needs = _required_fields(pipe.channel)
    missing = []
    if "title/body" in needs and not (title or body):
        missing.append("title/body")
    if "snippet" in needs and not snippet:
        missing.append("snippet")
    if missing:
        raise MissingFieldError(
            f"{pipe.channel} channel requires {' and '.join(needs)}; missing "
            f"{' and '.join(missing)}")
    vec = pipe.transform_one(title or "", body or "", snippet or "")
    proba = model.predict_proba(vec.to_csr())[0]
    names = [name_of(int(c)) for c in model.classes]
    best = int(np.argmax(proba))
    return {
        "label": names[best],
        "probabilities": {n: float(p) for n, p in zip(names, proba)},
        "channel": pipe.channel,
    }


@main.command()
@click.argument("model_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--title")
@click.option("--body")
@click.option("--snippet")
@click.option("--input", "input_path", type=click.Path(exists=True, dir_okay=False),
              help="JSON object with optional title, body and snippet fields.")
def predict(model_dir, title, body, snippet, input_path):
    """Predict the language of one question; prints JSON."""
    if input_path:
        with open(input_path, encoding="utf-8") as fh:
            rec = json.load(fh)
        title = title if title is not None else rec.get("title")
        body = body if body is not None else rec.get("body")
        snippet = snippet if snippet is not None else rec.get("snippet")
    pipe, model, _ = load_model_dir(model_dir)
    click.echo(dumps(predict_one(pipe, model, title, body, snippet)), nl=False)


@main.command()
@_configurable
@click.argument("corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@_text_options
@_model_options
@click.option("--budget", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--folds", type=click.IntRange(min=2), default=10, show_default=True)
@click.option("--train-fraction", type=float, default=0.8, show_default=True)
@_seed_option()
@click.pass_context
def tune(ctx, corpus_path, out, **_):
    """Random search over model hyperparameters by k-fold accuracy.

    Searches on the training part of the stratified split; the space comes
    from the config key ``search_space`` or a built-in default per model.
    """
    s = resolve(ctx, [*_TEXT_NAMES, "model", "budget", "folds", "train_fraction", "seed"])
    fixed = model_params(ctx, s["model"], s["seed"], ctx.params["params"])
    found, space_spec = _lookup(getattr(ctx, "obj_config", {}), "search_space")
    if not found:
        space_spec = DEFAULT_SPACES[s["model"]]
    space = parse_space(space_spec)
    corpus = _read_questions(corpus_path)
    qs = corpus.questions
    train_idx, _ = holdout_indices([q.label for q in qs],
                                   SplitSpec(s["train_fraction"], s["seed"]))
    train_q = [qs[i] for i in train_idx]
    pipe = FeaturePipeline(s["channel"], text_config(s), s["min_df"],
                           s["code_punct_tokens"]).fit(train_q)
    matrix = pipe.transform(train_q)
    model_type = s["model"]
    n_workers = workers()

    def trainer(m, params):
        params = dict(params)
        if model_type == "rf":
            params.setdefault("workers", n_workers)
        return fit_model(model_type, m, params, classes=np.unique(matrix.labels))

    result = random_search(space, s["budget"], s["folds"], s["seed"], trainer, matrix, fixed)
    config = {**s, "model_params": fixed, "search_space": space_spec}
    write_json(out, {**envelope("search", config, s["seed"], {"corpus": corpus_path}),
                     **result.to_dict()})
    click.echo(f"best trial {result.best.index}: mean accuracy "
               f"{result.best.mean_accuracy:.4f} with {json.dumps(result.best.params, sort_keys=True)}")


def _parse_thresholds(_ctx, _param, value):
    if value is None:
        return None
    try:
        return [int(v) for v in str(value).split(",") if v.strip()]
    except ValueError:
        raise click.BadParameter("expected comma-separated integers") from None


@main.command("snippet-length-study")
@_configurable
@click.argument("corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--thresholds", default="10,25,50,100", show_default=True,
              callback=_parse_thresholds, help="Comma-separated minimum snippet lengths.")
@click.option("--min-df", type=click.IntRange(min=1), default=10, show_default=True)
@click.option("--code-punct-tokens/--no-code-punct-tokens", default=False, show_default=True)
@_model_options
@click.option("--train-fraction", type=float, default=0.8, show_default=True)
@_seed_option()
@click.pass_context
def snippet_length_study(ctx, corpus_path, out_dir, **_):
    """Code-channel accuracy as the minimum snippet length grows."""
    s = resolve(ctx, ["thresholds", "min_df", "code_punct_tokens", "model", "train_fraction",
                      "seed"])
    if isinstance(s["thresholds"], str):
        s["thresholds"] = _parse_thresholds(None, None, s["thresholds"])
    params = model_params(ctx, s["model"], s["seed"], ctx.params["params"])
    corpus = _read_questions(corpus_path)
    results = snippet_length_experiment(
        corpus, s["thresholds"], model=s["model"], model_params=params, min_df=s["min_df"],
        seed=s["seed"], train_fraction=s["train_fraction"],
        code_punct_tokens=s["code_punct_tokens"])
    config = {**s, "model_params": params}
    write_json(Path(out_dir) / "snippet_length.json", {
        **envelope("snippet-length-study", config, s["seed"], {"corpus": corpus_path}),
        "results": [r.to_dict() for r in results]})
    rows = [("Threshold", "Samples", "Precision", "Recall", "F1-score", "Accuracy")]
    for r in results:
        if r.metrics is None:
            rows.append((f"> {r.threshold}", str(r.n_samples), "-", "-", "-", "skipped"))
        else:
            m = r.metrics
            rows.append((f"> {r.threshold}", str(r.n_samples), f"{m.macro_precision:.2f}",
                         f"{m.macro_recall:.2f}", f"{m.macro_f1:.2f}",
                         f"{100 * m.accuracy:.1f}%"))
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    table = "\n".join("  ".join(c.rjust(w) for c, w in zip(row, widths)) for row in rows)
    write_text(Path(out_dir) / "snippet_length.txt", table + "\n")
    click.echo(table)


def embedding_docs(questions, channel, language=None, text_cfg=None):
    """Token sequences of one channel, optionally for one language only."""
    text_cfg = text_cfg or PipelineConfig()
    chosen = [q for q in questions if language is None or q.label == language]
    if channel == "code":
        return [tokenize_code(q.snippet) for q in chosen]
    return [preprocess_text(f"{q.title} {q.body_text}", text_cfg) for q in chosen]


@main.command()
@_configurable
@click.argument("corpus_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False))
@click.option("--language", help="Train on this language's questions only.")
@click.option("--channel", type=click.Choice(("text", "code")), default="code",
              show_default=True)
@click.option("--dim", type=click.IntRange(min=2), default=300, show_default=True)
@click.option("--window", type=click.IntRange(min=1), default=5, show_default=True)
@click.option("--negatives", type=click.IntRange(min=1), default=5, show_default=True)
@click.option("--epochs", type=click.IntRange(min=1), default=5, show_default=True)
@click.option("--min-count", type=click.IntRange(min=1), default=1, show_default=True)
@_seed_option()
@click.pass_context
def embed(ctx, corpus_path, out, language, **_):
    """Train skip-gram embeddings on one channel of the corpus."""
    s = resolve(ctx, ["channel", "dim", "window", "negatives", "epochs", "min_count", "seed"])
    corpus = _read_questions(corpus_path)
    docs = embedding_docs(corpus.questions, s["channel"], language)
    if not docs:
        raise ValueError(f"no questions for language {language!r}")
    model = train_skipgram(docs, dim=s["dim"], window=s["window"], negatives=s["negatives"],
                           epochs=s["epochs"], min_count=s["min_count"], seed=s["seed"])
    config = {**s, "language": language}
    write_json(out, {**envelope("embedding", config, s["seed"], {"corpus": corpus_path}),
                     "embedding": model.to_dict()})
    click.echo(f"trained {len(model)} term vectors; final epoch loss "
               f"{model.epoch_loss[-1]:.4f}")


@main.command()
@_configurable
@click.argument("embedding_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(dir_okay=False),
              help="CSV with columns term,x,y,frequency.")
@click.option("--neighbours", "neighbours_path", type=click.Path(dir_okay=False),
              help="Also write the nearest neighbours of every projected term as JSON.")
@click.option("--fraction", type=click.FloatRange(0, 1, min_open=True), default=0.03,
              show_default=True, help="Share of most frequent terms to project.")
@click.option("--perplexity", type=click.FloatRange(min=1, min_open=False), default=30.0,
              show_default=True)
@click.option("--iterations", type=click.IntRange(min=1), default=1000, show_default=True)
@click.option("--k", type=click.IntRange(min=1), default=10, show_default=True)
@_seed_option()
@click.pass_context
def project(ctx, embedding_path, out, neighbours_path, **_):
    """Project the most frequent terms of an embedding to 2-D."""
    s = resolve(ctx, ["fraction", "perplexity", "iterations", "k", "seed"])
    with open(embedding_path, encoding="utf-8") as fh:
        model = EmbeddingModel.from_dict(json.load(fh)["embedding"])
    terms = select_top_frequent(model, s["fraction"])
    vectors = np.array([model.vector(t) for t in terms])
    proj = tsne_project(vectors, perplexity=s["perplexity"], iterations=s["iterations"],
                        seed=s["seed"], terms=terms)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["term", "x", "y", "frequency"])
    for t, (x, y) in zip(terms, proj.coords):
        writer.writerow([t, repr(float(x)), repr(float(y)), int(model.counts[model.term_index[t]])])
    write_text(out, buf.getvalue())
    inputs = {"embedding": embedding_path}
    write_meta(out, "projection", s, s["seed"], inputs, kl_trace=proj.kl_trace)
    if neighbours_path:
        table = {t: [[n, sim] for n, sim in most_similar(model, t, s["k"])] for t in terms}
        write_json(neighbours_path, {**envelope("neighbours", s, s["seed"], inputs),
                                     "neighbours": table})
    click.echo(f"projected {len(terms)} terms; KL {proj.kl_trace[0]:.4f} -> "
               f"{proj.kl_trace[-1]:.4f}")


@main.command()
@click.argument("report_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(("table", "csv", "json")), default="table",
              show_default=True)
def report(report_path, fmt):
    """Render a saved report as a table, confusion CSV or metrics JSON."""
    with open(report_path, encoding="utf-8") as fh:
        art = json.load(fh)
    if "metrics" not in art:
        raise ValueError(f"{report_path} is not a report artifact")
    metrics = MetricsReport.from_dict(art["metrics"])
    if fmt == "table":
        click.echo(metrics.to_table(), nl=False)
    elif fmt == "csv":
        if metrics.confusion is None:
            raise ValueError("report has no confusion matrix")
        click.echo(metrics.confusion.to_csv(), nl=False)
    else:
        click.echo(dumps(art["metrics"]), nl=False)


if __name__ == "__main__":
    main()
