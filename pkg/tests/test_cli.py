import json

import pytest
from click.testing import CliRunner

from polyglot_id.cli import main
from polyglot_id.corpus import read_corpus


def run(*args, env=None, ok=True):
    result = CliRunner().invoke(main, [str(a) for a in args], env=env)
    if ok:
        assert result.exit_code == 0, result.output
    return result


@pytest.fixture(scope="module")
def corpus_path(tmp_path_factory):
    path = tmp_path_factory.mktemp("cli") / "corpus.jsonl"
    run("generate-corpus", "--out", path, "--per-language", 20)
    return path


@pytest.fixture(scope="module")
def model_dir(tmp_path_factory, corpus_path):
    out = tmp_path_factory.mktemp("model")
    run("train", corpus_path, "--out-dir", out, "--model", "nb", "--min-df", 2)
    return out


class TestCorpusCommands:
    def test_generate(self, corpus_path):
        corpus = read_corpus(corpus_path)
        assert len(corpus) == 12 * 20
        meta = json.loads(corpus_path.with_name(corpus_path.name + ".meta.json").read_text())
        assert meta["seed"] == 2017 and len(meta["output_sha256"]) == 64

    def test_dump_then_ingest(self, tmp_path):
        dump = tmp_path / "dump.xml"
        run("generate-corpus", "--out", tmp_path / "direct.jsonl", "--dump", dump,
            "--per-language", 5)
        run("ingest", dump, "--out", tmp_path / "ingested.jsonl")
        direct = read_corpus(tmp_path / "direct.jsonl")
        assert read_corpus(tmp_path / "ingested.jsonl").questions == direct.questions

    def test_ingest_malformed(self, tmp_path):
        dump = tmp_path / "dump.xml"
        body = "&lt;pre&gt;&lt;code&gt;print(1234567)&lt;/code&gt;&lt;/pre&gt;"
        dump.write_text(
            '<?xml version="1.0" encoding="utf-8"?>\n<posts>\n'
            f'<row Id="1" PostTypeId="1" Title="t" Body="{body}" Tags="&lt;python&gt;" />\n'
            '<row Id="2" PostTypeId="1" Title="t" Tags="&lt;python&gt;" />\n'
            "</posts>\n", encoding="utf-8")
        strict = run("ingest", dump, "--out", tmp_path / "a.jsonl", "--strict", ok=False)
        assert strict.exit_code == 1
        assert strict.output.startswith("error: ")
        assert "Body" in strict.output
        run("ingest", dump, "--out", tmp_path / "b.jsonl", "--skip-malformed")
        assert len(read_corpus(tmp_path / "b.jsonl")) == 1

    def test_noise_rows_ignored(self, tmp_path):
        dump = tmp_path / "dump.xml"
        run("generate-corpus", "--out", tmp_path / "c.jsonl", "--dump", dump,
            "--per-language", 3, "--noise-rows")
        run("ingest", dump, "--out", tmp_path / "a.jsonl", "--strict")
        assert len(read_corpus(tmp_path / "a.jsonl")) == len(read_corpus(tmp_path / "c.jsonl"))

    def test_sample(self, tmp_path, corpus_path):
        out = tmp_path / "s.jsonl"
        run("sample", corpus_path, "--out", out, "--per-language", 5)
        assert len(read_corpus(out)) == 60


class TestTrainPredict:
    def test_artifacts(self, model_dir):
        names = {p.name for p in model_dir.iterdir()}
        assert {"model.json", "vocab-text.json", "vocab-code.json", "report.json",
                "report.txt", "confusion.csv"} <= names
        report = json.loads((model_dir / "report.json").read_text())
        assert report["format_version"] == 1
        assert 0 <= report["metrics"]["accuracy"] <= 1

    def test_predict(self, model_dir):
        out = run("predict", model_dir, "--title", "list comprehension",
                  "--snippet", "def f(x):\n    return [y for y in x]").output
        pred = json.loads(out)
        assert pred["channel"] == "combined"
        assert sum(pred["probabilities"].values()) == pytest.approx(1.0)
        assert pred["label"] in pred["probabilities"]

    def test_predict_missing_snippet(self, model_dir):
        result = run("predict", model_dir, "--title", "hello", ok=False)
        assert result.exit_code == 1
        assert "combined channel requires title/body and snippet" in result.output
        assert len(result.output.strip().splitlines()) == 1

    def test_predict_from_file(self, model_dir, tmp_path):
        path = tmp_path / "q.json"
        path.write_text(json.dumps({"title": "a", "snippet": "SELECT 1 FROM t"}))
        assert json.loads(run("predict", model_dir, "--input", path).output)["label"]

    def test_vocabulary_mismatch(self, model_dir, tmp_path):
        broken = tmp_path / "m"
        broken.mkdir()
        for p in model_dir.iterdir():
            (broken / p.name).write_bytes(p.read_bytes())
        vocab = json.loads((broken / "vocab-code.json").read_text())
        vocab["terms"] = vocab["terms"][1:]
        (broken / "vocab-code.json").write_text(json.dumps(vocab))
        result = run("predict", broken, "--title", "a", "--snippet", "x = 1", ok=False)
        assert result.exit_code == 1
        assert "vocabulary hash" in result.output

    def test_evaluate_and_report(self, model_dir, corpus_path, tmp_path):
        run("evaluate", model_dir, corpus_path, "--out-dir", tmp_path)
        table = run("report", tmp_path / "report.json").output
        assert table.startswith("Programming")
        csv = run("report", tmp_path / "report.json", "--format", "csv").output
        assert csv.startswith("true\\predicted,")
        as_json = json.loads(run("report", tmp_path / "report.json", "--format", "json").output)
        assert as_json["total"] == 240

    def test_train_is_byte_identical(self, corpus_path, tmp_path):
        for name in ("a", "b"):
            run("train", corpus_path, "--out-dir", tmp_path / name, "--model", "rf",
                "--param", "n_estimators=3", "--min-df", 2)
        for f in (tmp_path / "a").iterdir():
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes(), f.name

    def test_workers_env(self, corpus_path, tmp_path):
        run("train", corpus_path, "--out-dir", tmp_path / "one", "--model", "rf",
            "--param", "n_estimators=4", "--min-df", 2)
        run("train", corpus_path, "--out-dir", tmp_path / "two", "--model", "rf",
            "--param", "n_estimators=4", "--min-df", 2, env={"POLYGLOT_ID_WORKERS": "2"})
        a = (tmp_path / "one" / "model.json").read_bytes()
        assert a == (tmp_path / "two" / "model.json").read_bytes()
        bad = run("train", corpus_path, "--out-dir", tmp_path / "x", "--model", "rf",
                  "--min-df", 2, ok=False, env={"POLYGLOT_ID_WORKERS": "zero"})
        assert bad.exit_code != 0

    def test_empty_vocabulary(self, corpus_path, tmp_path):
        result = run("train", corpus_path, "--out-dir", tmp_path, "--model", "nb",
                     "--min-df", 100000, ok=False)
        assert result.exit_code == 1
        assert result.output.startswith("error: ")


class TestConfig:
    def test_precedence(self, corpus_path, tmp_path):
        cfg = tmp_path / "c.yaml"
        cfg.write_text("model: nb\nchannel: text\nfeatures:\n  min_df: 3\n"
                       "model_params:\n  alpha: 0.5\n")
        run("train", corpus_path, "--config", cfg, "--out-dir", tmp_path / "a",
            "--min-df", 2)
        model = json.loads((tmp_path / "a" / "model.json").read_text())
        config = model["config"]
        assert config["model"] == "nb"          # config over default
        assert config["channel"] == "text"
        assert config["min_df"] == 2            # flag over config
        assert model["hyperparams"]["alpha"] == 0.5

    def test_json_config(self, corpus_path, tmp_path):
        cfg = tmp_path / "c.json"
        cfg.write_text(json.dumps({"model": "nb", "channel": "code", "features.min_df": 2}))
        run("train", corpus_path, "--config", cfg, "--out-dir", tmp_path / "a")
        assert (tmp_path / "a" / "vocab-code.json").exists()
        assert not (tmp_path / "a" / "vocab-text.json").exists()


class TestStudies:
    def test_tune(self, corpus_path, tmp_path):
        for name in ("a.json", "b.json"):
            run("tune", corpus_path, "--out", tmp_path / name, "--model", "nb",
                "--budget", 3, "--folds", 3, "--min-df", 2)
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
        result = json.loads((tmp_path / "a.json").read_text())
        assert len(result["trials"]) == 3
        assert "alpha" in result["best"]["params"]

    def test_snippet_length_study(self, corpus_path, tmp_path):
        run("snippet-length-study", corpus_path, "--out-dir", tmp_path, "--model", "nb",
            "--thresholds", "10,40", "--min-df", 2)
        rows = json.loads((tmp_path / "snippet_length.json").read_text())["results"]
        assert [r["threshold"] for r in rows] == [10, 40]

    def test_bad_thresholds(self, corpus_path, tmp_path):
        result = run("snippet-length-study", corpus_path, "--out-dir", tmp_path,
                     "--thresholds", "a,b", ok=False)
        assert result.exit_code != 0

    def test_embed_and_project(self, corpus_path, tmp_path):
        for name in ("a.json", "b.json"):
            run("embed", corpus_path, "--out", tmp_path / name, "--dim", 16, "--epochs", 1)
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()
        run("project", tmp_path / "a.json", "--out", tmp_path / "p.csv", "--fraction", 0.5,
            "--perplexity", 5, "--iterations", 300, "--neighbours", tmp_path / "n.json")
        lines = (tmp_path / "p.csv").read_text().splitlines()
        assert lines[0] == "term,x,y,frequency"
        assert len(lines) > 16
        neighbours = json.loads((tmp_path / "n.json").read_text())
        assert neighbours

    def test_project_too_few_points(self, corpus_path, tmp_path):
        run("embed", corpus_path, "--out", tmp_path / "e.json", "--dim", 8, "--epochs", 1)
        result = run("project", tmp_path / "e.json", "--out", tmp_path / "p.csv",
                     "--fraction", 0.01, ok=False)
        assert result.exit_code == 1
        assert "error: tsne:" in result.output
