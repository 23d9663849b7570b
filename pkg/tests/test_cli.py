import json

import numpy as np
import pytest

from probqsvm import Dataset
from probqsvm.pipeline import load_model
from probqsvm.cli import main
from probqsvm.data import save_csv

IRIS = "tests/data/iris.csv"
FAST = ["--reads", "8", "--sweeps", "60"]


@pytest.fixture
def blobs(tmp_path):
    r = np.random.default_rng(5)
    x = np.vstack([r.normal(-1, 0.5, size=(20, 2)), r.normal(1, 0.5, size=(20, 2))])
    path = tmp_path / "blobs.csv"
    save_csv(Dataset(x, np.repeat([-1, 1], 20)), path)
    return path


def run(*argv):
    return main([str(a) for a in argv])


def train(data, out, *extra):
    return run("train", "--data", data, "--out", out, "--gamma", "1", *FAST, *extra)


class TestTrainPredict:
    def test_train_evaluate_predict(self, blobs, tmp_path):
        model = tmp_path / "m.json"
        assert train(blobs, model, "--test-fraction", "0.25", "--batch-size", "10") == 0
        report = json.loads((tmp_path / "m.report.json").read_text())
        assert report["n_train"] == 30 and report["n_test"] == 10
        assert len(report["batches"]) == 3
        assert report["test_metrics"]["accuracy"] >= 0.8
        assert (tmp_path / "m.report.timings.json").exists()
        assert run("evaluate", "--data", blobs, "--model", model, "--out", tmp_path / "e.json") == 0
        assert json.loads((tmp_path / "e.json").read_text())["n"] == 40
        assert run("predict", "--data", blobs, "--model", model, "--out", tmp_path / "p.txt") == 0
        pred = [int(v) for v in (tmp_path / "p.txt").read_text().split()]
        assert len(pred) == 40 and set(pred) <= {-1, 1}

    def test_deterministic(self, blobs, tmp_path):
        for name in ("a", "b"):
            assert train(blobs, tmp_path / f"{name}.json", "--seed", "3") == 0
        for suffix in (".json", ".report.json"):
            assert (tmp_path / f"a{suffix}").read_bytes() == (tmp_path / f"b{suffix}").read_bytes()

    def test_multiclass(self, tmp_path):
        model = tmp_path / "iris.json"
        assert train(IRIS, model, "--test-fraction", "0.4", "--bits", "1", "--penalty", "1") == 0
        assert load_model(model).model.to_dict()["type"] == "ovo"
        report = json.loads((tmp_path / "iris.report.json").read_text())
        assert report["test_metrics"]["average"] == "macro"

    def test_boundary_grid(self, blobs, tmp_path):
        model = tmp_path / "m.json"
        train(blobs, model)
        grid = tmp_path / "g.csv"
        assert run("evaluate", "--data", blobs, "--model", model,
                   "--boundary-grid", "50x50", "--grid-out", grid) == 0
        lines = grid.read_text().splitlines()
        assert lines[0] == "x0,x1,label,score" and len(lines) == 2501

    def test_dimension_mismatch(self, blobs, tmp_path, capsys):
        model = tmp_path / "iris.json"
        train(IRIS, model, "--bits", "1", "--seed", "0")
        assert run("evaluate", "--data", blobs, "--model", model) == 2
        assert "features" in capsys.readouterr().err


class TestExitCodes:
    def test_missing_file(self, tmp_path):
        assert train(tmp_path / "absent.csv", tmp_path / "m.json") == 2

    def test_bad_config(self, blobs, tmp_path):
        assert train(blobs, tmp_path / "m.json", "--bits", "0") == 2

    def test_bad_csv(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("1,2,1\n1,oops,-1\n")
        assert train(bad, tmp_path / "m.json") == 2

    def test_capacity(self, blobs, tmp_path):
        assert train(blobs, tmp_path / "m.json", "--batch-size", "30", "--budget", "40") == 4

    def test_usage_error(self):
        with pytest.raises(SystemExit) as exc:
            main(["train"])
        assert exc.value.code == 2


class TestExternalSolverRoundTrip:
    def export(self, blobs, out):
        assert run("export-qubo", "--data", blobs, "--out", out, "--gamma", "1",
                   "--batch-size", "20", "--seed", "4") == 0
        return json.loads((out / "manifest.json").read_text())["problems"]

    def test_reproduces_trained_members(self, blobs, tmp_path):
        problems = self.export(blobs, tmp_path / "x")
        assert len(problems) == 2 and all(p["num_vars"] == 40 for p in problems)
        assert train(blobs, tmp_path / "m.json", "--batch-size", "20", "--seed", "4") == 0
        members = load_model(tmp_path / "m.json").model.members
        docs = []
        for entry, member in zip(problems, members):
            q, meta = tmp_path / "x" / entry["qubo"], tmp_path / "x" / entry["meta"]
            s = tmp_path / f"{entry['qubo']}.samples.json"
            assert run("anneal", "--qubo", q, "--meta", meta, "--seed", "4", *FAST, "--out", s) == 0
            out = tmp_path / f"{entry['qubo']}.model.json"
            assert run("import-samples", "--qubo", q, "--meta", meta, "--samples", s, "--out", out) == 0
            imported = json.loads(out.read_text())
            assert np.array_equal(imported["alphas"], member.alphas)
            assert imported["bias"] == member.bias
            docs.append(s)
        assert train(blobs, tmp_path / "i.json", "--batch-size", "20", "--seed", "4",
                     "--sampler", "import", "--samples", *docs) == 0
        a = load_model(tmp_path / "m.json").model.members
        b = load_model(tmp_path / "i.json").model.members
        assert [m.bias for m in a] == [m.bias for m in b]

    def test_tampered_energy(self, blobs, tmp_path):
        entry = self.export(blobs, tmp_path / "x")[0]
        q, meta = tmp_path / "x" / entry["qubo"], tmp_path / "x" / entry["meta"]
        s = tmp_path / "s.json"
        run("anneal", "--qubo", q, "--meta", meta, *FAST, "--out", s)
        doc = json.loads(s.read_text())
        doc["records"][0]["energy"] += 0.5
        s.write_text(json.dumps(doc))
        assert run("import-samples", "--qubo", q, "--meta", meta, "--samples", s,
                   "--out", tmp_path / "o.json") == 3

    def test_digest_mismatch(self, blobs, tmp_path):
        first, second = self.export(blobs, tmp_path / "x")
        d = tmp_path / "x"
        s = tmp_path / "s.json"
        run("anneal", "--qubo", d / first["qubo"], "--meta", d / first["meta"], *FAST, "--out", s)
        assert run("import-samples", "--qubo", d / second["qubo"], "--meta", d / second["meta"],
                   "--samples", s, "--out", tmp_path / "o.json") == 3

    def test_edited_qubo_breaks_provenance(self, blobs, tmp_path):
        entry = self.export(blobs, tmp_path / "x")[0]
        q, meta = tmp_path / "x" / entry["qubo"], tmp_path / "x" / entry["meta"]
        lines = q.read_text().splitlines()
        p, r, v = lines[1].split()
        lines[1] = f"{p} {r} {float(v) + 1.0!r}"
        q.write_text("\n".join(lines) + "\n")
        assert run("anneal", "--qubo", q, "--meta", meta, *FAST, "--out", tmp_path / "s.json") == 3


def test_benchmark_deterministic(tmp_path):
    outs = []
    for name in ("a", "b"):
        out = tmp_path / name
        assert run("benchmark", "--iris", IRIS, "--samplers", "sa", "--reads", "5",
                   "--sweeps", "40", "--out", out) == 0
        outs.append(out)
    for f in ("benchmark.json", "benchmark.txt"):
        assert (outs[0] / f).read_bytes() == (outs[1] / f).read_bytes()
    report = json.loads((outs[0] / "benchmark.json").read_text())
    assert {r["mode"] for r in report["rows"]} == {"prob", "best"}
