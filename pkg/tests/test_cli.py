import csv
import json
import math

import numpy as np
import pytest

from rocarc.cli import main
from rocarc.data import GaussianSpec, gen_gaussian_pair, write_csv
from rocarc.divergence import FIGURE_COLUMNS


def _read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


class TestFit:
    def test_deterministic(self, tmp_path):
        argv = ["fit", "--gen", "gauss", "--delta", "2", "--n", "200", "--seed", "7"]
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        assert main(argv + ["--out", str(a)]) == 0
        assert main(argv + ["--out", str(b)]) == 0
        da, db = json.loads(a.read_text()), json.loads(b.read_text())
        assert da["model"] == db["model"]
        assert da["diagnostics"] == db["diagnostics"]
        assert da["manifest"]["seed"] == 7
        assert set(da["manifest"]) == {"subcommand", "config_echo", "seed", "versions", "timings_ms"}

    def test_csv_with_cv(self, tmp_path):
        s = gen_gaussian_pair(GaussianSpec((1.0, 0.0)), GaussianSpec((-1.0, 0.0)), 40, 40, 0)
        data = tmp_path / "data.csv"
        write_csv(s, data, label_column="y")
        out = tmp_path / "m.json"
        assert main(["fit", "--input", str(data), "--label", "y", "--cv", "3", "--out", str(out)]) == 0
        d = json.loads(out.read_text())
        assert d["sample"] == {"dim": 2, "n_pos": 40, "n_neg": 40}
        assert d["manifest"]["config_echo"]["cv"] == 3

    def test_missing_file(self, capsys):
        assert main(["fit", "--input", "definitely_missing.csv"]) == 1
        assert "definitely_missing.csv" in capsys.readouterr().err

    def test_bad_flag_is_usage_error(self):
        assert main(["fit", "--no-such-flag"]) == 1

    def test_no_data(self):
        assert main(["fit"]) == 1

    def test_nonconvergence_exit_code(self, tmp_path):
        rc = main(["fit", "--gen", "gauss", "--n", "50", "--max-newton-iters", "1",
                   "--out", str(tmp_path / "m.json")])
        assert rc == 2

    def test_two_step(self, tmp_path):
        out = tmp_path / "t.json"
        assert main(["fit", "--gen", "gauss", "--n", "80", "--two-step", "--out", str(out)]) == 0
        d = json.loads(out.read_text())
        m = d["model"]
        assert m["auc_star_hat"] == pytest.approx(math.sqrt(2) * m["A_hat"] / 2 + 0.5, abs=0)


class TestDivergence:
    def test_null_case(self, tmp_path):
        out = tmp_path / "r.json"
        assert main(["divergence", "--gen", "gauss", "--delta", "0", "--n", "300", "--out", str(out)]) == 0
        r = json.loads(out.read_text())
        assert abs(r["roc_divergence_hat"]) < 0.05
        assert r["roc_divergence_hat"] == r["arc_length_hat"] - math.sqrt(2)

    def test_bounds_ordered(self, tmp_path):
        out = tmp_path / "r.json"
        assert main(["divergence", "--gen", "gauss", "--delta", "1.5", "--n", "150", "--out", str(out)]) == 0
        r = json.loads(out.read_text())
        assert r["in_range"] and r["tv_lower"] <= r["tv_upper"]

    def test_holdout_keeps_fit_seed(self, tmp_path):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        base = ["divergence", "--gen", "gauss", "--n", "100", "--seed", "3"]
        assert main(base + ["--out", str(a)]) == 0
        assert main(base + ["--holdout", "0.3", "--out", str(b)]) == 0
        ra, rb = json.loads(a.read_text()), json.loads(b.read_text())
        assert ra["sample"] == rb["sample"]
        assert rb["holdout"] == 0.3 and ra["holdout"] is None

    def test_with_saved_model(self, tmp_path):
        model = tmp_path / "m.json"
        assert main(["fit", "--gen", "gauss", "--n", "100", "--out", str(model)]) == 0
        out = tmp_path / "r.json"
        assert main(["divergence", "--gen", "gauss", "--n", "100", "--seed", "1",
                     "--model", str(model), "--out", str(out)]) == 0
        assert 0 <= json.loads(out.read_text())["arc_length_hat"] <= 2


class TestFigureBounds:
    def test_rows_and_columns(self, tmp_path):
        out = tmp_path / "f.csv"
        assert main(["figure-bounds", "--delta-min", "0", "--delta-max", "5", "--steps", "101",
                     "--out", str(out)]) == 0
        rows = _read_csv(out)
        assert len(rows) == 101
        assert tuple(rows[0].keys()) == FIGURE_COLUMNS
        for col in ("tv", "js", "w1", "roc_div", "pinsker_ub", "bh_ub"):
            assert abs(float(rows[0][col])) < 1e-9
        for r in rows:
            if float(r["delta"]) > 1.45:
                assert float(r["prop2_upper"]) < min(float(r["pinsker_ub"]), float(r["bh_ub"]))
        manifest = json.loads((tmp_path / "f.csv.manifest.json").read_text())
        assert manifest["subcommand"] == "figure-bounds"

    def test_bad_range(self):
        assert main(["figure-bounds", "--delta-min", "3", "--delta-max", "1"]) == 1
        assert main(["figure-bounds", "--steps", "1"]) == 1


class TestBenchmark:
    def test_bytewise_deterministic(self, tmp_path):
        argv = ["benchmark", "--dim", "2", "--npos-grid", "10,20", "--nneg", "60", "--repeats", "2",
                "--n-test", "300", "--seed", "4"]
        assert main(argv + ["--out", str(tmp_path / "a")]) == 0
        assert main(argv + ["--out", str(tmp_path / "b")]) == 0
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        summary = json.loads((tmp_path / "a.json").read_text())
        assert len(summary["summary"]) == 3 * 2
        assert all({"mean_auc", "stderr"} <= set(r) for r in summary["summary"])
        assert (tmp_path / "a.csv.manifest.json").exists()

    def test_threads_env(self, tmp_path, monkeypatch):
        monkeypatch.setenv("ROCARC_THREADS", "2")
        argv = ["benchmark", "--dim", "2", "--npos-grid", "10", "--nneg", "40", "--repeats", "2",
                "--n-test", "200", "--out", str(tmp_path / "p")]
        assert main(argv) == 0
        monkeypatch.delenv("ROCARC_THREADS")
        assert main(argv[:-1] + [str(tmp_path / "s")]) == 0
        assert (tmp_path / "p.csv").read_bytes() == (tmp_path / "s.csv").read_bytes()


class TestRoc:
    def _scores(self, tmp_path, pos, neg):
        path = tmp_path / "scores.csv"
        lines = ["score,label"] + [f"{v},1" for v in pos] + [f"{v},0" for v in neg]
        path.write_text("\n".join(lines) + "\n")
        return path

    def test_perfect_scores(self, tmp_path):
        out = tmp_path / "roc.csv"
        assert main(["roc", "--scores", str(self._scores(tmp_path, [2, 3], [0, 1])), "--out", str(out)]) == 0
        pts = {(float(r["fpr"]), float(r["tpr"])) for r in _read_csv(out)}
        assert (0.0, 1.0) in pts

    def test_surface(self, tmp_path):
        rng = np.random.default_rng(0)
        path = self._scores(tmp_path, rng.normal(1, 1, 40), rng.normal(0, 1, 40))
        out = tmp_path / "surf.csv"
        assert main(["roc", "--scores", str(path), "--surface", "--alphas", "6", "--taus", "50",
                     "--out", str(out)]) == 0
        rows = _read_csv(out)
        assert len(rows) == 300
        half = [r for r in rows if float(r["alpha"]) == 0.5]
        assert len(half) == 50
        assert all(float(r["fpr"]) == float(r["tpr"]) for r in half)

    def test_from_generated_data(self, tmp_path):
        out = tmp_path / "roc.csv"
        assert main(["roc", "--gen", "gauss", "--n", "50", "--out", str(out)]) == 0
        rows = _read_csv(out)
        assert rows[0]["fpr"] == "0.0" and rows[-1]["tpr"] == "1.0"
