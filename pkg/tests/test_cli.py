import json
import math

import numpy as np
import pytest

from sgm import Dataset, StratifiedGraph, UndirectedGraph, bic_score, io
from sgm.cli import main
from sgm.distribution import conditional_odds_ratio

CSI_PHI = {"1": 0.2, "2": -0.3, "3": 0.1, "1,2": 1.0, "1,3": -1.0, "2,3": 1.5, "1,2,3": -1.5}


@pytest.fixture
def files(tmp_path, one_csi, two_csi, chordless_graph):
    paths = {
        "one_csi": tmp_path / "one_csi.json",
        "two_csi": tmp_path / "two_csi.json",
        "saturated": tmp_path / "saturated.json",
        "empty": tmp_path / "empty.json",
        "chordless": tmp_path / "chordless.json",
        "table": tmp_path / "table.json",
        "data": tmp_path / "data.csv",
    }
    io.save_model(one_csi, paths["one_csi"])
    io.save_model(two_csi, paths["two_csi"])
    io.save_model(StratifiedGraph(UndirectedGraph.complete(3)), paths["saturated"])
    io.save_model(StratifiedGraph(UndirectedGraph.empty(3)), paths["empty"])
    paths["chordless"].write_text(json.dumps({
        "schema": "sgm-v1", "nodes": 5, "edges": [[a + 1, b + 1] for a, b in chordless_graph.sorted_edges()],
        "strata": [{"edge": [3, 4], "contexts": [{"5": 1}]}],
    }))
    paths["table"].write_text(json.dumps({"d": 3, "phi": CSI_PHI}))
    assert main(["gen", "--table", str(paths["table"]), "-n", "2000", "--seed", "5", "--out", str(paths["data"])]) == 0
    return paths


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out = capsys.readouterr()
    return code, out


class TestValidate:
    def test_one_csi(self, files, capsys):
        code, out = run(capsys, "validate", "--model", files["one_csi"])
        report = json.loads(out.out)
        assert code == 0
        assert report["dimension"] == 6 and report["hierarchical"]
        assert report["linear_restrictions"] == [[[2, 3], [1, 2, 3]]]

    def test_non_chordal(self, files, capsys):
        code, out = run(capsys, "validate", "--model", files["chordless"])
        assert code == 2
        assert "NotChordal" in out.err


class TestFit:
    def test_converged(self, files, capsys):
        code, out = run(capsys, "fit", "--data", files["data"], "--model", files["one_csi"])
        report = json.loads(out.out)
        assert code == 0
        assert report["converged"]
        assert report["restrictions"]["passed"]
        assert report["config"]["eps"] == 1e-9

    def test_saturated_one_cycle(self, files, capsys):
        code, out = run(capsys, "fit", "--data", files["data"], "--model", files["saturated"])
        assert code == 0
        assert json.loads(out.out)["report"]["cycles"] == 1

    def test_non_chordal(self, files, capsys):
        code, out = run(capsys, "fit", "--data", files["data"], "--model", files["chordless"])
        assert code == 2
        assert "NotChordal" in out.err

    def test_not_converged(self, files, tmp_path, capsys):
        out_path = tmp_path / "fit.json"
        code, _ = run(capsys, "fit", "--data", files["data"], "--model", files["two_csi"],
                      "--max-cycles", 1, "--eps", 1e-15, "--out", out_path)
        assert code == 3
        report = json.loads(out_path.read_text())
        assert not report["converged"]
        assert report["report"]["cycles"] == 1

    def test_missing_data(self, files, capsys):
        code, out = run(capsys, "fit", "--model", files["one_csi"])
        assert code == 2
        assert "--data" in out.err

    def test_missing_file(self, files, capsys):
        code, _ = run(capsys, "fit", "--data", "/nonexistent.csv", "--model", files["one_csi"])
        assert code == 2

    def test_bad_eps(self, files, capsys):
        code, _ = run(capsys, "fit", "--data", files["data"], "--model", files["one_csi"], "--eps", -1)
        assert code == 2


class TestScore:
    def test_empty_model_closed_form(self, files, capsys):
        code, out = run(capsys, "score", "--data", files["data"], "--model", files["empty"])
        assert code == 0
        score = json.loads(out.out)["score"]
        rows = io.load_csv(files["data"]).rows
        n = len(rows)
        expected = 0.0
        for col in rows.T:
            k = col.sum()
            expected += k * math.log(k / n) + (n - k) * math.log((n - k) / n) - 0.5 * math.log(n)
        assert score["bic"] == pytest.approx(expected, abs=1e-8)
        assert score["total"] == pytest.approx(expected - 3 * math.log(2), abs=1e-8)

    def test_prior_flag(self, files, capsys):
        _, out = run(capsys, "score", "--data", files["data"], "--model", files["one_csi"], "--prior", "strata")
        assert json.loads(out.out)["score"]["log_prior"] == pytest.approx(-6 * math.log(2))

    def test_matches_library(self, files, capsys, one_csi):
        _, out = run(capsys, "score", "--data", files["data"], "--model", files["one_csi"])
        assert json.loads(out.out)["score"] == bic_score(io.load_csv(files["data"]), one_csi).as_dict()


class TestSearch:
    def test_needs_seed(self, files, capsys):
        code, out = run(capsys, "search", "--data", files["data"])
        assert code == 2
        assert "--seed" in out.err

    def test_zero_iterations(self, files, tmp_path, capsys):
        out_path = tmp_path / "s.json"
        code, _ = run(capsys, "search", "--data", files["data"], "--seed", 1, "--outer-iters", 0, "--out", out_path)
        assert code == 0
        report = json.loads(out_path.read_text())
        assert report["best"]["model"]["edges"] == []
        assert io.load_model(tmp_path / "s.model.json") == StratifiedGraph(UndirectedGraph.empty(3))

    def test_outputs_and_determinism(self, files, tmp_path, capsys):
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        for path in (a, b):
            assert main(["search", "--data", str(files["data"]), "--seed", "3", "--outer-iters", "25",
                         "--out", str(path)]) == 0
        assert (tmp_path / "a.trace.jsonl").read_bytes() == (tmp_path / "b.trace.jsonl").read_bytes()
        assert (tmp_path / "a.model.json").read_bytes() == (tmp_path / "b.model.json").read_bytes()
        lines = (tmp_path / "a.trace.jsonl").read_text().splitlines()
        assert len(lines) == 25
        assert set(json.loads(lines[0])) == {"iter", "proposed", "accepted", "total_score"}
        assert (tmp_path / "a.dot").read_text().startswith("graph sgm {")
        report = json.loads(a.read_text())
        posts = [s["posterior"] for s in report["top"]]
        assert posts == sorted(posts, reverse=True) and 0 < sum(posts) <= 1.0 + 1e-12

    def test_search_strata_exhaustive(self, files, capsys):
        code, out = run(capsys, "search-strata", "--data", files["data"], "--model", files["saturated"],
                        "--seed", 0, "--exhaustive")
        report = json.loads(out.out)
        assert code == 0
        assert report["distinct_states"] == 64

    def test_search_strata_mh(self, files, capsys):
        code, out = run(capsys, "search-strata", "--data", files["data"], "--model", files["saturated"],
                        "--seed", 0, "--inner-iters", 50)
        assert code == 0
        assert json.loads(out.out)["iterations"] == 50


class TestGen:
    def test_header_only(self, files, tmp_path, capsys):
        path = tmp_path / "none.csv"
        code, _ = run(capsys, "gen", "--table", files["table"], "-n", 0, "--seed", 1, "--out", path)
        assert code == 0
        assert path.read_text() == "X1,X2,X3\n"

    def test_degenerate_table(self, tmp_path, capsys):
        table = tmp_path / "point.json"
        probs = [0.0] * 8
        probs[6] = 1.0
        table.write_text(json.dumps({"d": 3, "probs": probs}))
        path = tmp_path / "point.csv"
        assert run(capsys, "gen", "--table", table, "-n", 5, "--seed", 1, "--out", path)[0] == 0
        assert path.read_text().splitlines()[1:] == ["0,1,1"] * 5

    def test_params_file(self, files, tmp_path):
        params = json.loads((tmp_path / "data.params.json").read_text())
        assert params["config"]["seed"] == 5
        assert params["table"]["bit_order"] == "lsb=var1"

    def test_csi_generator_odds_ratio(self, files, tmp_path, capsys):
        path = tmp_path / "big.csv"
        assert run(capsys, "gen", "--table", files["table"], "-n", 10_000, "--seed", 8, "--out", path)[0] == 0
        ds = io.load_csv(path)
        assert abs(conditional_odds_ratio(ds.empirical(), 1, 2, {0: 1}) - 1.0) < 0.1

    def test_projection_onto_model(self, tmp_path, capsys, files):
        table = tmp_path / "raw.json"
        table.write_text(json.dumps({"d": 3, "phi": {"1,2": 0.7, "2,3": 0.9, "1,2,3": 0.4}}))
        path = tmp_path / "proj.csv"
        code, _ = run(capsys, "gen", "--table", table, "--model", files["one_csi"], "-n", 10, "--seed", 2,
                      "--out", path)
        assert code == 0
        params = json.loads((tmp_path / "proj.params.json").read_text())
        projected = io.table_from_dict(params["table"])
        assert conditional_odds_ratio(projected, 1, 2, {0: 1}) == pytest.approx(1.0, abs=1e-8)


class TestConfig:
    def test_precedence(self, files, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"eps": 1e-7, "max_cycles": 50, "model": str(files["one_csi"])}))
        code, out = run(capsys, "fit", "--config", cfg, "--data", files["data"], "--eps", 1e-8)
        config = json.loads(out.out)["config"]
        assert code == 0
        assert config["eps"] == 1e-8
        assert config["max_cycles"] == 50
        assert config["model"] == str(files["one_csi"])
        assert config["outer_iters"] == 200

    def test_unknown_key(self, files, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"epsilon": 1}))
        code, out = run(capsys, "fit", "--config", cfg)
        assert code == 2
        assert "epsilon" in out.err


class TestExportDot:
    def test_stdout(self, files, capsys):
        code, out = run(capsys, "export-dot", "--model", files["one_csi"])
        assert code == 0
        assert 'n2 -- n3 [label="(1)"];' in out.out

    def test_reproducible_from_config(self, files, tmp_path, capsys):
        path = tmp_path / "fit.json"
        run(capsys, "fit", "--data", files["data"], "--model", files["one_csi"], "--out", path)
        first = json.loads(path.read_text())
        cfg = tmp_path / "again.json"
        cfg.write_text(json.dumps({k: v for k, v in first["config"].items() if k not in ("command", "out")}))
        run(capsys, "fit", "--config", cfg, "--out", path)
        assert json.loads(path.read_text())["table"] == first["table"]


def test_dataset_from_generated_rows(files):
    ds = io.load_csv(files["data"])
    assert isinstance(ds, Dataset) and ds.n == 2000
    assert np.all(ds.counts > 0)
