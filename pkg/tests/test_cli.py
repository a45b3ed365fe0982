import csv
import json
import os
from pathlib import Path

import numpy as np
import pytest

from bindgraph.cli import EXIT_DATA, EXIT_NUMERIC, EXIT_OK, EXIT_USAGE, THREADS_ENV, build_parser, main

from conftest import write_lines

GOLDEN = Path(__file__).parent / "golden"


def check_golden(name: str, text: str) -> None:
    path = GOLDEN / name
    if os.environ.get("BINDGRAPH_UPDATE_GOLDEN"):
        path.parent.mkdir(exist_ok=True)
        path.write_text(text)
    assert text == path.read_text()


def run(capsys, *argv):
    code = main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


@pytest.fixture
def path4(tmp_path):
    return write_lines(tmp_path / "path4.txt", ["0 1", "1 2", "2 3"])


@pytest.fixture
def clustered(tmp_path):
    # two triangles joined by a bridge, plus a pendant node
    return write_lines(tmp_path / "g.txt", ["0 1", "0 2", "1 2", "2 3", "3 4", "3 5", "4 5", "5 6"])


@pytest.fixture
def sb_setup(tmp_path, clustered, capsys):
    part = write_lines(tmp_path / "blocks.txt", [f"{v} {int(v > 2)}" for v in range(7)])
    model = tmp_path / "sb.json"
    assert run(capsys, "fit-model", clustered, "--model", "sb", "--partition", part, "--out", model)[0] == 0
    binding = tmp_path / "bind.json"
    json.dump({"scheme": "parallel", "R": 4, "g": [0.6, 0.8], "residual_coupling": "independent"},
              binding.open("w"))
    return model, binding


class TestFitModel:
    def test_er(self, capsys, path4):
        code, out, _ = run(capsys, "fit-model", path4, "--model", "er")
        assert code == EXIT_OK
        assert json.loads(out) == {"model": "er", "n0": 4, "p0": 0.5}

    def test_sb(self, capsys, tmp_path):
        g = write_lines(tmp_path / "g.txt", ["0 1", "0 2", "3 3"])
        part = write_lines(tmp_path / "b.txt", ["0 1", "1 1", "2 2", "3 2"])
        code, out, _ = run(capsys, "fit-model", g, "--model", "sb", "--partition", part)
        assert code == EXIT_OK
        assert json.loads(out)["pB"] == [[1.0, 0.25], [0.25, 0.0]]

    def test_sb_without_partition(self, capsys, path4):
        assert run(capsys, "fit-model", path4, "--model", "sb")[0] == EXIT_USAGE

    def test_kr_needs_seed_matrix(self, capsys, path4):
        assert run(capsys, "fit-model", path4, "--model", "kr")[0] == EXIT_USAGE

    def test_kr(self, capsys, tmp_path, path4):
        theta = write_lines(tmp_path / "theta.txt", ["0.9 0.5", "0.5 0.1"])
        code, out, _ = run(capsys, "fit-model", path4, "--model", "kr", "--theta", theta, "--k", 2)
        assert code == EXIT_OK and json.loads(out)["k"] == 2

    def test_missing_graph(self, capsys, tmp_path):
        assert run(capsys, "fit-model", tmp_path / "nope.txt", "--model", "er")[0] == EXIT_DATA

    def test_malformed_graph(self, capsys, tmp_path):
        bad = write_lines(tmp_path / "bad.txt", ["0 1", "1 x"])
        code, _, err = run(capsys, "fit-model", bad, "--model", "er")
        assert code == EXIT_DATA and "line 2" in err

    def test_unknown_model(self, capsys, path4):
        with pytest.raises(SystemExit) as e:
            main(["fit-model", str(path4), "--model", "ba"])
        assert e.value.code == EXIT_USAGE


class TestGolden:
    def test_motif_probs(self, capsys):
        code, out, _ = run(capsys, "motif-probs", "--p", 0.2, 0.5, 0.7, "--g", 0.5, 0.5, 0.5,
                           "--scheme", "local", "--R", 2, "--format", "json")
        assert code == EXIT_OK
        check_golden("motif_probs_local.json", out)

    def test_expected_counts(self, capsys, sb_setup):
        model, binding = sb_setup
        code, out, _ = run(capsys, "expected-counts", model, "--binding", binding, "--format", "json")
        assert code == EXIT_OK
        check_golden("expected_counts_sb.json", out)

    def test_stats(self, capsys, clustered, tmp_path):
        ccdf = tmp_path / "ccdf.csv"
        code, out, _ = run(capsys, "stats", clustered, "--format", "csv", "--ccdf-out", ccdf)
        assert code == EXIT_OK
        check_golden("stats.csv", out)
        check_golden("stats_ccdf.csv", ccdf.read_text())

    def test_generated_edge_list(self, capsys, sb_setup, tmp_path):
        model, binding = sb_setup
        assert run(capsys, "generate", model, binding, "--count", 2, "--seed", 11, "--out", tmp_path / "o")[0] == 0
        check_golden("generated_graph_001.txt", (tmp_path / "o" / "graph_001.txt").read_text())

    def test_fit_binding_files(self, capsys, tmp_path, clustered):
        model = tmp_path / "cl.json"
        run(capsys, "fit-model", clustered, "--model", "cl", "--out", model)
        out, report = tmp_path / "b.json", tmp_path / "r.json"
        code, _, _ = run(capsys, "fit-binding", model, "--graph", clustered, "--scheme", "local", "--R", 10,
                         "--seed", 3, "--out", out, "--report", report)
        assert code == EXIT_OK
        b = json.loads(out.read_text())
        assert set(b) == {"scheme", "R", "g", "residual_coupling", "seed"}
        r = json.loads(report.read_text())
        assert {"iterations", "objective_trace", "final_g", "achieved", "converged", "warnings",
                "scheme", "R", "residual_coupling"} <= set(r)
        rounded = json.dumps({k: np.round(v, 6).tolist() for k, v in b.items() if k == "g"})
        check_golden("fit_binding_cl_g.json", rounded + "\n")


class TestGenerateCompare:
    def test_same_seed_same_files(self, capsys, sb_setup, tmp_path):
        model, binding = sb_setup
        for d, threads in (("a", 1), ("b", 3)):
            run(capsys, "generate", model, binding, "--count", 5, "--seed", 2, "--threads", threads,
                "--out", tmp_path / d)
        for f in sorted((tmp_path / "a").glob("graph_*.txt")):
            assert f.read_bytes() == (tmp_path / "b" / f.name).read_bytes()

    def test_summary_schema(self, capsys, sb_setup, tmp_path):
        model, binding = sb_setup
        run(capsys, "generate", model, binding, "--count", 3, "--seed", 2, "--out", tmp_path / "o")
        rows = list(csv.DictReader((tmp_path / "o" / "summary.csv").open()))
        assert len(rows) == 3
        assert list(rows[0]) == ["graph", "edges", "triangles", "gcc", "alcc", "seconds"]

    def test_compare_with_copies(self, capsys, clustered, tmp_path):
        d = tmp_path / "copies"
        d.mkdir()
        for i in range(3):
            (d / f"graph_{i:03d}.txt").write_bytes(clustered.read_bytes())
        code, out, _ = run(capsys, "compare", clustered, d, "--format", "json", "--out-dir", tmp_path / "cc")
        rec = json.loads(out)
        assert code == EXIT_OK
        assert rec["normalized_triangles"] == 1.0 and rec["overlap"] == 1.0
        rows = list(csv.DictReader((tmp_path / "cc" / "degree_ccdf.csv").open()))
        assert rows and float(rows[0]["std"]) == 0.0

    def test_compare_empty_dir(self, capsys, clustered, tmp_path):
        (tmp_path / "empty").mkdir()
        assert run(capsys, "compare", clustered, tmp_path / "empty")[0] == EXIT_DATA

    def test_overlap(self, capsys, sb_setup):
        model, _ = sb_setup
        code, out, _ = run(capsys, "overlap", "--model", model, "--format", "json")
        assert code == EXIT_OK and 0 < json.loads(out)["analytic"] <= 1
        assert run(capsys, "overlap")[0] == EXIT_USAGE


class TestNumericAndOracle:
    def test_fit_failure_exit_code(self, capsys, tmp_path, clustered):
        model = tmp_path / "er.json"
        run(capsys, "fit-model", clustered, "--model", "er", "--out", model)
        code, _, err = run(capsys, "fit-binding", model, "--triangles", 1e-320, "--scheme", "local",
                           "--out", tmp_path / "b.json")
        assert code == EXIT_NUMERIC and "numerical" in err

    def test_fit_binding_needs_target(self, capsys, tmp_path, clustered):
        model = tmp_path / "er.json"
        run(capsys, "fit-model", clustered, "--model", "er", "--out", model)
        assert run(capsys, "fit-binding", model, "--scheme", "local", "--out", tmp_path / "b.json")[0] == EXIT_USAGE

    def test_oracle_check(self, capsys, tmp_path):
        out = tmp_path / "o.csv"
        code, _, err = run(capsys, "oracle-check", "--configs", 1, "--trials", 20000, "--seed", 1, "--out", out)
        assert code == EXIT_OK and "40/40" in err
        header = out.read_text().splitlines()[0]
        check_golden("oracle_header.csv", header + "\n")

    def test_benchmark(self, capsys, sb_setup):
        model, binding = sb_setup
        code, out, _ = run(capsys, "benchmark", model, "--binding", binding, "--count", 2, "--seed", 1)
        rows = list(csv.DictReader(out.splitlines()))
        assert code == EXIT_OK
        assert [r["variant"] for r in rows] == ["eigm", "parallel-serial", "parallel-threaded"]
        assert sorted(int(r["rank"]) for r in rows) == [1, 2, 3]


def test_thread_env_default(monkeypatch):
    monkeypatch.setenv(THREADS_ENV, "6")
    args = build_parser().parse_args(["generate", "m.json", "b.json", "--out", "x"])
    assert args.threads == 6


def test_every_subcommand_exists():
    names = {"fit-model", "fit-binding", "generate", "stats", "compare", "overlap", "motif-probs",
             "expected-counts", "oracle-check", "benchmark"}
    sub = next(a for a in build_parser()._actions if a.dest == "command")
    assert set(sub.choices) == names
