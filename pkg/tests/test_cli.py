from __future__ import annotations

import csv
import io
import json

import pytest

from fairaudit.cli import main
from fairaudit.compas import default_fixture_path


@pytest.fixture
def fixture_path():
    return str(default_fixture_path())


def _data(name):
    from importlib import resources

    return str(resources.files("fairaudit") / "data" / name)


def test_audit_counts_fixture(tmp_path, fixture_path, capsys):
    assert main(["audit", "--counts", fixture_path, "--pair", "black", "white", "--out", str(tmp_path)]) == 0
    assert "independence=No separation=No sufficiency=Yes" in capsys.readouterr().out
    payload = json.loads((tmp_path / "report.json").read_text())
    rep = payload["reports"][0]
    assert rep["verdicts"] == {"independence": "violated", "separation": "violated", "sufficiency": "satisfied"}
    assert payload["audit_run"]["outputs"] == ["report.json", "report.txt"]
    assert "Sufficiency: Yes if eps = 0.1" in (tmp_path / "report.txt").read_text()


def test_audit_rerun_byte_identical(tmp_path, fixture_path):
    args = ["audit", "--counts", fixture_path, "--pair", "black", "white", "--out", str(tmp_path)]
    main(args)
    first = (tmp_path / "report.json").read_bytes()
    main(args)
    assert (tmp_path / "report.json").read_bytes() == first


def test_audit_header_reproduces_report(tmp_path, compas_csv):
    out = tmp_path / "out"
    assert main(["audit", "--input", str(compas_csv), "--recipe", "compas", "--pair", "black", "white",
                 "--out", str(out)]) == 0
    first = (out / "report.json").read_bytes()
    argv = json.loads(first)["audit_run"]["command_line"]
    assert argv[:2] == ["fairaudit", "audit"]
    (out / "report.json").unlink()
    assert main(argv[1:]) == 0
    assert (out / "report.json").read_bytes() == first


def test_audit_csv_matches_table(tmp_path, compas_csv):
    assert main(["audit", "--input", str(compas_csv), "--recipe", "compas", "--pair", "black", "white",
                 "--out", str(tmp_path)]) == 0
    rep = json.loads((tmp_path / "report.json").read_text())["reports"][0]
    assert rep["gaps"]["independence"]["signed"] == pytest.approx(0.2402, abs=5e-4)


def test_audit_missing_column_no_outputs(tmp_path):
    src = tmp_path / "in.csv"
    src.write_text("y,g\n1,a\n0,b\n")
    out = tmp_path / "out"
    code = main(["audit", "--input", str(src), "--truth-col", "y", "--pred-col", "yhat", "--group-col", "g",
                 "--out", str(out)])
    assert code == 2
    assert not out.exists() or not any(out.iterdir())


def test_audit_bad_row_data_error(tmp_path):
    src = tmp_path / "in.csv"
    src.write_text("y,p,g\n1,1,a\nmaybe,0,b\n")
    assert main(["audit", "--input", str(src), "--truth-col", "y", "--pred-col", "p", "--group-col", "g",
                 "--out", str(tmp_path / "o")]) == 3


def test_audit_usage_errors(tmp_path, fixture_path):
    assert main(["audit", "--out", str(tmp_path)]) == 4
    assert main(["audit", "--counts", fixture_path, "--epsilon", "2", "--out", str(tmp_path)]) == 4
    assert main(["audit", "--counts", fixture_path, "--bogus", "--out", str(tmp_path)]) == 4


def test_compas_repro_default(capsys):
    assert main(["compas-repro"]) == 0
    out = capsys.readouterr().out
    assert "24/24 metrics matched" in out
    assert "12/12 fairness determinations matched" in out


def test_compas_repro_csv(capsys, compas_csv):
    assert main(["compas-repro", "--csv", str(compas_csv)]) == 0
    assert "CSV pipeline reproduces Table 5b counts" in capsys.readouterr().out


def test_compas_repro_propublica_recipe_mismatch(capsys, compas_csv):
    assert main(["compas-repro", "--csv", str(compas_csv), "--recipe", "propublica"]) == 6
    assert "CSV DIFF" in capsys.readouterr().out


def test_compas_repro_json(capsys):
    assert main(["compas-repro", "--json"]) == 0
    payload = json.loads(capsys.readouterr().out)
    assert payload["summary"]["passed"] is True
    assert len(payload["cells"]) == 36
    assert all(c["passed"] for c in payload["cells"])


def test_compas_repro_corrupted_fixture(tmp_path, fixture_path):
    bad = tmp_path / "bad.txt"
    bad.write_text(open(fixture_path).read().replace("1369", "1370"))
    assert main(["compas-repro", "--fixture", str(bad)]) == 5


def test_compas_repro_wrong_counts_mismatch(tmp_path):
    from fairaudit.compas import format_fixture, load_count_fixture
    from fairaudit.metrics import ConfusionMatrix

    counts = load_count_fixture()
    counts["white"] = ConfusionMatrix(tp=505, fn=461, fp=349, tn=1339)
    p = tmp_path / "c.txt"
    p.write_text(format_fixture(counts))
    assert main(["compas-repro", "--fixture", str(p)]) == 6


def test_compas_repro_out(tmp_path):
    assert main(["compas-repro", "--out", str(tmp_path)]) == 0
    payload = json.loads((tmp_path / "report.json").read_text())
    assert payload["summary"]["metrics_matched"] == 24
    assert len(payload["audit_run"]["input_sha256"]["fixture"]) == 64


def test_gaming_default_config(tmp_path):
    out = tmp_path / "g"
    assert main(["gaming", "--config", _data("gaming_default.cfg"), "--out", str(out)]) == 0
    rows = list(csv.DictReader(io.StringIO((out / "trace.csv").read_text())))
    assert float(rows[0]["acceptance_rate"]) == 1.0
    assert float(rows[0]["train_accuracy"]) >= 0.95
    summary = json.loads((out / "summary.json").read_text())
    assert summary["summary"]["final_dominance"] >= 0.95
    assert summary["audit_run"]["config"]["backend"] in ("numba", "numpy")


def test_gaming_seed_repeatable(tmp_path):
    args = ["gaming", "--seed", "7", "--set", "n_agents=300", "--set", "iterations=500"]
    assert main(args + ["--out", str(tmp_path / "a")]) == 0
    assert main(args + ["--out", str(tmp_path / "b")]) == 0
    assert (tmp_path / "a" / "trace.csv").read_bytes() == (tmp_path / "b" / "trace.csv").read_bytes()


def test_gaming_requires_seed(tmp_path, capsys):
    assert main(["gaming", "--out", str(tmp_path)]) == 4
    assert "seed" in capsys.readouterr().err


def test_gaming_invalid_key(tmp_path, capsys):
    cfg = tmp_path / "g.cfg"
    cfg.write_text("seed = 1\nroundz = 3\n")
    assert main(["gaming", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 4
    assert "roundz" in capsys.readouterr().err


def test_gaming_plot(tmp_path):
    pytest.importorskip("matplotlib")
    out = tmp_path / "p"
    assert main(["gaming", "--seed", "42", "--plot", "--out", str(out)]) == 0
    assert len(list(out.glob("round_*.svg"))) == 3


def test_stereotype_debias(tmp_path, capsys):
    out = tmp_path / "s"
    assert main(["stereotype", "--embeddings", _data("planted_embeddings.txt"),
                 "--wordlist", _data("occupations.txt"), "--debias", "--out", str(out)]) == 0
    report = json.loads((out / "report.json").read_text())
    assert abs(report["before"]["mean"]) > 0.01
    assert abs(report["after"]["mean"]) < 1e-6
    assert (out / "scores_debiased.csv").exists()


def test_stereotype_missing_attribute(tmp_path):
    assert main(["stereotype", "--embeddings", _data("planted_embeddings.txt"), "--wordlist",
                 _data("occupations.txt"), "--pair", "man/woman", "--out", str(tmp_path / "o")]) == 3


def test_stereotype_empty_wordlist(tmp_path):
    wl = tmp_path / "empty.txt"
    wl.write_text("")
    assert main(["stereotype", "--embeddings", _data("planted_embeddings.txt"), "--wordlist", str(wl),
                 "--out", str(tmp_path / "o")]) == 3


def test_decode(capsys):
    assert main(["decode", "--dist", "he=0.6,she=0.4", "--mode", "argmax", "-n", "1000"]) == 0
    assert json.loads(capsys.readouterr().out)["frequencies"] == {"he": 1000}
    assert main(["decode", "--dist", "he=0.6,she=0.4", "--mode", "proportional"]) == 4


def test_version(capsys):
    assert main(["--version"]) == 0
    assert "0.1.0" in capsys.readouterr().out
