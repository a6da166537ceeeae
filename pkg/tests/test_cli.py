import csv
import json
import subprocess
import sys

import pytest

from classfair.cli import main
from classfair.instance import load_instance


def _strip_created(text: str) -> str:
    return "\n".join(ln for ln in text.splitlines() if "created" not in ln)


def _csv_rows(path):
    lines = [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def test_gen_upper_triangular(tmp_path):
    out = tmp_path / "ut.json"
    assert main(["gen", "upper_triangular", "n=3", "--out", str(out)]) == 0
    inst = load_instance(out)
    assert (inst.num_agents, inst.num_items, inst.num_edges) == (3, 3, 6)
    meta = json.loads(out.read_text())["meta"]
    assert meta["tool"] == "classfair" and meta["seed"] == 20240517
    assert meta["config"]["gen_params"] == {"n": 3}


def test_gen_cnsw_and_round_trip(tmp_path):
    out = tmp_path / "cx.json"
    assert main(["gen", "cnsw_counterexample", "--out", str(out)]) == 0
    inst = load_instance(out)
    assert (inst.num_agents, inst.num_items) == (8, 6)
    again = tmp_path / "cx2.json"
    main(["gen", "cnsw_counterexample", "--out", str(again)])
    assert _strip_created(out.read_text()) == _strip_created(again.read_text())


def test_gen_list_param(tmp_path):
    out = tmp_path / "r.json"
    args = ["gen", "random_bipartite", "k=2", "agents_per_class=[1,3]", "num_items=4", "edge_prob=0.5", "seed=3"]
    assert main(args + ["--out", str(out)]) == 0
    assert load_instance(out).class_sizes() == (1, 3)


def test_gen_errors(capsys):
    assert main(["gen", "unknown_name"]) == 1
    err = capsys.readouterr().err
    assert "upper_triangular" in err and "cnsw_counterexample" in err
    assert main(["gen", "upper_triangular", "n=0"]) == 2
    assert main(["gen", "upper_triangular", "m=3"]) == 2
    assert main(["gen", "upper_triangular", "n"]) == 1


def test_run_reports_metrics(tmp_path, capsys):
    inst = tmp_path / "r.json"
    main(["gen", "random_bipartite", "k=3", "agents_per_class=2", "num_items=8", "edge_prob=0.4", "seed=1",
          "--out", str(inst)])
    out = tmp_path / "run.json"
    assert main(["run", str(inst), "--algorithm", "random", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["report"]["nonwasteful"] is True
    assert doc["meta"]["config"]["algorithm"] == "random"


def test_run_greedy_contested_item(tmp_path):
    path = tmp_path / "one.json"
    path.write_text(json.dumps({
        "num_classes": 2,
        "agents": [{"id": 0, "class": 0}, {"id": 1, "class": 1}],
        "items": [{"id": 0, "neighbors": [0, 1]}],
    }))
    out = tmp_path / "o.json"
    assert main(["run", str(path), "--algorithm", "greedy_lexico", "--out", str(out)]) == 0
    assert json.loads(out.read_text())["report"]["cef_alpha"] == 0.0


def test_run_with_generator_source(tmp_path):
    out = tmp_path / "o.csv"
    assert main(["run", "--gen", "upper_triangular", "--param", "n=4", "--algorithm", "greedy_lexico",
                 "--format", "csv", "--out", str(out)]) == 0
    text = out.read_text()
    assert "report.usw,4" in text and "# seed=20240517" in text


def test_run_errors(tmp_path, capsys):
    assert main(["run", str(tmp_path / "missing.json")]) == 2
    assert main(["run"]) == 1
    bad = tmp_path / "bad.json"
    bad.write_text('{"num_classes": 2, "agents": [{"id": 0, "class": 0}], "items": []}')
    assert main(["run", str(bad)]) == 2
    assert "class 1" in capsys.readouterr().err
    assert main(["run", str(bad), "--algorithm", "ranking"]) == 1


def test_exp_pof(tmp_path):
    out = tmp_path / "pof.csv"
    assert main(["exp", "pof", "k=50", "p=1", "q=2", "--format", "csv", "--out", str(out)]) == 0
    rows = _csv_rows(out)
    assert list(rows[0]) == ["preset", "param_json", "metric", "mean", "stderr", "target", "tolerance", "pass"]
    ratio = next(r for r in rows if r["metric"] == "analytic_ratio")
    assert float(ratio["mean"]) == pytest.approx(0.6711, abs=1e-4)


def test_exp_json_mirrors_csv(tmp_path):
    c = tmp_path / "pof.csv"
    j = tmp_path / "pof.json"
    main(["exp", "pof", "--format", "csv", "--out", str(c)])
    main(["exp", "pof", "--format", "json", "--out", str(j)])
    rows = _csv_rows(c)
    doc = json.loads(j.read_text())
    assert [r["metric"] for r in rows] == [r["metric"] for r in doc["rows"]]
    assert [float(r["mean"]) for r in rows] == [float(r["mean"]) for r in doc["rows"]]


def test_exp_divisible_row(tmp_path):
    out = tmp_path / "d.json"
    assert main(["exp", "divisible", "n=1000", "--out", str(out)]) == 0
    row = next(r for r in json.loads(out.read_text())["rows"] if r["metric"] == "beta_analytic")
    assert row["target"] == 0.677 and row["pass"]


def test_exp_cef_upper_envy_row(tmp_path):
    out = tmp_path / "u.json"
    code = main(["exp", "cef_upper", "n=200", "--trials", "20", "--out", str(out)])
    assert code in (0, 3)
    row = next(r for r in json.loads(out.read_text())["rows"] if r["metric"] == "envy_ratio")
    assert row["target"] == pytest.approx(0.7616, abs=1e-4)


def test_exp_reproducible_modulo_timestamp(tmp_path):
    a = tmp_path / "a.csv"
    b = tmp_path / "b.csv"
    args = ["exp", "cef_upper", "n=100", "--trials", "10", "--seed", "42", "--format", "csv"]
    main(args + ["--out", str(a)])
    main(args + ["--out", str(b), "--threads", "2"])
    assert _strip_created(a.read_text()) == _strip_created(b.read_text())
    c = tmp_path / "c.csv"
    main(["exp", "cef_upper", "n=100", "--trials", "10", "--seed", "43", "--format", "csv", "--out", str(c)])
    assert _strip_created(a.read_text()) != _strip_created(c.read_text())


def test_exp_failure_exit_code(tmp_path):
    # a handful of trials on a tiny instance cannot hit the asymptotic targets
    assert main(["exp", "cef_upper", "n=10", "--trials", "3", "--out", str(tmp_path / "x.json")]) == 3


def test_exp_errors():
    assert main(["exp", "nope"]) == 1
    assert main(["exp", "pof", "bogus=1"]) == 1
    assert main(["exp", "pof", "--trials", "5"]) == 1
    assert main(["exp", "pof", "k=1"]) == 2


def test_oracle_commands(tmp_path, capsys):
    assert main(["oracle", "usw_opt", "--gen", "upper_triangular", "--param", "n=5"]) == 0
    assert json.loads(capsys.readouterr().out)["usw_opt"] == 5
    assert main(["oracle", "cmnw", "--gen", "cnsw_counterexample"]) == 0
    assert json.loads(capsys.readouterr().out)["cnsw"] == 3.0
    assert main(["oracle", "prop", "--gen", "upper_triangular", "--param", "n=4"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["classes"][0]["prop"] == 4 and "divisible_gap" in doc["classes"][0]


def test_oracle_cap_error(tmp_path, capsys):
    path = tmp_path / "big.json"
    main(["gen", "upper_triangular", "n=11", "--out", str(path)])
    assert main(["oracle", "prop", str(path)]) == 2
    assert "|M| <= 10" in capsys.readouterr().err
    assert main(["oracle", "prop", str(path), "--item-cap", "11"]) == 0


def test_atomic_write_leaves_no_temp_files(tmp_path):
    out = tmp_path / "x.json"
    main(["gen", "upper_triangular", "n=2", "--out", str(out)])
    assert [p.name for p in tmp_path.iterdir()] == ["x.json"]
    assert main(["gen", "upper_triangular", "n=2", "--out", str(tmp_path / "no" / "dir.json")]) == 2


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "classfair", "--version"], capture_output=True, text=True)
    assert res.returncode == 0 and "classfair" in res.stdout
    res = subprocess.run([sys.executable, "-m", "classfair", "bogus"], capture_output=True, text=True)
    assert res.returncode == 1
