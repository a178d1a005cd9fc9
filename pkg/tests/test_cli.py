import json

import pytest

from walknav.cli import main
from walknav.graph import save_graph
from walknav.topologies import two_route_loop
from walknav.walk import read_trajectory_csv


def test_classify(tmp_path, capsys):
    save_graph(two_route_loop(), tmp_path / "g.json")
    assert main(["classify", "--graph", str(tmp_path / "g.json")]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["L_min"] == 1 and report["shortest_path_count"] == 1


def test_classify_scenario_param(capsys):
    assert main(["classify", "--scenario", "two_decision_points", "--param", "l4=20"]) == 0
    assert json.loads(capsys.readouterr().out)["L_min"] == 6


def test_simulate_writes_csv(tmp_path):
    out = tmp_path / "t.csv"
    rc = main(["simulate", "--scenario", "single_decision_tradeoff", "--phi", "2", "--n-walks",
               "500", "--runs", "2", "--seed", "1", "--out", str(out)])
    assert rc == 0
    assert ("edge_rw", "0") in read_trajectory_csv(out)


def test_seed_is_mandatory():
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--scenario", "grid25"])
    assert exc.value.code == 2


def test_experiment_exit_codes(tmp_path, capsys):
    ok = main(["experiment", "--scenario", "sequential_clocks", "--param", "depth=2",
               "--n-walks", "20000", "--runs", "5", "--seed", "0", "--out", str(tmp_path / "a")])
    assert ok in (0, 1)
    assert "clock_slope_p1" in capsys.readouterr().out
    bad = main(["experiment", "--scenario", "complete_graph", "--mode", "multiple", "--n-walks",
                "10", "--seed", "0", "--out", str(tmp_path / "b")])
    assert bad == 2
    cfgerr = main(["experiment", "--scenario", "grid25", "--param", "size=0", "--seed", "0",
                   "--out", str(tmp_path / "c")])
    assert cfgerr == 2


def test_experiment_fail_exit(tmp_path):
    # the 0.95 shortest-path target is out of reach after 2000 walks
    rc = main(["experiment", "--scenario", "two_decision_points", "--n-walks", "2000", "--runs",
               "3", "--seed", "0", "--out", str(tmp_path / "x")])
    assert rc == 1


def test_config_file_and_evaluate(tmp_path, capsys):
    cfg = {"scenario": "single_decision_tradeoff", "params": {"L1": 2, "L2": 3},
           "reward": {"kind": "inverse_linear", "mode": "multiple"}, "n_walks": 3000,
           "run_count": 4, "checkpoints": 20, "output_dir": str(tmp_path / "o")}
    (tmp_path / "c.json").write_text(json.dumps(cfg))
    rc = main(["experiment", "--config", str(tmp_path / "c.json"), "--seed", "3"])
    assert rc in (0, 1)
    first = capsys.readouterr().out
    assert main(["evaluate", str(tmp_path / "o")]) == rc
    assert capsys.readouterr().out.splitlines()[:3] == first.splitlines()[1:4]


def test_bad_config_file(tmp_path):
    (tmp_path / "c.json").write_text("{not json")
    assert main(["experiment", "--config", str(tmp_path / "c.json"), "--seed", "1"]) == 2
    assert main(["evaluate", str(tmp_path / "missing")]) == 2


def test_predict(tmp_path, capsys):
    rc = main(["predict", "--scenario", "sequential_clocks", "--out", str(tmp_path / "p")])
    assert rc == 0
    assert "predicted_beta_exponents" in capsys.readouterr().out


def test_check(capsys):
    assert main(["check", "--which", "appendix"]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert lines and all(line.startswith("PASS") for line in lines)
