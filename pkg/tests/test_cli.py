import json

import pytest

from outdeg1.cli import main


def test_simulate_rows_and_determinism(tmp_path):
    args = ["simulate", "--model", "segment", "--intensity", "1", "--side", "20", "--seed", "7", "--replicates", "10"]
    assert main([*args, "--out", str(tmp_path / "a.csv")]) == 0
    assert main([*args, "--out", str(tmp_path / "b.csv"), "--threads", "3"]) == 0
    a = (tmp_path / "a.csv").read_bytes()
    assert a == (tmp_path / "b.csv").read_bytes()
    assert len(a.decode().splitlines()) == 11


def test_simulate_navigation_needs_epsilon(tmp_path):
    assert main(["simulate", "--model", "navigation", "--side", "5", "--out", str(tmp_path / "x.csv")]) == 2


def test_simulate_bad_flag_exits_2(tmp_path):
    with pytest.raises(SystemExit) as exc:
        main(["simulate", "--side", "-1", "--out", str(tmp_path / "x.csv")])
    assert exc.value.code == 2


def test_simulate_solutions(tmp_path):
    out = tmp_path / "sol"
    assert main(["simulate", "--side", "6", "--replicates", "2", "--out", str(tmp_path / "r.csv"), "--solutions", str(out)]) == 0
    assert sorted(p.name for p in out.iterdir()) == [
        "config_0000.json", "config_0001.json", "solution_0000.csv", "solution_0001.csv",
    ]  # fmt: skip


def test_simulate_strict_on_degenerate(tmp_path):
    # intensity high enough in a tiny window that no tie is expected; strict passes
    assert main(["simulate", "--side", "3", "--intensity", "2", "--strict", "--out", str(tmp_path / "r.csv")]) == 0


def test_solve_strict_degenerate(tmp_path):
    cfg = tmp_path / "tie.json"
    cfg.write_text(
        json.dumps(
            {
                "schema": "outdeg1-config",
                "version": 1,
                "window": {"lo": [-1, -3], "hi": [3, 1]},
                "points": [{"id": 0, "x": 0, "y": 0, "mark": 0}, {"id": 1, "x": 2, "y": -2, "mark": 0.25}],
            }
        )
    )
    assert main(["solve", "--input", str(cfg), "--out", str(tmp_path / "s.csv"), "--strict"]) == 3
    assert main(["solve", "--input", str(cfg), "--out", str(tmp_path / "s.csv")]) == 0


@pytest.mark.parametrize("model", [["--model", "segment"], ["--model", "navigation", "--epsilon", "1.0"]])
def test_loopcheck(tmp_path, model):
    out = tmp_path / "lc.json"
    assert main(["loopcheck", *model, "--anchors", "100", "--out", str(out)]) == 0
    doc = json.loads(out.read_text())
    assert doc["schema"] == "outdeg1-loopcheck" and doc["anchors"] == 100
    assert doc["pass_fraction"]["passed"] == 1.0


def test_loopcheck_zero_anchors(tmp_path, capsys):
    assert main(["loopcheck", "--anchors", "0"]) == 0
    doc = json.loads(capsys.readouterr().out)
    assert doc["anchors"] == 0 and doc["failures"] == []


def test_shield(tmp_path, capsys):
    out = tmp_path / "s.json"
    assert main(["shield", "--epsilon", "0.3", "--intensity", "0.000001", "--trials", "20", "--out", str(out)]) == 0
    assert "p_hat=0.0" in capsys.readouterr().out
    doc = json.loads(out.read_text())
    assert doc["schema"] == "outdeg1-shield" and doc["successes"] == 0
    assert main(["shield", "--epsilon", "1.5", "--intensity", "1", "--trials", "2"]) == 2


def test_render_and_sample(tmp_path):
    cfg, svg = tmp_path / "c.json", tmp_path / "c.svg"
    assert main(["sample", "--side", "5", "--seed", "3", "--out", str(cfg)]) == 0
    assert main(["render", "--input", str(cfg), "--out", str(svg)]) == 0
    assert svg.read_text().startswith("<?xml")
    sol = tmp_path / "s.csv"
    assert main(["solve", "--input", str(cfg), "--model", "navigation", "--epsilon", "0.5", "--out", str(sol)]) == 0
    assert main(["render", "--input", str(cfg), "--solution", str(sol), "--model", "navigation", "--epsilon", "0.5", "--out", str(svg)]) == 0


def test_render_unreadable_input(tmp_path):
    assert main(["render", "--input", str(tmp_path / "missing.json"), "--out", str(tmp_path / "x.svg")]) == 2
