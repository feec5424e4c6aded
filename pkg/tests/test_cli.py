import csv
import json
import subprocess
import sys

import numpy as np
import pytest

from pottslab import io
from pottslab.cli import EXIT_DEGENERATE, EXIT_NOT_CONVERGED, EXIT_OK, EXIT_USAGE, main
from pottslab.lattice import FREE, Grid, PottsParams
from pottslab.samplers import ChainConfig, chain_rng, gibbs_sample, quench


def read_rows(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


@pytest.fixture(scope="module")
def moderate_grid(tmp_path_factory):
    cfg = ChainConfig(sample_size=1, burn_in=400, seed=31, keep_grids=True)
    grid = gibbs_sample(30, 30, 3, PottsParams.zero(3, 0.5), cfg).grid(0)
    return io.write_grid(tmp_path_factory.mktemp("grids") / "moderate.csv", grid)


@pytest.fixture(scope="module")
def frozen_grid(tmp_path_factory):
    grid = quench(30, 30, 4, PottsParams.zero(4, 1.4), 50, chain_rng(6000, 0, 14))
    return io.write_grid(tmp_path_factory.mktemp("grids") / "frozen.csv", grid)


def test_sample_writes_tables(tmp_path):
    out = tmp_path / "run"
    assert main(["sample", "--width", "30", "--height", "30", "-K", "4", "--beta", "0.5",
                 "--sample-size", "500", "--burn-in", "100", "--out", str(out)]) == EXIT_OK
    rows = read_rows(out / "stats.csv")
    assert len(rows) == 500
    assert all(sum(int(r[f"t_{k}"]) for k in range(1, 5)) == 900 for r in rows)
    assert len(read_rows(out / "counts_long.csv")) == 2000
    manifest = io.read_json(out / "manifest.json")
    assert manifest["command"] == "sample" and manifest["exit_code"] == 0
    assert manifest["outputs"] == ["counts_long.csv", "histogram.csv", "stats.csv"]


def test_stats_prints_json(tmp_path, capsys):
    path = io.write_grid(tmp_path / "cb.csv",
                         Grid.from_labels((np.indices((3, 3)).sum(axis=0) % 2) + 1, 2, FREE))
    assert main(["stats", "--grid", str(path)]) == EXIT_OK
    data = json.loads(capsys.readouterr().out)
    assert data == {"width": 3, "height": 3, "K": 2, "boundary": "free",
                    "t_1": 5, "t_2": 4, "s": 0}


def test_exact_uniform(tmp_path, capsys):
    assert main(["exact", "--width", "2", "--height", "2", "--boundary", "free",
                 "--out", str(tmp_path)]) == EXIT_OK
    data = io.read_json(tmp_path / "exact.json")
    np.testing.assert_allclose(data["state_probabilities"], 1 / 16)
    assert sum(row["count"] for row in data["table"]) == 16
    assert "16 states" in capsys.readouterr().out


def test_scenario_preset(tmp_path):
    assert main(["scenario", "--preset", "4", "--out", str(tmp_path)]) == EXIT_OK
    grid = io.read_grid(tmp_path / "grid.csv")
    t = np.bincount(grid.flat, minlength=4)
    assert t[0] == t.max()
    assert io.read_json(tmp_path / "scenario.json")["mu"] == [1.0, 0.5, 0.0, 0.0]


def test_fit_moderate_grid(tmp_path, moderate_grid):
    assert main(["fit", "--grid", str(moderate_grid), "--seed", "4",
                 "--out", str(tmp_path)]) == EXIT_OK
    report = io.read_json(tmp_path / "report.json")
    assert report["converged"] and report["moment_check"]["passed"]
    assert report["estimates"]["beta"] == pytest.approx(0.5, abs=0.1)
    assert "wall_time" not in report
    assert "fit_seconds" in io.read_json(tmp_path / "manifest.json")["timings"]


def test_fit_frozen_grid_does_not_converge(tmp_path, frozen_grid):
    assert main(["fit", "--grid", str(frozen_grid), "--out", str(tmp_path)]) == EXIT_NOT_CONVERGED
    report = io.read_json(tmp_path / "report.json")
    assert not report["converged"]
    assert report["diagnosis"]["recommendation"] == "needs_tapering"
    assert io.read_json(tmp_path / "manifest.json")["exit_code"] == EXIT_NOT_CONVERGED


def test_diagnose_frozen_grid(tmp_path, frozen_grid):
    assert main(["diagnose", "--grid", str(frozen_grid), "--out", str(tmp_path)]) == EXIT_OK
    data = io.read_json(tmp_path / "diagnosis.json")
    assert data["diagnosis"]["recommendation"] == "needs_tapering"
    assert data["diagnosis"]["oscillating"]


def test_monochrome_grid_is_degenerate(tmp_path, capsys):
    path = tmp_path / "mono.csv"
    path.write_text("1,1,1\n1,1,1\n1,1,1\n")
    assert main(["fit", "--grid", str(path), "--out", str(tmp_path)]) == EXIT_DEGENERATE
    io.write_grid(path, Grid.constant(3, 3, 2))
    assert main(["fit", "--grid", str(path), "--out", str(tmp_path)]) == EXIT_DEGENERATE
    assert "degenerate" in capsys.readouterr().err


@pytest.mark.parametrize("argv", [
    ["sample", "--alpha", "0.1", "-K", "4"],
    ["sample", "--tau", "0.01"],
    ["sample", "--model", "tapered"],
    ["sample", "--sample-size", "0"],
    ["sample", "--width", "2", "--boundary", "periodic"],
    ["sample", "--bogus"],
    ["fit"],
    ["fit", "--grid", "does-not-exist.csv"],
    ["frobnicate"],
])
def test_usage_errors(tmp_path, argv, capsys):
    if argv[0] != "frobnicate":
        argv = argv + ["--out", str(tmp_path)]
    try:
        code = main(argv)
    except SystemExit as exc:
        code = exc.code
    assert code == EXIT_USAGE


def test_zero_tau_matches_classical(tmp_path):
    common = ["sample", "--width", "5", "--height", "5", "-K", "3", "--beta", "0.7",
              "--sample-size", "50", "--burn-in", "20", "--seed", "3"]
    assert main(common + ["--out", str(tmp_path / "a")]) == EXIT_OK
    assert main(common + ["--model", "tapered", "--tau", "0",
                          "--out", str(tmp_path / "b")]) == EXIT_OK
    a = (tmp_path / "a" / "stats.csv").read_bytes()
    assert a == (tmp_path / "b" / "stats.csv").read_bytes()


def test_config_replay_and_override(tmp_path):
    first = tmp_path / "first"
    main(["sample", "--width", "4", "--height", "4", "-K", "2", "--beta", "0.3",
          "--sample-size", "20", "--burn-in", "5", "--seed", "8", "--out", str(first)])
    replay = tmp_path / "replay"
    assert main(["sample", "--config", str(first / "manifest.json"),
                 "--out", str(replay)]) == EXIT_OK
    assert (first / "stats.csv").read_bytes() == (replay / "stats.csv").read_bytes()
    other = tmp_path / "other"
    main(["sample", "--config", str(first / "manifest.json"), "--seed", "9", "--out", str(other)])
    assert io.read_json(other / "manifest.json")["args"]["width"] == 4
    assert (first / "stats.csv").read_bytes() != (other / "stats.csv").read_bytes()
    with pytest.raises(SystemExit) as exc:
        main(["exact", "--config", str(first / "manifest.json"), "--out", str(tmp_path)])
    assert exc.value.code == EXIT_USAGE


def test_choose_tau_with_too_small_start(tmp_path, frozen_grid):
    code = main(["choose-tau", "--grid", str(frozen_grid), "--tau-init", "1e-7",
                 "--max-steps", "2", "--out", str(tmp_path)])
    assert code == EXIT_NOT_CONVERGED
    assert "error" in io.read_json(tmp_path / "tau_search.json")


def test_console_entry_point(tmp_path):
    result = subprocess.run([sys.executable, "-m", "pottslab.cli", "--version"],
                            capture_output=True, text=True)
    assert result.returncode == 0 and result.stdout.startswith("pottslab ")
