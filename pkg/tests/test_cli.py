import csv
import subprocess
import sys

import pytest

from feelsim.cli import main
from feelsim.metrics import METRICS_HEADER

MINIMAL = """
[simulation]
num_workers = 5
participants_per_round = 2
rounds = 2
hidden_units = 6

[trainer]
epochs = 2
batch_size = 10
threshold = 0.7

[data]
classes = 3
input_dim = 4
samples_per_class = 30
separation = 1.5
"""


@pytest.fixture
def config(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(MINIMAL)
    return path


def read_csv(path):
    with path.open() as f:
        return list(csv.reader(f))


# --- run --------------------------------------------------------------------------


def test_run_writes_metrics(config, tmp_path, capsys):
    out = tmp_path / "out"
    assert main(["--config", str(config), "--out-dir", str(out), "--quiet", "run"]) == 0
    rows = read_csv(out / "metrics.csv")
    assert tuple(rows[0]) == METRICS_HEADER
    body = rows[1:]
    assert len(body) <= 2 * (2 + 1)
    agg = [r for r in body if r[1] == "AGG"]
    assert [r[0] for r in agg] == ["1", "2"]
    assert "cum_energy_J=" in capsys.readouterr().out
    assert (out / "summary.txt").read_text().startswith("rounds=2")


def test_run_is_byte_identical(config, tmp_path):
    for name in ("a", "b"):
        assert main(["--quiet", "run", "--config", str(config), "--out-dir", str(tmp_path / name)]) == 0
    assert (tmp_path / "a" / "metrics.csv").read_bytes() == (tmp_path / "b" / "metrics.csv").read_bytes()


def test_seed_flag_overrides(config, tmp_path):
    main(["--quiet", "--config", str(config), "--out-dir", str(tmp_path / "a"), "run"])
    main(["--quiet", "--config", str(config), "--out-dir", str(tmp_path / "b"), "--seed", "5", "run"])
    assert (tmp_path / "a" / "metrics.csv").read_bytes() != (tmp_path / "b" / "metrics.csv").read_bytes()


def test_floats_use_nine_significant_digits(config, tmp_path):
    main(["--quiet", "--config", str(config), "--out-dir", str(tmp_path), "run"])
    row = read_csv(tmp_path / "metrics.csv")[1]
    value = row[METRICS_HEADER.index("e_cmp_J")]
    assert value == f"{float(value):.9g}"


def test_invalid_config_exits_one_with_field(tmp_path, capsys):
    bad = tmp_path / "bad.ini"
    bad.write_text("[trainer]\nthreshold = 2\n")
    assert main(["--config", str(bad), "run"]) == 1
    assert "trainer.threshold" in capsys.readouterr().err


def test_missing_dataset_named(tmp_path, capsys):
    cfg = tmp_path / "idx.ini"
    cfg.write_text("[data]\nsource = idx\nimages_path = missing-images.idx\nlabels_path = missing-labels.idx\n")
    assert main(["--config", str(cfg), "--out-dir", str(tmp_path), "run"]) == 1
    assert "missing-images.idx" in capsys.readouterr().err


def test_run_requires_config(capsys):
    assert main(["run"]) == 1
    assert "--config" in capsys.readouterr().err


# --- sweep ------------------------------------------------------------------------


def test_sweep_threshold_one_equals_baseline(config, tmp_path):
    assert main(["--quiet", "--config", str(config), "--out-dir", str(tmp_path), "sweep", "--thresholds", "1.0"]) == 0
    rows = read_csv(tmp_path / "sweep.csv")
    base, one = rows[1], rows[2]
    assert base[0] == "baseline" and one[0] == "threshold=1"
    assert base[2:] == one[2:]


def test_sweep_reduction_matches_compare_runs(config, tmp_path):
    from dataclasses import replace

    from feelsim.config import load_config
    from feelsim.orchestrator import build_federation, compare_runs, run_simulation

    assert main(["--quiet", "--config", str(config), "--out-dir", str(tmp_path), "sweep"]) == 0
    rows = read_csv(tmp_path / "sweep.csv")
    assert [r[1] for r in rows[1:]] == ["", "0.5", "0.6", "0.7", "0.8"]

    sim = load_config(config).to_simulation()
    fed = build_federation(sim)
    base = run_simulation(replace(sim, exclusion=False), fed)
    run = run_simulation(replace(sim, trainer=replace(sim.trainer, threshold=0.6)), fed)
    cmp = compare_runs(run, base)
    row = rows[3]
    assert float(row[6]) == pytest.approx(cmp.energy_reduction_pct, rel=1e-8)
    assert float(row[7]) == pytest.approx(cmp.accuracy_delta, abs=1e-9)
    curves = read_csv(tmp_path / "sweep_curves.csv")
    assert len(curves) == 1 + 5 * 2


@pytest.mark.parametrize("bad", ["1.5", "a,b", ""])
def test_sweep_rejects_bad_thresholds(config, tmp_path, bad):
    assert main(["--config", str(config), "--out-dir", str(tmp_path), "sweep", "--thresholds", bad]) == 1


# --- allocate ---------------------------------------------------------------------


def test_allocate_feasible_meets_deadline(capsys):
    assert main(["allocate", "--beta", "0.3", "--bandwidth-hz", "1e6", "--noise-power-w", "1e-6"]) == 0
    out = capsys.readouterr().out
    line = next(l for l in out.splitlines() if l.startswith("t_up+t_cmp_s"))
    assert float(line.split()[1]) == 10.0
    assert "feasible        yes" in out


def test_allocate_channel_gain_form(capsys):
    assert main(["allocate", "--channel-gain", "3e-7", "--noise-power-w", "1e-6"]) == 0
    assert "beta            0.3" in capsys.readouterr().out


def test_allocate_deadline_too_short_exits_two(capsys):
    assert main(["allocate", "--beta", "0.3", "--deadline-s", "0.5"]) == 2
    assert "DEADLINE" in capsys.readouterr().out


def test_allocate_bad_domain_exits_one(capsys):
    assert main(["allocate", "--beta", "0.3", "--excluded", "500"]) == 1


# --- oracle -----------------------------------------------------------------------


@pytest.mark.parametrize("suite", ["beam", "golden", "gradient"])
def test_oracle_suites_pass(suite, capsys):
    assert main(["oracle", suite, "--instances", "3"]) == 0
    assert suite in capsys.readouterr().out


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "feelsim", "allocate", "--beta", "0.3", "--deadline-s", "0.5"],
        capture_output=True, text=True,
    )
    assert proc.returncode == 2
