import pytest

from budgetgrpo import config as config_io
from budgetgrpo.cli import main
from test_harness import tiny


@pytest.fixture
def cfg_path(tmp_path):
    path = tmp_path / "cfg.toml"
    config_io.save(tiny(total_steps=8, schedule=config_io.sched.StepwiseExponential(12, 4, 2, 8), eval_every=4), path)
    return path


def test_train_then_eval(cfg_path, tmp_path, capsys):
    out = tmp_path / "run"
    assert main(["train", "--config", str(cfg_path), "--seed", "9", "--out", str(out)]) == 0
    assert "final eval accuracy" in capsys.readouterr().out
    assert config_io.load(out / "config.toml").seed == 9
    assert main(["eval", "--checkpoint", str(out / "checkpoint.txt"), "--budget", "4", "--n", "10"]) == 0
    assert "accuracy" in capsys.readouterr().out


def test_schedule_print(cfg_path, capsys):
    assert main(["schedule", "--print", "--config", str(cfg_path)]) == 0
    lines = capsys.readouterr().out.splitlines()
    assert len(lines) == 8
    assert lines[0] == "0\t12" and lines[-1] == "7\t4"


def test_schedule_default_summary(capsys):
    assert main(["schedule"]) == 0
    assert capsys.readouterr().out.splitlines() == [
        "step 0: budget 24", "step 150: budget 17", "step 300: budget 12", "step 450: budget 8",
    ]


def test_compare(cfg_path, capsys):
    assert main(["compare", "--config", str(cfg_path), "--seeds", "0,1,2,3,4"]) == 0
    out = capsys.readouterr().out
    assert out.count("curriculum") == 6


def test_bad_config_reports_error(tmp_path, capsys):
    path = tmp_path / "bad.toml"
    path.write_text("nonsense = 1\n")
    assert main(["train", "--config", str(path), "--out", str(tmp_path / "x")]) == 2
    assert "unknown" in capsys.readouterr().err
    assert not (tmp_path / "x").exists()
