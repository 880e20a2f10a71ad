import pytest
from click.testing import CliRunner

from run import cli


@pytest.fixture
def runner():
    return CliRunner()


def test_simulate_ok(runner, straight_text, write_config, tmp_path):
    result = runner.invoke(cli, ["simulate", "--config", write_config(straight_text),
                                 "--out-dir", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert "simulate: ok" in result.output
    assert (tmp_path / "pattern.svg").exists()


def test_simulate_xlsx(runner, straight_text, write_config, tmp_path):
    result = runner.invoke(cli, ["simulate", "--config", write_config(straight_text),
                                 "--out-dir", str(tmp_path), "--xlsx"])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "functionals.xlsx").exists()


def test_config_error_exit_code(runner, straight_text, write_config, tmp_path):
    result = runner.invoke(cli, ["simulate", "--config", write_config(straight_text + "colour.red = 1\n"),
                                 "--out-dir", str(tmp_path)])
    assert result.exit_code == 2
    assert "unknown section" in result.output


def test_missing_config_file_exit_code(runner, tmp_path):
    result = runner.invoke(cli, ["simulate", "--config", str(tmp_path / "absent.cfg"),
                                 "--out-dir", str(tmp_path)])
    assert result.exit_code == 2


def test_structural_failure_exit_code(runner, perturbed_text, write_config, tmp_path):
    path = write_config(perturbed_text + "tracking.max_events = 1\n")
    result = runner.invoke(cli, ["simulate", "--config", path, "--out-dir", str(tmp_path)])
    assert result.exit_code == 3
    assert "structural failure" in result.output


def test_couple(runner, straight_text, write_config, tmp_path):
    path = write_config(straight_text)
    result = runner.invoke(cli, ["couple", "--config", path, "--config-other", path, "--out-dir", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "coupled.csv").exists()


def test_calibrate(runner, straight_text, write_config, tmp_path):
    result = runner.invoke(cli, ["calibrate", "--config", write_config(straight_text), "--out-dir", str(tmp_path),
                                 "--workers", "1"])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "calibration.cfg").exists()


def test_converge(runner, straight_text, write_config, tmp_path):
    result = runner.invoke(cli, ["converge", "--config", write_config(straight_text), "--out-dir", str(tmp_path),
                                 "--eps", "0.02,0.01", "--workers", "1"])
    assert result.exit_code == 0, result.output
    assert "runs: 2" in result.output


def test_converge_rejects_bad_eps(runner, straight_text, write_config, tmp_path):
    result = runner.invoke(cli, ["converge", "--config", write_config(straight_text), "--out-dir", str(tmp_path),
                                 "--eps", "0.01,abc"])
    assert result.exit_code == 2
    assert "comma-separated numbers" in result.output


def test_oracle(runner, tmp_path):
    result = runner.invoke(cli, ["oracle", "--out-dir", str(tmp_path)])
    assert result.exit_code == 0, result.output
    assert (tmp_path / "oracle.csv").exists()


def test_oracle_monitor_exit_code(runner, tmp_path):
    result = runner.invoke(cli, ["oracle", "--out-dir", str(tmp_path), "--tolerance", "1e-30"])
    assert result.exit_code == 4
    assert "MonitorViolation" in result.output


def test_detachment(runner, tmp_path):
    result = runner.invoke(cli, ["detachment", "--out-dir", str(tmp_path), "--mach", "2,3"])
    assert result.exit_code == 0, result.output
    assert "machs: 2" in result.output
