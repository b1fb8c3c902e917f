"""
Command-line tests: subcommand output, exit codes and reproducible files.
"""

import logging

import pytest

from main import EXIT_CONFIG, EXIT_OK, EXIT_VERIFY, run


@pytest.fixture
def scenario_file(tmp_path):
    path = tmp_path / "scenario.txt"
    path.write_text("nt = 64\nm_ttd = 8\nsubcarriers = 33\npsi_c = 0.6\ntmax_ps = 100\n", encoding="utf-8")
    return path


def test_criteria_at_default_scenario(capsys):
    assert run(["criteria"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert out == ["nt_bound = 263", "tmax_bound_ps = 330"]


def test_criteria_verbose_lists_every_device(capsys):
    assert run(["criteria", "--verbose"]) == EXIT_OK
    out = capsys.readouterr().out.splitlines()
    assert sum(line.startswith("nt_bound[m=") for line in out) == 16
    assert out[-1] == "tmax_bound_ps[m=16] = 330"


def test_criteria_at_broadside(tmp_path, capsys):
    path = tmp_path / "broadside.txt"
    path.write_text("psi_c = 0\n", encoding="utf-8")
    assert run(["criteria", "--scenario", str(path)]) == EXIT_OK
    assert capsys.readouterr().out.splitlines()[0] == "nt_bound = unbounded"


def test_gain_pattern(capsys):
    assert run(["gain-pattern", "--nt-list", "16"]) == EXIT_OK
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "nt,k,gain"
    assert len(lines) == 130
    assert lines[65] == "16,65,1"


def test_gain_pattern_warns_about_extra_directions(tmp_path, capsys, caplog):
    path = tmp_path / "two_chains.txt"
    path.write_text("n_rf = 2\npsi_c = 0.3, -0.5\nnt = 32\nm_ttd = 4\n", encoding="utf-8")
    with caplog.at_level(logging.WARNING):
        assert run(["gain-pattern", "--scenario", str(path), "--nt-list", "16"]) == EXIT_OK
    assert "2 directions given" in caplog.text
    lines = capsys.readouterr().out.splitlines()
    assert lines[0] == "nt,k,gain" and len(lines) == 130


def test_design_output(tmp_path):
    out = tmp_path / "design.csv"
    assert run(["design", "--out", str(out)]) == EXIT_OK
    lines = out.read_text(encoding="utf-8").splitlines()
    assert len(lines) == 257
    assert lines[0] == "rf_chain,ttd,element,ps_phase,delay_ps,theta"


def test_sweep_tmax_writes_file(tmp_path, scenario_file):
    out = tmp_path / "tmax.csv"
    argv = ["sweep-tmax", "--scenario", str(scenario_file), "--tmax-list", "50,100,200", "--out", str(out)]
    assert run(argv) == EXIT_OK
    lines = out.read_text(encoding="utf-8").splitlines()
    assert lines[0] == "designer,swept_var,swept_value,avg_gain"
    assert len(lines) == 1 + 3 * 2
    assert lines[1].startswith("theorem1,tmax,50,")


def test_sweep_output_independent_of_workers(tmp_path, scenario_file):
    paths = []
    for workers in (1, 2):
        out = tmp_path / f"nt_{workers}.csv"
        argv = ["sweep-nt", "--scenario", str(scenario_file), "--nt-list", "16,32,64",
                "--workers", str(workers), "--per-subcarrier", "--out", str(out)]
        assert run(argv) == EXIT_OK
        paths.append(out)
    assert paths[0].read_bytes() == paths[1].read_bytes()


def test_verify_small_batch(capsys):
    assert run(["verify", "--count", "5"]) == EXIT_OK
    assert capsys.readouterr().out.splitlines()[-1] == "status = ok"


def test_verify_with_fault_exits_two(capsys):
    assert run(["verify", "--count", "3", "--inject-fault"]) == EXIT_VERIFY
    assert "status = FAILED" in capsys.readouterr().out


def test_verify_single_scenario_file(scenario_file, capsys):
    assert run(["verify", "--scenario", str(scenario_file)]) == EXIT_OK
    assert "scenarios_checked = 1" in capsys.readouterr().out


def test_verify_fault_without_checkable_scenario_exits_one(tmp_path):
    path = tmp_path / "narrowband.txt"
    path.write_text("bandwidth_ghz = 0\nnt = 64\nm_ttd = 8\n", encoding="utf-8")
    assert run(["verify", "--scenario", str(path), "--inject-fault"]) == EXIT_CONFIG
    assert run(["verify", "--count", "0", "--inject-fault"]) == EXIT_CONFIG
    assert run(["verify", "--scenario", str(path)]) == EXIT_OK


@pytest.mark.parametrize(
    "text",
    ["nt = 250\nm_ttd = 16\n", "nt 256\n", "colour = blue\n"],
)
def test_bad_scenario_exits_one(tmp_path, text):
    path = tmp_path / "bad.txt"
    path.write_text(text, encoding="utf-8")
    assert run(["design", "--scenario", str(path)]) == EXIT_CONFIG


def test_missing_scenario_file_exits_one(tmp_path):
    assert run(["criteria", "--scenario", str(tmp_path / "nope.txt")]) == EXIT_CONFIG


def test_bad_sweep_values_exit_one():
    assert run(["sweep-nt", "--nt-list", "250"]) == EXIT_CONFIG
    assert run(["sweep-tmax", "--tmax-list", "abc"]) == EXIT_CONFIG
    assert run(["no-such-command"]) == EXIT_CONFIG
