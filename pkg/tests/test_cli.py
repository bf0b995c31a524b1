"""End-to-end CLI checks on small problems."""

import numpy as np

from regstokes import cli, harness


def test_grm_command_ok(capsys):
    assert cli.main(["grm", "--h", "0.6", "--eps", "0.1"]) == 0
    out = capsys.readouterr().out
    assert "status=ok" in out and "rel_error=" in out


def test_grm_command_near_singular_exit_code(capsys):
    assert cli.main(["grm", "--h", "0.45", "--eps", "2.0"]) == 2
    assert "near_singular" in capsys.readouterr().out


def test_sweep_writes_csv(tmp_path):
    out = tmp_path / "rows.csv"
    code = cli.main(["sweep", "--h", "0.6,0.45", "--eps", "0.1",
                     "--out", str(out)])
    assert code == 0
    rows = harness.read_csv(str(out))
    assert len(rows) == 2
    assert rows[0].h <= rows[1].h


def test_config_file_overrides(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("h = 0.6\neps = 0.2\n")
    assert cli.main(["grm", "--config", str(cfg)]) == 0
    assert "eps1=0.2" in capsys.readouterr().out


def test_compare_rules_command(capsys):
    assert cli.main(["compare-rules", "--h", "0.6", "--eps", "0.2",
                     "--rules", "1,1.5,2;1,2,3"]) == 0
    out = capsys.readouterr().out.strip().splitlines()
    assert len(out) == 2 and all("rel_error=" in line for line in out)


def test_sediment_command(tmp_path, capsys):
    out = tmp_path / "traj.txt"
    code = cli.main(["sediment", "--method", "ny", "--eps", "0.2",
                     "--h", "0.7", "--t-end", "1.0", "--out", str(out)])
    assert code == 0
    assert "z(1.0) =" in capsys.readouterr().out
    assert np.loadtxt(str(out)).shape[1] == 16


def test_reference_command(tmp_path, capsys):
    out = tmp_path / "ref.txt"
    code = cli.main(["reference", "--h", "0.8", "--eps", "1e-4",
                     "--quad-refine", "2", "--t-end", "0.5", "--out", str(out)])
    assert code == 0
    text = out.read_text()
    assert "observable = torus_z" in text and "checksum =" in text
