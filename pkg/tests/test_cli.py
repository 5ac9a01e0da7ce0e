"""
Tests for the command-line front end.
"""

import pytest

from trimshell.cli import main

SMALL = """\
example.id = plate_trimmed
disc.p = 2
disc.n = 4
trim.eps = 0.1
time.t1 = 0.2
out.vtk_n = 0
spectrum.k = 1
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "small.cfg"
    path.write_text(SMALL, encoding="utf-8")
    return path


class TestMain:
    """Test subcommands and exit codes."""

    def test_run(self, config_file, tmp_path, capsys):
        out = tmp_path / "results"
        assert main(["--out", str(out), "run", str(config_file)]) == 0
        printed = capsys.readouterr().out
        assert "steps" in printed
        assert "errors.csv" in printed
        assert (out / "errors.csv").exists()
        assert (out / "spectrum.csv").exists()
        assert not list(out.glob("*.vtk"))

    def test_spectrum(self, config_file, tmp_path, capsys):
        assert main(["--out", str(tmp_path), "spectrum", str(config_file)]) == 0
        printed = capsys.readouterr().out
        assert "stabilized_lumped" in printed
        assert "dt_crit" in printed

    def test_sweep(self, config_file, tmp_path, capsys):
        argv = ["--out", str(tmp_path), "sweep", str(config_file), "--axis", "p", "--values", "2"]
        assert main(argv) == 0
        assert "0 failed" in capsys.readouterr().out
        assert (tmp_path / "sweep_p.csv").exists()

    def test_missing_config(self, tmp_path, capsys):
        assert main(["run", str(tmp_path / "absent.cfg")]) == 1
        assert "does not exist" in capsys.readouterr().err

    def test_invalid_config(self, tmp_path, capsys):
        path = tmp_path / "bad.cfg"
        path.write_text("disc.p = 0\n", encoding="utf-8")
        assert main(["spectrum", str(path)]) == 1
        assert "disc.p" in capsys.readouterr().err

    def test_convergence_without_exact_solution(self, tmp_path):
        path = tmp_path / "rotated.cfg"
        path.write_text("example.id = rotated_plate\ndisc.n = 4\n", encoding="utf-8")
        assert main(["convergence", str(path), "--levels", "1", "--static"]) == 1

    def test_unknown_subcommand(self):
        with pytest.raises(SystemExit) as info:
            main(["plot", "x.cfg"])
        assert info.value.code == 2
