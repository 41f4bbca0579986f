import subprocess
import sys

import numpy as np
import pytest

from medianscape.cli import main
from medianscape.io import read_space_csv
from medianscape.space import generate_space


def run(tmp_path, *args):
    return main([*args, "--out", str(tmp_path / "out")])


def outputs(tmp_path):
    return sorted((tmp_path / "out").glob("*.csv"))


@pytest.fixture
def line_files(tmp_path):
    (tmp_path / "line.csv").write_text("id,x,mass\n0,0,1\n1,1,1\n2,2,1\n")
    (tmp_path / "u.csv").write_text("id,value\n0,0\n1,0\n2,3\n")
    (tmp_path / "lorentz.cfg").write_text("variant=Lorentz\np=2\nq=1\n")
    return tmp_path


def test_maximal_median(line_files, capsys):
    t = line_files
    assert run(t, "maximal", "--space", str(t / "line.csv"), "--u", str(t / "u.csv"),
               "--op", "median", "--gamma", "0.5") == 0
    (path,) = outputs(t)
    vals = np.loadtxt(path, delimiter=",", skiprows=1)[:, 1]
    assert vals.tolist() == [0.0, 0.0, 3.0]


def test_norm_prints_value(line_files, capsys):
    t = line_files
    assert run(t, "norm", "--space", str(t / "line.csv"), "--u", str(t / "u.csv"),
               "--spec", str(t / "lorentz.cfg")) == 0
    assert capsys.readouterr().out.strip().splitlines()[-1] == "3.0"


def test_outputs_are_deterministic(line_files):
    t = line_files
    args = ["gradient", "--space", str(t / "line.csv"), "--u", str(t / "u.csv"), "--op", "canonical"]
    run(t, *args)
    first = {p.name: p.read_bytes() for p in outputs(t)}
    run(t, *args)
    assert {p.name: p.read_bytes() for p in outputs(t)} == first
    (t / "u.csv").write_text("id,value\n0,0\n1,1\n2,3\n")
    run(t, *args)
    assert len(outputs(t)) == 2


def test_space_roundtrip(tmp_path):
    assert run(tmp_path, "space", "--generate", "grid2d", "--shape", "3x4") == 0
    (path,) = outputs(tmp_path)
    back = read_space_csv(path)
    ref = generate_space("grid2d", shape=(3, 4))
    np.testing.assert_array_equal(back.dist_matrix(), ref.dist_matrix())


def test_exit_codes(line_files, capsys):
    t = line_files
    (t / "bad.csv").write_text("id,value\n0,1\n1,zz\n2,3\n")
    assert run(t, "median", "--space", str(t / "line.csv"), "--u", str(t / "bad.csv"), "--gamma", "0.5") == 2
    assert "bad.csv:3" in capsys.readouterr().err
    assert run(t, "median", "--space", str(t / "line.csv"), "--u", str(t / "u.csv"), "--gamma", "1.5") == 2
    assert run(t, "norm", "--space", str(t / "line.csv"), "--u", str(t / "u.csv")) == 2
    with pytest.raises(SystemExit) as e:
        main(["frobnicate"])
    assert e.value.code == 2


def test_config_file_and_override(line_files, capsys):
    t = line_files
    (t / "run.cfg").write_text(f"space={t / 'line.csv'}\nu={t / 'u.csv'}\ngamma=0.5\n")
    assert run(t, "median", "--config", str(t / "run.cfg")) == 0
    (t / "typo.cfg").write_text("gama=0.5\n")
    assert run(t, "median", "--config", str(t / "typo.cfg")) == 2


def test_lebesgue_trace(tmp_path, capsys):
    assert run(tmp_path, "lebesgue", "--op", "trace", "--function", "indicator(0,0.5)",
               "--x", "0.25", "--resolution", "256", "--resolution", "1024") == 0
    assert "label: lebesgue" in capsys.readouterr().out


def test_module_entry_point(tmp_path):
    r = subprocess.run([sys.executable, "-m", "medianscape", "space", "--generate", "grid1d", "--n", "4",
                        "--out", str(tmp_path)], capture_output=True, text=True)
    assert r.returncode == 0 and "points: 4" in r.stdout
