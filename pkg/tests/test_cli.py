import subprocess
import sys

import pytest

from dampwave import storage
from dampwave.cli import main


def run(*argv):
    return main([str(a) for a in argv])


def test_help_exits_zero(capsys):
    with pytest.raises(SystemExit) as e:
        run("--help")
    assert e.value.code == 0


@pytest.mark.parametrize(
    "argv",
    [[], ["frobnicate"], ["solve", "--solver", "spectral"], ["sweep", "--seed", "-1"], ["solve", "--resolution", "0"]],
)
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as e:
        run(*argv)
    assert e.value.code == 1


def test_bad_config_key(tmp_path):
    (tmp_path / "c.toml").write_text("colour = 1\n")
    assert run("predict", "--config", tmp_path / "c.toml") == 1


def test_resolution_not_power_of_two(tmp_path):
    assert run("sweep", "--resolution", 12, "--out", tmp_path) == 1


def test_missing_config_is_io(tmp_path):
    assert run("predict", "--config", tmp_path / "none.toml") == 3


def test_unwritable_out(tmp_path):
    (tmp_path / "file").write_text("")
    assert run("solve", "--solver", "ode", "--out", tmp_path / "file" / "sub") == 3


def test_exponential_with_pde_refused(tmp_path):
    (tmp_path / "c.toml").write_text('p = 3.0\nmodel = "exponential"\neps = [1.0]\n')
    assert run("sweep", "--config", tmp_path / "c.toml", "--solver", "diamond", "--out", tmp_path) == 1


def test_predict(capsys):
    assert run("predict", "--p", 1.5) == 0
    assert '"power"' in capsys.readouterr().out


@pytest.mark.parametrize("solver", ["diamond", "fd"])
def test_solve_writes_field(tmp_path, solver):
    assert run("solve", "--solver", solver, "--resolution", 8, "--eps", 0.5, "--t-max", 3, "--out", tmp_path) == 0
    v, h, X, T = storage.read_field_binary(tmp_path / "field.bin")
    assert h == 0.25 and T == 3.0
    x, t, v2 = storage.read_field_csv(tmp_path / "field.csv")
    assert v2.shape == v.shape
    assert storage.read_trace_csv(tmp_path / "trace.csv")["t"][0] == 0.0


def test_sweep_then_fit(tmp_path):
    (tmp_path / "c.toml").write_text("p = 1.5\neps = [0.1, 0.03, 0.01, 0.003, 0.001]\n")
    assert run("sweep", "--config", tmp_path / "c.toml", "--out", tmp_path) == 0
    assert len(storage.read_records_csv(tmp_path / "records.csv")) == 5
    assert run("fit", "--config", tmp_path / "c.toml", "--out", tmp_path) == 0
    fit = storage.read_json(tmp_path / "fits.json")[0]
    assert fit["exponent"] == pytest.approx(3 / 7, rel=0.15)
    assert (tmp_path / "plot_lifespan.py").exists()


def test_fit_too_few_records_is_numerical(tmp_path):
    (tmp_path / "c.toml").write_text("p = 1.5\neps = [0.1, 0.01]\n")
    assert run("sweep", "--config", tmp_path / "c.toml", "--out", tmp_path) == 0
    assert run("fit", "--out", tmp_path, "--config", tmp_path / "c.toml") == 2


def test_verify_small(tmp_path):
    assert run("verify", "--samples", 1000, "--seed", 7, "--out", tmp_path, "--config", _p3(tmp_path)) == 0
    rep = storage.read_json(tmp_path / "verify.json")
    assert rep["interpolation_fuzz"]["violations"] == 0
    assert (tmp_path / "slicing.json").exists()


def _p3(tmp_path):
    (tmp_path / "p3.toml").write_text("p = 3.0\neps = [0.5]\n")
    return tmp_path / "p3.toml"


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "dampwave", "predict", "--p", "2"], capture_output=True, text=True)
    assert r.returncode == 0 and "b_eps" in r.stdout
