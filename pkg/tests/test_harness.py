import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dampwave import storage
from dampwave.exponents import solve_b
from dampwave.functional import LifespanRecord
from dampwave.harness import (
    ExperimentConfig,
    FitError,
    compare_with_theory,
    emit_outputs,
    fit_exponent,
    records_equal,
    run_sweep,
    sliding_fits,
)


def synth(p, eps, lt_of, solver="ode"):
    out = []
    for e in eps:
        lt = lt_of(e)
        out.append(LifespanRecord(e, p, solver, math.exp(lt) if lt < 700 else None, lt, "blew_up", None, True, 0.0))
    return out


EPS = list(np.geomspace(1e-1, 1e-4, 6))


def test_config_defaults_and_validation():
    cfg = ExperimentConfig(eps=[0.1, 1.0, 0.5])
    assert cfg.eps == [1.0, 0.5, 0.1]
    with pytest.raises(ValueError):
        ExperimentConfig(resolutions=[12])
    with pytest.raises(ValueError):
        ExperimentConfig(solver="spectral")
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"colour": "red"})
    with pytest.raises(ValueError):
        ExperimentConfig(seed=2**64)


def test_config_file(tmp_path):
    (tmp_path / "c.toml").write_text('p = 1.5\neps = [0.1, 0.01]\nsolver = "diamond"\nresolutions = [16, 32]\n')
    cfg = ExperimentConfig.from_file(tmp_path / "c.toml")
    assert cfg.p == 1.5 and cfg.resolutions == [16, 32] and cfg.default_model == "power"


def test_fit_power_synthetic():
    f = fit_exponent(synth(1.5, EPS, lambda e: -3 / 7 * math.log(e) + 0.3), "power")
    assert f.exponent == pytest.approx(3 / 7, abs=1e-12) and f.stderr < 1e-6
    assert f.rel_deviation < 1e-10


def test_fit_b_eps_synthetic():
    f = fit_exponent(synth(2.0, EPS, lambda e: math.log(5 * solve_b(e))), "b_eps")
    assert f.exponent == pytest.approx(5, abs=1e-6) and f.stderr < 1e-6
    assert f.ratio_spread == pytest.approx(1.0)


def test_fit_exponential_synthetic():
    eps = [1.0, 0.9, 0.8, 0.7, 0.6]
    f = fit_exponent(synth(3.0, eps, lambda e: 2 * e**-6), "exponential")
    assert f.exponent == pytest.approx(6, abs=1e-6) and f.stderr < 1e-6


@settings(max_examples=25)
@given(st.floats(0.1, 10), st.floats(-3, 3))
def test_fit_recovers_any_power(alpha, c):
    f = fit_exponent(synth(2.5, EPS, lambda e: -alpha * math.log(e) + c), "power")
    assert f.exponent == pytest.approx(alpha, rel=1e-9)
    assert f.intercept == pytest.approx(c, abs=1e-8)


def test_fit_errors():
    with pytest.raises(FitError):
        fit_exponent(synth(1.5, EPS[:3], lambda e: -math.log(e)), "power")
    with pytest.raises(FitError):
        fit_exponent(synth(1.5, [0.1] * 5, lambda e: 1.0), "power")
    with pytest.raises(FitError):
        fit_exponent(synth(3.0, [1, 0.9, 0.8, 0.7], lambda e: e**-6, solver="diamond"), "exponential")
    with pytest.raises(FitError):
        fit_exponent(synth(1.5, EPS, lambda e: -math.log(e)), "b_eps")


def test_unresolved_excluded():
    rs = synth(1.5, EPS, lambda e: -3 / 7 * math.log(e))
    rs.append(LifespanRecord(1e-5, 1.5, "ode", None, None, "unresolved", None, False, 0.0))
    assert fit_exponent(rs, "power").n == len(EPS)


def test_compare_power_and_heat():
    f = fit_exponent(synth(1.5, EPS, lambda e: -0.41 * math.log(e)), "power")
    v = compare_with_theory(f, tol=0.1)
    assert v["passed"] and v["heat_exponent"] == pytest.approx(1 / 3)
    assert v["outlives_heat"]


def test_compare_b_eps_ratio():
    rs = synth(2.0, EPS, lambda e: math.log(5 * solve_b(e) * (1 + 2 * e)))
    v = compare_with_theory(fit_exponent(rs, "b_eps"))
    assert v["passed"] and v["ratio_spread"] < 2


def test_compare_regime_mismatch():
    from dampwave.exponents import ProblemParams, predicted_lifespan

    f = fit_exponent(synth(1.5, EPS, lambda e: -0.41 * math.log(e)), "power")
    with pytest.raises(ValueError):
        compare_with_theory(f, predicted_lifespan(0.1, ProblemParams(p=2)))


def test_sliding_windows():
    ws = sliding_fits(synth(1.5, EPS, lambda e: -3 / 7 * math.log(e)), "power", window=4)
    assert len(ws) == 3 and all(w.exponent == pytest.approx(3 / 7) for w in ws)


def test_empty_sweep():
    assert run_sweep(ExperimentConfig(eps=[])) == []


def test_ode_sweep_all_resolved_and_sorted():
    cfg = ExperimentConfig(p=1.5, eps=list(np.geomspace(1e-1, 1e-4, 4)))
    rs = run_sweep(cfg)
    assert [r.eps for r in rs] == sorted(cfg.eps)
    assert all(r.status == "blew_up" for r in rs)
    lt = [r.log_t_blowup for r in rs]
    assert all(a > b for a, b in zip(lt, lt[1:]))


def test_sweep_deterministic_and_parallel():
    cfg = ExperimentConfig(p=2.0, solver="diamond", eps=[1.0, 0.7], resolutions=[8, 16])
    a = run_sweep(cfg)
    b = run_sweep(cfg)
    c = run_sweep(cfg, workers=2)
    assert records_equal(a, b) and records_equal(a, c)
    assert [(r.eps, r.h) for r in a] == [(0.7, 0.125), (0.7, 0.25), (1.0, 0.125), (1.0, 0.25)]


def test_sweep_failure_is_unresolved():
    # t_cap below the lifespan: the run completes without blowing up
    cfg = ExperimentConfig(p=2.0, solver="fd", eps=[0.5], t_max=5.0, t_cap=5.0)
    (r,) = run_sweep(cfg)
    assert r.status == "no_blowup" and r.t_blowup is None


def test_emit_outputs(tmp_path):
    rs = synth(1.5, EPS, lambda e: -3 / 7 * math.log(e))
    f = fit_exponent(rs, "power")
    paths = emit_outputs(rs, [f], tmp_path / "o")
    assert paths["records"].read_text().splitlines()[0] == "eps,p,solver,h,t_blowup,status,walltime"
    back = storage.read_records_csv(paths["records"])
    assert [r.eps for r in back] == [r.eps for r in rs]
    for a, b in zip(rs, back):
        assert b.log_t_blowup == pytest.approx(a.log_t_blowup, rel=1e-13)
    script = paths["plot"].read_text()
    assert "records.csv" in script and "fits.json" in script
    compile(script, "plot_lifespan.py", "exec")
    assert storage.read_json(paths["fits"])[0]["model"] == "power"
