import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from dampwave.exponents import (
    UNBOUNDED,
    Form,
    ProblemParams,
    Reference,
    Regime,
    WeightKind,
    classify_regime,
    fujita_exponent,
    gamma,
    growth_D,
    mu_zero,
    predicted_lifespan,
    regime_of,
    solve_a,
    solve_b,
    strauss_exponent,
    weight_kind,
    weight_w,
)


def bisect_b(eps, lo=1e-12, hi=1e12, iters=400):
    # independent oracle: plain bisection on a log scale
    f = lambda b: eps * eps * b * math.log1p(b) - 1.0  # noqa: E731
    for _ in range(iters):
        mid = math.sqrt(lo * hi)
        if f(mid) < 0:
            lo = mid
        else:
            hi = mid
    return math.sqrt(lo * hi)


def test_gamma_values():
    assert gamma(2, 3) == 2 + 8 - 8
    assert gamma(1.5, 3) == pytest.approx(3.5)
    # in 1D gamma is linear and never vanishes for p > 0
    assert gamma(7, 1) == 2 + 14


@pytest.mark.parametrize("n", range(2, 9))
def test_strauss_root(n):
    assert abs(gamma(strauss_exponent(n), n)) < 1e-10


def test_strauss_1d_unbounded():
    pS = strauss_exponent(1)
    assert pS is UNBOUNDED
    assert pS > 1e300 and not pS < 3


def test_fujita_and_mu0():
    assert fujita_exponent(1) == 3
    assert mu_zero(1) == Fraction(4, 3)
    assert mu_zero(2) == 2


def test_classify_boundary_exact():
    assert classify_regime(ProblemParams(mu=2.0)) == "heat_like"
    assert classify_regime(ProblemParams(mu=4 / 3)) == "heat_like"
    assert classify_regime(ProblemParams(mu=1.3)) == "wave_like"
    assert classify_regime(ProblemParams(mu=2.0, n=2)) == "heat_like"


@pytest.mark.parametrize("p,reg", [(1.5, Regime.SUBCRITICAL_LOW), (2, Regime.P_EQUAL_2), (2.0 + 1e-13, Regime.P_EQUAL_2), (2.5, Regime.SUBCRITICAL_HIGH), (3, Regime.CRITICAL)])
def test_regime_of(p, reg):
    assert regime_of(p) is reg


@pytest.mark.parametrize("p", [1.0, 0.5, 3.5])
def test_regime_rejects(p):
    with pytest.raises(ValueError):
        regime_of(p)


def test_params_validation():
    with pytest.raises(ValueError):
        ProblemParams(p=1.0)
    with pytest.raises(ValueError):
        ProblemParams(k=1.0)
    with pytest.raises(ValueError):
        ProblemParams(eps=-1)
    with pytest.raises(ValueError):
        ProblemParams(mu=1.0).require_solver_setting()


def test_b_at_one_matches_bisection():
    assert solve_b(1.0) == pytest.approx(bisect_b(1.0), rel=1e-10)
    assert abs(solve_b(1.0) - 1.2399) < 1e-3


@pytest.mark.parametrize("eps", np.geomspace(1e-8, 1e3, 23))
def test_b_residual(eps):
    b = solve_b(eps)
    assert abs(eps * eps * b * math.log1p(b) - 1.0) <= 1e-12


@given(st.floats(1e-6, 1e2), st.floats(1.01, 10.0))
def test_b_monotone(eps, fac):
    assert solve_b(eps * fac) < solve_b(eps)


def test_a_residual():
    for eps in (1e-4, 0.1, 1.0, 10.0):
        a = solve_a(eps)
        assert abs(eps**2 * a * a * math.log1p(a) - 1) <= 1e-12


def test_b_rejects_nonpositive():
    with pytest.raises(ValueError):
        solve_b(0.0)


def test_weights():
    assert weight_kind(2.5) is WeightKind.UNIT
    assert weight_kind(2) is WeightKind.INV_LOG
    assert weight_kind(1.5) is WeightKind.POWER
    # tau_+ is smallest at the origin: 1/log 2 for p = 2, k = 2
    assert weight_w(0.0, 0.0, ProblemParams(p=2)) == pytest.approx(1 / math.log(2))
    assert weight_w(3.0, 1.0, ProblemParams(p=2.5)) == 1.0


@given(st.floats(1.01, 2.99), st.floats(0, 100), st.floats(0, 100))
def test_weight_positive(p, r, t):
    assert weight_w(r, t, ProblemParams(p=p)) > 0


def test_growth_D_shapes():
    T = np.array([10.0, 100.0])
    Tk = (T + 4) / 2
    np.testing.assert_allclose(growth_D(T, ProblemParams(p=2.5)), Tk**0.5)
    np.testing.assert_allclose(growth_D(T, ProblemParams(p=2)), Tk * np.log(Tk))
    np.testing.assert_allclose(growth_D(T, ProblemParams(p=3)), np.log(Tk))
    np.testing.assert_allclose(growth_D(T, ProblemParams(p=1.5)), Tk ** (gamma(1.5, 3) / 2))


def test_predicted_new_forms():
    pr = predicted_lifespan(0.1, ProblemParams(p=1.5))
    assert pr.form is Form.POWER and pr.exponent == pytest.approx(3 / 7)
    assert predicted_lifespan(0.1, ProblemParams(p=2.5)).exponent == pytest.approx(7.5)
    pr = predicted_lifespan(0.1, ProblemParams(p=2))
    assert pr.form is Form.B_EPS and pr.scale == pytest.approx(solve_b(0.1))
    pr = predicted_lifespan(0.1, ProblemParams(p=3))
    assert pr.form is Form.EXPONENTIAL and pr.exponent == 6


def test_predicted_references():
    p15 = ProblemParams(p=1.5)
    heat = predicted_lifespan(0.1, p15, Reference.HEAT)
    assert heat.exponent == pytest.approx(1 / 3)
    assert predicted_lifespan(0.1, ProblemParams(p=2), "heat").exponent == pytest.approx(1.0)
    assert predicted_lifespan(0.1, ProblemParams(p=3), "heat").form is Form.EXPONENTIAL
    # dimension n + mu = 3 for the wave-like prediction
    assert predicted_lifespan(0.1, p15, "wave").exponent == pytest.approx(2 * 1.5 * 0.5 / gamma(1.5, 3))
    assert predicted_lifespan(0.1, p15, "nondamped").exponent == pytest.approx(0.25)


def test_new_outlives_heat():
    # larger amplitude exponent means a longer lifespan as eps -> 0
    for p in (1.25, 1.5, 1.75, 2.25, 2.5, 2.75):
        new = predicted_lifespan(0.1, ProblemParams(p=p)).exponent
        heat = predicted_lifespan(0.1, ProblemParams(p=p), "heat").exponent
        assert new > heat
