import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dampwave.data import DataProfile
from dampwave.duhamel import CharacteristicGrid, diamond_march, find_blowup
from dampwave.exponents import ProblemParams
from dampwave.fd import UniformGrid, solve_ivp2
from dampwave.functional import (
    SERIES_S,
    KatoParams,
    b_closed_form,
    b_recursion,
    calibrate_cascade,
    cascade_shape,
    compute_F,
    holder_lower_bound_check,
    kato_bound_for,
    kato_lifespan_bound,
    kato_setup,
    linear_lower_bound,
    lower_bound_cascade,
    ode_comparison_lifespan,
    pointwise_bound_check,
    series_S,
    slicing_cascade,
    source_constant,
    t0_doubling,
)


def smooth_run(N=32, eps=0.3, p=2.0, T=8.0):
    P = ProblemParams(p=p, eps=eps)
    g = CharacteristicGrid.for_problem(2.0, N, T)
    return P, diamond_march(DataProfile(), P, g)


def test_F_initial_values():
    P, res = smooth_run()
    tr = compute_F(res)
    # trapezoid rule on a C^2 bump: error O(h^4)
    assert tr.F[0] == pytest.approx(0.3 * 32 / 35, rel=1e-4)
    assert abs(tr.dF[0]) < 0.3 * res.h**2


def test_F_zero_eps(bump):
    g = CharacteristicGrid.for_problem(2.0, 8, 4.0)
    tr = compute_F(diamond_march(bump, ProblemParams(eps=0.0), g))
    assert np.all(tr.F == 0)


def test_identity_residual():
    _, res = smooth_run()
    assert compute_F(res).identity_residual.max() <= 1e-2


def test_trace_from_field_and_fd(bump):
    P, res = smooth_run(N=16)
    a = compute_F(res)
    b = compute_F(res.field, p=2.0)
    np.testing.assert_allclose(a.F, b.F, rtol=1e-10)
    fd = solve_ivp2(bump, P, UniformGrid.for_problem(2.0, 16, 8.0))
    c = compute_F(fd)
    assert c.F[-1] == pytest.approx(a.F[-1], rel=1e-2)
    with pytest.raises(ValueError):
        compute_F(res.field)
    with pytest.raises(TypeError):
        compute_F(np.zeros(5))


def test_F_monotone_convex():
    _, res = smooth_run(eps=0.5, T=15)
    tr = compute_F(res)
    assert np.all(np.diff(tr.F) >= -1e-14)
    assert np.all(tr.d2F >= 0)


def test_holder_and_pointwise_shrink_under_refinement(bump):
    needs_h, needs_p = [], []
    for N in (8, 16, 32):
        P, res = smooth_run(N=N, eps=0.5, T=10)
        h = holder_lower_bound_check(compute_F(res))
        pw = pointwise_bound_check(res.field, bump, P)
        assert h.ok and pw.ok
        needs_h.append(h.needed_slack)
        needs_p.append(pw.needed_slack)
    assert needs_h[-1] <= needs_h[0] and needs_p[-1] <= needs_p[0]


def test_holder_degenerate_zero(bump):
    g = CharacteristicGrid.for_problem(2.0, 8, 4.0)
    tr = compute_F(diamond_march(bump, ProblemParams(eps=0.0), g))
    assert holder_lower_bound_check(tr).ok


def test_pointwise_requires_thm22():
    prof = DataProfile(mode="free")
    P, res = smooth_run(N=8)
    with pytest.raises(ValueError):
        pointwise_bound_check(res.field, prof, P)


@pytest.mark.parametrize("p,M", [(1.5, 0.875), (2.5, 0.25)])
def test_kato_M(p, M):
    kp = kato_setup(p, A=1.0, k=2.0, T0=8.0, t0=3.0)
    assert kp.M == pytest.approx(M)
    assert kp.T1 == 8.0
    assert kato_lifespan_bound(kp) >= 2 ** (2 / M) * kp.T1


def test_kato_rejects_critical():
    kp = KatoParams(p=3, a=1, q=4, A=1, B=0.25, T0=8, t0=1, k=2)
    assert kp.M == 0
    with pytest.raises(ValueError):
        kato_lifespan_bound(kp)


def test_kato_bound_decreases_with_A():
    a = kato_lifespan_bound(kato_setup(1.5, 1e-3, 2.0, 8.0, 8.0))
    b = kato_lifespan_bound(kato_setup(1.5, 1e-1, 2.0, 8.0, 8.0))
    assert b <= a


def test_cascade_shapes():
    assert cascade_shape(1.5, 16.0, 2.0) == pytest.approx(16**1.5)
    assert cascade_shape(2, 16.0, 2.0) == pytest.approx(16 * math.log(4))
    assert cascade_shape(2.5, 16.0, 2.0) == 16.0
    with pytest.raises(ValueError):
        lower_bound_cascade(0.1, ProblemParams(p=2), 7.9)


def test_linear_lower_bound_below_simulation(bump):
    P = ProblemParams(p=1.5, eps=0.5)
    res = find_blowup(bump, P, 16)
    tr = compute_F(res)
    lb = linear_lower_bound(bump, P, tr.t)
    assert np.all(lb <= tr.F * (1 + 1e-3))


def test_calibration_keys(bump):
    cal = calibrate_cascade(bump, ProblemParams(p=1.5, eps=0.5))
    assert cal["A"] > 0 and cal["T0"] == 8.0 and cal["t0"] >= 2.0


def test_t0_doubling_scaling():
    P = ProblemParams(p=1.5)
    r = t0_doubling(1e-3, P) / t0_doubling(1e-2, P)
    assert r == pytest.approx(10 ** (1 / 3), rel=1e-9)
    P = ProblemParams(p=2.5)
    assert t0_doubling(1e-3, P) / t0_doubling(1e-2, P) == pytest.approx(10**1.5, rel=1e-9)
    t0 = t0_doubling(1e-2, ProblemParams(p=2))
    assert 1e-2**2 * t0 * math.log(t0 / 4) == pytest.approx(2 * 32 / 35 * 1e-2, rel=1e-9)
    with pytest.raises(ValueError):
        t0_doubling(0.1, ProblemParams(p=3))


def test_source_constant(bump):
    assert source_constant(bump, 2.0) == pytest.approx(2**-2 * bump.f_power_integral(2.0))


@pytest.mark.parametrize("p", [1.5, 2.0, 2.5, 3.0])
def test_ode_finite(p):
    r = ode_comparison_lifespan(0.5, ProblemParams(p=p))
    assert r.status == "blew_up" and math.isfinite(r.log_t_blowup)


@settings(max_examples=8, deadline=None)
@given(st.floats(1.2, 2.8), st.floats(0.05, 1.0), st.floats(1.1, 3.0))
def test_ode_monotone_in_eps_and_c2(p, eps, fac):
    P = ProblemParams(p=p)
    a = ode_comparison_lifespan(eps, P)
    b = ode_comparison_lifespan(eps * fac, P)
    assert b.log_t_blowup < a.log_t_blowup
    c2 = source_constant(DataProfile(), p)
    c = ode_comparison_lifespan(eps, P, c2=c2 * fac)
    assert c.log_t_blowup < a.log_t_blowup


def test_ode_no_blowup_for_zero_eps():
    assert ode_comparison_lifespan(0.0, ProblemParams()).status == "no_blowup"


def test_kato_bound_above_simulation(bump):
    P = ProblemParams(p=1.5, eps=0.7)
    tb = find_blowup(bump, P, 16).t_blowup
    assert kato_bound_for(bump, P) * 1.1 > tb


def test_slicing_b_and_S():
    assert [b_recursion(j) for j in range(4)] == [0, 1, 4, 13]
    assert all(b_closed_form(j) == b_recursion(j) for j in range(21))
    assert isinstance(b_closed_form(5), Fraction)
    assert SERIES_S == 13.5 and series_S(200) == pytest.approx(13.5, abs=1e-12)


def test_slicing_report():
    rep = slicing_cascade(0.5, ProblemParams(p=3), j_max=30)
    assert rep.closed_form_ok
    assert all(1 <= s.a_j < 2 for s in rep.states)
    assert [s.b_j for s in rep.states[:4]] == [0, 1, 4, 13]
    json.dumps(rep.to_json())
    # I(t) crosses 1 exactly at the bound
    assert rep.I_log(rep.log_bound) == pytest.approx(1.0, rel=1e-9)
    assert rep.I_log(rep.log_bound * 1.01) > 1
    with pytest.raises(ValueError):
        slicing_cascade(0.5, ProblemParams(p=2))
    with pytest.raises(ValueError):
        slicing_cascade(0.5, ProblemParams(p=3), j_max=41)


def test_slicing_log_bound_corrected():
    # log D_j >= 3^j (log D0 - S log 3) for every D0
    for eps in (1.0, 0.3, 0.05):
        rep = slicing_cascade(eps, ProblemParams(p=3), j_max=30)
        for s in rep.states:
            assert s.log_D_j >= 3**s.j * (rep.log_D0 - rep.S * math.log(3)) - 1e-9 * 3**s.j
