import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import integrate

from dampwave.data import (
    DataProfile,
    check_support_u0,
    dalembert_u0,
    liouville_backward,
    liouville_forward,
    liouville_initial_speed,
    make_bump_pair,
)


def test_poly_moment_exact(bump):
    # int (1-x^2)^3 dx over [-1, 1] = 2 (1 - 1 + 3/5 - 1/7) = 32/35
    assert bump.f_l1 == pytest.approx(32 / 35, rel=1e-15)
    q = integrate.quad(lambda x: float(bump.f(x)), -1, 1)[0]
    assert q == pytest.approx(32 / 35, rel=1e-12)


def test_cosine_moment():
    prof = DataProfile(kind="cosine_bump")
    assert integrate.quad(lambda x: float(prof.f(x)), -1, 1)[0] == pytest.approx(0.75)
    assert prof.f_l1 == 0.75


def test_flags(bump):
    assert bump.zero_moment and bump.thm22
    free = make_bump_pair(mode="free")
    assert not free.zero_moment and not free.thm22
    zm = make_bump_pair(mode="zero_moment_general")
    assert zm.zero_moment and not zm.thm22
    assert abs(integrate.quad(lambda x: float(zm.f_plus_g(x)), -1, 1)[0]) < 1e-14


def test_profile_validation():
    with pytest.raises(ValueError):
        DataProfile(k=1.0)
    with pytest.raises(ValueError):
        DataProfile(kind="triangle")
    with pytest.raises(ValueError):
        DataProfile(mode="odd")


def test_serialisation_roundtrip():
    prof = DataProfile(kind="cosine_bump", k=3.0, mode="free", amplitude=2.0)
    assert DataProfile.from_dict(prof.to_dict()) == prof


@pytest.mark.parametrize("mode", ["thm22", "zero_moment_general", "free"])
def test_dalembert_initial_values(mode):
    prof = make_bump_pair(mode=mode)
    x = np.linspace(-3, 3, 601)
    np.testing.assert_allclose(dalembert_u0(prof, x, 0.0), prof.f(x), atol=1e-15)
    # initial speed is f + g by a centred difference
    h = 1e-5
    speed = (dalembert_u0(prof, x, h) - prof.f(x)) / h
    np.testing.assert_allclose(speed, prof.f_plus_g(x), atol=1e-4)


def test_dalembert_wave_equation():
    prof = make_bump_pair(mode="zero_moment_general")
    x, t, h = 0.3, 0.7, 1e-3
    u = lambda a, b: dalembert_u0(prof, a, b)  # noqa: E731
    utt = (u(x, t + h) - 2 * u(x, t) + u(x, t - h)) / h**2
    uxx = (u(x + h, t) - 2 * u(x, t) + u(x - h, t)) / h**2
    assert abs(utt - uxx) < 1e-4


def test_dalembert_rejects_negative_time(bump):
    with pytest.raises(ValueError):
        dalembert_u0(bump, 0.0, -1.0)


@pytest.mark.parametrize("mode", ["thm22", "zero_moment_general"])
def test_annulus_support(mode):
    prof = make_bump_pair(mode=mode)
    rep = check_support_u0(prof, np.linspace(-30, 30, 1201), np.linspace(0, 25, 101))
    assert rep.ok and rep.checked > 0


def test_support_check_needs_zero_moment():
    with pytest.raises(ValueError):
        check_support_u0(make_bump_pair(mode="free"), [0.0], [5.0])


def test_custom_profile_matches_builtin():
    prof = make_bump_pair(mode="zero_moment_general")
    cus = DataProfile.custom(prof.f, prof.g, k=2.0, width=1.0)
    x = np.linspace(-4, 4, 41)
    np.testing.assert_allclose(dalembert_u0(cus, x, 1.3), dalembert_u0(prof, x, 1.3), atol=1e-10)
    assert cus.zero_moment


@given(st.floats(0, 50), st.floats(-10, 10), st.floats(0, 3))
def test_liouville_roundtrip(t, v, mu):
    assert liouville_backward(liouville_forward(v, t, mu), t, mu) == pytest.approx(v, rel=1e-12, abs=1e-300)


def test_liouville_speed_thm22(bump):
    x = np.linspace(-2, 2, 11)
    np.testing.assert_allclose(liouville_initial_speed(bump, x, 2.0), 0.0, atol=1e-15)
