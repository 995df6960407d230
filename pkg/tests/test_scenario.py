import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cooprs.scenario import (ChannelGeometry, Scenario, build_parametric_scenario,
                             build_random_scenario, load_scenario, save_scenario,
                             scenario_from_text, scenario_to_text)


def test_parametric_four_antenna_example():
    s = build_parametric_scenario(4, ChannelGeometry(0.3, 1.0, np.pi / 9), 10.0)
    np.testing.assert_array_equal(s.h1, np.ones(4))
    np.testing.assert_allclose(s.h2, 0.3 * np.exp(1j * np.pi / 9 * np.arange(4)), rtol=0, atol=1e-15)
    assert s.h3 == 1.0
    assert s.p_t == pytest.approx(10.0) and s.p_r == pytest.approx(10.0)
    assert s.sigma_sq == (1.0, 1.0)


def test_parametric_zero_strength():
    s = build_parametric_scenario(2, ChannelGeometry(0.0, 0.0, 0.0), 0.0)
    assert not s.h2.any() and s.h3 == 0 and s.p_t == 1.0


def test_parametric_three_antenna_example():
    s = build_parametric_scenario(3, ChannelGeometry(1.0, 1.0, 4 * np.pi / 9), 15.0)
    assert np.vdot(s.h2, s.h2).real == pytest.approx(3.0, abs=1e-14)
    assert s.p_t == pytest.approx(31.6228, abs=1e-4) and s.p_r == s.p_t


def test_alpha_taken_mod_2pi():
    a = build_parametric_scenario(3, ChannelGeometry(0.5, 1, 0.4), 10)
    b = build_parametric_scenario(3, ChannelGeometry(0.5, 1, 0.4 + 2 * np.pi), 10)
    np.testing.assert_allclose(a.h2, b.h2, atol=1e-14)


@given(st.integers(2, 6), st.floats(0, 3), st.floats(-10, 10))
def test_parametric_norm_property(n_t, lam, alpha):
    s = build_parametric_scenario(n_t, ChannelGeometry(lam, 1.0, alpha), 5.0)
    assert np.vdot(s.h2, s.h2).real == pytest.approx(n_t * lam ** 2, rel=1e-12, abs=1e-14)


def test_parametric_rejects_small_n_t():
    with pytest.raises(ValueError):
        build_parametric_scenario(1, ChannelGeometry(0.3, 1, 0), 10)


def test_random_determinism_and_seed_sensitivity():
    assert build_random_scenario(3, 5, 10.0) == build_random_scenario(3, 5, 10.0)
    a, b = build_random_scenario(2, 1, 10.0), build_random_scenario(2, 2, 10.0)
    assert not np.allclose(a.h1, b.h1)


def test_random_unit_variance():
    vals = [np.vdot(s.h1, s.h1).real / 2 for s in (build_random_scenario(2, k, 0) for k in range(10 ** 4))]
    assert np.mean(vals) == pytest.approx(1.0, abs=0.05)


_FIELDS = ["h1", "h2", "h3", "p_t", "p_r", "sigma_sq", "r_tar"]


def _kwargs():
    return dict(n_t=2, h1=[1, 0], h2=[0, 1], h3=0.5, p_t=1.0, p_r=1.0,
                sigma_sq=(1.0, 1.0), r_tar=(0.0, 0.0))


@given(st.sampled_from(_FIELDS), st.sampled_from([math.nan, math.inf, -math.inf]), st.integers(0, 1))
def test_rejects_non_finite(field, bad, pos):
    kw = _kwargs()
    val = kw[field]
    if isinstance(val, (list, tuple)):
        val = list(val)
        val[pos] = bad
        kw[field] = tuple(val) if field in ("sigma_sq", "r_tar") else val
    else:
        kw[field] = bad
    with pytest.raises(ValueError):
        Scenario(**kw)


@pytest.mark.parametrize("field,val", [("p_t", 0.0), ("p_r", -1.0), ("sigma_sq", (1.0, 0.0)),
                                       ("r_tar", (-0.1, 0.0)), ("h1", [1, 0, 0]), ("n_t", 1)])
def test_rejects_invalid(field, val):
    kw = _kwargs()
    kw[field] = val
    with pytest.raises(ValueError):
        Scenario(**kw)


def test_immutable(los4_scenario):
    with pytest.raises(ValueError):
        los4_scenario.h1[0] = 2.0


@given(st.integers(2, 5), st.integers(0, 10 ** 6), st.floats(-5, 30))
def test_text_round_trip(n_t, seed, snr):
    s = build_random_scenario(n_t, seed, snr, (0.25, 1.5))
    back = scenario_from_text(scenario_to_text(s))
    assert back == s and back.digest() == s.digest()


def test_file_round_trip(tmp_path, los4_scenario):
    path = tmp_path / "s.txt"
    save_scenario(los4_scenario, path)
    assert load_scenario(path) == los4_scenario
    text = path.read_text()
    for key in ("n_t", "h1", "h2", "h3", "p_t", "p_r", "sigma_sq_1", "r_tar_2"):
        assert f"{key} =" in text


def test_text_rejects_unknown_key():
    with pytest.raises(ValueError):
        scenario_from_text("n_t = 2\nh1 = 1,0 0,0\nh2 = 1,0 0,0\nh3 = 1,0\np_t = 1\np_r = 1\nfoo = 3\n")
