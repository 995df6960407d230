import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from cooprs.kernel import (LN2, CommonRateSplit, Equalizers, MseWeights, PrecoderSet,
                           augmented_wmse, common_rate, common_sinr, mmse_equalizers,
                           mmse_errors, mmse_weights, mse_pair, private_rate, private_sinr,
                           rate_report, rate_wmmse_gap, relay_link_rate)
from cooprs.scenario import Scenario, build_random_scenario

from conftest import random_precoders


def scen(h1, h2=None, h3=0.0, p_r=1.0, sigma=(1.0, 1.0)):
    h2 = h1 if h2 is None else h2
    return Scenario(len(h1), h1, h2, h3, 1.0, p_r, sigma)


def ps(pc, p1=None, p2=None):
    z = np.zeros(len(pc))
    return PrecoderSet(pc, z if p1 is None else p1, z if p2 is None else p2)


R2 = 1 / math.sqrt(2)


def test_common_sinr_examples():
    assert common_sinr(scen([1, 0]), ps([2, 0]), 1) == pytest.approx(4.0)
    assert common_sinr(scen([1, 0]), ps([0, 0], [1, 0]), 1) == 0.0
    s = scen([R2, R2])
    assert common_sinr(s, ps([1, 0], [0, 1]), 1) == pytest.approx(1 / 3)


def test_private_sinr_examples():
    assert private_sinr(scen([1, 0]), ps([0, 0], [1, 0]), 1) == pytest.approx(1.0)
    assert private_sinr(scen([1, 0]), ps([1, 0], [0, 0], [1, 0]), 1) == 0.0
    s = scen([R2, R2])
    assert private_sinr(s, ps([0, 0], [1, 0], [0, 1]), 1) == pytest.approx(1 / 3)


def test_relay_link_rate_examples():
    assert relay_link_rate(scen([1, 0], h3=0.0)) == 0.0
    assert relay_link_rate(scen([1, 0], h3=1.0, p_r=1.0)) == pytest.approx(1.0)
    assert relay_link_rate(scen([1, 0], h3=1j, p_r=10.0)) == pytest.approx(3.4594, abs=1e-4)


def test_common_rate_theta_one_has_no_relay_term(rng):
    s = build_random_scenario(3, 3, 10)
    p = random_precoders(rng, 3)
    expect = min(math.log2(1 + common_sinr(s, p, 1)), math.log2(1 + common_sinr(s, p, 2)))
    assert common_rate(s, p, 1.0) == pytest.approx(expect, rel=1e-14)


def test_common_rate_hand_example():
    # gamma_c1 = 3, gamma_c2 = 1, relay rate 2 bits, theta = 1/2
    s = Scenario(2, [math.sqrt(3), 0], [1, 0], math.sqrt(3), 1.0, 1.0)
    p = ps([1, 0])
    assert common_sinr(s, p, 1) == pytest.approx(3) and common_sinr(s, p, 2) == pytest.approx(1)
    assert relay_link_rate(s) == pytest.approx(2.0)
    assert common_rate(s, p, 0.5) == pytest.approx(1.0)


def test_common_rate_zero_pc():
    s = build_random_scenario(2, 0, 10)
    assert common_rate(s, ps([0, 0], [1, 1], [1, -1]), 0.3) == 0.0


def test_private_rate_examples():
    s = scen([1, 0])
    assert private_rate(s, ps([0, 0], [1, 0]), 1.0, 1) == pytest.approx(1.0)
    s3 = scen([math.sqrt(3), 0])
    assert private_rate(s3, ps([0, 0], [1, 0]), 0.5, 1) == pytest.approx(1.0)
    for th in (0.1, 0.7, 1.0):
        assert private_rate(s, ps([1, 0]), th, 1) == 0.0


def test_bit_units():
    s = scen([1, 0])
    assert common_rate(s, ps([1, 0]), 1.0) == 1.0


@pytest.mark.parametrize("bad", [0.0, -0.1, 1.0000001, math.nan])
def test_theta_validated(bad):
    s = scen([1, 0])
    with pytest.raises(ValueError):
        common_rate(s, ps([1, 0]), bad)
    with pytest.raises(ValueError):
        private_rate(s, ps([1, 0]), bad, 1)


def test_mse_examples():
    s = scen([1, 0])
    p = ps([1, 0])
    assert mse_pair(s, p, Equalizers(0, 0, 0, 0), 1) == (1.0, 1.0)
    g_c, _ = mmse_equalizers(s, p, 1)
    assert g_c == pytest.approx(0.5)
    eps_c, _ = mse_pair(s, p, Equalizers(g_c, g_c, 0, 0), 1)
    assert eps_c == pytest.approx(0.5)
    assert mmse_weights(s, p, 1)[0] == pytest.approx(2.0)
    assert mmse_equalizers(s, ps([0, 0], [1, 0]), 1)[0] == 0
    assert mmse_weights(s, ps([0, 0]), 1) == (1.0, 1.0)


@given(st.integers(0, 10 ** 6), st.integers(2, 4))
def test_mmse_minimizes_mse(seed, n_t):
    rng = np.random.default_rng(seed)
    s = build_random_scenario(n_t, seed, 10)
    p = random_precoders(rng, n_t)
    for user in (1, 2):
        g_c, g_k = mmse_equalizers(s, p, user)
        best = mse_pair(s, p, Equalizers(g_c, g_c, g_k, g_k), user)
        # closed forms agree with substituting the equalizers
        np.testing.assert_allclose(best, mmse_errors(s, p, user), rtol=1e-12, atol=1e-12)
        for _ in range(20):
            gc2, gk2 = rng.standard_normal(2) + 1j * rng.standard_normal(2)
            other = mse_pair(s, p, Equalizers(gc2, gc2, gk2, gk2), user)
            assert other[0] >= best[0] - 1e-12 and other[1] >= best[1] - 1e-12


def test_mmse_equalizer_stationary(rng):
    s = build_random_scenario(3, 11, 10)
    p = random_precoders(rng, 3)
    g_c, g_k = mmse_equalizers(s, p, 2)
    h = 1e-6
    for d in (h, 1j * h):
        f = lambda g: mse_pair(s, p, Equalizers(g_c + g, g_c + g, g_k + g, g_k + g), 2)
        plus, minus = f(d), f(-d)
        assert abs(plus[0] - minus[0]) / (2 * h) < 1e-6
        assert abs(plus[1] - minus[1]) / (2 * h) < 1e-6


def test_weight_stationary_in_augmented_wmse(rng):
    s = build_random_scenario(4, 12, 10)
    p = random_precoders(rng, 4)
    eps_c, eps_k = mmse_errors(s, p, 1)
    for eps, w in zip((eps_c, eps_k), mmse_weights(s, p, 1)):
        h = 1e-6 * w
        d = (augmented_wmse(eps, w + h) - augmented_wmse(eps, w - h)) / (2 * h)
        assert abs(d) < 1e-7


@given(st.integers(0, 10 ** 6), st.integers(2, 4))
def test_weights_at_least_one(seed, n_t):
    rng = np.random.default_rng(seed)
    s = build_random_scenario(n_t, seed, 20)
    w = mmse_weights(s, random_precoders(rng, n_t, 3.0), 1)
    assert min(w) >= 1.0


@given(st.integers(0, 10 ** 6), st.integers(2, 4), st.floats(0.01, 100))
def test_rate_wmmse_identity(seed, n_t, scale):
    rng = np.random.default_rng(seed)
    s = build_random_scenario(n_t, seed, 10)
    p = random_precoders(rng, n_t, scale)
    for user in (1, 2):
        gap = rate_wmmse_gap(s, p, user)
        assert abs(gap[0]) < 1e-9 and abs(gap[1]) < 1e-9


def test_identity_at_zero_precoder():
    s = build_random_scenario(2, 0, 10)
    assert rate_wmmse_gap(s, PrecoderSet.zeros(2), 1) == (0.0, 0.0)
    assert augmented_wmse(1.0, 1.0) == 1.0


def test_augmented_wmse_minimum_over_w():
    eps = 0.3
    ws = np.linspace(0.5, 8, 2001)
    vals = [augmented_wmse(eps, w) for w in ws]
    assert ws[int(np.argmin(vals))] == pytest.approx(1 / eps, abs=0.01)
    assert min(vals) == pytest.approx(1 + math.log2(eps), abs=1e-6)
    assert augmented_wmse(eps, 1 / eps) == pytest.approx(1 + math.log(eps) / LN2, abs=1e-15)


@given(st.integers(0, 10 ** 6), st.floats(0, 2 * math.pi))
def test_phase_invariance(seed, phi):
    rng = np.random.default_rng(seed)
    s = build_random_scenario(3, seed, 10)
    p = random_precoders(rng, 3)
    a = rate_report(s, p, 0.6)
    b = rate_report(s, p.scaled(np.exp(1j * phi)), 0.6)
    for f in ("gamma_c1", "gamma_c2", "gamma_1", "gamma_2", "r_c", "r_p1", "r_p2"):
        assert getattr(b, f) == pytest.approx(getattr(a, f), rel=1e-10, abs=1e-12)
    np.testing.assert_allclose(mmse_errors(s, p, 1), mmse_errors(s, p.scaled(np.exp(1j * phi)), 1),
                               rtol=1e-10)


@given(st.integers(0, 10 ** 6))
def test_private_sinr_ignores_common(seed):
    rng = np.random.default_rng(seed)
    s = build_random_scenario(2, seed, 10)
    p = random_precoders(rng, 2)
    q = PrecoderSet(10 * p.p_c + 1, p.p_1, p.p_2)
    assert private_sinr(s, p, 1) == private_sinr(s, q, 1)
    assert private_sinr(s, p, 2) == private_sinr(s, q, 2)


@given(st.integers(0, 10 ** 6), st.floats(0.05, 1.0))
def test_rate_report_consistent(seed, theta):
    rng = np.random.default_rng(seed)
    s = build_random_scenario(2, seed, 10)
    p = random_precoders(rng, 2)
    r = rate_report(s, p, theta)
    assert r.r_c == pytest.approx(common_rate(s, p, theta))
    assert r.r_p2 == pytest.approx(private_rate(s, p, theta, 2))
    assert r.r_c <= theta * math.log2(1 + r.gamma_c1) + 1e-12
    assert min(r.r_c, r.r_p1, r.r_p2, r.gamma_relay) >= 0


def test_precoder_set_basics():
    p = PrecoderSet([1, 1j], [0, 2], [1, 0])
    assert p.power() == pytest.approx(7.0) and p.n_t == 2
    assert p.as_matrix().shape == (2, 3)
    with pytest.raises(ValueError):
        PrecoderSet([1, 0], [1], [0, 0])
    with pytest.raises(ValueError):
        PrecoderSet([math.nan, 0], [0, 0], [0, 0])


def test_value_types_validate():
    with pytest.raises(ValueError):
        MseWeights(1, 1, 0, 1)
    with pytest.raises(ValueError):
        CommonRateSplit(-0.1, 0)
    assert CommonRateSplit(0.25, 0.5).total == 0.75
