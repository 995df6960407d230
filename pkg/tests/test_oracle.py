import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog

from cooprs.ao import ao_solve
from cooprs.design import InfeasibleError, make_design_point
from cooprs.kernel import CommonRateSplit, PrecoderSet, RateReport
from cooprs.oracle import (GridOracleSpec, MAX_GRID, fd_gradient, grid_search_wsr,
                           optimal_common_split, power_splits, random_search_wsr,
                           tangent_gradient_norm, unit_directions)
from cooprs.scenario import build_random_scenario
from cooprs.schemes import get_scheme, scheme_constraints


def report(r_c, r_p1=0.0, r_p2=0.0):
    nan = math.nan
    return RateReport(nan, nan, nan, nan, nan, r_c, r_p1, r_p2, nan)


def test_split_examples():
    c = optimal_common_split(report(1.0), (1.0, 2.0))
    assert (c.c_1, c.c_2) == (0.0, 1.0)
    c = optimal_common_split(report(1.0, r_p1=0.2), (1.0, 1.0), r_tar=(0.8, 0.0))
    assert (c.c_1, c.c_2) == pytest.approx((0.6, 0.4), abs=1e-15)
    c = optimal_common_split(report(1.0), (1.0, 1.0))
    assert (c.c_1, c.c_2) == (1.0, 0.0)
    with pytest.raises(InfeasibleError):
        optimal_common_split(report(1.0), (1.0, 1.0), r_tar=(0.7, 0.7))


def lp_split(rates, u, r_tar):
    lo = [max(0.0, r_tar[0] - rates.r_p1), max(0.0, r_tar[1] - rates.r_p2)]
    res = linprog(-np.asarray(u), A_ub=[[1.0, 1.0]], b_ub=[rates.r_c],
                  bounds=[(lo[0], None), (lo[1], None)], method="highs")
    return res


@given(r_c=st.floats(0.0, 5.0), rp=st.tuples(st.floats(0, 3), st.floats(0, 3)),
       u=st.tuples(st.floats(0.0, 10.0), st.floats(0.0, 10.0)),
       tar=st.tuples(st.floats(0, 3), st.floats(0, 3)))
def test_split_matches_lp(r_c, rp, u, tar):
    rates = report(r_c, *rp)
    lp = lp_split(rates, u, tar)
    if lp.status == 2:
        with pytest.raises(InfeasibleError):
            optimal_common_split(rates, u, tar)
        return
    c = optimal_common_split(rates, u, tar)
    assert u[0] * c.c_1 + u[1] * c.c_2 == pytest.approx(-lp.fun, abs=1e-9)
    assert c.c_1 >= 0 and c.c_2 >= 0
    assert c.c_1 + c.c_2 <= r_c + 1e-12
    if max(u) > 0:
        assert c.c_1 + c.c_2 == pytest.approx(r_c, abs=1e-12)


def test_power_splits_and_directions():
    q = power_splits(4)
    assert q.shape == (15, 3)
    np.testing.assert_allclose(q.sum(axis=1), 1.0)
    assert q.min() >= 0
    d = unit_directions(16, 8)
    assert d.shape == (128, 2)
    np.testing.assert_allclose(np.linalg.norm(d, axis=1), 1.0)
    assert np.all(d[:, 0].imag == 0)
    with pytest.raises(ValueError):
        power_splits(0)
    with pytest.raises(ValueError):
        unit_directions(4, 1)


def test_grid_spec_checks():
    with pytest.raises(ValueError):
        GridOracleSpec(build_random_scenario(3, 0, 10.0), 1.0, (1, 1))
    s = build_random_scenario(2, 0, 10.0)
    with pytest.raises(ValueError):
        GridOracleSpec(s, 1.5, (1, 1))
    with pytest.raises(ValueError):
        GridOracleSpec(s, 1.0, (1, 1), 64, 64, 10)
    assert GridOracleSpec(s, 1.0, (1, 1)).grid_size <= MAX_GRID


def test_single_user_is_mrt_capacity():
    s = build_random_scenario(2, 3, 10.0)
    wsr, dp = grid_search_wsr(GridOracleSpec(s, 1.0, (1.0, 0.0)))
    cap = math.log2(1 + s.p_t * np.linalg.norm(s.h1) ** 2)
    assert wsr <= cap + 1e-9
    assert wsr >= cap - 0.05
    assert dp.p.power() == pytest.approx(s.p_t)


def test_grid_contains_its_own_points():
    s = build_random_scenario(2, 8, 10.0)
    d = unit_directions(4, 3)
    amp = np.sqrt(np.array([0.25, 0.5, 0.25]) * s.p_t)
    p = PrecoderSet(amp[0] * d[3], amp[1] * d[5], amp[2] * d[7])
    dp = make_design_point(s, p, CommonRateSplit(0, 0), 1.0, (1, 1))
    c = optimal_common_split(dp.rates, (1, 1))
    on_grid = make_design_point(s, p, c, 1.0, (1, 1)).wsr
    assert grid_search_wsr(GridOracleSpec(s, 1.0, (1, 1), 4, 3, 4))[0] >= on_grid - 1e-12


@pytest.mark.parametrize("seed", range(3))
def test_optimizer_not_worse_than_grid(seed):
    s = build_random_scenario(2, 40 + seed, 10.0)
    orc = grid_search_wsr(GridOracleSpec(s, 1.0, (1.0, 1.0), 8, 6, 4))[0]
    assert ao_solve(s, (1.0, 1.0), 1.0).wsr >= orc - 0.05


def test_random_search_deterministic_and_bounded():
    s = build_random_scenario(3, 1, 10.0)
    a = random_search_wsr(s, (1, 1), 1.0, n_samples=20_000, seed=5)
    b = random_search_wsr(s, (1, 1), 1.0, n_samples=20_000, seed=5)
    assert a[0] == b[0]
    np.testing.assert_array_equal(a[1].p.p_c, b[1].p.p_c)
    assert ao_solve(s, (1, 1), 1.0).wsr >= a[0] - 1e-9


def test_oracle_infeasible_targets():
    s = build_random_scenario(2, 1, 0.0, r_tar=(30.0, 30.0))
    with pytest.raises(InfeasibleError):
        grid_search_wsr(GridOracleSpec(s, 1.0, (1, 1), 4, 3, 2))
    with pytest.raises(InfeasibleError):
        random_search_wsr(s, (1, 1), 1.0, n_samples=1000)


def test_fd_gradient_of_quadratic():
    a = np.array([[2.0, 0.5], [0.5, 1.0]])
    x = np.array([0.3, -1.2])
    np.testing.assert_allclose(fd_gradient(lambda v: v @ a @ v, x), 2 * a @ x, atol=1e-8)


@pytest.mark.parametrize("seed", range(4))
def test_private_only_solution_is_stationary(seed):
    s = build_random_scenario(2, seed, 10.0)
    mask, _ = scheme_constraints(get_scheme("mu-lp"))
    dp = ao_solve(s, (1.0, 1.3), 1.0, 1e-8, mask=mask, max_iter=2000)
    assert tangent_gradient_norm(s, (1.0, 1.3), 1.0, dp.p) <= 1e-3
