"""Brute-force references for checking the optimizer.

Everything here is built from the closed-form rate expressions only; the
convex subproblem solver is never called. Intended for tests and the
``oracle-check`` command, not for production use.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .design import DesignPoint, InfeasibleError, make_design_point
from .kernel import CommonRateSplit, PrecoderSet, RateReport, check_theta, relay_link_rate
from .scenario import Scenario

__all__ = ["GridOracleSpec", "MAX_GRID", "grid_search_wsr", "random_search_wsr",
           "optimal_common_split", "power_splits", "unit_directions", "fd_gradient",
           "tangent_gradient_norm"]

MAX_GRID = 10 ** 8


def power_splits(levels: int) -> np.ndarray:
    """Rows ``(q_c, q_1, q_2)`` on the unit simplex with step ``1/levels``."""
    if levels < 1:
        raise ValueError("power_levels must be >= 1")
    rows = [(i, j, levels - i - j) for i in range(levels + 1) for j in range(levels + 1 - i)]
    return np.array(rows, dtype=float) / levels


def unit_directions(phase_steps: int, magnitude_steps: int) -> np.ndarray:
    """Unit vectors ``(cos b, sin b * e^{j phi})`` in C^2.

    ``b`` takes ``magnitude_steps`` values in [0, pi/2] and ``phi``
    ``phase_steps`` values in [0, 2 pi). A common phase of the whole vector
    changes no rate, so the first entry is kept real.
    """
    if phase_steps < 1 or magnitude_steps < 2:
        raise ValueError("need phase_steps >= 1 and magnitude_steps >= 2")
    beta = np.linspace(0.0, np.pi / 2, magnitude_steps)
    phi = 2 * np.pi * np.arange(phase_steps) / phase_steps
    b, f = np.meshgrid(beta, phi, indexing="ij")
    return np.stack([np.cos(b).ravel() + 0j, np.sin(b).ravel() * np.exp(1j * f.ravel())], axis=1)


@dataclass(frozen=True)
class GridOracleSpec:
    scenario: Scenario
    theta: float
    u: tuple
    phase_steps: int = 16
    magnitude_steps: int = 8
    power_levels: int = 4

    def __post_init__(self):
        if self.scenario.n_t != 2:
            raise ValueError("the grid oracle supports n_t = 2 only")
        check_theta(self.theta)
        if self.grid_size > MAX_GRID:
            raise ValueError(f"grid of {self.grid_size} points exceeds {MAX_GRID}")

    @property
    def n_directions(self) -> int:
        return self.phase_steps * self.magnitude_steps

    @property
    def grid_size(self) -> int:
        n_split = (self.power_levels + 1) * (self.power_levels + 2) // 2
        return self.n_directions ** 3 * n_split


def optimal_common_split(rates: RateReport, u, r_tar=(0.0, 0.0)) -> CommonRateSplit:
    """Best ``(c_1, c_2)`` for fixed precoders and time share.

    QoS shortfalls ``max(0, R_k^tar - R_p,k)`` are served first; the rest of
    the common rate goes to the user with the larger weight. With equal
    weights any split is optimal and the rest goes to the user holding the
    smaller share so far (user 1 if that ties as well).

    Raises
    ------
    InfeasibleError
        If the shortfalls exceed the common rate.
    """
    m1 = max(0.0, r_tar[0] - rates.r_p1)
    m2 = max(0.0, r_tar[1] - rates.r_p2)
    rest = rates.r_c - m1 - m2
    if rest < -1e-12 * (1.0 + rates.r_c):
        raise InfeasibleError(f"QoS shortfall {m1 + m2:.6g} exceeds common rate {rates.r_c:.6g}")
    rest = max(rest, 0.0)
    if u[0] > u[1] or (u[0] == u[1] and m1 <= m2):
        return CommonRateSplit(m1 + rest, m2)
    return CommonRateSplit(m1, m2 + rest)


def _rates_vec(s: Scenario, theta, gc, g1, g2, q):
    """Vectorized rates for gain arrays ``g*[user] = |h_user^H d|^2`` of the
    three (unit-norm) directions and power fractions ``q`` of P_t."""
    pt = s.p_t
    out = {}
    for k, sig in enumerate(s.sigma_sq):
        a_c = q[0] * pt * gc[k]
        a_1 = q[1] * pt * g1[k]
        a_2 = q[2] * pt * g2[k]
        t_k = a_1 + a_2 + sig
        out[k] = (a_c / t_k, (a_1 if k == 0 else a_2) / ((a_2 if k == 0 else a_1) + sig))
    rr = relay_link_rate(s)
    r_c = np.minimum(theta * np.log2(1 + out[0][0]),
                     theta * np.log2(1 + out[1][0]) + (1 - theta) * rr)
    return r_c, theta * np.log2(1 + out[0][1]), theta * np.log2(1 + out[1][1])


def _wsr_vec(u, r_tar, r_c, rp1, rp2):
    m1 = np.maximum(0.0, r_tar[0] - rp1)
    m2 = np.maximum(0.0, r_tar[1] - rp2)
    rest = r_c - m1 - m2
    wsr = u[0] * (rp1 + m1) + u[1] * (rp2 + m2) + max(u) * np.maximum(rest, 0.0)
    return np.where(rest >= -1e-12, wsr, -np.inf)


def grid_search_wsr(spec: GridOracleSpec) -> tuple[float, DesignPoint]:
    """Exhaustive search over precoder directions and full-power splits.

    Scaling every precoder up raises every SINR, so with the power budget
    as the only precoder constraint the optimum uses full power and only
    splits on the simplex are enumerated. The common rate is then split in
    closed form by :func:`optimal_common_split`.

    Raises
    ------
    InfeasibleError
        If no grid point meets the QoS targets.
    """
    s = spec.scenario
    u = (float(spec.u[0]), float(spec.u[1]))
    dirs = unit_directions(spec.phase_steps, spec.magnitude_steps)
    gains = np.stack([np.abs(dirs @ s.h1.conj()) ** 2, np.abs(dirs @ s.h2.conj()) ** 2])
    n_d = dirs.shape[0]
    # pair grids over (d_1, d_2)
    i1, i2 = np.meshgrid(np.arange(n_d), np.arange(n_d), indexing="ij")
    i1, i2 = i1.ravel(), i2.ravel()
    g1 = gains[:, i1]
    g2 = gains[:, i2]
    best = (-np.inf, None)
    for q in power_splits(spec.power_levels):
        for ic in range(n_d):
            gc = gains[:, ic:ic + 1]
            r_c, rp1, rp2 = _rates_vec(s, spec.theta, gc, g1, g2, q)
            wsr = _wsr_vec(u, s.r_tar, r_c, rp1, rp2)
            j = int(np.argmax(wsr))
            if wsr[j] > best[0]:
                best = (float(wsr[j]), (q, ic, i1[j], i2[j]))
    if best[1] is None:
        raise InfeasibleError("no grid point meets the QoS targets")
    q, ic, j1, j2 = best[1]
    amp = np.sqrt(q * s.p_t)
    p = PrecoderSet(amp[0] * dirs[ic], amp[1] * dirs[j1], amp[2] * dirs[j2])
    return _finish(s, p, spec.theta, u)


def _finish(s, p, theta, u):
    dp = make_design_point(s, p, CommonRateSplit(0.0, 0.0), theta, u, "oracle")
    c = optimal_common_split(dp.rates, u, s.r_tar)
    dp = make_design_point(s, p, c, theta, u, "oracle")
    return dp.wsr, dp


def random_search_wsr(s: Scenario, u, theta: float, n_samples: int = 10 ** 6, seed: int = 0,
                      chunk: int = 50_000) -> tuple[float, DesignPoint]:
    """Best of ``n_samples`` random full-power precoder sets.

    Directions are i.i.d. complex Gaussian; the power split is uniform on
    the simplex. Deterministic for a given ``seed`` and ``chunk``.
    """
    theta = check_theta(theta)
    u = (float(u[0]), float(u[1]))
    rng = np.random.default_rng(seed)
    n_t = s.n_t
    best = (-np.inf, None)
    done = 0
    while done < n_samples:
        m = min(chunk, n_samples - done)
        d = rng.standard_normal((3, m, n_t)) + 1j * rng.standard_normal((3, m, n_t))
        d /= np.linalg.norm(d, axis=2, keepdims=True)
        q = rng.dirichlet(np.ones(3), size=m).T
        gains = [np.stack([np.abs(d[i] @ s.h1.conj()) ** 2, np.abs(d[i] @ s.h2.conj()) ** 2])
                 for i in range(3)]
        r_c, rp1, rp2 = _rates_vec(s, theta, gains[0], gains[1], gains[2], q)
        wsr = _wsr_vec(u, s.r_tar, r_c, rp1, rp2)
        j = int(np.argmax(wsr))
        if wsr[j] > best[0]:
            amp = np.sqrt(q[:, j] * s.p_t)
            best = (float(wsr[j]), PrecoderSet(*(amp[i] * d[i, j] for i in range(3))))
        done += m
    if best[1] is None:
        raise InfeasibleError("no sample meets the QoS targets")
    return _finish(s, best[1], theta, u)


def fd_gradient(fun, x, h: float = 1e-6) -> np.ndarray:
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (fun(x + e) - fun(x - e)) / (2 * h)
    return g


def _private_wsr(s: Scenario, u, theta, x) -> float:
    n = s.n_t
    p1 = x[:n] + 1j * x[n:2 * n]
    p2 = x[2 * n:3 * n] + 1j * x[3 * n:]
    p = PrecoderSet(np.zeros(n), p1, p2)
    dp = make_design_point(s, p, CommonRateSplit(0.0, 0.0), theta, u)
    return dp.wsr


def tangent_gradient_norm(s: Scenario, u, theta: float, p: PrecoderSet, h: float = 1e-6) -> float:
    """Finite-difference stationarity measure for private-stream-only designs.

    Returns the norm of the WSR gradient with respect to ``(p_1, p_2)``
    after removing its component along the full-power sphere normal. It
    vanishes at a stationary point that uses the whole power budget.
    """
    x = np.concatenate([p.p_1.real, p.p_1.imag, p.p_2.real, p.p_2.imag])
    g = fd_gradient(lambda v: _private_wsr(s, u, theta, v), x, h)
    nrm = x / np.linalg.norm(x)
    return float(np.linalg.norm(g - (g @ nrm) * nrm))

