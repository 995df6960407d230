"""Alternating optimization of precoders and common-rate split, and the
one-dimensional search over the time share ``theta``.

For fixed ``theta`` the driver alternates between the closed-form MMSE
equalizers / weights and the convex (P, c_bar) subproblem until the weighted
sum rate changes by less than ``eps``. ``theta_search`` repeats this over a
grid and cross-seeds neighbouring grid points.
"""

from __future__ import annotations

import csv
import logging
import math

import numpy as np

from . import qcqp
from .design import (AoState, DesignPoint, InfeasibleError, best_split, design_residual,
                     make_design_point)
from .kernel import (CommonRateSplit, PrecoderSet, check_theta, equalizers_for,
                     relay_link_rate, weights_for)
from .qcqp import FULL_MASK, StreamMask, SubproblemSpec
from .scenario import Scenario

log = logging.getLogger(__name__)

__all__ = ["initialize_precoders", "ao_solve", "theta_search", "select_best",
           "write_trace_csv", "DEFAULT_EPS", "DEFAULT_MAX_ITER", "DEFAULT_GRID"]

DEFAULT_EPS = 1e-5
DEFAULT_MAX_ITER = 200
DEFAULT_GRID = tuple(round(0.05 * i, 10) for i in range(1, 21))
_TIE = 1e-12


def initialize_precoders(s: Scenario, theta: float = 1.0, mask: StreamMask = FULL_MASK) -> PrecoderSet:
    """Matched-filter private precoders and a common precoder along the
    dominant left singular vector of ``[h1 h2]``.

    Powers: ``P_t/2`` to the common stream and ``P_t/4`` to each private one.
    A private precoder with a zero channel (or pinned by ``mask``) gets no
    power; whatever is left over is spread over the active streams.
    """
    check_theta(theta)
    n_t = s.n_t
    u_mat, _, _ = np.linalg.svd(np.column_stack([s.h1, s.h2]))
    u_max = u_mat[:, 0]
    nz = np.flatnonzero(np.abs(u_max) > 1e-12)
    if nz.size:
        lead = u_max[nz[0]]
        u_max = u_max * (abs(lead) / lead)

    dirs = {"c": u_max}
    for k in (1, 2):
        h = s.channel(k)
        norm = np.linalg.norm(h)
        dirs[k] = h / norm if norm > 0 else None

    shares = {"c": 0.5, 1: 0.25, 2: 0.25}
    for k in (1, 2):
        if dirs[k] is None:
            # fold the power of a dead private stream into the common one
            shares["c"] += shares[k]
            shares[k] = 0.0
    active = {key: mask.stream_active(key) and dirs[key] is not None and shares[key] > 0
              for key in ("c", 1, 2)}
    total = sum(shares[key] for key in active if active[key])
    vecs = []
    for key in ("c", 1, 2):
        if active[key]:
            vecs.append(math.sqrt(s.p_t * shares[key] / total) * dirs[key])
        else:
            vecs.append(np.zeros(n_t, dtype=complex))
    if not any(active.values()):
        return PrecoderSet.zeros(n_t)
    return PrecoderSet(*vecs)


def _c_from(c_bar) -> CommonRateSplit:
    return CommonRateSplit(max(0.0, -c_bar[0]), max(0.0, -c_bar[1]))


def _extrapolate(s: Scenario, new: PrecoderSet, old: PrecoderSet, beta: float) -> PrecoderSet:
    """``new + beta (new - old)``, scaled back into the power budget."""
    mats = [a + beta * (a - b) for a, b in zip((new.p_c, new.p_1, new.p_2),
                                                (old.p_c, old.p_1, old.p_2))]
    y = PrecoderSet(*mats)
    pw = y.power()
    return y.scaled(math.sqrt(s.p_t / pw)) if pw > s.p_t else y


def _design_at(s, p, theta, u, mask, scheme):
    """Design at precoders ``p`` with the best admissible common split, or None."""
    dp = make_design_point(s, p, CommonRateSplit(0.0, 0.0), theta, u, scheme)
    c = best_split(dp.rates, u, s.r_tar, (mask.c_1, mask.c_2))
    return None if c is None else make_design_point(s, p, c, theta, u, scheme)


_BETA_MIN, _BETA_MAX = 0.125, 64.0


def _accelerate(s, cand, prev_p, beta, theta, u, mask, scheme):
    """Linearization point for the next iteration and the next ``beta``.

    Steps ``beta, 2 beta, 4 beta, ...`` along ``cand.p - prev_p`` are tried
    while they keep improving the weighted sum rate; ``cand.p`` is kept if
    the first one does not.
    """
    best, b = None, beta
    while b <= _BETA_MAX:
        y = _design_at(s, _extrapolate(s, cand.p, prev_p, b), theta, u, mask, scheme)
        if y is None or y.wsr <= (best.wsr if best else cand.wsr):
            break
        best, b = y, 2.0 * b
    if best is None:
        return cand.p, max(0.5 * beta, _BETA_MIN)
    return best.p, min(b / 2.0, _BETA_MAX)


def ao_solve(s: Scenario, u, theta: float, eps: float = DEFAULT_EPS,
             init: PrecoderSet | None = None, mask: StreamMask = FULL_MASK,
             max_iter: int = DEFAULT_MAX_ITER, scheme: str | None = None,
             accelerate: bool = True) -> DesignPoint:
    """Run the alternating optimization at a fixed ``theta``.

    An update that lowers the weighted sum rate (possible only through
    solver round-off) is rejected and ends the run, so the recorded history
    is non-decreasing.

    With ``accelerate`` the equalizers and weights of the next iteration are
    taken at the extrapolated point ``P_n + beta (P_n - P_{n-1})`` whenever
    that point is feasible and has a strictly larger weighted sum rate than
    ``P_n``; since it is then feasible for the next surrogate problem, the
    recorded history stays non-decreasing. ``beta`` is doubled while that
    keeps helping and halved after a failed step.

    Raises
    ------
    InfeasibleError
        If a subproblem cannot meet the QoS targets.
    """
    theta = check_theta(theta)
    if eps <= 0:
        raise ValueError("eps must be > 0")
    u = (float(u[0]), float(u[1]))
    r_relay = relay_link_rate(s)
    p = mask.apply(init) if init is not None else initialize_precoders(s, theta, mask)
    state = AoState(p=p)
    best = None
    prev = 0.0
    beta = 0.5
    for n in range(1, max_iter + 1):
        spec = SubproblemSpec(s, theta, u, equalizers_for(s, p), weights_for(s, p), r_relay,
                              mask=mask)
        sol = qcqp.solve(spec, p)
        if sol.status == "infeasible":
            raise InfeasibleError(f"subproblem infeasible at theta={theta}, iteration {n}")
        cand = make_design_point(s, sol.p, _c_from(sol.c_bar), theta, u, scheme)
        if best is not None and cand.wsr < best.wsr:
            drop = best.wsr - cand.wsr
            state.converged = drop <= 1e-6 * (1.0 + abs(best.wsr))
            if not state.converged:
                log.warning("AO step lowered WSR by %.3g at theta=%s; stopping", drop, theta)
            break
        prev_p = best.p if best is not None else None
        best = cand
        p = sol.p
        state.iteration = n
        state.p = p
        state.c_bar = sol.c_bar
        state.last_spec = spec
        state.last_solution = sol
        state.wsr_history.append(cand.wsr)
        state.trace.append((n, cand.wsr, design_residual(s, cand)))
        if abs(cand.wsr - prev) < eps:
            state.converged = True
            break
        prev = cand.wsr
        if accelerate and prev_p is not None:
            p, beta = _accelerate(s, cand, prev_p, beta, theta, u, mask, scheme)
    best.state = state
    return best


def select_best(candidates):
    """Largest WSR; near-ties go to the larger theta, then to the earlier entry."""
    best = None
    for dp in candidates:
        if best is None or dp.wsr > best.wsr + _TIE:
            best = dp
        elif abs(dp.wsr - best.wsr) <= _TIE and dp.theta > best.theta:
            best = dp
    return best


def _validate_grid(grid):
    grid = sorted({float(t) for t in grid})
    if not grid:
        raise ValueError("theta grid is empty")
    for t in grid:
        check_theta(t)
    if grid[-1] != 1.0:
        raise ValueError("theta grid must contain 1.0")
    return grid


def theta_search(s: Scenario, u, eps: float = DEFAULT_EPS, grid=DEFAULT_GRID,
                 mask: StreamMask = FULL_MASK, seeds=(), max_iter: int = DEFAULT_MAX_ITER,
                 scheme: str | None = None) -> DesignPoint:
    """Best design over a grid of time shares.

    Every grid point is solved from the default initializer and again from
    the better of its two neighbours' solutions; ``seeds`` (already feasible
    designs) compete as they are. With a dead relay link only ``theta = 1``
    is searched, since any shorter direct slot just scales every rate down.
    """
    grid = _validate_grid(grid)
    if relay_link_rate(s) == 0.0:
        grid = [1.0]
    first = []
    for theta in grid:
        try:
            first.append(ao_solve(s, u, theta, eps, None, mask, max_iter, scheme))
        except InfeasibleError:
            first.append(None)
    results = list(first)
    for i, theta in enumerate(grid):
        nbrs = [first[j] for j in (i - 1, i + 1) if 0 <= j < len(grid) and first[j] is not None]
        if not nbrs:
            continue
        nb = max(nbrs, key=lambda d: d.wsr)
        try:
            alt = ao_solve(s, u, theta, eps, nb.p, mask, max_iter, scheme)
        except InfeasibleError:
            continue
        if results[i] is None or alt.wsr > results[i].wsr + _TIE:
            results[i] = alt
    cands = [d for d in results if d is not None]
    # larger theta first so select_best keeps it on ties
    cands.sort(key=lambda d: -d.theta)
    cands += [make_design_point(s, d.p, d.c, d.theta, u, scheme, d.state) for d in seeds]
    if not cands:
        raise InfeasibleError("no feasible theta on the grid")
    return select_best(cands)


def write_trace_csv(state: AoState, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["iteration", "wsr", "max_residual"])
        for row in state.trace:
            w.writerow([row[0], repr(row[1]), repr(row[2])])
