"""Convex precoder / common-rate subproblem for fixed equalizers and weights.

For fixed MMSE equalizers ``g`` and weights ``w`` every augmented WMSE is a
convex quadratic in the precoders, so the (P, c_bar) update of the
alternating optimization is a QCQP. It is written over the real vector::

    x = [Re p_c, Im p_c, Re p_1, Im p_1, Re p_2, Im p_2, cb_1, cb_2, t]

with ``cb_k = -c_k`` and ``t`` an epigraph variable for the max over the two
common-stream terms, and solved by a log-barrier interior-point method (Newton centering steps,
phase-I start when the warm start is not strictly feasible).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _ipm
from .kernel import LN2, Equalizers, MseWeights, PrecoderSet, check_theta
from .scenario import Scenario

__all__ = [
    "StreamMask", "SubproblemSpec", "SubproblemSolution", "Qcqp",
    "assemble_qcqp", "solve", "kkt_residual", "constraint_violation",
    "dump_qcqp", "CONSTRAINT_NAMES",
]

CONSTRAINT_NAMES = (
    "common_sum",      # t - theta - cb_1 - cb_2 <= 0
    "common_user1",    # theta xi_c1 - t <= 0
    "common_user2",    # theta xi_c2 - (1 - theta) r_relay - t <= 0
    "cb1_nonpos",      # cb_1 <= 0
    "cb2_nonpos",      # cb_2 <= 0
    "qos_user1",       # R1_tar + cb_1 - theta (1 - xi_1) <= 0
    "qos_user2",       # R2_tar + cb_2 - theta (1 - xi_2) <= 0
    "power",           # |P|_F^2 - P_t <= 0
)
_COMMON = (0, 1, 2, 3, 4)

# Solver settings.
MAX_ITER = 200
GAP_TOL = 1e-8
PHASE1_INFEASIBLE = 1e-6
C_REGULARIZATION = 1e-9
_MU = 20.0
_ALPHA = 0.01
_BETA = 0.5
_NEWTON_TOL = 1e-10
_MAX_CENTERING = 30


@dataclass(frozen=True)
class StreamMask:
    """Which precoders and common-rate shares are free. Pinned ones stay 0."""

    p_c: bool = True
    p_1: bool = True
    p_2: bool = True
    c_1: bool = True
    c_2: bool = True

    def __post_init__(self):
        if (self.c_1 or self.c_2) and not self.p_c:
            raise ValueError("a common-rate share needs an active common stream")

    @property
    def has_common(self) -> bool:
        return self.c_1 or self.c_2

    def stream_active(self, key) -> bool:
        return {"c": self.p_c, 1: self.p_1, 2: self.p_2}[key]

    def apply(self, p: PrecoderSet) -> PrecoderSet:
        z = np.zeros(p.n_t, dtype=complex)
        return PrecoderSet(p.p_c if self.p_c else z, p.p_1 if self.p_1 else z,
                           p.p_2 if self.p_2 else z)


FULL_MASK = StreamMask()


@dataclass(frozen=True)
class SubproblemSpec:
    scenario: Scenario
    theta: float
    weights_u: tuple[float, float]
    g: Equalizers
    w: MseWeights
    r_relay: float
    tolerance: float = 1e-6
    mask: StreamMask = FULL_MASK

    def __post_init__(self):
        check_theta(self.theta)
        if len(self.weights_u) != 2 or min(self.weights_u) < 0 or max(self.weights_u) <= 0:
            raise ValueError(f"user weights must be >= 0 and not both 0, got {self.weights_u}")
        if self.r_relay < 0:
            raise ValueError("r_relay must be >= 0")
        if self.tolerance <= 0:
            raise ValueError("tolerance must be > 0")


@dataclass
class SubproblemSolution:
    p: PrecoderSet
    c_bar: tuple[float, float]
    objective: float
    status: str                    # "optimal" | "infeasible" | "max_iter"
    x: np.ndarray | None = None
    dual: np.ndarray | None = None
    iterations: int = 0
    phase1_iterations: int = 0
    merit: np.ndarray | None = None   # barrier value (before, after) per Newton step


@dataclass
class Qcqp:
    """min 1/2 x'Q0x + q0'x + r0  s.t.  1/2 x'Q_i x + q_i'x + r_i <= 0.

    ``free`` marks coordinates that are optimized; the rest are held at 0.
    """

    n_t: int
    Q0: np.ndarray
    q0: np.ndarray
    r0: float
    Qs: np.ndarray
    qs: np.ndarray
    rs: np.ndarray
    free: np.ndarray
    names: tuple = CONSTRAINT_NAMES

    @property
    def size(self) -> int:
        return self.q0.shape[0]

    def objective(self, x) -> float:
        return float(0.5 * x @ self.Q0 @ x + self.q0 @ x + self.r0)

    def constraints(self, x) -> np.ndarray:
        Qx = self.Qs @ x
        return 0.5 * Qx @ x + self.qs @ x + self.rs


def _embed(h: np.ndarray) -> np.ndarray:
    """2 x 2n real map with [Re(h^H p), Im(h^H p)] = A @ [Re p; Im p]."""
    hr, hi = h.real, h.imag
    return np.vstack([np.concatenate([hr, hi]), np.concatenate([-hi, hr])])


def _xi_pieces(h, sigma_sq, g, w, own_block, blocks, n_t):
    """Quadratic form (Q, q, r) of the bit-unit augmented WMSE

        1 + (w eps - ln w - 1) / ln 2,
        eps = |g|^2 (sum_{b in blocks} |h^H p_b|^2 + sigma^2) - 2 Re{g h^H p_own} + 1.
    """
    n = 6 * n_t + 3
    A = _embed(h)
    M = A.T @ A
    coef = w / LN2
    Q = np.zeros((n, n))
    for b in blocks:
        sl = slice(2 * n_t * b, 2 * n_t * (b + 1))
        Q[sl, sl] = 2.0 * coef * abs(g) ** 2 * M
    q = np.zeros(n)
    sl = slice(2 * n_t * own_block, 2 * n_t * (own_block + 1))
    q[sl] = -2.0 * coef * (np.array([g.real, -g.imag]) @ A)
    r = coef * (abs(g) ** 2 * sigma_sq + 1.0) + 1.0 - (math.log(w) + 1.0) / LN2
    return Q, q, r


def assemble_qcqp(spec: SubproblemSpec) -> Qcqp:
    """Build the real-valued QCQP for fixed (g, w, theta); see CONSTRAINT_NAMES."""
    s = spec.scenario
    n_t = s.n_t
    n = 6 * n_t + 3
    icb1, icb2, it = 6 * n_t, 6 * n_t + 1, 6 * n_t + 2
    theta = spec.theta
    u1, u2 = spec.weights_u

    xi = {}
    for k in (1, 2):
        h = s.channel(k)
        sig = s.noise(k)
        xi[("c", k)] = _xi_pieces(h, sig, spec.g.common(k), spec.w.common(k), 0, (0, 1, 2), n_t)
        xi[(k, k)] = _xi_pieces(h, sig, spec.g.private(k), spec.w.private(k), k, (1, 2), n_t)

    Q1, qv1, r1 = xi[(1, 1)]
    Q2, qv2, r2 = xi[(2, 2)]
    Q0 = theta * (u1 * Q1 + u2 * Q2)
    q0 = theta * (u1 * qv1 + u2 * qv2)
    q0[icb1] += u1
    q0[icb2] += u2
    r0 = theta * (u1 * r1 + u2 * r2)

    m = len(CONSTRAINT_NAMES)
    Qs = np.zeros((m, n, n))
    qs = np.zeros((m, n))
    rs = np.zeros(m)

    qs[0, [it, icb1, icb2]] = (1.0, -1.0, -1.0)
    rs[0] = -theta
    for i, k in ((1, 1), (2, 2)):
        Qc, qc, rc = xi[("c", k)]
        Qs[i] = theta * Qc
        qs[i] = theta * qc
        qs[i, it] = -1.0
        rs[i] = theta * rc
    rs[2] -= (1.0 - theta) * spec.r_relay
    qs[3, icb1] = 1.0
    qs[4, icb2] = 1.0
    for i, k, (Qp, qp, rp), icb in ((5, 1, xi[(1, 1)], icb1), (6, 2, xi[(2, 2)], icb2)):
        Qs[i] = theta * Qp
        qs[i] = theta * qp
        qs[i, icb] = 1.0
        rs[i] = s.r_tar[k - 1] - theta + theta * rp
    Qs[7, :6 * n_t, :6 * n_t] = 2.0 * np.eye(6 * n_t)
    rs[7] = -s.p_t

    mask = spec.mask
    free = np.ones(n, dtype=bool)
    for b, key in enumerate(("c", 1, 2)):
        if not mask.stream_active(key):
            free[2 * n_t * b:2 * n_t * (b + 1)] = False
    free[icb1] = mask.c_1
    free[icb2] = mask.c_2
    free[it] = mask.has_common
    if not mask.has_common:
        # no message on s_c: the common-rate rows are vacuous
        Qs[:3] = 0.0
        qs[:3] = 0.0
        rs[:3] = -1.0
    return Qcqp(n_t, Q0, q0, r0, Qs, qs, rs, free)


# ---------------------------------------------------------------------------
# Interior-point core
# ---------------------------------------------------------------------------

class _Reduced:
    """QCQP restricted to free coordinates and non-constant constraints."""

    def __init__(self, Q0, q0, Qs, qs, rs):
        self.Q0, self.q0, self.Qs, self.qs, self.rs = Q0, q0, Qs, qs, rs

    def f(self, x):
        Qx = self.Qs @ x
        return 0.5 * (Qx @ x) + self.qs @ x + self.rs, Qx + self.qs

    def grad0(self, x):
        return self.Q0 @ x + self.q0


_STATUS = {_ipm.OPTIMAL: "optimal", _ipm.MAX_ITER: "max_iter",
           _ipm.STALLED: "stalled", _ipm.STOPPED: "stopped"}


def _barrier(prob: _Reduced, x, gap_tol, max_iter, stop_index=-1, stop_margin=0.0):
    """Log-barrier method from a strictly feasible ``x``.

    Newton steps with Armijo backtracking on ``t f0(x) - sum log(-f_i(x))``;
    ``t`` grows by ``_MU`` after each centering until ``m / t <= gap_tol``.
    Returns ``(x, lam, status, newton_steps, merit)``; merit rows hold the
    barrier value before and after each step.
    """
    f, _ = prob.f(x)
    if np.any(f >= 0):
        raise ValueError("starting point is not strictly feasible")
    x, lam, code, steps, merit = _ipm.barrier(
        prob.Q0, prob.q0, prob.Qs, prob.qs, prob.rs, np.ascontiguousarray(x, dtype=float),
        gap_tol, max_iter, stop_index, stop_margin, _MU, _ALPHA, _BETA, _NEWTON_TOL,
        _MAX_CENTERING)
    return x, lam, _STATUS[code], steps, merit


def _phase1(prob: _Reduced, x0, max_iter):
    """Minimize the max constraint violation s over (x, s).

    Stops as soon as a point with a comfortable margin is found. Returns
    ``(x, s, newton_steps)``.
    """
    n = x0.shape[0]
    m = prob.rs.shape[0]
    # f_i(x) - s <= 0 for every constraint, plus -s - 1 <= 0 to keep it bounded
    Qs = np.zeros((m + 1, n + 1, n + 1))
    Qs[:m, :n, :n] = prob.Qs
    qs = np.zeros((m + 1, n + 1))
    qs[:m, :n] = prob.qs
    qs[:, -1] = -1.0
    rs = np.append(prob.rs, -1.0)
    q0 = np.zeros(n + 1)
    q0[-1] = 1.0
    aux = _Reduced(np.zeros((n + 1, n + 1)), q0, Qs, qs, rs)
    f0, _ = prob.f(x0)
    s0 = max(float(np.max(f0)), -1.0) + 1.0
    z, _, _, its, _ = _barrier(aux, np.append(x0, s0), 1e-9, max_iter,
                               stop_index=n, stop_margin=1e-4)
    return z[:-1], float(z[-1]), its


def _reduce(qp: Qcqp, scale: float, extra_reg: bool = True):
    idx = np.flatnonzero(qp.free)
    Q0 = qp.Q0[np.ix_(idx, idx)] / scale
    q0 = qp.q0[idx] / scale
    n_t = qp.n_t
    if extra_reg:
        for j, col in enumerate(idx):
            if col in (6 * n_t, 6 * n_t + 1):
                Q0[j, j] += 2.0 * C_REGULARIZATION
    Qs = qp.Qs[:, idx][:, :, idx]
    qs = qp.qs[:, idx]
    keep = np.array([np.any(Qs[i] != 0) or np.any(qs[i] != 0) for i in range(len(qp.rs))])
    return idx, keep, _Reduced(Q0, q0, Qs[keep], qs[keep], qp.rs[keep].copy())


def _precoder_vector(p: PrecoderSet) -> np.ndarray:
    return np.concatenate([np.concatenate([v.real, v.imag]) for v in (p.p_c, p.p_1, p.p_2)])


def _precoders_from(x: np.ndarray, n_t: int) -> PrecoderSet:
    vs = []
    for b in range(3):
        z = x[2 * n_t * b:2 * n_t * (b + 1)]
        vs.append(z[:n_t] + 1j * z[n_t:])
    return PrecoderSet(*vs)


def _interior_guess(qp: Qcqp, spec: SubproblemSpec, p0: PrecoderSet) -> np.ndarray:
    """Candidate strictly feasible point built from a precoder guess."""
    n_t = qp.n_t
    n = qp.size
    x = np.zeros(n)
    z = _precoder_vector(spec.mask.apply(p0))
    power = z @ z
    cap = (1.0 - 1e-3) * spec.scenario.p_t
    if power > cap:
        z *= math.sqrt(cap / power)
    x[:6 * n_t] = z
    if not spec.mask.has_common:
        return x
    f = qp.constraints(x)
    # with cb = t = 0: f[1], f[2] = common terms; f[5], f[6] = QoS slack
    top = max(f[1], f[2])
    ub = []
    for k, free_k in ((0, spec.mask.c_1), (1, spec.mask.c_2)):
        ub.append(min(0.0, -f[5 + k]) if free_k else 0.0)
    n_free = int(spec.mask.c_1) + int(spec.mask.c_2)
    avail = ub[0] + ub[1] - (top - spec.theta)
    if avail <= 0:
        return x
    x[6 * n_t + 2] = top + avail / 3.0
    for k, free_k in ((0, spec.mask.c_1), (1, spec.mask.c_2)):
        if free_k:
            x[6 * n_t + k] = ub[k] - avail / (3.0 * n_free)
    return x


def solve(spec: SubproblemSpec, init: PrecoderSet | None = None) -> SubproblemSolution:
    """Solve the subproblem to duality gap ``GAP_TOL`` (objective scaled by
    the larger user weight). Deterministic for a fixed spec and ``init``."""
    qp = assemble_qcqp(spec)
    n_t = qp.n_t
    scale = max(spec.weights_u)
    idx, keep, prob = _reduce(qp, scale)
    x_full = np.zeros(qp.size)

    # constraints that no free variable touches are fixed numbers
    const = qp.rs[~keep]
    if np.any(const > spec.tolerance * 1e-3):
        return SubproblemSolution(PrecoderSet.zeros(n_t), (0.0, 0.0), math.nan, "infeasible")

    p0 = init if init is not None else PrecoderSet.zeros(n_t)
    x0 = _interior_guess(qp, spec, p0)[idx]
    f0, _ = prob.f(x0)
    phase1_its = 0
    if np.any(f0 >= 0):
        x0, s_min, phase1_its = _phase1(prob, x0, MAX_ITER)
        if s_min > PHASE1_INFEASIBLE:
            return SubproblemSolution(PrecoderSet.zeros(n_t), (0.0, 0.0), math.nan,
                                      "infeasible", phase1_iterations=phase1_its)
        if s_min >= 0:
            # feasible set without interior: relax every constraint a hair
            prob.rs = prob.rs - (s_min + 1e-10)

    x, lam, status, its, merit = _barrier(prob, x0, GAP_TOL, MAX_ITER)
    lam = _polish_duals(prob, x, lam)
    if status == "stalled":
        status = "optimal" if _kkt_reduced(prob, x, lam) <= spec.tolerance else "max_iter"
    x_full[idx] = x
    dual = np.zeros(len(qp.rs))
    dual[np.flatnonzero(keep)] = lam
    p = _precoders_from(x_full, n_t)
    c_bar = (float(x_full[6 * n_t]), float(x_full[6 * n_t + 1]))
    return SubproblemSolution(p, c_bar, qp.objective(x_full), status, x_full, dual,
                              its, phase1_its, merit)


def _polish_duals(prob: _Reduced, x, lam, active_tol: float = 1e-6):
    """Refit the multipliers of nearly active constraints.

    Barrier duals ``1 / (-t f_i)`` inherit the rounding error of slacks that
    are ~1e-9 at the final ``t``. A nonnegative least-squares fit of the
    stationarity condition over the nearly active set is far more accurate;
    the better of the two estimates (by KKT residual) is returned.
    """
    f, G = prob.f(x)
    if not f.size:
        return lam
    act = np.flatnonzero(-f < active_tol)
    if not act.size:
        return lam
    g0 = prob.grad0(x)
    rest = np.setdiff1d(np.arange(f.size), act)
    rhs = -(g0 + G[rest].T @ lam[rest])
    A = G[act].T
    # small active-set NNLS: drop the most negative multiplier until all >= 0
    free = list(range(act.size))
    sol = np.zeros(act.size)
    while free:
        coef, *_ = np.linalg.lstsq(A[:, free], rhs, rcond=None)
        if coef.min() >= 0:
            sol[:] = 0.0
            sol[free] = coef
            break
        free.pop(int(np.argmin(coef)))
    cand = lam.copy()
    cand[act] = sol
    return cand if _kkt_reduced(prob, x, cand) < _kkt_reduced(prob, x, lam) else lam


def _kkt_reduced(prob: _Reduced, x, lam) -> float:
    f, G = prob.f(x)
    stat = prob.grad0(x) + G.T @ lam
    parts = [np.max(np.abs(stat)) if stat.size else 0.0]
    if f.size:
        parts += [np.max(np.maximum(f, 0.0)), np.max(np.maximum(-lam, 0.0)),
                  np.max(np.abs(lam * f))]
    return float(max(parts))


def kkt_residual(spec: SubproblemSpec, sol: SubproblemSolution) -> float:
    """Largest of the stationarity, primal, dual and complementarity residuals
    at ``sol`` (objective scaled by the larger user weight, as in solve)."""
    if sol.x is None or sol.dual is None:
        raise ValueError("solution carries no primal/dual iterate")
    qp = assemble_qcqp(spec)
    idx, keep, prob = _reduce(qp, max(spec.weights_u))
    return _kkt_reduced(prob, sol.x[idx], sol.dual[np.flatnonzero(keep)])


def constraint_violation(spec: SubproblemSpec, sol: SubproblemSolution) -> float:
    """max(0, max_i f_i(x)) over all constraints of the assembled program."""
    qp = assemble_qcqp(spec)
    return float(max(0.0, np.max(qp.constraints(sol.x))))


def dump_qcqp(qp: Qcqp, path) -> None:
    """Write the program as matrix-market style coordinate blocks."""
    def block(name, arr):
        arr = np.atleast_2d(arr)
        nz = np.argwhere(arr != 0)
        lines = [f"%%MatrixMarket matrix coordinate real general", f"% {name}",
                 f"{arr.shape[0]} {arr.shape[1]} {len(nz)}"]
        lines += [f"{i + 1} {j + 1} {arr[i, j]!r}" for i, j in nz]
        return "\n".join(lines)

    parts = [f"% minimize 1/2 x'Q0x + q0'x + r0 s.t. 1/2 x'Qix + qi'x + ri <= 0",
             f"% n = {qp.size}, r0 = {qp.r0!r}",
             f"% free = {' '.join(str(int(b)) for b in qp.free)}",
             block("Q0", qp.Q0), block("q0", qp.q0)]
    for i, name in enumerate(qp.names):
        parts.append(f"% constraint {i} {name} r = {qp.rs[i]!r}")
        parts.append(block(f"Q{i + 1}", qp.Qs[i]))
        parts.append(block(f"q{i + 1}", qp.qs[i]))
    Path(path).write_text("\n".join(parts) + "\n")
