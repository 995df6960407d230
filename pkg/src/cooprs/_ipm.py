"""JIT-compiled log-barrier kernel for small dense convex QCQPs.

Problem: min 1/2 x'Q0x + q0'x  s.t.  1/2 x'Q_i x + q_i'x + r_i < 0.
"""

import math

import numpy as np
from numba import njit

OPTIMAL, MAX_ITER, STALLED, STOPPED = 0, 1, 2, 3


@njit(cache=True)
def _constraints(Qs, qs, rs, x, f, G):
    m, n = qs.shape
    for i in range(m):
        acc = 0.0
        for a in range(n):
            s = qs[i, a]
            for b in range(n):
                s += Qs[i, a, b] * x[b]
            # s = (Q_i x + q_i)_a; 1/2 x'Q_i x = 1/2 (s - q_i)_a x_a summed
            G[i, a] = s
            acc += 0.5 * (s + qs[i, a]) * x[a]
        f[i] = acc + rs[i]


@njit(cache=True)
def _objective(Q0, q0, x):
    n = q0.shape[0]
    val = 0.0
    for a in range(n):
        s = 0.0
        for b in range(n):
            s += Q0[a, b] * x[b]
        val += (0.5 * s + q0[a]) * x[a]
    return val


@njit(cache=True)
def _barrier_value(Q0, q0, f, x, t):
    val = t * _objective(Q0, q0, x)
    for i in range(f.shape[0]):
        val -= math.log(-f[i])
    return val


@njit(cache=True)
def _newton_step(H, grad):
    # Jacobi-equilibrated solve with a tiny ridge: near the boundary the
    # diagonal spans many decades and degenerate duals can make H singular
    n = grad.shape[0]
    d = np.empty(n)
    for a in range(n):
        d[a] = math.sqrt(max(H[a, a], 1e-300))
    Hs = np.empty((n, n))
    for a in range(n):
        for b in range(n):
            Hs[a, b] = H[a, b] / (d[a] * d[b])
        Hs[a, a] += 1e-12
    return -np.linalg.solve(Hs, grad / d) / d


@njit(cache=True)
def barrier(Q0, q0, Qs, qs, rs, x0, gap_tol, max_iter, stop_index, stop_margin,
            mu, alpha, beta, newton_tol, max_centering):
    """Returns (x, lam, status, steps, merit[steps, 2])."""
    m, n = qs.shape
    x = x0.copy()
    f = np.empty(m)
    G = np.empty((m, n))
    fn = np.empty(m)
    Gn = np.empty((m, n))
    merit = np.empty((max_iter, 2))
    _constraints(Qs, qs, rs, x, f, G)

    # initial t from least squares on the centrality residual
    g0 = Q0 @ x + q0
    gb = np.zeros(n)
    for i in range(m):
        gb += G[i] / -f[i]
    gg = g0 @ g0
    t = 1.0
    if gg > 0:
        t = -(g0 @ gb) / gg
    t = min(max(t, 1.0), m / gap_tol / mu)

    steps = 0
    H = np.empty((n, n))
    while True:
        inner = 0
        final = m / t <= gap_tol
        while True:
            if stop_index >= 0 and x[stop_index] < -stop_margin:
                return x, 1.0 / (-t * f), STOPPED, steps, merit[:steps]
            if steps >= max_iter:
                return x, 1.0 / (-t * f), MAX_ITER, steps, merit[:steps]
            grad = t * (Q0 @ x + q0)
            for a in range(n):
                for b in range(n):
                    H[a, b] = t * Q0[a, b]
            for i in range(m):
                inv = 1.0 / -f[i]
                inv2 = inv * inv
                for a in range(n):
                    grad[a] += inv * G[i, a]
                    ga = inv2 * G[i, a]
                    for b in range(n):
                        H[a, b] += inv * Qs[i, a, b] + ga * G[i, b]
            dx = _newton_step(H, grad)
            dec2 = -(grad @ dx)
            tol = newton_tol * 1e-3 if final else newton_tol
            if dec2 <= tol or (inner >= max_centering and dec2 <= 1e-6):
                break
            before = _barrier_value(Q0, q0, f, x, t)
            step = 1.0
            ok = False
            after = before
            while step >= 1e-14:
                xn = x + step * dx
                _constraints(Qs, qs, rs, xn, fn, Gn)
                feasible = True
                for i in range(m):
                    if not fn[i] < 0:
                        feasible = False
                        break
                if feasible:
                    after = _barrier_value(Q0, q0, fn, xn, t)
                    if dec2 < 1e-9 or after <= before - alpha * step * dec2:
                        ok = True
                        break
                step *= beta
            if not ok:
                return x, 1.0 / (-t * f), STALLED, steps, merit[:steps]
            merit[steps, 0] = before
            merit[steps, 1] = after
            steps += 1
            inner += 1
            x = xn
            f[:] = fn
            G[:, :] = Gn
        if final:
            return x, 1.0 / (-t * f), OPTIMAL, steps, merit[:steps]
        t = min(t * mu, m / gap_tol)
