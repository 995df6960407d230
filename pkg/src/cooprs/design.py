"""Candidate solutions and their feasibility bookkeeping."""

from __future__ import annotations

from dataclasses import dataclass, field

from .kernel import CommonRateSplit, PrecoderSet, RateReport, rate_report
from .scenario import Scenario

__all__ = ["DesignPoint", "AoState", "InfeasibleError", "make_design_point",
           "design_residual", "weighted_sum_rate", "best_split"]


class InfeasibleError(RuntimeError):
    """Raised when the QoS targets cannot be met."""


@dataclass
class AoState:
    iteration: int = 0
    p: PrecoderSet | None = None
    c_bar: tuple[float, float] = (0.0, 0.0)
    wsr_history: list = field(default_factory=list)
    converged: bool = False
    # (iteration, wsr, max constraint residual) per accepted iterate
    trace: list = field(default_factory=list)
    # subproblem that produced the accepted iterate, kept for KKT checks
    last_spec: object = None
    last_solution: object = None


@dataclass
class DesignPoint:
    """Precoders, common-rate split and time share with the resulting rates.

    ``r_tot[k] = rates.r_p{k} + c.c_{k}`` and ``wsr = u . r_tot``.
    """

    p: PrecoderSet
    c: CommonRateSplit
    theta: float
    rates: RateReport
    r_tot: tuple[float, float]
    wsr: float
    u: tuple[float, float]
    scheme: str | None = None
    state: AoState | None = None

    def relabel(self, scheme: str) -> "DesignPoint":
        return DesignPoint(self.p, self.c, self.theta, self.rates, self.r_tot, self.wsr,
                           self.u, scheme, self.state)


def weighted_sum_rate(u, r_tot) -> float:
    return u[0] * r_tot[0] + u[1] * r_tot[1]


def make_design_point(s: Scenario, p: PrecoderSet, c: CommonRateSplit, theta: float,
                      u, scheme: str | None = None, state: AoState | None = None) -> DesignPoint:
    rates = rate_report(s, p, theta)
    r_tot = (rates.r_p1 + c.c_1, rates.r_p2 + c.c_2)
    u = (float(u[0]), float(u[1]))
    return DesignPoint(p, c, float(theta), rates, r_tot, weighted_sum_rate(u, r_tot), u,
                       scheme, state)


def design_residual(s: Scenario, dp: DesignPoint) -> float:
    """Largest violation of the QoS, common-rate, sign and power constraints."""
    viol = [
        s.r_tar[0] - dp.r_tot[0],
        s.r_tar[1] - dp.r_tot[1],
        dp.c.c_1 + dp.c.c_2 - dp.rates.r_c,
        -dp.c.c_1,
        -dp.c.c_2,
        dp.p.power() - s.p_t,
    ]
    return max(0.0, max(viol))


def best_split(rates: RateReport, u, r_tar, free=(True, True)) -> CommonRateSplit | None:
    """Largest-WSR split of ``rates.r_c`` with QoS shortfalls served first;
    only shares marked in ``free`` may be positive. ``None`` if infeasible."""
    need = [max(0.0, r_tar[0] - rates.r_p1), max(0.0, r_tar[1] - rates.r_p2)]
    for k in (0, 1):
        if need[k] > 0 and not free[k]:
            return None
    rest = rates.r_c - need[0] - need[1]
    if rest < 0:
        return None
    cand = [k for k in (0, 1) if free[k]]
    if cand:
        k = max(cand, key=lambda i: (u[i], -i))
        need[k] += rest
    return CommonRateSplit(need[0], need[1])
