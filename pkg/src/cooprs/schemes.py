"""The seven transmission schemes as restricted instances of one problem.

Every scheme is the cooperative rate-splitting problem with some streams
switched off, some common-rate shares pinned to zero and a time-share policy:

========  =====  =====  =====  ===============  ===========
scheme    s_1    s_2    s_c    s_c carries      theta
========  =====  =====  =====  ===============  ===========
crs       W_p1   W_p2   yes    W_c1, W_c2       searched
nrs       W_p1   W_p2   yes    W_c1, W_c2       1
ers       W_p1   W_p2   yes    W_c1, W_c2       1/2
c-noma    W_1    -      yes    W_2              searched
n-noma    W_1    -      yes    W_2              1
mu-lp     W_1    W_2    -      -                1
odf       -      -      yes    W_2              searched
========  =====  =====  =====  ===============  ===========

NOMA-type schemes reuse the rate-splitting receivers unchanged: both users
decode s_c first and user 1 removes it by SIC before decoding s_1.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

from .ao import DEFAULT_EPS, DEFAULT_GRID, DEFAULT_MAX_ITER, ao_solve, select_best, theta_search
from .design import DesignPoint, InfeasibleError, make_design_point
from .qcqp import StreamMask
from .scenario import Scenario

log = logging.getLogger(__name__)

__all__ = ["SchemeSpec", "SCHEMES", "SCHEME_NAMES", "get_scheme", "scheme_constraints",
           "solve_scheme", "seed_admissible"]

THETA_POLICIES = ("fixed1", "fixed_half", "searched")


@dataclass(frozen=True)
class SchemeSpec:
    name: str
    use_p1: bool
    use_p2: bool
    use_pc: bool
    w2_fully_common: bool
    theta_policy: str

    def __post_init__(self):
        if self.theta_policy not in THETA_POLICIES:
            raise ValueError(f"unknown theta policy {self.theta_policy!r}")
        if self.w2_fully_common and (self.use_p2 or not self.use_pc):
            raise ValueError(f"{self.name}: carrying all of W_2 on s_c needs s_c on and s_2 off")
        if not (self.use_p1 or self.use_p2 or self.use_pc):
            raise ValueError(f"{self.name}: no stream is active")
        if self.name in _TABLE and _TABLE[self.name] != self._row():
            raise ValueError(f"{self.name}: inconsistent with the canonical definition")

    def _row(self):
        return (self.use_p1, self.use_p2, self.use_pc, self.w2_fully_common, self.theta_policy)

    @property
    def fixed_theta(self) -> float | None:
        return {"fixed1": 1.0, "fixed_half": 0.5}.get(self.theta_policy)


# name -> (use_p1, use_p2, use_pc, w2_fully_common, theta_policy)
_TABLE = {
    "crs": (True, True, True, False, "searched"),
    "nrs": (True, True, True, False, "fixed1"),
    "ers": (True, True, True, False, "fixed_half"),
    "c-noma": (True, False, True, True, "searched"),
    "n-noma": (True, False, True, True, "fixed1"),
    "mu-lp": (True, True, False, False, "fixed1"),
    "odf": (False, False, True, True, "searched"),
}

SCHEME_NAMES = tuple(_TABLE)
SCHEMES = {name: SchemeSpec(name, *row) for name, row in _TABLE.items()}


def get_scheme(name) -> SchemeSpec:
    if isinstance(name, SchemeSpec):
        return name
    key = str(name).strip().lower()
    if key not in SCHEMES:
        raise ValueError(f"unknown scheme {name!r}; expected one of {', '.join(SCHEME_NAMES)}")
    return SCHEMES[key]


def scheme_constraints(spec: SchemeSpec) -> tuple[StreamMask, float | None]:
    """Stream mask and fixed time share (``None`` when searched)."""
    if spec.w2_fully_common:
        # s_c carries only W_2
        mask = StreamMask(p_c=True, p_1=spec.use_p1, p_2=False, c_1=False, c_2=True)
    elif not spec.use_pc:
        mask = StreamMask(p_c=False, p_1=spec.use_p1, p_2=spec.use_p2, c_1=False, c_2=False)
    else:
        mask = StreamMask(p_c=True, p_1=spec.use_p1, p_2=spec.use_p2)
    return mask, spec.fixed_theta


def seed_admissible(spec: SchemeSpec, dp: DesignPoint) -> bool:
    """Whether ``dp`` lies in the feasible set of ``spec`` (ignoring QoS,
    which a seed from the same scenario already meets)."""
    mask, theta = scheme_constraints(spec)
    if theta is not None and dp.theta != theta:
        return False
    for key, free in (("c", mask.p_c), (1, mask.p_1), (2, mask.p_2)):
        if not free and dp.p.stream(key).any():
            return False
    if (not mask.c_1 and dp.c.c_1 != 0.0) or (not mask.c_2 and dp.c.c_2 != 0.0):
        return False
    return True


def solve_scheme(s: Scenario, u, spec, seeds=(), grid=DEFAULT_GRID, eps: float = DEFAULT_EPS,
                 max_iter: int = DEFAULT_MAX_ITER) -> DesignPoint:
    """Weighted-sum-rate design for one scheme.

    ``seeds`` are designs of nested schemes on the same scenario; admissible
    ones compete with the scheme's own solution, which makes the nesting of
    the schemes hold for the returned points and not just for their
    feasible sets.

    Raises
    ------
    InfeasibleError
        If neither the scheme's own search nor any seed is feasible.
    """
    spec = get_scheme(spec)
    mask, theta = scheme_constraints(spec)
    usable = [d for d in seeds if d is not None and seed_admissible(spec, d)]
    cands = []
    if theta is None:
        try:
            cands.append(theta_search(s, u, eps, grid, mask, usable, max_iter, spec.name))
        except InfeasibleError:
            log.info("%s: infeasible on the whole theta grid", spec.name)
    else:
        try:
            cands.append(ao_solve(s, u, theta, eps, None, mask, max_iter, spec.name))
        except InfeasibleError:
            log.info("%s: infeasible at theta=%s", spec.name, theta)
    # seeds from schemes with fewer free streams or shares are also refined
    # here; a seed with the same mask is already a converged point of it
    for d in usable:
        if d.scheme in SCHEMES and scheme_constraints(SCHEMES[d.scheme])[0] == mask:
            continue
        try:
            cands.append(ao_solve(s, u, d.theta, eps, d.p, mask, max_iter, spec.name))
        except InfeasibleError:
            pass
    cands += [make_design_point(s, d.p, d.c, d.theta, u, spec.name, d.state) for d in usable]
    if not cands:
        raise InfeasibleError(f"{spec.name}: no feasible design")
    return select_best(cands)
