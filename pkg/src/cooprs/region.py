"""Rate regions traced by sweeping the user-2 weight, their Pareto frontiers,
time-sharing closures and dominance / hypervolume comparisons."""

from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .ao import DEFAULT_EPS, DEFAULT_GRID, DEFAULT_MAX_ITER
from .design import DesignPoint, InfeasibleError
from .scenario import Scenario
from .schemes import SCHEME_NAMES, get_scheme, solve_scheme

log = logging.getLogger(__name__)

__all__ = ["RegionPoint", "RateRegion", "DEFAULT_U2", "SOLVE_ORDER", "sweep_weights",
           "solve_regions", "pareto_frontier", "hull_envelope", "region_dominates",
           "hypervolume", "write_region_csv", "read_region_csv", "write_hull_csv",
           "CSV_COLUMNS", "MONOTONE_TOL", "region_point", "region_row"]

DEFAULT_U2 = tuple([1e-3] + [10.0 ** round(-1 + 0.05 * i, 10) for i in range(41)] + [1e3])
CSV_COLUMNS = ("scheme", "u2", "theta", "R1_tot", "R2_tot", "wsr", "status")
MONOTONE_TOL = 1e-4

# nested schemes first, so every scheme can be seeded with the designs of the
# schemes it contains
SOLVE_ORDER = ("mu-lp", "n-noma", "odf", "c-noma", "ers", "nrs", "crs")


@dataclass(frozen=True)
class RegionPoint:
    u2: float
    r1: float
    r2: float
    theta: float
    wsr: float
    status: str = "ok"

    @property
    def feasible(self) -> bool:
        return self.status == "ok"


@dataclass
class RateRegion:
    scheme: str
    points: list
    frontier: list = field(default_factory=list)
    designs: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if not self.frontier:
            self.frontier = pareto_frontier(self.points)

    def feasible_points(self):
        return [p for p in self.points if p.feasible]

    def rates(self) -> np.ndarray:
        pts = self.feasible_points()
        return np.array([[p.r1, p.r2] for p in pts]).reshape(-1, 2)


def region_point(u2, dp: DesignPoint | None) -> RegionPoint:
    if dp is None:
        nan = math.nan
        return RegionPoint(float(u2), nan, nan, nan, nan, "infeasible")
    return RegionPoint(float(u2), dp.r_tot[0], dp.r_tot[1], dp.theta, dp.wsr)


def pareto_frontier(points) -> list:
    """Feasible points not weakly dominated by a different point; exact
    duplicates keep their first occurrence."""
    pts = [p for p in points if p.feasible]
    out = []
    for i, p in enumerate(pts):
        dominated = False
        for j, q in enumerate(pts):
            if i == j:
                continue
            ge = q.r1 >= p.r1 and q.r2 >= p.r2
            if ge and (q.r1 > p.r1 or q.r2 > p.r2 or j < i):
                dominated = True
                break
        if not dominated:
            out.append(p)
    return sorted(out, key=lambda p: (p.r1, -p.r2))


def _check_monotone(scheme: str, points) -> None:
    pts = sorted((p for p in points if p.feasible), key=lambda p: p.u2)
    for a, b in zip(pts, pts[1:]):
        if b.r2 < a.r2 - MONOTONE_TOL:
            log.warning("%s: R2 drops from %.6g to %.6g as u2 goes %.4g -> %.4g "
                        "(local optimum of the alternating optimization)",
                        scheme, a.r2, b.r2, a.u2, b.u2)


def _solve_one_weight(args):
    s, names, u2, grid, eps, max_iter = args
    designs = {}
    for name in SOLVE_ORDER:
        if name not in names:
            continue
        seeds = [d for d in designs.values() if d is not None]
        try:
            designs[name] = solve_scheme(s, (1.0, u2), name, seeds, grid, eps, max_iter)
        except InfeasibleError as exc:
            log.warning("u2=%g: %s", u2, exc)
            designs[name] = None
    return designs


def solve_regions(s: Scenario, schemes=SCHEME_NAMES, u2_list=DEFAULT_U2, grid=DEFAULT_GRID,
                  eps: float = DEFAULT_EPS, max_iter: int = DEFAULT_MAX_ITER,
                  jobs: int = 1, on_weight=None) -> dict:
    """Regions of several schemes, cross-seeded per weight.

    For every ``u = (1, u2)`` the schemes are solved in :data:`SOLVE_ORDER`
    and each one receives the designs already found as seeds. Weights are
    independent and may be spread over ``jobs`` worker processes; results do
    not depend on ``jobs``. ``on_weight(u2, designs)`` is called in sweep
    order as soon as a weight is done (``designs`` maps scheme to
    DesignPoint or None).
    """
    names = [get_scheme(n).name for n in schemes]
    if not names:
        raise ValueError("no schemes requested")
    u2_list = [float(v) for v in u2_list]
    if not u2_list or min(u2_list) <= 0:
        raise ValueError("u2 list must be nonempty and positive")
    tasks = [(s, tuple(names), u2, tuple(grid), eps, max_iter) for u2 in u2_list]
    per_weight = []
    pool = ProcessPoolExecutor(max_workers=jobs) if jobs > 1 and len(tasks) > 1 else None
    try:
        results = pool.map(_solve_one_weight, tasks) if pool else map(_solve_one_weight, tasks)
        for u2, designs in zip(u2_list, results):
            per_weight.append(designs)
            if on_weight is not None:
                on_weight(u2, designs)
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    regions = {}
    for name in names:
        designs = [d[name] for d in per_weight]
        points = [region_point(u2, dp) for u2, dp in zip(u2_list, designs)]
        if any(not p.feasible for p in points):
            log.warning("%s: %d infeasible sweep points dropped from the frontier", name,
                        sum(not p.feasible for p in points))
        _check_monotone(name, points)
        regions[name] = RateRegion(name, points, designs=designs)
    return regions


def sweep_weights(s: Scenario, spec, u2_list=DEFAULT_U2, grid=DEFAULT_GRID,
                  eps: float = DEFAULT_EPS, max_iter: int = DEFAULT_MAX_ITER,
                  jobs: int = 1) -> RateRegion:
    """Region of one scheme over ``u = (1, u2)``, ``u2`` in ``u2_list``."""
    name = get_scheme(spec).name
    return solve_regions(s, (name,), u2_list, grid, eps, max_iter, jobs)[name]


def _as_rates(region) -> np.ndarray:
    if isinstance(region, RateRegion):
        return region.rates()
    return np.asarray(region, dtype=float).reshape(-1, 2)


def hull_envelope(region) -> np.ndarray:
    """Vertices ``(r1, r2)`` of the upper boundary of the time-sharing
    closure, from ``(0, max r2)`` to ``(max r1, 0)``.

    The closure is the convex hull of the points, their projections on both
    axes and the origin; its upper boundary is concave and non-increasing.
    """
    pts = _as_rates(region)
    pts = np.maximum(pts, 0.0)
    if pts.size == 0:
        return np.zeros((1, 2))
    r1_max, r2_max = pts[:, 0].max(), pts[:, 1].max()
    cand = np.vstack([pts, [[0.0, r2_max], [r1_max, 0.0]]])
    cand = cand[np.lexsort((-cand[:, 1], cand[:, 0]))]
    hull = []
    for p in cand:
        # equal r1: the first (largest r2) one is the only candidate
        if hull and p[0] == hull[-1][0]:
            continue
        while len(hull) >= 2:
            (x1, y1), (x2, y2) = hull[-2], hull[-1]
            cross = (x2 - x1) * (p[1] - y1) - (y2 - y1) * (p[0] - x1)
            if cross >= 0:
                hull.pop()
            else:
                break
        hull.append((float(p[0]), float(p[1])))
    return np.array(hull)


def _envelope_at(env: np.ndarray, x: float) -> float:
    if x <= 0:
        return env[0, 1]
    if x > env[-1, 0]:
        return -math.inf
    return float(np.interp(x, env[:, 0], env[:, 1]))


def region_dominates(a, b, tol: float = 0.0) -> bool:
    """True iff every frontier point of ``b`` is componentwise within ``tol``
    of some point of the time-sharing closure of ``a``."""
    env = hull_envelope(a)
    if isinstance(b, RateRegion):
        pts = [(p.r1, p.r2) for p in b.frontier]
    else:
        pts = [tuple(p) for p in _as_rates(b)]
    for r1, r2 in pts:
        x, y = r1 - tol, r2 - tol
        if x > env[-1, 0] + 1e-12 * (1 + env[-1, 0]):
            return False
        if y > _envelope_at(env, min(x, env[-1, 0])) + 1e-12 * (1 + abs(y)):
            return False
    return True


def hypervolume(region) -> float:
    """Area of the time-sharing closure, i.e. under :func:`hull_envelope`."""
    env = hull_envelope(region)
    if len(env) == 1:
        return 0.0
    return float(np.sum(np.diff(env[:, 0]) * (env[1:, 1] + env[:-1, 1]) / 2.0))


def _fmt(v: float) -> str:
    return "nan" if math.isnan(v) else repr(float(v))


def region_row(scheme: str, p: RegionPoint) -> list:
    return [scheme, _fmt(p.u2), _fmt(p.theta), _fmt(p.r1), _fmt(p.r2), _fmt(p.wsr), p.status]


def write_region_csv(region: RateRegion, path, scenario_hash: str = "") -> None:
    """One row per sweep point, preceded by a ``# scenario=<hash>`` line."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# scenario={scenario_hash}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for p in region.points:
            w.writerow(region_row(region.scheme, p))


def write_hull_csv(region: RateRegion, path, scenario_hash: str = "") -> None:
    """Vertices of the time-sharing closure (the convexified region)."""
    with open(path, "w", newline="") as fh:
        fh.write(f"# scenario={scenario_hash}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("scheme", "R1_tot", "R2_tot"))
        for r1, r2 in hull_envelope(region):
            w.writerow([region.scheme, _fmt(r1), _fmt(r2)])


def read_region_csv(path) -> tuple[RateRegion, str]:
    """Inverse of :func:`write_region_csv`; returns ``(region, scenario_hash)``."""
    text = Path(path).read_text().splitlines()
    digest = ""
    rows = []
    for line in text:
        if line.startswith("#"):
            key, _, val = line[1:].strip().partition("=")
            if key.strip() == "scenario":
                digest = val.strip()
            continue
        rows.append(line)
    reader = csv.DictReader(rows)
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise ValueError(f"{path}: expected columns {','.join(CSV_COLUMNS)}")
    points = []
    schemes = set()
    for row in reader:
        schemes.add(row["scheme"])
        points.append(RegionPoint(float(row["u2"]), float(row["R1_tot"]), float(row["R2_tot"]),
                                  float(row["theta"]), float(row["wsr"]), row["status"]))
    if len(schemes) != 1:
        raise ValueError(f"{path}: expected exactly one scheme, found {sorted(schemes)}")
    return RateRegion(schemes.pop(), points), digest
