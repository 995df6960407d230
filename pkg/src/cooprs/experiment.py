"""Experiment configuration and the batch runners behind the command line.

Config files are flat ``key = value`` text (``#`` comments). Keys:

=================  =========================================================
scenario           ``parametric`` (default), ``random`` or a scenario file
n_t                number of transmit antennas (default 4)
lambda1, lambda2   strengths of h2 and h3 relative to h1 (parametric)
alpha              angle between h1 and h2, e.g. ``0.349``, ``pi/9``, ``4*pi/9``
snr_db             SNR in dB; P_t = P_R = 10^(snr/10) with unit noise
r_tar              QoS targets ``R1 R2`` in bit/s/Hz (default ``0 0``)
schemes            comma-separated scheme names or ``all``
u2                 ``default`` (43 weights) or a list of positive numbers
theta_grid         ``default`` (0.05, ..., 1.0) or a list containing 1.0
eps, max_iter      convergence threshold and iteration cap of the optimizer
dominance_tol      tolerance of the dominance summary (default 1e-3)
seed               RNG seed (random scenarios)
=================  =========================================================
"""

from __future__ import annotations

import csv
import hashlib
import logging
import math
import re
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .ao import DEFAULT_EPS, DEFAULT_GRID, DEFAULT_MAX_ITER, ao_solve
from .design import InfeasibleError
from .oracle import GridOracleSpec, grid_search_wsr
from .region import (CSV_COLUMNS, DEFAULT_U2, hypervolume, read_region_csv, region_dominates,
                     region_point, region_row, solve_regions, write_hull_csv)
from .scenario import (ChannelGeometry, Scenario, build_parametric_scenario,
                       build_random_scenario, load_scenario, parse_flat)
from .schemes import SCHEME_NAMES, get_scheme

log = logging.getLogger(__name__)

__all__ = ["ExperimentConfig", "parse_config", "load_config", "config_hash", "config_to_text",
           "build_scenario", "run_experiment", "compare_report", "oracle_check", "parse_angle",
           "EXIT_OK", "EXIT_ERROR", "EXIT_PARTIAL"]

EXIT_OK, EXIT_ERROR, EXIT_PARTIAL = 0, 1, 2

_ANGLE = re.compile(r"^\s*([0-9.eE+-]*)\s*\*?\s*pi\s*(?:/\s*([0-9.eE+-]+))?\s*$")


def parse_angle(text: str) -> float:
    """Float or a multiple of pi such as ``pi/9`` or ``4*pi/9``."""
    m = _ANGLE.match(text)
    if m is None:
        return float(text)
    num = float(m.group(1)) if m.group(1) else 1.0
    den = float(m.group(2)) if m.group(2) else 1.0
    return num * math.pi / den


def _floats(text: str) -> tuple:
    return tuple(float(t) for t in re.split(r"[,\s]+", text.strip()) if t)


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str = "parametric"
    n_t: int = 4
    lambda1: float = 0.3
    lambda2: float = 1.0
    alpha: float = math.pi / 9
    snr_db: float = 10.0
    r_tar: tuple = (0.0, 0.0)
    schemes: tuple = SCHEME_NAMES
    u2: tuple = DEFAULT_U2
    theta_grid: tuple = DEFAULT_GRID
    eps: float = DEFAULT_EPS
    max_iter: int = DEFAULT_MAX_ITER
    dominance_tol: float = 1e-3
    seed: int = 0

    def __post_init__(self):
        for name in self.schemes:
            get_scheme(name)
        if not self.u2 or min(self.u2) <= 0:
            raise ValueError("u2 must be a nonempty list of positive weights")
        if 1.0 not in self.theta_grid or not all(0 < t <= 1 for t in self.theta_grid):
            raise ValueError("theta_grid must lie in (0, 1] and contain 1.0")
        if self.eps <= 0 or self.max_iter < 1:
            raise ValueError("eps must be > 0 and max_iter >= 1")


def parse_config(text: str, base_dir: Path | None = None) -> ExperimentConfig:
    kv = parse_flat(text)
    known = {f.name for f in fields(ExperimentConfig)}
    unknown = set(kv) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    out = {}
    for key, val in kv.items():
        if key == "scenario":
            if val not in ("parametric", "random") and base_dir is not None:
                val = str((base_dir / val).resolve())
            out[key] = val
        elif key in ("n_t", "max_iter", "seed"):
            out[key] = int(val)
        elif key == "alpha":
            out[key] = parse_angle(val)
        elif key == "r_tar":
            out[key] = _floats(val)
            if len(out[key]) != 2:
                raise ValueError("r_tar needs two values")
        elif key == "schemes":
            names = [t.strip().lower() for t in val.split(",") if t.strip()]
            out[key] = SCHEME_NAMES if names == ["all"] else tuple(get_scheme(n).name for n in names)
        elif key == "u2":
            out[key] = DEFAULT_U2 if val == "default" else _floats(val)
        elif key == "theta_grid":
            out[key] = DEFAULT_GRID if val == "default" else _floats(val)
        else:
            out[key] = float(val)
    return ExperimentConfig(**out)


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    return parse_config(path.read_text(), path.parent)


def build_scenario(cfg: ExperimentConfig) -> Scenario:
    if cfg.scenario == "parametric":
        geom = ChannelGeometry(cfg.lambda1, cfg.lambda2, cfg.alpha)
        return build_parametric_scenario(cfg.n_t, geom, cfg.snr_db, cfg.r_tar)
    if cfg.scenario == "random":
        return build_random_scenario(cfg.n_t, cfg.seed, cfg.snr_db, cfg.r_tar)
    return load_scenario(cfg.scenario)


_SCENARIO_FIELDS = ("scenario", "n_t", "lambda1", "lambda2", "alpha", "snr_db", "r_tar", "seed")


def config_to_text(cfg: ExperimentConfig) -> str:
    """Canonical form. Scenario-defining keys enter only through the digest
    of the scenario they produce, so the text (and :func:`config_hash`)
    changes exactly when something that affects the results changes."""
    lines = [f"scenario_digest = {build_scenario(cfg).digest()}"]
    for f in fields(cfg):
        if f.name in _SCENARIO_FIELDS:
            continue
        val = getattr(cfg, f.name)
        if isinstance(val, tuple):
            val = " ".join(repr(v) for v in val)
        lines.append(f"{f.name} = {val!r}" if isinstance(val, float) else f"{f.name} = {val}")
    return "\n".join(lines) + "\n"


def config_hash(cfg: ExperimentConfig) -> str:
    return hashlib.sha256(config_to_text(cfg).encode()).hexdigest()[:16]


def _write_kv(path: Path, items) -> None:
    path.write_text("".join(f"{k} = {v}\n" for k, v in items))


def run_experiment(cfg: ExperimentConfig, out_dir, jobs: int = 1) -> int:
    """Solve every requested scheme over the weight sweep and write
    ``region_<scheme>.csv``, ``hull_<scheme>.csv``, ``dominance.csv``,
    ``hypervolume.csv`` and ``manifest.txt`` to ``out_dir``.

    Region rows are flushed as each weight finishes. Returns
    :data:`EXIT_PARTIAL` if any sweep point was infeasible.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    start = time.time()
    s = build_scenario(cfg)
    digest = s.digest()
    files, writers = {}, {}
    for name in cfg.schemes:
        fh = open(out / f"region_{name}.csv", "w", newline="")
        fh.write(f"# scenario={digest}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        files[name], writers[name] = fh, w

    def on_weight(u2, designs):
        for name in cfg.schemes:
            writers[name].writerow(region_row(name, region_point(u2, designs[name])))
            files[name].flush()
        log.info("u2=%g done", u2)

    try:
        regions = solve_regions(s, cfg.schemes, cfg.u2, cfg.theta_grid, cfg.eps, cfg.max_iter,
                                jobs, on_weight)
    finally:
        for fh in files.values():
            fh.close()

    names = list(cfg.schemes)
    for name in names:
        write_hull_csv(regions[name], out / f"hull_{name}.csv", digest)
    with open(out / "dominance.csv", "w", newline="") as fh:
        fh.write(f"# scenario={digest} tol={cfg.dominance_tol!r}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["region"] + names)
        for a in names:
            w.writerow([a] + [int(region_dominates(regions[a], regions[b], cfg.dominance_tol))
                              for b in names])
    with open(out / "hypervolume.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["scheme", "hypervolume", "infeasible_points"])
        for name in names:
            n_bad = sum(not p.feasible for p in regions[name].points)
            w.writerow([name, repr(hypervolume(regions[name])), n_bad])

    partial = any(not p.feasible for r in regions.values() for p in r.points)
    _write_kv(out / "manifest.txt", [
        ("tool", "cooprs"),
        ("version", __version__),
        ("config_hash", config_hash(cfg)),
        ("scenario_hash", digest),
        ("schemes", ",".join(names)),
        ("weights", len(cfg.u2)),
        ("jobs", jobs),
        ("status", "partial" if partial else "ok"),
        ("started", time.strftime("%Y-%m-%dT%H:%M:%S", time.localtime(start))),
        ("wall_clock_s", f"{time.time() - start:.3f}"),
    ])
    return EXIT_PARTIAL if partial else EXIT_OK


def compare_report(paths, tol: float = 1e-3) -> str:
    """Pairwise dominance, hypervolume ratios and per-weight WSR gaps of
    region CSV files written for the same scenario.

    Raises
    ------
    ValueError
        If fewer than two files are given or their scenario hashes differ.
    """
    if len(paths) < 2:
        raise ValueError("compare needs at least two region files")
    loaded = [read_region_csv(p) for p in paths]
    digests = {d for _, d in loaded}
    if len(digests) != 1:
        raise ValueError(f"region files come from different scenarios: {sorted(digests)}")
    regions = [r for r, _ in loaded]
    labels = [f"{r.scheme}" if [q.scheme for q in regions].count(r.scheme) == 1
              else f"{r.scheme}[{i}]" for i, r in enumerate(regions)]
    hv = [hypervolume(r) for r in regions]
    lines = ["# pairwise", "a,b,a_dominates_b,b_dominates_a,hypervolume_a,hypervolume_b,ratio"]
    gaps = ["# wsr gaps (a - b) per u2", "a,b,u2,wsr_a,wsr_b,gap"]
    for i in range(len(regions)):
        for j in range(i + 1, len(regions)):
            a, b = regions[i], regions[j]
            ratio = hv[i] / hv[j] if hv[j] > 0 else math.inf
            lines.append(f"{labels[i]},{labels[j]},{int(region_dominates(a, b, tol))},"
                         f"{int(region_dominates(b, a, tol))},{hv[i]!r},{hv[j]!r},{ratio!r}")
            wb = {p.u2: p for p in b.points if p.feasible}
            for p in a.points:
                if p.feasible and p.u2 in wb:
                    q = wb[p.u2]
                    gaps.append(f"{labels[i]},{labels[j]},{p.u2!r},{p.wsr!r},{q.wsr!r},"
                                f"{p.wsr - q.wsr!r}")
    return "\n".join(lines + [""] + gaps) + "\n"


def oracle_check(cfg: ExperimentConfig, count: int = 10, thetas=(1.0, 0.5), u=(1.0, 1.0),
                 delta: float = 0.05, phase_steps: int = 16, magnitude_steps: int = 8,
                 power_levels: int = 4):
    """Compare the optimizer with the grid oracle on ``count`` random
    two-antenna scenarios (seeds ``cfg.seed``, ``cfg.seed + 1``, ...).

    Returns ``(rows, all_passed)`` with rows
    ``(seed, theta, wsr_ao, wsr_oracle, gap, passed)``.
    """
    rows = []
    for k in range(count):
        seed = cfg.seed + k
        s = build_random_scenario(2, seed, cfg.snr_db, cfg.r_tar)
        for theta in thetas:
            try:
                ao = ao_solve(s, u, theta, cfg.eps, max_iter=cfg.max_iter).wsr
            except InfeasibleError:
                ao = -math.inf
            spec = GridOracleSpec(s, theta, tuple(u), phase_steps, magnitude_steps, power_levels)
            try:
                orc = grid_search_wsr(spec)[0]
            except InfeasibleError:
                orc = -math.inf
            gap = orc - ao if np.isfinite(orc) else -math.inf
            rows.append((seed, theta, ao, orc, gap, bool(gap <= delta)))
    return rows, all(r[-1] for r in rows)


def with_seed(cfg: ExperimentConfig, seed: int | None) -> ExperimentConfig:
    return cfg if seed is None else replace(cfg, seed=seed)
