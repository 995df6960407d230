"""Problem instances for the two-user MISO relay broadcast channel.

A :class:`Scenario` bundles everything a solver needs: the channels
S->U1 (``h1``), S->U2 (``h2``) and U1->U2 (``h3``), the transmit and relay
powers, per-user noise variances and QoS rate targets.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "Scenario",
    "ChannelGeometry",
    "build_parametric_scenario",
    "build_random_scenario",
    "load_scenario",
    "save_scenario",
    "scenario_to_text",
    "scenario_from_text",
]


def _as_cvec(v, name):
    arr = np.array(v, dtype=complex).reshape(-1)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Scenario:
    """One problem instance. Immutable; arrays are made read-only.

    ``sigma_sq`` and ``r_tar`` are per-user pairs ``(user 1, user 2)``.
    """

    n_t: int
    h1: np.ndarray
    h2: np.ndarray
    h3: complex
    p_t: float
    p_r: float
    sigma_sq: tuple[float, float] = (1.0, 1.0)
    r_tar: tuple[float, float] = (0.0, 0.0)

    def __post_init__(self):
        if int(self.n_t) != self.n_t or self.n_t < 2:
            raise ValueError(f"n_t must be an integer >= 2, got {self.n_t}")
        object.__setattr__(self, "n_t", int(self.n_t))
        object.__setattr__(self, "h1", _as_cvec(self.h1, "h1"))
        object.__setattr__(self, "h2", _as_cvec(self.h2, "h2"))
        object.__setattr__(self, "h3", complex(self.h3))
        object.__setattr__(self, "p_t", float(self.p_t))
        object.__setattr__(self, "p_r", float(self.p_r))
        object.__setattr__(self, "sigma_sq", tuple(float(s) for s in self.sigma_sq))
        object.__setattr__(self, "r_tar", tuple(float(r) for r in self.r_tar))

        for name in ("h1", "h2"):
            vec = getattr(self, name)
            if vec.shape != (self.n_t,):
                raise ValueError(f"{name} must have length n_t={self.n_t}, got {vec.shape[0]}")
            if not np.all(np.isfinite(vec)):
                raise ValueError(f"{name} has non-finite entries")
        if not (math.isfinite(self.h3.real) and math.isfinite(self.h3.imag)):
            raise ValueError("h3 is not finite")
        if len(self.sigma_sq) != 2 or len(self.r_tar) != 2:
            raise ValueError("sigma_sq and r_tar must be pairs")
        for name in ("p_t", "p_r"):
            val = getattr(self, name)
            if not math.isfinite(val) or val <= 0:
                raise ValueError(f"{name} must be finite and > 0, got {val}")
        for s in self.sigma_sq:
            if not math.isfinite(s) or s <= 0:
                raise ValueError(f"sigma_sq entries must be finite and > 0, got {self.sigma_sq}")
        for r in self.r_tar:
            if not math.isfinite(r) or r < 0:
                raise ValueError(f"r_tar entries must be finite and >= 0, got {self.r_tar}")

    def channel(self, user: int) -> np.ndarray:
        """Direct-link channel of ``user`` (1 or 2)."""
        if user == 1:
            return self.h1
        if user == 2:
            return self.h2
        raise ValueError(f"user must be 1 or 2, got {user}")

    def noise(self, user: int) -> float:
        return self.sigma_sq[user - 1]

    def with_targets(self, r_tar) -> "Scenario":
        return Scenario(self.n_t, self.h1, self.h2, self.h3, self.p_t, self.p_r,
                        self.sigma_sq, tuple(r_tar))

    def digest(self) -> str:
        """Short stable hash of the instance (used to tag output files)."""
        return hashlib.sha256(scenario_to_text(self).encode()).hexdigest()[:16]

    def __eq__(self, other):
        if not isinstance(other, Scenario):
            return NotImplemented
        return (self.n_t == other.n_t
                and np.array_equal(self.h1, other.h1)
                and np.array_equal(self.h2, other.h2)
                and self.h3 == other.h3
                and self.p_t == other.p_t and self.p_r == other.p_r
                and self.sigma_sq == other.sigma_sq and self.r_tar == other.r_tar)

    __hash__ = None


@dataclass(frozen=True)
class ChannelGeometry:
    """Relative strength of h2 (``lambda1``), of h3 (``lambda2``) and the
    inter-user channel angle ``alpha`` in radians (taken modulo 2*pi)."""

    lambda1: float
    lambda2: float
    alpha: float = field(default=0.0)

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "alpha"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ValueError(f"{name} must be finite")
            object.__setattr__(self, name, val)
        if self.lambda1 < 0 or self.lambda2 < 0:
            raise ValueError("channel strengths must be >= 0")
        object.__setattr__(self, "alpha", math.fmod(self.alpha, 2 * math.pi))


def build_parametric_scenario(n_t: int, geom: ChannelGeometry, snr_db: float,
                              r_tar=(0.0, 0.0)) -> Scenario:
    """Deterministic line-of-sight instance.

    ``h1`` is all ones, ``h2[m] = lambda1 * exp(j m alpha)`` and
    ``h3 = lambda2``. With unit noise, ``p_t = p_r = 10**(snr_db/10)``.
    """
    if int(n_t) != n_t or n_t < 2:
        raise ValueError(f"n_t must be an integer >= 2, got {n_t}")
    if not math.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    m = np.arange(int(n_t))
    h1 = np.ones(int(n_t), dtype=complex)
    h2 = geom.lambda1 * np.exp(1j * m * geom.alpha)
    power = 10.0 ** (snr_db / 10.0)
    return Scenario(int(n_t), h1, h2, complex(geom.lambda2), power, power,
                    (1.0, 1.0), tuple(r_tar))


def build_random_scenario(n_t: int, seed: int, snr_db: float,
                          r_tar=(0.0, 0.0)) -> Scenario:
    """i.i.d. CN(0, 1) channels from a seeded generator (stress tests)."""
    if int(n_t) != n_t or n_t < 2:
        raise ValueError(f"n_t must be an integer >= 2, got {n_t}")
    if not math.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    rng = np.random.default_rng(seed)
    draws = (rng.standard_normal((2 * int(n_t) + 1, 2)) @ np.array([1.0, 1j])) / math.sqrt(2)
    power = 10.0 ** (snr_db / 10.0)
    return Scenario(int(n_t), draws[:n_t], draws[n_t:2 * n_t], draws[-1],
                    power, power, (1.0, 1.0), tuple(r_tar))


# ---------------------------------------------------------------------------
# Flat key = value serialization. Complex entries are written as "re,im"
# pairs separated by whitespace; floats use repr() so round trips are exact.
# ---------------------------------------------------------------------------

SCENARIO_KEYS = ("n_t", "h1", "h2", "h3", "p_t", "p_r",
                 "sigma_sq_1", "sigma_sq_2", "r_tar_1", "r_tar_2")


def _fmt_c(z: complex) -> str:
    return f"{float(z.real)!r},{float(z.imag)!r}"


def _parse_c(tok: str) -> complex:
    parts = tok.split(",")
    if len(parts) != 2:
        raise ValueError(f"complex entry must be 're,im', got {tok!r}")
    return complex(float(parts[0]), float(parts[1]))


def scenario_to_text(s: Scenario) -> str:
    lines = [
        f"n_t = {s.n_t}",
        "h1 = " + " ".join(_fmt_c(z) for z in s.h1),
        "h2 = " + " ".join(_fmt_c(z) for z in s.h2),
        f"h3 = {_fmt_c(s.h3)}",
        f"p_t = {s.p_t!r}",
        f"p_r = {s.p_r!r}",
        f"sigma_sq_1 = {s.sigma_sq[0]!r}",
        f"sigma_sq_2 = {s.sigma_sq[1]!r}",
        f"r_tar_1 = {s.r_tar[0]!r}",
        f"r_tar_2 = {s.r_tar[1]!r}",
    ]
    return "\n".join(lines) + "\n"


def parse_flat(text: str) -> dict[str, str]:
    """Parse ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"line {lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in out:
            raise ValueError(f"line {lineno}: duplicate key {key!r}")
        out[key] = value
    return out


def scenario_from_text(text: str) -> Scenario:
    kv = parse_flat(text)
    missing = [k for k in ("n_t", "h1", "h2", "h3", "p_t", "p_r") if k not in kv]
    if missing:
        raise ValueError(f"scenario is missing keys: {missing}")
    unknown = set(kv) - set(SCENARIO_KEYS)
    if unknown:
        raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
    return Scenario(
        n_t=int(kv["n_t"]),
        h1=[_parse_c(t) for t in kv["h1"].split()],
        h2=[_parse_c(t) for t in kv["h2"].split()],
        h3=_parse_c(kv["h3"]),
        p_t=float(kv["p_t"]),
        p_r=float(kv["p_r"]),
        sigma_sq=(float(kv.get("sigma_sq_1", 1.0)), float(kv.get("sigma_sq_2", 1.0))),
        r_tar=(float(kv.get("r_tar_1", 0.0)), float(kv.get("r_tar_2", 0.0))),
    )


def save_scenario(s: Scenario, path) -> None:
    Path(path).write_text(scenario_to_text(s))


def load_scenario(path) -> Scenario:
    return scenario_from_text(Path(path).read_text())
