"""Closed-form SINR, rate and MSE expressions.

All rates are in bits/s/Hz. Rates returned by :func:`common_rate` and
:func:`private_rate` are normalized to the full two-slot frame, i.e. they
already carry the ``theta`` / ``1 - theta`` time shares.

Augmented weighted MSEs are written in bit units::

    xi(eps, w) = 1 + (w * eps - ln(w) - 1) / ln(2)

which is minimized over ``w`` at ``w = 1 / eps`` and then equals
``1 + log2(eps)``. With the MMSE error that is ``1 - rate`` exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .scenario import Scenario

LN2 = math.log(2.0)

__all__ = [
    "PrecoderSet", "Equalizers", "MseWeights", "RateReport", "CommonRateSplit",
    "common_sinr", "private_sinr", "relay_link_rate", "common_rate",
    "private_rate", "rate_report", "mse_pair", "mmse_equalizers",
    "mmse_errors", "mmse_weights", "augmented_wmse", "rate_wmmse_gap",
    "equalizers_for", "weights_for", "check_theta",
]


@dataclass(frozen=True, eq=False)
class PrecoderSet:
    """Columns of the precoding matrix ``P = [p_c, p_1, p_2]``.

    The transmit signal is ``x = p_c s_c + p_1 s_1 + p_2 s_2`` with unit-power,
    mutually uncorrelated streams, so only the precoders themselves are
    needed to evaluate any rate or MSE.
    """

    p_c: np.ndarray
    p_1: np.ndarray
    p_2: np.ndarray

    def __post_init__(self):
        arrs = []
        for name in ("p_c", "p_1", "p_2"):
            arr = np.array(getattr(self, name), dtype=complex).reshape(-1)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{name} has non-finite entries")
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
            arrs.append(arr)
        if len({a.shape for a in arrs}) != 1:
            raise ValueError("precoders must have equal length")

    @classmethod
    def zeros(cls, n_t: int) -> "PrecoderSet":
        z = np.zeros(n_t, dtype=complex)
        return cls(z, z, z)

    @property
    def n_t(self) -> int:
        return self.p_c.shape[0]

    def stream(self, name) -> np.ndarray:
        """Precoder by stream key: ``"c"``, ``1`` or ``2``."""
        return {"c": self.p_c, 1: self.p_1, 2: self.p_2}[name]

    def power(self) -> float:
        """tr(P P^H)."""
        return float(sum(np.vdot(p, p).real for p in (self.p_c, self.p_1, self.p_2)))

    def scaled(self, factor: complex) -> "PrecoderSet":
        return PrecoderSet(self.p_c * factor, self.p_1 * factor, self.p_2 * factor)

    def as_matrix(self) -> np.ndarray:
        return np.column_stack([self.p_c, self.p_1, self.p_2])


@dataclass(frozen=True)
class Equalizers:
    g_c1: complex
    g_c2: complex
    g_1: complex
    g_2: complex

    def common(self, user: int) -> complex:
        return self.g_c1 if user == 1 else self.g_c2

    def private(self, user: int) -> complex:
        return self.g_1 if user == 1 else self.g_2


@dataclass(frozen=True)
class MseWeights:
    w_c1: float
    w_c2: float
    w_1: float
    w_2: float

    def __post_init__(self):
        for name in ("w_c1", "w_c2", "w_1", "w_2"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")

    def common(self, user: int) -> float:
        return self.w_c1 if user == 1 else self.w_c2

    def private(self, user: int) -> float:
        return self.w_1 if user == 1 else self.w_2


@dataclass(frozen=True)
class RateReport:
    """SINRs and frame-normalized rates of one design."""

    gamma_c1: float
    gamma_c2: float
    gamma_relay: float
    gamma_1: float
    gamma_2: float
    r_c: float
    r_p1: float
    r_p2: float
    r_relay_link: float

    def private(self, user: int) -> float:
        return self.r_p1 if user == 1 else self.r_p2


@dataclass(frozen=True)
class CommonRateSplit:
    """Per-user shares ``c_1``, ``c_2`` of the common-stream rate."""

    c_1: float
    c_2: float

    def __post_init__(self):
        if self.c_1 < 0 or self.c_2 < 0:
            raise ValueError(f"common-rate shares must be >= 0, got ({self.c_1}, {self.c_2})")

    @property
    def total(self) -> float:
        return self.c_1 + self.c_2

    def share(self, user: int) -> float:
        return self.c_1 if user == 1 else self.c_2


def check_theta(theta: float) -> float:
    theta = float(theta)
    if not (0.0 < theta <= 1.0):
        raise ValueError(f"theta must lie in (0, 1], got {theta}")
    return theta


def _gain(h: np.ndarray, p: np.ndarray) -> float:
    """|h^H p|^2."""
    return abs(np.vdot(h, p)) ** 2


def _other(user: int) -> int:
    if user not in (1, 2):
        raise ValueError(f"user must be 1 or 2, got {user}")
    return 2 if user == 1 else 1


def _interference(s: Scenario, p: PrecoderSet, user: int) -> float:
    """T_k = sum_i |h_k^H p_i|^2 + sigma_k^2 over the private streams."""
    h = s.channel(user)
    return _gain(h, p.p_1) + _gain(h, p.p_2) + s.noise(user)


def common_sinr(s: Scenario, p: PrecoderSet, user: int) -> float:
    """SINR of the common stream at ``user`` in the direct slot; both private
    streams count as interference."""
    h = s.channel(user)
    return _gain(h, p.p_c) / _interference(s, p, user)


def private_sinr(s: Scenario, p: PrecoderSet, user: int) -> float:
    """SINR of the private stream of ``user`` after the common stream has
    been removed by SIC."""
    h = s.channel(user)
    own = p.p_1 if user == 1 else p.p_2
    other = p.p_2 if user == 1 else p.p_1
    return _gain(h, own) / (_gain(h, other) + s.noise(user))


def relay_link_rate(s: Scenario) -> float:
    """Spectral efficiency of the U1 -> U2 hop, log2(1 + |h3|^2 P_R)."""
    return math.log2(1.0 + abs(s.h3) ** 2 * s.p_r)


def common_rate(s: Scenario, p: PrecoderSet, theta: float) -> float:
    """Decodable common-stream rate: user 1 gets the direct slot only, user 2
    combines the direct slot with the relayed copy."""
    theta = check_theta(theta)
    direct_1 = theta * math.log2(1.0 + common_sinr(s, p, 1))
    direct_2 = theta * math.log2(1.0 + common_sinr(s, p, 2))
    return min(direct_1, direct_2 + (1.0 - theta) * relay_link_rate(s))


def private_rate(s: Scenario, p: PrecoderSet, theta: float, user: int) -> float:
    theta = check_theta(theta)
    return theta * math.log2(1.0 + private_sinr(s, p, user))


def rate_report(s: Scenario, p: PrecoderSet, theta: float) -> RateReport:
    theta = check_theta(theta)
    g_c1 = common_sinr(s, p, 1)
    g_c2 = common_sinr(s, p, 2)
    g_1 = private_sinr(s, p, 1)
    g_2 = private_sinr(s, p, 2)
    g_relay = abs(s.h3) ** 2 * s.p_r
    r_relay = math.log2(1.0 + g_relay)
    r_c = min(theta * math.log2(1.0 + g_c1),
              theta * math.log2(1.0 + g_c2) + (1.0 - theta) * r_relay)
    return RateReport(
        gamma_c1=g_c1, gamma_c2=g_c2, gamma_relay=g_relay, gamma_1=g_1, gamma_2=g_2,
        r_c=r_c, r_p1=theta * math.log2(1.0 + g_1), r_p2=theta * math.log2(1.0 + g_2),
        r_relay_link=r_relay,
    )


def mse_pair(s: Scenario, p: PrecoderSet, eq: Equalizers, user: int) -> tuple[float, float]:
    """Common- and private-stream MSEs at ``user`` for arbitrary equalizers."""
    h = s.channel(user)
    own = p.p_1 if user == 1 else p.p_2
    t_k = _interference(s, p, user)
    a_c = np.vdot(h, p.p_c)
    t_ck = abs(a_c) ** 2 + t_k
    g_c = eq.common(user)
    g_k = eq.private(user)
    eps_c = abs(g_c) ** 2 * t_ck - 2.0 * (g_c * a_c).real + 1.0
    eps_k = abs(g_k) ** 2 * t_k - 2.0 * (g_k * np.vdot(h, own)).real + 1.0
    return float(eps_c), float(eps_k)


def mmse_equalizers(s: Scenario, p: PrecoderSet, user: int) -> tuple[complex, complex]:
    """``(g_c, g_k)`` minimizing :func:`mse_pair` for ``user``."""
    h = s.channel(user)
    own = p.p_1 if user == 1 else p.p_2
    t_k = _interference(s, p, user)
    # p^H h = conj(h^H p)
    a_c = np.vdot(p.p_c, h)
    t_ck = abs(a_c) ** 2 + t_k
    return complex(a_c / t_ck), complex(np.vdot(own, h) / t_k)


def mmse_errors(s: Scenario, p: PrecoderSet, user: int) -> tuple[float, float]:
    """Minimum MSEs ``(T_k / T_ck, I_k / T_k)``."""
    h = s.channel(user)
    own = p.p_1 if user == 1 else p.p_2
    t_k = _interference(s, p, user)
    t_ck = _gain(h, p.p_c) + t_k
    i_k = t_k - _gain(h, own)
    return t_k / t_ck, i_k / t_k


def mmse_weights(s: Scenario, p: PrecoderSet, user: int) -> tuple[float, float]:
    eps_c, eps_k = mmse_errors(s, p, user)
    return 1.0 / eps_c, 1.0 / eps_k


def augmented_wmse(eps: float, w: float) -> float:
    """Weighted MSE minus log-weight, in bit units (see module docstring)."""
    return 1.0 + (w * eps - math.log(w) - 1.0) / LN2


def equalizers_for(s: Scenario, p: PrecoderSet) -> Equalizers:
    g_c1, g_1 = mmse_equalizers(s, p, 1)
    g_c2, g_2 = mmse_equalizers(s, p, 2)
    return Equalizers(g_c1, g_c2, g_1, g_2)


def weights_for(s: Scenario, p: PrecoderSet) -> MseWeights:
    w_c1, w_1 = mmse_weights(s, p, 1)
    w_c2, w_2 = mmse_weights(s, p, 2)
    return MseWeights(w_c1, w_c2, w_1, w_2)


def rate_wmmse_gap(s: Scenario, p: PrecoderSet, user: int) -> tuple[float, float]:
    """Deviation of the augmented WMSEs at MMSE equalizers and weights from
    one minus the per-slot rates; zero up to rounding."""
    g_c, g_k = mmse_equalizers(s, p, user)
    eq = Equalizers(g_c, g_c, g_k, g_k)
    eps_c, eps_k = mse_pair(s, p, eq, user)
    w_c, w_k = mmse_weights(s, p, user)
    xi_c = augmented_wmse(eps_c, w_c)
    xi_k = augmented_wmse(eps_k, w_k)
    r_c = math.log2(1.0 + common_sinr(s, p, user))
    r_k = math.log2(1.0 + private_sinr(s, p, user))
    return xi_c - (1.0 - r_c), xi_k - (1.0 - r_k)
