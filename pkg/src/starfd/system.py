"""Closed-form link quantities: gains, rates, power consumption and EE.

Coefficient convention: a profile stores amplitudes ``beta`` and phases
``phi`` of the diagonal surface response ``theta = sqrt(beta) * exp(1j*phi)``.
The coefficient vector used with the composite channels is its conjugate,
``q = conj(theta)``, so ``|q_r^H h1|^2 = |h_ib^H Diag(theta_r) h_ui|^2``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .channels import CompositeChannels

__all__ = [
    "StarRisProfile",
    "PowerAllocation",
    "PowerModelParams",
    "NoiseParams",
    "RateConstraints",
    "EffectiveGains",
    "FeasibilityReport",
    "SystemSetup",
    "effective_gains",
    "rate_uplink",
    "rate_downlink",
    "total_power",
    "energy_efficiency",
    "decomposed_sum_rate",
    "check_solution",
    "FEAS_TOL",
]

FEAS_TOL = 1e-6


@dataclass(frozen=True)
class StarRisProfile:
    beta_t: np.ndarray
    beta_r: np.ndarray
    phi_t: np.ndarray
    phi_r: np.ndarray

    @classmethod
    def from_split(cls, beta_t, phi_t, phi_r):
        """Build a profile whose reflection split is ``1 - beta_t`` exactly."""
        beta_t = np.clip(np.asarray(beta_t, dtype=float), 0.0, 1.0)
        return cls(
            beta_t,
            1.0 - beta_t,
            np.mod(np.asarray(phi_t, dtype=float), 2 * math.pi),
            np.mod(np.asarray(phi_r, dtype=float), 2 * math.pi),
        )

    @property
    def num_elements(self) -> int:
        return self.beta_t.shape[0]

    @property
    def q_t(self) -> np.ndarray:
        return np.sqrt(self.beta_t) * np.exp(-1j * self.phi_t)

    @property
    def q_r(self) -> np.ndarray:
        return np.sqrt(self.beta_r) * np.exp(-1j * self.phi_r)


@dataclass(frozen=True)
class PowerAllocation:
    p_u: float
    p_d: float


@dataclass(frozen=True)
class PowerModelParams:
    p_c: float = 1.0
    p_s: float = 10 ** 0.6 * 1e-3
    p_c0: float = 0.05
    xi: float = 0.1
    rho: float = 0.8

    def __post_init__(self):
        if min(self.p_c, self.p_s, self.p_c0, self.xi) < 0:
            raise ValueError("power model parameters must be non-negative")
        if not 0 < self.rho <= 1:
            raise ValueError("amplifier efficiency must lie in (0, 1]")


@dataclass(frozen=True)
class NoiseParams:
    sigma_u_sq: float = 1e-12
    sigma_d_sq: float = 1e-12

    def __post_init__(self):
        if self.sigma_u_sq <= 0 or self.sigma_d_sq <= 0:
            raise ValueError("noise powers must be positive")


@dataclass(frozen=True)
class RateConstraints:
    r_u_th: float = 1.0
    r_d_th: float = 3.0
    p_u_max: float = 0.1
    p_d_max: float = 1.0

    def __post_init__(self):
        if self.r_u_th < 0 or self.r_d_th < 0:
            raise ValueError("rate thresholds must be non-negative")
        if self.p_u_max <= 0 or self.p_d_max <= 0:
            raise ValueError("power caps must be positive")


@dataclass(frozen=True)
class EffectiveGains:
    gamma1: float
    gamma2: float
    gamma3: float
    gamma_bb: float


@dataclass
class FeasibilityReport:
    r_u: float
    r_d: float
    ee: float
    violations: list = field(default_factory=list)
    slacks: dict = field(default_factory=dict)

    @property
    def feasible(self) -> bool:
        return not self.violations


def effective_gains(profile: StarRisProfile, cc: CompositeChannels) -> EffectiveGains:
    if profile.num_elements != cc.num_elements:
        raise ValueError("profile and channel lengths differ")
    return EffectiveGains(
        gamma1=float(abs(np.vdot(profile.q_r, cc.h1)) ** 2),
        gamma2=float(abs(np.vdot(profile.q_t, cc.h2)) ** 2),
        gamma3=float(abs(np.vdot(profile.q_t, cc.h3)) ** 2),
        gamma_bb=float(abs(cc.h_bb) ** 2),
    )


def rate_uplink(p: PowerAllocation, g: EffectiveGains, n: NoiseParams) -> float:
    return math.log2(1.0 + p.p_u * g.gamma1 / (p.p_d * g.gamma_bb + n.sigma_u_sq))


def rate_downlink(p: PowerAllocation, g: EffectiveGains, n: NoiseParams) -> float:
    return math.log2(1.0 + p.p_d * g.gamma2 / (p.p_u * g.gamma3 + n.sigma_d_sq))


def total_power(p: PowerAllocation, m: int, pm: PowerModelParams) -> float:
    return pm.p_c + (p.p_u + p.p_d) / pm.rho + m * pm.p_s + pm.xi * p.p_d + pm.p_c0


def energy_efficiency(p, profile, cc, n, pm) -> float:
    g = effective_gains(profile, cc)
    rate = rate_uplink(p, g, n) + rate_downlink(p, g, n)
    return rate / total_power(p, profile.num_elements, pm)


def decomposed_sum_rate(p: PowerAllocation, g: EffectiveGains, n: NoiseParams):
    """Return ``(f1, f2, f3, f4)`` with ``f1 + f2 - f3 - f4`` equal to the sum rate."""
    f1 = math.log2(p.p_d * g.gamma_bb + n.sigma_u_sq + p.p_u * g.gamma1)
    f2 = math.log2(p.p_u * g.gamma3 + n.sigma_d_sq + p.p_d * g.gamma2)
    f3 = math.log2(p.p_d * g.gamma_bb + n.sigma_u_sq)
    f4 = math.log2(p.p_u * g.gamma3 + n.sigma_d_sq)
    return f1, f2, f3, f4


@dataclass(frozen=True)
class SystemSetup:
    """Everything except the channels needed to score an operating point.

    With ``half_duplex`` set, uplink and downlink each get half of the time,
    so the rates carry a 1/2 pre-log, the RSI and co-channel interference
    terms vanish, and only the active amplifier draws power in each slot.
    The SIC terms ``xi * p_d + P_c0`` are dropped as well.
    """

    noise: NoiseParams = NoiseParams()
    limits: RateConstraints = RateConstraints()
    power: PowerModelParams = PowerModelParams()
    num_elements: int = 50
    half_duplex: bool = False

    @property
    def prelog(self) -> float:
        return 0.5 if self.half_duplex else 1.0

    def sinr_targets(self):
        """Linear SINR targets ``2**(th / prelog) - 1`` for UL and DL."""
        return (
            2.0 ** (self.limits.r_u_th / self.prelog) - 1.0,
            2.0 ** (self.limits.r_d_th / self.prelog) - 1.0,
        )

    def power_coefficients(self):
        """``(const, a_u, a_d)`` with ``P_tot = const + a_u p_u + a_d p_d``."""
        pm = self.power
        if self.half_duplex:
            a = 0.5 / pm.rho
            return pm.p_c + self.num_elements * pm.p_s, a, a
        return (
            pm.p_c + self.num_elements * pm.p_s + pm.p_c0,
            1.0 / pm.rho,
            1.0 / pm.rho + pm.xi,
        )

    def effective(self, g: EffectiveGains) -> EffectiveGains:
        if self.half_duplex:
            return replace(g, gamma3=0.0, gamma_bb=0.0)
        return g

    def gains(self, profile: StarRisProfile, cc: CompositeChannels) -> EffectiveGains:
        return self.effective(effective_gains(profile, cc))

    def rates(self, p: PowerAllocation, g: EffectiveGains):
        g = self.effective(g)
        return (
            self.prelog * rate_uplink(p, g, self.noise),
            self.prelog * rate_downlink(p, g, self.noise),
        )

    def sum_rate(self, p, g) -> float:
        return sum(self.rates(p, g))

    def total_power(self, p: PowerAllocation) -> float:
        const, a_u, a_d = self.power_coefficients()
        return const + a_u * p.p_u + a_d * p.p_d

    def ee(self, p, g) -> float:
        return self.sum_rate(p, g) / self.total_power(p)

    def normalized(self, g: EffectiveGains):
        """Gains divided by the receiver noise: ``(g1, g2, g3, gbb)``."""
        g = self.effective(g)
        return (
            g.gamma1 / self.noise.sigma_u_sq,
            g.gamma2 / self.noise.sigma_d_sq,
            g.gamma3 / self.noise.sigma_d_sq,
            g.gamma_bb / self.noise.sigma_u_sq,
        )


def check_solution(p, profile, cc, setup: SystemSetup, tol: float = FEAS_TOL) -> FeasibilityReport:
    """Score ``(p, profile)`` and list every violated constraint with its slack."""
    g = setup.gains(profile, cc)
    r_u, r_d = setup.rates(p, g)
    lim = setup.limits
    slacks = {
        "rate_ul": r_u - lim.r_u_th,
        "rate_dl": r_d - lim.r_d_th,
        "p_u_min": p.p_u,
        "p_u_max": lim.p_u_max - p.p_u,
        "p_d_min": p.p_d,
        "p_d_max": lim.p_d_max - p.p_d,
        "beta_sum": -float(np.max(np.abs(profile.beta_t + profile.beta_r - 1.0))),
        "beta_range": float(min(np.min(profile.beta_t), np.min(profile.beta_r),
                                np.min(1 - profile.beta_t), np.min(1 - profile.beta_r))),
    }
    violations = [(k, v) for k, v in slacks.items() if v < -tol]
    return FeasibilityReport(r_u, r_d, (r_u + r_d) / setup.total_power(p), violations, slacks)
