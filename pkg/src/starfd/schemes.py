"""Alternating optimization driver and the three baselines.

* ``SR-FD-EEM``: STAR-RIS, full duplex, EE maximization (proposed).
* ``SR-HD-EEM``: same surface, uplink and downlink in separate half slots.
* ``CR-FD-EEM``: conventional surfaces, half the elements transmit only
  and the other half reflect only; only phases are optimized.
* ``SR-FD-SRM``: full duplex with the power step maximizing the sum rate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .beamforming import optimize_profile
from .channels import ChannelSet, composite_channels
from .params import SimulationParams
from .power import initial_power, optimize_power
from .system import FeasibilityReport, PowerAllocation, StarRisProfile, check_solution

__all__ = ["SCHEMES", "SchemeResult", "initial_point", "run_scheme",
           "run_sr_fd_eem", "run_sr_hd_eem", "run_cr_fd_eem", "run_sr_fd_srm"]

SCHEMES = ("SR-FD-EEM", "SR-HD-EEM", "CR-FD-EEM", "SR-FD-SRM")


@dataclass
class SchemeResult:
    scheme: str
    feasible: bool
    ee: float = math.nan
    r_u: float = math.nan
    r_d: float = math.nan
    allocation: PowerAllocation | None = None
    profile: StarRisProfile | None = None
    ao_trace: list = field(default_factory=list)
    iteration_counts: dict = field(default_factory=lambda: {
        "ao": 0, "dinkelbach": 0, "outer_penalty": 0, "inner_sca": 0})
    report: FeasibilityReport | None = None
    statuses: list = field(default_factory=list)
    diagnostics: list = field(default_factory=list)


def _split(name, m):
    if not name.startswith("CR"):
        return None
    if m % 2:
        raise ValueError("the conventional-surface baseline needs an even element count")
    return m // 2


def initial_point(cc, setup, split, rng, restarts=20):
    """First feasible (profile, powers) pair, or None.

    The phase-aligned profile (each side co-phased with its own cascade) is
    tried first, then up to ``restarts`` profiles with random phases.
    Splits are 0.5 per element, or the fixed on/off pattern with ``split``.
    """
    m = cc.num_elements
    if split is None:
        beta_t = np.full(m, 0.5)
    else:
        beta_t = np.r_[np.ones(split), np.zeros(m - split)]
    cands = [(-np.angle(cc.h2), -np.angle(cc.h1))]
    for _ in range(restarts):
        cands.append((rng.uniform(0, 2 * math.pi, m), rng.uniform(0, 2 * math.pi, m)))
    for phi_t, phi_r in cands:
        prof = StarRisProfile.from_split(beta_t, phi_t, phi_r)
        p = initial_power(setup.gains(prof, cc), setup)
        if p is not None:
            return prof, p
    return None


def run_scheme(name: str, channels: ChannelSet, params: SimulationParams, seed: int = 0) -> SchemeResult:
    """Run one scheme on one channel realization.

    ``seed`` only feeds the random restarts of the initialization.
    """
    if name not in SCHEMES:
        raise ValueError(f"unknown scheme {name!r}; choose from {SCHEMES}")
    if channels.num_elements != params.num_elements:
        raise ValueError("channel length does not match num_elements")
    setup = params.setup(half_duplex=name == "SR-HD-EEM")
    srm = name == "SR-FD-SRM"
    split = _split(name, params.num_elements)
    cc = composite_channels(channels)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 0x5EED]))
    init = initial_point(cc, setup, split, rng, params.init_restarts)
    res = SchemeResult(name, False)
    if init is None:
        res.statuses.append("no-feasible-init")
        return res

    profile, p = init
    g = setup.gains(profile, cc)
    score = setup.sum_rate if srm else setup.ee
    obj = score(p, g)
    res.ao_trace.append(setup.ee(p, g))
    counts = res.iteration_counts
    schedule = params.schedule()
    for it in range(1, params.max_ao_iterations + 1):
        pr = optimize_power(p, g, setup, params.eps1, params.max_dinkelbach, sum_rate_only=srm)
        counts["dinkelbach"] += pr.iterations
        p = pr.allocation
        br = optimize_profile(profile, cc, p, setup, schedule, split)
        counts["outer_penalty"] += br.outer_iterations
        counts["inner_sca"] += br.inner_iterations
        profile = br.profile
        g = setup.gains(profile, cc)
        new = score(p, g)
        res.ao_trace.append(setup.ee(p, g))
        res.statuses.append((pr.status, br.status))
        res.diagnostics.append({"ao": it, "power": pr.diagnostics, "beamforming": br.diagnostics,
                                "ee": res.ao_trace[-1]})
        counts["ao"] = it
        inc = (new - obj) / max(abs(obj), 1e-300)
        obj = new
        if inc < params.ao_tolerance:
            break

    res.report = check_solution(p, profile, cc, setup)
    res.feasible = res.report.feasible
    res.ee, res.r_u, res.r_d = res.report.ee, res.report.r_u, res.report.r_d
    res.allocation, res.profile = p, profile
    return res


def run_sr_fd_eem(channels, params, seed=0):
    return run_scheme("SR-FD-EEM", channels, params, seed)


def run_sr_hd_eem(channels, params, seed=0):
    return run_scheme("SR-HD-EEM", channels, params, seed)


def run_cr_fd_eem(channels, params, seed=0):
    return run_scheme("CR-FD-EEM", channels, params, seed)


def run_sr_fd_srm(channels, params, seed=0):
    return run_scheme("SR-FD-SRM", channels, params, seed)
