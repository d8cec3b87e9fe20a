"""Transmit power allocation for a fixed surface profile.

Dinkelbach's method turns the EE ratio into a sequence of subtractive
problems ``R(p) - alpha * P_tot(p)``.  The sum rate is a difference of
concave logs, so the two subtracted logs are replaced by their tangents,
which leaves a concave program in ``(p_u, p_d)`` that is solved once per
``alpha`` update.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import conic
from .conic import Affine, ConicProgram, SolverSettings
from .system import EffectiveGains, PowerAllocation, SystemSetup

__all__ = [
    "PowerOptResult",
    "taylor_f3",
    "taylor_f4",
    "dinkelbach_alpha",
    "minimum_power",
    "initial_power",
    "build_p3",
    "surrogate_value",
    "optimize_power",
]

_LN2 = math.log(2.0)
P3_SETTINGS = SolverSettings(tolerance=1e-9)


@dataclass
class PowerOptResult:
    allocation: PowerAllocation
    alpha_trace: list
    status: str
    iterations: int = 0
    diagnostics: list = field(default_factory=list)


def _tangent(x, x_n, gain, noise):
    base = x_n * gain + noise
    return gain / (base * _LN2) * (x - x_n) + math.log2(base)


def taylor_f3(p_d, p_d_n, gamma_bb, sigma_u_sq):
    """Tangent of ``log2(p_d * gamma_bb + sigma_u_sq)`` at ``p_d_n``."""
    return _tangent(p_d, p_d_n, gamma_bb, sigma_u_sq)


def taylor_f4(p_u, p_u_n, gamma3, sigma_d_sq):
    """Tangent of ``log2(p_u * gamma3 + sigma_d_sq)`` at ``p_u_n``."""
    return _tangent(p_u, p_u_n, gamma3, sigma_d_sq)


def dinkelbach_alpha(rate: float, p_tot: float) -> float:
    if p_tot <= 0:
        raise ValueError("total power must be positive")
    return rate / p_tot


def minimum_power(g: EffectiveGains, setup: SystemSetup):
    """Smallest powers meeting both SINR targets with equality, or None.

    Any feasible allocation dominates this point componentwise.
    """
    g1, g2, g3, gbb = setup.normalized(g)
    tu, td = setup.sinr_targets()
    a = np.array([[g1, -tu * gbb], [-td * g3, g2]])
    det = g1 * g2 - tu * td * gbb * g3
    if det <= 0:
        return None
    pu, pd = np.linalg.solve(a, [tu, td])
    if pu > setup.limits.p_u_max or pd > setup.limits.p_d_max:
        return None
    return PowerAllocation(float(max(pu, 0.0)), float(max(pd, 0.0)))


def _slacks(p: PowerAllocation, g, setup):
    g1, g2, g3, gbb = setup.normalized(g)
    tu, td = setup.sinr_targets()
    return (
        p.p_u * g1 - tu * (p.p_d * gbb + 1.0),
        p.p_d * g2 - td * (p.p_u * g3 + 1.0),
    )


def initial_power(g: EffectiveGains, setup: SystemSetup):
    """Half the caps projected onto the feasible power set.

    The projection is Euclidean in cap-normalized units.  The feasible set
    is a polygon (box plus the two linear SINR constraints), so the nearest
    point is found by enumerating edge projections and vertices.  Returns
    None when no power allocation meets both rate targets.
    """
    pmin = minimum_power(g, setup)
    if pmin is None:
        return None
    lim = setup.limits
    cap = np.array([lim.p_u_max, lim.p_d_max])
    g1, g2, g3, gbb = setup.normalized(g)
    tu, td = setup.sinr_targets()
    # rows a with a @ x >= b, x = p / cap
    a = np.array([[g1 * cap[0], -tu * gbb * cap[1]],
                  [-td * g3 * cap[0], g2 * cap[1]],
                  [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
    b = np.array([tu, td, 0.0, 0.0, -1.0, -1.0])
    scale = np.linalg.norm(a, axis=1)
    a, b = a / scale[:, None], b / scale
    x0 = np.array([0.5, 0.5])
    cands = [x0, np.array([pmin.p_u, pmin.p_d]) / cap]
    for i in range(6):
        cands.append(x0 + (b[i] - a[i] @ x0) * a[i])
        for j in range(i + 1, 6):
            det = a[i, 0] * a[j, 1] - a[i, 1] * a[j, 0]
            if abs(det) > 1e-12:
                cands.append(np.linalg.solve(a[[i, j]], b[[i, j]]))
    best = None
    for x in cands:
        if np.all(a @ x - b >= -1e-12):
            dist = float(np.sum((x - x0) ** 2))
            if best is None or dist < best[0]:
                best = (dist, x)
    p = np.clip(best[1], 0.0, 1.0) * cap
    return PowerAllocation(float(p[0]), float(p[1]))


def build_p3(alpha, point: PowerAllocation, g: EffectiveGains, setup: SystemSetup) -> ConicProgram:
    """Concave surrogate of ``R(p) - alpha * P_tot(p)`` around ``point``.

    Works on noise-normalized gains; the dropped ``log2(noise)`` constants
    cancel between the concave and the linearized terms.
    """
    g1, g2, g3, gbb = setup.normalized(g)
    tu, td = setup.sinr_targets()
    pre = setup.prelog
    lim = setup.limits
    prog = ConicProgram()
    prog.scalar("pu", 0.0, lim.p_u_max)
    prog.scalar("pd", 0.0, lim.p_d_max)
    prog.add_log(pre, Affine(1.0, {"pu": g1, "pd": gbb}))
    prog.add_log(pre, Affine(1.0, {"pu": g3, "pd": g2}))
    # tangents of the subtracted logs
    b3 = 1.0 + point.p_d * gbb
    b4 = 1.0 + point.p_u * g3
    s3 = gbb / (b3 * _LN2)
    s4 = g3 / (b4 * _LN2)
    const, a_u, a_d = setup.power_coefficients()
    lin = Affine(
        -pre * (math.log2(b3) - s3 * point.p_d + math.log2(b4) - s4 * point.p_u) - alpha * const,
        {"pu": -pre * s4 - alpha * a_u, "pd": -pre * s3 - alpha * a_d},
    )
    prog.add_linear(lin)
    prog.add_inequality(Affine(-tu, {"pu": g1, "pd": -tu * gbb}))
    prog.add_inequality(Affine(-td, {"pd": g2, "pu": -td * g3}))
    prog.set_start("pu", point.p_u)
    prog.set_start("pd", point.p_d)
    return prog


def surrogate_value(p: PowerAllocation, alpha, point, g, setup) -> float:
    """Objective of the P3 surrogate evaluated at ``p``."""
    prog = build_p3(alpha, point, g, setup)
    return prog.objective({"pu": p.p_u, "pd": p.p_d}, {})


def optimize_power(
    initial: PowerAllocation,
    g: EffectiveGains,
    setup: SystemSetup,
    eps1: float = 1e-5,
    max_outer: int = 50,
    sum_rate_only: bool = False,
    settings: SolverSettings = P3_SETTINGS,
) -> PowerOptResult:
    """Dinkelbach iterations from a feasible ``initial`` allocation.

    With ``sum_rate_only`` the price ``alpha`` stays at zero and the loop
    stops once the fractional sum-rate increase falls below ``eps1``.
    """
    if min(_slacks(initial, g, setup)) < -1e-6 * (1.0 + setup.sinr_targets()[1]):
        return PowerOptResult(initial, [], "infeasible")
    p = initial
    rate = setup.sum_rate(p, g)
    alpha = 0.0 if sum_rate_only else dinkelbach_alpha(rate, setup.total_power(p))
    trace = [alpha]
    diags = []
    status = "max-iterations"
    n = 0
    for n in range(1, max_outer + 1):
        prog = build_p3(alpha, p, g, setup)
        sol = conic.solve(prog, settings)
        if sol.status != conic.OPTIMAL:
            status = "solver-" + sol.status
            break
        cand = PowerAllocation(sol.scalar_values["pu"], sol.scalar_values["pd"])
        new_rate = setup.sum_rate(cand, g)
        diags.append({"iteration": n, "alpha": alpha, "p_u": cand.p_u, "p_d": cand.p_d,
                      "surrogate": sol.objective_value})
        if sum_rate_only:
            if new_rate < rate:
                status = "converged"
                break
            inc = (new_rate - rate) / max(rate, 1e-300)
            p, rate = cand, new_rate
            trace.append(0.0)
            if inc < eps1:
                status = "converged"
                break
            continue
        new_alpha = dinkelbach_alpha(new_rate, setup.total_power(cand))
        if new_alpha < alpha:
            # ascent is guaranteed up to solver accuracy; keep the incumbent
            status = "converged"
            break
        inc = (new_alpha - alpha) / max(alpha, 1e-300)
        p, rate, alpha = cand, new_rate, new_alpha
        trace.append(alpha)
        if inc < eps1:
            status = "converged"
            break
    return PowerOptResult(p, trace, status, n, diags)
