"""Passive beamforming at the surface for fixed transmit powers.

The coefficient vectors are lifted to ``Q_l = q_l q_l^H``.  The rank-one
requirement is written as ``Tr(Q_l) - lambda_max(Q_l) = 0`` and moved into
the objective as a penalty weighted by ``1/mu``.  Both the subtracted log and
``lambda_max`` are convex-side terms, so each SCA step replaces them by a
tangent and subgradient and solves the remaining concave SDP.  The penalty
weight grows geometrically until both matrices are numerically rank one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import conic
from .channels import CompositeChannels
from .conic import Affine, ConicProgram, SolverSettings
from .system import PowerAllocation, StarRisProfile, SystemSetup

__all__ = [
    "LiftedProfile",
    "LiftedChannels",
    "PenaltySchedule",
    "BeamformResult",
    "lift_profile",
    "lift_channels",
    "lifted_rate_terms",
    "penalty_residual",
    "lambda_subgradient",
    "linearized_G",
    "build_p5",
    "extract_rank_one",
    "optimize_profile",
]

_LN2 = math.log(2.0)
P5_SETTINGS = SolverSettings(tolerance=1e-9)


@dataclass(frozen=True)
class LiftedProfile:
    q_t_mat: np.ndarray
    q_r_mat: np.ndarray

    @property
    def beta_t(self):
        return np.real(np.diag(self.q_t_mat))

    @property
    def beta_r(self):
        return np.real(np.diag(self.q_r_mat))


@dataclass(frozen=True)
class LiftedChannels:
    H1: np.ndarray
    H2: np.ndarray
    H3: np.ndarray
    h_bb: complex


@dataclass(frozen=True)
class PenaltySchedule:
    mu: float = 100.0
    c: float = 0.7
    eps2: float = 1e-5
    eps3: float = 1e-7
    max_inner: int = 30
    max_outer: int = 40

    def __post_init__(self):
        if self.mu <= 0 or not 0 < self.c < 1:
            raise ValueError("need mu > 0 and 0 < c < 1")


@dataclass
class BeamformResult:
    profile: StarRisProfile
    status: str
    outer_iterations: int = 0
    inner_iterations: int = 0
    residuals: tuple = (math.inf, math.inf)
    lifted: LiftedProfile | None = None
    diagnostics: list = field(default_factory=list)


def lift_profile(profile: StarRisProfile) -> LiftedProfile:
    qt, qr = profile.q_t, profile.q_r
    Qt = np.outer(qt, qt.conj())
    Qr = np.outer(qr, qr.conj())
    # pin the diagonal to the stored splits exactly
    Qt[np.diag_indices_from(Qt)] = profile.beta_t
    Qr[np.diag_indices_from(Qr)] = profile.beta_r
    return LiftedProfile(Qt, Qr)


def lift_channels(cc: CompositeChannels) -> LiftedChannels:
    return LiftedChannels(
        np.outer(cc.h1, cc.h1.conj()),
        np.outer(cc.h2, cc.h2.conj()),
        np.outer(cc.h3, cc.h3.conj()),
        cc.h_bb,
    )


def _tr(A, B) -> float:
    # Re Tr(A B) for Hermitian A, B
    return float(np.real(np.vdot(A, B)))


def lifted_rate_terms(lp: LiftedProfile, lc: LiftedChannels, p: PowerAllocation, setup: SystemSetup):
    """Return ``(g1, g2, g3, f)`` so that ``g1 + g2 - g3 - f`` is the sum rate.

    Computed in absolute units (noise powers included) and before the
    duplex pre-log.
    """
    n = setup.noise
    hd = setup.half_duplex
    gbb = 0.0 if hd else abs(lc.h_bb) ** 2
    t3 = 0.0 if hd else _tr(lc.H3, lp.q_t_mat)
    g1 = math.log2(p.p_u * t3 + n.sigma_d_sq + p.p_d * _tr(lc.H2, lp.q_t_mat))
    g2 = math.log2(p.p_d * gbb + n.sigma_u_sq + p.p_u * _tr(lc.H1, lp.q_r_mat))
    g3 = math.log2(p.p_u * t3 + n.sigma_d_sq)
    f = math.log2(p.p_d * gbb + n.sigma_u_sq)
    return g1, g2, g3, f


def _eigh_top(Q):
    w, v = np.linalg.eigh(0.5 * (Q + Q.conj().T))
    top = w[-1]
    # deterministic tie rule: project the lowest-index basis vector that
    # reaches the tied top eigenspace onto that space
    tied = np.flatnonzero(w >= top - 1e-12 * max(1.0, abs(top)))
    if len(tied) > 1:
        sub = v[:, tied]
        for k in range(Q.shape[0]):
            row = sub[k]
            if np.linalg.norm(row) > 1e-8:
                s = sub @ row.conj()
                return top, s / np.linalg.norm(s)
    return top, v[:, -1]


def penalty_residual(Q) -> float:
    """``Tr(Q) - lambda_max(Q)``, zero exactly when ``rank(Q) <= 1``."""
    Q = np.asarray(Q)
    w = np.linalg.eigvalsh(0.5 * (Q + Q.conj().T))
    if w[0] < -1e-9 * max(1.0, abs(w[-1])):
        raise ValueError("matrix is not positive semidefinite")
    return float(np.real(np.trace(Q)) - w[-1])


def lambda_subgradient(Q) -> np.ndarray:
    """``s s^H`` for a unit leading eigenvector ``s`` of ``Q``."""
    _, s = _eigh_top(np.asarray(Q))
    return np.outer(s, s.conj())


def _g_value(lp: LiftedProfile, lc, p, setup, mu):
    _, _, g3, _ = lifted_rate_terms(lp, lc, p, setup)
    lam = np.linalg.eigvalsh(lp.q_t_mat)[-1] + np.linalg.eigvalsh(lp.q_r_mat)[-1]
    return setup.prelog * g3 - lam / mu


def linearized_G(lp: LiftedProfile, at: LiftedProfile, lc: LiftedChannels, p, setup, mu) -> float:
    """Tangent upper bound of ``G = pre*g3(Q_t) - (1/mu) sum_l lambda_max(Q_l)``.

    ``g3`` is concave and ``-lambda_max`` is concave, so the first-order
    expansion at ``at`` over-estimates ``G`` everywhere.
    """
    n = setup.noise
    t3 = 0.0 if setup.half_duplex else 1.0
    base = p.p_u * t3 * _tr(lc.H3, at.q_t_mat) + n.sigma_d_sq
    g3_lin = math.log2(base) + p.p_u * t3 * _tr(lc.H3, lp.q_t_mat - at.q_t_mat) / (base * _LN2)
    lam = 0.0
    for Q, Q0 in ((lp.q_t_mat, at.q_t_mat), (lp.q_r_mat, at.q_r_mat)):
        top, s = _eigh_top(Q0)
        lam += top + float(np.real(np.vdot(s, (Q - Q0) @ s)))
    return setup.prelog * g3_lin - lam / mu


def _blocks(m, split):
    """Index sets of the T and R blocks: all elements, or a fixed split."""
    if split is None:
        idx = np.arange(m)
        return idx, idx
    return np.arange(split), np.arange(split, m)


def build_p5(at: LiftedProfile, cc: CompositeChannels, p: PowerAllocation, setup: SystemSetup,
             mu: float, split=None) -> ConicProgram:
    """Concave SDP surrogate of the penalized sum rate around ``at``.

    Variables are ``Qt`` and ``Qr``.  With ``split`` given, the first
    ``split`` elements transmit only and the rest reflect only, so ``Qt``
    and ``Qr`` shrink to those blocks with unit diagonals.  Gains are
    noise-normalized; the dropped constants do not move the optimizer.
    """
    m = cc.num_elements
    it, ir = _blocks(m, split)
    nu, nd = setup.noise.sigma_u_sq, setup.noise.sigma_d_sq
    hd = setup.half_duplex
    h1 = cc.h1[ir] / math.sqrt(nu)
    h2 = cc.h2[it] / math.sqrt(nd)
    h3 = np.zeros(len(it)) if hd else cc.h3[it] / math.sqrt(nd)
    gbb = 0.0 if hd else abs(cc.h_bb) ** 2 / nu
    H1 = np.outer(h1, h1.conj())
    H2 = np.outer(h2, h2.conj())
    H3 = np.outer(h3, h3.conj())
    Qt0 = at.q_t_mat[np.ix_(it, it)]
    Qr0 = at.q_r_mat[np.ix_(ir, ir)]
    pre = setup.prelog
    tu, td = setup.sinr_targets()

    prog = ConicProgram()
    prog.matrix("Qt", len(it))
    prog.matrix("Qr", len(ir))
    prog.add_log(pre, Affine(1.0, {}, {"Qt": p.p_u * H3 + p.p_d * H2}))
    prog.add_log(pre, Affine(1.0 + p.p_d * gbb, {}, {"Qr": p.p_u * H1}))
    # tangent of pre*g3 and subgradients of the two lambda_max terms
    b3 = 1.0 + p.p_u * _tr(H3, Qt0)
    _, st = _eigh_top(Qt0)
    _, sr = _eigh_top(Qr0)
    St = np.outer(st, st.conj())
    Sr = np.outer(sr, sr.conj())
    eye_t, eye_r = np.eye(len(it)), np.eye(len(ir))
    lin_t = -(pre * p.p_u / (b3 * _LN2)) * H3 - (eye_t - St) / mu
    lin_r = -(eye_r - Sr) / mu
    const = -pre * math.log2(1.0 + p.p_d * gbb) - pre * (math.log2(b3) - p.p_u * _tr(H3, Qt0) / (b3 * _LN2))
    prog.add_linear(Affine(const, {}, {"Qt": lin_t, "Qr": lin_r}))
    prog.add_inequality(Affine(-tu * (1.0 + p.p_d * gbb), {}, {"Qr": p.p_u * H1}))
    prog.add_inequality(Affine(-td, {}, {"Qt": p.p_d * H2 - td * p.p_u * H3}))
    if split is None:
        prog.add_diag_sum(["Qt", "Qr"], np.ones(m))
    else:
        prog.add_diag_sum(["Qt"], np.ones(len(it)))
        prog.add_diag_sum(["Qr"], np.ones(len(ir)))
    prog.set_start("Qt", Qt0)
    prog.set_start("Qr", Qr0)
    return prog


def _penalized(lp: LiftedProfile, lc, p, setup, mu) -> float:
    g1, g2, g3, f = lifted_rate_terms(lp, lc, p, setup)
    res = penalty_residual(lp.q_t_mat) + penalty_residual(lp.q_r_mat)
    return setup.prelog * (g1 + g2 - g3 - f) - res / mu


def _leading(Q):
    top, s = _eigh_top(Q)
    return math.sqrt(max(top, 0.0)) * s


def extract_rank_one(Q, eps3: float = 1e-7) -> np.ndarray:
    """Leading factor ``sqrt(lambda_max) * s`` of a numerically rank-one ``Q``."""
    if penalty_residual(Q) > eps3:
        raise ValueError("matrix is not rank one within eps3; keep tightening the penalty")
    return _leading(Q)


def _profile_from(lp: LiftedProfile, m, split) -> StarRisProfile:
    it, ir = _blocks(m, split)
    qt = np.zeros(m, dtype=complex)
    qr = np.zeros(m, dtype=complex)
    qt[it] = _leading(lp.q_t_mat[np.ix_(it, it)])
    qr[ir] = _leading(lp.q_r_mat[np.ix_(ir, ir)])
    if split is None:
        beta_t = np.clip(np.abs(qt) ** 2, 0.0, 1.0)
    else:
        beta_t = np.zeros(m)
        beta_t[it] = 1.0
    return StarRisProfile.from_split(beta_t, -np.angle(qt), -np.angle(qr))


def _embed(Qt, Qr, m, split):
    it, ir = _blocks(m, split)
    Ft = np.zeros((m, m), dtype=complex)
    Fr = np.zeros((m, m), dtype=complex)
    Ft[np.ix_(it, it)] = Qt
    Fr[np.ix_(ir, ir)] = Qr
    return LiftedProfile(Ft, Fr)


def optimize_profile(initial: StarRisProfile, cc: CompositeChannels, p: PowerAllocation,
                     setup: SystemSetup, schedule: PenaltySchedule = PenaltySchedule(),
                     split=None, settings: SolverSettings = P5_SETTINGS) -> BeamformResult:
    """Penalty-based SDR with SCA, started from the lifted ``initial`` profile.

    The returned profile never has a lower true sum rate than ``initial``;
    if the extracted point would lose rate or break a rate target, the input
    profile is returned with status ``kept-input``.
    """
    m = cc.num_elements
    lc = lift_channels(cc)
    lp = lift_profile(initial)
    mu = schedule.mu
    diags = []
    status = "max-iterations"
    n_in = 0
    outer = 0
    res = (penalty_residual(lp.q_t_mat), penalty_residual(lp.q_r_mat))
    for outer in range(1, schedule.max_outer + 1):
        prev = _penalized(lp, lc, p, setup, mu)
        failed = False
        for inner in range(1, schedule.max_inner + 1):
            sol = conic.solve(build_p5(lp, cc, p, setup, mu, split), settings)
            n_in += 1
            if sol.status != conic.OPTIMAL:
                failed = True
                break
            lp = _embed(sol.matrix_values["Qt"], sol.matrix_values["Qr"], m, split)
            obj = _penalized(lp, lc, p, setup, mu)
            res = (penalty_residual(lp.q_t_mat), penalty_residual(lp.q_r_mat))
            diags.append({"outer": outer, "mu": mu, "inner": inner, "objective": obj,
                          "residual_t": res[0], "residual_r": res[1]})
            inc = (obj - prev) / max(abs(prev), 1e-12)
            prev = obj
            if inc < schedule.eps2:
                break
        if failed:
            status = "solver-" + sol.status
            break
        if max(res) <= schedule.eps3:
            status = "converged"
            break
        mu *= schedule.c

    out = _profile_from(lp, m, split)
    g_in = setup.gains(initial, cc)
    g_out = setup.gains(out, cc)
    rate_in = setup.sum_rate(p, g_in)
    rate_out = setup.sum_rate(p, g_out)
    lim_ok = min(r - th for r, th in zip(setup.rates(p, g_out),
                                         (setup.limits.r_u_th, setup.limits.r_d_th))) >= -1e-9
    if rate_out < rate_in or not lim_ok:
        out = initial
        status = "kept-input" if status == "converged" else status + "/kept-input"
    return BeamformResult(out, status, outer, n_in, res, lp, diags)
