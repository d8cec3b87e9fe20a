"""Small convex programs with logarithmic objectives and Hermitian PSD blocks.

A :class:`ConicProgram` describes

    maximize    sum_k w_k * log2(a_k(z)) + c(z)
    subject to  g_j(z) >= 0,  e_i(z) = 0,  sum_b diag(X_b) = r_f,
                lo <= x <= hi,  X_b >= 0 (Hermitian PSD)

where ``z = (x, X_1, ..., X_L)`` collects bounded real scalars and complex
Hermitian matrices and every function above is affine.  :func:`solve` runs a
primal-dual predictor-corrector method with Nesterov-Todd scaling that works
directly on the Hermitian blocks.  The log terms enter as a smooth convex
objective, and the Newton system is reduced to a small dense system over the
log directions and the equality rows, so a step costs O(K * d^3) for K dense
directions instead of O(d^6).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

__all__ = [
    "Affine",
    "ConicProgram",
    "SolverSettings",
    "Solution",
    "solve",
    "real_embedding",
    "hermitian_from_embedding",
]

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
FAILURE = "numerical-failure"

_LN2 = math.log(2.0)

@dataclass
class Affine:
    """``const + sum_i s_i x_i + sum_b Re Tr(C_b X_b)`` over named variables."""

    const: float = 0.0
    scalars: dict = field(default_factory=dict)
    matrices: dict = field(default_factory=dict)

    def __add__(self, other):
        if isinstance(other, (int, float)):
            return Affine(self.const + other, dict(self.scalars), dict(self.matrices))
        out = Affine(self.const + other.const, dict(self.scalars), dict(self.matrices))
        for k, v in other.scalars.items():
            out.scalars[k] = out.scalars.get(k, 0.0) + v
        for k, v in other.matrices.items():
            out.matrices[k] = out.matrices[k] + v if k in out.matrices else v
        return out

    def __mul__(self, a: float):
        return Affine(
            a * self.const,
            {k: a * v for k, v in self.scalars.items()},
            {k: a * v for k, v in self.matrices.items()},
        )

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + (-other)

    def evaluate(self, scalars: dict, matrices: dict) -> float:
        val = self.const
        for k, v in self.scalars.items():
            val += v * scalars[k]
        for k, c in self.matrices.items():
            val += float(np.real(np.vdot(c, matrices[k])))
        return val


class ConicProgram:
    """Builder for a concave maximization over scalars and Hermitian PSD blocks."""

    def __init__(self):
        self.scalar_vars: dict[str, tuple[float, float]] = {}
        self.psd_vars: dict[str, int] = {}
        self.log_terms: list[tuple[float, Affine]] = []
        self.linear = Affine()
        self.inequalities: list[Affine] = []
        self.equalities: list[Affine] = []
        self.diag_sums: list[tuple[tuple[str, ...], np.ndarray]] = []
        self.start: dict = {}

    def scalar(self, name: str, lo: float, hi: float) -> str:
        if not (np.isfinite(lo) and np.isfinite(hi)) or hi <= lo:
            raise ValueError(f"scalar {name!r} needs finite bounds lo < hi")
        self._new_name(name)
        self.scalar_vars[name] = (float(lo), float(hi))
        return name

    def matrix(self, name: str, dim: int) -> str:
        if dim < 1:
            raise ValueError("matrix dimension must be positive")
        self._new_name(name)
        self.psd_vars[name] = int(dim)
        return name

    def _new_name(self, name):
        if name in self.scalar_vars or name in self.psd_vars:
            raise ValueError(f"duplicate variable {name!r}")

    def add_log(self, weight: float, arg: Affine):
        """Add ``weight * log2(arg)`` to the objective (weight >= 0)."""
        if weight < 0:
            raise ValueError("log weights must be non-negative for concavity")
        if weight > 0:
            self.log_terms.append((float(weight), arg))

    def add_linear(self, expr: Affine):
        self.linear = self.linear + expr

    def add_inequality(self, expr: Affine):
        """Require ``expr >= 0``."""
        self.inequalities.append(expr)

    def add_equality(self, expr: Affine):
        """Require ``expr == 0``."""
        self.equalities.append(expr)

    def add_diag_sum(self, names, rhs):
        """Require ``sum(diag(X) for X in names) == rhs``."""
        names = tuple(names)
        dims = {self.psd_vars[n] for n in names}
        rhs = np.asarray(rhs, dtype=float)
        if len(dims) != 1 or rhs.shape != (dims.pop(),):
            raise ValueError("diag_sum blocks and rhs must share one dimension")
        self.diag_sums.append((names, rhs))

    def set_start(self, name: str, value):
        self.start[name] = value

    def objective(self, scalars: dict, matrices: dict) -> float:
        val = self.linear.evaluate(scalars, matrices)
        for w, a in self.log_terms:
            val += w * math.log2(a.evaluate(scalars, matrices))
        return val


@dataclass
class SolverSettings:
    """Stopping rules.

    The solver stops when the relative primal and dual residuals and the
    relative gap all fall below ``tolerance``.  If progress stalls first, the
    best iterate is still reported optimal when its equality rows can be
    repaired to ``tolerance`` and its dual residual and gap are below
    ``tolerance * reduced_factor``.
    """

    tolerance: float = 1e-8
    max_iterations: int = 100
    reduced_factor: float = 1e3


@dataclass
class Solution:
    status: str
    scalar_values: dict | None = None
    matrix_values: dict | None = None
    objective_value: float | None = None
    iterations: int = 0
    gap: float = math.inf


# ---------------------------------------------------------------------------
# standard form: orthant vector o >= 0 and Hermitian blocks X_b >= 0

def _amax(arrays):
    return max((float(np.max(np.abs(a))) for a in arrays if np.size(a)), default=0.0)



class _Dir:
    """Linear functional ``o_coef . o + sum_b Re Tr(C_b X_b)``."""

    __slots__ = ("o", "m")

    def __init__(self, o, m):
        self.o = o
        self.m = m  # one entry per block: ndarray or None

    def dot(self, o, mats):
        v = float(self.o @ o)
        for c, X in zip(self.m, mats):
            if c is not None:
                v += float(np.real(np.vdot(c, X)))
        return v


class _Std:
    def __init__(self, prog: ConicProgram):
        snames = list(prog.scalar_vars)
        bnames = list(prog.psd_vars)
        sidx = {n: i for i, n in enumerate(snames)}
        bidx = {n: i for i, n in enumerate(bnames)}
        self.snames, self.bnames = snames, bnames
        self.dims = [prog.psd_vars[n] for n in bnames]
        self.lo = np.array([prog.scalar_vars[n][0] for n in snames], dtype=float)
        self.hi = np.array([prog.scalar_vars[n][1] for n in snames], dtype=float)
        n_s, n_i = len(snames), len(prog.inequalities)
        self.n_s = n_s
        # orthant layout: [x - lo | hi - x | inequality slacks]
        self.n_o = 2 * n_s + n_i
        nb = len(bnames)

        def conv(a: Affine):
            s = np.zeros(n_s)
            for k, v in a.scalars.items():
                s[sidx[k]] += v
            m = [None] * nb
            for k, c in a.matrices.items():
                c = np.asarray(c, dtype=complex)
                b = bidx[k]
                if c.shape != (self.dims[b], self.dims[b]):
                    raise ValueError(f"coefficient shape mismatch for {k!r}")
                c = 0.5 * (c + c.conj().T)
                m[b] = c if m[b] is None else m[b] + c
            o = np.zeros(self.n_o)
            o[:n_s] = s
            return float(a.const) + float(s @ self.lo), _Dir(o, m)

        self.logs = [(w / _LN2,) + conv(a) for w, a in prog.log_terms]
        self.c_const, self.c_dir = conv(prog.linear)
        rows, b = [], []
        for e in prog.equalities:
            c, d = conv(e)
            rows.append(d)
            b.append(-c)
        for i in range(n_s):
            o = np.zeros(self.n_o)
            o[i] = o[n_s + i] = 1.0
            rows.append(_Dir(o, [None] * nb))
            b.append(self.hi[i] - self.lo[i])
        self.ineq_const = []
        for j, g in enumerate(prog.inequalities):
            c, d = conv(g)
            d.o[2 * n_s + j] = -1.0
            rows.append(d)
            b.append(-c)
            self.ineq_const.append(c)
        self.rows = rows
        self.b = np.array(b, dtype=float)
        self.diags = [(tuple(bidx[n] for n in names), rhs) for names, rhs in prog.diag_sums]
        self.deg = self.n_o + sum(self.dims)

        # starting point
        u = 0.5 * (self.hi - self.lo)
        for n in snames:
            if n in prog.start:
                i = sidx[n]
                span = self.hi[i] - self.lo[i]
                u[i] = np.clip(float(prog.start[n]) - self.lo[i], 1e-2 * span, 0.99 * span)
        mats = []
        for n, d in zip(bnames, self.dims):
            X = np.asarray(prog.start.get(n, np.eye(d)), dtype=complex)
            X = 0.5 * (X + X.conj().T)
            lam = np.linalg.eigvalsh(X)
            floor = 1e-2 * max(lam[-1], 1e-3)
            if lam[0] < floor:
                X = X + (floor - lam[0]) * np.eye(d)
            mats.append(X)
        o = np.concatenate([u, (self.hi - self.lo) - u, np.ones(n_i)])
        for j, g in enumerate(self.rows[len(prog.equalities) + n_s:]):
            val = g.dot(o, mats) + self.ineq_const[j] + o[2 * n_s + j]
            o[2 * n_s + j] = max(val, 1.0)
        self.o0, self.mats0 = o, mats
        # unit-scale the generic rows; slacks and multipliers absorb the factor
        self.n_eq = len(prog.equalities)
        for i, d in enumerate(self.rows):
            scale = max(_amax([d.o] + [c for c in d.m if c is not None]), 1e-300)
            d.o = d.o / scale
            d.m = [None if c is None else c / scale for c in d.m]
            self.b[i] /= scale

    def polish(self, o, mats):
        """Restore the equality rows that have a cheap exact repair.

        Diagonal families are fixed by a symmetric diagonal rescaling of their
        blocks, box rows by resetting the upper slack and inequality rows by
        recomputing their slack from the constraint value.
        """
        o = o.copy()
        mats = [X.copy() for X in mats]
        owners = {}
        for f, (blocks, _) in enumerate(self.diags):
            for b in blocks:
                owners.setdefault(b, []).append(f)
        if all(len(v) == 1 for v in owners.values()):
            for blocks, rhs in self.diags:
                tot = sum(np.real(np.diag(mats[b])) for b in blocks)
                if np.all(tot > 0):
                    d = np.sqrt(rhs / tot)
                    for b in blocks:
                        mats[b] = _herm(d[:, None] * mats[b] * d[None, :])
        n_s = self.n_s
        span = self.hi - self.lo
        o[:n_s] = np.clip(o[:n_s], 0.0, span)
        o[n_s:2 * n_s] = span - o[:n_s]
        for j in range(self.n_o - 2 * n_s):
            i = self.n_eq + n_s + j
            k = 2 * n_s + j
            o[k] = 0.0
            o[k] = max((self.rows[i].dot(o, mats) - self.b[i]) / -self.rows[i].o[k], 0.0)
        return o, mats

    def objective(self, o, mats):
        """Maximized objective value (log2 units)."""
        val = self.c_const + self.c_dir.dot(o, mats)
        for w, c, d in self.logs:
            val += w * math.log(c + d.dot(o, mats))
        return val


def _primal_residual(sf, o, mats, bnorm):
    rp_gen = np.array([d.dot(o, mats) for d in sf.rows]) - sf.b
    rp_diag = [sum(np.real(np.diag(mats[b])) for b in blocks) - rhs for blocks, rhs in sf.diags]
    return rp_gen, rp_diag, _amax([rp_gen] + rp_diag) / bnorm


def _herm(A):
    return 0.5 * (A + A.conj().T)


def _max_step_psd(X, D):
    lam = sla.eigh(D, X, eigvals_only=True, subset_by_index=[0, 0])[0]
    return -1.0 / lam if lam < 0 else math.inf


def _max_step_orthant(o, d):
    neg = d < 0
    if not np.any(neg):
        return math.inf
    return float(np.min(-o[neg] / d[neg]))


def _primal_dual(sf: _Std, settings: SolverSettings):
    nb = len(sf.dims)
    o, mats = sf.o0.copy(), [X.copy() for X in sf.mats0]
    n_u = len(sf.logs)
    dirs = [d for _, _, d in sf.logs] + sf.rows
    K = len(dirs)
    VO = np.array([d.o for d in dirs]).reshape(K, sf.n_o)
    VB = []
    for b, dim in enumerate(sf.dims):
        V = np.zeros((K, dim, dim), dtype=complex)
        for k, d in enumerate(dirs):
            if d.m[b] is not None:
                V[k] = d.m[b]
        VB.append(V)
    fam = [len(rhs) for _, rhs in sf.diags]
    offs = np.cumsum([K] + fam)
    n_tot = int(offs[-1])

    def grad_phi(o, mats):
        # gradient of the minimized objective -(sum w log a + c)
        go = -sf.c_dir.o.copy()
        gm = [-(c if c is not None else 0.0) for c in sf.c_dir.m]
        avals = []
        for w, c, d in sf.logs:
            a = c + d.dot(o, mats)
            avals.append(a)
            go -= (w / a) * d.o
            for b in range(nb):
                if d.m[b] is not None:
                    gm[b] = gm[b] - (w / a) * d.m[b]
        gm = [np.zeros((dim, dim), dtype=complex) + g for dim, g in zip(sf.dims, gm)]
        return go, gm, np.array(avals)

    # dual start scaled to the objective gradient
    go0, gm0, _ = grad_phi(o, mats)
    eta = 1.0 + _amax([go0] + gm0)
    so = np.full(sf.n_o, eta)
    smats = [eta * np.eye(d, dtype=complex) for d in sf.dims]
    y_gen = np.zeros(len(sf.rows))
    y_diag = [np.zeros(f) for f in fam]
    bnorm = 1.0 + _amax([sf.b] + [np.asarray(r, float) for _, r in sf.diags])

    def adjoint_y(yg, yd):
        ao = yg @ VO[n_u:] if len(yg) else np.zeros(sf.n_o)
        am = []
        for b in range(nb):
            A = np.tensordot(yg, VB[b][n_u:], axes=1) if len(yg) else np.zeros((sf.dims[b],) * 2, complex)
            for f, (blocks, _) in enumerate(sf.diags):
                if b in blocks:
                    A = A + np.diag(yd[f]).astype(complex)
            am.append(A)
        return ao, am

    status = FAILURE
    it = 0
    best = (math.inf, None)
    history = []
    for it in range(1, settings.max_iterations + 1):
        go, gm, avals = grad_phi(o, mats)
        if np.any(avals <= 0):
            break
        rp_gen, rp_diag, pres = _primal_residual(sf, o, mats, bnorm)
        ao, am = adjoint_y(y_gen, y_diag)
        rd_o = go - ao - so
        rd_m = [_herm(g - a - s) for g, a, s in zip(gm, am, smats)]
        comp = float(o @ so) + sum(float(np.real(np.vdot(X, S))) for X, S in zip(mats, smats))
        mu = comp / sf.deg
        phi = sf.objective(o, mats)
        gscale = 1.0 + _amax([go] + gm)
        dres = _amax([rd_o] + rd_m) / gscale
        gap = comp / (1.0 + abs(phi))
        if pres < settings.tolerance and dres < settings.tolerance and gap < settings.tolerance:
            status = OPTIMAL
            break
        merit = max(pres, dres, gap)
        if merit < best[0]:
            best = (merit, (o, mats, dres, gap))
        history.append(merit)
        if len(history) > 15 and min(history[-8:]) > 0.5 * min(history[:-8]):
            break
        if dres < settings.tolerance and gap < settings.tolerance:
            # only the equality rows lag behind; try the exact repair
            po, pm = sf.polish(o, mats)
            if _primal_residual(sf, po, pm, bnorm)[2] < settings.tolerance:
                o, mats = po, pm
                status = OPTIMAL
                break
        ynorm = _amax([y_gen] + y_diag)
        if ynorm > 1e12 * gscale and pres > 1e-6:
            status = INFEASIBLE
            break

        # NT scaling
        Ws, Rs, lams, Lxs, Vhs = [], [], [], [], []
        try:
            facs = [(np.linalg.cholesky(X), np.linalg.cholesky(S)) for X, S in zip(mats, smats)]
        except np.linalg.LinAlgError:
            break
        for Lx, Ls in facs:
            _, sig, Vh = np.linalg.svd(Ls.conj().T @ Lx)
            Vhs.append(Vh)
            R = (Lx @ Vh.conj().T) / np.sqrt(sig)[None, :]
            Rs.append(R)
            lams.append(sig)
            Ws.append(R @ R.conj().T)
            Lxs.append(Lx)
        wo2 = o / so

        # reduced system
        NVO = VO * wo2
        NVB = [W @ V @ W for W, V in zip(Ws, VB)]
        Smat = np.zeros((n_tot, n_tot))
        if K:
            G = NVO @ VO.T
            for b in range(nb):
                G = G + np.real(VB[b].reshape(K, -1).conj() @ NVB[b].reshape(K, -1).T)
            Smat[:K, :K] = 0.5 * (G + G.T)
            Smat[np.arange(n_u), np.arange(n_u)] += avals**2 / np.array([w for w, _, _ in sf.logs])
        absW2 = [np.abs(W) ** 2 for W in Ws]
        for f, (blocks, _) in enumerate(sf.diags):
            i0, i1 = offs[f], offs[f + 1]
            if K:
                cross = sum(np.real(np.diagonal(NVB[b], axis1=1, axis2=2)) for b in blocks)
                Smat[:K, i0:i1] = cross
                Smat[i0:i1, :K] = cross.T
            for g_, (blocks2, _) in enumerate(sf.diags):
                common = set(blocks) & set(blocks2)
                if common:
                    Smat[i0:i1, offs[g_]:offs[g_ + 1]] = sum(absW2[b] for b in common)
        try:
            fact = sla.cho_factor(Smat)
            kkt = lambda r: sla.cho_solve(fact, r)
        except (np.linalg.LinAlgError, ValueError):
            kkt = lambda r: np.linalg.lstsq(Smat, r, rcond=None)[0]

        def direction(rc_o, rc_m):
            q_o = rc_o - wo2 * rd_o
            q_m = [rc - W @ rd @ W for rc, W, rd in zip(rc_m, Ws, rd_m)]
            rhs = np.zeros(n_tot)
            if K:
                rhs[:K] = VO @ q_o
                for b in range(nb):
                    rhs[:K] += np.real(VB[b].reshape(K, -1).conj() @ q_m[b].reshape(-1))
                rhs[n_u:K] += rp_gen
            for f, (blocks, _) in enumerate(sf.diags):
                rhs[offs[f]:offs[f + 1]] = sum(np.real(np.diag(q_m[b])) for b in blocks) + rp_diag[f]
            sol = kkt(rhs)
            c_o = sol[:K] @ VO if K else np.zeros(sf.n_o)
            c_m = []
            for b in range(nb):
                C = np.tensordot(sol[:K], VB[b], axes=1) if K else np.zeros((sf.dims[b],) * 2, complex)
                for f, (blocks, _) in enumerate(sf.diags):
                    if b in blocks:
                        C = C + np.diag(sol[offs[f]:offs[f + 1]])
                c_m.append(C)
            dz_o = q_o - wo2 * c_o
            dz_m = [_herm(q - W @ C @ W) for q, W, C in zip(q_m, Ws, c_m)]
            ds_o = rd_o + c_o
            ds_m = [_herm(rd + C) for rd, C in zip(rd_m, c_m)]
            dyg = -sol[n_u:K]
            dyd = [-sol[offs[f]:offs[f + 1]] for f in range(len(fam))]
            return dz_o, dz_m, ds_o, ds_m, dyg, dyd

        def steps(dz_o, dz_m, ds_o, ds_m):
            ap = _max_step_orthant(o, dz_o)
            ad = _max_step_orthant(so, ds_o)
            for X, D in zip(mats, dz_m):
                ap = min(ap, _max_step_psd(X, D))
            for S, D in zip(smats, ds_m):
                ad = min(ad, _max_step_psd(S, D))
            for (w, c, d), a in zip(sf.logs, avals):
                sl = d.dot(dz_o, dz_m)
                # trust region on the log arguments: at most halve or triple
                if sl < 0:
                    ap = min(ap, -0.5 * a / sl)
                elif sl > 0:
                    ap = min(ap, 2.0 * a / sl)
            return ap, ad

        # predictor
        aff = direction(-o, [-X for X in mats])
        ap, ad = steps(*aff[:4])
        alpha = min(1.0, ap, ad)
        comp_aff = float((o + alpha * aff[0]) @ (so + alpha * aff[2])) + sum(
            float(np.real(np.vdot(X + alpha * dX, S + alpha * dS)))
            for X, dX, S, dS in zip(mats, aff[1], smats, aff[3])
        )
        sigma = min(1.0, max(0.0, comp_aff / comp)) ** 3
        # corrector
        lam_o = np.sqrt(o * so)
        T_o = sigma * mu - lam_o**2 - aff[0] * aff[2]
        rc_o = T_o / so
        rc_m = []
        for b in range(nb):
            R, lam, Lx = Rs[b], lams[b], Lxs[b]
            Rinv_dx = sla.solve_triangular(Lx, aff[1][b], lower=True)
            Rinv_dx = sla.solve_triangular(Lx, Rinv_dx.conj().T, lower=True).conj().T
            Vh = Vhs[b]
            sq = np.sqrt(lam)
            dxt = (sq[:, None] * (Vh @ Rinv_dx @ Vh.conj().T)) * sq[None, :]
            dst = R.conj().T @ aff[3][b] @ R
            prod = dxt @ dst
            T = -0.5 * (prod + prod.conj().T)
            T[np.diag_indices_from(T)] += sigma * mu - lam**2
            Y = 2.0 * T / (lam[:, None] + lam[None, :])
            rc_m.append(R @ Y @ R.conj().T)
        dz_o, dz_m, ds_o, ds_m, dyg, dyd = direction(rc_o, rc_m)
        ap, ad = steps(dz_o, dz_m, ds_o, ds_m)
        alpha = min(1.0, 0.99 * ap, 0.99 * ad)
        o = o + alpha * dz_o
        mats = [_herm(X + alpha * D) for X, D in zip(mats, dz_m)]
        so = so + alpha * ds_o
        smats = [_herm(S + alpha * D) for S, D in zip(smats, ds_m)]
        y_gen = y_gen + alpha * dyg
        y_diag = [y + alpha * d for y, d in zip(y_diag, dyd)]
        if alpha < 1e-10:
            break
    else:
        it = settings.max_iterations
    if status == FAILURE and best[1] is not None:
        bo, bm, bd, bg = best[1]
        loose = settings.tolerance * settings.reduced_factor
        if bd < loose and bg < loose:
            po, pm = sf.polish(bo, bm)
            if _primal_residual(sf, po, pm, bnorm)[2] < settings.tolerance:
                o, mats, status = po, pm, OPTIMAL
    if status == FAILURE and pres > 1e-6:
        status = INFEASIBLE
    return o, mats, status, it, mu * sf.deg


def solve(prog: ConicProgram, settings: SolverSettings | None = None) -> Solution:
    """Solve ``prog``; on success the relative residuals and gap are below tolerance."""
    settings = settings or SolverSettings()
    sf = _Std(prog)
    o, mats, status, iters, gap = _primal_dual(sf, settings)
    if status != OPTIMAL:
        return Solution(status, iterations=iters, gap=gap)
    x = sf.lo + o[: sf.n_s]
    scalars = {n: float(v) for n, v in zip(sf.snames, x)}
    matrices = {n: _herm(X) for n, X in zip(sf.bnames, mats)}
    return Solution(OPTIMAL, scalars, matrices, prog.objective(scalars, matrices), iters, gap)


# ---------------------------------------------------------------------------

def real_embedding(H):
    """Real symmetric ``[[Re H, -Im H], [Im H, Re H]]`` of a Hermitian matrix."""
    H = np.asarray(H, dtype=complex)
    re, im = H.real, H.imag
    return np.block([[re, -im], [im, re]])


def hermitian_from_embedding(E):
    """Inverse of :func:`real_embedding` (averages the redundant blocks)."""
    E = np.asarray(E, dtype=float)
    m = E.shape[0] // 2
    re = 0.5 * (E[:m, :m] + E[m:, m:])
    im = 0.5 * (E[m:, :m] - E[:m, m:])
    return re + 1j * im
