"""A small dense SDP engine for the certificate programs.

Solves  minimize c^T y  subject to  F0 + sum_i y_i F_i <= 0 (as a matrix
inequality), optionally with y_i >= 0 on flagged variables. The engine is a
primal-dual path-following interior point method on the conic reformulation
(one dense semidefinite block plus a diagonal block for the sign
constraints), with Mehrotra predictor-corrector steps and dense Cholesky
Newton solves. All certificate programs have base dimension <= 7 and at
most a handful of variables, so a bespoke dense method is plenty.
"""

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .lmikit import max_eig, sym_check

DEFAULT_FEAS_TOL = 1e-8
DEFAULT_GAP_TOL = 1e-8
DEFAULT_MAX_ITER = 200

STATUS_OPTIMAL = "optimal"
STATUS_INFEASIBLE = "infeasible"
STATUS_MAX_ITERATIONS = "maxIterations"
STATUS_NUMERICAL_FAILURE = "numericalFailure"


@dataclass(frozen=True)
class LinearSdp:
    """min objective . y  s.t.  f0 + sum y_i fi[i] <= 0, flagged y_i >= 0."""
    objective: np.ndarray
    f0: np.ndarray
    fi: tuple
    nonneg: tuple

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float)
        f0 = sym_check(self.f0)
        fi = tuple(sym_check(m) for m in self.fi)
        nn = tuple(bool(v) for v in self.nonneg)
        if not np.isfinite(c).all():
            raise ValueError("objective must be finite")
        if len(fi) != c.size or len(nn) != c.size:
            raise ValueError("inconsistent variable count")
        for m in fi:
            if m.shape != f0.shape:
                raise ValueError("constraint matrices must share one shape")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "f0", f0)
        object.__setattr__(self, "fi", fi)
        object.__setattr__(self, "nonneg", nn)

    @property
    def dim(self):
        return self.f0.shape[0]

    @property
    def nvars(self):
        return self.objective.size


@dataclass(frozen=True)
class SdpSolution:
    status: str
    y: np.ndarray
    objective: float
    slack: float
    iterations: int
    pres: float = 0.0
    dres: float = 0.0
    gap: float = 0.0


def _is_pd(m):
    try:
        np.linalg.cholesky(m)
        return True
    except np.linalg.LinAlgError:
        return False


def _steplen(x, dx):
    """Largest step a with x + a*dx still positive definite (capped at 1e6)."""
    w = np.linalg.eigvalsh(x)
    xs = x + max(0.0, 1e-14 - w.min()) * np.eye(x.shape[0])
    lo = np.linalg.cholesky(xs)
    li = np.linalg.inv(lo)
    s = li @ dx @ li.T
    lam = np.linalg.eigvalsh(0.5 * (s + s.T)).min()
    return 1e6 if lam >= -1e-14 else -1.0 / lam


def _ipm(c, f0, fs, nonneg, feas_tol, gap_tol, max_iter):
    """Core predictor-corrector loop; returns (y, iters, pres, dres, gap, tag)."""
    m = len(fs)
    n0 = f0.shape[0]
    flagged = [i for i in range(m) if nonneg[i]]
    n = n0 + len(flagged)
    cmat = np.zeros((n, n))
    cmat[:n0, :n0] = -f0
    amats = []
    for i in range(m):
        a = np.zeros((n, n))
        a[:n0, :n0] = fs[i]
        if nonneg[i]:
            j = n0 + flagged.index(i)
            a[j, j] = -1.0
        amats.append(a)
    b = -np.asarray(c, float)

    # diagonal equilibration followed by per-variable and objective scaling
    t = np.abs(cmat) + sum(np.abs(a) for a in amats)
    deq = 1.0 / np.sqrt(np.maximum(np.sqrt((t ** 2).sum(axis=1)), 1e-10))
    dmat = np.diag(deq)
    cmat = dmat @ cmat @ dmat
    amats = [dmat @ a @ dmat for a in amats]
    s = np.array([max(np.linalg.norm(a), 1e-30) for a in amats])
    amats = [a / si for a, si in zip(amats, s)]
    b = b / s
    cscale = max(np.linalg.norm(cmat), 1.0)
    cmat = cmat / cscale
    b = b / cscale

    avec = np.stack([a.ravel() for a in amats])
    x = np.eye(n)
    z = np.eye(n)
    y = np.zeros(m)
    bn = 1.0 + np.linalg.norm(b)
    cn = 1.0 + np.linalg.norm(cmat)
    best = None
    tag = "maxiter"
    noimp = 0
    restarts = 0
    for it in range(max_iter):
        rp = b - avec @ x.ravel()
        rd = cmat - (y @ avec).reshape(n, n) - z
        mu = np.vdot(x, z) / n
        pres = np.linalg.norm(rp) / bn
        dres = np.linalg.norm(rd) / cn
        gap_abs = abs(np.vdot(cmat, x) - b @ y)
        gap = gap_abs / (1.0 + abs(b @ y) + abs(np.vdot(cmat, x)))
        err = max(pres, dres, gap)
        if best is None or err < 0.9999 * best[0]:
            best = (err, y.copy(), pres, dres, gap, it)
            noimp = 0
        else:
            noimp += 1
        if pres < feas_tol and dres < feas_tol and gap < gap_tol:
            tag = "converged"
            break
        if noimp > 30:
            tag = "stall"
            break
        try:
            w = np.linalg.eigvalsh(z)
            shift = 0.0 if w.min() > 0 else (1e-14 - w.min())
            zc = cho_factor(z + shift * np.eye(n))
            zi = cho_solve(zc, np.eye(n))
            zi = 0.5 * (zi + zi.T)
            zax = np.stack([(zi @ a @ x).ravel() for a in amats])
            mmat = avec @ zax.T
            mmat = 0.5 * (mmat + mmat.T)
            reg = 1e-13 * max(np.trace(mmat) / m, 1.0)
            mc = None
            for _ in range(8):
                try:
                    mc = cho_factor(mmat + reg * np.eye(m))
                    break
                except np.linalg.LinAlgError:
                    reg *= 100.0
            if mc is None:
                tag = "numfail"
                break

            def newton(sigmu, corr):
                base = sigmu * zi - x - zi @ (rd @ x + corr)
                rhs = rp - avec @ (0.5 * (base + base.T)).ravel()
                dy = cho_solve(mc, rhs)
                dz = rd - (dy @ avec).reshape(n, n)
                dxr = sigmu * zi - x - zi @ (dz @ x + corr)
                return dy, 0.5 * (dxr + dxr.T), dz

            dy_a, dx_a, dz_a = newton(0.0, 0.0)
            ap = min(_steplen(x, dx_a), 1.0)
            ad = min(_steplen(z, dz_a), 1.0)
            mu_aff = np.vdot(x + ap * dx_a, z + ad * dz_a) / n
            sigma = min(max((max(mu_aff, 0.0) / mu) ** 3, 1e-10), 1.0)
            dy, dx, dz = newton(sigma * mu, dz_a @ dx_a)
            ap = min(0.98 * _steplen(x, dx), 1.0)
            ad = min(0.98 * _steplen(z, dz), 1.0)
            while not _is_pd(x + ap * dx) and ap > 1e-12:
                ap *= 0.5
            while not _is_pd(z + ad * dz) and ad > 1e-12:
                ad *= 0.5
            if ap <= 1e-12 and ad <= 1e-12:
                tag = "stall"
                break
            x = x + ap * dx
            z = z + ad * dz
            y = y + ad * dy
            # centrality recovery: if mu collapsed far below the duality gap
            # the iterate is jammed on the boundary; lift it back toward the
            # central path and continue
            mun = np.vdot(x, z) / n
            gn = abs(np.vdot(cmat, x) - b @ y)
            if mun * n < 1e-3 * gn and restarts < 10:
                delta = np.sqrt(gn / n)
                x = x + delta * np.eye(n)
                z = z + delta * np.eye(n)
                restarts += 1
        except np.linalg.LinAlgError:
            tag = "numfail"
            break
    if best is None:
        return y * cscale / s, 0, np.inf, np.inf, np.inf, "numfail"
    err, yb, pres, dres, gap, itb = best
    if pres < feas_tol and dres < feas_tol and gap < gap_tol:
        tag = "converged"
    return yb * cscale / s, itb, pres, dres, gap, tag


def solve_sdp(problem, feas_tol=DEFAULT_FEAS_TOL, gap_tol=DEFAULT_GAP_TOL,
              max_iter=DEFAULT_MAX_ITER):
    """Solve a LinearSdp; the reported slack is an independent eigenvalue audit."""
    if not (0 < feas_tol <= 1e-2 and 0 < gap_tol <= 1e-2):
        raise ValueError("tolerances must lie in (0, 1e-2]")
    if problem.nvars == 0:
        slack = _audit_slack(problem.f0, (), np.zeros(0))
        status = STATUS_OPTIMAL if slack <= feas_tol else STATUS_INFEASIBLE
        return SdpSolution(status, np.zeros(0), 0.0, slack, 0)
    y, iters, pres, dres, gap, tag = _ipm(
        problem.objective, problem.f0, problem.fi, problem.nonneg,
        feas_tol, gap_tol, max_iter)
    slack = _audit_slack(problem.f0, problem.fi, y)
    obj = float(problem.objective @ y)
    if tag == "converged" and slack <= feas_tol:
        status = STATUS_OPTIMAL
    elif tag == "numfail":
        status = STATUS_NUMERICAL_FAILURE
    else:
        # distinguish an infeasible program from slow progress via the
        # margin problem: no y gives the LMI any slack
        t_star, _ = feasibility_margin(problem.f0, problem.fi, problem.nonneg,
                                       feas_tol)
        if t_star < -feas_tol:
            status = STATUS_INFEASIBLE
        else:
            status = STATUS_MAX_ITERATIONS
    return SdpSolution(status, y, obj, slack, iters, pres, dres, gap)


def _audit_slack(f0, fi, y):
    m = f0.copy()
    for yi, a in zip(y, fi):
        m = m + yi * a
    if m.shape[0] <= 16:
        return max_eig(m)
    return float(np.linalg.eigvalsh(m).max())


def feasibility_margin(f0, fi, nonneg, feas_tol=DEFAULT_FEAS_TOL,
                       gap_tol=DEFAULT_GAP_TOL, max_iter=DEFAULT_MAX_ITER):
    """Largest t with f0 + sum y_i fi[i] + t I <= 0; strict feasibility oracle.

    Returns (t_star, y). A positive t_star certifies strict feasibility and
    t_star < -feas_tol certifies infeasibility of the LMI.
    """
    f0 = sym_check(f0)
    fi = [sym_check(m) for m in fi]
    n = f0.shape[0]
    fs = list(fi) + [np.eye(n)]
    c = np.zeros(len(fs))
    c[-1] = -1.0
    nn = list(nonneg) + [False]
    y, iters, pres, dres, gap, tag = _ipm(c, f0, fs, nn, feas_tol, gap_tol,
                                          max_iter)
    return float(y[-1]), y[:-1]


def analytic_instances():
    """Three closed-form test programs with optimal values 1, 2, 2."""
    inst1 = LinearSdp(np.array([1.0]), np.array([[1.0]]),
                      (np.array([[-1.0]]),), (False,))
    inst2 = LinearSdp(np.array([-1.0]), np.array([[-2.0]]),
                      (np.array([[1.0]]),), (False,))
    inst3 = LinearSdp(
        np.array([1.0, 1.0]),
        np.array([[0.0, 1.0], [1.0, 0.0]]),
        (np.array([[-1.0, 0.0], [0.0, 0.0]]),
         np.array([[0.0, 0.0], [0.0, -1.0]])),
        (True, True))
    return [
        (inst1, 1.0),   # optimal y = 1
        (inst2, 2.0),   # optimal y = 2, objective -2
        (inst3, 2.0),   # optimal objective y1 + y2 = 2 at y = (1, 1)
    ]
