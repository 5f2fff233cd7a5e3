"""Certificate producers for the three convergence regimes.

Sublinear residual rate (feasibility of W0 + sum sigma_i Q_i <= 0, theta
maximized), sublinear objective rate (the Schur-extended W1 program), linear
rate (the Schur-extended W2 program) and its dual cross-check, stepsize
sweeps, and empirical Lyapunov validation of certificates on solver traces.
"""

import json
import math
from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space

from . import sdpcore
from .lmikit import (LmiBase, RegularityClass, build_dual_data, build_qc_triplet,
                     build_w0, build_w1, build_w2, eta_vector, max_eig,
                     schur_extend)

LAM_MIN = 1e-6
LAM_MAX = 4.0

MODE_RESIDUAL = "sublinearResidual"
MODE_OBJECTIVE = "sublinearObjective"
MODE_LINEAR = "linear"

SENTINEL_RATE = {MODE_RESIDUAL: 0.0, MODE_OBJECTIVE: 0.0, MODE_LINEAR: 1.0}


class CertificationError(Exception):
    pass


@dataclass(frozen=True)
class ProblemClasses:
    f: RegularityClass
    g: RegularityClass
    h: RegularityClass


@dataclass(frozen=True)
class RateCertificate:
    mode: str
    alpha: float
    lam: float
    sigma: tuple
    margin: float
    provenance: str
    theta: float = None
    rho2: float = None

    def rate(self):
        return self.rho2 if self.mode == MODE_LINEAR else self.theta


def certificate_to_json(cert):
    def enc(v):
        if v is None:
            return None
        return "inf" if math.isinf(v) else float(v)
    doc = {
        "mode": cert.mode,
        "alpha": cert.alpha,
        "lambda": cert.lam,
        "sigma": [enc(s) for s in cert.sigma],
        "margin": cert.margin,
        "provenance": cert.provenance,
    }
    if cert.mode == MODE_LINEAR:
        doc["rho2"] = cert.rho2
    else:
        doc["theta"] = cert.theta
    return json.dumps(doc, indent=2)


def certificate_from_json(text):
    doc = json.loads(text)
    def dec(v):
        return math.inf if v == "inf" else float(v)
    return RateCertificate(
        mode=doc["mode"], alpha=doc["alpha"], lam=doc["lambda"],
        sigma=tuple(dec(s) for s in doc["sigma"]), margin=doc["margin"],
        provenance=doc["provenance"], theta=doc.get("theta"),
        rho2=doc.get("rho2"))


def check_assumption1(classes):
    """Some strong convexity, some smoothness of f or g, and smooth h."""
    m_sum = classes.f.m + classes.g.m + classes.h.m
    inv = (0.0 if math.isinf(classes.f.L) else 1.0 / classes.f.L) + \
          (0.0 if math.isinf(classes.g.L) else 1.0 / classes.g.L)
    h_ok = not math.isinf(classes.h.L)
    return m_sum > 0 and inv > 0 and h_ok


def _qc_mats(alpha, classes):
    q1, q2, q3 = build_qc_triplet(alpha, classes.f, classes.g, classes.h)
    return [q1.base, q2.base, q3.base]


def _reduce_nsd(mats, dim):
    """Drop matrices that are NSD on the running subspace.

    An NSD constraint matrix lets its multiplier grow without bound, so the
    optimum lives in the limit where the LMI is projected onto the orthogonal
    complement of the matrix's negative directions. Returns (kept indices,
    orthonormal columns U of the final subspace).
    """
    u = np.eye(dim)
    keep = list(range(len(mats)))
    changed = True
    while changed and u.shape[1] > 0:
        changed = False
        for i in list(keep):
            m = u.T @ mats[i] @ u
            ev, vecs = np.linalg.eigh(m)
            tol = 1e-10 * max(np.abs(ev).max(), 1e-30)
            if ev[-1] <= tol:
                keep.remove(i)
                neg = vecs[:, ev < -tol]
                if neg.shape[1] > 0:
                    w = null_space(neg.T)
                    u = u @ w if w.shape[1] > 0 else u[:, :0]
                changed = True
                break
    return keep, u


def symbolic_sublinear(lam, Lh):
    """Closed-form residual-rate certificate for one Lipschitz operator."""
    if not (0 < lam < 2):
        raise CertificationError("lam must lie in (0, 2)")
    if not (math.isfinite(Lh) and Lh > 0):
        raise CertificationError("Lh must be finite and positive")
    alpha = (2.0 - lam) / Lh
    theta = (2.0 - lam) ** 3 * lam / (2.0 * Lh ** 2)
    sig = 2.0 * lam / alpha
    classes = _case1_classes(Lh)
    margin = _audit_residual(alpha, lam, theta, (sig, sig, sig), classes)
    return RateCertificate(
        mode=MODE_RESIDUAL, alpha=alpha, lam=lam, sigma=(sig, sig, sig),
        margin=margin, provenance="symbolic", theta=theta)


def _case1_classes(Lh):
    return ProblemClasses(RegularityClass(0.0, math.inf),
                          RegularityClass(0.0, math.inf),
                          RegularityClass(0.0, Lh))


def _audit_residual(alpha, lam, theta, sigma, classes):
    m = build_w0(lam, theta, alpha).base.copy()
    for s, q in zip(sigma, _qc_mats(alpha, classes)):
        m = m + s * q
    return max_eig(m)


def _require_case1(classes):
    c = classes
    ok = (c.f.m == 0 and c.g.m == 0 and c.h.m == 0
          and math.isinf(c.f.L) and math.isinf(c.g.L) and c.h.L < math.inf)
    if not ok:
        raise CertificationError(
            "residual-rate certification needs m = 0 throughout, "
            "nonsmooth f and g, and Lipschitz h")


_RESID_P = np.array([
    [1.0, 0.0, -1.0, 0.0],
    [0.0, 0.0, 0.0, 0.0],
    [-1.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 0.0],
])

_LAM_LIN = np.array([
    [0.0, 0.0, 0.0, -1.0],
    [0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 1.0],
    [-1.0, 0.0, 1.0, 0.0],
])


def certify_residual_rate(alpha, lam, classes, feas_tol=None, gap_tol=None,
                          max_iter=None):
    """Maximal theta with W0 + sum sigma_i Q_i <= 0 at fixed (alpha, lam).

    With lam=None the relaxation parameter is optimized jointly through the
    Schur-extended form, searched over [LAM_MIN, LAM_MAX].
    """
    _require_case1(classes)
    if not alpha > 0:
        raise CertificationError("alpha must be positive")
    kw = _solver_kwargs(feas_tol, gap_tol, max_iter)
    qs = _qc_mats(alpha, classes)
    if lam is not None:
        lam2 = np.zeros((4, 4))
        lam2[np.ix_([0, 2], [0, 2])] = lam ** 2 * np.array([[1, -1], [-1, 1]])
        f0 = lam2 + lam * _LAM_LIN
        fs = [_RESID_P / alpha ** 2] + qs
        prob = sdpcore.LinearSdp(
            np.array([-1.0] + [0.0] * 3), f0, tuple(fs), (True,) * 4)
        sol = sdpcore.solve_sdp(prob, **kw)
        theta, sigma = float(sol.y[0]), tuple(float(v) for v in sol.y[1:])
        lam_out = lam
    else:
        k = 5
        def pad(m, lamcoef=0.0):
            p = np.zeros((k + 2, k + 2))
            p[:k, :k] = m
            p[k, k] = -lamcoef
            p[k + 1, k + 1] = lamcoef
            return p
        f0 = pad(np.diag([0.0, 0.0, 0.0, 0.0, -1.0]))
        f0[k, k] = LAM_MIN
        f0[k + 1, k + 1] = -LAM_MAX
        f_theta = pad(_emb5(_RESID_P / alpha ** 2))
        f_lam = pad(_emb5(_LAM_LIN) + _border_eta(), 1.0)
        fs = [f_theta, f_lam] + [pad(_emb5(q)) for q in qs]
        prob = sdpcore.LinearSdp(
            np.array([-1.0, 0.0, 0.0, 0.0, 0.0]), f0, tuple(fs),
            (True, False, True, True, True))
        sol = sdpcore.solve_sdp(prob, **kw)
        theta = float(sol.y[0])
        lam_out = float(min(max(sol.y[1], LAM_MIN), LAM_MAX))
        sigma = tuple(float(v) for v in sol.y[2:])
    if sol.status == sdpcore.STATUS_INFEASIBLE or theta <= 0:
        raise CertificationError("no positive theta at this (alpha, lam)")
    margin = _audit_residual(alpha, lam_out, theta, sigma, classes)
    return RateCertificate(
        mode=MODE_RESIDUAL, alpha=alpha, lam=lam_out, sigma=sigma,
        margin=margin, provenance="sdp", theta=theta)


def _emb5(m):
    p = np.zeros((5, 5))
    p[:4, :4] = m
    return p


def _border_eta():
    """d/d lam of the Schur border for eta = (lam, 0, -lam, 0)."""
    p = np.zeros((5, 5))
    p[0, 4] = p[4, 0] = 1.0
    p[2, 4] = p[4, 2] = -1.0
    return p


def _solver_kwargs(feas_tol, gap_tol, max_iter):
    kw = {}
    if feas_tol is not None:
        kw["feas_tol"] = feas_tol
    if gap_tol is not None:
        kw["gap_tol"] = gap_tol
    if max_iter is not None:
        kw["max_iter"] = max_iter
    return kw


def certify_objective_rate(alpha, Lf, Lh, feas_tol=None, gap_tol=None,
                           max_iter=None):
    """Maximal theta for the objective-value rate with smooth f and h.

    Solves the Schur-extended program jointly over (theta, lam, sigma),
    lam searched over [LAM_MIN, LAM_MAX].
    """
    if not alpha > 0:
        raise CertificationError("alpha must be positive")
    if not (math.isfinite(Lf) and math.isfinite(Lh) and Lf > 0 and Lh > 0):
        raise CertificationError("Lf and Lh must be finite and positive")
    classes = ProblemClasses(RegularityClass(0.0, Lf),
                             RegularityClass(0.0, math.inf),
                             RegularityClass(0.0, Lh))
    qs = _qc_mats(alpha, classes)
    lam_ref = 1.0
    eta2 = np.outer(eta_vector(lam_ref), eta_vector(lam_ref))
    t_coef = build_w1(lam_ref, 1.0, alpha, Lf, Lh).base \
        - build_w1(lam_ref, 0.0, alpha, Lf, Lh).base
    lam_coef = build_w1(lam_ref, 0.0, alpha, Lf, Lh).base - eta2
    k = 5
    def pad(m, lamcoef=0.0):
        p = np.zeros((k + 2, k + 2))
        p[:k, :k] = m
        p[k, k] = -lamcoef
        p[k + 1, k + 1] = lamcoef
        return p
    f0 = pad(np.diag([0.0, 0.0, 0.0, 0.0, -1.0]))
    f0[k, k] = LAM_MIN
    f0[k + 1, k + 1] = -LAM_MAX
    fs = [pad(_emb5(t_coef)),
          pad(_emb5(lam_coef) + _border_eta(), 1.0)] + \
         [pad(_emb5(q)) for q in qs]
    prob = sdpcore.LinearSdp(
        np.array([-1.0, 0.0, 0.0, 0.0, 0.0]), f0, tuple(fs),
        (True, False, True, True, True))
    sol = sdpcore.solve_sdp(prob, **_solver_kwargs(feas_tol, gap_tol, max_iter))
    theta = float(sol.y[0])
    lam = float(min(max(sol.y[1], LAM_MIN), LAM_MAX))
    sigma = tuple(float(v) for v in sol.y[2:])
    if sol.status == sdpcore.STATUS_INFEASIBLE or theta <= 0:
        raise CertificationError("no positive theta at this alpha")
    m2 = build_w1(lam, theta, alpha, Lf, Lh).base - \
        np.outer(eta_vector(lam), eta_vector(lam))
    for s, q in zip(sigma, qs):
        m2 = m2 + s * q
    margin = max_eig(schur_extend(m2, lam))
    return RateCertificate(
        mode=MODE_OBJECTIVE, alpha=alpha, lam=lam, sigma=sigma,
        margin=margin, provenance="sdp", theta=theta)


def _linear_w2_const(lam):
    """W2 at rho2 = 0 (the lam-dependent part plus the constant 1)."""
    return np.array([
        [lam ** 2, 0.0, -lam ** 2, -lam],
        [0.0, 0.0, 0.0, 0.0],
        [-lam ** 2, 0.0, lam ** 2, lam],
        [-lam, 0.0, lam, 1.0],
    ])


_ERHO = np.diag([0.0, 0.0, 0.0, 1.0])


def linear_rate_value(alpha, classes, lam=None, feas_tol=None, gap_tol=None,
                      max_iter=None):
    """Optimal rho2 of the linear-rate program, unclipped.

    Returns (rho2, lam, sigma, kept, status): sigma holds multipliers for the
    QCs in kept; eliminated degenerate QCs take the value inf. With lam=None
    the relaxation is optimized jointly (Schur extension, lam in
    [LAM_MIN, LAM_MAX]); otherwise lam is pinned.
    """
    if not alpha > 0:
        raise CertificationError("alpha must be positive")
    if not check_assumption1(classes):
        raise CertificationError("assumption1 violated")
    kw = _solver_kwargs(feas_tol, gap_tol, max_iter)
    qs = _qc_mats(alpha, classes)
    keep, u = _reduce_nsd(qs, 4)
    reg = [qs[i] for i in keep]
    if lam is not None:
        f0 = u.T @ _linear_w2_const(lam) @ u
        fs = [u.T @ (-_ERHO) @ u] + [u.T @ q @ u for q in reg]
        c = np.zeros(len(fs))
        c[0] = 1.0
        prob = sdpcore.LinearSdp(c, f0, tuple(fs), (True,) * len(fs))
        sol = sdpcore.solve_sdp(prob, **kw)
        rho2 = float(sol.y[0])
        sigma = tuple(float(v) for v in sol.y[1:])
        lam_out = lam
    else:
        r = u.shape[1]
        ubig = np.zeros((5, r + 1))
        ubig[:4, :r] = u
        ubig[4, r] = 1.0
        k = r + 1
        f0_5 = np.zeros((5, 5))
        f0_5[3, 3] = 1.0
        f0_5[4, 4] = -1.0
        frho = np.zeros((5, 5))
        frho[3, 3] = -1.0
        flam = _emb5(_LAM_LIN) + _border_eta()
        def pad(m, lamcoef=0.0):
            p = np.zeros((k + 2, k + 2))
            p[:k, :k] = ubig.T @ m @ ubig
            p[k, k] = -lamcoef
            p[k + 1, k + 1] = lamcoef
            return p
        f0 = pad(f0_5)
        f0[k, k] = LAM_MIN
        f0[k + 1, k + 1] = -LAM_MAX
        fs = [pad(frho), pad(flam, 1.0)] + [pad(_emb5(q)) for q in reg]
        c = np.zeros(len(fs))
        c[0] = 1.0
        prob = sdpcore.LinearSdp(
            c, f0, tuple(fs), (True, False) + (True,) * len(reg))
        sol = sdpcore.solve_sdp(prob, **kw)
        rho2 = float(sol.y[0])
        lam_out = float(min(max(sol.y[1], LAM_MIN), LAM_MAX))
        sigma = tuple(float(v) for v in sol.y[2:])
    return rho2, lam_out, sigma, keep, sol.status


def _expand_sigma(sigma, keep):
    full = [math.inf] * 3
    for s, i in zip(sigma, keep):
        full[i] = s
    return tuple(full)


def audit_linear(alpha, lam, rho2, sigma, classes):
    """Feasibility margin of a linear-rate certificate.

    Infinite multipliers are handled in the limit: the LMI is checked on the
    subspace orthogonal to the negative directions of the eliminated QCs.
    """
    qs = _qc_mats(alpha, classes)
    m = _linear_w2_const(lam).copy()
    m[3, 3] = 1.0 - rho2
    any_inf = False
    for s, q in zip(sigma, qs):
        if math.isinf(s):
            any_inf = True
        else:
            m = m + s * q
    if any_inf:
        _, u = _reduce_nsd(qs, 4)
        return max_eig(u.T @ m @ u)
    return max_eig(m)


def certify_linear_rate(alpha, classes, lam=None, feas_tol=None, gap_tol=None,
                        max_iter=None):
    """Linear-rate certificate rho2 < 1, jointly over lam unless pinned."""
    rho2, lam_out, sigma, keep, status = linear_rate_value(
        alpha, classes, lam, feas_tol, gap_tol, max_iter)
    if status == sdpcore.STATUS_INFEASIBLE:
        raise CertificationError("linear-rate program infeasible")
    if not rho2 < 1.0:
        raise CertificationError("no linear certificate at this alpha")
    full_sigma = _expand_sigma(sigma, keep)
    margin = audit_linear(alpha, lam_out, rho2, full_sigma, classes)
    return RateCertificate(
        mode=MODE_LINEAR, alpha=alpha, lam=lam_out, sigma=full_sigma,
        margin=margin, provenance="sdp", rho2=rho2)


def dual_linear_rate(alpha, lam, classes, feas_tol=None, gap_tol=None,
                     max_iter=None, return_z=False):
    """Optimal value of the dual rate program at fixed (alpha, lam).

    Maximizes Tr(G^T W_O G Z) over Z >= 0 with the trace normalization and
    the scalar QC inequalities. Degenerate (NSD) QC matrices force Z onto
    their null directions and are eliminated up front.
    """
    if not check_assumption1(classes):
        raise CertificationError("assumption1 violated")
    qs = _qc_mats(alpha, classes)
    w_o, w_i, gm = build_dual_data(lam)
    p = gm.T @ w_o.base @ gm
    rs = [gm.T @ q @ gm for q in qs]
    keep, u = _reduce_nsd(rs, 4)
    n = u.shape[1]
    if n == 0:
        raise CertificationError("dual feasible set is trivial")
    pr = u.T @ p @ u
    rr = [u.T @ rs[i] @ u for i in keep]
    nmat = u.T @ (gm.T @ w_i.base @ gm) @ u
    pairs = [(i, j) for i in range(n) for j in range(i, n)]
    vecs = []
    for (i, j) in pairs:
        bmat = np.zeros((n, n))
        bmat[i, j] = 1.0
        bmat[j, i] = 1.0
        vecs.append((bmat, np.trace(nmat @ bmat)))
    k0 = max(range(len(vecs)), key=lambda k: abs(vecs[k][1]))
    t0 = vecs[k0][1]
    if abs(t0) < 1e-12:
        raise CertificationError("normalization unreachable on the subspace")
    z0 = vecs[k0][0] / t0
    basis = [b - (t / t0) * vecs[k0][0]
             for k, (b, t) in enumerate(vecs) if k != k0]
    nb = len(rr)
    def emb(z):
        f = np.zeros((n + nb, n + nb))
        f[:n, :n] = -z
        for j, rm in enumerate(rr):
            f[n + j, n + j] = -np.trace(rm @ z)
        return f
    f0 = emb(z0)
    fs = [emb(b) for b in basis]
    c = np.array([-np.trace(pr @ b) for b in basis])
    prob = sdpcore.LinearSdp(c, f0, tuple(fs), (False,) * len(basis))
    sol = sdpcore.solve_sdp(prob, **_solver_kwargs(feas_tol, gap_tol, max_iter))
    if sol.status == sdpcore.STATUS_INFEASIBLE:
        raise CertificationError("dual program infeasible")
    zred = z0 + sum(yk * b for yk, b in zip(sol.y, basis))
    val = float(np.trace(pr @ zred))
    if return_z:
        return val, u @ zred @ u.T
    return val


def sweep_alpha(alpha_grid, classes, mode, lam=None, **solver_kw):
    """Rate curve over a stepsize grid plus the grid-optimal point.

    Infeasible points carry the sentinel rate (1 for linear, 0 for the
    sublinear modes) and feasible=False in the curve records.
    """
    grid = list(alpha_grid)
    if not grid:
        raise CertificationError("empty alpha grid")
    curve = []
    for alpha in grid:
        try:
            if mode == MODE_LINEAR:
                cert = certify_linear_rate(alpha, classes, lam=lam, **solver_kw)
            elif mode == MODE_RESIDUAL:
                cert = certify_residual_rate(alpha, lam, classes, **solver_kw)
            elif mode == MODE_OBJECTIVE:
                cert = certify_objective_rate(alpha, classes.f.L, classes.h.L,
                                              **solver_kw)
            else:
                raise ValueError(f"unknown mode {mode}")
            curve.append({"alpha": alpha, "rate": cert.rate(),
                          "lambda": cert.lam, "feasible": True})
        except CertificationError:
            curve.append({"alpha": alpha, "rate": SENTINEL_RATE[mode],
                          "lambda": None, "feasible": False})
    feas = [rec for rec in curve if rec["feasible"]]
    if not feas:
        raise CertificationError("no feasible point on the alpha grid")
    if mode == MODE_LINEAR:
        best = min(feas, key=lambda rec: (rec["rate"], rec["alpha"]))
    else:
        best = max(feas, key=lambda rec: (rec["rate"], -rec["alpha"]))
    return curve, (best["alpha"], best["rate"])


def empirical_lyapunov_check(trace, fixed_point, cert, fstar=None,
                             rel_tol=1e-7, bound_tol=1e-6):
    """Validate a certificate's Lyapunov decrease and rate bound on a trace.

    Returns a report dict with per-iteration violations (empty means pass)
    and the cumulative rate-bound comparison.
    """
    zstar = np.asarray(fixed_point, dtype=float)
    zs = np.asarray(trace.z)
    if zs.shape[1] != zstar.size:
        raise ValueError("dimension mismatch between trace and fixed point")
    dist2 = ((zs - zstar) ** 2).sum(axis=1)
    violations = []
    bound_ok = True
    detail = {}
    if cert.mode == MODE_LINEAR:
        rho2 = cert.rho2
        # iterates at the round-off floor carry no rate information
        floor = (100.0 * np.finfo(float).eps) ** 2 * (1.0 + zstar @ zstar)
        for k in range(len(dist2) - 1):
            lim = rho2 * dist2[k]
            if dist2[k + 1] > lim + rel_tol * max(dist2[k], 1e-300) \
                    and dist2[k + 1] > floor:
                violations.append(k)
        k_arr = np.arange(len(dist2))
        bound = dist2[0] * rho2 ** k_arr * (1.0 + bound_tol)
        bound_ok = bool((dist2 <= bound).all())
        detail["max_ratio"] = float(
            np.sqrt(np.max(dist2[1:] / np.maximum(dist2[:-1], 1e-300))))
    elif cert.mode == MODE_RESIDUAL:
        r2 = np.asarray(trace.residual_norm2)
        theta = cert.theta
        v = dist2[:len(r2) + 1] + theta * np.concatenate(
            [[0.0], np.cumsum(r2)])[:len(dist2)]
        for k in range(len(v) - 1):
            if v[k + 1] > v[k] + rel_tol * max(v[k], 1e-300):
                violations.append(k)
        running_min = np.minimum.accumulate(r2)
        ks = np.arange(1, len(r2) + 1)
        bound_ok = bool(
            (running_min * theta * ks <= dist2[0] * (1.0 + bound_tol)).all())
        detail["worst_product"] = float(np.max(running_min * theta * ks))
    elif cert.mode == MODE_OBJECTIVE:
        if fstar is None:
            raise ValueError("objective mode needs the optimal value fstar")
        fgap = np.asarray(trace.objective) - fstar
        theta = cert.theta
        v = dist2[:len(fgap) + 1] + theta * np.concatenate(
            [[0.0], np.cumsum(fgap)])[:len(dist2)]
        for k in range(len(v) - 1):
            if v[k + 1] > v[k] + rel_tol * max(v[k], 1e-300):
                violations.append(k)
        running_min = np.minimum.accumulate(fgap)
        ks = np.arange(1, len(fgap) + 1)
        bound_ok = bool(
            (running_min * theta * ks <= dist2[0] * (1.0 + bound_tol)).all())
        detail["worst_product"] = float(np.max(running_min * theta * ks))
    else:
        raise ValueError(f"unknown mode {cert.mode}")
    return {"violations": violations, "bound_ok": bound_ok,
            "initial_dist2": float(dist2[0]), **detail}
