"""Matrix builders and eigenvalue utilities for rate certification.

Everything here is a small dense symmetric matrix: the quadratic-constraint
blocks Q(m, L), their 4x4 sandwiched versions Q1..Q3, the Lyapunov difference
matrices W0/W1/W2, the Schur-complement extension, and the data of the dual
rate program. All builders are pure functions of their arguments.
"""

import math
from dataclasses import dataclass

import numpy as np

KRON_DIM_CAP = 64


@dataclass(frozen=True)
class RegularityClass:
    """Strong convexity modulus m and Lipschitz gradient constant L.

    L may be math.inf for nonsmooth functions, in which case 1/L = 0.
    """
    m: float
    L: float

    def __post_init__(self):
        if not (self.m >= 0):
            raise ValueError("m must be >= 0")
        if not (self.L > 0):
            raise ValueError("L must be > 0")
        if self.m > self.L:
            raise ValueError("m must not exceed L")

    @property
    def smooth(self):
        return math.isfinite(self.L)


@dataclass(frozen=True)
class LmiBase:
    """A symmetric base matrix representing base kron I_d."""
    base: np.ndarray
    kron_factor: int = 1

    def __post_init__(self):
        b = np.asarray(self.base, dtype=float)
        if b.ndim != 2 or b.shape[0] != b.shape[1]:
            raise ValueError("base must be square")
        if not np.allclose(b, b.T, atol=0):
            raise ValueError("base must be symmetric")
        if self.kron_factor < 1:
            raise ValueError("kron_factor must be >= 1")
        object.__setattr__(self, "base", b)

    def full(self):
        return kron_identity(self.base, self.kron_factor)


def sym_check(m):
    """Validate and return a finite symmetric matrix."""
    m = np.asarray(m, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("matrix must be square")
    if not np.isfinite(m).all():
        raise ValueError("matrix entries must be finite")
    if not np.array_equal(m, m.T):
        m = 0.5 * (m + m.T)
    return m


def qc_base(cls):
    """The 2x2 quadratic-constraint matrix Q(m, L).

    Entries -mL/(m+L), 1/2, -1/(m+L); for infinite L the limits -m and 0.
    """
    m, L = cls.m, cls.L
    if math.isinf(L):
        return np.array([[-m, 0.5], [0.5, 0.0]])
    return np.array([[-m * L / (m + L), 0.5], [0.5, -1.0 / (m + L)]])


def _selectors(alpha):
    s1 = np.array([[alpha, 0.0, 0.0, 0.0], [-1.0, 0.0, 0.0, 1.0]])
    s2 = np.array([[alpha, 0.0, 0.0, 0.0], [2.0, -1.0, 0.0, -1.0]])
    s3 = np.array([[0.0, 0.0, alpha, 0.0], [0.0, 1.0, -1.0, 0.0]])
    return s1, s2, s3


def build_qc_triplet(alpha, f, g, h):
    """The three sandwiched constraint matrices (Q1 for g, Q2 for h, Q3 for f).

    Each is S^T Q(m, L) S for the selector S picking the right deviation
    combination out of v = (x_B - x_B*, y - y*, x_A - x_A*, z - z*).
    """
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    s1, s2, s3 = _selectors(alpha)
    q1 = s1.T @ qc_base(g) @ s1
    q2 = s2.T @ qc_base(h) @ s2
    q3 = s3.T @ qc_base(f) @ s3
    return LmiBase(q1), LmiBase(q2), LmiBase(q3)


def build_w0(lam, theta, alpha):
    """The 4x4 Lyapunov difference matrix of the residual-rate certificate."""
    if not (lam > 0 and theta > 0 and alpha > 0):
        raise ValueError("lam, theta, alpha must be positive")
    a = lam ** 2 + theta / alpha ** 2
    w = np.array([
        [a, 0.0, -a, -lam],
        [0.0, 0.0, 0.0, 0.0],
        [-a, 0.0, a, lam],
        [-lam, 0.0, lam, 0.0],
    ])
    return LmiBase(w)


def build_w1(lam, theta, alpha, Lf, Lh):
    """The 4x4 Lyapunov difference matrix of the objective-rate certificate."""
    if not (lam > 0 and alpha > 0 and theta >= 0):
        raise ValueError("lam, alpha must be positive and theta nonnegative")
    if not (math.isfinite(Lf) and math.isfinite(Lh) and Lf > 0 and Lh > 0):
        raise ValueError("Lf and Lh must be finite and positive")
    c = 1.0 / (alpha ** 2 * Lh)
    a_blk = np.array([
        [lam ** 2 + (1.0 / alpha + Lf / 2.0 - 2.0 * c) * theta, theta * c],
        [theta * c, -theta * c / 2.0],
    ])
    b_blk = np.array([
        [-lam ** 2 - theta * (0.5 / alpha + Lf / 2.0), -lam + theta * c],
        [0.0, -theta * c / 2.0],
    ])
    d_blk = np.array([
        [lam ** 2 + theta * Lf / 2.0, lam],
        [lam, -theta * c / 2.0],
    ])
    w = np.block([[a_blk, b_blk], [b_blk.T, d_blk]])
    return LmiBase(w)


def build_w2(lam, rho2):
    """The 4x4 Lyapunov difference matrix of the linear-rate certificate."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    if not (0 < rho2 <= 1):
        raise ValueError("rho2 must lie in (0, 1]")
    w = np.array([
        [lam ** 2, 0.0, -lam ** 2, -lam],
        [0.0, 0.0, 0.0, 0.0],
        [-lam ** 2, 0.0, lam ** 2, lam],
        [-lam, 0.0, lam, 1.0 - rho2],
    ])
    return LmiBase(w)


def eta_vector(lam):
    return np.array([lam, 0.0, -lam, 0.0])


def schur_extend(m, lam):
    """Border a 4x4 matrix with eta = (lam, 0, -lam, 0) and corner -1.

    The caller passes m with the eta eta^T part already removed; the 5x5
    result is negative semidefinite iff m + eta eta^T is.
    """
    m = sym_check(m)
    if m.shape != (4, 4):
        raise ValueError("m must be 4x4")
    eta = eta_vector(lam)
    out = np.empty((5, 5))
    out[:4, :4] = m
    out[:4, 4] = eta
    out[4, :4] = eta
    out[4, 4] = -1.0
    return out


def build_dual_data(lam):
    """Data (W_O, W_I, G) of the dual rate program at relaxation lam."""
    if not lam > 0:
        raise ValueError("lam must be positive")
    w_o = np.array([
        [lam ** 2, 0.0, -lam ** 2, -lam],
        [0.0, 0.0, 0.0, 0.0],
        [-lam ** 2, 0.0, lam ** 2, lam],
        [-lam, 0.0, lam, 1.0],
    ])
    w_i = np.zeros((4, 4))
    w_i[3, 3] = 1.0
    g = np.array([
        [0.0, 0.0, 1.0, 0.0],
        [-1.0, 0.0, 2.0, -1.0],
        [0.0, 1.0, 0.0, 0.0],
        [1.0, 0.0, 0.0, 0.0],
    ])
    return LmiBase(w_o), LmiBase(w_i), g


def max_eig(m):
    """Largest eigenvalue of a symmetric matrix by cyclic Jacobi rotations.

    Deterministic and independent of LAPACK; intended for n <= 16. Runs at
    most 50 sweeps, stopping once every off-diagonal entry is below
    1e-14 * frobenius_norm(m).
    """
    a = sym_check(m).copy()
    n = a.shape[0]
    if n > 16:
        raise ValueError("max_eig supports n <= 16")
    if n == 1:
        return float(a[0, 0])
    thr = 1e-14 * np.linalg.norm(a)
    if thr == 0.0:
        return 0.0
    for _ in range(50):
        off = 0.0
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= thr:
                    continue
                off = max(off, abs(apq))
                tau = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = math.copysign(1.0, tau) / (abs(tau) + math.hypot(1.0, tau))
                c = 1.0 / math.hypot(1.0, t)
                s = t * c
                rp = a[p, :].copy()
                rq = a[q, :].copy()
                a[p, :] = c * rp - s * rq
                a[q, :] = s * rp + c * rq
                cp = a[:, p].copy()
                cq = a[:, q].copy()
                a[:, p] = c * cp - s * cq
                a[:, q] = s * cp + c * cq
                a[p, q] = 0.0
                a[q, p] = 0.0
        if off <= thr:
            break
    return float(np.max(np.diag(a)))


def kron_identity(base, d):
    """The Kronecker product base kron I_d (cross-validation of the d=1 use)."""
    base = sym_check(base)
    if d < 1:
        raise ValueError("d must be >= 1")
    if base.shape[0] * d > KRON_DIM_CAP:
        raise ValueError("requested dimension exceeds cap")
    if d == 1:
        return base.copy()
    return np.kron(base, np.eye(d))
