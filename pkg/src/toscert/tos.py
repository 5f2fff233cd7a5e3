"""Three-operator splitting iteration with oracles and tracing.

One step reads
    x_B = prox_{alpha g}(z)
    y   = 2 x_B - z - alpha grad_h(x_B)
    x_A = prox_{alpha f}(y)
    z'  = z + lam (x_A - x_B)
and the optimality residual along iterates is (x_B - x_A)/alpha.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import cho_factor, cho_solve


@dataclass(frozen=True)
class OperatorOracle:
    """prox_f(alpha, x), prox_g(alpha, x), grad_h(x) plus declared classes."""
    prox_f: callable
    prox_g: callable
    grad_h: callable
    classes: object = None
    objective: callable = None


@dataclass(frozen=True)
class TosConfig:
    alpha: float
    lam: float
    max_iter: int = 1000
    residual_tol: float = 0.0

    def __post_init__(self):
        if not (self.alpha > 0 and self.lam > 0):
            raise ValueError("alpha and lam must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclass
class IterateTrace:
    alpha: float
    lam: float
    z: list = field(default_factory=list)
    x_b: list = field(default_factory=list)
    y: list = field(default_factory=list)
    x_a: list = field(default_factory=list)
    residual_norm2: list = field(default_factory=list)
    objective: list = field(default_factory=list)

    def gap_norm2(self):
        """Per-iteration ||x_B - x_A||^2."""
        return [self.alpha ** 2 * r for r in self.residual_norm2]

    def to_csv(self, path, zstar=None):
        zs = np.asarray(self.z)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "residual_norm2", "min_residual_norm2_so_far",
                        "dist_to_zstar2", "objective"])
            running = math.inf
            for k, r2 in enumerate(self.residual_norm2):
                running = min(running, r2)
                dist2 = ""
                if zstar is not None:
                    dist2 = float(((zs[k] - zstar) ** 2).sum())
                obj = self.objective[k] if k < len(self.objective) else ""
                if obj is None:
                    obj = ""
                w.writerow([k, r2, running, dist2, obj])


def residual(x_b, x_a, alpha):
    """Optimality residual (x_B - x_A)/alpha."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return (np.asarray(x_b, float) - np.asarray(x_a, float)) / alpha


def tos_step(z, oracle, config):
    """One splitting step; returns (z_next, record of intermediates)."""
    alpha, lam = config.alpha, config.lam
    x_b = oracle.prox_g(alpha, z)
    y = 2.0 * x_b - z - alpha * oracle.grad_h(x_b)
    x_a = oracle.prox_f(alpha, y)
    z_next = z + lam * (x_a - x_b)
    if not np.isfinite(z_next).all():
        raise FloatingPointError("oracle produced non-finite values")
    return z_next, (x_b, y, x_a)


def run(oracle, z0, config):
    """Iterate until the residual norm drops below residual_tol or max_iter."""
    z = np.asarray(z0, dtype=float).copy()
    if not np.isfinite(z).all():
        raise ValueError("z0 must be finite")
    trace = IterateTrace(alpha=config.alpha, lam=config.lam)
    for _ in range(config.max_iter):
        z_next, (x_b, y, x_a) = tos_step(z, oracle, config)
        r = residual(x_b, x_a, config.alpha)
        rnorm2 = float(r @ r)
        trace.z.append(z.copy())
        trace.x_b.append(x_b)
        trace.y.append(y)
        trace.x_a.append(x_a)
        trace.residual_norm2.append(rnorm2)
        if oracle.objective is not None:
            trace.objective.append(oracle.objective(x_b))
        z = z_next
        if math.sqrt(rnorm2) <= config.residual_tol:
            break
    trace.z.append(z.copy())
    return trace


def find_fixed_point(oracle, z0, config, tol=1e-12, max_iter=None):
    """Reference fixed point via a long, trace-free run."""
    z = np.asarray(z0, dtype=float).copy()
    budget = max_iter if max_iter is not None else 100 * config.max_iter
    for _ in range(budget):
        z_next, (x_b, _, x_a) = tos_step(z, oracle, config)
        z = z_next
        if np.linalg.norm(x_b - x_a) / config.alpha <= tol:
            break
    return z


class BoxProx:
    """Projection onto the centered infinity-norm ball of given radius."""

    def __init__(self, radius):
        if not radius >= 0:
            raise ValueError("radius must be nonnegative")
        self.radius = radius

    def __call__(self, alpha, x):
        return np.clip(x, -self.radius, self.radius)


class L1Prox:
    """Soft thresholding by alpha times the weight."""

    def __init__(self, weight):
        if not weight >= 0:
            raise ValueError("weight must be nonnegative")
        self.weight = weight

    def __call__(self, alpha, x):
        t = alpha * self.weight
        return np.sign(x) * np.maximum(np.abs(x) - t, 0.0)


class ZeroProx:
    """Identity map, the prox of the zero function."""

    def __call__(self, alpha, x):
        return np.asarray(x, dtype=float).copy()


class AffineSubspaceProx:
    """Projection onto {x : A x = b} via cached normal equations."""

    def __init__(self, a, b):
        a = np.atleast_2d(np.asarray(a, dtype=float))
        b = np.atleast_1d(np.asarray(b, dtype=float))
        if a.shape[0] != b.size:
            raise ValueError("incompatible constraint shapes")
        gram = a @ a.T
        try:
            self._chol = cho_factor(gram)
        except np.linalg.LinAlgError as exc:
            raise ValueError("degenerate constraint rows") from exc
        self.a = a
        self.b = b

    def __call__(self, alpha, x):
        return x - self.a.T @ cho_solve(self._chol, self.a @ x - self.b)


class QuadraticProx:
    """Prox of 0.5 x^T P x + q^T x with a cached factorization per alpha."""

    def __init__(self, p, q=None):
        p = np.asarray(p, dtype=float)
        self.p = 0.5 * (p + p.T)
        self.q = np.zeros(p.shape[0]) if q is None else np.asarray(q, float)
        self._cache = {}

    def __call__(self, alpha, x):
        key = float(alpha)
        if key not in self._cache:
            self._cache[key] = cho_factor(
                np.eye(self.p.shape[0]) + alpha * self.p)
        return cho_solve(self._cache[key], x - alpha * self.q)


def prox_eval(spec, alpha, x):
    """Evaluate a prox spec (BoxProx, L1Prox, ZeroProx, AffineSubspaceProx)."""
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    return spec(alpha, np.asarray(x, dtype=float))


def grad_eval(e, x):
    """Gradient of the quadratic 0.5 x^T E x."""
    e = np.asarray(e, dtype=float)
    x = np.asarray(x, dtype=float)
    if e.shape[1] != x.shape[0]:
        raise ValueError("dimension mismatch")
    return e @ x
