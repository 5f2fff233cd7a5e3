"""Box-constrained finite-horizon optimal control solved by splitting.

The trajectory vector w stacks states then inputs,
w = [x_0 .. x_N, u_0 .. u_{N-1}], and the problem is
    minimize I_C(w) + I_D(w) + 0.5 w^T E w
with C the unit infinity-norm box on the inputs, D the affine set of
trajectories consistent with the dynamics and initial state, and
E = diag(Q, ..., Q, R, ..., R).
"""

import json
from dataclasses import dataclass

import numpy as np

from . import tos
from .certify import ProblemClasses
from .lmikit import RegularityClass


@dataclass(frozen=True)
class LqrInstance:
    a: np.ndarray
    b: np.ndarray
    q: np.ndarray
    r: np.ndarray
    horizon: int
    x_init: np.ndarray


@dataclass(frozen=True)
class TrajectoryLayout:
    n: int
    m: int
    horizon: int

    @property
    def dim(self):
        return (self.horizon + 1) * self.n + self.horizon * self.m

    def x_slice(self, t):
        return slice(t * self.n, (t + 1) * self.n)

    def u_slice(self, t):
        base = (self.horizon + 1) * self.n
        return slice(base + t * self.m, base + (t + 1) * self.m)

    def u_block(self):
        return slice((self.horizon + 1) * self.n, self.dim)


def build_instance(seed, n, m, horizon):
    """Random marginally stable instance, deterministic in the seed."""
    if min(n, m, horizon) < 1:
        raise ValueError("n, m, horizon must be >= 1")
    rng = np.random.default_rng(seed)
    a = rng.standard_normal((n, n))
    a = a / max(np.abs(np.linalg.eigvals(a)))
    b = rng.standard_normal((n, m))
    mq = rng.standard_normal((n, n))
    q = mq.T @ mq
    mr = rng.standard_normal((m, m))
    r = mr.T @ mr + 0.1 * np.eye(m)
    x_init = rng.standard_normal(n)
    return LqrInstance(a, b, q, r, horizon, x_init)


def cost_matrix(inst):
    layout = TrajectoryLayout(inst.a.shape[0], inst.b.shape[1], inst.horizon)
    e = np.zeros((layout.dim, layout.dim))
    for t in range(inst.horizon + 1):
        e[layout.x_slice(t), layout.x_slice(t)] = inst.q
    for t in range(inst.horizon):
        e[layout.u_slice(t), layout.u_slice(t)] = inst.r
    return e, layout


def dynamics_constraints(inst, layout):
    """Rows of A_c w = b_c pinning x_0 and the transitions."""
    n, m, horizon = layout.n, layout.m, layout.horizon
    rows = (horizon + 1) * n
    a_c = np.zeros((rows, layout.dim))
    b_c = np.zeros(rows)
    a_c[:n, layout.x_slice(0)] = np.eye(n)
    b_c[:n] = inst.x_init
    for t in range(horizon):
        blk = slice((t + 1) * n, (t + 2) * n)
        a_c[blk, layout.x_slice(t + 1)] = np.eye(n)
        a_c[blk, layout.x_slice(t)] = -inst.a
        a_c[blk, layout.u_slice(t)] = -inst.b
    return a_c, b_c


def assemble_oracles(inst):
    """Splitting oracles: input-box prox, dynamics projection, gradient of h."""
    e, layout = cost_matrix(inst)
    a_c, b_c = dynamics_constraints(inst, layout)
    proj_d = tos.AffineSubspaceProx(a_c, b_c)
    ublock = layout.u_block()

    def prox_f(alpha, w):
        out = np.asarray(w, dtype=float).copy()
        out[ublock] = np.clip(out[ublock], -1.0, 1.0)
        return out

    def grad_h(w):
        return e @ w

    l_h = max(np.linalg.norm(inst.q, 2), np.linalg.norm(inst.r, 2))
    classes = ProblemClasses(
        RegularityClass(0.0, np.inf),
        RegularityClass(0.0, np.inf),
        RegularityClass(0.0, l_h))

    def objective(w):
        return 0.5 * float(w @ (e @ w))

    oracle = tos.OperatorOracle(
        prox_f=prox_f, prox_g=proj_d, grad_h=grad_h,
        classes=classes, objective=objective)
    return oracle, layout, e, l_h


def run_sweep(inst, lambdas, iter_budget, out_dir=None):
    """One run per lambda at alpha = (2 - lambda)/L_h; optional CSV export."""
    for lam in lambdas:
        if not 0 < lam < 2:
            raise ValueError("every lambda must lie in (0, 2)")
    oracle, layout, _, l_h = assemble_oracles(inst)
    z0 = np.zeros(layout.dim)
    results = []
    for lam in lambdas:
        alpha = (2.0 - lam) / l_h
        config = tos.TosConfig(alpha=alpha, lam=lam, max_iter=iter_budget)
        trace = tos.run(oracle, z0, config)
        min_r2 = float(np.min(trace.residual_norm2))
        results.append({
            "lambda": lam,
            "alpha": alpha,
            "final_min_residual2": min_r2,
            "iterations": len(trace.residual_norm2),
            "trace": trace,
        })
        if out_dir is not None:
            trace.to_csv(f"{out_dir}/trace_lambda_{lam:g}.csv")
    if out_dir is not None:
        summary = [{k: v for k, v in rec.items() if k != "trace"}
                   for rec in results]
        with open(f"{out_dir}/summary.json", "w") as fh:
            json.dump(summary, fh, indent=2)
    return results
