"""Tests for certificate producers, duals, sweeps, and empirical checks."""

import math

import numpy as np
import pytest

from toscert import certify, tos
from toscert.certify import (CertificationError, MODE_LINEAR, MODE_OBJECTIVE,
                             MODE_RESIDUAL, ProblemClasses, RateCertificate,
                             audit_linear, certificate_from_json,
                             certificate_to_json, certify_linear_rate,
                             certify_objective_rate, certify_residual_rate,
                             check_assumption1, dual_linear_rate,
                             empirical_lyapunov_check, linear_rate_value,
                             sweep_alpha, symbolic_sublinear)
from toscert.lmikit import RegularityClass


def _cls(mf, lf, mg, lg, mh, lh):
    return ProblemClasses(RegularityClass(mf, lf), RegularityClass(mg, lg),
                          RegularityClass(mh, lh))


STRONG_G = _cls(0.0, math.inf, 1.0, 10.0, 0.0, 20.0)
STRONG_F_EQUAL = _cls(20.0, 20.0, 0.0, math.inf, 0.0, 70.0)


def test_symbolic_closed_form():
    cert = symbolic_sublinear(0.5, 2.0)
    assert abs(cert.alpha - 0.75) < 1e-15
    assert abs(cert.theta - (1.5 ** 3 * 0.5) / 8.0) < 1e-15
    assert cert.margin <= 1e-10
    assert cert.provenance == "symbolic"


def test_symbolic_half_relaxation_constants():
    # lam = 1/2 specializations of the closed-form rate
    for Lh in (0.1, 1.0, 10.0):
        cert = symbolic_sublinear(0.5, Lh)
        assert abs(1.0 / cert.theta - 32.0 * Lh ** 2 / 27.0) \
            <= 1e-12 * 32.0 * Lh ** 2 / 27.0
        assert abs(cert.alpha ** 2 / cert.theta - 8.0 / 3.0) <= 1e-12 * 8.0 / 3.0


def test_symbolic_rejects_bad_parameters():
    with pytest.raises(CertificationError):
        symbolic_sublinear(0.0, 1.0)
    with pytest.raises(CertificationError):
        symbolic_sublinear(2.0, 1.0)
    with pytest.raises(CertificationError):
        symbolic_sublinear(0.5, math.inf)


def test_symbolic_lam_half_maximizes_theta():
    thetas = {lam: symbolic_sublinear(lam, 1.0).theta
              for lam in np.arange(0.1, 2.0, 0.1)}
    assert max(thetas, key=thetas.get) == pytest.approx(0.5)


def test_residual_rate_matches_symbolic_at_its_stepsize():
    cert = symbolic_sublinear(0.5, 1.0)
    sdp = certify_residual_rate(cert.alpha, 0.5, certify._case1_classes(1.0))
    assert abs(sdp.theta - cert.theta) < 1e-6
    assert sdp.margin <= 1e-8
    assert all(s >= -1e-9 for s in sdp.sigma)


def test_residual_rate_free_lambda():
    # frozen from a converged joint solve at alpha = 1, Lh = 1; the exact
    # optimum is theta = 9/16 at lam = 3/4
    cert = certify_residual_rate(1.0, None, certify._case1_classes(1.0))
    assert abs(cert.theta - 9.0 / 16.0) < 1e-6
    assert abs(cert.lam - 0.75) < 1e-3
    assert cert.margin <= 1e-8


def test_residual_rate_input_validation():
    with pytest.raises(CertificationError):
        certify_residual_rate(-1.0, 0.5, certify._case1_classes(1.0))
    with pytest.raises(CertificationError):
        certify_residual_rate(1.0, 0.5, STRONG_G)


def test_objective_rate_regression():
    # frozen oracle from a converged joint solve
    cert = certify_objective_rate(1.0, 1.0, 1.0)
    assert abs(cert.theta - 0.6740773455) < 1e-6
    assert abs(cert.lam - 0.8680400678) < 1e-4
    assert cert.margin <= 1e-8


def test_objective_rate_validation():
    with pytest.raises(CertificationError):
        certify_objective_rate(0.0, 1.0, 1.0)
    with pytest.raises(CertificationError):
        certify_objective_rate(1.0, math.inf, 1.0)


def test_linear_rate_point():
    # strongly convex g, smooth h; frozen from a converged solve
    cert = certify_linear_rate(0.2, STRONG_G)
    assert abs(cert.rho2 - 0.9641048286) < 1e-7
    assert abs(cert.lam - 0.2060247924) < 1e-4
    assert cert.margin <= 1e-8
    assert all(math.isfinite(s) for s in cert.sigma)


def test_linear_rate_primal_dual_agreement():
    cert = certify_linear_rate(0.2, STRONG_G)
    dual = dual_linear_rate(0.2, cert.lam, STRONG_G)
    assert abs(cert.rho2 - dual) <= 1e-6


def test_linear_rate_degenerate_class():
    # m = L makes the f constraint matrix negative semidefinite; its
    # multiplier escapes to infinity and the certificate reports that
    cert = certify_linear_rate(0.02, STRONG_F_EQUAL)
    assert abs(cert.rho2 - 0.4108076296) < 1e-7
    assert math.isinf(cert.sigma[0]) or math.isinf(cert.sigma[2])
    assert cert.margin <= 1e-8
    dual = dual_linear_rate(0.02, cert.lam, STRONG_F_EQUAL)
    assert abs(cert.rho2 - dual) <= 1e-6


def test_linear_rate_infeasible_stepsize():
    with pytest.raises(CertificationError):
        certify_linear_rate(50.0, STRONG_G)


def test_linear_rate_requires_assumption():
    bad = _cls(0.0, math.inf, 0.0, math.inf, 0.0, 1.0)
    with pytest.raises(CertificationError):
        certify_linear_rate(0.1, bad)


def test_dual_solution_matrix():
    val, z = dual_linear_rate(0.2, 0.5, STRONG_G, return_z=True)
    assert z.shape == (4, 4)
    assert np.linalg.eigvalsh(z).min() >= -1e-9


def test_audit_linear_detects_bad_rate():
    rho2, lam, sigma, keep, _ = linear_rate_value(0.2, STRONG_G, lam=0.5)
    full = certify._expand_sigma(sigma, keep)
    good = audit_linear(0.2, 0.5, rho2, full, STRONG_G)
    bad = audit_linear(0.2, 0.5, rho2 - 0.05, full, STRONG_G)
    assert good <= 1e-8
    assert bad > 1e-3


def test_check_assumption():
    assert check_assumption1(STRONG_G)
    assert check_assumption1(STRONG_F_EQUAL)
    assert not check_assumption1(_cls(0, math.inf, 0, math.inf, 0, 1.0))
    assert not check_assumption1(_cls(1, math.inf, 0, math.inf, 0, 1.0))
    assert not check_assumption1(_cls(0, 1.0, 1, 2.0, 0, math.inf))


def test_certificate_json_round_trip():
    cert = RateCertificate(mode=MODE_LINEAR, alpha=0.1, lam=0.7,
                           sigma=(1.5, math.inf, 2.0), margin=-1e-10,
                           provenance="sdp", rho2=0.9)
    back = certificate_from_json(certificate_to_json(cert))
    assert back == cert
    cert2 = symbolic_sublinear(0.5, 1.0)
    back2 = certificate_from_json(certificate_to_json(cert2))
    assert back2.theta == cert2.theta and back2.mode == MODE_RESIDUAL


def test_sweep_linear_sentinels_and_interior_minimum():
    grid = np.geomspace(1e-3, 1.0, 12)
    curve, (best_alpha, best_rate) = sweep_alpha(grid, STRONG_F_EQUAL,
                                                 MODE_LINEAR)
    assert len(curve) == 12
    for rec in curve:
        if not rec["feasible"]:
            assert rec["rate"] == 1.0 and rec["lambda"] is None
    assert best_rate < 1.0
    feas = [rec for rec in curve if rec["feasible"]]
    assert feas  # the class set admits a contraction on part of the grid
    assert 1e-3 < best_alpha < 1.0


def test_sweep_residual_mode():
    grid = [0.5, 1.0, 1.5, 2.0]
    curve, (best_alpha, best_rate) = sweep_alpha(
        grid, certify._case1_classes(1.0), MODE_RESIDUAL, lam=0.5)
    assert best_rate >= max(rec["rate"] for rec in curve if rec["feasible"]) \
        - 1e-12
    at_symbolic = next(rec for rec in curve if rec["alpha"] == 1.5)
    assert abs(at_symbolic["rate"] - symbolic_sublinear(0.5, 1.0).theta) < 1e-6
    assert best_alpha in grid


def test_sweep_rejects_empty_and_unknown():
    with pytest.raises(CertificationError):
        sweep_alpha([], STRONG_G, MODE_LINEAR)
    with pytest.raises(ValueError):
        sweep_alpha([0.1], STRONG_G, "nonsenseMode")


def _contraction_trace(rho, steps, dim=3, seed=0):
    rng = np.random.default_rng(seed)
    z0 = rng.standard_normal(dim)
    trace = tos.IterateTrace(alpha=1.0, lam=1.0)
    z = z0.copy()
    for _ in range(steps):
        trace.z.append(z.copy())
        trace.residual_norm2.append(float(z @ z))
        z = rho * z
    trace.z.append(z.copy())
    return trace


def test_lyapunov_check_linear_pass_and_fail():
    rho = 0.9
    trace = _contraction_trace(rho, 60)
    cert = RateCertificate(mode=MODE_LINEAR, alpha=1.0, lam=1.0,
                           sigma=(1.0, 1.0, 1.0), margin=0.0,
                           provenance="sdp", rho2=rho ** 2)
    rep = empirical_lyapunov_check(trace, np.zeros(3), cert)
    assert rep["violations"] == [] and rep["bound_ok"]
    tight = RateCertificate(mode=MODE_LINEAR, alpha=1.0, lam=1.0,
                            sigma=(1.0, 1.0, 1.0), margin=0.0,
                            provenance="sdp", rho2=(0.8 * rho) ** 2)
    rep_bad = empirical_lyapunov_check(trace, np.zeros(3), tight)
    assert rep_bad["violations"] != []


def test_lyapunov_check_residual_mode_on_real_trace():
    # one dimensional: f = g = 0, h = x^2/2, certificate from the closed form
    cert = symbolic_sublinear(0.5, 1.0)
    oracle = tos.OperatorOracle(
        prox_f=tos.ZeroProx(), prox_g=tos.ZeroProx(),
        grad_h=lambda x: x)
    config = tos.TosConfig(alpha=cert.alpha, lam=cert.lam, max_iter=300)
    trace = tos.run(oracle, np.array([4.0]), config)
    rep = empirical_lyapunov_check(trace, np.zeros(1), cert)
    assert rep["violations"] == [] and rep["bound_ok"]
    assert rep["worst_product"] <= rep["initial_dist2"] * (1 + 1e-6)


def test_lyapunov_check_objective_mode_needs_fstar():
    cert = certify_objective_rate(1.0, 1.0, 1.0)
    trace = _contraction_trace(0.9, 5)
    trace.objective = [1.0] * 5
    with pytest.raises(ValueError):
        empirical_lyapunov_check(trace, np.zeros(3), cert)


def test_lyapunov_check_dimension_mismatch():
    cert = symbolic_sublinear(0.5, 1.0)
    trace = _contraction_trace(0.9, 5)
    with pytest.raises(ValueError):
        empirical_lyapunov_check(trace, np.zeros(7), cert)
