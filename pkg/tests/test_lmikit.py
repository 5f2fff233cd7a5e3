"""Tests for the quadratic-constraint and LMI building blocks."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from toscert.lmikit import (KRON_DIM_CAP, LmiBase, RegularityClass,
                            build_dual_data, build_qc_triplet, build_w0,
                            build_w1, build_w2, eta_vector, kron_identity,
                            max_eig, qc_base, schur_extend, sym_check)


def test_regularity_class_validation():
    with pytest.raises(ValueError):
        RegularityClass(-1.0, 2.0)
    with pytest.raises(ValueError):
        RegularityClass(0.0, 0.0)
    with pytest.raises(ValueError):
        RegularityClass(3.0, 2.0)
    assert RegularityClass(0.0, math.inf).smooth is False
    assert RegularityClass(0.0, 5.0).smooth is True


def test_qc_base_finite_example():
    q = qc_base(RegularityClass(1.0, 2.0))
    expect = np.array([[-2.0 / 3.0, 0.5], [0.5, -1.0 / 3.0]])
    assert np.allclose(q, expect, atol=1e-15)


def test_qc_base_nonsmooth_limit():
    q = qc_base(RegularityClass(1.0, math.inf))
    assert np.allclose(q, [[-1.0, 0.5], [0.5, 0.0]], atol=1e-15)
    q0 = qc_base(RegularityClass(0.0, math.inf))
    assert np.allclose(q0, [[0.0, 0.5], [0.5, 0.0]], atol=1e-15)


def test_qc_base_merely_smooth():
    q = qc_base(RegularityClass(0.0, 4.0))
    assert np.allclose(q, [[0.0, 0.5], [0.5, -0.25]], atol=1e-15)


@given(m=st.floats(0.0, 10.0), gap=st.floats(1e-3, 10.0),
       t=st.floats(0.0, 1.0), dx=st.floats(-5.0, 5.0))
def test_qc_nonnegative_on_gradient_pairs(m, gap, t, dx):
    # for a quadratic with curvature q in [m, L] the pair (dx, q dx)
    # satisfies the class constraint with equality at both endpoints
    L = m + gap
    q = m + t * (L - m)
    v = np.array([dx, q * dx])
    base = qc_base(RegularityClass(m, L))
    val = v @ base @ v
    # exact form: dx^2 (q - m)(L - q)/(m + L)
    assert val >= -1e-9 * max(1.0, dx * dx)


def test_qc_boundary_curvature_is_tight():
    base = qc_base(RegularityClass(1.0, 3.0))
    for q in (1.0, 3.0):
        v = np.array([2.0, 2.0 * q])
        assert abs(v @ base @ v) < 1e-12


def test_build_qc_triplet_shapes():
    f = RegularityClass(0.0, math.inf)
    g = RegularityClass(1.0, 10.0)
    h = RegularityClass(0.0, 20.0)
    for q in build_qc_triplet(0.3, f, g, h):
        assert q.base.shape == (4, 4)
        assert np.allclose(q.base, q.base.T)


def test_lmi_base_full_kron():
    base = np.array([[1.0, 2.0], [2.0, -1.0]])
    lmi = LmiBase(base, 3)
    assert np.allclose(lmi.full(), np.kron(base, np.eye(3)))
    with pytest.raises(ValueError):
        LmiBase(np.array([[1.0, 2.0], [0.0, -1.0]]), 1)


def test_sym_check_symmetrizes_and_validates():
    out = sym_check(np.array([[0.0, 1.0], [0.0, 0.0]]))
    assert np.allclose(out, [[0.0, 0.5], [0.5, 0.0]])
    with pytest.raises(ValueError):
        sym_check(np.array([[math.nan, 0.0], [0.0, 0.0]]))
    with pytest.raises(ValueError):
        sym_check(np.zeros((2, 3)))


def test_build_w0_symbolic_feasibility():
    # at the closed-form parameter choice the certificate matrix is NSD
    lam, Lh = 0.5, 2.0
    alpha = (2.0 - lam) / Lh
    theta = (2.0 - lam) ** 3 * lam / (2.0 * Lh ** 2)
    sig = 2.0 * lam / alpha
    f = RegularityClass(0.0, math.inf)
    g = RegularityClass(0.0, math.inf)
    h = RegularityClass(0.0, Lh)
    m = build_w0(lam, theta, alpha).base.copy()
    for q in build_qc_triplet(alpha, f, g, h):
        m = m + sig * q.base
    assert max_eig(m) <= 1e-10


def test_build_w0_infeasible_when_theta_too_large():
    lam, Lh = 0.5, 2.0
    alpha = (2.0 - lam) / Lh
    theta = 10.0 * (2.0 - lam) ** 3 * lam / (2.0 * Lh ** 2)
    sig = 2.0 * lam / alpha
    f = RegularityClass(0.0, math.inf)
    g = RegularityClass(0.0, math.inf)
    h = RegularityClass(0.0, Lh)
    m = build_w0(lam, theta, alpha).base.copy()
    for q in build_qc_triplet(alpha, f, g, h):
        m = m + sig * q.base
    assert max_eig(m) > 1e-3


def test_build_w1_theta_zero_matches_zero_rate_part():
    # theta enters linearly; the difference of two builds isolates its slope
    a = build_w1(0.7, 2.0, 0.4, 3.0, 5.0).base
    b = build_w1(0.7, 1.0, 0.4, 3.0, 5.0).base
    c = build_w1(0.7, 0.0, 0.4, 3.0, 5.0).base
    assert np.allclose(a - b, b - c, atol=1e-12)


def test_build_w2_rate_entry():
    w = build_w2(0.8, 0.36).base
    assert abs(w[3, 3] - (1.0 - 0.36)) < 1e-15
    assert abs(w[0, 0] - 0.64) < 1e-15
    assert abs(w[0, 3] + 0.8) < 1e-15
    assert abs(w[1, 1]) < 1e-15


def test_eta_vector():
    assert np.allclose(eta_vector(0.8), [0.8, 0.0, -0.8, 0.0])


def test_schur_extend_equivalence():
    rng = np.random.default_rng(5)
    for _ in range(20):
        lam = float(rng.uniform(0.1, 1.9))
        a = rng.standard_normal((4, 4))
        m = -(a @ a.T) - 0.1 * np.eye(4)
        eta = eta_vector(lam)
        direct = np.linalg.eigvalsh(m + np.outer(eta, eta)).max()
        ext = max_eig(schur_extend(m, lam))
        assert (direct <= 0) == (ext <= 1e-12)


def test_schur_extend_corner():
    ext = schur_extend(-np.eye(4), 0.5)
    assert ext.shape == (5, 5)
    assert ext[4, 4] == -1.0
    assert ext[0, 4] == 0.5 and ext[2, 4] == -0.5


def test_build_dual_data_map_invertible():
    w_o, w_i, gm = build_dual_data(0.7)
    assert abs(np.linalg.det(gm)) > 1e-12
    assert np.allclose(w_o.base, w_o.base.T)
    assert np.allclose(w_i.base, w_i.base.T)


def test_max_eig_matches_lapack():
    rng = np.random.default_rng(11)
    for n in (1, 2, 5, 9, 16):
        for _ in range(10):
            a = rng.standard_normal((n, n))
            a = 0.5 * (a + a.T)
            assert abs(max_eig(a) - np.linalg.eigvalsh(a).max()) < 1e-11


def test_max_eig_rejects_large_matrices():
    with pytest.raises(ValueError):
        max_eig(np.zeros((17, 17)))


@settings(deadline=None, max_examples=50)
@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 3))
def test_kron_identity_preserves_extreme_eigenvalue(seed, d):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 6))
    a = rng.standard_normal((n, n))
    a = 0.5 * (a + a.T)
    big = kron_identity(a, d)
    assert big.shape == (n * d, n * d)
    assert abs(max_eig(big) - max_eig(a)) < 1e-10
    assert (max_eig(big) <= 0) == (max_eig(a) <= 0)


def test_kron_identity_dimension_cap():
    with pytest.raises(ValueError):
        kron_identity(np.zeros((16, 16)), KRON_DIM_CAP)
