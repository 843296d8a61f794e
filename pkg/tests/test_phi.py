import math
import warnings

import mpmath as mp
import numpy as np
import pytest
import scipy.linalg

from expintlab.errors import ContractViolationError, DimensionError, InvariantError, UnsupportedOrderError
from expintlab.phi import (
    MAX_ORDER,
    expm,
    phi,
    phi_combination_matvec,
    phi_diag,
    phi_matvec,
    phi_scalar,
)
from expintlab.spectral import DiagonalOperator, ModeGrid

# phi_3(-2.7 + 0.3i) from 40-digit quadrature of the defining integral
PHI3_REF = 0.095181113110625481849 + 0.0048566427166400109979j


def mp_phi(k, z):
    mp.mp.dps = 50
    z = mp.mpc(z)
    if k == 0:
        return complex(mp.exp(z))
    if abs(z) < 1:
        return complex(mp.nsum(lambda j: z ** j / mp.factorial(j + k), [0, mp.inf]))
    acc = mp.exp(z)
    for j in range(k):
        acc = (acc - 1 / mp.factorial(j)) / z
    return complex(acc)


def test_phi0_is_exp():
    z = -1 + 2j
    assert phi_scalar(0, z) == pytest.approx(np.exp(z), rel=1e-15)


def test_phi1_at_one():
    assert phi_scalar(1, 1.0) == pytest.approx(math.e - 1, rel=1e-15)


@pytest.mark.parametrize("k", range(MAX_ORDER + 1))
def test_phi_at_zero(k):
    assert phi_scalar(k, 0.0) == 1 / math.factorial(k)


def test_phi3_quadrature_value():
    assert abs(phi_scalar(3, -2.7 + 0.3j) - PHI3_REF) <= 1e-11 * abs(PHI3_REF)


@pytest.mark.parametrize("k", [9, -1, 1.5])
def test_unsupported_orders(k):
    with pytest.raises(UnsupportedOrderError):
        phi(k, 0.1)


@pytest.mark.parametrize("k", range(MAX_ORDER + 1))
def test_scalar_accuracy_against_high_precision(k):
    rng = np.random.default_rng(10 + k)
    r = np.concatenate([10 ** rng.uniform(-8, 2, 60), [0.49, 0.5, 0.51, k - 1e-9, k + 1e-9, 100.0]])
    theta = rng.uniform(np.pi / 2, 3 * np.pi / 2, r.size)
    zs = r * np.exp(1j * theta)
    zs = np.where(zs.real > 0, -zs.conj().real + 1j * zs.imag, zs)
    zs = zs[np.abs(zs) <= 100]
    got = phi(k, zs)
    worst = max(abs(g - mp_phi(k, z)) / abs(mp_phi(k, z)) for g, z in zip(got, zs))
    assert worst <= 1e-12


def test_vectorised_matches_scalar():
    zs = np.array([0.0, 1e-6j, -0.3 + 0.2j, -5 + 7j, -40.0])
    for k in range(5):
        assert np.array_equal(phi(k, zs), np.array([phi_scalar(k, z) for z in zs]))


@pytest.mark.parametrize("k", range(MAX_ORDER))
def test_recurrence(k):
    rng = np.random.default_rng(k)
    big = -rng.uniform(0.01, 30, 40) + 1j * rng.uniform(-30, 30, 40)
    lhs = phi(k + 1, big)
    rhs = (phi(k, big) - 1 / math.factorial(k)) / big
    assert np.max(np.abs(lhs - rhs) / np.abs(lhs)) <= 1e-11
    small = 1e-2 * (-rng.uniform(0, 1, 40) + 1j * rng.uniform(-1, 1, 40))
    lhs = small * phi(k + 1, small) + 1 / math.factorial(k)
    assert np.max(np.abs(lhs - phi(k, small))) <= 1e-15


@pytest.mark.parametrize("k", range(MAX_ORDER + 1))
def test_bounded_on_negative_axis(k):
    x = -np.logspace(-6, 3, 200)
    assert np.all(np.abs(phi(k, x)) <= 1 / math.factorial(k) * (1 + 1e-15))


def test_phi_diag_zero_operator():
    g = ModeGrid(8)
    zero = DiagonalOperator(g, np.zeros(8))
    for k in range(4):
        assert np.all(phi_diag(k, zero).eigenvalues == 1 / math.factorial(k))


def test_phi_diag_i_pi():
    g = ModeGrid(8)
    op = DiagonalOperator(g, np.full(8, 1j * np.pi))
    assert phi_diag(1, op).eigenvalues[0, 0] == pytest.approx(2j / np.pi, abs=1e-15)


def test_phi_diag_matches_scalar_loop():
    g = ModeGrid(16)
    rng = np.random.default_rng(7)
    ev = -rng.uniform(0, 20, 16) + 1j * rng.uniform(-20, 20, 16)
    out = phi_diag(2, DiagonalOperator(g, ev)).eigenvalues[0]
    assert np.allclose(out, [phi_scalar(2, z) for z in ev], rtol=1e-15, atol=0)


def test_phi_diag_contract():
    g = ModeGrid(8)
    op = DiagonalOperator(g, np.full(8, 0.1))
    with pytest.raises(ContractViolationError):
        phi_diag(1, op)
    with pytest.warns(RuntimeWarning):
        phi_diag(1, op, on_violation="warn")
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        phi_diag(1, op, on_violation="ignore")


# --- dense path ----------------------------------------------------------------

@pytest.mark.parametrize("scale", [1e-3, 0.1, 1.0, 4.0, 30.0, 500.0])
def test_expm_against_scipy(scale):
    rng = np.random.default_rng(int(scale * 10))
    M = scale * (rng.standard_normal((12, 12)) + 1j * rng.standard_normal((12, 12))) / 12
    M -= np.eye(12) * (np.max(np.linalg.eigvals(M).real) + 0.1)
    ref = scipy.linalg.expm(M)
    assert np.linalg.norm(expm(M) - ref) <= 1e-12 * max(1.0, np.linalg.norm(ref)) * max(1.0, scale)


def test_expm_rejects_bad_input():
    with pytest.raises(DimensionError):
        expm(np.ones((2, 3)))
    with pytest.raises(InvariantError):
        expm(np.array([[np.inf]]))


def test_phi_matvec_zero_matrix():
    v = np.array([1.0, -2.0, 3j])
    out = phi_matvec([0, 1, 2, 3], np.zeros((3, 3)), v)
    for k in range(4):
        assert np.allclose(out[k], v / math.factorial(k), atol=1e-15)


def test_phi_matvec_diagonal_matches_phi_diag():
    rng = np.random.default_rng(11)
    ev = -rng.uniform(0, 10, 20) + 1j * rng.uniform(-40, 40, 20)
    v = rng.standard_normal(20) + 1j * rng.standard_normal(20)
    out = phi_matvec(range(5), np.diag(ev), v)
    g = ModeGrid(20)
    for k in range(5):
        ref = phi_diag(k, DiagonalOperator(g, ev)).eigenvalues[0] * v
        assert np.linalg.norm(out[k] - ref) <= 1e-11 * np.linalg.norm(ref)


def test_phi_matvec_eigendecomposition():
    rng = np.random.default_rng(12)
    M = rng.standard_normal((5, 5)) + 1j * rng.standard_normal((5, 5))
    M -= np.eye(5) * (np.max(np.linalg.eigvals(M).real) + 0.5)
    v = rng.standard_normal(5) + 0j
    lam, V = np.linalg.eig(M)
    for k in (1, 2, 3):
        ref = V @ (phi(k, lam) * np.linalg.solve(V, v))
        got = phi_matvec([k], M, v)[k]
        assert np.linalg.norm(got - ref) <= 1e-9 * np.linalg.norm(ref)


def test_phi_matvec_errors():
    with pytest.raises(DimensionError):
        phi_matvec([1], np.eye(3), np.ones(2))
    with pytest.raises(InvariantError):
        phi_matvec([1], np.eye(2), np.array([1.0, np.nan]))
    with pytest.raises(DimensionError):
        phi_matvec([1], np.zeros((4097, 1)), np.ones(4097))


def test_combination_equals_sum_of_terms():
    rng = np.random.default_rng(13)
    d = 7
    M = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) - 3 * np.eye(d)
    w = {k: rng.standard_normal(d) + 1j * rng.standard_normal(d) for k in (0, 1, 3)}
    ref = scipy.linalg.expm(M) @ w[0]
    for k in (1, 3):
        ref = ref + phi_matvec([k], M, w[k])[k]
    got = phi_combination_matvec(M, w)
    assert np.linalg.norm(got - ref) <= 1e-12 * np.linalg.norm(ref)
