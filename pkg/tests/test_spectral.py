import numpy as np
import pytest

from conftest import random_state
from expintlab.errors import DimensionError, GridMismatchError, InvariantError
from expintlab.spectral import (
    DiagonalOperator,
    ModeGrid,
    SpectralState,
    apply_diag,
    project_Pm,
    project_Qm,
    to_physical,
    to_spectral,
    y_ell_norm,
)


def direct_dft(u, modes):
    n = u.size
    x = 2 * np.pi * np.arange(n) / n
    return np.array([np.sum(u * np.exp(-1j * k * x)) / n for k in modes])


def test_grid_modes_fft_order():
    g = ModeGrid(8)
    assert list(g.modes) == [0, 1, 2, 3, 4, -3, -2, -1]
    assert g.index_of(-2) == 6


@pytest.mark.parametrize("n", [0, 7, -4])
def test_grid_rejects_bad_sizes(n):
    with pytest.raises(InvariantError):
        ModeGrid(n)


def test_grid_needs_single_zero_mode():
    with pytest.raises(InvariantError):
        ModeGrid(4, modes=[1, 2, 3, 4])
    with pytest.raises(InvariantError):
        ModeGrid(4, modes=[0, 1, 2])


def test_custom_mode_ordering_round_trips():
    g = ModeGrid(8, modes=[-3, -2, -1, 0, 1, 2, 3, 4])
    rng = np.random.default_rng(3)
    u = rng.standard_normal(8)
    U = to_spectral(u, g)
    assert np.allclose(U.coeffs[0], direct_dft(u, g.modes), atol=1e-14)
    assert np.allclose(to_physical(U)[0], u, atol=1e-14)


def test_constant_field():
    U = to_spectral(np.full(8, 3.0), ModeGrid(8))
    expected = np.zeros(8)
    expected[0] = 3.0
    assert np.allclose(U.coeffs[0], expected, atol=1e-15)


def test_cosine_field(grid16):
    U = to_spectral(np.cos(grid16.x), grid16)
    c = U.coeffs[0]
    assert c[grid16.index_of(1)] == pytest.approx(0.5, abs=1e-15)
    assert c[grid16.index_of(-1)] == pytest.approx(0.5, abs=1e-15)
    c2 = c.copy()
    c2[[grid16.index_of(1), grid16.index_of(-1)]] = 0
    assert np.max(np.abs(c2)) < 1e-15


def test_random_field_matches_direct_sum(grid16):
    rng = np.random.default_rng(1)
    u = rng.standard_normal(16) + 1j * rng.standard_normal(16)
    U = to_spectral(u, grid16)
    assert np.allclose(U.coeffs[0], direct_dft(u, grid16.modes), atol=1e-13)
    assert np.allclose(to_physical(U)[0], u, atol=1e-13)


@pytest.mark.parametrize("n", [8, 16, 32, 64, 128, 256, 512, 1024])
def test_round_trip_all_sizes(n):
    g = ModeGrid(n)
    rng = np.random.default_rng(n)
    u = rng.standard_normal((2, n))
    back = to_physical(to_spectral(u, g))
    assert np.max(np.abs(back - u)) <= 1e-12 * np.max(np.abs(u))


def test_to_spectral_length_mismatch(grid16):
    with pytest.raises(DimensionError):
        to_spectral(np.ones(15), grid16)


def test_to_physical_single_mode_and_zero(grid16):
    assert np.allclose(to_physical(SpectralState.single_mode(grid16, 0, 3.0)), 3.0)
    assert np.all(to_physical(SpectralState.zeros(grid16)) == 0)


def test_state_rejects_non_finite(grid16):
    c = np.zeros(16, dtype=complex)
    c[2] = np.nan
    with pytest.raises(InvariantError):
        SpectralState(grid16, c)


def test_state_is_read_only(grid16):
    U = random_state(grid16)
    with pytest.raises(ValueError):
        U.coeffs[0, 0] = 1.0


def test_state_arithmetic_checks_grid(grid16):
    with pytest.raises(GridMismatchError):
        random_state(grid16) + random_state(ModeGrid(8))


def test_apply_diag_identity_and_ik(grid16):
    U = random_state(grid16)
    assert np.array_equal(apply_diag(DiagonalOperator.identity(grid16), U).coeffs, U.coeffs)
    ik = DiagonalOperator(grid16, 1j * grid16.modes)
    V = apply_diag(ik, SpectralState.single_mode(grid16, 3, 2.0))
    assert V.coeffs[0, grid16.index_of(3)] == 6j


def test_apply_diag_composition(grid16):
    rng = np.random.default_rng(2)
    op = DiagonalOperator(grid16, rng.standard_normal(16) + 1j * rng.standard_normal(16))
    U = random_state(grid16)
    lhs = apply_diag(op.compose(op), U).coeffs
    rhs = apply_diag(op, apply_diag(op, U)).coeffs
    assert np.max(np.abs(lhs - rhs)) <= 1e-14 * np.max(np.abs(lhs))


def test_apply_diag_grid_mismatch(grid16):
    with pytest.raises(GridMismatchError):
        apply_diag(DiagonalOperator.identity(ModeGrid(8)), random_state(grid16))


def test_y_ell_norm_single_mode_values(grid16):
    absA = DiagonalOperator(grid16, np.abs(grid16.modes).astype(float))
    U = SpectralState.single_mode(grid16, 2, 0.7 - 0.2j)
    assert y_ell_norm(U, absA, 1.5) == pytest.approx(abs(0.7 - 0.2j) * 2 ** 1.5, rel=1e-15)
    half = DiagonalOperator(grid16, np.full(16, 0.5))
    for ell in (0.0, 1.0, 3.7):
        assert y_ell_norm(U, half, ell) == pytest.approx(abs(0.7 - 0.2j), rel=1e-15)


def test_y_ell_norm_direct_sum(grid16):
    absA = DiagonalOperator(grid16, np.sqrt(grid16.modes.astype(float) ** 2 + 0.25))
    U = random_state(grid16, seed=4)
    ell = 0.75
    w = absA.eigenvalues.real[0]
    expected = np.sqrt(sum((1.0 if wk <= 1 else wk ** ell) ** 2 * abs(c) ** 2
                           for wk, c in zip(w, U.coeffs[0])))
    assert y_ell_norm(U, absA, ell) == pytest.approx(expected, rel=1e-13)


def test_y_ell_zero_is_parseval(grid16):
    absA = DiagonalOperator(grid16, np.abs(grid16.modes).astype(float))
    U = random_state(grid16, seed=5)
    assert y_ell_norm(U, absA, 0.0) == pytest.approx(np.linalg.norm(U.coeffs), rel=1e-15)
    # Parseval: mean square of the fields equals the coefficient energy
    u = to_physical(U)
    assert np.sqrt(np.sum(np.mean(np.abs(u) ** 2, axis=1))) == pytest.approx(
        y_ell_norm(U, absA, 0.0), rel=1e-13)


def test_y_ell_norm_rejects_negative_absA(grid16):
    bad = DiagonalOperator(grid16, grid16.modes.astype(float))
    with pytest.raises(InvariantError):
        y_ell_norm(random_state(grid16), bad, 1.0)


def test_unit_ball_boundary_goes_to_P1(grid16):
    absA = DiagonalOperator(grid16, np.abs(grid16.modes).astype(float))
    U = SpectralState.single_mode(grid16, 1, 1.0)
    assert np.array_equal(project_Pm(U, absA, 1.0).coeffs, U.coeffs)
    assert y_ell_norm(U, absA, 5.0) == 1.0


def test_projections(grid16):
    absA = DiagonalOperator(grid16, np.abs(grid16.modes).astype(float))
    U = random_state(grid16, seed=6)
    assert np.array_equal(project_Pm(U, absA, 100.0).coeffs, U.coeffs)
    P, Q = project_Pm(U, absA, 3), project_Qm(U, absA, 3)
    assert np.array_equal((P + Q).coeffs, U.coeffs)
    assert np.array_equal(project_Pm(P, absA, 3).coeffs, P.coeffs)
    assert np.all(project_Qm(P, absA, 3).coeffs == 0)
    with pytest.raises(InvariantError):
        project_Pm(U, absA, 0.0)


def test_projection_to_zero_on_wave(wave64):
    U = random_state(wave64.grid, 2)
    assert np.all(project_Pm(U, wave64.absA, 0.5).coeffs == 0)


@pytest.mark.parametrize("seed", range(5))
@pytest.mark.parametrize("ell", [0.5, 1.0, 2.0])
def test_projection_estimates(seed, ell):
    g = ModeGrid(32)
    absA = DiagonalOperator(g, np.sqrt(g.modes.astype(float) ** 2 + 1))
    U = random_state(g, seed=seed)
    for m in (2.0, 5.0, 11.0):
        Q = project_Qm(U, absA, m)
        assert y_ell_norm(Q, absA, 0) <= m ** -ell * y_ell_norm(U, absA, ell) * (1 + 1e-12)
        P = project_Pm(U, absA, m)
        AlP = apply_diag(absA.power(ell), P)
        assert AlP.norm() <= m ** ell * P.norm() * (1 + 1e-12)


def test_projection_estimates_equality_witnesses():
    g = ModeGrid(32)
    absA = DiagonalOperator(g, np.abs(g.modes).astype(float))
    ell, m = 1.5, 5.0
    # a single mode sitting on the projection radius
    edge = SpectralState.single_mode(g, 5, 1.0)
    assert apply_diag(absA.power(ell), project_Pm(edge, absA, m)).norm() == pytest.approx(m ** ell)
    # the Q_m bound is attained as omega -> m from above
    shifted = DiagonalOperator(g, np.where(g.modes == 5, m + 1e-12, np.abs(g.modes)))
    lhs = y_ell_norm(project_Qm(edge, shifted, m), shifted, 0)
    rhs = m ** -ell * y_ell_norm(edge, shifted, ell)
    assert lhs == pytest.approx(rhs, rel=1e-10)


@pytest.mark.parametrize("seed", range(4))
def test_norm_monotone_in_ell(seed):
    g = ModeGrid(32)
    absA = DiagonalOperator(g, np.abs(g.modes).astype(float))
    U = random_state(g, seed=seed)
    vals = [y_ell_norm(U, absA, ell) for ell in (0, 0.25, 0.5, 1, 1.5, 3)]
    assert all(b >= a for a, b in zip(vals, vals[1:]))


def test_apply_diag_commutes_with_projections(grid16):
    absA = DiagonalOperator(grid16, np.abs(grid16.modes).astype(float))
    op = DiagonalOperator(grid16, 1j * grid16.modes - 0.3)
    U = random_state(grid16, seed=8)
    for proj in (project_Pm, project_Qm):
        a = apply_diag(op, proj(U, absA, 4)).coeffs
        b = proj(apply_diag(op, U), absA, 4).coeffs
        assert np.array_equal(a, b)
