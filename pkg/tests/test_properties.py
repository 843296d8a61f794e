import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st

from expintlab.exprk import get_tableau, integrate, step
from expintlab.phi import phi
from expintlab.problems import make_linear_commuting, make_wave
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

GRID = ModeGrid(32)
WAVE = make_wave(32)
ABS_K = DiagonalOperator(GRID, np.abs(GRID.modes).astype(complex))

seeds = st.integers(min_value=0, max_value=2 ** 32 - 1)
radii = st.floats(min_value=0.25, max_value=20.0)
ells = st.floats(min_value=0.0, max_value=4.0)


def state_from_seed(seed, grid=GRID, n_comp=1):
    rng = np.random.default_rng(seed)
    c = rng.standard_normal((n_comp, grid.n_phys)) + 1j * rng.standard_normal((n_comp, grid.n_phys))
    return SpectralState(grid, c)


@settings(max_examples=60, deadline=None)
@given(seeds, radii)
def test_projections_split_state(seed, m):
    U = state_from_seed(seed)
    P, Q = project_Pm(U, ABS_K, m), project_Qm(U, ABS_K, m)
    assert np.array_equal((P + Q).coeffs, U.coeffs)
    assert np.array_equal(project_Pm(P, ABS_K, m).coeffs, P.coeffs)
    assert np.all(project_Pm(Q, ABS_K, m).coeffs == 0)
    assert abs(P.norm() ** 2 + Q.norm() ** 2 - U.norm() ** 2) <= 1e-10 * U.norm() ** 2


@settings(max_examples=60, deadline=None)
@given(seeds, radii, radii)
def test_projection_nested(seed, m1, m2):
    lo, hi = sorted((m1, m2))
    U = state_from_seed(seed)
    inner = project_Pm(project_Pm(U, ABS_K, hi), ABS_K, lo)
    assert np.array_equal(inner.coeffs, project_Pm(U, ABS_K, lo).coeffs)


@settings(max_examples=60, deadline=None)
@given(seeds, ells, ells)
def test_norm_monotone_in_ell(seed, l1, l2):
    lo, hi = sorted((l1, l2))
    U = state_from_seed(seed)
    assert y_ell_norm(U, ABS_K, lo) <= y_ell_norm(U, ABS_K, hi) * (1 + 1e-14)


@settings(max_examples=60, deadline=None)
@given(seeds, radii, ells)
def test_projection_contracts_norm(seed, m, ell):
    U = state_from_seed(seed)
    assert y_ell_norm(project_Pm(U, ABS_K, m), ABS_K, ell) <= y_ell_norm(U, ABS_K, ell)


@settings(max_examples=60, deadline=None)
@given(seeds, st.sampled_from([8, 16, 64]))
def test_physical_round_trip(seed, n):
    grid = ModeGrid(n)
    U = state_from_seed(seed, grid, 2)
    back = to_spectral(to_physical(U), grid, 2)
    assert np.max(np.abs(back.coeffs - U.coeffs)) <= 1e-12 * np.max(np.abs(U.coeffs))


@settings(max_examples=40, deadline=None)
@given(seeds, st.floats(min_value=-5.0, max_value=5.0))
def test_linear_flow_preserves_energy(seed, t):
    U = state_from_seed(seed, GRID, 2)
    op = DiagonalOperator(GRID, np.exp(t * WAVE.A.eigenvalues))
    assert abs(apply_diag(op, U).norm() - U.norm()) <= 1e-12 * U.norm()


@settings(max_examples=60, deadline=None)
@given(st.integers(min_value=0, max_value=4),
       st.complex_numbers(max_magnitude=40.0, allow_nan=False, allow_infinity=False))
def test_phi_recurrence(k, z):
    lhs = phi(k, z)
    rhs = z * phi(k + 1, z) + 1.0 / np.prod(np.arange(1, k + 1, dtype=float))
    assert abs(lhs - rhs) <= 1e-12 * max(1.0, abs(lhs), abs(z * phi(k + 1, z)))


@settings(max_examples=20, deadline=None)
@given(seeds, st.sampled_from(["exp-euler", "cox-matthews-4", "krogstad-4", "implicit-lawson-euler"]))
def test_steps_are_deterministic(seed, name):
    rng = np.random.default_rng(seed)
    x = WAVE.grid.x
    u = 0.05 * rng.standard_normal() * np.cos(x) + 0.05 * rng.standard_normal() * np.sin(2 * x)
    U0 = WAVE.state_from_fields(np.stack([u, 0.0 * x]))
    tab = get_tableau(name)
    a, _ = step(WAVE, tab, U0, 0.05)
    b, _ = step(WAVE, tab, U0, 0.05)
    assert np.array_equal(a.coeffs, b.coeffs)


@settings(max_examples=30, deadline=None)
@given(seeds, st.floats(min_value=-2.0, max_value=0.0), st.sampled_from([1, 3, 8]))
def test_linear_problem_integration_matches_flow(seed, lam, n):
    problem = make_linear_commuting(16, lam)
    U0 = state_from_seed(seed, problem.grid)
    U, _ = integrate(problem, get_tableau("cox-matthews-4"), U0, 0.5, n)
    U1, _ = integrate(problem, get_tableau("cox-matthews-4"), U0, 0.5, n)
    assert np.array_equal(U.coeffs, U1.coeffs)
    assert np.all(np.isfinite(U.coeffs))
