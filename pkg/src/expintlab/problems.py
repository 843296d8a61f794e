"""Model problems dU/dt = AU + B(U) on periodic grids, and rough initial data.

Every problem is stored in a basis that diagonalises A, so the steppers only
ever see a :class:`~expintlab.spectral.DiagonalOperator` and a nonlinearity
acting on coefficient arrays of shape ``(n_comp, n_phys)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Optional

import numpy as np
import scipy.fft as sfft

from .errors import ConfigError, InvariantError
from .spectral import (
    DiagonalOperator,
    ModeGrid,
    SpectralState,
    projection_mask,
    to_physical,
    to_spectral,
    y_ell_norm,
)

ArrayMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """One semilinear evolution equation in its diagonalising basis.

    ``nonlinearity(c)`` and ``derivative(c0, v)`` act on raw coefficient
    arrays; :meth:`B` and :meth:`DB_action` wrap them for states.
    ``derivative`` must be the exact derivative of ``nonlinearity``.
    """

    name: str
    grid: ModeGrid
    A: DiagonalOperator
    absA: DiagonalOperator
    nonlinearity: ArrayMap
    derivative: Callable[[np.ndarray, np.ndarray], np.ndarray]
    lipschitz_hint: Optional[Callable[[float], float]] = None
    # |A| grows like |k| ** spectral_degree; used to build rough data
    spectral_degree: float = 1.0
    # False when DB(U0) is only real-linear (conjugates its argument)
    complex_linear_derivative: bool = True
    # physical fields (n_fields, n_phys) <-> state coefficients
    from_fields: Optional[Callable[[np.ndarray], np.ndarray]] = None
    to_fields: Optional[Callable[[np.ndarray], np.ndarray]] = None
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if not (self.A.grid.compatible(self.grid) and self.absA.grid.compatible(self.grid)):
            raise InvariantError("operators must live on the problem grid")
        if self.A.n_comp != self.absA.n_comp:
            raise InvariantError("A and |A| disagree on component count")
        if not self.A.is_dissipative():
            raise InvariantError("A must have spectrum in the closed left half-plane")

    @property
    def n_comp(self) -> int:
        return self.A.n_comp

    def state(self, coeffs) -> SpectralState:
        return SpectralState(self.grid, np.reshape(coeffs, (self.n_comp, self.grid.n_phys)))

    def B(self, U: SpectralState) -> SpectralState:
        return SpectralState(self.grid, self.nonlinearity(U.coeffs))

    def DB_action(self, U0: SpectralState, V: SpectralState) -> SpectralState:
        return SpectralState(self.grid, self.derivative(U0.coeffs, V.coeffs))

    def norm(self, U: SpectralState, ell: float = 0.0) -> float:
        return y_ell_norm(U, self.absA, ell)

    def fields(self, U: SpectralState) -> np.ndarray:
        """Physical fields of a state (e.g. ``(u, v)`` for the wave problem)."""
        c = self.to_fields(U.coeffs) if self.to_fields else U.coeffs
        return to_physical(SpectralState(self.grid, c))

    def state_from_fields(self, fields) -> SpectralState:
        f = np.atleast_2d(np.asarray(fields))
        c = to_spectral(f, self.grid, n_comp=f.shape[0]).coeffs
        return SpectralState(self.grid, self.from_fields(c) if self.from_fields else c)

    def projected(self, m: float) -> "ProblemSpec":
        """Galerkin truncation: nonlinearity replaced by ``P_m B(P_m U)``."""
        if not m > 0:
            raise InvariantError("projection radius must be positive")
        keep = projection_mask(self.absA, m)
        B, DB = self.nonlinearity, self.derivative

        def nonlinearity(c):
            return np.where(keep, B(np.where(keep, c, 0.0)), 0.0)

        def derivative(c0, v):
            return np.where(keep, DB(np.where(keep, c0, 0.0), np.where(keep, v, 0.0)), 0.0)

        params = dict(self.params, galerkin_m=m)
        return replace(self, name=f"{self.name}[P_{m:g}]", nonlinearity=nonlinearity,
                       derivative=derivative, params=params)


def _as_grid(n_phys) -> ModeGrid:
    if not isinstance(n_phys, ModeGrid):
        return ModeGrid(int(n_phys))
    if not np.array_equal(n_phys.modes, ModeGrid(n_phys.n_phys).modes):
        raise ConfigError("pseudospectral problems need the standard FFT-ordered grid")
    return n_phys


def _dealias_mask(grid: ModeGrid) -> np.ndarray:
    return np.abs(grid.modes) <= grid.n_phys // 3


# --- semilinear wave ---------------------------------------------------------

WAVE_ENERGY_SHIFT = {"H1xL2": 0.0, "L2xH-1": -1.0}


def make_wave(n_phys, *, energy: str = "L2xH-1", dealias: bool = False) -> ProblemSpec:
    """u_tt = u_xx - V'(u) with V'(u) = u - 4u^2 on [0, 2 pi).

    The linear part of V' joins A, so each mode (u_k, v_k), v = u_t, evolves
    under [[0, 1], [-w_k^2, 0]] with w_k = sqrt(k^2 + 1). The characteristic
    variables

        p_k = w_k^s (v_k + i w_k u_k) / sqrt(2),   q_k = w_k^s (v_k - i w_k u_k) / sqrt(2)

    diagonalise it with eigenvalues +i w_k and -i w_k. Their Euclidean norm is
    the H^(1+s) x H^s energy; ``energy`` picks s = 0 ("H1xL2") or s = -1
    ("L2xH-1"). B(U) = (0, 4u^2) is evaluated pseudospectrally.
    """
    if energy not in WAVE_ENERGY_SHIFT:
        raise ConfigError(f"unknown wave energy space {energy!r}; choose from {sorted(WAVE_ENERGY_SHIFT)}")
    grid = _as_grid(n_phys)
    if grid.n_phys < 8:
        raise ConfigError("wave problem needs n_phys >= 8")
    s = WAVE_ENERGY_SHIFT[energy]
    k = grid.modes.astype(float)
    omega = np.sqrt(k * k + 1.0)
    ws = omega ** s
    A = DiagonalOperator(grid, np.stack([1j * omega, -1j * omega]))
    absA = DiagonalOperator(grid, np.stack([omega, omega]))
    r2 = np.sqrt(2.0)
    # u_k = (p_k - q_k) * to_u,  forcing N_k enters both components as N_k * from_v
    to_u = 1.0 / (r2 * 1j * omega * ws)
    from_v = ws / r2
    if dealias:
        from_v = np.where(_dealias_mask(grid), from_v, 0.0)

    def to_fields(c):
        return np.stack([(c[0] - c[1]) * to_u, (c[0] + c[1]) / (r2 * ws)])

    def from_fields(f):
        uh, vh = f[0], f[1]
        return np.stack([ws * (vh + 1j * omega * uh) / r2, ws * (vh - 1j * omega * uh) / r2])

    def forcing(w):
        g = sfft.fft(w, norm="forward") * from_v
        out = np.empty((2, g.size), dtype=complex)
        out[0] = g
        out[1] = g
        return out

    def nonlinearity(c):
        u = sfft.ifft((c[0] - c[1]) * to_u, norm="forward")
        return forcing(4.0 * u * u)

    def derivative(c0, v):
        u0 = sfft.ifft((c0[0] - c0[1]) * to_u, norm="forward")
        du = sfft.ifft((v[0] - v[1]) * to_u, norm="forward")
        return forcing(8.0 * u0 * du)

    # sup|u| <= sqrt(sum w^-2) ||U|| and |N_k| <= 8 |u0| |du| give, for both
    # energy choices, ||DB(U0)|| <= 8 sqrt(sum_k w_k^-2) ||U0||.
    sup_const = float(np.sqrt(np.sum(omega ** -2.0)))

    def lipschitz(R):
        return 8.0 * sup_const * R

    return ProblemSpec(
        name="wave", grid=grid, A=A, absA=absA, nonlinearity=nonlinearity,
        derivative=derivative, lipschitz_hint=lipschitz, spectral_degree=1.0,
        from_fields=from_fields, to_fields=to_fields,
        params={"energy": energy, "dealias": dealias},
    )


# --- cubic Schroedinger ------------------------------------------------------

def make_nls(n_phys, *, dealias: bool = False) -> ProblemSpec:
    """Defocusing cubic NLS  u_t = i u_xx - i |u|^2 u."""
    grid = _as_grid(n_phys)
    k = grid.modes.astype(float)
    A = DiagonalOperator(grid, -1j * k * k)
    absA = DiagonalOperator(grid, (k * k).astype(complex))
    keep = _dealias_mask(grid) if dealias else None

    def _out(w):
        N = sfft.fft(w, norm="forward")
        if keep is not None:
            N = np.where(keep, N, 0.0)
        return N.reshape(1, -1)

    def nonlinearity(c):
        u = sfft.ifft(c[0], norm="forward")
        return _out(-1j * (u * np.conj(u)) * u)

    def derivative(c0, v):
        u = sfft.ifft(c0[0], norm="forward")
        w = sfft.ifft(v[0], norm="forward")
        return _out(-1j * (2.0 * (u * np.conj(u)) * w + u * u * np.conj(w)))

    return ProblemSpec(
        name="nls", grid=grid, A=A, absA=absA, nonlinearity=nonlinearity,
        derivative=derivative, lipschitz_hint=None, spectral_degree=2.0,
        complex_linear_derivative=False, params={"dealias": dealias},
    )


def nls_plane_wave(problem: ProblemSpec, amplitude: complex, t: float) -> SpectralState:
    """Exact NLS flow of u0 = c e^{ix}: u(t) = c e^{ix} e^{-i t (1 + |c|^2)}."""
    if not problem.name.startswith("nls"):
        raise ConfigError("plane-wave solution is specific to the nls problem")
    c = complex(amplitude)
    return SpectralState.single_mode(problem.grid, 1, c * np.exp(-1j * t * (1.0 + abs(c) ** 2)))


# --- linear commuting example -----------------------------------------------

def make_linear_commuting(n_phys, lam=0.0) -> ProblemSpec:
    """A e_k = i k e_k and B e_k = lambda_k e_k, so [A, B] = 0.

    ``lam`` is a constant, an array over the grid's modes, or a callable of
    the wavenumber array.
    """
    grid = _as_grid(n_phys)
    k = grid.modes.astype(float)
    if callable(lam):
        lam_k = np.asarray(lam(grid.modes), dtype=complex)
    else:
        try:
            lam_k = np.broadcast_to(np.asarray(lam, dtype=complex), k.shape).copy()
        except ValueError:
            raise ConfigError("lambda must be a scalar or give one value per mode") from None
    if lam_k.shape != k.shape or not np.all(np.isfinite(lam_k)):
        raise ConfigError("lambda must give one finite value per mode")
    lam_k = lam_k.reshape(1, -1)
    A = DiagonalOperator(grid, 1j * k)
    absA = DiagonalOperator(grid, np.abs(k).astype(complex))
    bound = float(np.max(np.abs(lam_k)))
    return ProblemSpec(
        name="linear", grid=grid, A=A, absA=absA,
        nonlinearity=lambda c: lam_k * c,
        derivative=lambda c0, v: lam_k * v,
        lipschitz_hint=lambda R: bound, spectral_degree=1.0,
        params={"lambda": lam_k[0]},
    )


def make_diagonal(grid, A_eigs, *, B=None, DB=None, absA=None, name="diagonal",
                  lipschitz=None) -> ProblemSpec:
    """Generic problem with a given spectrum; ``B`` defaults to zero."""
    grid = _as_grid(grid)
    eigs = np.asarray(A_eigs, dtype=complex)
    if eigs.ndim < 2:
        eigs = np.broadcast_to(eigs, (1, grid.n_phys))
    A = DiagonalOperator(grid, eigs)
    absA = absA if absA is not None else DiagonalOperator(grid, np.abs(A.eigenvalues))
    if B is None:
        B = lambda c: np.zeros_like(c)
        DB = lambda c0, v: np.zeros_like(v)
    return ProblemSpec(name=name, grid=grid, A=A, absA=absA, nonlinearity=B,
                       derivative=DB, lipschitz_hint=lipschitz)


PROBLEMS = {
    "wave": make_wave,
    "nls": make_nls,
    "linear": make_linear_commuting,
}


def make_problem(name: str, n_phys, **kwargs) -> ProblemSpec:
    try:
        factory = PROBLEMS[name]
    except KeyError:
        raise ConfigError(f"unknown problem {name!r}; available: {sorted(PROBLEMS)}") from None
    return factory(n_phys, **kwargs)


# --- initial data ------------------------------------------------------------

def _rough_series(grid: ModeGrid, exponent: float) -> np.ndarray:
    """Coefficients of sum_{k=1}^{N/2-1} k^-exponent (cos kx + sin kx)."""
    k = grid.modes
    c = np.zeros(grid.n_phys, dtype=complex)
    kmax = grid.n_phys // 2 - 1
    pos = (k >= 1) & (k <= kmax)
    neg = (k <= -1) & (k >= -kmax)
    # cos kx + sin kx = (1 - i)/2 e^{ikx} + (1 + i)/2 e^{-ikx}
    c[pos] = 0.5 * (1 - 1j) * k[pos].astype(float) ** -exponent
    c[neg] = 0.5 * (1 + 1j) * (-k[neg]).astype(float) ** -exponent
    return c


def y_ell_initial_data(problem: ProblemSpec, ell: float, epsilon: float = 1e-8,
                       split: tuple[float, float] = (1.0, 1.0)) -> SpectralState:
    """Rough data normalised to unit norm of order ``ell``.

    For the wave problem both u0 and v0 are
    ``c * sum_{k=1}^{N/2-1} k^-(ell + 1/2 + eps) (cos kx + sin kx)``
    (``split`` sets c_u : c_v). Single-component problems use the exponent
    ``ell * spectral_degree + 1/2 + eps`` so the data sits at the same place
    of their scale.
    """
    if ell < 0:
        raise InvariantError("ell must be nonnegative")
    grid = problem.grid
    if problem.name.startswith("wave"):
        base = _rough_series(grid, ell + 0.5 + epsilon)
        fields = np.stack([split[0] * base, split[1] * base])
        coeffs = problem.from_fields(fields)
    elif problem.n_comp == 1:
        coeffs = _rough_series(grid, ell * problem.spectral_degree + 0.5 + epsilon).reshape(1, -1)
    else:
        raise ConfigError(f"no rough-data recipe for problem {problem.name!r}")
    U = SpectralState(grid, coeffs)
    nrm = y_ell_norm(U, problem.absA, ell)
    if not nrm > 0:
        raise InvariantError("initial data has zero norm")
    return U * (1.0 / nrm)


def smooth_initial_data(problem: ProblemSpec, amplitude: float = 0.1) -> SpectralState:
    """Single low-mode data: u = a cos x, v = a sin x (wave) or u = a e^{ix}."""
    x = problem.grid.x
    if problem.name.startswith("wave"):
        return problem.state_from_fields(np.stack([amplitude * np.cos(x), amplitude * np.sin(x)]))
    return problem.state_from_fields(amplitude * np.exp(1j * x))
