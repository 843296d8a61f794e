"""Fourier-spectral carriers: mode grids, states, diagonal operators, norms
and spectral projections.

Coefficients are stored in FFT order, shape ``(n_comp, n_phys)``, and are
normalised as function-space Fourier coefficients::

    u(x_j) = sum_k c_k exp(i k x_j),    c_k = (1/N) sum_j u(x_j) exp(-i k x_j)

so that a constant field maps to a single ``k = 0`` coefficient equal to the
constant and the plain norm is the Euclidean norm of the coefficient array.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionError, GridMismatchError, InvariantError


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ModeGrid:
    """Wavenumbers carried by a periodic grid of ``n_phys`` points.

    ``modes`` is stored explicitly (FFT order by default, Nyquist as +N/2).
    """

    n_phys: int
    modes: np.ndarray = field(default=None)
    domain_length: float = 2 * np.pi

    def __post_init__(self):
        n = int(self.n_phys)
        if n <= 0 or n % 2:
            raise InvariantError(f"n_phys must be a positive even integer, got {self.n_phys}")
        if self.modes is None:
            k = np.fft.fftfreq(n, d=1.0 / n).astype(np.int64)
            k[n // 2] = n // 2
        else:
            k = np.asarray(self.modes, dtype=np.int64).copy()
        if k.shape != (n,):
            raise InvariantError("number of modes must equal n_phys")
        if np.count_nonzero(k == 0) != 1:
            raise InvariantError("wavenumber 0 must be present exactly once")
        object.__setattr__(self, "n_phys", n)
        object.__setattr__(self, "modes", _frozen(k))

    @property
    def x(self) -> np.ndarray:
        return self.domain_length * np.arange(self.n_phys) / self.n_phys

    def index_of(self, k: int) -> int:
        idx = np.flatnonzero(self.modes == k)
        if idx.size != 1:
            raise DimensionError(f"wavenumber {k} not carried by this grid")
        return int(idx[0])

    def compatible(self, other: "ModeGrid") -> bool:
        return self is other or (
            self.n_phys == other.n_phys
            and self.domain_length == other.domain_length
            and np.array_equal(self.modes, other.modes)
        )


def _as_coeff_array(values, n_comp: int, n_phys: int, dtype=np.complex128) -> np.ndarray:
    a = np.asarray(values, dtype=dtype)
    if a.size != n_comp * n_phys:
        raise DimensionError(
            f"expected {n_comp} x {n_phys} = {n_comp * n_phys} entries, got {a.size}"
        )
    return a.reshape(n_comp, n_phys)


@dataclass(frozen=True, eq=False)
class SpectralState:
    """Complex Fourier coefficients, indexed ``(component, mode)``."""

    grid: ModeGrid
    coeffs: np.ndarray

    def __post_init__(self):
        a = np.array(self.coeffs, dtype=np.complex128, copy=True)
        if a.ndim == 1:
            a = a.reshape(1, -1)
        if a.ndim != 2 or a.shape[1] != self.grid.n_phys:
            raise DimensionError(
                f"coefficient array of shape {a.shape} does not fit grid with n_phys={self.grid.n_phys}"
            )
        if not np.all(np.isfinite(a)):
            raise InvariantError("state contains non-finite coefficients")
        object.__setattr__(self, "coeffs", _frozen(a))

    @property
    def n_comp(self) -> int:
        return self.coeffs.shape[0]

    @classmethod
    def zeros(cls, grid: ModeGrid, n_comp: int = 1) -> "SpectralState":
        return cls(grid, np.zeros((n_comp, grid.n_phys), dtype=np.complex128))

    @classmethod
    def single_mode(cls, grid: ModeGrid, k: int, value: complex = 1.0,
                    n_comp: int = 1, comp: int = 0) -> "SpectralState":
        c = np.zeros((n_comp, grid.n_phys), dtype=np.complex128)
        c[comp, grid.index_of(k)] = value
        return cls(grid, c)

    def with_coeffs(self, coeffs) -> "SpectralState":
        return SpectralState(self.grid, coeffs)

    def _check(self, other: "SpectralState"):
        if not self.grid.compatible(other.grid) or self.n_comp != other.n_comp:
            raise GridMismatchError("states live on different grids or component counts")

    def __add__(self, other: "SpectralState") -> "SpectralState":
        self._check(other)
        return SpectralState(self.grid, self.coeffs + other.coeffs)

    def __sub__(self, other: "SpectralState") -> "SpectralState":
        self._check(other)
        return SpectralState(self.grid, self.coeffs - other.coeffs)

    def __mul__(self, scalar) -> "SpectralState":
        return SpectralState(self.grid, self.coeffs * scalar)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralState":
        return SpectralState(self.grid, -self.coeffs)

    def norm(self) -> float:
        """Plain (ell = 0) norm: Euclidean norm of all coefficients."""
        return float(np.linalg.norm(self.coeffs.ravel()))


@dataclass(frozen=True, eq=False)
class DiagonalOperator:
    """A normal operator stored by its eigenvalues in the state basis."""

    grid: ModeGrid
    eigenvalues: np.ndarray

    def __post_init__(self):
        a = np.array(self.eigenvalues, dtype=np.complex128, copy=True)
        if a.ndim == 1:
            a = a.reshape(1, -1)
        if a.ndim != 2 or a.shape[1] != self.grid.n_phys:
            raise DimensionError("eigenvalue array does not fit grid")
        if not np.all(np.isfinite(a)):
            raise InvariantError("operator has non-finite eigenvalues")
        object.__setattr__(self, "eigenvalues", _frozen(a))

    @property
    def n_comp(self) -> int:
        return self.eigenvalues.shape[0]

    @classmethod
    def identity(cls, grid: ModeGrid, n_comp: int = 1) -> "DiagonalOperator":
        return cls(grid, np.ones((n_comp, grid.n_phys), dtype=np.complex128))

    def scaled(self, factor) -> "DiagonalOperator":
        return DiagonalOperator(self.grid, self.eigenvalues * factor)

    def compose(self, other: "DiagonalOperator") -> "DiagonalOperator":
        _check_op(self, other.grid, other.n_comp)
        return DiagonalOperator(self.grid, self.eigenvalues * other.eigenvalues)

    def power(self, p: float) -> "DiagonalOperator":
        return DiagonalOperator(self.grid, self.eigenvalues ** p)

    def is_dissipative(self, tol: float = 0.0) -> bool:
        return bool(np.all(self.eigenvalues.real <= tol))


def _check_op(op: DiagonalOperator, grid: ModeGrid, n_comp: int):
    if not op.grid.compatible(grid) or op.n_comp != n_comp:
        raise GridMismatchError("operator and state live on different grids or component counts")


def to_spectral(samples, grid: ModeGrid, n_comp: int | None = None) -> SpectralState:
    """Forward transform of physical samples, per component."""
    a = np.asarray(samples)
    if n_comp is None:
        n_comp = 1 if a.ndim <= 1 else a.shape[0]
    a = _as_coeff_array(a, n_comp, grid.n_phys, dtype=np.result_type(a.dtype, np.complex128))
    coeffs = np.fft.fft(a, axis=-1) / grid.n_phys
    return SpectralState(grid, _reorder_from_fft(coeffs, grid))


def to_physical(state: SpectralState) -> np.ndarray:
    """Inverse of :func:`to_spectral`; returns a complex ``(n_comp, n_phys)`` array."""
    c = _reorder_to_fft(state.coeffs, state.grid)
    return np.fft.ifft(c, axis=-1) * state.grid.n_phys


def _fft_positions(grid: ModeGrid) -> np.ndarray:
    # FFT slot of each stored wavenumber (Nyquist +N/2 and -N/2 alias)
    return np.mod(grid.modes, grid.n_phys)


def _reorder_from_fft(coeffs: np.ndarray, grid: ModeGrid) -> np.ndarray:
    pos = _fft_positions(grid)
    if np.array_equal(pos, np.arange(grid.n_phys)):
        return coeffs
    return coeffs[:, pos]


def _reorder_to_fft(coeffs: np.ndarray, grid: ModeGrid) -> np.ndarray:
    pos = _fft_positions(grid)
    if np.array_equal(pos, np.arange(grid.n_phys)):
        return coeffs
    out = np.empty_like(coeffs)
    out[:, pos] = coeffs
    return out


def apply_diag(op: DiagonalOperator, state: SpectralState) -> SpectralState:
    _check_op(op, state.grid, state.n_comp)
    return SpectralState(state.grid, op.eigenvalues * state.coeffs)


def _abs_eigs(absA: DiagonalOperator, state: SpectralState) -> np.ndarray:
    _check_op(absA, state.grid, state.n_comp)
    w = absA.eigenvalues
    if np.any(np.abs(w.imag) > 0) or np.any(w.real < 0):
        raise InvariantError("|A| must have nonnegative real eigenvalues")
    return w.real


def y_ell_norm(state: SpectralState, absA: DiagonalOperator, ell: float = 0.0) -> float:
    """Norm of the scale space of order ``ell``.

    Modes with ``|A|``-eigenvalue at most 1 enter with weight 1, the rest with
    weight ``omega ** ell``.
    """
    if ell < 0:
        raise InvariantError(f"ell must be nonnegative, got {ell}")
    w = _abs_eigs(absA, state)
    weight = np.where(w <= 1.0, 1.0, w ** ell)
    return float(np.linalg.norm((weight * np.abs(state.coeffs)).ravel()))


def projection_mask(absA: DiagonalOperator, m: float) -> np.ndarray:
    """Boolean mask of the range of ``P_m`` (closed ball of radius ``m``)."""
    w = absA.eigenvalues
    if np.any(np.abs(w.imag) > 0) or np.any(w.real < 0):
        raise InvariantError("|A| must have nonnegative real eigenvalues")
    return w.real <= m


def project_Pm(state: SpectralState, absA: DiagonalOperator, m: float) -> SpectralState:
    if not m > 0:
        raise InvariantError(f"projection radius must be positive, got {m}")
    _check_op(absA, state.grid, state.n_comp)
    keep = projection_mask(absA, m)
    return SpectralState(state.grid, np.where(keep, state.coeffs, 0.0))


def project_Qm(state: SpectralState, absA: DiagonalOperator, m: float) -> SpectralState:
    if not m > 0:
        raise InvariantError(f"projection radius must be positive, got {m}")
    _check_op(absA, state.grid, state.n_comp)
    keep = projection_mask(absA, m)
    return SpectralState(state.grid, np.where(keep, 0.0, state.coeffs))
