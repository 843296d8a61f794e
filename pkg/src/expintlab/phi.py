"""phi-functions of scalars, diagonal operators and dense matrices.

phi_0(z) = exp(z) and, for k >= 1,

    phi_k(z) = int_0^1 exp((1 - s) z) s^(k-1) / (k-1)! ds
             = sum_j z^j / (j + k)!

which obey phi_{k+1}(z) = (phi_k(z) - 1/k!) / z.
"""

from __future__ import annotations

import math
import warnings
from typing import Iterable, Mapping

import numpy as np

from .errors import ContractViolationError, DimensionError, InvariantError, UnsupportedOrderError
from .spectral import DiagonalOperator

MAX_ORDER = 8
MAX_DENSE_DIM = 4096

# Taylor terms summed on the series branch; |z| < max(0.5, k) there, so the
# tail 8**N / (N + 8)! is far below double precision.
_N_TAYLOR = 40
_INV_FACT = np.array([1.0 / math.factorial(j) for j in range(_N_TAYLOR + MAX_ORDER + 2)])


def _check_order(k: int) -> int:
    if int(k) != k or k < 0:
        raise UnsupportedOrderError(f"phi order must be a nonnegative integer, got {k}")
    if k > MAX_ORDER:
        raise UnsupportedOrderError(f"phi order {k} exceeds supported maximum {MAX_ORDER}")
    return int(k)


def _series_radius(k: int) -> float:
    # The recurrence loses about log10(k!/|z|^k) digits for |z| < k, while
    # the series has no cancellation there (term ratio |z|/(j+k+1) < 1).
    return max(0.5, float(k))


def phi(k: int, z) -> np.ndarray:
    """Vectorised phi_k over an array of complex arguments."""
    k = _check_order(k)
    z = np.asarray(z, dtype=np.complex128)
    if k == 0:
        return np.exp(z)
    out = np.empty_like(z)
    small = np.abs(z) < _series_radius(k)
    if np.any(small):
        zs = z[small]
        acc = np.full(zs.shape, _INV_FACT[_N_TAYLOR + k], dtype=np.complex128)
        for j in range(_N_TAYLOR - 1, -1, -1):
            acc = acc * zs + _INV_FACT[j + k]
        out[small] = acc
    big = ~small
    if np.any(big):
        zb = z[big]
        acc = np.exp(zb)
        for j in range(k):
            acc = (acc - _INV_FACT[j]) / zb
        out[big] = acc
    return out


def phi_scalar(k: int, z: complex) -> complex:
    return complex(phi(k, np.complex128(z)))


def phi_diag(k: int, hA: DiagonalOperator, *, on_violation: str = "raise",
             tol: float = 0.0) -> DiagonalOperator:
    """phi_k applied eigenvalue-wise to a diagonal operator.

    Eigenvalues with real part above ``tol`` violate the dissipativity
    contract; ``on_violation`` selects ``"raise"``, ``"warn"`` or ``"ignore"``.
    """
    ev = hA.eigenvalues
    if np.any(ev.real > tol):
        msg = f"operator spectrum has real part up to {ev.real.max():.3e} > 0"
        if on_violation == "raise":
            raise ContractViolationError(msg)
        if on_violation == "warn":
            warnings.warn(msg, RuntimeWarning, stacklevel=2)
        elif on_violation != "ignore":
            raise ValueError(f"unknown on_violation mode {on_violation!r}")
    return DiagonalOperator(hA.grid, phi(k, ev))


# --- dense matrix exponential ------------------------------------------------

_PADE_COEFFS = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0),
    13: (64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
         1187353796428800.0, 129060195264000.0, 10559470521600.0,
         670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
         960960.0, 16380.0, 182.0, 1.0),
}
# 1-norm bounds below which the [m/m] Pade approximant is accurate to unit roundoff
_PADE_THETA = ((3, 1.495585217958292e-2), (5, 2.539398330063230e-1),
               (7, 9.504178996162932e-1), (9, 2.097847961257068e0),
               (13, 5.371920351148152e0))


def _pade(A: np.ndarray, m: int) -> np.ndarray:
    b = _PADE_COEFFS[m]
    n = A.shape[0]
    ident = np.eye(n, dtype=A.dtype)
    A2 = A @ A
    if m == 13:
        A4 = A2 @ A2
        A6 = A4 @ A2
        U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2)
                 + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * ident)
        V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * ident
    else:
        powers = [ident, A2]
        for _ in range(2, m // 2 + 1):
            powers.append(powers[-1] @ A2)
        U = sum(b[2 * j + 1] * powers[j] for j in range(m // 2 + 1))
        U = A @ U
        V = sum(b[2 * j] * powers[j] for j in range(m // 2 + 1))
    return np.linalg.solve(V - U, V + U)


def expm(A: np.ndarray) -> np.ndarray:
    """Matrix exponential by scaling and squaring with a diagonal Pade core."""
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise DimensionError("expm needs a square matrix")
    if not np.all(np.isfinite(A)):
        raise InvariantError("matrix has non-finite entries")
    A = A.astype(np.result_type(A.dtype, np.float64))
    norm1 = np.linalg.norm(A, 1) if A.size else 0.0
    for m, theta in _PADE_THETA[:-1]:
        if norm1 <= theta:
            return _pade(A, m)
    s = 0
    theta13 = _PADE_THETA[-1][1]
    if norm1 > theta13:
        s = max(0, int(math.ceil(math.log2(norm1 / theta13))))
    F = _pade(A / 2.0 ** s, 13)
    for _ in range(s):
        F = F @ F
    if not np.all(np.isfinite(F)):
        raise InvariantError("matrix exponential overflowed")
    return F


def phi_combination_matvec(M: np.ndarray, terms: Mapping[int, np.ndarray]) -> np.ndarray:
    """Return ``sum_k phi_k(M) w_k`` from one augmented exponential.

    With p = max k and W = [w_p, ..., w_1], the block matrix
    ``[[M, W], [0, J_p]]`` (J_p the nilpotent shift) has an exponential whose
    action on ``[w_0; e_p]`` has top block ``exp(M) w_0 + sum_k phi_k(M) w_k``.
    """
    M = np.asarray(M)
    d = M.shape[0]
    if M.ndim != 2 or M.shape[1] != d:
        raise DimensionError("matrix must be square")
    if d > MAX_DENSE_DIM:
        raise DimensionError(f"dense dimension {d} exceeds bound {MAX_DENSE_DIM}")
    if not np.all(np.isfinite(M)):
        raise InvariantError("matrix has non-finite entries")
    if not terms:
        return np.zeros(d, dtype=np.result_type(M.dtype, np.complex128))
    for k in terms:
        _check_order(k)
    p = max(terms)
    dtype = np.result_type(M.dtype, *[np.asarray(w).dtype for w in terms.values()], np.float64)
    vecs = {}
    for k, w in terms.items():
        w = np.asarray(w, dtype=dtype)
        if w.shape != (d,):
            raise DimensionError(f"vector for phi_{k} has shape {w.shape}, expected ({d},)")
        if not np.all(np.isfinite(w)):
            raise InvariantError("vector has non-finite entries")
        vecs[k] = w
    if p == 0:
        return expm(M) @ vecs[0]
    big = np.zeros((d + p, d + p), dtype=dtype)
    big[:d, :d] = M
    for k, w in vecs.items():
        if k >= 1:
            big[:d, d + p - k] = w
    big[d:d + p - 1, d + 1:d + p] = np.eye(p - 1)
    rhs = np.zeros(d + p, dtype=dtype)
    rhs[d + p - 1] = 1.0
    if 0 in vecs:
        rhs[:d] = vecs[0]
    return (expm(big) @ rhs)[:d]


def phi_matvec(orders: Iterable[int], M: np.ndarray, v: np.ndarray) -> dict[int, np.ndarray]:
    """``phi_k(M) v`` for each requested order.

    A single exponential of the ``(d + p)``-square matrix ``[[M, v e_1^T], [0, J_p]]``
    carries every ``phi_k(M) v``, k = 1..p, in its top-right block; ``exp(M) v`` is
    the top-left block applied to ``v``.
    """
    orders = sorted({_check_order(k) for k in orders})
    M = np.asarray(M)
    v = np.asarray(v)
    d = M.shape[0]
    if M.ndim != 2 or M.shape[1] != d or v.shape != (d,):
        raise DimensionError(f"matrix {M.shape} and vector {v.shape} do not match")
    if d > MAX_DENSE_DIM:
        raise DimensionError(f"dense dimension {d} exceeds bound {MAX_DENSE_DIM}")
    if not (np.all(np.isfinite(M)) and np.all(np.isfinite(v))):
        raise InvariantError("non-finite entries in matrix or vector")
    if not orders:
        return {}
    p = orders[-1]
    dtype = np.result_type(M.dtype, v.dtype, np.float64)
    big = np.zeros((d + p, d + p), dtype=dtype)
    big[:d, :d] = M
    if p:
        big[:d, d] = v
        big[d:d + p - 1, d + 1:d + p] = np.eye(p - 1)
    E = expm(big)
    out = {}
    for k in orders:
        out[k] = E[:d, :d] @ v if k == 0 else E[:d, d + k - 1].copy()
    return out
