"""Exponential Rosenbrock methods on a Galerkin-truncated space.

Each step relinearises around U0 with J = A + DB(U0) and remainder
G(U, U0) = B(U) - DB(U0) U:

    W  = exp(c h J) U0 1 + h a(hJ) G(W, U0)
    U1 = exp(h J) U0 + h b(hJ)^T G(W, U0)

J is not normal, so it is assembled as a dense matrix on the active modes
(|A|-eigenvalue <= m_active) and every coefficient function is applied through
augmented matrix exponentials. States outside the active set are dropped:
the method integrates the projected system u' = Au + P_m B(P_m u).
"""

from __future__ import annotations

from collections import defaultdict
from math import factorial
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    BlowUpError,
    ConfigError,
    DimensionError,
    InvariantError,
    StageDivergenceError,
)
from .exprk import (
    ExponentialTableau,
    StageSolveConfig,
    StepReport,
    builtin_tableaus,
    check_contraction,
)
from .phi import MAX_DENSE_DIM, phi_combination_matvec
from .problems import ProblemSpec
from .spectral import SpectralState, projection_mask

RosenbrockTableau = ExponentialTableau


def builtin_rosenbrock_tableaus() -> dict[str, RosenbrockTableau]:
    base = builtin_tableaus()
    ee = base["exp-euler"]
    tabs = {"rosenbrock-euler": RosenbrockTableau("rosenbrock-euler", ee.c, ee.a, ee.b, 2)}
    for name in ("exp-euler", "cox-matthews-4", "krogstad-4", "implicit-lawson-euler"):
        tabs[name] = base[name]
    return tabs


def get_rosenbrock_tableau(name: str) -> RosenbrockTableau:
    tabs = builtin_rosenbrock_tableaus()
    if name not in tabs:
        raise ConfigError(f"unknown Rosenbrock method {name!r}; available: {', '.join(sorted(tabs))}")
    return tabs[name]


@dataclass(frozen=True, eq=False)
class JacobianOperator:
    """Dense J(U0) = A + DB(U0) on the active coefficients.

    ``active`` holds flat indices into the ``(n_comp, n_phys)`` coefficient array.
    """

    matrix: np.ndarray
    active: np.ndarray
    m_active: float

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def scaled(self, h: float) -> np.ndarray:
        return h * self.matrix


def active_indices(problem: ProblemSpec, m_active: float) -> np.ndarray:
    mask = projection_mask(problem.absA, m_active)
    idx = np.flatnonzero(mask.ravel())
    if idx.size > MAX_DENSE_DIM:
        raise DimensionError(f"{idx.size} active coefficients exceed dense bound {MAX_DENSE_DIM}")
    if idx.size == 0:
        raise DimensionError(f"no modes with |A|-eigenvalue <= {m_active}")
    return idx


def _embed(problem: ProblemSpec, idx: np.ndarray, x: np.ndarray) -> np.ndarray:
    full = np.zeros(problem.n_comp * problem.grid.n_phys, dtype=complex)
    full[idx] = x
    return full.reshape(problem.n_comp, problem.grid.n_phys)


def assemble_jacobian(problem: ProblemSpec, U0: SpectralState, m_active: float) -> JacobianOperator:
    """Probe the exact derivative action with every active basis vector."""
    if not problem.complex_linear_derivative:
        raise ConfigError(
            f"problem {problem.name!r} has a derivative that is only real-linear; "
            "the dense complex Jacobian does not represent it")
    idx = active_indices(problem, m_active)
    d = idx.size
    u0 = _embed(problem, idx, U0.coeffs.ravel()[idx])
    J = np.empty((d, d), dtype=complex)
    for j in range(d):
        e = np.zeros(d, dtype=complex)
        e[j] = 1.0
        J[:, j] = problem.derivative(u0, _embed(problem, idx, e)).ravel()[idx]
    J[np.arange(d), np.arange(d)] += problem.A.eigenvalues.ravel()[idx]
    if not np.all(np.isfinite(J)):
        raise InvariantError("Jacobian has non-finite entries")
    return JacobianOperator(J, idx, m_active)


def remainder_G(problem: ProblemSpec, U: SpectralState, U0: SpectralState) -> SpectralState:
    """G(U, U0) = B(U) - DB(U0) U."""
    return SpectralState(problem.grid, problem.nonlinearity(U.coeffs) - problem.derivative(U0.coeffs, U.coeffs))


def _grouped_apply(hJ: np.ndarray, groups: dict) -> np.ndarray:
    """sum over scales lam of sum_k phi_k(lam hJ) w_{lam,k}."""
    out = None
    for lam, terms in groups.items():
        if lam == 0.0:
            # phi_k(0) = 1/k!
            part = sum(w / factorial(k) for k, w in terms.items())
        else:
            part = phi_combination_matvec(lam * hJ, terms)
        out = part if out is None else out + part
    return out


def rosenbrock_step(problem: ProblemSpec, tab: RosenbrockTableau, U0: SpectralState, h: float,
                    cfg: StageSolveConfig = StageSolveConfig(), m_active: float = 32,
                    jacobian: Optional[JacobianOperator] = None) -> tuple[SpectralState, StepReport]:
    if h < 0:
        raise InvariantError("step size must be nonnegative")
    jac = jacobian or assemble_jacobian(problem, U0, m_active)
    idx = jac.active
    x0 = U0.coeffs.ravel()[idx]
    if h == 0:
        return SpectralState(problem.grid, _embed(problem, idx, x0)), StepReport(0, 0.0)
    hJ = jac.scaled(h)
    u0 = _embed(problem, idx, x0)

    def G(x):
        full = _embed(problem, idx, x)
        g = problem.nonlinearity(full) - problem.derivative(u0, full)
        return g.ravel()[idx]

    s = tab.s

    def stage(i, GW):
        groups = defaultdict(dict)
        groups[float(tab.c[i])][0] = x0.copy()
        for j in range(s):
            if GW[j] is None:
                continue
            for t in tab.a[i][j].terms:
                if t.coef:
                    slot = groups[float(t.scale)]
                    slot[t.order] = slot.get(t.order, 0.0) + h * t.coef * GW[j]
        return _grouped_apply(hJ, groups)

    if tab.is_explicit:
        W, GW = [], []
        for i in range(s):
            W.append(stage(i, GW + [None] * (s - i)))
            GW.append(G(W[i]))
        rep_it, rep_res, residuals = 1, 0.0, (0.0,)
    else:
        if cfg.contraction_guard:
            check_contraction(problem, tab, x0, h, cfg, factor=2.0)
        GW0 = [None] * s
        W = [stage(i, GW0) for i in range(s)]
        residuals = []
        for it in range(1, cfg.max_iter + 1):
            GW = [G(w) for w in W]
            new = [stage(i, GW) for i in range(s)]
            res = max(float(np.linalg.norm(n - w)) for n, w in zip(new, W))
            residuals.append(res)
            W = new
            if not np.isfinite(res):
                raise BlowUpError("Rosenbrock stage iteration produced non-finite values")
            if res <= cfg.tol:
                break
        else:
            raise StageDivergenceError(
                f"Rosenbrock stages did not converge in {cfg.max_iter} iterations",
                residual=residuals[-1], iterations=cfg.max_iter)
        GW = [G(w) for w in W]
        rep_it, rep_res, residuals = it, residuals[-1], tuple(residuals)

    groups = defaultdict(dict)
    groups[1.0][0] = x0.copy()
    for i in range(s):
        for t in tab.b[i].terms:
            if t.coef:
                slot = groups[float(t.scale)]
                slot[t.order] = slot.get(t.order, 0.0) + h * t.coef * GW[i]
    x1 = _grouped_apply(hJ, groups)
    if not np.all(np.isfinite(x1)):
        raise BlowUpError("Rosenbrock step produced non-finite values")
    U1 = SpectralState(problem.grid, _embed(problem, idx, x1))
    return U1, StepReport(rep_it, rep_res, True, residuals, float(np.linalg.norm(x1)))


def integrate_rosenbrock(problem: ProblemSpec, tab: RosenbrockTableau, U0: SpectralState, T: float,
                         n_steps: int, m_active: float = 32,
                         cfg: StageSolveConfig = StageSolveConfig()) -> tuple[SpectralState, list[StepReport]]:
    if n_steps < 1 or int(n_steps) != n_steps:
        raise InvariantError("n_steps must be a positive integer")
    if not T > 0:
        raise InvariantError("T must be positive")
    h = T / n_steps
    U = U0
    reports = []
    for n in range(int(n_steps)):
        try:
            U, rep = rosenbrock_step(problem, tab, U, h, cfg, m_active)
        except BlowUpError as exc:
            raise BlowUpError(f"step {n}: {exc}", step_index=n) from exc
        except StageDivergenceError as exc:
            raise StageDivergenceError(f"step {n}: {exc}", exc.residual, exc.iterations,
                                       step_index=n) from exc
        reports.append(rep)
    return U, reports
