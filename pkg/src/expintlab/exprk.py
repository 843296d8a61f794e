"""Exponential Runge-Kutta methods

    W   = exp(h c A) U0 1 + h a(hA) B(W)
    U1  = exp(h A) U0 + h b(hA)^T B(W)

with coefficient functions given as linear combinations of phi_k(lambda z).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import (
    BlowUpError,
    ConfigError,
    ContractionGuardError,
    InvariantError,
    StageDivergenceError,
)
from .phi import _check_order, phi, phi_diag
from .problems import ProblemSpec
from .spectral import DiagonalOperator, SpectralState


@dataclass(frozen=True)
class PhiTerm:
    coef: float
    order: int
    scale: float = 1.0

    def __post_init__(self):
        _check_order(self.order)
        if self.scale < 0:
            raise InvariantError("phi argument scalings must be nonnegative")


@dataclass(frozen=True)
class PhiCombination:
    """z -> sum_j coef_j * phi_{order_j}(scale_j * z)."""

    terms: tuple[PhiTerm, ...] = ()

    @classmethod
    def of(cls, *terms) -> "PhiCombination":
        return cls(tuple(t if isinstance(t, PhiTerm) else PhiTerm(*t) for t in terms))

    @property
    def is_zero(self) -> bool:
        return all(t.coef == 0 for t in self.terms)

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        out = np.zeros_like(z)
        for t in self.terms:
            if t.coef:
                out = out + t.coef * phi(t.order, t.scale * z)
        return out

    def on_diag(self, hA: DiagonalOperator, on_violation: str = "raise") -> np.ndarray:
        out = np.zeros_like(hA.eigenvalues)
        for t in self.terms:
            if t.coef:
                out = out + t.coef * phi_diag(t.order, hA.scaled(t.scale),
                                              on_violation=on_violation).eigenvalues
        return out

    def bound(self) -> float:
        """sup over Re z <= 0 of |value|, bounded using |phi_k| <= 1/k!."""
        return float(sum(abs(t.coef) / math.factorial(t.order) for t in self.terms))


ZERO = PhiCombination()


@dataclass(frozen=True)
class ExponentialTableau:
    name: str
    c: tuple[float, ...]
    a: tuple[tuple[PhiCombination, ...], ...]
    b: tuple[PhiCombination, ...]
    order: int

    def __post_init__(self):
        s = len(self.c)
        if s < 1 or len(self.b) != s or len(self.a) != s or any(len(row) != s for row in self.a):
            raise InvariantError(f"tableau {self.name!r} has inconsistent stage counts")
        c = np.asarray(self.c, dtype=float)
        if np.any(c < 0) or np.any(c > 1) or np.any(np.diff(c) < 0):
            raise InvariantError("nodes must satisfy 0 <= c_1 <= ... <= c_s <= 1")

    @property
    def s(self) -> int:
        return len(self.c)

    @property
    def is_explicit(self) -> bool:
        return all(self.a[i][j].is_zero for i in range(self.s) for j in range(i, self.s))

    def a_bound(self) -> float:
        """Infinity-norm bound of a(z) over the closed left half-plane."""
        return max(sum(aij.bound() for aij in row) for row in self.a)

    def b_bound(self) -> float:
        return sum(bi.bound() for bi in self.b)


def _phis(*terms) -> PhiCombination:
    return PhiCombination.of(*terms)


def _square(s, entries: dict) -> tuple:
    return tuple(tuple(entries.get((i, j), ZERO) for j in range(s)) for i in range(s))


def builtin_tableaus() -> dict[str, ExponentialTableau]:
    half = 0.5
    # b-weights shared by the fourth-order schemes
    b4 = (
        _phis((1, 1), (-3, 2), (4, 3)),
        _phis((2, 2), (-4, 3)),
        _phis((2, 2), (-4, 3)),
        _phis((-1, 2), (4, 3)),
    )
    tabs = [
        ExponentialTableau("exp-euler", (0.0,), _square(1, {}), (_phis((1, 1)),), 1),
        ExponentialTableau("euler-larson", (0.0,), _square(1, {}), (_phis((1, 0)),), 1),
        # constant 1 written as phi_0(0 * z)
        ExponentialTableau("implicit-lawson-euler", (1.0,), _square(1, {(0, 0): _phis((1, 0, 0.0))}),
                           (_phis((1, 0, 0.0)),), 1),
        # Cox-Matthews ETDRK4; a_41 = phi_1(z/2)(e^{z/2} - 1)/2 = phi_1(z) - phi_1(z/2)
        ExponentialTableau(
            "cox-matthews-4", (0.0, half, half, 1.0),
            _square(4, {
                (1, 0): _phis((half, 1, half)),
                (2, 1): _phis((half, 1, half)),
                (3, 0): _phis((1, 1), (-1, 1, half)),
                (3, 2): _phis((1, 1, half)),
            }),
            b4, 4),
        ExponentialTableau(
            "krogstad-4", (0.0, half, half, 1.0),
            _square(4, {
                (1, 0): _phis((half, 1, half)),
                (2, 0): _phis((half, 1, half), (-1, 2, half)),
                (2, 1): _phis((1, 2, half)),
                (3, 0): _phis((1, 1), (-2, 2)),
                (3, 2): _phis((2, 2)),
            }),
            b4, 4),
    ]
    return {t.name: t for t in tabs}


def get_tableau(name: str) -> ExponentialTableau:
    tabs = builtin_tableaus()
    if name not in tabs:
        raise ConfigError(f"unknown method {name!r}; available tableaus: {', '.join(sorted(tabs))}")
    return tabs[name]


@dataclass(frozen=True)
class StageSolveConfig:
    tol: float = 1e-12
    max_iter: int = 50
    contraction_guard: bool = False
    # overrides problem.lipschitz_hint when set
    lipschitz: Optional[float] = None
    on_violation: str = "raise"

    def __post_init__(self):
        if not self.tol > 0:
            raise InvariantError("tol must be positive")
        if self.max_iter < 1:
            raise InvariantError("max_iter must be at least 1")


@dataclass(frozen=True)
class StepReport:
    iterations_used: int
    residual: float
    accepted: bool = True
    residuals: tuple[float, ...] = ()
    norm: float = float("nan")


def _stage_norm(x: np.ndarray) -> float:
    return float(np.linalg.norm(x.ravel()))


def check_contraction(problem: ProblemSpec, tab: ExponentialTableau, U0: np.ndarray, h: float,
                      cfg: StageSolveConfig, factor: float = 1.0) -> float:
    """Return h * M_a * factor * M'[R] with R = 2 ||U0||; raise above 1/2."""
    if cfg.lipschitz is not None:
        L = cfg.lipschitz
    elif problem.lipschitz_hint is not None:
        L = problem.lipschitz_hint(2.0 * _stage_norm(U0))
    else:
        raise ContractionGuardError(f"problem {problem.name!r} has no Lipschitz estimate for the guard")
    q = h * tab.a_bound() * factor * L
    if q > 0.5:
        raise ContractionGuardError(
            f"h * M_a * M' = {q:.4g} > 1/2; reduce h below {0.5 * h / q:.4g}")
    return q


class ExpRKStepper:
    """Coefficient arrays of one tableau for one (problem, h), reused across steps."""

    def __init__(self, problem: ProblemSpec, tab: ExponentialTableau, h: float,
                 cfg: StageSolveConfig = StageSolveConfig()):
        if h < 0:
            raise InvariantError("step size must be nonnegative")
        self.problem, self.tab, self.h, self.cfg = problem, tab, float(h), cfg
        hA = problem.A.scaled(self.h)
        ov = cfg.on_violation
        self.exp_c = [phi_diag(0, hA.scaled(ci), on_violation=ov).eigenvalues for ci in tab.c]
        self.exp_h = phi_diag(0, hA, on_violation=ov).eigenvalues
        s = tab.s
        # h-weighted coefficient arrays; None marks identically-zero entries
        self.a = [[None if tab.a[i][j].is_zero else self.h * tab.a[i][j].on_diag(hA, ov)
                   for j in range(s)] for i in range(s)]
        self.b = [None if bi.is_zero else self.h * bi.on_diag(hA, ov) for bi in tab.b]
        # stages whose B value is read by a later stage or by the update
        self.needed = [self.b[j] is not None or any(self.a[i][j] is not None for i in range(s))
                       for j in range(s)]

    def _B(self, w: np.ndarray) -> np.ndarray:
        # non-finite values propagate into the step result, which is checked
        return self.problem.nonlinearity(w)

    def stages(self, U0: np.ndarray) -> tuple[list[np.ndarray], list[np.ndarray], StepReport]:
        """Stage vectors, their B values and the solve report."""
        s = self.tab.s
        if self.tab.is_explicit:
            W, BW = [], []
            for i in range(s):
                w = self.exp_c[i] * U0
                for j in range(i):
                    if self.a[i][j] is not None:
                        w = w + self.a[i][j] * BW[j]
                W.append(w)
                BW.append(self._B(w) if self.needed[i] else None)
            return W, BW, StepReport(1, 0.0, True, (0.0,))
        if self.cfg.contraction_guard:
            check_contraction(self.problem, self.tab, U0, self.h, self.cfg)
        base = [self.exp_c[i] * U0 for i in range(s)]
        W = list(base)
        residuals = []
        for it in range(1, self.cfg.max_iter + 1):
            BW = [self._B(w) for w in W]
            new = []
            for i in range(s):
                w = base[i]
                for j in range(s):
                    if self.a[i][j] is not None:
                        w = w + self.a[i][j] * BW[j]
                new.append(w)
            res = max(_stage_norm(n - w) for n, w in zip(new, W))
            residuals.append(res)
            W = new
            if not np.isfinite(res):
                raise BlowUpError("stage iteration produced non-finite values")
            if res <= self.cfg.tol:
                BW = [self._B(w) if self.needed[i] else None for i, w in enumerate(W)]
                return W, BW, StepReport(it, res, True, tuple(residuals))
        raise StageDivergenceError(
            f"stage fixed point not reached in {self.cfg.max_iter} iterations "
            f"(last residual {residuals[-1]:.3e})", residual=residuals[-1],
            iterations=self.cfg.max_iter)

    def step_array(self, U0: np.ndarray) -> tuple[np.ndarray, StepReport]:
        if self.h == 0.0:
            return U0.copy(), StepReport(0, 0.0, True, (), _stage_norm(U0))
        # overflow is reported as BlowUpError below, not as a numpy warning
        with np.errstate(over="ignore", invalid="ignore"):
            _, BW, rep = self.stages(U0)
            U1 = self.exp_h * U0
            for i, bi in enumerate(self.b):
                if bi is not None:
                    U1 = U1 + bi * BW[i]
        if not np.all(np.isfinite(U1)):
            raise BlowUpError("step produced non-finite values")
        return U1, StepReport(rep.iterations_used, rep.residual, True, rep.residuals, _stage_norm(U1))


def solve_stages(problem: ProblemSpec, tab: ExponentialTableau, U0: SpectralState, h: float,
                 cfg: StageSolveConfig = StageSolveConfig()) -> tuple[list[SpectralState], StepReport]:
    W, _, rep = ExpRKStepper(problem, tab, h, cfg).stages(U0.coeffs)
    return [U0.with_coeffs(w) for w in W], rep


def step(problem: ProblemSpec, tab: ExponentialTableau, U0: SpectralState, h: float,
         cfg: StageSolveConfig = StageSolveConfig()) -> tuple[SpectralState, StepReport]:
    if h == 0:
        return U0, StepReport(0, 0.0, True, (), U0.norm())
    U1, rep = ExpRKStepper(problem, tab, h, cfg).step_array(U0.coeffs)
    return U0.with_coeffs(U1), rep


def integrate(problem: ProblemSpec, tab: ExponentialTableau, U0: SpectralState, T: float,
              n_steps: int, cfg: StageSolveConfig = StageSolveConfig(),
              stepper: Optional[ExpRKStepper] = None) -> tuple[SpectralState, list[StepReport]]:
    """``n_steps`` steps of size ``T / n_steps``; each report carries the state norm."""
    if n_steps < 1 or int(n_steps) != n_steps:
        raise InvariantError("n_steps must be a positive integer")
    if not T > 0:
        raise InvariantError("T must be positive")
    stepper = stepper or ExpRKStepper(problem, tab, T / n_steps, cfg)
    u = U0.coeffs
    reports = []
    for n in range(int(n_steps)):
        try:
            u, rep = stepper.step_array(u)
        except BlowUpError as exc:
            raise BlowUpError(f"step {n}: {exc}", step_index=n) from exc
        except StageDivergenceError as exc:
            raise StageDivergenceError(f"step {n}: {exc}", exc.residual, exc.iterations,
                                       step_index=n) from exc
        reports.append(rep)
    return U0.with_coeffs(u), reports
