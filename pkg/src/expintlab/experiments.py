"""Reference solutions, error ladders, order fits and the three studies.

All studies are deterministic: no random numbers are drawn anywhere, and
results are aggregated in the order of the input lists.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence, Union

import numpy as np

from . import __version__
from .errors import (
    DegenerateLadderError,
    InvariantError,
    ResolvableRangeError,
    UnreliableReferenceError,
)
from .exprk import ExponentialTableau, StageSolveConfig, get_tableau, integrate
from .phi import phi_scalar
from .problems import ProblemSpec, make_linear_commuting, y_ell_initial_data
from .rosenbrock import get_rosenbrock_tableau, integrate_rosenbrock
from .spectral import SpectralState, project_Pm

NOISE_FLOOR = 1e-10
REFERENCE_METHOD = "cox-matthews-4"
REFERENCE_REFINEMENT = 32
REFERENCE_TOL = 1e-10

Method = Union[str, ExponentialTableau]


@dataclass(frozen=True)
class ErrorLadder:
    h_values: tuple[float, ...]
    errors: tuple[float, ...]
    n_steps: tuple[int, ...] = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "h_values", tuple(float(h) for h in self.h_values))
        object.__setattr__(self, "errors", tuple(float(e) for e in self.errors))
        object.__setattr__(self, "n_steps", tuple(int(n) for n in self.n_steps))
        if len(self.h_values) != len(self.errors):
            raise InvariantError("h_values and errors differ in length")
        if self.n_steps and len(self.n_steps) != len(self.h_values):
            raise InvariantError("n_steps and h_values differ in length")
        if any(h <= 0 for h in self.h_values):
            raise InvariantError("step sizes must be positive")
        if any(b >= a for a, b in zip(self.h_values, self.h_values[1:])):
            raise InvariantError("step sizes must be strictly decreasing")

    def __len__(self):
        return len(self.h_values)

    def excluded(self, noise_floor: float = NOISE_FLOOR) -> tuple[bool, ...]:
        return tuple(e < noise_floor for e in self.errors)


@dataclass(frozen=True)
class OrderEstimate:
    slope: float
    intercept: float
    max_residual: float
    n_points: int = 0
    excluded_h: tuple[float, ...] = ()

    def __post_init__(self):
        if not all(math.isfinite(v) for v in (self.slope, self.intercept, self.max_residual)):
            raise InvariantError("order estimate has non-finite fields")
        if self.max_residual < 0:
            raise InvariantError("max_residual must be nonnegative")


def _loglog_fit(x: np.ndarray, y: np.ndarray) -> tuple[float, float, float]:
    lx, ly = np.log(x), np.log(y)
    slope, intercept = np.polyfit(lx, ly, 1)
    resid = float(np.max(np.abs(slope * lx + intercept - ly)))
    return float(slope), float(intercept), resid


def estimate_order(ladder: ErrorLadder, noise_floor: float = NOISE_FLOOR) -> OrderEstimate:
    """Least-squares slope of log(error) against log(h).

    Points below ``noise_floor`` are dropped and their step sizes reported.
    """
    err = np.asarray(ladder.errors)
    if np.any(err <= 0):
        raise DegenerateLadderError("ladder contains zero or negative errors")
    if len(ladder) < 3:
        raise DegenerateLadderError(f"need at least 3 ladder points, got {len(ladder)}")
    keep = err >= noise_floor
    if keep.sum() < 3:
        raise DegenerateLadderError(
            f"only {int(keep.sum())} points above the noise floor {noise_floor:g}")
    h = np.asarray(ladder.h_values)
    slope, intercept, resid = _loglog_fit(h[keep], err[keep])
    return OrderEstimate(slope, intercept, resid, int(keep.sum()), tuple(h[~keep].tolist()))


# --- references and trajectory errors ---------------------------------------

def reference_solution(problem: ProblemSpec, U0: SpectralState, T: float,
                       h_min: Optional[float] = None, *, n_ref: Optional[int] = None,
                       tol: float = REFERENCE_TOL) -> SpectralState:
    """Fourth-order exponential RK solution checked against a run with twice the steps.

    ``n_ref`` defaults to ``T / (h_min / 32)``. Raises
    :class:`UnreliableReferenceError` when the two runs differ by more than ``tol``.
    """
    if not T > 0:
        raise InvariantError("T must be positive")
    if n_ref is None:
        if h_min is None or not h_min > 0:
            raise InvariantError("give a positive h_min or n_ref")
        n_ref = int(round(T / (h_min / REFERENCE_REFINEMENT)))
    n_ref = max(int(n_ref), 1)
    tab = get_tableau(REFERENCE_METHOD)
    coarse, _ = integrate(problem, tab, U0, T, n_ref)
    fine, _ = integrate(problem, tab, U0, T, 2 * n_ref)
    diff = problem.norm(fine - coarse)
    if not diff <= tol:
        raise UnreliableReferenceError(
            f"reference changes by {diff:.3e} > {tol:g} when doubling {n_ref} steps", diff)
    return fine


def _resolve_method(method: Method, rosenbrock: bool) -> ExponentialTableau:
    if isinstance(method, ExponentialTableau):
        return method
    return get_rosenbrock_tableau(method) if rosenbrock else get_tableau(method)


def run_method(problem: ProblemSpec, method: Method, U0: SpectralState, T: float, n_steps: int,
               cfg: StageSolveConfig = StageSolveConfig(),
               m_active: Optional[float] = None) -> SpectralState:
    """Integrate with an exponential RK method, or a Rosenbrock one when ``m_active`` is set."""
    tab = _resolve_method(method, m_active is not None)
    if m_active is None:
        return integrate(problem, tab, U0, T, n_steps, cfg)[0]
    return integrate_rosenbrock(problem, tab, U0, T, n_steps, m_active, cfg)[0]


def trajectory_error(problem: ProblemSpec, method: Method, U0: SpectralState, T: float,
                     n_steps: int, reference: Optional[SpectralState] = None,
                     cfg: StageSolveConfig = StageSolveConfig(),
                     m_active: Optional[float] = None) -> float:
    if n_steps < 1:
        raise InvariantError("n_steps must be at least 1")
    if reference is None:
        reference = reference_solution(problem, U0, T, T / n_steps)
    return problem.norm(run_method(problem, method, U0, T, n_steps, cfg, m_active) - reference)


def dyadic_steps(j_min: int, j_max: int) -> list[int]:
    if j_min > j_max or j_min < 0:
        raise InvariantError(f"bad dyadic range {j_min}:{j_max}")
    return [2 ** j for j in range(j_min, j_max + 1)]


def error_ladder(problem: ProblemSpec, method: Method, U0: SpectralState, T: float,
                 steps: Sequence[int], reference: Optional[SpectralState] = None,
                 cfg: StageSolveConfig = StageSolveConfig(), m_active: Optional[float] = None,
                 meta: Optional[dict] = None) -> ErrorLadder:
    steps = sorted(int(n) for n in steps)
    if reference is None:
        reference = reference_solution(problem, U0, T, T / steps[-1])
    errs = [trajectory_error(problem, method, U0, T, n, reference, cfg, m_active) for n in steps]
    return ErrorLadder(tuple(T / n for n in steps), tuple(errs), tuple(steps), dict(meta or {}))


@dataclass(frozen=True)
class OrderScan:
    ells: tuple[float, ...]
    estimates: dict
    ladders: dict


def order_scan(problem: ProblemSpec, method: Method, ell_list: Sequence[float], T: float = 0.5,
               steps: Sequence[int] = tuple(dyadic_steps(4, 9)), epsilon: float = 1e-8,
               noise_floor: float = NOISE_FLOOR,
               cfg: StageSolveConfig = StageSolveConfig()) -> OrderScan:
    """Fit q(ell) from error ladders on rough data of each regularity ``ell``."""
    if len(ell_list) == 0:
        raise InvariantError("ell_list is empty")
    name = method if isinstance(method, str) else method.name
    estimates, ladders = {}, {}
    for ell in ell_list:
        U0 = y_ell_initial_data(problem, ell, epsilon)
        lad = error_ladder(problem, method, U0, T, steps, cfg=cfg,
                           meta={"problem": problem.name, "method": name, "ell": ell, "T": T})
        ladders[ell] = lad
        estimates[ell] = estimate_order(lad, noise_floor)
    return OrderScan(tuple(ell_list), estimates, ladders)


# --- sharpness example -------------------------------------------------------

@dataclass(frozen=True)
class SharpnessRow:
    k: int
    h: float
    n_steps: int
    error: float
    oracle: float


def exp_euler_mode_error(k: int, lam: float, weight: float = 1.0) -> float:
    """Closed form of the exp-Euler error on e_k with h = pi/k after k steps."""
    h = math.pi / k
    z = 1j * h * k
    factor = complex(np.exp(z)) + h * phi_scalar(1, z) * lam
    return abs(weight) * abs(np.exp(math.pi * (1j * k + lam)) - factor ** k)


def sharpness_probe(k_list: Sequence[int], lam: float = -0.5,
                    weight_ell: Optional[float] = None) -> list[SharpnessRow]:
    """exp-Euler with h = pi/k over k steps from e_k (or k^-ell e_k) on the commuting example."""
    rows = []
    tab = get_tableau("exp-euler")
    for k in k_list:
        k = int(k)
        if k < 1:
            raise InvariantError("wavenumbers must be positive")
        n_phys = 2 ** int(math.ceil(math.log2(2 * k + 2)))
        prob = make_linear_commuting(n_phys, lam)
        weight = 1.0 if weight_ell is None else float(k) ** -weight_ell
        U0 = SpectralState.single_mode(prob.grid, k, weight)
        T = math.pi
        UN, _ = integrate(prob, tab, U0, T, k)
        exact = U0.with_coeffs(U0.coeffs * np.exp(T * prob.A.eigenvalues + T * lam))
        rows.append(SharpnessRow(k, T / k, k, prob.norm(UN - exact),
                                 float(exp_euler_mode_error(k, lam, weight))))
    return rows


# --- Galerkin truncation -----------------------------------------------------

@dataclass(frozen=True)
class GalerkinScan:
    m_values: tuple[float, ...]
    errors: tuple[float, ...]
    fitted_slope: float
    intercept: float = float("nan")
    max_residual: float = float("nan")

    def __post_init__(self):
        if len(self.m_values) != len(self.errors):
            raise InvariantError("m_values and errors differ in length")


def resolvable_limit(problem: ProblemSpec) -> float:
    """Largest projection radius treated as resolved: half the top |A|-eigenvalue."""
    return 0.5 * float(problem.absA.eigenvalues.real.max())


def galerkin_scan(problem: ProblemSpec, U0: SpectralState, T: float, m_list: Sequence[float],
                  n_steps: int = 2048, reference: Optional[SpectralState] = None) -> GalerkinScan:
    """Error of the projected flow started from P_m U0 against the full flow."""
    m_list = [float(m) for m in m_list]
    if any(b <= a for a, b in zip(m_list, m_list[1:])):
        raise InvariantError("m_values must be strictly increasing")
    limit = resolvable_limit(problem)
    if max(m_list) > limit:
        raise ResolvableRangeError(f"m = {max(m_list):g} exceeds resolvable range {limit:g}")
    truth = reference if reference is not None else reference_solution(problem, U0, T, n_ref=n_steps)
    tab = get_tableau(REFERENCE_METHOD)
    errs = []
    for m in m_list:
        Um, _ = integrate(problem.projected(m), tab, project_Pm(U0, problem.absA, m), T, n_steps)
        errs.append(problem.norm(Um - truth))
    e = np.asarray(errs)
    if len(m_list) >= 2 and np.all(e > 0):
        slope, intercept, resid = _loglog_fit(np.asarray(m_list), e)
    else:
        slope = intercept = resid = float("nan")
    return GalerkinScan(tuple(m_list), tuple(errs), slope, intercept, resid)


# --- output ------------------------------------------------------------------

def fmt(x: float) -> str:
    """Locale-free 17-significant-digit float."""
    return format(float(x), ".17g")


def write_ladder_csv(path: Union[str, Path], ladders: dict,
                     noise_floor: float = NOISE_FLOOR) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ell", "h", "n_steps", "error", "excluded"])
        for ell, lad in ladders.items():
            for h, n, e, x in zip(lad.h_values, lad.n_steps, lad.errors, lad.excluded(noise_floor)):
                w.writerow([fmt(ell), fmt(h), n, fmt(e), int(x)])


def scan_summary(scan: OrderScan, config: dict) -> dict:
    return {
        "config": config,
        "version": __version__,
        "estimates": [
            {"ell": ell, "slope": est.slope, "intercept": est.intercept,
             "max_residual": est.max_residual, "n_points": est.n_points,
             "excluded_h": list(est.excluded_h)}
            for ell, est in scan.estimates.items()
        ],
    }


def write_json(path: Union[str, Path], obj) -> None:
    with open(path, "w") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")
