"""Command-line front end.

Every subcommand reads a flat JSON config (``--config``), applies flag
overrides, writes deterministic data files into ``--out`` and a
``manifest.json`` carrying the resolved config, library versions, wall time
and check flags.

Exit codes: 0 success, 2 configuration error, 3 numerical gate failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np
import scipy

from . import __version__
from .errors import (
    BlowUpError,
    ConfigError,
    DegenerateLadderError,
    DimensionError,
    ExpIntError,
    InvariantError,
    ResolvableRangeError,
    StageDivergenceError,
    UnreliableReferenceError,
    UnsupportedOrderError,
)
from .experiments import (
    NOISE_FLOOR,
    dyadic_steps,
    fmt,
    galerkin_scan,
    order_scan,
    reference_solution,
    run_method,
    scan_summary,
    sharpness_probe,
    write_json,
    write_ladder_csv,
)
from .exprk import StageSolveConfig, builtin_tableaus
from .phicheck import phi_selftest
from .problems import PROBLEMS, make_problem, smooth_initial_data, y_ell_initial_data
from .rosenbrock import builtin_rosenbrock_tableaus
from .spectral import project_Pm

EXIT_OK, EXIT_CONFIG, EXIT_GATE = 0, 2, 3
PHI_GATE = 1e-10
ORDER_TOL = 0.25


@dataclass
class RunConfig:
    problem: str = "wave"
    method: str = "exp-euler"
    ell_list: list = field(default_factory=lambda: [j / 2 for j in range(7)])
    t_max: float = 0.5
    n_phys: int = 512
    ladder: list = field(default_factory=lambda: [4, 9])
    steps: Optional[list] = None
    epsilon: float = 1e-8
    output_dir: str = "results"
    energy: str = "L2xH-1"
    dealias: bool = False
    contraction_guard: bool = False
    rosenbrock: bool = False
    m_active: float = 32
    m_list: list = field(default_factory=lambda: [8, 16, 32, 64])
    galerkin_steps: int = 2048
    k_list: list = field(default_factory=lambda: [8, 16, 32, 64])
    lam: float = -0.5
    weight_ell: Optional[float] = None
    n_steps: int = 64
    h: Optional[float] = None
    initial_data: str = "smooth"
    amplitude: float = 1.0
    phi_max_order: int = 4

    def step_counts(self) -> list[int]:
        if self.steps:
            return sorted(int(n) for n in self.steps)
        return dyadic_steps(int(self.ladder[0]), int(self.ladder[1]))

    def validate(self) -> "RunConfig":
        if self.problem not in PROBLEMS:
            raise ConfigError(f"unknown problem {self.problem!r}; available: {sorted(PROBLEMS)}")
        tabs = builtin_rosenbrock_tableaus() if self.rosenbrock else builtin_tableaus()
        if self.method not in tabs:
            raise ConfigError(f"unknown method {self.method!r}; available tableaus: {', '.join(sorted(tabs))}")
        if not (isinstance(self.t_max, (int, float)) and self.t_max > 0):
            raise ConfigError("t_max must be positive")
        if len(self.ladder) != 2 or int(self.ladder[0]) > int(self.ladder[1]) or int(self.ladder[0]) < 0:
            raise ConfigError(f"ladder must be [jmin, jmax] with 0 <= jmin <= jmax, got {self.ladder}")
        if self.steps is not None and (len(self.steps) == 0 or any(int(n) < 1 for n in self.steps)):
            raise ConfigError("steps must be a nonempty list of positive integers")
        if self.n_phys < 8 or self.n_phys % 2:
            raise ConfigError("grid size must be even and at least 8")
        if any(ell < 0 for ell in self.ell_list):
            raise ConfigError("ell values must be nonnegative")
        if self.h is not None and not self.h > 0:
            raise ConfigError("h must be > 0")
        if self.n_steps < 1:
            raise ConfigError("n_steps must be at least 1")
        if self.initial_data not in ("smooth", "rough"):
            raise ConfigError("initial_data must be 'smooth' or 'rough'")
        return self

    def problem_spec(self):
        kw = {"dealias": self.dealias}
        if self.problem == "wave":
            kw["energy"] = self.energy
        if self.problem == "linear":
            kw = {"lam": self.lam}
        return make_problem(self.problem, self.n_phys, **kw)

    def stage_config(self) -> StageSolveConfig:
        return StageSolveConfig(contraction_guard=self.contraction_guard)


def load_config(path: Optional[str]) -> dict:
    if path is None:
        return {}
    try:
        with open(path) as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a flat JSON object")
    return data


def build_config(file_values: dict, overrides: dict) -> RunConfig:
    names = {f.name for f in dataclasses.fields(RunConfig)}
    unknown = sorted(set(file_values) - names)
    if unknown:
        raise ConfigError(f"unknown config keys: {unknown}")
    merged = dict(file_values)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    try:
        return RunConfig(**merged).validate()
    except TypeError as exc:
        raise ConfigError(str(exc)) from None


# --- parsing helpers ---------------------------------------------------------

def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def _ladder(text: str) -> list[int]:
    try:
        lo, hi = text.split(":")
        return [int(lo), int(hi)]
    except ValueError:
        raise argparse.ArgumentTypeError(f"ladder must look like jmin:jmax, got {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ConfigError(message)


def make_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat JSON config; flags override its values")
    common.add_argument("--problem", choices=sorted(PROBLEMS))
    common.add_argument("--method")
    common.add_argument("--ell", dest="ell_list", type=_float_list, help="comma-separated ell values")
    common.add_argument("--tmax", dest="t_max", type=float)
    common.add_argument("--grid", dest="n_phys", type=int, help="number of physical grid points")
    common.add_argument("--ladder", type=_ladder, help="dyadic step counts 2^jmin .. 2^jmax")
    common.add_argument("--steps", type=_int_list, help="explicit step counts (overrides --ladder)")
    common.add_argument("--out", dest="output_dir")
    common.add_argument("--rosenbrock", action="store_const", const=True,
                        help="use the exponential Rosenbrock stepper")
    common.add_argument("--m-active", dest="m_active", type=float)
    common.add_argument("--energy", choices=["L2xH-1", "H1xL2"])
    common.add_argument("--epsilon", type=float)
    common.add_argument("--dealias", action="store_const", const=True)
    common.add_argument("--contraction-guard", dest="contraction_guard", action="store_const", const=True)

    parser = _Parser(prog="expintlab", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    sub.add_parser("order-scan", parents=[common], help="fit convergence orders over ell")
    p = sub.add_parser("sharpness", parents=[common], help="commuting example with h = pi/k")
    p.add_argument("--k-list", dest="k_list", type=_int_list)
    p.add_argument("--lam", type=float)
    p.add_argument("--weight-ell", dest="weight_ell", type=float)
    p = sub.add_parser("galerkin-scan", parents=[common], help="projection error against m")
    p.add_argument("--m-list", dest="m_list", type=_float_list)
    p.add_argument("--galerkin-steps", dest="galerkin_steps", type=int)
    p = sub.add_parser("run", parents=[common], help="single trajectory")
    p.add_argument("--n-steps", dest="n_steps", type=int)
    p.add_argument("--h", type=float)
    p.add_argument("--initial-data", dest="initial_data", choices=["smooth", "rough"],
                   help="rough data uses the first --ell value")
    p.add_argument("--amplitude", type=float)
    p = sub.add_parser("phi-selftest", parents=[common], help="phi functions against quadrature")
    p.add_argument("--max-order", dest="phi_max_order", type=int)
    return parser


# --- commands ----------------------------------------------------------------

def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _summary_config(cfg: RunConfig) -> dict:
    # the output location is recorded in the manifest only, so reruns into
    # another directory give byte-identical summaries
    d = dataclasses.asdict(cfg)
    d.pop("output_dir")
    return d


def cmd_order_scan(cfg: RunConfig) -> tuple[int, dict]:
    if not cfg.ell_list:
        raise ConfigError("ell_list is empty")
    if cfg.rosenbrock:
        raise ConfigError("order-scan uses exponential RK methods; drop --rosenbrock")
    out = _out_dir(cfg)
    problem = cfg.problem_spec()
    scan = order_scan(problem, cfg.method, cfg.ell_list, cfg.t_max, cfg.step_counts(),
                      cfg.epsilon, NOISE_FLOOR, cfg.stage_config())
    p = builtin_tableaus()[cfg.method].order
    write_ladder_csv(out / "ladder.csv", scan.ladders)
    write_json(out / "summary.json", scan_summary(scan, _summary_config(cfg)))
    with open(out / "q_of_ell.dat", "w") as fh:
        for ell, est in scan.estimates.items():
            fh.write(f"{fmt(ell)} {fmt(est.slope)}\n")
    with open(out / "q_theory.dat", "w") as fh:
        for ell in np.linspace(0.0, max(cfg.ell_list), 61):
            fh.write(f"{fmt(ell)} {fmt(min(ell, p))}\n")
    checks = {f"q(ell={ell:g}) within {ORDER_TOL} of min(ell,{p})":
              bool(abs(est.slope - min(ell, p)) <= ORDER_TOL)
              for ell, est in scan.estimates.items() if ell >= 0.5}
    return EXIT_OK, checks


def cmd_sharpness(cfg: RunConfig) -> tuple[int, dict]:
    out = _out_dir(cfg)
    rows = sharpness_probe(cfg.k_list, cfg.lam, cfg.weight_ell)
    with open(out / "sharpness.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "h", "n_steps", "error", "oracle"])
        for r in rows:
            w.writerow([r.k, fmt(r.h), r.n_steps, fmt(r.error), fmt(r.oracle)])
    errs = [r.error for r in rows]
    summary = {"config": _summary_config(cfg), "version": __version__, "errors": errs}
    checks = {}
    if len(errs) >= 2 and min(errs) > 0:
        ratios = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
        summary["log2_ratios"] = ratios
        summary["max_over_min"] = max(errs) / min(errs)
        if cfg.weight_ell is None:
            checks["errors bounded away from zero (max/min <= 4)"] = bool(max(errs) / min(errs) <= 4)
        else:
            checks[f"log2 ratios within 0.2 of {cfg.weight_ell:g}"] = bool(
                all(abs(q - cfg.weight_ell) <= 0.2 for q in ratios))
    write_json(out / "summary.json", summary)
    return EXIT_OK, checks


def cmd_galerkin_scan(cfg: RunConfig) -> tuple[int, dict]:
    if not cfg.ell_list:
        raise ConfigError("ell_list is empty")
    out = _out_dir(cfg)
    problem = cfg.problem_spec()
    scans = {}
    for ell in cfg.ell_list:
        U0 = y_ell_initial_data(problem, ell, cfg.epsilon)
        scans[ell] = galerkin_scan(problem, U0, cfg.t_max, cfg.m_list, cfg.galerkin_steps)
    with open(out / "galerkin.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ell", "m", "error"])
        for ell, sc in scans.items():
            for m, e in zip(sc.m_values, sc.errors):
                w.writerow([fmt(ell), fmt(m), fmt(e)])
    write_json(out / "summary.json", {
        "config": _summary_config(cfg), "version": __version__,
        "scans": [{"ell": ell, "slope": sc.fitted_slope, "intercept": sc.intercept,
                   "max_residual": sc.max_residual} for ell, sc in scans.items()],
    })
    checks = {f"slope(ell={ell:g}) within 0.3 of -ell": bool(abs(sc.fitted_slope + ell) <= 0.3)
              for ell, sc in scans.items()}
    slopes = [sc.fitted_slope for sc in scans.values()]
    checks["slope strictly decreasing in ell"] = bool(all(b < a for a, b in zip(slopes, slopes[1:])))
    return EXIT_OK, checks


def cmd_run(cfg: RunConfig) -> tuple[int, dict]:
    out = _out_dir(cfg)
    problem = cfg.problem_spec()
    n_steps = cfg.n_steps
    if cfg.h is not None:
        n_steps = max(1, int(round(cfg.t_max / cfg.h)))
        if not math.isclose(n_steps * cfg.h, cfg.t_max, rel_tol=1e-12):
            raise ConfigError(f"h = {cfg.h:g} does not divide t_max = {cfg.t_max:g}")
    if cfg.initial_data == "rough":
        if not cfg.ell_list:
            raise ConfigError("rough initial data needs an ell value")
        U0 = y_ell_initial_data(problem, cfg.ell_list[0], cfg.epsilon)
    else:
        U0 = smooth_initial_data(problem, cfg.amplitude)
    m_active = cfg.m_active if cfg.rosenbrock else None
    UN = run_method(problem, cfg.method, U0, cfg.t_max, n_steps, cfg.stage_config(), m_active)
    if m_active is None:
        ref = reference_solution(problem, U0, cfg.t_max, cfg.t_max / n_steps)
    else:
        proj = problem.projected(m_active)
        U0m = project_Pm(U0, problem.absA, m_active)
        ref = reference_solution(proj, U0m, cfg.t_max, cfg.t_max / n_steps)
    err = problem.norm(UN - ref)
    with open(out / "state.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["component", "k", "re", "im"])
        for c in range(UN.n_comp):
            for k, v in zip(problem.grid.modes, UN.coeffs[c]):
                w.writerow([c, int(k), fmt(v.real), fmt(v.imag)])
    write_json(out / "summary.json", {
        "config": _summary_config(cfg), "version": __version__, "n_steps": n_steps,
        "h": cfg.t_max / n_steps, "error": err, "final_norm": problem.norm(UN),
    })
    return EXIT_OK, {}


def cmd_phi_selftest(cfg: RunConfig) -> tuple[int, dict]:
    out = _out_dir(cfg)
    try:
        rows = phi_selftest(cfg.phi_max_order)
    except UnsupportedOrderError as exc:
        raise ConfigError(str(exc)) from None
    with open(out / "phi_selftest.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["k", "z_re", "z_im", "value_re", "value_im", "oracle_re", "oracle_im", "relerr"])
        for r in rows:
            w.writerow([r.k, fmt(r.z.real), fmt(r.z.imag), fmt(r.value.real), fmt(r.value.imag),
                        fmt(r.oracle.real), fmt(r.oracle.imag), fmt(r.relerr)])
    worst = max(r.relerr for r in rows)
    write_json(out / "summary.json", {"version": __version__, "max_relerr": worst,
                                      "n_points": len(rows), "gate": PHI_GATE})
    ok = worst <= PHI_GATE
    return (EXIT_OK if ok else EXIT_GATE), {f"max relerr <= {PHI_GATE:g}": bool(ok)}


COMMANDS = {
    "order-scan": cmd_order_scan,
    "sharpness": cmd_sharpness,
    "galerkin-scan": cmd_galerkin_scan,
    "run": cmd_run,
    "phi-selftest": cmd_phi_selftest,
}

_CONFIG_ERRORS = (ConfigError, ResolvableRangeError, DimensionError, InvariantError)
_GATE_ERRORS = (UnreliableReferenceError, BlowUpError, StageDivergenceError,
                DegenerateLadderError, ExpIntError)


def _manifest(command: str, cfg: Optional[RunConfig], status: int, checks: dict,
              wall: float, error: Optional[dict] = None) -> dict:
    return {
        "command": command,
        "config": dataclasses.asdict(cfg) if cfg else None,
        "exit_code": status,
        "checks": checks,
        "error": error,
        "wall_time_s": wall,
        "versions": {"expintlab": __version__, "numpy": np.__version__,
                     "scipy": scipy.__version__, "python": platform.python_version()},
    }


def _fail(exc: Exception, status: int, command: str, cfg: Optional[RunConfig], t0: float) -> int:
    err = {"error": type(exc).__name__, "message": str(exc), "exit_code": status}
    print(json.dumps(err), file=sys.stderr)
    if cfg is not None:
        try:
            out = _out_dir(cfg)
            write_json(out / "error.json", err)
            write_json(out / "manifest.json",
                       _manifest(command, cfg, status, {}, time.perf_counter() - t0, err))
        except OSError:
            pass
    return status


def main(argv: Optional[Sequence[str]] = None) -> int:
    t0 = time.perf_counter()
    cfg, command = None, None
    try:
        args = make_parser().parse_args(argv)
        command = args.command
        overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
        cfg = build_config(load_config(args.config), overrides)
        status, checks = COMMANDS[command](cfg)
    except _CONFIG_ERRORS as exc:
        return _fail(exc, EXIT_CONFIG, command, cfg, t0)
    except _GATE_ERRORS as exc:
        return _fail(exc, EXIT_GATE, command, cfg, t0)
    write_json(_out_dir(cfg) / "manifest.json",
               _manifest(command, cfg, status, checks, time.perf_counter() - t0))
    for name, ok in checks.items():
        print(f"{'PASS' if ok else 'FAIL'}  {name}")
    print(f"wrote {cfg.output_dir}")
    return status
