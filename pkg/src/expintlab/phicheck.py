"""Quadrature check of the phi-function evaluator."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy import integrate

from .phi import phi_scalar


def phi_quadrature(k: int, z: complex) -> complex:
    """phi_k(z) from adaptive quadrature of int_0^1 exp((1-s) z) s^(k-1)/(k-1)! ds."""
    z = complex(z)
    if k == 0:
        return complex(np.exp(z))
    norm = 1.0 / math.factorial(k - 1)

    def part(fn):
        # parts that vanish identically trip quad's roundoff warning
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            val, _ = integrate.quad(lambda s: fn(np.exp((1.0 - s) * z) * s ** (k - 1)) * norm,
                                    0.0, 1.0, epsabs=1e-17, epsrel=1e-13, limit=400)
        return val

    return complex(part(np.real), part(np.imag))


def standard_z_grid(n: int = 20) -> np.ndarray:
    """n x n grid over Re in [-50, 0], Im in [-50, 50], plus points with |z| <= 1e-3."""
    re = np.linspace(-50.0, 0.0, n)
    im = np.linspace(-50.0, 50.0, n)
    box = (re[:, None] + 1j * im[None, :]).ravel()
    small = np.array([0.0, 1e-3, -1e-3, 1e-3j, -7e-4 + 7e-4j, -1e-6 - 2e-6j, -1e-10 + 1e-10j])
    return np.concatenate([box, small])


@dataclass(frozen=True)
class PhiCheckRow:
    k: int
    z: complex
    value: complex
    oracle: complex
    relerr: float


def phi_selftest(max_order: int = 4, z_values=None) -> list[PhiCheckRow]:
    z_values = standard_z_grid() if z_values is None else np.asarray(z_values, dtype=complex)
    rows = []
    for k in range(max_order + 1):
        for z in z_values:
            val = phi_scalar(k, z)
            ref = phi_quadrature(k, z)
            rows.append(PhiCheckRow(k, complex(z), val, ref, abs(val - ref) / abs(ref)))
    return rows
