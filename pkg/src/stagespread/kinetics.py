"""Spatially homogeneous yearly map and its threshold dynamics.

For a spatially constant adult density ``z`` at the start of a year the
density one year later is

    Qbar(z) = z kbar(T, 0)
              + int_{t_a}^{t_b} kbar(T, s) (1 - tau') eps p(s - tau) h(z kbar(s - tau, 0)) ds.

Extinction is stable iff the threshold number ``L`` is below one.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np
from scipy.optimize import brentq

from .errors import DiagnosticError
from .model import ModelParams, kbar_M, recruitment_factor

__all__ = [
    "KineticResult",
    "KineticMap",
    "kinetic_map",
    "qbar",
    "compute_L",
    "fixed_point",
    "iterate_kinetic",
    "INDETERMINATE_BAND",
]

INDETERMINATE_BAND = 1e-6
SCAN_START = 1e-8
SCAN_FACTOR = 1.1
ROOT_RTOL = 1e-13


class KineticMap:
    """``Qbar`` with the maturation-window quadrature frozen at construction."""

    def __init__(self, params: ModelParams):
        params.require_valid()
        self.params = params
        rule = params.rule
        s = rule.nodes
        born = s - params.tau(s)
        self.survival = float(kbar_M(params, 0.0, params.T))
        # kbar(T, s) (1 - tau') eps p(s - tau) times quadrature weight
        self.coef = rule.weights * kbar_M(params, s, params.T) * recruitment_factor(params, s)
        self.inner = kbar_M(params, 0.0, born)
        self.nodes = s

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        h = self.params.h(np.multiply.outer(z, self.inner))
        return z * self.survival + h @ self.coef

    @cached_property
    def slope0(self) -> float:
        """``Qbar'(0)``: survival plus linearised recruitment."""
        return self.survival + float(self.coef @ self.inner) * self.params.h.hprime0

    @cached_property
    def L(self) -> float:
        k = self.survival
        if k >= 1.0:
            raise DiagnosticError("adult survival over a year must be below one")
        # kbar(T,s) kbar(s-tau,0) = kbar(T,0) / kbar(s, s-tau)
        return (self.slope0 - k) / (1.0 - k)


@lru_cache(maxsize=64)
def kinetic_map(params: ModelParams) -> KineticMap:
    return KineticMap(params)


def qbar(params: ModelParams, z):
    if np.any(np.asarray(z) < 0):
        raise ValueError("density must be nonnegative")
    return kinetic_map(params)(z)


def compute_L(params: ModelParams) -> float:
    """Threshold number: ``kbar/(1-kbar) * int dR0(s) / kbar(s, s - tau(s)) ds``."""
    return kinetic_map(params).L


@dataclass(frozen=True)
class KineticResult:
    L: float
    ustar: float | None
    monotone_basin_ok: bool
    status: str  # "persistent", "extinct" or "indeterminate"
    zstar: float

    def to_dict(self) -> dict:
        return {"L": self.L, "ustar": self.ustar,
                "monotone_basin_ok": self.monotone_basin_ok, "status": self.status,
                "zstar": self.zstar, "root_rtol": ROOT_RTOL,
                "indeterminate_band": INDETERMINATE_BAND}


def fixed_point(params: ModelParams) -> KineticResult:
    """Minimal positive fixed point of ``Qbar`` when ``L > 1``.

    Scans upward from ``1e-8 z*`` in steps of 10% until ``Qbar(z) - z``
    turns negative, then refines the bracketed root.
    """
    km = kinetic_map(params)
    L = km.L
    zstar = float(params.h.zstar)
    if abs(L - 1.0) <= INDETERMINATE_BAND:
        return KineticResult(L, None, False, "indeterminate", zstar)
    if L < 1.0:
        return KineticResult(L, None, False, "extinct", zstar)

    g = lambda z: float(km(z)) - z
    lo = SCAN_START * zstar
    if g(lo) <= 0:
        raise DiagnosticError("Qbar(z) <= z at the scan start despite L > 1")
    hi = lo
    while g(hi) > 0:
        lo, hi = hi, hi * SCAN_FACTOR
        if hi > 1e12 * zstar:
            raise DiagnosticError("no sign change of Qbar(z) - z found")
    ustar = brentq(g, lo, hi, xtol=1e-300, rtol=ROOT_RTOL, maxiter=500)
    basin = ustar * float(kbar_M(params, 0.0, params.alpha)) <= zstar
    return KineticResult(L, float(ustar), bool(basin), "persistent", zstar)


def iterate_kinetic(params: ModelParams, z0: float, n: int) -> np.ndarray:
    """Orbit ``z0, Qbar(z0), ..., Qbar^n(z0)``."""
    if z0 < 0:
        raise ValueError("density must be nonnegative")
    km = kinetic_map(params)
    orbit = np.empty(n + 1)
    orbit[0] = z0
    for k in range(n):
        orbit[k + 1] = km(orbit[k])
    return orbit
