"""Density dependence ``h`` of the birth rate ``b(t, u) = p(t) h(u)``."""

from __future__ import annotations

from typing import Any, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator

__all__ = ["BirthFn", "Ricker", "Tabulated", "from_dict"]


class BirthFn:
    """Unimodal, sublinear birth response with ``h(0) = 0``."""

    zstar: float
    hprime0: float

    def __call__(self, z):
        raise NotImplementedError

    def derivative(self, z):
        raise NotImplementedError

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError


class Ricker(BirthFn):
    """``h(z) = z exp(-q z)``; the amplitude lives in the seasonality ``p``."""

    def __init__(self, q: float):
        if q <= 0:
            raise ValueError("Ricker q must be positive")
        self.q = float(q)
        self.zstar = 1.0 / self.q
        self.hprime0 = 1.0

    def __call__(self, z):
        z = np.asarray(z, dtype=float)
        return z * np.exp(-self.q * z)

    def derivative(self, z):
        z = np.asarray(z, dtype=float)
        return (1.0 - self.q * z) * np.exp(-self.q * z)

    def to_dict(self):
        return {"q": self.q}

    def __repr__(self):
        return f"Ricker(q={self.q!r})"


class Tabulated(BirthFn):
    """Shape-preserving (PCHIP) interpolant of tabulated ``(z, h)`` pairs.

    The table must start at ``(0, 0)`` and end with ``h = 0``; beyond the last
    abscissa ``h`` is zero.
    """

    def __init__(self, z: Sequence[float], h: Sequence[float]):
        z = np.asarray(z, dtype=float)
        h = np.asarray(h, dtype=float)
        if z[0] != 0.0 or h[0] != 0.0 or h[-1] != 0.0:
            raise ValueError("tabulated birth must start at (0, 0) and end at h = 0")
        self.z = z
        self.h = h
        self._interp = PchipInterpolator(z, h, extrapolate=False)
        self._d = self._interp.derivative()
        self.zstar = float(z[np.argmax(h)])
        self.hprime0 = float(self._d(0.0))

    def __call__(self, z):
        return np.nan_to_num(self._interp(np.asarray(z, dtype=float)))

    def derivative(self, z):
        return np.nan_to_num(self._d(np.asarray(z, dtype=float)))

    def to_dict(self):
        return {"z": self.z.tolist(), "h": self.h.tolist()}


def from_dict(spec: dict[str, Any]) -> tuple[BirthFn, float]:
    """Parse ``{"ricker": {"P": .., "q": ..}}`` or ``{"tabulated": {...}}``.

    Returns the density response and the breeding amplitude ``P``.
    """
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ValueError(f"cannot parse birth function from {spec!r}")
    (kind, arg), = spec.items()
    if kind == "ricker":
        return Ricker(arg["q"]), float(arg["P"])
    if kind == "tabulated":
        return Tabulated(arg["z"], arg["h"]), float(arg.get("P", 1.0))
    raise ValueError(f"unknown birth function kind {kind!r}")
