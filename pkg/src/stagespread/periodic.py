"""T-periodic C^1 coefficient functions.

Every coefficient of the model (diffusion and death rates, the maturation
delay, breeding seasonality, extra mortality) is a scalar T-periodic
function of time.  Besides point values we need first derivatives (the
delay enters through ``1 - tau'``) and definite integrals over arbitrary
intervals, possibly spanning several periods.  All kinds here integrate
exactly: constants and harmonics in closed form, piecewise cubics (and the
quartic breeding bump) through their polynomial antiderivatives.
"""

from __future__ import annotations

import math
from typing import Any, Sequence

import numpy as np
from scipy.interpolate import CubicHermiteSpline, CubicSpline, PPoly

__all__ = [
    "PeriodicFn",
    "Constant",
    "Harmonic",
    "PiecewisePolynomial",
    "Sum",
    "Scaled",
    "linear_on_interval",
    "periodic_spline",
    "quartic_bump",
    "from_dict",
]


class PeriodicFn:
    """Base class; subclasses implement ``_value``, ``_deriv`` and ``_primitive``.

    ``_primitive(t)`` is any antiderivative valid on the whole real line
    (it must grow by exactly one period integral per period).
    """

    period: float

    def __call__(self, t):
        return self._value(np.asarray(t, dtype=float))

    def derivative(self, t):
        return self._deriv(np.asarray(t, dtype=float))

    def integral(self, a, b):
        """Integral over [a, b] (vectorised, b < a gives the negative)."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        return self._primitive(b) - self._primitive(a)

    def mean(self) -> float:
        return float(self.integral(0.0, self.period)) / self.period

    @property
    def knots(self) -> np.ndarray:
        """Points in [0, T) where derivatives above the first may jump."""
        return np.empty(0)

    @property
    def is_constant(self) -> bool:
        return False

    def to_dict(self) -> dict[str, Any]:
        raise NotImplementedError

    def __add__(self, other: PeriodicFn) -> PeriodicFn:
        if not isinstance(other, PeriodicFn):
            return NotImplemented
        return Sum((self, other))

    def __mul__(self, c: float) -> PeriodicFn:
        return Scaled(self, float(c))

    __rmul__ = __mul__

    def _value(self, t: np.ndarray):
        raise NotImplementedError

    def _deriv(self, t: np.ndarray):
        raise NotImplementedError

    def _primitive(self, t: np.ndarray):
        raise NotImplementedError


class Constant(PeriodicFn):
    def __init__(self, value: float, period: float = 1.0):
        self.value = float(value)
        self.period = float(period)

    def _value(self, t):
        return np.full_like(t, self.value) if t.ndim else np.float64(self.value)

    def _deriv(self, t):
        return np.zeros_like(t) if t.ndim else np.float64(0.0)

    def _primitive(self, t):
        return self.value * t

    @property
    def is_constant(self) -> bool:
        return True

    def to_dict(self):
        return {"const": self.value}

    def __repr__(self):
        return f"Constant({self.value!r}, period={self.period!r})"


class Harmonic(PeriodicFn):
    """Truncated Fourier series ``mean + sum a_n cos(n w t) + b_n sin(n w t)``."""

    def __init__(self, mean: float, cos: Sequence[float] = (),
                 sin: Sequence[float] = (), period: float = 1.0):
        self.mean_value = float(mean)
        n = max(len(cos), len(sin))
        self.cos = np.zeros(n)
        self.sin = np.zeros(n)
        self.cos[: len(cos)] = cos
        self.sin[: len(sin)] = sin
        self.period = float(period)
        self._omega = 2.0 * math.pi / self.period
        self._n = np.arange(1, n + 1, dtype=float)

    def _phase(self, t):
        return np.multiply.outer(t, self._n * self._omega)

    def _value(self, t):
        ph = self._phase(t)
        return self.mean_value + np.cos(ph) @ self.cos + np.sin(ph) @ self.sin

    def _deriv(self, t):
        ph = self._phase(t)
        w = self._n * self._omega
        return np.cos(ph) @ (self.sin * w) - np.sin(ph) @ (self.cos * w)

    def _primitive(self, t):
        ph = self._phase(t)
        w = self._n * self._omega
        return (self.mean_value * t + np.sin(ph) @ (self.cos / w)
                - np.cos(ph) @ (self.sin / w))

    def to_dict(self):
        return {"harmonic": {"mean": self.mean_value, "cos": self.cos.tolist(),
                             "sin": self.sin.tolist()}}

    def __repr__(self):
        return (f"Harmonic({self.mean_value!r}, cos={self.cos.tolist()!r}, "
                f"sin={self.sin.tolist()!r}, period={self.period!r})")


class PiecewisePolynomial(PeriodicFn):
    """One period of a piecewise polynomial, repeated.

    ``ppoly`` must be defined on ``[start, start + period]``.  The caller is
    responsible for value and slope matching at the two ends.
    """

    def __init__(self, ppoly: PPoly, period: float, spec: dict | None = None,
                 floor: float | None = None):
        self.ppoly = ppoly
        self.floor = floor
        self.period = float(period)
        self.start = float(ppoly.x[0])
        if not math.isclose(ppoly.x[-1] - self.start, self.period,
                            rel_tol=1e-12, abs_tol=1e-12):
            raise ValueError("piecewise polynomial must span exactly one period")
        self._d1 = ppoly.derivative()
        self._anti = ppoly.antiderivative()
        self._per_period = float(self._anti(ppoly.x[-1]))
        self._spec = spec

    def _wrap(self, t):
        shift = np.floor((t - self.start) / self.period)
        local = t - shift * self.period
        # Guard against local landing a rounding error past the right end.
        local = np.minimum(local, self.ppoly.x[-1])
        return shift, local

    def _value(self, t):
        v = self.ppoly(self._wrap(t)[1])
        # Clips round-off below a known lower bound (e.g. -1e-16 at a bump edge).
        return v if self.floor is None else np.maximum(v, self.floor)

    def _deriv(self, t):
        return self._d1(self._wrap(t)[1])

    def _primitive(self, t):
        shift, local = self._wrap(t)
        return shift * self._per_period + self._anti(local)

    @property
    def knots(self):
        inner = self.ppoly.x[:-1]
        return np.unique(np.mod(inner, self.period))

    def to_dict(self):
        if self._spec is None:
            raise ValueError("this piecewise polynomial has no serial form")
        return self._spec

    def __repr__(self):
        return f"PiecewisePolynomial({self._spec!r})"


class Sum(PeriodicFn):
    def __init__(self, terms: Sequence[PeriodicFn]):
        flat: list[PeriodicFn] = []
        for term in terms:
            flat.extend(term.terms if isinstance(term, Sum) else [term])
        periods = {f.period for f in flat}
        if len(periods) != 1:
            raise ValueError("cannot add periodic functions of different periods")
        self.terms = tuple(flat)
        self.period = flat[0].period

    def _value(self, t):
        return sum(f._value(t) for f in self.terms)

    def _deriv(self, t):
        return sum(f._deriv(t) for f in self.terms)

    def _primitive(self, t):
        return sum(f._primitive(t) for f in self.terms)

    @property
    def knots(self):
        return np.unique(np.concatenate([f.knots for f in self.terms]))

    @property
    def is_constant(self):
        return all(f.is_constant for f in self.terms)

    def to_dict(self):
        return {"sum": [f.to_dict() for f in self.terms]}


class Scaled(PeriodicFn):
    def __init__(self, fn: PeriodicFn, factor: float):
        self.fn = fn
        self.factor = float(factor)
        self.period = fn.period

    def _value(self, t):
        return self.factor * self.fn._value(t)

    def _deriv(self, t):
        return self.factor * self.fn._deriv(t)

    def _primitive(self, t):
        return self.factor * self.fn._primitive(t)

    @property
    def knots(self):
        return self.fn.knots

    @property
    def is_constant(self):
        return self.fn.is_constant

    def to_dict(self):
        return {"scaled": {"factor": self.factor, "fn": self.fn.to_dict()}}


def linear_on_interval(a: float, b: float, t0: float, t1: float,
                       period: float = 1.0) -> PiecewisePolynomial:
    """``a + b t`` on ``[t0, t1]``, closed up C^1 by a cubic Hermite connector.

    The connector runs from ``t1`` to ``t0 + period`` and matches value and
    slope of the line at both ends, so the result is C^1 and periodic.
    """
    if not t0 < t1 < t0 + period:
        raise ValueError("need t0 < t1 < t0 + period")
    x = np.array([t0, t1, t0 + period])
    y = np.array([a + b * t0, a + b * t1, a + b * t0])
    dy = np.full(3, float(b))
    spline = CubicHermiteSpline(x, y, dy)
    return PiecewisePolynomial(spline, period, {"linear": [a, b, t0, t1]})


def periodic_spline(knots: Sequence[float], values: Sequence[float],
                    period: float = 1.0) -> PiecewisePolynomial:
    """Periodic cubic spline through ``(knots, values)`` spanning one period.

    The last knot must sit one period after the first; a mismatched last
    value is replaced by the first so the interpolant closes up.
    """
    knots = np.asarray(knots, dtype=float)
    values = np.array(values, dtype=float)
    if knots.ndim != 1 or knots.size < 3 or knots.size != values.size:
        raise ValueError("spline needs >= 3 matching knots and values")
    if not math.isclose(knots[-1] - knots[0], period, rel_tol=1e-12, abs_tol=1e-12):
        raise ValueError("spline knots must end one period after the first knot")
    values[-1] = values[0]
    spline = CubicSpline(knots, values, bc_type="periodic")
    spec = {"spline": {"knots": knots.tolist(), "values": values.tolist()}}
    return PiecewisePolynomial(spline, period, spec)


def quartic_bump(start: float, end: float, amplitude: float,
                 period: float = 1.0) -> PiecewisePolynomial:
    """``amplitude * 16 (t-start)^2 (end-t)^2 / (end-start)^4`` on [start, end].

    Zero elsewhere in the period; peaks at ``amplitude`` mid-window and is C^1
    at both window edges.  ``end`` may exceed ``period`` (the window wraps).
    The integral over one period is ``8 amplitude (end - start) / 15``.
    """
    width = end - start
    if not 0.0 < width < period:
        raise ValueError("bump window must be shorter than one period")
    # 16 u^2 (1-u)^2 in u = (t - start)/width, as local-power coefficients.
    c = amplitude * 16.0 * np.array([1.0, -2.0, 1.0, 0.0, 0.0])
    c /= width ** np.array([4, 3, 2, 1, 0], dtype=float)
    coeffs = np.zeros((5, 2))
    coeffs[:, 0] = c
    ppoly = PPoly(coeffs, np.array([start, end, start + period]))
    spec = {"bump": {"start": start, "end": end, "amplitude": amplitude}}
    return PiecewisePolynomial(ppoly, period, spec, floor=0.0 if amplitude >= 0 else None)


def from_dict(spec: Any, period: float = 1.0) -> PeriodicFn:
    """Build a periodic function from its JSON-compatible description.

    Accepted forms: a bare number, ``{"const": x}``,
    ``{"linear": [a, b, t0, t1]}``, ``{"spline": {"knots": .., "values": ..}}``,
    ``{"harmonic": {"mean": m, "cos": [..], "sin": [..]}}``,
    ``{"bump": {"start": s, "end": e, "amplitude": A}}``, and the composite
    ``{"sum": [...]}`` / ``{"scaled": {"factor": c, "fn": ...}}``.
    """
    if isinstance(spec, (int, float)):
        return Constant(spec, period)
    if not isinstance(spec, dict) or len(spec) != 1:
        raise ValueError(f"cannot parse periodic function from {spec!r}")
    (kind, arg), = spec.items()
    if kind == "const":
        return Constant(float(arg), period)
    if kind == "linear":
        a, b, t0, t1 = (float(v) for v in arg)
        return linear_on_interval(a, b, t0, t1, period)
    if kind == "spline":
        return periodic_spline(arg["knots"], arg["values"], period)
    if kind == "harmonic":
        return Harmonic(arg.get("mean", 0.0), arg.get("cos", ()),
                        arg.get("sin", ()), period)
    if kind == "bump":
        return quartic_bump(arg["start"], arg["end"], arg["amplitude"], period)
    if kind == "sum":
        return Sum([from_dict(s, period) for s in arg])
    if kind == "scaled":
        return Scaled(from_dict(arg["fn"], period), arg["factor"])
    raise ValueError(f"unknown periodic function kind {kind!r}")
