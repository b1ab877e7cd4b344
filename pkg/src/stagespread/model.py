"""Model parameters, standing-assumption checks and derived scalar quantities.

Time runs over one year ``[0, T]``.  Adults breed during ``[alpha, beta]``;
a newborn of time ``a`` matures at the unique ``t`` with ``t - tau(t) = a``,
so maturation happens during ``[t_alpha, t_beta]``.  Juvenile survival and
juvenile spread over the maturation delay are summarised by

    eps(t)   = exp(-int_{t-tau(t)}^t d_I),
    sigma(t) = int_{t-tau(t)}^t D_I,

the recruitment kernel being ``eps(t)`` times a Gaussian of variance
``2 sigma(t)``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from functools import cached_property
from typing import Any

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.optimize import brentq, minimize_scalar

from .birth import BirthFn
from .errors import InvalidParamsError
from .periodic import Constant, PeriodicFn, quartic_bump

__all__ = [
    "ModelParams",
    "SeasonStructure",
    "AssumptionCheck",
    "ValidationReport",
    "validate",
    "maturation_time",
    "epsilon_sigma",
    "kbar_M",
    "dR0",
    "recruitment_factor",
    "MaturationRule",
]

SCAN_POINTS = 10_000


@dataclass(frozen=True)
class SeasonStructure:
    t_alpha: float
    t_beta: float


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    passed: bool
    detail: str
    witness: float | None = None

    def to_dict(self) -> dict[str, Any]:
        return {"name": self.name, "passed": self.passed, "detail": self.detail,
                "witness": self.witness}


@dataclass(frozen=True)
class ValidationReport:
    checks: tuple[AssumptionCheck, ...]
    seasons: SeasonStructure | None

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    @property
    def failures(self) -> list[AssumptionCheck]:
        return [c for c in self.checks if not c.passed]

    def __getitem__(self, name: str) -> AssumptionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "ok": self.ok,
            "t_alpha": None if self.seasons is None else self.seasons.t_alpha,
            "t_beta": None if self.seasons is None else self.seasons.t_beta,
            "scan_points_per_period": SCAN_POINTS,
            "checks": [c.to_dict() for c in self.checks],
        }


@dataclass(frozen=True, eq=False)
class ModelParams:
    """Full parameter bundle.

    ``p_shape`` is the unit-amplitude breeding seasonality (the quartic bump
    on ``[alpha, beta]`` when omitted) and ``P`` its amplitude, so the
    birth rate is ``b(t, u) = P p_shape(t) h(u)``.
    """

    T: float
    alpha: float
    beta: float
    D_M: PeriodicFn
    D_I: PeriodicFn
    d_M: PeriodicFn
    d_I: PeriodicFn
    tau: PeriodicFn
    h: BirthFn
    P: float
    p_shape: PeriodicFn | None = field(default=None)

    def replace(self, **changes) -> ModelParams:
        return dataclasses.replace(self, **changes)

    @cached_property
    def p(self) -> PeriodicFn:
        shape = self.p_shape
        if shape is None:
            shape = quartic_bump(self.alpha, self.beta, 1.0, self.T)
        return shape * self.P

    @cached_property
    def report(self) -> ValidationReport:
        return validate(self)

    @property
    def seasons(self) -> SeasonStructure:
        self.require_valid()
        return self.report.seasons

    @property
    def t_alpha(self) -> float:
        return self.seasons.t_alpha

    @property
    def t_beta(self) -> float:
        return self.seasons.t_beta

    def require_valid(self) -> None:
        report = self.report
        if not report.ok:
            names = ", ".join(c.name for c in report.failures)
            raise InvalidParamsError(f"parameters violate {names}", report)

    @cached_property
    def rule(self) -> MaturationRule:
        return MaturationRule.build(self)

    @property
    def coefficients(self) -> dict[str, PeriodicFn]:
        return {"D_M": self.D_M, "D_I": self.D_I, "d_M": self.d_M,
                "d_I": self.d_I, "tau": self.tau}


# ---------------------------------------------------------------------------
# assumption checks

def _scan(params: ModelParams) -> np.ndarray:
    return np.linspace(0.0, params.T, SCAN_POINTS, endpoint=False)


def _refine_max(fn, t0: float, width: float) -> tuple[float, float]:
    """Local maximum of ``fn`` near a grid maximiser ``t0``."""
    res = minimize_scalar(lambda t: -float(fn(t)), bounds=(t0 - width, t0 + width),
                          method="bounded", options={"xatol": 1e-12})
    if -res.fun >= float(fn(t0)):
        return float(res.x), float(-res.fun)
    return t0, float(fn(t0))


def _solve_seasons(params: ModelParams) -> SeasonStructure:
    t = _scan(params)
    tau = params.tau(t)
    lo, hi = float(tau.min()), float(tau.max())
    pad = 1e-6 + 1e-3 * (hi - lo)

    def root(a):
        g = lambda s: s - float(params.tau(s)) - a
        return brentq(g, a + lo - pad, a + hi + pad, xtol=1e-15, rtol=1e-15,
                      maxiter=200)

    return SeasonStructure(root(params.alpha), root(params.beta))


def _check_positivity(params: ModelParams) -> AssumptionCheck:
    t = _scan(params)
    bounds = {"D_M": (params.D_M, 0.0, False), "D_I": (params.D_I, 0.0, False),
              "d_M": (params.d_M, 0.0, True), "d_I": (params.d_I, 0.0, True),
              "tau": (params.tau, 0.0, True), "p": (params.p, 0.0, False)}
    for name, (fn, floor, strict) in bounds.items():
        v = fn(t)
        i = int(np.argmin(v))
        bad = v[i] <= floor if strict else v[i] < floor - 1e-14
        if bad:
            return AssumptionCheck("A1", False, f"{name} takes value {v[i]:.6g}",
                                   float(t[i]))
    # C^1: one-sided slopes (Richardson-extrapolated) agree at every knot.
    for name, fn in list(params.coefficients.items()) + [("p", params.p)]:
        if fn.knots.size == 0:
            continue
        tol = 1e-6 * float(np.abs(fn.derivative(t)).max()) + 1e-12
        for k in fn.knots:
            d = lambda x: float(fn.derivative(x))
            dl = 2.0 * d(k - 1e-7) - d(k - 2e-7)
            dr = 2.0 * d(k + 1e-7) - d(k + 2e-7)
            if abs(dl - dr) > tol:
                return AssumptionCheck("A1", False, f"{name} has a derivative jump",
                                       float(k))
    if params.T <= 0:
        return AssumptionCheck("A1", False, "period must be positive")
    return AssumptionCheck("A1", True, "coefficients C^1, T-periodic, with required signs")


def _check_ordering(params: ModelParams, seasons: SeasonStructure | None) -> AssumptionCheck:
    a, b, T = params.alpha, params.beta, params.T
    if seasons is None:
        return AssumptionCheck("A2", False, "maturation window could not be solved")
    ta, tb = seasons.t_alpha, seasons.t_beta
    if not (0 < a <= b < ta <= tb < T):
        return AssumptionCheck(
            "A2", False,
            f"need 0 < alpha <= beta < t_alpha <= t_beta < T, got "
            f"{a:.6g}, {b:.6g}, {ta:.6g}, {tb:.6g}", ta)
    t = _scan(params)
    off = (t <= a) | (t >= b)
    pv = np.abs(params.p(t[off]))
    if pv.size and pv.max() > 1e-12 * max(1.0, params.P):
        i = int(np.argmax(pv))
        return AssumptionCheck("A2", False, "breeding seasonality nonzero off [alpha, beta]",
                               float(t[off][i]))
    return AssumptionCheck(
        "A2", True,
        f"breeding [{a:.6g}, {b:.6g}] and maturation [{ta:.10g}, {tb:.10g}] disjoint")


def _check_delay_slope(params: ModelParams) -> AssumptionCheck:
    t = _scan(params)
    d = params.tau.derivative(t)
    i = int(np.argmax(d))
    tw, dmax = _refine_max(params.tau.derivative, float(t[i]), params.T / SCAN_POINTS)
    tw = float(np.mod(tw, params.T))
    if dmax >= 1.0:
        return AssumptionCheck("A3", False, f"max tau' = {dmax:.6g} >= 1", tw)
    return AssumptionCheck("A3", True, f"max tau' = {dmax:.6g} < 1", tw)


def _check_order(params: ModelParams) -> AssumptionCheck:
    t = np.linspace(0.0, params.T, SCAN_POINTS + 1)
    g = t - params.tau(t)
    dg = np.diff(g)
    i = int(np.argmin(dg))
    if dg[i] <= 0:
        return AssumptionCheck("B5", False, "t - tau(t) not strictly increasing",
                               float(t[i]))
    return AssumptionCheck("B5", True, "t - tau(t) strictly increasing")


def _check_unimodal(params: ModelParams) -> AssumptionCheck:
    h = params.h
    zs = float(h.zstar)
    z = np.linspace(0.0, 60.0 * zs, 60_001)
    v = h(z)
    if abs(float(v[0])) > 0:
        return AssumptionCheck("A4", False, "h(0) != 0", 0.0)
    if v[-1] > 1e-8 * v.max():
        return AssumptionCheck("A4", False, "h does not vanish at large density",
                               float(z[-1]))
    dv = np.diff(v)
    rising = z[1:] <= zs
    bad_up = np.nonzero(rising & (dv < -1e-15))[0]
    bad_down = np.nonzero(~rising & (dv > 1e-15))[0]
    if bad_up.size or bad_down.size:
        i = int((bad_up if bad_up.size else bad_down)[0])
        return AssumptionCheck("A4", False, "h not unimodal about z*", float(z[i]))
    return AssumptionCheck("A4", True, f"unimodal with z* = {zs:.6g}")


def _check_sublinear(params: ModelParams) -> AssumptionCheck:
    h = params.h
    z = np.linspace(0.0, 60.0 * float(h.zstar), 60_001)[1:]
    ratio = h(z) / z
    dr = np.diff(ratio)
    bad = np.nonzero(dr > 1e-12 * max(1.0, float(np.abs(ratio).max())))[0]
    if bad.size:
        return AssumptionCheck("A5", False, "h(z)/z increases", float(z[bad[0]]))
    return AssumptionCheck("A5", True, "h(z)/z nonincreasing")


def validate(params: ModelParams) -> ValidationReport:
    """Check every standing assumption; never raises on a failed check."""
    try:
        seasons = _solve_seasons(params)
    except (ValueError, ArithmeticError):
        seasons = None
    checks = (
        _guarded("A1", _check_positivity, params),
        _guarded("A2", _check_ordering, params, seasons),
        _guarded("A3", _check_delay_slope, params),
        _guarded("A4", _check_unimodal, params),
        _guarded("A5", _check_sublinear, params),
        _guarded("B5", _check_order, params),
    )
    return ValidationReport(checks, seasons)


def _guarded(name: str, check, *args) -> AssumptionCheck:
    """Run one check, turning an evaluation error into a failed check."""
    try:
        return check(*args)
    except (ValueError, ArithmeticError) as exc:
        return AssumptionCheck(name, False, f"could not evaluate: {exc}")


# ---------------------------------------------------------------------------
# derived quantities

def maturation_time(params: ModelParams, a: float) -> float:
    """Time at which a newborn of time ``a`` in [alpha, beta] matures."""
    seasons = params.seasons
    if not params.alpha - 1e-14 <= a <= params.beta + 1e-14:
        raise ValueError("birth time outside the breeding window")
    if a <= params.alpha:
        return seasons.t_alpha
    if a >= params.beta:
        return seasons.t_beta
    g = lambda s: s - float(params.tau(s)) - a
    return brentq(g, seasons.t_alpha, seasons.t_beta, xtol=1e-15, rtol=1e-15,
                  maxiter=200)


def epsilon_sigma(params: ModelParams, t):
    """Juvenile survival ``eps(t)`` and spread ``sigma(t)`` for maturation at ``t``."""
    params.require_valid()
    t = np.asarray(t, dtype=float)
    born = t - params.tau(t)
    eps = np.exp(-params.d_I.integral(born, t))
    sigma = params.D_I.integral(born, t)
    return eps, sigma


def kbar_M(params: ModelParams, s, t):
    """Adult survival ``exp(-int_s^t d_M)`` from ``s`` to ``t >= s``."""
    s = np.asarray(s, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(s > t):
        raise ValueError("kbar_M needs s <= t")
    return np.exp(-params.d_M.integral(s, t))


def recruitment_factor(params: ModelParams, s):
    """``(1 - tau'(s)) eps(s) p(s - tau(s))``: recruits per unit of ``h``."""
    s = np.asarray(s, dtype=float)
    eps, _ = epsilon_sigma(params, s)
    return (1.0 - params.tau.derivative(s)) * eps * params.p(s - params.tau(s))


def dR0(params: ModelParams, s):
    """Linearised recruitment rate at zero density; zero off the maturation window."""
    s = np.asarray(s, dtype=float)
    ta, tb = params.t_alpha, params.t_beta
    sm = np.mod(s, params.T)
    inside = (sm >= ta) & (sm <= tb)
    val = recruitment_factor(params, sm) * params.h.hprime0
    return np.where(inside, val, 0.0)


# ---------------------------------------------------------------------------
# quadrature over the maturation window

@dataclass(frozen=True)
class MaturationRule:
    """Composite Gauss-Legendre rule on ``[t_alpha, t_beta]``.

    Panels are split wherever any coefficient (or the preimage of a
    breeding-side knot under ``s -> s - tau(s)``) loses smoothness; the
    per-panel order is doubled until two successive rules agree to 1e-14.
    """

    nodes: np.ndarray
    weights: np.ndarray
    order: int

    @classmethod
    def build(cls, params: ModelParams, max_order: int = 256) -> MaturationRule:
        ta, tb = params.t_alpha, params.t_beta
        cuts = {ta, tb}
        for fn in params.coefficients.values():
            cuts.update(k for k in fn.knots if ta < k < tb)
        breeding_side = [params.p, params.D_M, params.d_M, params.D_I, params.d_I]
        for fn in breeding_side:
            for k in fn.knots:
                if params.alpha < k < params.beta:
                    cuts.add(maturation_time(params, float(k)))
        edges = np.array(sorted(cuts))

        def probe(nodes, weights):
            f = recruitment_factor(params, nodes)
            born = nodes - params.tau(nodes)
            _, sigma = epsilon_sigma(params, nodes)
            spread = params.D_M.integral(0.0, born) + params.D_M.integral(nodes, params.T)
            expo = sigma + spread
            return np.array([weights @ f, weights @ (f * np.exp(expo - expo.max()))])

        prev = None
        order = 8
        while True:
            nodes, weights = cls._composite(edges, order)
            cur = probe(nodes, weights)
            if prev is not None:
                scale = np.maximum(np.abs(cur), 1e-300)
                if np.all(np.abs(cur - prev) <= 1e-14 * scale) or order >= max_order:
                    return cls(nodes, weights, order)
            prev = cur
            order *= 2

    @staticmethod
    def _composite(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
        x, w = leggauss(order)
        nodes, weights = [], []
        for lo, hi in zip(edges[:-1], edges[1:]):
            half = 0.5 * (hi - lo)
            nodes.append(lo + half * (x + 1.0))
            weights.append(half * w)
        return np.concatenate(nodes), np.concatenate(weights)


def gauss_legendre(lo: float, hi: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """``n``-point Gauss-Legendre nodes and weights on ``[lo, hi]``."""
    x, w = leggauss(n)
    half = 0.5 * (hi - lo)
    return lo + half * (x + 1.0), half * w


def constant_params(T=1.0, alpha=0.2, beta=0.3, D_M=1.0, D_I=0.2, d_M=0.5,
                    d_I=0.3, tau=0.4, P=1.0, h: BirthFn | None = None) -> ModelParams:
    """All-constant parameter bundle (quartic-bump breeding, Ricker q = 1 default)."""
    from .birth import Ricker

    c = lambda v: v if isinstance(v, PeriodicFn) else Constant(v, T)
    return ModelParams(T=T, alpha=alpha, beta=beta, D_M=c(D_M), D_I=c(D_I),
                       d_M=c(d_M), d_I=c(d_I), tau=c(tau),
                       h=h if h is not None else Ricker(1.0), P=P)

