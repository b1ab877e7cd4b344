"""Immature population driven by a known mature trajectory.

Within a year the breeding window ``[alpha, beta]`` precedes the maturation
window ``[t_alpha, t_beta]``, so the adult density at every birth time is
``k_M(s, 0) * u(year start)``.  The immature density therefore follows from
the yearly snapshots alone:

    v(t) = k_I(t, 0) * v(0) + int_0^t k_I(t, s) * Z(s) ds,
    Z(s) = b(s, u(s)) - R(s, u(s - tau(s))).

Because every newborn matures within its birth year, the two parts of the
source cancel once both windows have passed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .errors import DiagnosticError
from .kinetics import fixed_point
from .model import ModelParams, epsilon_sigma, gauss_legendre, kbar_M
from .spatial import Field, Grid, Trajectory, year_map

__all__ = [
    "SourceTerm",
    "conservation_residual",
    "birth_integral",
    "recruitment_integral",
    "PeriodicMature",
    "ubar_periodic",
    "VBar",
    "vbar",
    "v_evolve",
    "v_within_year",
    "ImmatureWave",
    "v_wave_profile",
    "default_phases",
]


@dataclass(frozen=True)
class _Branches:
    """Sum over nodes of ``weight * Out[ h(In[phi]) ]`` with Gaussian ``In``/``Out``."""

    inner_variance: np.ndarray
    inner_decay: np.ndarray
    weight: np.ndarray  # quadrature weight times pointwise birth factor (signed)
    outer_variance: np.ndarray
    outer_decay: np.ndarray

    @staticmethod
    def empty() -> _Branches:
        z = np.zeros(0)
        return _Branches(z, z, z, z, z)

    def __add__(self, other: _Branches) -> _Branches:
        return _Branches(*(np.concatenate([a, b]) for a, b in
                           zip(self._arrays(), other._arrays())))

    def _arrays(self):
        return (self.inner_variance, self.inner_decay, self.weight,
                self.outer_variance, self.outer_decay)

    def apply(self, h, phi):
        if self.weight.size == 0:
            return 0.0 * phi if not isinstance(phi, Field) else np.zeros(phi.grid.n_points)
        if not isinstance(phi, Field):
            z = float(phi) * self.inner_decay
            return float(np.sum(self.weight * h(z) * self.outer_decay))
        grid = phi.grid
        inner = grid.convolve(phi.values[None, :],
                              grid.gaussian_multiplier(self.inner_variance, self.inner_decay))
        src = self.weight[:, None] * h(np.maximum(inner, 0.0))
        spec = np.fft.rfft(src, axis=-1) * grid.gaussian_multiplier(self.outer_variance,
                                                                    self.outer_decay)
        total = np.zeros(spec.shape[-1], dtype=complex)
        for row in spec:
            total = total + row
        return np.fft.irfft(total, n=grid.n_points)


def _birth_branches(params: ModelParams, t: float, n_quad: int, upto: float | None = None,
                    sign: float = 1.0) -> _Branches:
    """Births on ``[alpha, min(upto, beta)]`` carried by the juvenile kernel to time ``t``."""
    a, b = params.alpha, params.beta
    hi = b if upto is None else min(upto, b)
    if hi <= a:
        return _Branches.empty()
    s, w = gauss_legendre(a, hi, n_quad)
    return _Branches(
        2.0 * params.D_M.integral(0.0, s), kbar_M(params, 0.0, s),
        sign * w * params.p(s),
        2.0 * params.D_I.integral(s, t), np.exp(-params.d_I.integral(s, t)))


def _recruit_branches(params: ModelParams, t: float, n_quad: int, upto: float | None = None,
                      sign: float = 1.0) -> _Branches:
    """Maturations on ``[t_alpha, min(upto, t_beta)]`` carried to time ``t``.

    ``k_I(t, s) * R(s, .)`` collapses to ``(1 - tau') k_I(t, s - tau) * b(s - tau, .)``.
    """
    ta, tb = params.t_alpha, params.t_beta
    hi = tb if upto is None else min(upto, tb)
    if hi <= ta:
        return _Branches.empty()
    s, w = gauss_legendre(ta, hi, n_quad)
    born = s - params.tau(s)
    return _Branches(
        2.0 * params.D_M.integral(0.0, born), kbar_M(params, 0.0, born),
        sign * w * (1.0 - params.tau.derivative(s)) * params.p(born),
        2.0 * params.D_I.integral(born, t), np.exp(-params.d_I.integral(born, t)))


def _value(x):
    return x.values if isinstance(x, Field) else x


class SourceTerm:
    """``Z(s, .)`` for a year that starts from the adult field ``u_start``."""

    def __init__(self, params: ModelParams, u_start):
        params.require_valid()
        self.params, self.u_start = params, u_start

    def _adult(self, s: float):
        p = self.params
        if isinstance(self.u_start, Field):
            from .spatial import gaussian_step
            var = 2.0 * float(p.D_M.integral(0.0, s))
            return gaussian_step(self.u_start, var, float(kbar_M(p, 0.0, s)))
        return float(self.u_start) * float(kbar_M(p, 0.0, s))

    def birth(self, s: float):
        """``b(s, u(s, .))``."""
        p = self.params
        u = self._adult(s)
        return float(p.p(s)) * p.h(_value(u))

    def recruitment(self, s: float):
        """``R(s, u(s - tau(s), .))``."""
        p = self.params
        born = float(s - p.tau(s))
        newborn = float(p.p(born)) * p.h(_value(self._adult(born)))
        eps, sigma = epsilon_sigma(p, s)
        factor = (1.0 - float(p.tau.derivative(s))) * float(eps)
        if isinstance(self.u_start, Field):
            grid = self.u_start.grid
            mult = grid.gaussian_multiplier(2.0 * float(sigma), factor)
            return grid.convolve(newborn, mult)
        return factor * newborn

    def __call__(self, s: float):
        p = self.params
        s = float(np.mod(s, p.T))
        zero = (np.zeros(self.u_start.grid.n_points) if isinstance(self.u_start, Field)
                else 0.0)
        if p.alpha <= s <= p.beta:
            return self.birth(s)
        if p.t_alpha <= s <= p.t_beta:
            return -self.recruitment(s)
        return zero


def birth_integral(params: ModelParams, u_start, t: float, n_quad: int = 64):
    """``int_0^T k_I(t, s) * b(s, u(s)) ds`` for ``t >= T``."""
    return _birth_branches(params, t, n_quad).apply(params.h, u_start)


def recruitment_integral(params: ModelParams, u_start, t: float, n_quad: int = 64,
                         substitute: bool = False):
    """``int_0^T k_I(t, s) * R(s, u(s - tau(s))) ds`` for ``t >= T``.

    With ``substitute=True`` the integral is taken in the birth time
    ``eta = s - tau(s)``, which turns it into the birth integral exactly.
    """
    if not substitute:
        return _recruit_branches(params, t, n_quad).apply(params.h, u_start)
    return birth_integral(params, u_start, t, n_quad)


def conservation_residual(params: ModelParams, u_start, t: float | None = None,
                          n_quad: int = 64) -> float:
    """Relative max-norm mismatch between transported births and maturations.

    ``u_start`` is the adult field (or scalar density) at the start of the
    year; births use nodes on ``[alpha, beta]``, maturations nodes on
    ``[t_alpha, t_beta]``.
    """
    params.require_valid()
    if t is None:
        t = 1.25 * params.T
    if t <= params.T:
        raise ValueError("conservation is stated for t > T")
    births = np.asarray(birth_integral(params, u_start, t, n_quad))
    recruits = np.asarray(recruitment_integral(params, u_start, t, n_quad))
    scale = float(np.max(np.abs(births)))
    if scale == 0.0:
        return float(np.max(np.abs(recruits)))
    return float(np.max(np.abs(births - recruits))) / scale


# ---------------------------------------------------------------------------
# spatially constant periodic regime

class PeriodicMature:
    """Adult density ``u(t)`` over one year started at ``u0``, extended periodically."""

    def __init__(self, params: ModelParams, u0: float, n_quad: int = 64):
        params.require_valid()
        self.params, self.u0, self.n_quad = params, float(u0), n_quad

    def at_phase(self, t: float) -> float:
        p = self.params
        val = self.u0 * float(kbar_M(p, 0.0, t))
        hi = min(t, p.t_beta)
        if hi > p.t_alpha:
            r, w = gauss_legendre(p.t_alpha, hi, self.n_quad)
            born = r - p.tau(r)
            eps, _ = epsilon_sigma(p, r)
            rec = ((1.0 - p.tau.derivative(r)) * eps * p.p(born)
                   * p.h(self.u0 * kbar_M(p, 0.0, born)))
            val += float(np.sum(w * kbar_M(p, r, t) * rec))
        return val

    def __call__(self, t):
        t = np.mod(np.asarray(t, dtype=float), self.params.T)
        return np.vectorize(self.at_phase, otypes=[float])(t)

    @property
    def closure(self) -> float:
        """``u(T) - u(0)``; zero when ``u0`` is a fixed point of the yearly map."""
        return self.at_phase(self.params.T) - self.u0


def ubar_periodic(params: ModelParams, ustar: float | None = None,
                  n_quad: int = 64) -> PeriodicMature:
    """Periodic adult density through the persistent state ``u*``."""
    if ustar is None:
        res = fixed_point(params)
        if res.ustar is None:
            raise DiagnosticError(f"no persistent state (status {res.status})")
        ustar = res.ustar
    return PeriodicMature(params, ustar, n_quad)


class VBar:
    """Periodic immature density ``vbar(t) = int_0^t e^{-int_s^t d_I} Zbar(s) ds``."""

    PERIODIC_RTOL = 1e-8

    def __init__(self, params: ModelParams, ubar: Callable, n_quad: int = 64):
        self.params, self.ubar, self.n_quad = params, ubar, n_quad

    def at_phase(self, t: float) -> float:
        p = self.params
        total = 0.0
        hi = min(t, p.beta)
        if hi > p.alpha:
            s, w = gauss_legendre(p.alpha, hi, self.n_quad)
            total += float(np.sum(w * np.exp(-p.d_I.integral(s, t)) * p.p(s)
                                  * p.h(np.asarray(self.ubar(s), dtype=float))))
        hi = min(t, p.t_beta)
        if hi > p.t_alpha:
            s, w = gauss_legendre(p.t_alpha, hi, self.n_quad)
            born = s - p.tau(s)
            eps, _ = epsilon_sigma(p, s)
            rec = ((1.0 - p.tau.derivative(s)) * eps * p.p(born)
                   * p.h(np.asarray(self.ubar(born), dtype=float)))
            total -= float(np.sum(w * np.exp(-p.d_I.integral(s, t)) * rec))
        return total

    def __call__(self, t):
        t = np.mod(np.asarray(t, dtype=float), self.params.T)
        return np.vectorize(self.at_phase, otypes=[float])(t)

    def samples(self, n: int = 400) -> tuple[np.ndarray, np.ndarray]:
        t = np.linspace(0.0, self.params.T, n, endpoint=False)
        return t, self(t)

    @property
    def closure(self) -> float:
        """``vbar(T) - vbar(0)``, i.e. the transported birth/maturation imbalance."""
        return self.at_phase(self.params.T)


def vbar(params: ModelParams, ubar: Callable, n_quad: int = 64) -> VBar:
    """Periodic immature solution for a periodic adult density ``ubar``.

    Refuses adult densities that are not ``T``-periodic, and checks that the
    result closes over a period to ``1e-8`` of its maximum.
    """
    params.require_valid()
    u0 = float(ubar(0.0))
    uT = float(ubar(params.T)) if not isinstance(ubar, PeriodicMature) else ubar.at_phase(params.T)
    if abs(uT - u0) > 1e-8 * max(abs(u0), 1e-300):
        raise ValueError(f"adult density is not periodic: u(T) - u(0) = {uT - u0:.3g}")
    vb = VBar(params, ubar, n_quad)
    _, vals = vb.samples()
    peak = float(np.max(np.abs(vals))) if vals.size else 0.0
    if abs(vb.closure) > VBar.PERIODIC_RTOL * max(peak, 1e-300) and peak > 0:
        raise DiagnosticError(f"vbar does not close over a period: {vb.closure:.3g}")
    return vb


# ---------------------------------------------------------------------------
# spatial immature dynamics

def v_within_year(params: ModelParams, v_start, u_start, phase: float, n_quad: int = 64):
    """Immature density at ``phase`` in ``(0, T]`` of a year.

    ``v_start`` and ``u_start`` are the immature and adult densities at the
    start of the year (both fields on one grid, or both scalars).
    """
    if not 0.0 < phase <= params.T + 1e-15:
        raise ValueError("phase must lie in (0, T]")
    branches = (_birth_branches(params, phase, n_quad, upto=phase)
                + _recruit_branches(params, phase, n_quad, upto=phase, sign=-1.0))
    source = branches.apply(params.h, u_start)
    var = 2.0 * float(params.D_I.integral(0.0, phase))
    decay = math.exp(-float(params.d_I.integral(0.0, phase)))
    if isinstance(v_start, Field):
        carried = v_start.grid.convolve(v_start.values,
                                        v_start.grid.gaussian_multiplier(var, decay))
        return Field(carried + source, v_start.grid)
    if isinstance(u_start, Field):
        return Field(decay * float(v_start) + source, u_start.grid)
    return decay * float(v_start) + float(source)


def v_evolve(params: ModelParams, v0, u_years: Sequence, t: float, n_quad: int = 64):
    """Immature density at time ``t`` from ``v0`` at time 0.

    ``u_years[n]`` is the adult density at ``t = nT``; years ``0..floor(t/T)``
    must be present (year ``floor(t/T)`` only when ``t`` is not a whole year).
    """
    params.require_valid()
    if isinstance(u_years, Trajectory):
        u_years = u_years.snapshots
    T = params.T
    n_full = int(math.floor(t / T + 1e-12))
    phase = t - n_full * T
    if phase < 1e-12 * T:
        phase = 0.0
    needed = n_full + (1 if phase > 0 else 0)
    if len(u_years) < needed:
        raise DiagnosticError(
            f"adult snapshots cover {len(u_years)} years; {needed} needed for t = {t:g}")
    v = v0
    for n in range(n_full):
        v = v_within_year(params, v, u_years[n], T, n_quad)
    if phase > 0:
        v = v_within_year(params, v, u_years[n_full], phase, n_quad)
    return v


def default_phases(params: ModelParams, n: int = 4) -> np.ndarray:
    """Phases strictly inside ``(alpha, t_beta)``, where juveniles are present."""
    frac = np.arange(1, n + 1) / (n + 1)
    return params.alpha + (params.t_beta - params.alpha) * frac


@dataclass(frozen=True)
class ImmatureWave:
    phases: np.ndarray
    xi: np.ndarray = field(repr=False)
    profiles: np.ndarray = field(repr=False)  # (phase, xi) over the last period
    plateau: np.ndarray
    vbar: np.ndarray
    plateau_error: np.ndarray  # |plateau - vbar| / vbar
    right_tail: np.ndarray  # max |V| ahead of the front / max V
    drift: np.ndarray  # aligned change over the last period / max V
    n_periods: int
    min_value: float

    TAIL_TOL = 1e-3
    PLATEAU_TOL = 0.02
    DRIFT_TOL = 0.01

    @property
    def periodic_ok(self) -> bool:
        return bool(np.all(self.drift <= self.DRIFT_TOL))

    @property
    def limits_ok(self) -> bool:
        return bool(np.all(self.plateau_error <= self.PLATEAU_TOL)
                    and np.all(self.right_tail <= self.TAIL_TOL))

    def to_dict(self) -> dict:
        return {"phases": self.phases.tolist(), "plateau": self.plateau.tolist(),
                "vbar": self.vbar.tolist(), "plateau_error": self.plateau_error.tolist(),
                "right_tail": self.right_tail.tolist(), "drift": self.drift.tolist(),
                "n_periods": self.n_periods, "min_value": self.min_value,
                "periodic_ok": self.periodic_ok, "limits_ok": self.limits_ok,
                "tolerances": {"plateau": self.PLATEAU_TOL, "right_tail": self.TAIL_TOL,
                               "drift": self.DRIFT_TOL}}


def v_wave_profile(params: ModelParams, traj: Trajectory, n_periods: int | None = None,
                   phases: Sequence[float] | None = None, n_quad: int = 64,
                   window: float = 20.0) -> ImmatureWave:
    """Co-moving immature profile ``V(t, xi)`` over the last simulated period.

    ``v`` is evolved from zero alongside the adult trajectory.  Profiles are
    centred on the adult front at the start of each year (the measured front
    rather than ``c* n``, which would drift by the logarithmic lag).  The
    left limit is read at the centre of the symmetric invasion, the right
    tail in the outermost band not yet reached by wrap-around (between one
    and two contamination margins from the edge).
    """
    params.require_valid()
    n_periods = traj.n_years if n_periods is None else n_periods
    if n_periods < 2 or n_periods > traj.n_years:
        raise ValueError("n_periods must be between 2 and the trajectory length")
    if traj.usable_years <= n_periods:
        raise DiagnosticError("adult trajectory is contaminated before the last period")
    phases = default_phases(params) if phases is None else np.asarray(phases, dtype=float)
    grid: Grid = traj.snapshots[0].grid
    ymap = year_map(params, grid, n_quad)
    margin = 10.0 * ymap.kernel_std
    vb = vbar(params, ubar_periodic(params, n_quad=n_quad), n_quad)
    vbar_vals = vb(phases)

    v = Field(np.zeros(grid.n_points), grid)
    for n in range(n_periods - 2):
        v = v_within_year(params, v, traj.snapshots[n], params.T, n_quad)
    xi = np.arange(-window, 0.5 * window, grid.dx)
    tail_band = (grid.x > grid.half_width - 2.0 * margin) & (grid.x < grid.half_width - margin)
    if traj.front_positions[n_periods - 1] > grid.half_width - 3.0 * margin:
        raise DiagnosticError("domain too short to read the right tail ahead of the front")

    def phase_profiles(n: int, v_start: Field):
        fp = traj.front_positions[n]
        if not np.isfinite(fp):
            raise DiagnosticError(f"no adult front in year {n}")
        rows, tails, plateaus, mins = [], [], [], []
        for ph in phases:
            vt = v_within_year(params, v_start, traj.snapshots[n], ph, n_quad).values
            rows.append(np.interp(fp + xi, grid.x, vt))
            tails.append(float(np.abs(vt[tail_band]).max()))
            plateaus.append(float(np.interp(0.0, grid.x, vt)))
            mins.append(float(vt.min()))
        return np.array(rows), np.array(tails), np.array(plateaus), min(mins)

    prev_rows, *_ = phase_profiles(n_periods - 2, v)
    v = v_within_year(params, v, traj.snapshots[n_periods - 2], params.T, n_quad)
    rows, tails, plateaus, vmin = phase_profiles(n_periods - 1, v)
    peak = np.maximum(np.abs(rows).max(axis=1), 1e-300)
    drift = np.abs(rows - prev_rows).max(axis=1) / peak
    with np.errstate(divide="ignore", invalid="ignore"):
        plateau_err = np.where(vbar_vals > 0, np.abs(plateaus - vbar_vals) / vbar_vals,
                               np.abs(plateaus))
    return ImmatureWave(phases, xi, rows, plateaus, vbar_vals, plateau_err,
                        tails / peak, drift, n_periods, vmin)
