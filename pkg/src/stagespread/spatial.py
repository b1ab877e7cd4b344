"""Spatial yearly operator on a periodic 1-D grid, fronts and measured speeds.

Every kernel in the model is a Gaussian, so one year of dynamics is a short
composition of Gaussian convolutions and pointwise nonlinearities.  On a
periodic grid the convolution with a Gaussian of variance ``v`` is exact in
Fourier space: the periodised Gaussian has coefficients ``exp(-v k^2 / 2)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np
from scipy.stats import linregress

from .errors import DiagnosticError
from .kinetics import fixed_point
from .model import ModelParams, epsilon_sigma, gauss_legendre, kbar_M

__all__ = [
    "Grid",
    "Field",
    "Trajectory",
    "SpeedEstimate",
    "YearMap",
    "gaussian_step",
    "apply_Q",
    "iterate_Q",
    "year_map",
    "front_position",
    "empirical_speed",
    "compact_initial",
    "aligned_drift",
    "CONTAMINATION_STDS",
]

CONTAMINATION_STDS = 10.0
MIN_FRONT_POINTS = 10


@dataclass(frozen=True)
class Grid:
    """Cell-centred periodic grid on ``[-half_width, half_width)``."""

    half_width: float
    n_points: int

    def __post_init__(self):
        if not self.half_width > 0:
            raise ValueError("half_width must be positive")
        n = self.n_points
        if n < 2 or n & (n - 1):
            raise ValueError("n_points must be a power of two")

    @property
    def dx(self) -> float:
        return 2.0 * self.half_width / self.n_points

    @cached_property
    def x(self) -> np.ndarray:
        x = -self.half_width + (np.arange(self.n_points) + 0.5) * self.dx
        x.flags.writeable = False
        return x

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        k = 2.0 * np.pi * np.fft.rfftfreq(self.n_points, d=self.dx)
        k.flags.writeable = False
        return k

    def gaussian_multiplier(self, variance, decay) -> np.ndarray:
        """Fourier multiplier(s) of ``decay * G_variance``; broadcasts over leading axes."""
        variance = np.asarray(variance, dtype=float)[..., None]
        decay = np.asarray(decay, dtype=float)[..., None]
        return decay * np.exp(-0.5 * variance * self.wavenumbers ** 2)

    def convolve(self, values: np.ndarray, multiplier: np.ndarray) -> np.ndarray:
        return np.fft.irfft(np.fft.rfft(values, axis=-1) * multiplier, n=self.n_points, axis=-1)


@dataclass(frozen=True, eq=False)
class Field:
    """Immutable grid function."""

    values: np.ndarray
    grid: Grid

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.shape != (self.grid.n_points,):
            raise ValueError(f"expected {self.grid.n_points} values, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("field values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    @classmethod
    def constant(cls, grid: Grid, value: float) -> Field:
        return cls(np.full(grid.n_points, float(value)), grid)

    @property
    def x(self) -> np.ndarray:
        return self.grid.x

    def max(self) -> float:
        return float(self.values.max())

    def shifted(self, k: int) -> Field:
        """Translate by ``k`` cells (periodic)."""
        return Field(np.roll(self.values, k), self.grid)

    def reflected(self) -> Field:
        return Field(self.values[::-1], self.grid)


def gaussian_step(field: Field, variance: float, decay: float) -> Field:
    """``decay * (G_variance * field)`` with ``G_v`` the centred Gaussian of variance ``v``."""
    if variance < 0:
        raise ValueError("variance must be nonnegative")
    if not 0 < decay <= 1:
        raise ValueError("decay must lie in (0, 1]")
    if variance == 0:
        return Field(decay * field.values, field.grid)
    grid = field.grid
    return Field(grid.convolve(field.values, grid.gaussian_multiplier(variance, decay)), grid)


class YearMap:
    """The yearly operator ``Q`` frozen on a grid with ``n_quad`` maturation nodes.

    ``Q[u] = S u + sum_j w_j Out_j[ B_j h(In_j u) ]`` where ``S``, ``In_j`` and
    ``Out_j`` are decayed Gaussian convolutions and ``B_j`` the birth factor.
    """

    def __init__(self, params: ModelParams, grid: Grid, n_quad: int = 64):
        if n_quad < 8:
            raise ValueError("n_quad must be at least 8")
        params.require_valid()
        self.params, self.grid, self.n_quad = params, grid, n_quad
        T = params.T
        s, w = gauss_legendre(params.t_alpha, params.t_beta, n_quad)
        born = s - params.tau(s)
        eps, sigma = epsilon_sigma(params, s)
        D = params.D_M
        self.nodes, self.weights = s, w
        self.survival_variance = 2.0 * float(D.integral(0.0, T))
        self.survival_decay = float(kbar_M(params, 0.0, T))
        self.inner_variance = 2.0 * D.integral(0.0, born)
        self.inner_decay = kbar_M(params, 0.0, born)
        self.outer_variance = 2.0 * sigma + 2.0 * D.integral(s, T)
        self.outer_decay = eps * kbar_M(params, s, T)
        self.birth = w * (1.0 - params.tau.derivative(s)) * params.p(born)
        self._survival = grid.gaussian_multiplier(self.survival_variance, self.survival_decay)
        self._inner = grid.gaussian_multiplier(self.inner_variance, self.inner_decay)
        self._outer = grid.gaussian_multiplier(self.outer_variance, self.outer_decay)
        self.kinetics = fixed_point(params)
        self.regime = ("monotone" if self.kinetics.monotone_basin_ok
                       else "non-monotone regime")

    @property
    def kernel_std(self) -> float:
        """Largest standard deviation among the yearly dispersal paths."""
        branch = self.inner_variance + self.outer_variance
        return math.sqrt(max(self.survival_variance, float(branch.max())))

    def __call__(self, field: Field) -> Field:
        if field.grid != self.grid:
            raise ValueError("field lives on a different grid")
        grid, h = self.grid, self.params.h
        U = np.fft.rfft(field.values)
        inner = np.fft.irfft(U * self._inner, n=grid.n_points, axis=-1)
        born = self.birth[:, None] * h(np.maximum(inner, 0.0))
        recruits = np.fft.rfft(born, axis=-1) * self._outer
        # Fixed-order reduction over nodes keeps the map bit-reproducible.
        total = U * self._survival
        for row in recruits:
            total = total + row
        out = np.fft.irfft(total, n=grid.n_points)
        return Field(np.maximum(out, 0.0), grid)


@lru_cache(maxsize=16)
def year_map(params: ModelParams, grid: Grid, n_quad: int = 64) -> YearMap:
    return YearMap(params, grid, n_quad)


def apply_Q(params: ModelParams, field: Field, n_quad: int = 64) -> Field:
    return year_map(params, field.grid, n_quad)(field)


def front_position(field: Field | np.ndarray, level: float, x: np.ndarray | None = None):
    """Rightmost linear-interpolated crossing of ``level``, or ``None`` if absent."""
    if isinstance(field, Field):
        values, x = field.values, field.x
    else:
        values = np.asarray(field, dtype=float)
    above = np.flatnonzero(values >= level)
    if above.size == 0:
        return None
    i = int(above[-1])
    if i == values.size - 1:
        return None
    v0, v1 = values[i], values[i + 1]
    frac = (v0 - level) / (v0 - v1)
    return float(x[i] + frac * (x[i + 1] - x[i]))


@dataclass(frozen=True)
class SpeedEstimate:
    """Front speed from yearly positions.

    ``slope`` comes from the fit ``x_n = c n + a ln n + b``, which absorbs the
    logarithmic lag of pulled fronts; ``raw_slope`` is the plain linear fit.
    """

    slope: float
    stderr: float
    raw_slope: float
    raw_stderr: float
    log_coefficient: float
    n_used: int
    first_year: int

    def to_dict(self) -> dict:
        return {"slope": self.slope, "stderr": self.stderr,
                "raw_slope": self.raw_slope, "raw_stderr": self.raw_stderr,
                "log_coefficient": self.log_coefficient,
                "n_used": self.n_used, "first_year": self.first_year}


@dataclass(frozen=True)
class Trajectory:
    snapshots: list[Field] = field(repr=False)
    front_positions: np.ndarray
    level: float
    usable_years: int  # snapshots [0, usable_years) are free of wrap contamination
    regime: str = "monotone"
    kernel_std: float = 0.0

    @property
    def n_years(self) -> int:
        return len(self.snapshots) - 1

    @property
    def contaminated(self) -> bool:
        return self.usable_years < len(self.snapshots)

    def matrix(self) -> np.ndarray:
        """Columns ``x, u_0, u_1, ...``."""
        grid = self.snapshots[0].grid
        return np.column_stack([grid.x] + [f.values for f in self.snapshots])


EDGE_FRACTION = 1e-3


def _near_edge(f: Field, level: float, margin: float) -> bool:
    """Front within ``margin`` of an edge, or visible mass in the edge bands."""
    right = front_position(f, level)
    left = front_position(f.values[::-1], level, -f.x[::-1])
    hw = f.grid.half_width
    if right is not None and right > hw - margin:
        return True
    if left is not None and -left < -hw + margin:
        return True
    band = np.abs(f.x) > hw - margin
    # Catches wrap-around and the growth of round-off ahead of the front.
    return bool(band.any() and f.values[band].max() > EDGE_FRACTION * level)


def iterate_Q(params: ModelParams, field0: Field, n_years: int, n_quad: int = 64,
              level: float | None = None) -> Trajectory:
    """Yearly snapshots ``field0, Q field0, ..., Q^n field0`` with front tracking.

    The default front level is ``u*/2`` (or half of ``max field0`` when there
    is no persistent state).  Years whose front lies within ten kernel
    standard deviations of either edge, or whose edge bands carry more than
    ``1e-3 * level``, are flagged as contaminated.
    """
    ymap = year_map(params, field0.grid, n_quad)
    if level is None:
        ustar = ymap.kinetics.ustar
        level = 0.5 * (ustar if ustar is not None else field0.max())
    margin = CONTAMINATION_STDS * ymap.kernel_std
    snaps = [field0]
    for _ in range(n_years):
        snaps.append(ymap(snaps[-1]))
    fronts = np.array([np.nan if (fp := front_position(f, level)) is None else fp
                       for f in snaps])
    usable = len(snaps)
    for n, f in enumerate(snaps):
        if _near_edge(f, level, margin):
            usable = n
            break
    return Trajectory(snaps, fronts, float(level), usable, ymap.regime, ymap.kernel_std)


def empirical_speed(traj: Trajectory, discard_fraction: float = 1.0 / 3.0) -> SpeedEstimate:
    """Speed of the front over the retained years (first third discarded)."""
    first = max(1, int(math.ceil(discard_fraction * traj.n_years)))
    years = np.arange(first, traj.usable_years)
    fronts = traj.front_positions[first:traj.usable_years]
    keep = np.isfinite(fronts)
    years, fronts = years[keep], fronts[keep]
    if years.size < MIN_FRONT_POINTS:
        raise DiagnosticError(
            f"only {years.size} usable front positions after year {first}; "
            f"need {MIN_FRONT_POINTS}")
    raw = linregress(years, fronts)
    n = years.astype(float)
    design = np.column_stack([n, np.log(n), np.ones_like(n)])
    coef, *_ = np.linalg.lstsq(design, fronts, rcond=None)
    resid = fronts - design @ coef
    dof = max(n.size - 3, 1)
    cov = (resid @ resid / dof) * np.linalg.inv(design.T @ design)
    return SpeedEstimate(float(coef[0]), float(math.sqrt(max(cov[0, 0], 0.0))),
                         float(raw.slope), float(raw.stderr), float(coef[1]),
                         int(years.size), first)


def compact_initial(grid: Grid, height: float, half_width: float = 1.0,
                    smoothing: float | None = None) -> Field:
    """``height * 1_[-w, w]`` with tanh-smoothed edges (values stay in ``[0, height]``)."""
    delta = 2.0 * grid.dx if smoothing is None else smoothing
    x = grid.x
    shape = 0.5 * (np.tanh((x + half_width) / delta) - np.tanh((x - half_width) / delta))
    return Field(height * np.clip(shape, 0.0, 1.0), grid)


def aligned_drift(traj: Trajectory, window: float = 20.0) -> np.ndarray:
    """Max-norm change between consecutive profiles aligned at their fronts.

    Profiles are sampled on ``[front - window, front + window / 2]`` in the
    co-moving coordinate; entry ``n`` compares years ``n`` and ``n + 1``.
    """
    grid = traj.snapshots[0].grid
    xi = np.arange(-window, 0.5 * window, grid.dx)
    aligned = []
    for f, fp in zip(traj.snapshots[:traj.usable_years], traj.front_positions):
        if not np.isfinite(fp):
            aligned.append(None)
            continue
        aligned.append(np.interp(fp + xi, grid.x, f.values))
    out = np.full(max(len(aligned) - 1, 0), np.nan)
    for n in range(len(aligned) - 1):
        a, b = aligned[n], aligned[n + 1]
        if a is not None and b is not None:
            out[n] = float(np.abs(b - a).max())
    return out
