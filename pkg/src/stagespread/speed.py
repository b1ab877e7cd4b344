"""Spreading speed from the exponential-moment (variational) formula.

The linearised yearly kernel ``K`` is a Gaussian mixture, so its two-sided
moment generating function is explicit:

    M(mu) = exp(int_0^T [mu^2 D_M - d_M])
            + int_{t_a}^{t_b} dR0(s) exp((int_s^T + int_0^{s-tau(s)}) [mu^2 D_M - d_M]
                                         + mu^2 sigma(s)) ds,

and ``c* = inf_{mu > 0} ln M(mu) / mu``.  Everything is evaluated in log
space so that large ``mu`` never overflows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Iterable

import numpy as np
from scipy.optimize import minimize_scalar
from scipy.special import logsumexp

from .errors import DiagnosticError, SpeedUndefinedError
from .kinetics import compute_L
from .model import ModelParams, epsilon_sigma, recruitment_factor
from .periodic import Constant, PeriodicFn, quartic_bump

__all__ = [
    "SpeedResult",
    "GrowthSpectrum",
    "spectrum",
    "mgf_K",
    "log_mgf",
    "phi",
    "cstar",
    "minimize_rate",
    "DelayComparison",
    "tau_average",
    "cstar_tau_average",
    "delay_comparison",
    "EtaAllocation",
    "mortality_allocations",
    "cstar_with_eta",
    "cstar_with_extra_diffusion",
    "cstar_scaling",
    "h_limit",
    "h_limit_infimum",
    "MU_SEED",
    "MAX_DOUBLINGS",
    "MU_RTOL",
]

MU_SEED = 1e-3
MAX_DOUBLINGS = 60
MU_RTOL = 1e-8


@dataclass(frozen=True)
class SpeedResult:
    cstar: float
    mustar: float
    bracket: tuple[float, float]
    profile: np.ndarray = field(repr=False)  # columns (mu, phi)

    def to_dict(self) -> dict:
        return {"cstar": self.cstar, "mustar": self.mustar,
                "bracket": list(self.bracket),
                "tolerances": {"mu_rtol": MU_RTOL, "mu_seed": MU_SEED,
                               "max_doublings": MAX_DOUBLINGS}}


@dataclass(frozen=True)
class GrowthSpectrum:
    """Ingredients of ``ln M(mu)``, with recruitment tabulated on quadrature nodes.

    ``log_mgf(mu) = logaddexp(mu^2 D_year - d_year,
                              logsumexp(log_weight + mu^2 (spread_D + sigma) - spread_d))``
    """

    D_year: float
    d_year: float
    log_weight: np.ndarray
    spread_D: np.ndarray
    spread_d: np.ndarray
    sigma: np.ndarray

    def log_mgf(self, mu):
        mu2 = np.square(np.asarray(mu, dtype=float))
        head = mu2 * self.D_year - self.d_year
        expo = (self.log_weight
                + np.multiply.outer(mu2, self.spread_D + self.sigma) - self.spread_d)
        if self.log_weight.size == 0:
            return head
        return np.logaddexp(head, logsumexp(expo, axis=-1))

    def without_juvenile_spread(self) -> GrowthSpectrum:
        return GrowthSpectrum(self.D_year, self.d_year, self.log_weight,
                              self.spread_D, self.spread_d, np.zeros_like(self.sigma))


def _log(x: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore"):
        return np.log(x)


def _spectrum_from(params: ModelParams, s: np.ndarray, w: np.ndarray,
                   delay: np.ndarray, delay_slope: np.ndarray,
                   birth: np.ndarray) -> GrowthSpectrum:
    born = s - delay
    eps = np.exp(-params.d_I.integral(born, s))
    sigma = params.D_I.integral(born, s)
    weight = w * (1.0 - delay_slope) * eps * birth * params.h.hprime0
    T = params.T
    return GrowthSpectrum(
        D_year=float(params.D_M.integral(0.0, T)),
        d_year=float(params.d_M.integral(0.0, T)),
        log_weight=_log(weight),
        spread_D=params.D_M.integral(s, T) + params.D_M.integral(0.0, born),
        spread_d=params.d_M.integral(s, T) + params.d_M.integral(0.0, born),
        sigma=sigma,
    )


@lru_cache(maxsize=128)
def spectrum(params: ModelParams) -> GrowthSpectrum:
    params.require_valid()
    rule = params.rule
    s = rule.nodes
    tau = params.tau(s)
    return _spectrum_from(params, s, rule.weights, tau, params.tau.derivative(s),
                          params.p(s - tau))


def log_mgf(params: ModelParams, mu):
    return spectrum(params).log_mgf(mu)


def mgf_K(params: ModelParams, mu):
    """``int e^{mu y} K(y) dy`` for the linearised yearly kernel ``K``."""
    if np.any(np.asarray(mu) < 0):
        raise ValueError("mu must be nonnegative")
    return np.exp(log_mgf(params, mu))


def _require_growth(params: ModelParams) -> None:
    L = compute_L(params)
    if not L > 1.0:
        raise SpeedUndefinedError(f"no spreading speed: threshold number L = {L:.6g} <= 1")


def phi(params: ModelParams, mu):
    """Speed ``ln M(mu) / mu`` of a linear exponential front of decay rate ``mu``."""
    _require_growth(params)
    mu = np.asarray(mu, dtype=float)
    if np.any(mu <= 0):
        raise ValueError("mu must be positive")
    return log_mgf(params, mu) / mu


def minimize_rate(fn: Callable[[float], float], seed: float = MU_SEED,
                  max_doublings: int = MAX_DOUBLINGS) -> SpeedResult:
    """Minimise a unimodal speed profile over ``mu > 0``.

    Doubles ``mu`` from ``seed`` until the profile rises again, then runs a
    golden-section search on the bracketing triple.
    """
    mus = [seed, 2.0 * seed]
    vals = [fn(mus[0]), fn(mus[1])]
    if not vals[1] < vals[0]:
        raise DiagnosticError(f"speed profile not decreasing at mu = {seed:g}")
    k = 1
    while vals[-1] < vals[-2]:
        k += 1
        if k > max_doublings:
            raise DiagnosticError(f"no minimiser bracketed within {max_doublings} doublings")
        mus.append(seed * 2.0 ** k)
        vals.append(fn(mus[-1]))
    a, b, c = mus[-3:]
    res = minimize_scalar(fn, bracket=(a, b, c), method="golden",
                          options={"xtol": MU_RTOL})
    mu_star = float(res.x)
    dense = np.linspace(a, c, 41)
    samples = sorted(set(mus) | set(dense.tolist()) | {mu_star})
    profile = np.array([(m, fn(m)) for m in samples])
    c_star = float(fn(mu_star))
    if c_star > profile[:, 1].min():
        i = int(np.argmin(profile[:, 1]))
        mu_star, c_star = float(profile[i, 0]), float(profile[i, 1])
    return SpeedResult(c_star, mu_star, (a, c), profile)


def _speed_of(spec: GrowthSpectrum) -> SpeedResult:
    return minimize_rate(lambda m: float(spec.log_mgf(m)) / m)


def cstar(params: ModelParams) -> SpeedResult:
    """Spreading speed (length per year) and the minimising decay rate."""
    _require_growth(params)
    return _speed_of(spectrum(params))


# ---------------------------------------------------------------------------
# periodic delay versus its average

@dataclass(frozen=True)
class DelayComparison:
    tau_av: float
    with_delay: SpeedResult
    averaged: SpeedResult
    delay_rising: bool  # tau(t_alpha) < tau(t_beta)

    @property
    def difference(self) -> float:
        return self.with_delay.cstar - self.averaged.cstar


def tau_average(params: ModelParams) -> float:
    ta, tb = params.t_alpha, params.t_beta
    return float(params.tau.integral(ta, tb)) / (tb - ta)


def _flat_birth_spectra(params: ModelParams) -> tuple[GrowthSpectrum, GrowthSpectrum, float]:
    if not (params.D_M.is_constant and params.D_I.is_constant):
        raise ValueError("delay averaging needs constant diffusion rates")
    params.require_valid()
    rule = params.rule
    s, w = rule.nodes, rule.weights
    # Breeding intensity taken flat at its window mean in both variants.
    p_flat = float(params.p.integral(params.alpha, params.beta)) / (params.beta - params.alpha)
    flat = np.full_like(s, p_flat)
    tau_av = tau_average(params)
    varying = _spectrum_from(params, s, w, params.tau(s), params.tau.derivative(s), flat)
    averaged = _spectrum_from(params, s, w, np.full_like(s, tau_av), np.zeros_like(s), flat)
    return varying, averaged, tau_av


def cstar_tau_average(params: ModelParams) -> SpeedResult:
    """Speed with the delay replaced by its mean over the maturation window.

    The window itself is held fixed and breeding intensity is flat, so only
    the factor ``(1 - tau') exp(l(mu) tau)`` of the recruitment integrand
    changes, where ``l(mu) = (d_M - d_I) + mu^2 (D_I - D_M)``.
    """
    _require_growth(params)
    return _speed_of(_flat_birth_spectra(params)[1])


def delay_comparison(params: ModelParams) -> DelayComparison:
    """Speeds for the periodic delay and for its window average, side by side."""
    _require_growth(params)
    varying, averaged, tau_av = _flat_birth_spectra(params)
    rising = float(params.tau(params.t_alpha)) < float(params.tau(params.t_beta))
    return DelayComparison(tau_av, _speed_of(varying), _speed_of(averaged), rising)


# ---------------------------------------------------------------------------
# allocating extra adult mortality over the year

@dataclass(frozen=True)
class EtaAllocation:
    eta: PeriodicFn
    C: float
    label: str = ""

    def __post_init__(self):
        mean = self.eta.mean()
        if abs(mean - self.C) > 1e-10 * max(1.0, abs(self.C)):
            raise ValueError(f"allocation mean {mean:.12g} differs from C = {self.C:g}")
        t = np.linspace(0.0, self.eta.period, 10_000, endpoint=False)
        if self.eta(t).min() < -1e-14:
            raise ValueError("extra mortality must be nonnegative")

    @classmethod
    def uniform(cls, C: float, T: float = 1.0) -> EtaAllocation:
        return cls(Constant(C, T), C, "uniform")

    @classmethod
    def concentrated(cls, C: float, start: float, end: float, T: float = 1.0,
                     label: str = "") -> EtaAllocation:
        """Quartic bump on ``[start, end]`` (may wrap past ``T``) with mean ``C``."""
        amplitude = 15.0 * C * T / (8.0 * (end - start))
        return cls(quartic_bump(start, end, amplitude, T), C, label)


def mortality_allocations(params: ModelParams, C: float) -> dict[str, EtaAllocation]:
    """Equal-mean allocations: uniform, inside ``[alpha, t_beta]``, outside it."""
    T, a, tb = params.T, params.alpha, params.t_beta
    return {
        "uniform": EtaAllocation.uniform(C, T),
        "juvenile_season": EtaAllocation.concentrated(C, a, tb, T, "juvenile_season"),
        "adult_only_season": EtaAllocation.concentrated(C, tb, T + a, T, "adult_only_season"),
    }


def cstar_with_eta(params: ModelParams, alloc: EtaAllocation) -> SpeedResult:
    """Speed when adult mortality becomes ``d_M + eta``."""
    return cstar(params.replace(d_M=params.d_M + alloc.eta))


def cstar_with_extra_diffusion(params: ModelParams, alloc: EtaAllocation) -> SpeedResult:
    """Speed when adult diffusion becomes ``D_M + eta`` (no direction asserted)."""
    return cstar(params.replace(D_M=params.D_M + alloc.eta))


# ---------------------------------------------------------------------------
# large adult diffusion

def cstar_scaling(params: ModelParams, k: float) -> float:
    """``c*(k) / sqrt(k)`` for adult diffusion ``k D(t)``, ``D = params.D_M``."""
    if k <= 0:
        raise ValueError("k must be positive")
    return cstar(params.replace(D_M=params.D_M * k)).cstar / math.sqrt(k)


def h_limit(params: ModelParams, nu):
    """Limit profile ``H(nu, +inf)``: the speed formula without juvenile spread."""
    nu = np.asarray(nu, dtype=float)
    return spectrum(params).without_juvenile_spread().log_mgf(nu) / nu


def h_limit_infimum(params: ModelParams) -> SpeedResult:
    """``inf_nu H(nu, +inf)``, the limit of ``c*(k) / sqrt(k)``."""
    _require_growth(params)
    return _speed_of(spectrum(params).without_juvenile_spread())


def scaling_sweep(params: ModelParams, ks: Iterable[float]) -> list[tuple[float, float]]:
    return [(float(k), cstar_scaling(params, k)) for k in ks]
