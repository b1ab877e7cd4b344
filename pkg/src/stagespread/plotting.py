"""PNG figures for the CLI report path (headless, no pyplot state)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import numpy as np
from matplotlib.figure import Figure


def _save(fig: Figure, path: str | Path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    return path


def _axes(title: str, xlabel: str, ylabel: str):
    fig = Figure(figsize=(6.4, 4.0))
    ax = fig.add_subplot()
    ax.set_title(title)
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(alpha=0.3)
    return fig, ax


def speed_profile(profile: np.ndarray, cstar: float, mustar: float, path) -> Path:
    fig, ax = _axes("Speed of exponential fronts", "decay rate mu", "ln M(mu) / mu")
    ax.plot(profile[:, 0], profile[:, 1], ".-", lw=1)
    ax.axhline(cstar, color="k", ls="--", lw=0.8, label=f"c* = {cstar:.6g}")
    ax.axvline(mustar, color="k", ls=":", lw=0.8)
    ax.set_xscale("log")
    ax.legend()
    return _save(fig, path)


def kinetic_orbit(orbit: np.ndarray, ustar: float | None, path) -> Path:
    fig, ax = _axes("Spatially constant orbit", "year n", "adult density")
    ax.plot(np.arange(orbit.size), orbit, ".-", lw=1)
    if ustar is not None:
        ax.axhline(ustar, color="k", ls="--", lw=0.8, label=f"u* = {ustar:.6g}")
        ax.legend()
    return _save(fig, path)


def snapshots(x: np.ndarray, fields: Sequence[np.ndarray], years: Sequence[int],
              path) -> Path:
    fig, ax = _axes("Adult density at the start of each year", "x", "u")
    for n, f in zip(years, fields):
        ax.plot(x, f, lw=0.8, label=f"n = {n}")
    if len(years) <= 10:
        ax.legend(fontsize="small")
    return _save(fig, path)


def fronts(years: np.ndarray, positions: np.ndarray, slope: float, cstar: float | None,
           path) -> Path:
    fig, ax = _axes("Front position", "year n", "front x")
    ax.plot(years, positions, "o", ms=3, label=f"measured (speed {slope:.4g})")
    if cstar is not None:
        ok = np.isfinite(positions)
        if ok.any():
            n0 = years[ok][-1]
            ax.plot(years, positions[ok][-1] + cstar * (years - n0), "--", lw=0.8,
                    label=f"slope c* = {cstar:.4g}")
    ax.legend()
    return _save(fig, path)


def periodic_curve(t: np.ndarray, values: np.ndarray, title: str, ylabel: str,
                   path) -> Path:
    fig, ax = _axes(title, "t", ylabel)
    ax.plot(t, values, lw=1)
    return _save(fig, path)


def comoving_profiles(xi: np.ndarray, profiles: np.ndarray, phases: Sequence[float],
                      path) -> Path:
    fig, ax = _axes("Immature density, co-moving frame", "xi = x - front", "v")
    for ph, row in zip(phases, profiles):
        ax.plot(xi, row, lw=1, label=f"t = {ph:.3g}")
    ax.legend(fontsize="small")
    return _save(fig, path)


def labelled_bars(labels: Sequence[str], values: Sequence[float], title: str,
                  ylabel: str, path) -> Path:
    fig, ax = _axes(title, "", ylabel)
    ax.bar(range(len(values)), values)
    ax.set_xticks(range(len(values)), labels, rotation=15)
    lo = min(values)
    ax.set_ylim(lo - 0.1 * (max(values) - lo + 1e-12) - 1e-9, None)
    return _save(fig, path)


def scaling_curve(ks: np.ndarray, ratios: np.ndarray, limit: float, path) -> Path:
    fig, ax = _axes("Speed growth with adult diffusion", "k", "c*(k) / sqrt(k)")
    ax.semilogx(ks, ratios, "o-", lw=1)
    ax.axhline(limit, color="k", ls="--", lw=0.8, label=f"limit {limit:.6g}")
    ax.legend()
    return _save(fig, path)
