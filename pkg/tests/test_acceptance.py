"""Acceptance criteria; each test records one pass/fail line for the run summary."""

import time

import numpy as np
import pytest

import oracles
from conftest import ACCEPTANCE_LINES
from stagespread import immature as im
from stagespread import kinetics, spatial as sp, speed
from stagespread.config import load_params, with_threshold

USTAR = 0.7854278963987777


def record(number: int, title: str, ok: bool, detail: str) -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {number:2d}. {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def front_speed(params, grid, years=40):
    traj = sp.iterate_Q(params, sp.compact_initial(grid, USTAR), years)
    return traj, sp.empirical_speed(traj)


def test_01_variational_empirical_agreement(canonical):
    t0 = time.perf_counter()
    c = speed.cstar(canonical).cstar
    grid = sp.Grid(64.0, 4096)
    assert grid.dx <= 0.05 and grid.half_width >= 1.5 * c * 40
    traj, est = front_speed(canonical, grid)
    elapsed = time.perf_counter() - t0
    rel = abs(est.slope - c) / c
    ok = rel < 0.05 and not traj.contaminated and elapsed <= 60
    record(1, "variational vs empirical speed", ok,
           f"c* {c:.6f}, measured {est.slope:.6f} (rel {rel:.2%}), {elapsed:.1f}s")


def test_02_threshold_dichotomy(canonical):
    t0 = time.perf_counter()
    up = with_threshold(canonical, 1.2)
    ustar = kinetics.fixed_point(up).ustar
    orbit = kinetics.iterate_kinetic(up, 0.5 * ustar, 1000)
    hits = np.flatnonzero(np.abs(orbit - ustar) < 1e-10)
    down = with_threshold(canonical, 0.8)
    decay = kinetics.iterate_kinetic(down, 0.5, 300)
    ratios = decay[201:] / decay[200:-1]
    elapsed = time.perf_counter() - t0
    ok = hits.size > 0 and ratios.max() < 0.99 and decay[-1] < 1e-10 and elapsed <= 5
    first = int(hits[0]) if hits.size else None
    record(2, "threshold dichotomy", ok,
           f"L=1.2 within 1e-10 after {first} iterations; L=0.8 ratio {ratios.max():.6f}, "
           f"{elapsed:.2f}s")


def test_03_conservation_identity(canonical):
    scalar = im.conservation_residual(canonical, USTAR, n_quad=64)
    grid = sp.Grid(64.0, 4096)
    traj = sp.iterate_Q(canonical, sp.compact_initial(grid, USTAR), 20)
    front = im.conservation_residual(canonical, traj.snapshots[-1], n_quad=64)
    ok = scalar <= 1e-6 and front <= 1e-6
    record(3, "conservation identity", ok, f"scalar {scalar:.2e}, front {front:.2e}")


@pytest.mark.parametrize("name", ["delay_rising", "delay_falling"])
def test_04_delay_comparison(config_dir, name):
    t0 = time.perf_counter()
    p = load_params(config_dir / f"{name}.json")
    dc = speed.delay_comparison(p)
    elapsed = time.perf_counter() - t0
    margin = 10 * speed.MU_RTOL
    if name == "delay_rising":
        assert float(p.tau(p.t_alpha)) < float(p.tau(p.t_beta))
        ok = dc.difference < -margin
    else:
        ok = dc.difference > margin
    ok = ok and elapsed <= 10
    part = "i" if name == "delay_rising" else "ii"
    record(4, f"periodic delay vs average ({part})", ok,
           f"c*(tau) {dc.with_delay.cstar:.8f}, c*(tau_av) {dc.averaged.cstar:.8f}, "
           f"{elapsed:.2f}s")


def test_05_mortality_allocation(canonical):
    speeds = {k: speed.cstar_with_eta(canonical, a).cstar
              for k, a in speed.mortality_allocations(canonical, 0.2).items()}
    best = speeds["adult_only_season"]
    ok = all(best < v for k, v in speeds.items() if k != "adult_only_season")
    record(5, "mortality outside the juvenile season", ok,
           ", ".join(f"{k} {v:.6f}" for k, v in speeds.items()))


def test_06_diffusion_scaling(canonical):
    ks = [1, 4, 16, 64, 256, 1024, 10_000]
    vals = np.array([speed.cstar_scaling(canonical, k) for k in ks])
    steps = np.diff(vals)
    limit = speed.h_limit_infimum(canonical).cstar
    rel = abs(vals[-1] - limit) / limit
    ok = bool(np.all(steps <= 1e-10)) and rel < 0.01
    record(6, "adult diffusion scaling", ok,
           f"largest step {steps.max():.2e}, k=1e4 {vals[-1]:.7f} vs limit {limit:.7f} "
           f"(rel {rel:.1e})")


def test_07_operator_laws(canonical):
    grid = sp.Grid(32.0, 1024)
    ymap = sp.year_map(canonical, grid)
    assert ymap.regime == "monotone"
    rng = np.random.default_rng(20240607)
    worst = {"order": 0.0, "translation": 0.0, "sublinear": 0.0}
    for _ in range(100):
        a = USTAR * rng.random(grid.n_points)
        b = np.minimum(a + 0.2 * USTAR * rng.random(grid.n_points), USTAR)
        lo, hi = sp.Field(a, grid), sp.Field(b, grid)
        Qlo, Qhi = ymap(lo), ymap(hi)
        worst["order"] = max(worst["order"], float(-(Qhi.values - Qlo.values).min()))
        k = int(rng.integers(-grid.n_points // 2, grid.n_points // 2))
        worst["translation"] = max(worst["translation"], float(
            np.abs(ymap(lo.shifted(k)).values - Qlo.shifted(k).values).max()))
        lam = float(rng.random())
        worst["sublinear"] = max(worst["sublinear"], float(
            -(ymap(sp.Field(lam * a, grid)).values - lam * Qlo.values).min()))
    ok = all(v <= 1e-10 for v in worst.values())
    record(7, "operator laws (100 trials)", ok,
           ", ".join(f"{k} {v:.1e}" for k, v in worst.items()))


@pytest.mark.parametrize("which", ["canonical", "seasonal"])
def test_08_kernel_oracle(request, which):
    params = request.getfixturevalue(which)
    errs = []
    for mu in (0.1, 0.5, 1.0, 2.0):
        ref = oracles.brute_mgf(params, mu)
        errs.append(abs(float(speed.mgf_K(params, mu)) - ref) / ref)
    ok = max(errs) <= 1e-6
    record(8, f"kernel mgf vs brute force ({which})", ok, f"max rel error {max(errs):.1e}")


def test_09_immature_wave(canonical):
    grid = sp.Grid(96.0, 4096)
    traj = sp.iterate_Q(canonical, sp.compact_initial(grid, USTAR), 30)
    wave = im.v_wave_profile(canonical, traj, 30)
    ok = wave.limits_ok and wave.periodic_ok
    record(9, "immature wave limits", ok,
           f"tail {wave.right_tail.max():.1e}, plateau err {wave.plateau_error.max():.2%}, "
           f"drift {wave.drift.max():.2%}")


def test_10_semigroup_and_grid(canonical):
    grid = sp.Grid(64.0, 4096)
    rng = np.random.default_rng(11)
    f = sp.Field(rng.random(grid.n_points), grid)
    two = sp.gaussian_step(sp.gaussian_step(f, 0.4, 0.9), 1.1, 0.7)
    one = sp.gaussian_step(f, 1.5, 0.63)
    comp = float(np.abs(two.values - one.values).max())
    _, coarse = front_speed(canonical, grid)
    _, fine = front_speed(canonical, sp.Grid(64.0, 8192))
    change = abs(fine.slope - coarse.slope) / coarse.slope
    ok = comp <= 1e-10 and change < 0.01
    record(10, "semigroup and grid convergence", ok,
           f"composition {comp:.1e}, dx-halving speed change {change:.1e}")
