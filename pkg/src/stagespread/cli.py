"""Command-line driver: one subcommand per experiment, CSV/JSON/PNG outputs.

Exit codes: 0 success, 2 bad configuration, 3 parameters violate the model
assumptions, 4 a numerical diagnostic failed.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

from . import immature, kinetics, speed, spatial
from .config import load_params
from .errors import ConfigError, DiagnosticError, InvalidParamsError
from .model import ModelParams, validate

COMMANDS = ("validate", "kinetics", "speed", "simulate", "immature",
            "prop-delay", "prop-mortality", "prop-scaling")
SPEED_RTOL = 0.05
DEFAULT_KS = (1.0, 4.0, 16.0, 64.0, 256.0, 1024.0, 1e4)


# ---------------------------------------------------------------------------
# output helpers

def _num(x: Any) -> Any:
    if isinstance(x, (np.floating, np.integer)):
        x = x.item()
    if isinstance(x, float) and not math.isfinite(x):
        return None
    return x


def write_json(path: Path, obj: dict) -> None:
    def clean(o):
        if isinstance(o, dict):
            return {str(k): clean(v) for k, v in o.items()}
        if isinstance(o, (list, tuple, np.ndarray)):
            return [clean(v) for v in o]
        if isinstance(o, (np.bool_,)):
            return bool(o)
        return _num(o)

    path.write_text(json.dumps(clean(obj), indent=2) + "\n", encoding="utf-8")


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else (repr(float(v)) if isinstance(v, (float, np.floating))
                                             else v) for v in row])


def write_dat(path: Path, x: np.ndarray, y: np.ndarray, comment: str = "") -> None:
    """Two-column text readable by gnuplot."""
    np.savetxt(path, np.column_stack([x, y]), fmt="%.17g", header=comment)


class Run:
    def __init__(self, args: argparse.Namespace):
        self.args = args
        self.out = Path(args.out)
        self.out.mkdir(parents=True, exist_ok=True)
        self.plots = not args.no_plots
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        self.files.append(name)
        return self.out / name

    def params(self) -> ModelParams:
        params = load_params(self.args.config, self.args.set or ())
        params.require_valid()
        return params

    def grid(self, half_width: float, n_points: int) -> spatial.Grid:
        hw = self.args.grid_halfwidth or half_width
        n = self.args.grid_n or n_points
        try:
            return spatial.Grid(float(hw), int(n))
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    def plot(self, fn, *args, name: str) -> None:
        if self.plots:
            from . import plotting
            getattr(plotting, fn)(*args, self.path(name))


# ---------------------------------------------------------------------------
# subcommands

def cmd_validate(run: Run) -> int:
    params = load_params(run.args.config, run.args.set or ())
    report = validate(params)
    write_json(run.path("validate.json"), report.to_dict())
    for c in report.checks:
        print(f"{c.name:4s} {'pass' if c.passed else 'FAIL'}  {c.detail}")
    return 0 if report.ok else 3


def cmd_kinetics(run: Run) -> int:
    params = run.params()
    res = kinetics.fixed_point(params)
    n = run.args.years or 100
    z0 = run.args.z0
    if z0 is None:
        z0 = 0.5 * (res.ustar if res.ustar is not None else res.zstar)
    orbit = kinetics.iterate_kinetic(params, z0, n)
    write_csv(run.path("kinetic_orbit.csv"), ["n", "z"], zip(range(n + 1), orbit))
    doc = res.to_dict()
    doc["orbit"] = {"z0": z0, "n": n, "final": orbit[-1],
                    "final_residual": None if res.ustar is None else abs(orbit[-1] - res.ustar)}
    write_json(run.path("kinetics.json"), doc)
    run.plot("kinetic_orbit", orbit, res.ustar, name="kinetic_orbit.png")
    print(f"L = {res.L:.10g}  status = {res.status}  u* = {res.ustar}")
    return 0


def cmd_speed(run: Run) -> int:
    params = run.params()
    res = speed.cstar(params)
    doc = {"L": kinetics.compute_L(params), **res.to_dict()}
    write_json(run.path("speed.json"), doc)
    prof = res.profile
    write_csv(run.path("phi_profile.csv"), ["mu", "phi"], prof)
    write_dat(run.path("phi_profile.dat"), prof[:, 0], prof[:, 1], "mu phi")
    run.plot("speed_profile", prof, res.cstar, res.mustar, name="phi_profile.png")
    print(f"c* = {res.cstar:.10g}  mu* = {res.mustar:.10g}")
    return 0


def _simulate(run: Run, params: ModelParams, years: int, grid: spatial.Grid):
    kin = kinetics.fixed_point(params)
    height = run.args.init_height
    if height is None:
        height = kin.ustar if kin.ustar is not None else kin.zstar
    field0 = spatial.compact_initial(grid, height, run.args.init_halfwidth)
    return spatial.iterate_Q(params, field0, years, run.args.quad_n,
                             level=run.args.front_level), kin


def _dump_trajectory(run: Run, traj: spatial.Trajectory) -> None:
    mat = traj.matrix()
    header = ["x"] + [f"u_{n}" for n in range(traj.n_years + 1)]
    write_csv(run.path("snapshots.csv"), header, mat)
    years = np.arange(traj.n_years + 1)
    write_csv(run.path("fronts.csv"), ["n", "front_x"],
              ([n, None if not np.isfinite(f) else f] for n, f in zip(years, traj.front_positions)))
    ok = np.isfinite(traj.front_positions)
    write_dat(run.path("fronts.dat"), years[ok], traj.front_positions[ok], "n front_x")


def cmd_simulate(run: Run) -> int:
    params = run.params()
    years = run.args.years or 40
    traj, kin = _simulate(run, params, years, run.grid(64.0, 4096))
    _dump_trajectory(run, traj)
    doc: dict[str, Any] = {
        "grid": {"half_width": traj.snapshots[0].grid.half_width,
                 "n_points": traj.snapshots[0].grid.n_points,
                 "dx": traj.snapshots[0].grid.dx},
        "years": years, "n_quad": run.args.quad_n, "front_level": traj.level,
        "regime": traj.regime, "usable_years": traj.usable_years,
        "contaminated": traj.contaminated, "kernel_std": traj.kernel_std,
        "sup_norm": [f.max() for f in traj.snapshots],
    }
    status = 0
    if kin.status == "persistent":
        c = speed.cstar(params).cstar
        try:
            est = spatial.empirical_speed(traj)
        except DiagnosticError as exc:
            doc["error"] = str(exc)
            est, status = None, 4
        doc["cstar"] = c
        if est is not None:
            rel = (est.slope - c) / c
            doc["empirical"] = est.to_dict()
            doc["comparison"] = {"relative_error": rel, "raw_relative_error": (est.raw_slope - c) / c,
                                 "tolerance": SPEED_RTOL, "agrees": abs(rel) <= SPEED_RTOL}
            print(f"empirical speed {est.slope:.6g} (raw {est.raw_slope:.6g}), "
                  f"c* {c:.6g}, relative error {rel:+.3%}")
        drift = spatial.aligned_drift(traj)
        doc["aligned_drift"] = drift
    else:
        sup = np.array(doc["sup_norm"])
        pos = sup > 0
        ratios = sup[1:][pos[:-1]] / sup[:-1][pos[:-1]]
        doc["decay_ratio"] = float(ratios[-1]) if ratios.size else None
        print(f"no persistent state (L = {kin.L:.6g}); final sup-norm {sup[-1]:.3g}")
    write_json(run.path("simulate.json"), doc)
    if run.plots:
        step = max(1, years // 8)
        sel = list(range(0, years + 1, step))
        run.plot("snapshots", traj.snapshots[0].x, [traj.snapshots[n].values for n in sel], sel,
                 name="snapshots.png")
        if "empirical" in doc:
            run.plot("fronts", np.arange(years + 1), traj.front_positions,
                     doc["empirical"]["slope"], doc.get("cstar"), name="fronts.png")
    return status


def cmd_immature(run: Run) -> int:
    params = run.params()
    q = run.args.quad_n
    ub = immature.ubar_periodic(params, n_quad=q)
    vb = immature.vbar(params, ub, n_quad=q)
    t, v = vb.samples(400)
    write_csv(run.path("vbar.csv"), ["t", "vbar"], zip(t, v))
    write_dat(run.path("vbar.dat"), t, v, "t vbar")
    years = run.args.years or 30
    traj, _ = _simulate(run, params, years, run.grid(96.0, 4096))
    wave = immature.v_wave_profile(params, traj, years, n_quad=q)
    snap = traj.snapshots[min(traj.usable_years, years) - 1]
    cons = {"scalar_residual": immature.conservation_residual(params, ub.u0, n_quad=q),
            "front_residual": immature.conservation_residual(params, snap, n_quad=q),
            "front_year": min(traj.usable_years, years) - 1,
            "vbar_closure": vb.closure, "tolerance": 1e-6, "n_quad": q}
    write_json(run.path("conservation.json"), cons)
    write_json(run.path("immature.json"), wave.to_dict())
    header = ["xi"] + [f"V_t{ph:.6g}" for ph in wave.phases]
    write_csv(run.path("immature_profiles.csv"), header,
              np.column_stack([wave.xi, wave.profiles.T]))
    run.plot("periodic_curve", t, v, "Periodic immature density", "vbar", name="vbar.png")
    run.plot("comoving_profiles", wave.xi, wave.profiles, wave.phases,
             name="immature_profiles.png")
    print(f"conservation residual: scalar {cons['scalar_residual']:.3g}, "
          f"front {cons['front_residual']:.3g}")
    print(f"periodic_ok = {wave.periodic_ok}  limits_ok = {wave.limits_ok}")
    return 0 if wave.periodic_ok else 4


def _delay_expectation(params: ModelParams) -> str:
    ta, tb = params.t_alpha, params.t_beta
    if float(params.tau(ta)) < float(params.tau(tb)):
        return "slower"
    s = np.linspace(ta, tb, 33)
    slope = params.tau.derivative(s)
    if slope.max() < 0 and np.ptp(slope) <= 1e-10 * abs(slope.mean()):
        return "faster"
    return "none"


def cmd_prop_delay(run: Run) -> int:
    params = run.params()
    dc = speed.delay_comparison(params)
    expect = _delay_expectation(params)
    diff = dc.difference
    margin = 10.0 * speed.MU_RTOL
    if expect == "slower":
        ok = diff < -margin
        flag = ("consistent: delay rising over the maturation window slows spread" if ok
                else "INCONSISTENT: rising delay did not slow spread")
    elif expect == "faster":
        ok = diff > margin
        flag = ("consistent: linearly falling delay speeds spread" if ok
                else "INCONSISTENT: linearly falling delay did not speed spread")
    else:
        ok, flag = None, "no prediction for this delay shape"
    ta, tb = params.t_alpha, params.t_beta
    row = [dc.tau_av, float(params.tau(ta)), float(params.tau(tb)), dc.with_delay.cstar,
           dc.averaged.cstar, diff, expect, flag]
    header = ["tau_av", "tau_at_t_alpha", "tau_at_t_beta", "cstar_tau", "cstar_tau_av",
              "difference", "expected", "flag"]
    write_csv(run.path("prop_delay.csv"), header, [row])
    write_json(run.path("prop_delay.json"), {
        **dict(zip(header, row)), "consistent": ok, "margin": margin,
        "t_alpha": ta, "t_beta": tb,
        "note": "breeding intensity flat at its window mean in both speeds"})
    run.plot("labelled_bars", ["c*(tau)", "c*(tau_av)"],
             [dc.with_delay.cstar, dc.averaged.cstar], "Periodic delay versus its average",
             "c*", name="prop_delay.png")
    print(f"c*(tau) = {dc.with_delay.cstar:.10g}  c*(tau_av) = {dc.averaged.cstar:.10g}  {flag}")
    return 0


def cmd_prop_mortality(run: Run) -> int:
    params = run.params()
    C = run.args.eta_mean
    allocs = speed.mortality_allocations(params, C)
    base = speed.cstar(params).cstar
    speeds = {k: speed.cstar_with_eta(params, a).cstar for k, a in allocs.items()}
    supports = {"uniform": "[0, T]",
                "juvenile_season": f"[{params.alpha:.6g}, {params.t_beta:.6g}]",
                "adult_only_season": f"[{params.t_beta:.6g}, {params.T + params.alpha:.6g}]"}
    best = min(speeds, key=speeds.get)
    others = [v for k, v in speeds.items() if k != "adult_only_season"]
    strict = speeds["adult_only_season"] < min(others)
    rows = [[k, supports[k], C, v, v - base] for k, v in speeds.items()]
    write_csv(run.path("prop_mortality.csv"),
              ["allocation", "support", "mean", "cstar", "change_from_no_extra"], rows)
    write_json(run.path("prop_mortality.json"), {
        "cstar_without_extra": base, "mean_extra_mortality": C, "cstar": speeds,
        "smallest": best, "adult_only_season_strictly_smallest": strict,
        "flag": ("consistent: mortality outside the juvenile season slows spread most"
                 if strict else "INCONSISTENT: adult-only-season allocation not smallest")})
    run.plot("labelled_bars", list(speeds), list(speeds.values()),
             "Equal-mean extra adult mortality", "c*", name="prop_mortality.png")
    for k, v in speeds.items():
        print(f"{k:18s} c* = {v:.10g}")
    return 0


def cmd_prop_scaling(run: Run) -> int:
    params = run.params()
    ks = run.args.k or list(DEFAULT_KS)
    sweep = speed.scaling_sweep(params, ks)
    limit = speed.h_limit_infimum(params).cstar
    vals = np.array([v for _, v in sweep])
    steps = np.diff(vals)
    monotone = bool(np.all(steps <= 1e-10))
    rel = abs(vals[-1] - limit) / limit
    write_csv(run.path("prop_scaling.csv"), ["k", "cstar_over_sqrt_k"], sweep)
    write_dat(run.path("prop_scaling.dat"), np.array(ks, dtype=float), vals, "k cstar/sqrt(k)")
    write_json(run.path("prop_scaling.json"), {
        "k": ks, "cstar_over_sqrt_k": vals, "limit": limit, "largest_k_relative_gap": rel,
        "non_increasing": monotone, "step_tolerance": 1e-10, "limit_tolerance": 0.01,
        "flag": ("consistent: c*/sqrt(k) decreases to the limit"
                 if monotone and rel <= 0.01 else "INCONSISTENT with the large-diffusion limit")})
    run.plot("scaling_curve", np.array(ks, dtype=float), vals, limit, name="prop_scaling.png")
    for k, v in sweep:
        print(f"k = {k:<8g} c*/sqrt(k) = {v:.10g}")
    print(f"limit = {limit:.10g}")
    return 0


HANDLERS = {
    "validate": cmd_validate, "kinetics": cmd_kinetics, "speed": cmd_speed,
    "simulate": cmd_simulate, "immature": cmd_immature, "prop-delay": cmd_prop_delay,
    "prop-mortality": cmd_prop_mortality, "prop-scaling": cmd_prop_scaling,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="stagespread",
        description="Spread of a stage-structured population with seasonal maturation delay.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON parameter file (default: built-in canonical set)")
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a parameter, e.g. --set tau=0.45 (repeatable)")
    common.add_argument("--grid-n", type=int, help="grid points (power of two)")
    common.add_argument("--grid-halfwidth", type=float, help="domain half-width")
    common.add_argument("--quad-n", type=int, default=64, help="maturation-window nodes")
    common.add_argument("--years", type=int, help="years to simulate or iterate")
    common.add_argument("--front-level", type=float, help="front level (default u*/2)")
    common.add_argument("--no-plots", action="store_true", help="skip PNG figures")
    sub = ap.add_subparsers(dest="command", required=True, metavar="COMMAND")
    helps = {
        "validate": "check model assumptions",
        "kinetics": "threshold number, persistent state and a constant-density orbit",
        "speed": "spreading speed from the variational formula",
        "simulate": "iterate the yearly map and measure the front speed",
        "immature": "periodic immature density, conservation and co-moving profiles",
        "prop-delay": "periodic delay versus its window average",
        "prop-mortality": "equal-mean allocations of extra adult mortality",
        "prop-scaling": "growth of the speed with adult diffusion",
    }
    for name in COMMANDS:
        p = sub.add_parser(name, parents=[common], help=helps[name])
        if name == "kinetics":
            p.add_argument("--z0", type=float, help="orbit start (default u*/2)")
        if name in ("simulate", "immature"):
            p.add_argument("--init-height", type=float, help="initial plateau (default u*)")
            p.add_argument("--init-halfwidth", type=float, default=1.0,
                           help="initial plateau half-width (default 1)")
        if name == "prop-mortality":
            p.add_argument("--eta-mean", type=float, default=0.2,
                           help="time-mean of the extra mortality (default 0.2)")
        if name == "prop-scaling":
            p.add_argument("--k", type=float, action="append",
                           help="diffusion multiplier (repeatable)")
    return ap


def main(argv: Sequence[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.quad_n < 8:
            raise ConfigError("--quad-n must be at least 8")
        run = Run(args)
        return HANDLERS[args.command](run)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except InvalidParamsError as exc:
        print(f"invalid parameters: {exc}", file=sys.stderr)
        if exc.report is not None:
            try:
                write_json(Path(args.out) / "validate.json", exc.report.to_dict())
            except OSError:
                pass
        return 3
    except DiagnosticError as exc:
        print(f"numerical diagnostic failed: {exc}", file=sys.stderr)
        return 4
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
