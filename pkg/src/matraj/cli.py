"""Command-line front end: solve pipelines, experiment sweeps, validation.

Subcommands:
  solve     run one pipeline (ideal / ssmt / static) on a scenario config
  sweep     grid an axis (L, V_max, N, K, aoa_error, x1_curve) to CSV
  validate  quick numerical self-checks on a scenario

Sweep points run in a bounded process pool (MATRAJ_WORKERS, default 1);
rows are sorted before writing so output is deterministic for a fixed
(config, seed).  With --plot a matplotlib figure is rendered next to the
CSV / result file.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np
import yaml

from .baseline import static_optimal
from .channel import channel_vector
from .dual import run_algorithm1
from .mmse import mmse_sinr, rate_vector
from .scenario import (Scenario, ScenarioError, apply_aoa_error,
                       load_scenario, scenario_from_dict, scenario_to_dict)
from .sca import build_surrogate, random_pattern, surrogate_values
from .ssmt import plan_ssmt
from .timeshare import allocate_time

MODES = ("ideal", "ssmt", "static")
AXES = ("L", "V_max", "N", "K", "aoa_error", "x1_curve")
CSV_COLUMNS = ["axis_value", "mode", "min_rate", "per_user_rates",
               "n_patterns", "t_swi", "wall_ms"]
WORKERS_ENV = "MATRAJ_WORKERS"

# §V azimuth/elevation pools used when sweeping the number of users
K_SWEEP_THETA = [1.41, 1.14, 1.81, 0.18, 3.12, 2.91, 0.73, 1.09, 2.98]
K_SWEEP_PHI = [0.72, 0.69, 1.65, 2.23, 2.28, 0.41, 1.62, 0.59, 0.38]


def _fmt(x: float) -> str:
    return f"{float(x):.10g}"


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(
        json.dumps(cfg, sort_keys=True, default=float).encode()).hexdigest()[:16]


# ---------------------------------------------------------------------------
# pipelines
# ---------------------------------------------------------------------------

def solve_mode(scn: Scenario, mode: str, eval_scn: Scenario | None = None) -> dict:
    """Run one pipeline; optionally evaluate rates on a different scenario.

    eval_scn models planning under erroneous angle estimates: patterns and
    durations are chosen on `scn`, achieved rates computed on `eval_scn`.
    """
    ev = eval_scn or scn
    t0 = time.perf_counter()
    if mode == "static":
        x, _ = static_optimal(scn)
        per_user = rate_vector(ev, x)
        out = {"patterns": [x], "mu": None, "durations": [scn.horizon],
               "t_swi": 0.0, "plan_mode": "static"}
    elif mode == "ideal":
        ps = run_algorithm1(scn)
        rates = np.array([rate_vector(ev, x) for x in ps.patterns])
        alloc = allocate_time(rates, scn.horizon, np.zeros(scn.num_users),
                              scn.horizon)
        per_user = (rates.T @ alloc.durations) / scn.horizon
        out = {"patterns": ps.patterns, "mu": ps.mu,
               "durations": alloc.durations, "t_swi": 0.0, "plan_mode": "ideal"}
    elif mode == "ssmt":
        ps = run_algorithm1(scn)
        plan = plan_ssmt(scn, ps)
        if eval_scn is None:
            per_user = _plan_per_user(scn, plan)
        else:
            per_user = _plan_per_user(ev, plan)
        out = {"patterns": plan.patterns, "mu": ps.mu,
               "durations": plan.stay_durations, "t_swi": plan.t_swi,
               "plan_mode": plan.mode}
    else:
        raise ValueError(f"unknown mode {mode!r}")
    out.update({
        "mode": mode,
        "per_user_rates": np.asarray(per_user, dtype=float),
        "min_rate": float(np.min(per_user)),
        "wall_ms": (time.perf_counter() - t0) * 1e3,
    })
    return out


def _plan_per_user(scn: Scenario, plan) -> np.ndarray:
    from .ssmt import switching_rates  # local import avoids cycle at module load
    rates = np.array([rate_vector(scn, x) for x in plan.patterns])
    offsets = np.zeros(scn.num_users)
    for seg in plan.segments:
        offsets += switching_rates(scn, seg)
    return (rates.T @ np.asarray(plan.stay_durations) + offsets) / scn.horizon


# ---------------------------------------------------------------------------
# sweep machinery
# ---------------------------------------------------------------------------

def _with_axis(cfg: dict, axis: str, value: float) -> dict:
    cfg = json.loads(json.dumps(cfg, default=float))  # deep copy
    if axis == "L":
        cfg["geometry"]["L"] = float(value)
    elif axis == "V_max":
        cfg["geometry"]["V_max"] = float(value)
    elif axis == "N":
        cfg["geometry"]["N"] = int(round(value))
    elif axis == "K":
        k = int(round(value))
        if not 1 <= k <= len(K_SWEEP_THETA):
            raise ValueError(f"K must be in [1, {len(K_SWEEP_THETA)}]")
        base = cfg["users"][0]
        cfg["users"] = [dict(base, theta=K_SWEEP_THETA[i], phi=K_SWEEP_PHI[i])
                        for i in range(k)]
    elif axis in ("aoa_error", "x1_curve"):
        pass  # handled by the caller
    else:
        raise ValueError(f"unknown axis {axis!r}")
    return cfg


def _sweep_point(args: tuple) -> list:
    cfg, axis, value, seed = args
    cfg = _with_axis(cfg, axis, value)
    if seed is not None:
        cfg.setdefault("solver", {})["rng_seed"] = int(seed)
    scn = scenario_from_dict(cfg)
    rows = []
    if axis == "x1_curve":
        x = np.array([float(value), scn.geometry.span])
        r = rate_vector(scn, x)
        rows.append([_fmt(value), "x1_curve", _fmt(r.min()),
                     " ".join(_fmt(v) for v in r), "1", "0", "0"])
        return rows
    eval_scn = None
    if axis == "aoa_error":
        eval_scn = scn                      # true angles
        scn = apply_aoa_error(scn, float(value))  # planner sees shifted angles
    for mode in MODES:
        res = solve_mode(scn, mode, eval_scn=eval_scn)
        rows.append([
            _fmt(value), mode, _fmt(res["min_rate"]),
            " ".join(_fmt(v) for v in res["per_user_rates"]),
            str(len(res["patterns"])), _fmt(res["t_swi"]),
            f"{res['wall_ms']:.1f}",
        ])
    return rows


def run_sweep(cfg: dict, axis: str, values: list, seed: int | None,
              workers: int) -> list:
    tasks = [(cfg, axis, v, seed) for v in values]
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_sweep_point, tasks))
    else:
        chunks = [_sweep_point(t) for t in tasks]
    rows = [row for chunk in chunks for row in chunk]
    rows.sort(key=lambda r: (float(r[0]), r[1]))
    return rows


# ---------------------------------------------------------------------------
# plotting (optional; kept out of the solver path)
# ---------------------------------------------------------------------------

def _render_sweep_plot(rows: list, axis: str, path: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    if axis == "x1_curve":
        xs = [float(r[0]) for r in rows]
        per_user = np.array([[float(v) for v in r[3].split()] for r in rows])
        for k in range(per_user.shape[1]):
            ax.plot(xs, per_user[:, k], label=f"user {k + 1}")
        ax.set_xlabel("first-track coordinate (wavelengths)")
        ax.set_ylabel("achievable rate (bits/s/Hz)")
    else:
        for mode in MODES:
            pts = [(float(r[0]), float(r[2])) for r in rows if r[1] == mode]
            if pts:
                ax.plot(*zip(*pts), marker="o", label=mode)
        ax.set_xlabel(axis)
        ax.set_ylabel("min average rate (bits/s/Hz)")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def _render_solve_plot(res: dict, horizon: float, path: str) -> None:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    t = 0.0
    for x, dur in zip(res["patterns"], res["durations"]):
        for m, xm in enumerate(np.asarray(x)):
            ax.hlines(xm, t, t + dur, lw=2,
                      color=f"C{m}", label=f"track {m + 1}" if t == 0.0 else None)
        t += float(dur)
    ax.set_xlim(0, horizon)
    ax.set_xlabel("time (s)")
    ax.set_ylabel("track coordinate (wavelengths)")
    ax.legend()
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


# ---------------------------------------------------------------------------
# validate: quick numerical self-checks
# ---------------------------------------------------------------------------

def run_validate(scn: Scenario, trials: int = 200) -> list:
    rng = np.random.default_rng(scn.solver.rng_seed)
    geom = scn.geometry
    checks = []

    worst = 0.0
    for _ in range(trials):
        x = random_pattern(geom, rng)
        k = int(rng.integers(scn.num_users))
        h = channel_vector(scn, k, x)
        err = abs(np.vdot(h, h).real - scn.betas[k] * geom.num_elements)
        worst = max(worst, err / (scn.betas[k] * geom.num_elements))
    checks.append(("channel norm ||h||^2 = beta*M*N", worst, 1e-12))

    worst = 0.0
    for _ in range(trials):
        x = random_pattern(geom, rng)
        coeffs = build_surrogate(scn, x)
        s = surrogate_values(coeffs, x)
        g = np.array([mmse_sinr(scn, k, x) / scn.norm_powers[k]
                      for k in range(scn.num_users)])
        worst = max(worst, float(np.max(np.abs(s - g) / (1.0 + np.abs(g)))))
    checks.append(("surrogate tight at anchor", worst, 1e-8))

    worst = 0.0
    for _ in range(trials):
        xq = random_pattern(geom, rng)
        x = random_pattern(geom, rng)
        coeffs = build_surrogate(scn, xq)
        s = surrogate_values(coeffs, x)
        g = np.array([mmse_sinr(scn, k, x) / scn.norm_powers[k]
                      for k in range(scn.num_users)])
        worst = max(worst, float(np.max(s - g)))
    checks.append(("surrogate is a global lower bound", worst, 1e-8))

    return [(name, val, tol, val <= tol) for name, val, tol in checks]


# ---------------------------------------------------------------------------
# argument parsing / entry point
# ---------------------------------------------------------------------------

def _parse_range(text: str) -> list:
    """'a:b:step' inclusive grid, or a comma-separated list of values."""
    if ":" in text:
        parts = [float(p) for p in text.split(":")]
        if len(parts) != 3:
            raise ValueError("range must be start:stop:step or v1,v2,...")
        start, stop, step = parts
        if step <= 0:
            raise ValueError("range step must be > 0")
        n = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [start + i * step for i in range(n)]
    return [float(p) for p in text.split(",") if p.strip()]


def _workers() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def main(argv: list | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="matraj",
        description="fairness-optimal movable-antenna deployment and trajectory")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run one pipeline on a scenario")
    p_solve.add_argument("--scenario", required=True)
    p_solve.add_argument("--mode", choices=MODES, default="ideal")
    p_solve.add_argument("--seed", type=int, default=None)
    p_solve.add_argument("--out", default=None)
    p_solve.add_argument("--plot", action="store_true",
                         help="render the stay schedule to PNG next to the result")

    p_sweep = sub.add_parser("sweep", help="grid an axis to CSV")
    p_sweep.add_argument("--scenario", required=True)
    p_sweep.add_argument("--axis", choices=AXES, required=True)
    p_sweep.add_argument("--range", required=True,
                         help="start:stop:step or comma-separated values")
    p_sweep.add_argument("--seed", type=int, default=None)
    p_sweep.add_argument("--out", default=None)
    p_sweep.add_argument("--plot", action="store_true",
                         help="render the sweep curves to PNG next to the CSV")

    p_val = sub.add_parser("validate", help="numerical self-checks")
    p_val.add_argument("--scenario", required=True)
    p_val.add_argument("--trials", type=int, default=200)

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except (ScenarioError, ValueError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    scn = load_scenario(args.scenario)
    cfg = scenario_to_dict(scn)

    if args.command == "solve":
        if args.seed is not None:
            solver = dataclasses.replace(scn.solver, rng_seed=args.seed)
            scn = dataclasses.replace(scn, solver=solver)
            cfg = scenario_to_dict(scn)
        res = solve_mode(scn, args.mode)
        record = {
            "mode": args.mode,
            "min_rate": res["min_rate"],
            "per_user_rates": [float(v) for v in res["per_user_rates"]],
            "patterns": [[float(v) for v in x] for x in res["patterns"]],
            "mu": None if res["mu"] is None else [float(v) for v in res["mu"]],
            "durations": [float(v) for v in res["durations"]],
            "t_swi": float(res["t_swi"]),
            "plan_mode": res["plan_mode"],
            "wall_ms": round(res["wall_ms"], 1),
            "seed": scn.solver.rng_seed,
            "config_hash": config_hash(cfg),
        }
        out = args.out or f"solve_{args.mode}.yaml"
        with open(out, "w") as f:
            yaml.safe_dump(record, f, sort_keys=False)
        if args.plot:
            _render_solve_plot(res, scn.horizon, os.path.splitext(out)[0] + ".png")
        print(f"min average rate: {record['min_rate']:.4f} bits/s/Hz "
              f"({args.mode}; details in {out})")
        return 0

    if args.command == "sweep":
        if args.axis == "x1_curve" and scn.geometry.num_tracks != 2:
            raise ValueError("x1_curve sweeps require a 2-track geometry")
        values = _parse_range(args.range)
        rows = run_sweep(cfg, args.axis, values, args.seed, _workers())
        out = args.out or f"sweep_{args.axis}.csv"
        with open(out, "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(CSV_COLUMNS)
            w.writerows(rows)
        if args.plot:
            _render_sweep_plot(rows, args.axis, os.path.splitext(out)[0] + ".png")
        print(f"wrote {len(rows)} rows to {out}")
        return 0

    if args.command == "validate":
        results = run_validate(scn, trials=args.trials)
        failed = 0
        for name, val, tol, ok in results:
            print(f"{'PASS' if ok else 'FAIL'}  {name}: worst {val:.3g} "
                  f"(tolerance {tol:g})")
            failed += not ok
        return 1 if failed else 0

    raise ValueError(f"unknown command {args.command!r}")


if __name__ == "__main__":
    sys.exit(main())
