"""Batch command-line front end.

Subcommands map one-to-one onto the experiment families::

    multileg simulate --config run.ini --out results/
    multileg floquet  --config run.ini --out results/ --jobs 4
    multileg diagram  --config run.ini --out results/ --jobs 8
    multileg turning  --config run.ini --out results/
    multileg compare  --config run.ini --out results/ --jobs 10

Each run writes CSV files whose header block records the package version
and the full resolved configuration, so any file can be reproduced from
its own metadata.  Exit codes: 0 on success, 1 when any run in the batch
aborted (blow-up or solver failure; per-row status stays in the CSV),
2 on configuration errors.
"""
from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from .bifurcation import sweep_diagram, variation_study, simulate_walk
from .config import (ConfigError, RunConfig, build_gait, build_params,
                     build_turning_task, load_config)
from .floquet import critical_k1, find_bracket, sweep_exponents, critical_surface
from .outputs import meta_block, write_csv
from .turning import run_turning, strategy_comparison


def _deg(x: float) -> float:
    return math.degrees(x)


def cmd_simulate(cfg: RunConfig, out: Path, jobs: int,
                 seed: int | None) -> int:
    """Single walk from the perturbed straight start; trace CSV."""
    p, g = build_params(cfg), build_gait(cfg)
    s = cfg.values["simulate"]
    run_seed = s["seed"] if seed is None else seed
    tr = simulate_walk(p, g, T_sim=s["t_sim_s"], dt=s["dt_s"],
                       dt_out=s["dt_out_s"],
                       perturb=math.radians(s["perturb_deg"]),
                       perturb_joint=s["perturb_joint"], seed=run_seed)
    cols = ["t", "x", "y", "theta0"]
    cols += [f"th{j}_deg" for j in range(1, p.n_modules)]
    rows = []
    for i, t in enumerate(tr.times):
        row = [t, tr.states[i, 0], tr.states[i, 1], tr.states[i, 2]]
        row += [_deg(a) for a in tr.states[i, 3:2 + p.n_modules]]
        rows.append(row)
    extras = {"status": tr.status, "t_end_s": tr.t_end}
    write_csv(out / "trace.csv",
              meta_block("simulate", cfg, extras, run_seed, jobs), cols, rows)
    return 1 if tr.aborted else 0


def cmd_floquet(cfg: RunConfig, out: Path, jobs: int,
                seed: int | None) -> int:
    """Exponent locus over a stiffness sweep, or a variation study."""
    p, g = build_params(cfg), build_gait(cfg)
    f = cfg.values["floquet"]
    if f["vary"]:
        if not f["vary_values"]:
            raise ConfigError("floquet.vary_values must be nonempty when "
                              "floquet.vary is set")
        rows = critical_surface(p, g, f["vary"], f["vary_values"],
                                dt=f["dt_s"], h_fd=f["h_fd"])
        cols = ["vary", "value", "k_c_nmm_deg", "crossing_type", "error"]
        table = [[r[c] for c in cols] for r in rows]
        write_csv(out / "floquet_surface.csv",
                  meta_block("floquet", cfg, None, seed, jobs), cols, table)
        return 1 if any(r["error"] for r in rows) else 0
    if not f["k1_list_nmm_deg"]:
        raise ConfigError("floquet.k1_list_nmm_deg must be nonempty")
    rows = sweep_exponents(p, g, f["k1_list_nmm_deg"], uniform=f["uniform"],
                           dt=f["dt_s"], h_fd=f["h_fd"], jobs=jobs)
    cols = ["k1_Nmm_deg", "inv_k1", "re_leading", "im_leading",
            "crossing_type", "n_zero"]
    write_csv(out / "floquet_sweep.csv",
              meta_block("floquet", cfg, None, seed, jobs), cols,
              [[r[c] for c in cols] for r in rows])
    # critical-point summary wherever the sweep brackets a sign change
    extras: dict = {}
    ks = sorted(f["k1_list_nmm_deg"], reverse=True)
    try:
        br = find_bracket(p, g, k_grid=ks[::-1], uniform=f["uniform"],
                          dt=f["dt_s"], h_fd=f["h_fd"])
        cp = critical_k1(p, g, bracket=br, uniform=f["uniform"],
                         dt=f["dt_s"], h_fd=f["h_fd"])
        extras = {"k_c_nmm_deg": cp.k_nmm_deg,
                  "crossing_type": cp.crossing_type,
                  "eigvec_joints": list(np.round(cp.eigvec_joints, 6))}
        crit_rows = [[cp.k_nmm_deg, cp.crossing_type,
                      *np.round(cp.eigvec_joints, 9)]]
        ccols = ["k_c_nmm_deg", "crossing_type"]
        ccols += [f"v{j}" for j in range(1, p.n_modules)]
        write_csv(out / "floquet_critical.csv",
                  meta_block("floquet", cfg, extras, seed, jobs), ccols,
                  crit_rows)
    except ValueError:
        pass  # no stability change inside the sweep; locus file stands alone
    return 0


def _diagram_cols(n_modules: int) -> list[str]:
    cols = ["k1_Nmm_deg", "inv_k1"]
    cols += [f"th{j}_deg" for j in range(1, n_modules)]
    cols += ["radius_m", "converged", "status"]
    return cols


def _diagram_rows(d) -> list[list]:
    rows = []
    for i, k in enumerate(d.k1_nmm):
        row = [k, d.inv_k1[i]]
        row += [_deg(a) for a in d.means[i]]
        row += [d.radius[i], bool(d.converged[i]), int(d.statuses[i])]
        rows.append(row)
    return rows


def cmd_diagram(cfg: RunConfig, out: Path, jobs: int,
                seed: int | None) -> int:
    """Bifurcation diagram sweep, or the reference variation study."""
    p, g = build_params(cfg), build_gait(cfg)
    d = cfg.values["diagram"]
    run_seed = d["seed"] if seed is None else seed
    klist = d["k1_list_nmm_deg"] or None
    kwargs = dict(T_sim=d["t_sim_s"], dt=d["dt_s"], dt_out=d["dt_out_s"],
                  perturb=math.radians(d["perturb_deg"]), seed=run_seed,
                  jobs=jobs)
    if d["study"] == "variations":
        studies = variation_study(p, g, T_sim=d["t_sim_s"],
                                  perturb=math.radians(d["perturb_deg"]),
                                  jobs=jobs)
        bad = 0
        for name, diag in studies.items():
            extras = {"condition": name, "fit_a": diag.fit_a,
                      "fit_kc_nmm_deg": diag.fit_kc,
                      "fit_residual": diag.fit_residual}
            write_csv(out / f"diagram_{name}.csv",
                      meta_block("diagram", cfg, extras, run_seed, jobs),
                      _diagram_cols(p.n_modules), _diagram_rows(diag))
            bad += int(np.any(diag.statuses != 0))
        return 1 if bad else 0
    diag = sweep_diagram(p, g, k1_list=klist, **kwargs)
    extras = {"fit_a": diag.fit_a, "fit_kc_nmm_deg": diag.fit_kc,
              "fit_residual": diag.fit_residual}
    write_csv(out / "diagram.csv",
              meta_block("diagram", cfg, extras, run_seed, jobs),
              _diagram_cols(p.n_modules), _diagram_rows(diag))
    return 1 if np.any(diag.statuses != 0) else 0


def cmd_turning(cfg: RunConfig, out: Path, jobs: int,
                seed: int | None) -> int:
    """One turning run: full trace CSV plus a one-row summary."""
    p, g = build_params(cfg), build_gait(cfg)
    task = build_turning_task(cfg, seed)
    o = run_turning(task, p, g)
    cols = ["t", "x", "y", "theta0", "psi_deg", "distance_m",
            "psihat1_deg", "psihat2_deg"]
    rows = []
    for i, t in enumerate(o.trace.times):
        rows.append([t, o.trace.states[i, 0], o.trace.states[i, 1],
                     o.trace.states[i, 2], _deg(o.psi[i]), o.distance[i],
                     _deg(o.psihat[i, 0]), _deg(o.psihat[i, 1])])
    k_eff = (task.k_uniform_nmm_deg if task.k_uniform_nmm_deg is not None
             else o.trace.params.k1_nmm_deg())
    extras = {"target_x_m": o.target[0], "target_y_m": o.target[1],
              "status": o.trace.status}
    write_csv(out / "turning_run.csv",
              meta_block("turning", cfg, extras, seed, jobs), cols, rows)
    srow = [[k_eff, 1.0 / k_eff, o.eps1, _deg(o.eps2), o.eps3, o.success,
             o.time_to_target if o.time_to_target is not None else ""]]
    write_csv(out / "turning_summary.csv",
              meta_block("turning", cfg, extras, seed, jobs),
              ["k1", "inv_k1", "eps1_m", "eps2_deg", "eps3", "success",
               "time_to_target_s"], srow)
    return 1 if o.trace.aborted else 0


def cmd_compare(cfg: RunConfig, out: Path, jobs: int,
                seed: int | None) -> int:
    """Strategy comparison table over both stiffness sweeps."""
    p, g = build_params(cfg), build_gait(cfg)
    task = build_turning_task(cfg, seed)
    c = cfg.values["compare"]
    tab = strategy_comparison(p, g, task,
                              pitchfork_k1=c["pitchfork_k1_nmm_deg"],
                              hopf_k=c["hopf_k_nmm_deg"], jobs=jobs)
    cols = ["mode", "k1", "inv_k1", "eps1_m", "eps2_deg", "eps3", "success",
            "time_to_target_s", "status"]
    rows = [[r.mode, r.k_nmm_deg, r.inv_k, r.eps1, _deg(r.eps2), r.eps3,
             r.success,
             r.time_to_target if r.time_to_target is not None else "",
             r.status] for r in tab.rows]
    extras = {}
    for mode, crits in tab.minima.items():
        for crit, (k, val) in crits.items():
            extras[f"min_{mode}_{crit}"] = f"k={float(k)!r} value={val!r}"
    write_csv(out / "compare.csv",
              meta_block("compare", cfg, extras, seed, jobs), cols, rows)
    return 1 if any(r.status != 0 for r in tab.rows) else 0


_COMMANDS = {
    "simulate": cmd_simulate,
    "floquet": cmd_floquet,
    "diagram": cmd_diagram,
    "turning": cmd_turning,
    "compare": cmd_compare,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="multileg",
        description="Simulation and stability experiments for the planar "
                    "many-legged walker.")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in _COMMANDS.items():
        sp = sub.add_parser(name, help=fn.__doc__.splitlines()[0])
        sp.add_argument("--config", type=Path, default=None,
                        help="INI config file (defaults used when omitted)")
        sp.add_argument("--out", type=Path, default=Path("."),
                        help="output directory for CSV files")
        sp.add_argument("--jobs", type=int, default=1,
                        help="parallel worker processes for sweeps")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the config's random seed")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        return _COMMANDS[args.command](cfg, args.out, max(1, args.jobs),
                                       args.seed)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
