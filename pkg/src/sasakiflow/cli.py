"""Command line interface.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from .config import ConfigError, RunConfig, load_config


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _emit(obj) -> None:
    print(json.dumps(_jsonable(obj), indent=2, sort_keys=True))


def _setup(cfg: RunConfig):
    from .flow import p2_perturbation, run_flow
    from .models import build_model

    model = build_model(cfg.model_family, cfg.model_a, cfg.model_b, cfg.grid_n)
    traj = run_flow(model, p2_perturbation(model, cfg.flow_eps), cfg.flow_t_end, cfg.flow_dt_store,
                    cfg.flow_dt_safety)
    return model, traj


def cmd_simulate(cfg, args):
    from .harness import run_scenario

    bundle = run_scenario(cfg)
    _emit({"output": str(bundle.directory), "probes": bundle.summary["probes"]})
    return 0 if bundle.summary["all_pass"] else 3


def cmd_entropy(cfg, args):
    from . import conjugate as cj
    from .functionals import energy_F, entropy_W

    model, traj = _setup(cfg)
    g = traj.metric_at(min(args.at, traj.t_final))
    f = cj.random_dilaton(model.grid, cfg.rng(1))
    tau = cfg.conjugate_tau_T
    _emit({"t": args.at, "F_T": energy_F(g, cj.normalize_dilaton(g, f)),
           "W_T": entropy_W(g, cj.normalize_dilaton(g, f, tau), tau), "tau": tau})
    return 0


def cmd_mu(cfg, args):
    from .functionals import mu

    model, traj = _setup(cfg)
    times = np.linspace(0.0, traj.t_final, args.samples)
    out = []
    for t in times:
        r = mu(traj.metric_at(t), args.tau, restarts=cfg.mu_restarts, seed=cfg.seed, tol=cfg.mu_tol)
        out.append({"t": t, "mu": r.value, "el_residual": r.el_residual, "w_min": r.minimizer.min()})
    _emit({"tau": args.tau, "samples": out})
    return 0


def cmd_tubes(cfg, args):
    from .models import build_model
    from .transverse import TransverseMetric
    from .tubes import gray_fit, mc_tube_comparison, noncollapse_ratio, radius_selection

    model = build_model(cfg.model_family, cfg.model_a, cfg.model_b, cfg.grid_n)
    g = TransverseMetric.kahler(model, model.background)
    rep = gray_fit(model, g, args.center, cfg.tubes_radii)
    out = {"gray": rep.__dict__, "ratio": rep.ratio,
           "noncollapse": noncollapse_ratio(model, g, args.center, cfg.tubes_radius).__dict__,
           "radius_selection": radius_selection(model, g, args.center, cfg.tubes_radius).__dict__}
    if model.a == model.b:
        out["monte_carlo"] = mc_tube_comparison(model, g, cfg.tubes_radii[-1], cfg.tubes_mc_samples, cfg.seed)
    _emit(out)
    return 0


def cmd_gauge(cfg, args):
    from . import conjugate as cj
    from .flow import to_unnormalized
    from .gauge import gradient_flow_residuals, invariance_report, transport

    model, traj = _setup(cfg)
    un = to_unnormalized(traj, cfg.conjugate_t_max, cfg.conjugate_states)
    path = cj.solve_backward_F(un, cj.random_dilaton(model.grid, cfg.rng(1)))
    gp = transport(un, path)
    _emit({"gradient_flow": gradient_flow_residuals(gp), "invariance": invariance_report(un, gp, path)})
    return 0


def cmd_bounds(cfg, args):
    from .harness import last_quarter_variation, state_row

    model, traj = _setup(cfg)
    rows = [state_row(model, st.t, st.metric, st.u, cfg.tubes_radius) for st in traj.states()]
    col = {k: np.array([r[k] for r in rows], dtype=float) for k in rows[0]}
    series = {
        "RT_abs_max": np.maximum(np.abs(col["RT_min"]), np.abs(col["RT_max"])),
        "grad_u_sup": col["grad_u_sup"],
        "u_abs_sup": np.maximum(np.abs(col["u_min"]), np.abs(col["u_max"])),
        "diam_T": col["diam_T"],
    }
    _emit({k: {"max": v.max(), "last_quarter_variation": last_quarter_variation(v)} for k, v in series.items()}
          | {"ratio_potential_max": col["ratio_potential"].max(), "noncollapse_min": col["noncollapse_ratio"].min()})
    return 0


def cmd_selftest(cfg, args):
    from .harness import selftest

    report = selftest(cfg.grid_n)
    _emit(report)
    return 0 if all(v["passed"] for v in report.values()) else 3


COMMANDS = {
    "simulate": cmd_simulate, "entropy": cmd_entropy, "mu": cmd_mu, "tubes": cmd_tubes,
    "gauge-check": cmd_gauge, "perelman-bounds": cmd_bounds, "selftest": cmd_selftest,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sasakiflow", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--config", help="key = value configuration file")
        for key in RunConfig.keys():
            p.add_argument(f"--{key}", dest=key, default=None, metavar="VALUE")
        if name == "entropy":
            p.add_argument("--at", type=float, default=0.0, help="normalized time")
        if name == "mu":
            p.add_argument("--tau", type=float, default=1.0)
            p.add_argument("--samples", type=int, default=5)
        if name == "tubes":
            p.add_argument("--center", type=float, default=0.0, help="leaf coordinate of the base orbit")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k in RunConfig.keys() and v is not None}
    try:
        cfg = load_config(args.config, overrides)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, ValueError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
