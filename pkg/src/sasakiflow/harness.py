"""Scenario runner: flow, coupled dilatons, diagnostics and artifacts.

A scenario integrates the normalized flow from a P2 perturbation of the
background, records curvature, Ricci potential, mu, distance and volume
diagnostics at every stored time, solves the energy and entropy dilatons
backward along the unnormalized flow on [0, t_max], and writes

* timeseries.csv  with a commented schema block,
* coupled.csv     the unnormalized-time series of the coupled functionals,
* summary.json    final values and the pass/fail of every probe,
* *.svg           optional line charts.

Outputs depend only on the configuration (and its seed).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import conjugate as cj
from . import flow as fl
from .config import RunConfig
from .functionals import dF_dt_formula, energy_F, entropy_W, mu
from .models import build_model, orbit_closure_rank
from .svg import line_chart
from .transverse import TransverseMetric, curvature, grad_norm_sq, volume
from .tubes import DistanceProfile, noncollapse_ratio, transverse_diameter

COLUMNS = {
    "t": "normalized flow time",
    "vol": "volume int dmu (Sasaki volume / 2 pi)",
    "F_T": "energy of the coupled dilaton on the unnormalized flow at t~ = 1 - e^-t (nan past t_max)",
    "W_T": "entropy of the coupled dilaton, tau = tau_T + T~ - t~ (nan past t_max)",
    "mu": "mu(g(t), 1), every mu.every rows (nan otherwise)",
    "a": "(4 pi)^-1 int u e^-u dmu",
    "RT_min": "min of the Riemannian transverse scalar curvature",
    "RT_max": "max of the Riemannian transverse scalar curvature",
    "u_min": "min of the normalized Ricci potential",
    "u_max": "max of the normalized Ricci potential",
    "grad_u_sup": "sup |grad u| (Riemannian)",
    "diam_T": "transverse diameter",
    "noncollapse_ratio": "Vol(T(p, r)) / r^2 about the base orbit, r = tubes.radius",
    "ratio_potential": "sup (|grad u|^2 + |R|) / (u - min u + 1)",
}

COUPLED_COLUMNS = {
    "t_tilde": "unnormalized time",
    "F_T": "energy int (R + |grad f|^2) e^-f dmu (Kahler traces)",
    "dF_formula": "(1/2) int |Ric + Hess f|^2 e^-f dmu",
    "mass_F": "int e^-f dmu for the energy dilaton",
    "W_T": "entropy of the W dilaton",
    "mass_W": "(4 pi tau)^-1 int e^-f dmu for the entropy dilaton",
    "tau": "tau(t~)",
}


def _fmt(v) -> str:
    return repr(float(v))


def _write_csv(path: Path, columns: dict, rows: list, title: str) -> None:
    lines = [f"# {title}", "# schema:"]
    lines += [f"#   {k}: {d}" for k, d in columns.items()]
    lines.append(",".join(columns))
    lines += [",".join(_fmt(r[k]) for k in columns) for r in rows]
    path.write_text("\n".join(lines) + "\n")


def base_point(model, g: TransverseMetric, u: np.ndarray) -> float:
    """Leaf coordinate of the orbit closure where u is minimal.

    On quasi-regular models an interior minimum lies on a circle whose tubes
    are not levels of s, so the pole with the smaller u is used instead.
    """
    s = float(g.grid.s[int(np.argmin(u))])
    if 0.0 < s < 1.0 and orbit_closure_rank(model, s) == 1:
        return 0.0 if u[0] <= u[-1] else 1.0
    return s


def state_row(model, t: float, g: TransverseMetric, u: np.ndarray, radius: float) -> dict:
    R = curvature(g).scalar
    grad2 = grad_norm_sq(g, u)
    prof = DistanceProfile(g)
    p = base_point(model, g, u)
    d = np.abs(prof.at_s(g.grid.s) - prof.at_s(p))
    return {
        "t": t,
        "vol": volume(g),
        "a": fl.a_quantity(g, u),
        "RT_min": R.min(),
        "RT_max": R.max(),
        "u_min": u.min(),
        "u_max": u.max(),
        "grad_u_sup": math.sqrt(grad2.max()),
        "diam_T": transverse_diameter(g),
        "noncollapse_ratio": noncollapse_ratio(model, g, p, radius).ratio,
        "ratio_potential": float(np.max((grad2 + np.abs(R)) / (u - u.min() + 1.0))),
        "u_growth_C": float(max(0.0, np.max(u / (d**2 + 1.0)))),
        "noncollapse_vacuous": noncollapse_ratio(model, g, p, radius).vacuous,
    }


def coupled_series(traj: fl.Trajectory, cfg: RunConfig) -> tuple[list, dict]:
    model = traj.model
    un = fl.to_unnormalized(traj, cfg.conjugate_t_max, cfg.conjugate_states)
    gT = un.metric_at(un.t_final)
    f_T = cj.random_dilaton(model.grid, cfg.rng(1))
    rows = [{"t_tilde": t} for t in un.times]
    info = {}
    if cfg.conjugate_variant in ("F", "both"):
        pF = cj.solve_backward_F(un, cj.normalize_dilaton(gT, f_T), safety=cfg.flow_dt_safety)
        mF = cj.conjugate_mass(un, pF)
        for k, t in enumerate(un.times):
            g = un.metric_at(t)
            rows[k]["F_T"] = energy_F(g, pF.fields[k])
            rows[k]["dF_formula"] = dF_dt_formula(g, pF.fields[k])
            rows[k]["mass_F"] = mF[k]
        info["F_residual"] = cj.pde_residual(un, pF)
    if cfg.conjugate_variant in ("W", "both"):
        tau_T = cfg.conjugate_tau_T
        pW = cj.solve_backward_W(un, cj.normalize_dilaton(gT, f_T, tau_T), tau_T, safety=cfg.flow_dt_safety)
        mW = cj.conjugate_mass(un, pW)
        for k, t in enumerate(un.times):
            rows[k]["W_T"] = entropy_W(un.metric_at(t), pW.fields[k], pW.tau[k])
            rows[k]["mass_W"] = mW[k]
            rows[k]["tau"] = pW.tau[k]
        info["W_residual"] = cj.pde_residual(un, pW)
    for r in rows:
        for k in COUPLED_COLUMNS:
            r.setdefault(k, math.nan)
    return rows, info


def _nondecreasing(values, tol_fn) -> bool:
    v = [x for x in values if math.isfinite(x)]
    return all(b >= a - tol_fn(a) for a, b in zip(v, v[1:]))


def last_quarter_variation(values: np.ndarray) -> float:
    """Spread over the final quarter relative to the largest magnitude of the run.

    Quantities that converge to zero (|grad u|, |u| at an Einstein limit)
    are measured against their own scale rather than their vanishing value.
    """
    values = np.asarray(values, dtype=float)
    tail = values[len(values) * 3 // 4:]
    scale = max(np.abs(values).max(), 1e-300)
    return float(np.ptp(tail) / scale)


@dataclass
class ArtifactBundle:
    directory: Path
    summary: dict
    rows: list
    coupled: list


def run_scenario(cfg: RunConfig) -> ArtifactBundle:
    model = build_model(cfg.model_family, cfg.model_a, cfg.model_b, cfg.grid_n)
    phi0 = fl.p2_perturbation(model, cfg.flow_eps)
    traj = fl.run_flow(model, phi0, cfg.flow_t_end, cfg.flow_dt_store, cfg.flow_dt_safety)
    rows = []
    for k, st in enumerate(traj.states()):
        row = state_row(model, st.t, st.metric, st.u, cfg.tubes_radius)
        row["mu"] = mu(st.metric, 1.0, restarts=cfg.mu_restarts, seed=cfg.seed, tol=cfg.mu_tol).value \
            if k % cfg.mu_every == 0 or k == len(traj) - 1 else math.nan
        rows.append(row)
    coupled, info = coupled_series(traj, cfg)
    tt = np.array([r["t_tilde"] for r in coupled])
    for row in rows:
        t_tilde = -math.expm1(-row["t"])
        inside = t_tilde <= tt[-1] + 1e-12
        for col in ("F_T", "W_T"):
            series = np.array([r[col] for r in coupled])
            row[col] = float(np.interp(t_tilde, tt, series)) if inside and np.all(np.isfinite(series)) else math.nan
    summary = summarize(cfg, model, rows, coupled, info)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write_csv(out / "timeseries.csv", COLUMNS, rows, "normalized flow diagnostics")
    _write_csv(out / "coupled.csv", COUPLED_COLUMNS, coupled, "coupled dilatons on the unnormalized flow")
    (out / "summary.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    (out / "config.txt").write_text(cfg.to_text())
    if cfg.output_svg:
        t = [r["t"] for r in rows]
        for col in COLUMNS:
            if col != "t":
                line_chart(t, [r[col] for r in rows], col, out / f"{col}.svg")
    return ArtifactBundle(out, summary, rows, coupled)


def summarize(cfg: RunConfig, model, rows: list, coupled: list, info: dict) -> dict:
    col = {k: np.array([r[k] for r in rows], dtype=float) for k in rows[0] if k != "noncollapse_vacuous"}
    vol0 = col["vol"][0]
    ceiling = col["vol"].max() / (4.0 * np.pi * math.e)  # x e^-x <= 1/e
    cF = np.array([r["F_T"] for r in coupled])
    cW = np.array([r["W_T"] for r in coupled])
    probes = {
        "volume_preserved": float(np.abs(col["vol"] / vol0 - 1).max()) < 1e-6,
        "a_nondecreasing": _nondecreasing(col["a"], lambda a: 1e-8),
        "a_below_ceiling": bool(np.all(col["a"] <= ceiling)),
        "mu_nondecreasing": _nondecreasing(col["mu"], lambda a: 1e-5),
        "F_nondecreasing": _nondecreasing(cF, lambda a: 1e-6 * (1 + abs(a))),
        "W_nondecreasing": _nondecreasing(cW, lambda a: 1e-6 * (1 + abs(a))),
        "ratio_potential_bounded": bool(np.all(np.isfinite(col["ratio_potential"]))),
        "noncollapse_positive": bool(col["noncollapse_ratio"].min() > 0),
    }
    for name in ("mass_F", "mass_W"):
        m = np.array([r[name] for r in coupled])
        if np.all(np.isfinite(m)):
            probes[f"{name}_conserved"] = float(np.ptp(m) / abs(m[0])) < 1e-6
    variation = {k: last_quarter_variation(v) for k, v in {
        "RT_abs_max": np.maximum(np.abs(col["RT_min"]), np.abs(col["RT_max"])),
        "grad_u_sup": col["grad_u_sup"],
        "u_abs_sup": np.maximum(np.abs(col["u_min"]), np.abs(col["u_max"])),
        "diam_T": col["diam_T"],
    }.items()}
    probes["bounds_settle"] = all(v < 0.05 for v in variation.values())
    final = {k: (float(v[-1]) if math.isfinite(v[-1]) else None) for k, v in col.items()}
    return {
        "model": {"family": model.family.value, "a": model.a, "b": model.b, "N": model.grid.n},
        "final": final,
        "volume_drift": float(np.abs(col["vol"] / vol0 - 1).max()),
        "a_ceiling": ceiling,
        "noncollapse_min": float(col["noncollapse_ratio"].min()),
        "u_growth_C": float(col["u_growth_C"].max()),
        "ratio_potential_max": float(col["ratio_potential"].max()),
        "last_quarter_variation": variation,
        "conjugate_residuals": info,
        "probes": probes,
        "all_pass": all(probes.values()),
    }


# self test ------------------------------------------------------------------------

def selftest(n: int = 64) -> dict:
    """Reduced invariant suite; returns {check: (module, passed, value)}."""
    from .functionals import weighted_lambda1
    from .gauge import check_gradient_flow_form, transport
    from .tubes import gray_fit

    out = {}

    def record(name, module, value, ok):
        out[name] = {"module": module, "value": float(value), "passed": bool(ok)}

    rnd = build_model("round", grid=n)
    wtd = build_model("weighted", 1.0, math.sqrt(2.0), grid=n)
    res = max(wtd.contact_residuals())
    record("contact_identities", "models", res, res < 1e-10)
    g0 = TransverseMetric.kahler(rnd, rnd.background)
    err = float(np.abs(curvature(g0).scalar - 2.0).max())
    record("round_einstein", "transverse_calc", err, err < 1e-10)
    tr = fl.run_flow(rnd, np.zeros(rnd.grid.size), 1.0, 0.25)
    drift = float(np.abs(tr.phidots).max())
    record("einstein_fixed_point", "flow", drift, drift < 1e-8)
    tr = fl.run_flow(rnd, fl.p2_perturbation(rnd), 2.0, 0.1)
    vols = [volume(st.metric) for st in tr.states()]
    vd = max(abs(v / vols[0] - 1) for v in vols)
    record("volume_preserved", "flow", vd, vd < 1e-6)
    fz = fl.frozen_trajectory(rnd, 1.0, 20)
    p = cj.solve_backward_F(fz, np.full(rnd.grid.size, 0.3))
    e = float(np.abs(p.fields - (0.3 + (1.0 - p.times))[:, None]).max())
    record("frozen_conjugate", "conjugate", e, e < 1e-8)
    m = mu(g0, 1.0, restarts=2)
    record("mu_einstein", "functionals", m.value + 1.0, abs(m.value + 1.0) < 1e-8)
    st = tr.state(len(tr) - 1)
    lam = weighted_lambda1(st.metric, st.u, "kahler")
    record("lambda1_bound", "functionals", lam, lam >= 1 - 1e-6)
    rep = gray_fit(wtd, TransverseMetric.kahler(wtd, wtd.background), 0.5, np.linspace(0.02, 0.1, 5))
    record("gray_q2", "tubes", rep.ratio, abs(rep.ratio - 1) < 0.05)
    tr = fl.run_flow(rnd, fl.p2_perturbation(rnd), 1.0, 0.01)
    un = fl.to_unnormalized(tr, 0.5, 81)
    path = cj.solve_backward_F(un, cj.random_dilaton(rnd.grid, np.random.default_rng(0)))
    gres = check_gradient_flow_form(transport(un, path))
    record("gradient_flow_form", "gauge", gres, gres < 1e-3)
    return out
