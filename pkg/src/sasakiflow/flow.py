"""Normalized Sasaki-Ricci flow on torus-invariant transverse potentials.

The normalized flow d/dt g = -Ric + g is written for the potential phi of
omega_phi = omega_0 + i ddbar phi as the parabolic equation

    d/dt phi = log(A_phi / A_0) + phi - F,

where F is the Ricci potential of the background (Delta F = R_0 - 2,
mean zero).  Its linearization is Delta + 1 in Kahler normalization, so the
time step is limited by the largest Laplacian eigenvalue.  Stored states
carry both phi and d/dt phi, which gives C^1 cubic Hermite interpolation
of the metric in time.

The unnormalized flow d/dt g = -Ric is recovered by
g~(t~) = (1 - t~) g(-log(1 - t~)).
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .models import ModelSpec, build_model
from .transverse import (
    CurvatureData,
    PositivityLost,
    TransverseMetric,
    curvature,
    integrate,
    laplacian_matrix,
    metric_from_potential,
    volume,
)

FOUR_PI = 4.0 * np.pi
RK4_STABILITY = 2.78  # real-axis stability limit of classical RK4


class StepRejected(ArithmeticError):
    pass


class RangeExceeded(ValueError):
    pass


@dataclass
class FlowState:
    t: float
    phi: np.ndarray
    phidot: np.ndarray
    metric: TransverseMetric

    @cached_property
    def curv(self) -> CurvatureData:
        return curvature(self.metric)

    @cached_property
    def u(self) -> np.ndarray:
        return ricci_potential(self.metric)


def _solve_poisson(g: TransverseMetric, rhs: np.ndarray) -> np.ndarray:
    """Mean-zero solution of Delta_r f = rhs (rhs is projected to mean zero)."""
    L = laplacian_matrix(g)
    w = g.grid.weights * g.density
    rhs = rhs - (w @ rhs) / w.sum()
    n = L.shape[0]
    M = np.zeros((n + 1, n + 1))
    M[:n, :n] = L
    M[:n, n] = 1.0
    M[n, :n] = w
    sol = np.linalg.solve(M, np.append(rhs, 0.0))
    return sol[:n]


def ricci_deviation_potential(g: TransverseMetric) -> np.ndarray:
    """F with Delta_r F = R - 2 and zero mean."""
    return _solve_poisson(g, curvature(g).scalar - 2.0)


def ricci_potential(g: TransverseMetric) -> np.ndarray:
    """u with R - 2 = -Delta_r u and int e^{-u} dmu = (4 pi)^n.

    The additive constant has the closed form log(int e^{-u0} dmu / 4 pi),
    so no root-finding is needed.
    """
    u0 = -ricci_deviation_potential(g)
    m = u0.min()
    c = math.log(integrate(g, np.exp(-(u0 - m))) / FOUR_PI) - m
    return u0 + c


def a_quantity(g: TransverseMetric, u: np.ndarray | None = None) -> float:
    """(4 pi)^{-n} int u e^{-u} dmu."""
    if u is None:
        u = ricci_potential(g)
    return integrate(g, u * np.exp(-u)) / FOUR_PI


def laplacian_bound(g: TransverseMetric) -> float:
    """Largest |eigenvalue| of the Kahler-normalized Laplacian."""
    return 0.5 * float(np.abs(np.linalg.eigvals(laplacian_matrix(g))).max())


class _Rhs:
    def __init__(self, model: ModelSpec):
        self.model = model
        g0 = TransverseMetric.kahler(model, model.background)
        self.F = ricci_deviation_potential(g0)
        self.logA0 = np.log(model.background)

    def __call__(self, phi: np.ndarray) -> tuple[np.ndarray, TransverseMetric]:
        g = metric_from_potential(self.model, phi)
        return np.log(g.A) - self.logA0 + phi - self.F, g


def _rk4(rhs: _Rhs, phi: np.ndarray, dt: float) -> np.ndarray:
    try:
        k1, _ = rhs(phi)
        k2, _ = rhs(phi + 0.5 * dt * k1)
        k3, _ = rhs(phi + 0.5 * dt * k2)
        k4, _ = rhs(phi + dt * k3)
    except PositivityLost as exc:
        raise StepRejected(f"positivity lost inside step: {exc}") from exc
    return phi + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)


def step_normalized(model: ModelSpec, state: FlowState, dt: float) -> FlowState:
    """One RK4 step; rejects steps beyond the linear stability bound."""
    if not dt > 0:
        raise ValueError("dt must be positive")
    if dt * (laplacian_bound(state.metric) + 1.0) > RK4_STABILITY:
        raise StepRejected(f"dt={dt:.3e} exceeds the stability bound")
    rhs = _Rhs(model)
    phi = _rk4(rhs, state.phi, dt)
    try:
        phidot, g = rhs(phi)
    except PositivityLost as exc:
        raise StepRejected(str(exc)) from exc
    return FlowState(state.t + dt, phi, phidot, g)


@dataclass
class Trajectory:
    model: ModelSpec
    times: np.ndarray
    phis: np.ndarray
    phidots: np.ndarray
    substeps: int = 0
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.times)

    @property
    def t_final(self) -> float:
        return float(self.times[-1])

    @cached_property
    def _spline(self):
        return CubicHermiteSpline(self.times, self.phis, self.phidots, axis=0)

    def _check(self, t):
        if t < self.times[0] - 1e-12 or t > self.times[-1] + 1e-12:
            raise RangeExceeded(f"t={t} outside [{self.times[0]}, {self.times[-1]}]")

    def phi_at(self, t: float) -> np.ndarray:
        self._check(t)
        k = np.searchsorted(self.times, t)
        if k < len(self.times) and self.times[k] == t:
            return self.phis[k]
        return self._spline(t)

    def metric_at(self, t: float) -> TransverseMetric:
        return metric_from_potential(self.model, self.phi_at(t))

    def state(self, k: int) -> FlowState:
        return FlowState(float(self.times[k]), self.phis[k], self.phidots[k],
                         metric_from_potential(self.model, self.phis[k]))

    def states(self):
        for k in range(len(self)):
            yield self.state(k)

    # serialization ----------------------------------------------------------
    def to_dict(self) -> dict:
        m = self.model
        return {
            "family": m.family.value, "a": m.a, "b": m.b, "N": m.grid.n,
            "substeps": self.substeps, "meta": self.meta,
            "times": self.times.tolist(), "phis": self.phis.tolist(),
            "phidots": self.phidots.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Trajectory":
        model = build_model(d["family"], d["a"], d["b"], d["N"])
        return cls(model, np.array(d["times"]), np.array(d["phis"]),
                   np.array(d["phidots"]), d.get("substeps", 0), d.get("meta", {}))

    def save(self, path) -> None:
        # json writes floats with repr, which round-trips bit-exactly
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "Trajectory":
        return cls.from_dict(json.loads(Path(path).read_text()))


def run_flow(model: ModelSpec, phi0: np.ndarray, t_final: float, dt_store: float = 0.05,
             safety: float = 0.8) -> Trajectory:
    """Integrate the normalized flow, storing states every dt_store."""
    if t_final <= 0 or dt_store <= 0:
        raise ValueError("t_final and dt_store must be positive")
    rhs = _Rhs(model)
    phi = np.array(phi0, dtype=float)
    phidot, g = rhs(phi)
    n_store = max(1, int(round(t_final / dt_store)))
    times = np.linspace(0.0, t_final, n_store + 1)
    phis, phidots = [phi.copy()], [phidot]
    total = 0
    for k in range(n_store):
        span = times[k + 1] - times[k]
        bound = laplacian_bound(g) + 1.0
        m = max(1, math.ceil(span * bound / (safety * RK4_STABILITY)))
        h = span / m
        for _ in range(m):
            phi = _rk4(rhs, phi, h)
        total += m
        try:
            phidot, g = rhs(phi)
        except PositivityLost as exc:
            raise StepRejected(str(exc)) from exc
        if not np.all(np.isfinite(phi)):
            raise StepRejected("non-finite potential")
        phis.append(phi.copy())
        phidots.append(phidot)
    return Trajectory(model, times, np.array(phis), np.array(phidots), total)


def frozen_trajectory(model: ModelSpec, t_final: float, n_store: int = 20) -> Trajectory:
    """Stationary trajectory at the background metric (Einstein for Round)."""
    times = np.linspace(0.0, t_final, n_store + 1)
    z = np.zeros((n_store + 1, model.grid.size))
    return Trajectory(model, times, z, z.copy())


def unnormalized_metric(traj: Trajectory, t_tilde: float) -> TransverseMetric:
    """Metric of the unnormalized flow at time t~ in [0, 1)."""
    if not 0.0 <= t_tilde < 1.0:
        raise RangeExceeded(f"unnormalized time must lie in [0, 1), got {t_tilde}")
    t = -math.log1p(-t_tilde)
    if t > traj.t_final + 1e-12:
        raise RangeExceeded(f"needs normalized time {t:.4f} > {traj.t_final}")
    return traj.metric_at(t).scaled(1.0 - t_tilde)


@dataclass
class UnnormalizedTrajectory:
    """Solution of d/dt g = -Ric built from a normalized trajectory.

    Exposes the same read interface as Trajectory (times, metric_at).
    """
    source: Trajectory
    times: np.ndarray

    @property
    def model(self) -> ModelSpec:
        return self.source.model

    @property
    def t_final(self) -> float:
        return float(self.times[-1])

    def __len__(self):
        return len(self.times)

    def metric_at(self, t: float) -> TransverseMetric:
        if t < -1e-12 or t > self.t_final + 1e-12:
            raise RangeExceeded(f"t={t} outside [0, {self.t_final}]")
        return unnormalized_metric(self.source, min(max(t, 0.0), self.t_final))


def to_unnormalized(traj: Trajectory, t_max: float, n_states: int = 41) -> UnnormalizedTrajectory:
    """Resample the unnormalized flow on a uniform grid of [0, t_max]."""
    if not 0.0 < t_max < 1.0:
        raise RangeExceeded(f"t_max must lie in (0, 1), got {t_max}")
    need = -math.log1p(-t_max)
    if need > traj.t_final + 1e-12:
        raise RangeExceeded(f"needs normalized time {need:.4f} > {traj.t_final}")
    return UnnormalizedTrajectory(traj, np.linspace(0.0, t_max, n_states))


def p2_perturbation(model: ModelSpec, eps: float = 0.1) -> np.ndarray:
    """eps * P2(2 s - 1), a torus-invariant non-Einstein initial potential."""
    y = 2.0 * model.s - 1.0
    return eps * 0.5 * (3.0 * y**2 - 1.0)


__all__ = [
    "FlowState", "Trajectory", "StepRejected", "RangeExceeded", "run_flow",
    "step_normalized", "ricci_potential", "ricci_deviation_potential", "a_quantity",
    "to_unnormalized", "unnormalized_metric", "UnnormalizedTrajectory", "frozen_trajectory", "p2_perturbation", "volume",
]
