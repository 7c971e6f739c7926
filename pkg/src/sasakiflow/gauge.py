"""Transverse gauge transport turning the coupled flow into gradient form.

With d/dt g = -Ric and the energy-version dilaton f, the maps rho(t) solving
d rho/dt = -1/2 grad f (real gradient), rho(0) = id, give

    d/dt (rho* g) = -(Ric + Hess f~),    d/dt f~ = -Delta f~ - R,

for f~ = f o rho, with Kahler-normalized Delta and R.  For basic f the
vector field has no Reeb component, so the maps act on the leaf coordinate
only and commute with the Reeb flow.

A map s = rho(s0) pulls the metric (A/Q) ds^2 + Q A dpsi^2 back to profiles
Q~ = Q(rho) / rho' and A~ = A(rho) rho'.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.optimize import brentq

from .functionals import energy_F
from .models import TWO_PI
from .transverse import (
    TransverseMetric, curvature, hessian_from, integrate, scalar_curvature_from,
)


class MonotonicityLost(ArithmeticError):
    pass


@dataclass(frozen=True)
class PulledJet:
    """Pulled-back profiles and their s-derivatives from the chain rule.

    Spectral differentiation of a composed profile amplifies the unresolved
    tail of the map near the poles; transporting the derivatives of the map
    along with it avoids that.
    """
    Q: np.ndarray
    dQ: np.ndarray
    d2Q: np.ndarray
    A: np.ndarray
    dA: np.ndarray
    d2A: np.ndarray
    f: np.ndarray
    df: np.ndarray
    d2f: np.ndarray

    def scalar(self) -> np.ndarray:
        return scalar_curvature_from(self.Q, self.dQ, self.d2Q, self.A, self.dA, self.d2A)

    def hessian(self) -> tuple[np.ndarray, np.ndarray]:
        return hessian_from(self.Q, self.dQ, self.A, self.dA, self.df, self.d2f)

    def energy(self, grid) -> float:
        """F of the pulled pair, Kahler-normalized as in energy_F."""
        integrand = (0.5 * self.scalar() + 0.5 * self.Q * self.df**2 / self.A) * np.exp(-self.f)
        return grid.integrate(TWO_PI * self.A * integrand)


@dataclass
class GaugePath:
    times: np.ndarray
    maps: np.ndarray  # rho(t) at the nodes, shape (K, N+1)
    fiber_shift: np.ndarray  # Reeb-direction component, identically zero
    pulled_metrics: list
    pulled_f: np.ndarray
    jets: list

    def __len__(self):
        return len(self.times)


def _derivs(grid, values: np.ndarray, order: int) -> list[np.ndarray]:
    out = [np.asarray(values, float)]
    for _ in range(order):
        out.append(grid.D @ out[-1])
    return out


def _pullback(g: TransverseMetric, f: np.ndarray, jet: np.ndarray) -> PulledJet:
    """Pull (g, f) back by the map with s-jet rows rho, rho_s, rho_ss, rho_sss."""
    grid = g.grid
    rho, r1, r2, r3 = jet
    if np.any(np.diff(rho) <= 0) or np.any(r1 <= 0):
        raise MonotonicityLost("gauge map is not strictly increasing")
    ev = grid.evaluate
    Q0, Q1, Q2 = ev(g.Q, rho), ev(g.dQ, rho), ev(g.d2Q, rho)
    A0, A1, A2 = (ev(x, rho) for x in _derivs(grid, g.A, 2))
    f0, f1, f2 = (ev(x, rho) for x in _derivs(grid, f, 2))
    return PulledJet(
        Q=Q0 / r1,
        dQ=Q1 - Q0 * r2 / r1**2,
        d2Q=Q2 * r1 - Q1 * r2 / r1 - Q0 * r3 / r1**2 + 2.0 * Q0 * r2**2 / r1**3,
        A=A0 * r1,
        dA=A1 * r1**2 + A0 * r2,
        d2A=A2 * r1**3 + 3.0 * A1 * r1 * r2 + A0 * r3,
        f=f0,
        df=f1 * r1,
        d2f=f2 * r1**2 + f1 * r2,
    )


def _velocity_jet(g: TransverseMetric, f: np.ndarray, state: np.ndarray) -> np.ndarray:
    """Time derivative of the map jet under ds/dt = v(s), v = -1/2 (grad f)^s."""
    grid = g.grid
    v = -0.5 * g.Q * (grid.D @ f) / g.A
    rho, r1, r2, r3 = state
    v0, v1, v2, v3 = (grid.evaluate(x, rho) for x in _derivs(grid, v, 3))
    return np.array([
        v0,
        v1 * r1,
        v2 * r1**2 + v1 * r2,
        v3 * r1**3 + 3.0 * v2 * r1 * r2 + v1 * r3,
    ])


def transport(traj, path, substeps: int = 2) -> GaugePath:
    """Integrate the node ODE ds/dt = -1/2 (grad f)^s and its s-jet with RK4."""
    times = np.asarray(path.times, dtype=float)
    fspline = CubicSpline(times, path.fields, axis=0)
    grid = traj.model.grid

    def vel(t, state):
        return _velocity_jet(traj.metric_at(t), fspline(t), state)

    n = grid.size
    state = np.array([grid.s, np.ones(n), np.zeros(n), np.zeros(n)])
    states = [state.copy()]
    for k in range(len(times) - 1):
        h = (times[k + 1] - times[k]) / substeps
        t = times[k]
        for _ in range(substeps):
            k1 = vel(t, state)
            k2 = vel(t + 0.5 * h, state + 0.5 * h * k1)
            k3 = vel(t + 0.5 * h, state + 0.5 * h * k2)
            k4 = vel(t + h, state + h * k3)
            state = state + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            t += h
        state[0, 0], state[0, -1] = 0.0, 1.0  # poles are zeros of the field
        if np.any(np.diff(state[0]) <= 0):
            raise MonotonicityLost(f"map folded at t={times[k + 1]:.4f}")
        states.append(state.copy())
    jets = [_pullback(traj.metric_at(t), path.fields[k], states[k]) for k, t in enumerate(times)]
    maps = np.array([st[0] for st in states])
    metrics = [TransverseMetric(grid, j.Q, j.dQ, j.d2Q, j.A) for j in jets]
    return GaugePath(times, maps, np.zeros_like(maps), metrics, np.array([j.f for j in jets]), jets)


def _ddt(values: np.ndarray, dt: float) -> np.ndarray:
    return (values[:-4] - 8 * values[1:-3] + 8 * values[3:-1] - values[4:]) / (12.0 * dt)


def gradient_flow_residuals(gp: GaugePath) -> dict:
    """Residuals of the pulled-back metric and dilaton equations."""
    dt = gp.times[1] - gp.times[0]
    A = np.array([j.A for j in gp.jets])
    Q = np.array([j.Q for j in gp.jets])
    dlogA = _ddt(np.log(A), dt)
    dQ = _ddt(Q, dt)
    df = _ddt(gp.pulled_f, dt)
    out = {"area": 0.0, "chart": 0.0, "dilaton": 0.0}
    for j, k in enumerate(range(2, len(gp.times) - 2)):
        jet = gp.jets[k]
        K = 0.5 * jet.scalar()
        hss, hpp = jet.hessian()
        # log A = (log E + log G)/2 and Q = sqrt(G/E)
        r_area = dlogA[j] + K + 0.5 * (hss + hpp)
        r_chart = dQ[j] + 0.5 * jet.Q * (hpp - hss)
        r_dil = df[j] + 0.5 * (hss + hpp) + K
        out["area"] = max(out["area"], float(np.abs(r_area).max()))
        out["chart"] = max(out["chart"], float(np.abs(r_chart).max()))
        out["dilaton"] = max(out["dilaton"], float(np.abs(r_dil).max()))
    return out


def check_gradient_flow_form(gp: GaugePath) -> float:
    return max(gradient_flow_residuals(gp).values())


def invariance_report(traj, gp: GaugePath, path) -> dict:
    """Energy invariance, curvature transport and change of variables."""
    energy = curv = mass = 0.0
    for k, t in enumerate(gp.times):
        g, f = traj.metric_at(t), path.fields[k]
        jet, gb, fb = gp.jets[k], gp.pulled_metrics[k], gp.pulled_f[k]
        energy = max(energy, abs(energy_F(g, f) - jet.energy(g.grid)))
        R_pushed = g.grid.evaluate(curvature(g).scalar, gp.maps[k])
        curv = max(curv, float(np.abs(R_pushed - jet.scalar()).max()))
        m0 = integrate(g, np.exp(-f))
        mass = max(mass, abs(integrate(gb, np.exp(-fb)) - m0) / m0)
    return {"energy": energy, "curvature": curv, "mass": mass}


def check_diffT_invariance(traj, gp: GaugePath, path) -> float:
    return max(invariance_report(traj, gp, path)["energy"], invariance_report(traj, gp, path)["curvature"])


def inverse_composition_error(gp: GaugePath, k: int = -1) -> float:
    """max |rho(rho^{-1}(x)) - x| at the nodes, inverting by root finding."""
    grid_s = np.linspace(0.0, 1.0, len(gp.maps[k]))
    from .grid import Grid

    grid = Grid(len(gp.maps[k]) - 1)
    rho = gp.maps[k]
    err = 0.0
    for x in grid_s[1:-1]:
        s0 = brentq(lambda s: grid.evaluate(rho, s) - x, 0.0, 1.0, xtol=1e-15)
        err = max(err, abs(float(grid.evaluate(rho, s0)) - x))
    return err


def fiber_shift_irrelevant(gp: GaugePath) -> bool:
    """Transverse data do not depend on the Reeb-direction shift."""
    return bool(np.all(gp.fiber_shift == 0.0))
