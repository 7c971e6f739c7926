"""Backward conjugate heat equations for the dilaton.

The dilaton f is never evolved in its quadratic form.  With w = e^{-f} and
backward time sigma = T - t the equations become linear,

    dw/dsigma = Delta w - R w              (energy version)
    dw/dsigma = Delta w - R w + (n/tau) w  (entropy version),

with Kahler-normalized Delta and R.  Along d/dt g = -Ric these conserve
int w dmu and (4 pi tau)^{-n} int w dmu respectively.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .transverse import TransverseMetric, curvature, integrate, laplacian_matrix

RK4_STABILITY = 2.78


class NonPositiveTau(ValueError):
    pass


class PositivityLostW(ArithmeticError):
    """w = e^{-f} became non-positive during the backward sweep."""


@dataclass
class DilatonPath:
    times: np.ndarray
    fields: np.ndarray  # f at each time, shape (K, N+1)
    variant: str = "F"
    tau: np.ndarray | None = None
    n: int = 1

    def __len__(self):
        return len(self.times)

    def at(self, k: int) -> np.ndarray:
        return self.fields[k]

    def to_dict(self) -> dict:
        return {
            "variant": self.variant, "n": self.n, "times": self.times.tolist(),
            "fields": self.fields.tolist(),
            "tau": None if self.tau is None else self.tau.tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DilatonPath":
        tau = None if d["tau"] is None else np.array(d["tau"])
        return cls(np.array(d["times"]), np.array(d["fields"]), d["variant"], tau, d["n"])

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict()))

    @classmethod
    def load(cls, path) -> "DilatonPath":
        return cls.from_dict(json.loads(Path(path).read_text()))


def _operator(g: TransverseMetric) -> np.ndarray:
    """Matrix of w -> Delta w - R w (Kahler normalization)."""
    L = 0.5 * laplacian_matrix(g)
    L[np.diag_indices_from(L)] -= 0.5 * curvature(g).scalar
    return L


def _solve(traj, f_T: np.ndarray, tau_T: float | None, n: int, safety: float) -> DilatonPath:
    times = np.asarray(traj.times, dtype=float)
    T = times[-1]
    w = np.exp(-np.asarray(f_T, dtype=float))
    ws = [w]
    ops = {}

    def op(t):
        if t not in ops:
            ops[t] = _operator(traj.metric_at(t))
        return ops[t]

    def rhs(t, w):
        out = op(t) @ w
        if tau_T is not None:
            out += n / (tau_T + T - t) * w
        return out

    for k in range(len(times) - 1, 0, -1):
        t1, t0 = times[k], times[k - 1]
        span = t1 - t0
        rho = np.abs(np.linalg.eigvals(op(t1))).max()
        m = max(1, math.ceil(span * rho / (safety * RK4_STABILITY)))
        h = span / m
        t = t1
        for _ in range(m):
            # backward in t: dw/dt = -rhs
            k1 = rhs(t, w)
            k2 = rhs(t - 0.5 * h, w + 0.5 * h * k1)
            k3 = rhs(t - 0.5 * h, w + 0.5 * h * k2)
            k4 = rhs(t - h, w + h * k3)
            w = w + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
            t -= h
        if not np.all(w > 0):
            raise PositivityLostW(f"w <= 0 at t={t0:.4f}; reduce the step")
        ws.append(w)
        ops.pop(t1, None)
    ws = np.array(ws[::-1])
    fields = -np.log(ws)
    fields[-1] = f_T  # terminal condition reproduced bit-exactly
    tau = None if tau_T is None else tau_T + (T - times)
    return DilatonPath(times.copy(), fields, "F" if tau_T is None else "W", tau, n)


def solve_backward_F(traj, f_T: np.ndarray, safety: float = 0.8) -> DilatonPath:
    return _solve(traj, f_T, None, 1, safety)


def solve_backward_W(traj, f_T: np.ndarray, tau_T: float, safety: float = 0.8) -> DilatonPath:
    if not tau_T > 0:
        raise NonPositiveTau(f"tau must stay positive, tau_T={tau_T}")
    return _solve(traj, f_T, float(tau_T), 1, safety)


def normalize_dilaton(g: TransverseMetric, f: np.ndarray, tau: float | None = None, n: int = 1) -> np.ndarray:
    """Shift f by a constant so int e^{-f} dmu = 1, or (4 pi tau)^{-n} int e^{-f} dmu = 1."""
    m = f.min()
    total = integrate(g, np.exp(-(f - m)))
    if tau is not None:
        total /= (4.0 * np.pi * tau) ** n
    return f + math.log(total) - m


def conjugate_mass(traj, path: DilatonPath) -> np.ndarray:
    """Conserved quantity at every stored time."""
    out = []
    for k, t in enumerate(path.times):
        m = integrate(traj.metric_at(t), np.exp(-path.fields[k]))
        if path.tau is not None:
            m /= (4.0 * np.pi * path.tau[k]) ** path.n
        out.append(m)
    return np.array(out)


def _time_derivative(values: np.ndarray, dt: float) -> tuple[np.ndarray, slice]:
    """Fourth-order central difference along axis 0 at interior times."""
    d = (values[:-4] - 8 * values[1:-3] + 8 * values[3:-1] - values[4:]) / (12.0 * dt)
    return d, slice(2, len(values) - 2)


def pde_residual(traj, path: DilatonPath, variant: str | None = None) -> float:
    """Max residual of df/dt = -Delta f + |grad f|^2 - R (+ n/tau)."""
    variant = variant or path.variant
    times = path.times
    if len(times) < 5:
        raise ValueError("need at least five stored times")
    dt = times[1] - times[0]
    dfdt, sl = _time_derivative(path.fields, dt)
    worst = 0.0
    D = None
    for j, k in enumerate(range(sl.start, sl.stop)):
        g = traj.metric_at(times[k])
        D = g.grid.D
        f = path.fields[k]
        df = D @ f
        lap = 0.5 * (g.Q * (D @ df) + g.dQ * df) / g.A
        grad2 = 0.5 * g.Q * df**2 / g.A
        R = 0.5 * curvature(g).scalar
        res = dfdt[j] + lap - grad2 + R
        if variant == "W":
            res -= path.n / path.tau[k]
        worst = max(worst, float(np.abs(res).max()))
    return worst


def random_dilaton(grid, rng: np.random.Generator, degree: int = 4, amplitude: float = 0.5) -> np.ndarray:
    """Smooth seeded terminal datum: a random Legendre series in 2s - 1."""
    coef = np.concatenate([[0.0], amplitude * rng.standard_normal(degree)])
    return np.polynomial.legendre.legval(2.0 * grid.s - 1.0, coef)
