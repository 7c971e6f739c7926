"""Transverse Kahler calculus on torus-invariant basic functions.

A transverse metric is stored by two profiles on the grid: Q, the chart
factor (Q = q for a metric written in the background holomorphic chart) and
A, the area density.  In (s, psi) the metric is (A/Q) ds^2 + (Q A) dpsi^2.

Operators returned here are Riemannian: the Laplacian of the round leaf
space has first eigenvalue 2 and its scalar curvature is 2.  Kahler-normalized
traces are exactly one half of these.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Grid
from .models import TWO_PI, ModelSpec


class PositivityLost(ArithmeticError):
    """The area density of a Kahler potential is not strictly positive."""


@dataclass(frozen=True, eq=False)
class TransverseMetric:
    grid: Grid
    Q: np.ndarray
    dQ: np.ndarray
    d2Q: np.ndarray
    A: np.ndarray

    @classmethod
    def kahler(cls, model: ModelSpec, A: np.ndarray) -> "TransverseMetric":
        return cls(model.grid, model.q_nodes, model.dq_nodes, model.d2q_nodes, np.asarray(A, float))

    @classmethod
    def general(cls, grid: Grid, Q: np.ndarray, A: np.ndarray) -> "TransverseMetric":
        """Metric from arbitrary smooth profiles; derivatives of Q are spectral."""
        dQ = grid.D @ Q
        return cls(grid, np.asarray(Q, float), dQ, grid.D @ dQ, np.asarray(A, float))

    @property
    def component(self) -> np.ndarray:
        """g_{w wbar} in the log holomorphic chart, w = tau + i psi."""
        return 0.5 * self.Q * self.A

    @property
    def det(self) -> np.ndarray:
        return self.component

    @property
    def inverse(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return 1.0 / self.component

    @property
    def dA(self) -> np.ndarray:
        return self.grid.D @ self.A

    @property
    def density(self) -> np.ndarray:
        """Volume density of dmu = Sasaki volume / 2 pi, per unit s."""
        return TWO_PI * self.A

    def scaled(self, c: float) -> "TransverseMetric":
        return TransverseMetric(self.grid, self.Q, self.dQ, self.d2Q, c * self.A)

    @property
    def ds2(self) -> np.ndarray:
        """Coefficient E of ds^2."""
        with np.errstate(divide="ignore", invalid="ignore"):
            return self.A / self.Q

    @property
    def dpsi2(self) -> np.ndarray:
        """Coefficient G of dpsi^2."""
        return self.Q * self.A


@dataclass(frozen=True)
class CurvatureData:
    scalar: np.ndarray
    ricci: np.ndarray  # component of the transverse Ricci form, same chart as g
    ricci_form_density: np.ndarray  # rho / (ds ^ dpsi), integrates to 2 pi chi / 2 pi


def metric_from_potential(model: ModelSpec, phi: np.ndarray) -> TransverseMetric:
    """Transverse metric omega + i ddbar phi for a torus-invariant phi."""
    D = model.grid.D
    dphi = D @ phi
    A = model.background + 0.5 * (model.q_nodes * (D @ dphi) + model.dq_nodes * dphi)
    if not np.all(A > 0) or not np.all(np.isfinite(A)):
        raise PositivityLost(f"min area density {A.min():.3e} <= 0")
    return TransverseMetric.kahler(model, A)


def scalar_curvature_from(Q, dQ, d2Q, A, dA, d2A) -> np.ndarray:
    """Riemannian scalar curvature from profiles and their s-derivatives."""
    return -(d2Q + dQ * dA / A + Q * d2A / A - Q * dA**2 / A**2) / A


def hessian_from(Q, dQ, A, dA, df, d2f) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal-frame diagonal Hessian from explicit s-derivatives."""
    QdlogA = Q * dA / A
    hss = (Q * d2f - 0.5 * (QdlogA - dQ) * df) / A
    hpp = 0.5 * (dQ + QdlogA) * df / A
    return hss, hpp


def curvature(g: TransverseMetric) -> CurvatureData:
    D = g.grid.D
    dA = D @ g.A
    R = scalar_curvature_from(g.Q, g.dQ, g.d2Q, g.A, dA, D @ dA)
    ricci = 0.5 * R * g.component
    return CurvatureData(scalar=R, ricci=ricci, ricci_form_density=0.5 * R * g.A)


def laplacian_matrix(g: TransverseMetric) -> np.ndarray:
    D = g.grid.D
    return (g.Q[:, None] * (D @ D) + g.dQ[:, None] * D) / g.A[:, None]


def basic_laplacian(g: TransverseMetric, f: np.ndarray) -> np.ndarray:
    D = g.grid.D
    df = D @ f
    return (g.Q * (D @ df) + g.dQ * df) / g.A


def grad_norm_sq(g: TransverseMetric, f: np.ndarray) -> np.ndarray:
    df = g.grid.D @ f
    return g.Q * df**2 / g.A


def hessian_normalized(g: TransverseMetric, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Orthonormal-frame diagonal Hessian (ss, psipsi); off-diagonals vanish."""
    D = g.grid.D
    df = D @ f
    return hessian_from(g.Q, g.dQ, g.A, D @ g.A, df, D @ df)


def integrate(g: TransverseMetric, field: np.ndarray) -> float:
    return g.grid.integrate(np.asarray(field) * g.density)


def volume(g: TransverseMetric) -> float:
    return g.grid.integrate(g.density)


def fiber_density(g: TransverseMetric) -> np.ndarray:
    return g.density
