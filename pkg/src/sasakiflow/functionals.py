"""Energy, entropy, the mu-invariant and related spectral quantities.

All scalar traces here are Kahler-normalized: R, Delta and |grad f|^2 are
one half of their Riemannian counterparts, so the round Einstein leaf space
has R = 1 and first Laplace eigenvalue 1.  Hessians and Ricci tensors are
the real ones.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .transverse import (
    TransverseMetric,
    basic_laplacian,
    curvature,
    grad_norm_sq,
    hessian_normalized,
    integrate,
    laplacian_matrix,
)

FOUR_PI = 4.0 * np.pi


class NonPositiveTau(ValueError):
    pass


def _kahler(g: TransverseMetric, f: np.ndarray):
    R = 0.5 * curvature(g).scalar
    lap = 0.5 * basic_laplacian(g, f)
    grad2 = 0.5 * grad_norm_sq(g, f)
    return R, lap, grad2


def energy_F(g: TransverseMetric, f: np.ndarray) -> float:
    """int (R + |grad f|^2) e^{-f} dmu."""
    R, _, grad2 = _kahler(g, f)
    return integrate(g, (R + grad2) * np.exp(-f))


def entropy_W(g: TransverseMetric, f: np.ndarray, tau: float, n: int = 1) -> float:
    """(4 pi tau)^{-n} int (tau (R + |grad f|^2) + f - 2n) e^{-f} dmu."""
    if not tau > 0:
        raise NonPositiveTau(f"tau must be positive, got {tau}")
    R, _, grad2 = _kahler(g, f)
    return integrate(g, (tau * (R + grad2) + f - 2 * n) * np.exp(-f)) / (FOUR_PI * tau) ** n


def dF_dt_formula(g: TransverseMetric, f: np.ndarray) -> float:
    """Rate of change of the energy along d/dt g = -Ric coupled to the
    conjugate equation: (1/2) int |Ric + Hess f|^2 e^{-f} dmu.

    The tensor norm is the real one; the factor 1/2 is the Kahler
    normalization of the trace.
    """
    K = 0.5 * curvature(g).scalar  # Ric = K g in real dimension two
    hss, hpp = hessian_normalized(g, f)
    return 0.5 * integrate(g, ((K + hss) ** 2 + (K + hpp) ** 2) * np.exp(-f))


def perturb_metric(g: TransverseMetric, psi: np.ndarray, eps: float) -> TransverseMetric:
    """g + eps i ddbar psi for a metric in the background chart."""
    D = g.grid.D
    dpsi = D @ psi
    A = g.A + 0.5 * eps * (g.Q * (D @ dpsi) + g.dQ * dpsi)
    if not np.all(A > 0):
        from .transverse import PositivityLost
        raise PositivityLost(f"min area density {A.min():.3e} <= 0")
    return TransverseMetric(g.grid, g.Q, g.dQ, g.d2Q, A)


def variation_F(g: TransverseMetric, f: np.ndarray, psi: np.ndarray, h: np.ndarray,
                eps: float = 1e-4) -> tuple[float, float]:
    """First variation of the energy in direction (i ddbar psi, h).

    The metric variation v = i ddbar psi is conformal in real dimension two,
    v_ij = sigma g_ij with sigma = Delta psi.  The analytic value is
    int e^{-f} (-v_ij (Ric_ij + f_ij) + (v - h)(2 Delta f - |grad f|^2 + R)).
    Returns (analytic, centred difference).
    """
    R, lap, grad2 = _kahler(g, f)
    sigma = 0.5 * basic_laplacian(g, psi)
    contraction = sigma * (R + lap)
    analytic = integrate(g, np.exp(-f) * (-contraction + (sigma - h) * (2 * lap - grad2 + R)))
    plus = energy_F(perturb_metric(g, psi, eps), f + eps * h)
    minus = energy_F(perturb_metric(g, psi, -eps), f - eps * h)
    return analytic, (plus - minus) / (2.0 * eps)


def poincare_residual(g: TransverseMetric, u: np.ndarray, f: np.ndarray) -> float:
    """RHS minus LHS of the weighted Poincare inequality with measure e^{-u} dmu / V."""
    e = np.exp(-u)
    V = integrate(g, e)
    grad2 = 0.5 * grad_norm_sq(g, f)
    lhs = integrate(g, f**2 * e) / V
    rhs = integrate(g, grad2 * e) / V + (integrate(g, f * e) / V) ** 2
    return rhs - lhs


def weighted_operator(g: TransverseMetric, u: np.ndarray) -> np.ndarray:
    """Riemannian L f = -Delta f + <grad u, grad f>, self-adjoint in e^{-u} dmu."""
    D = g.grid.D
    drift = g.Q * (D @ u) / g.A
    return -laplacian_matrix(g) + drift[:, None] * D


def weighted_spectrum(g: TransverseMetric, u: np.ndarray) -> np.ndarray:
    ev = linalg.eigvals(weighted_operator(g, u))
    if np.abs(ev.imag).max() > 1e-6 * max(1.0, np.abs(ev.real).max()):
        raise ArithmeticError("weighted operator has a complex spectrum")
    return np.sort(ev.real)


def weighted_lambda1(g: TransverseMetric, u: np.ndarray, normalization: str = "riemannian",
                     kernel_tol: float = 1e-7) -> float:
    """Smallest nonzero eigenvalue of L; the kernel must be the constants.

    normalization="kahler" halves the value, which is the form in which the
    lower bound 1 is stated.
    """
    ev = weighted_spectrum(g, u)
    kernel = np.sum(np.abs(ev) < kernel_tol)
    if kernel != 1:
        raise ArithmeticError(f"kernel of L has dimension {kernel}, expected 1")
    lam = float(ev[np.abs(ev) >= kernel_tol][0])
    return 0.5 * lam if normalization == "kahler" else lam


def weighted_eigenfunction(g: TransverseMetric, u: np.ndarray) -> tuple[float, np.ndarray]:
    """First nonconstant eigenpair (Riemannian eigenvalue, nodal eigenvector)."""
    ev, vec = linalg.eig(weighted_operator(g, u))
    order = np.argsort(ev.real)
    k = order[1]
    return float(ev[k].real), np.real(vec[:, k])


# mu-invariant ------------------------------------------------------------------

@dataclass
class MuResult:
    value: float
    minimizer: np.ndarray  # w with int w^2 dmu = 1
    el_residual: float
    iterations: int
    multiplier: float = math.nan
    converged: bool = True
    tau: float = 1.0

    def dilaton(self, g: TransverseMetric, n: int = 1) -> np.ndarray:
        """f with w = (4 pi tau)^{-n/2} e^{-f/2}."""
        return -n * math.log(FOUR_PI * self.tau) - 2.0 * np.log(self.minimizer)


class _WProblem:
    """Discrete W(g, ., 1) in the variable w = (4 pi)^{-n/2} e^{-f/2}.

    w lives on the collocation nodes; integrals are taken on a grid of twice
    the degree after spectral interpolation.  Nodal quadrature on the
    collocation grid itself under-penalizes node-scale spikes at the poles
    and admits spurious minimizers.
    """

    def __init__(self, g: TransverseMetric, n: int = 1):
        from numpy.polynomial import chebyshev as C

        from .grid import Grid

        self.g, self.n = g, n
        grid = g.grid
        fine = Grid(2 * grid.n)
        self.I = C.chebvander(fine.y, grid.n) @ grid._to_coef
        Af = self.I @ g.A
        Qf = self.I @ g.Q
        self.m = fine.weights * 2.0 * np.pi * Af
        Dw = fine.D @ self.I
        # int 4 |grad w|^2 dmu = 4 pi int Q w'^2 ds  (Kahler normalization)
        self.K = 4.0 * np.pi * Dw.T @ (fine.weights[:, None] * Qf[:, None] * Dw)
        self.Rf = self.I @ (0.5 * curvature(g).scalar)
        self.Rc = 0.5 * curvature(g).scalar
        self.k = n * math.log(FOUR_PI) + 2 * n
        self.L = 0.5 * laplacian_matrix(g)
        self.M = self.I.T @ (self.m[:, None] * self.I)

    def value(self, w):
        wf = self.I @ w
        if np.any(wf <= 0):
            return math.inf
        return float(w @ self.K @ w + self.m @ ((self.Rf - self.k) * wf**2 - 2 * wf**2 * np.log(wf)))

    def gradient(self, w):
        wf = self.I @ w
        return 2 * self.K @ w + self.I.T @ (self.m * (2 * (self.Rf - self.k) * wf - 4 * wf * np.log(wf) - 2 * wf))

    def norm2(self, w):
        return float(w @ self.M @ w)

    def normalize(self, w):
        return w / math.sqrt(self.norm2(w))

    def el(self, w, mu):
        return -4 * self.L @ w + self.Rc * w - 2 * w * np.log(w) - self.k * w - mu * w

    def el_jacobian(self, w, mu):
        J = -4 * self.L + np.diag(self.Rc - 2 * np.log(w) - 2 - self.k - mu)
        return J, -w


def _descend(P: _WProblem, w: np.ndarray, max_iter: int, tol: float) -> tuple[np.ndarray, int]:
    """Preconditioned projected gradient with Armijo backtracking on the sphere."""
    pre = linalg.cho_factor(P.K + 8.0 * P.M)
    J = P.value(w)
    for it in range(1, max_iter + 1):
        grad = P.gradient(w)
        d = -linalg.cho_solve(pre, grad)
        # remove the component along w in the constraint metric
        d -= (w @ P.M @ d) * w
        slope = grad @ d
        if -slope < tol:
            return w, it
        step = 1.0
        while step > 1e-12:
            trial = w + step * d
            if np.all(trial > 0):
                trial = P.normalize(trial)
                Jt = P.value(trial)
                if Jt <= J + 1e-4 * step * slope:
                    break
            step *= 0.5
        else:
            return w, it
        w, J = trial, Jt
    return w, max_iter


def _polish(P: _WProblem, w: np.ndarray, iters: int = 20) -> tuple[np.ndarray, float]:
    """Newton on the collocated Euler-Lagrange system with the constraint."""
    mu = P.value(w)
    for _ in range(iters):
        r = P.el(w, mu)
        c = P.norm2(w) - 1.0
        if np.abs(r).max() < 1e-13 and abs(c) < 1e-14:
            break
        J, col = P.el_jacobian(w, mu)
        n = len(w)
        M = np.zeros((n + 1, n + 1))
        M[:n, :n] = J
        M[:n, n] = col
        M[n, :n] = 2 * P.M @ w
        # near-symmetric states make M nearly singular; least squares is safe
        delta = np.linalg.lstsq(M, -np.append(r, c), rcond=1e-13)[0]
        step = 1.0
        while np.any(w + step * delta[:n] <= 0):
            step *= 0.5
        w = w + step * delta[:n]
        mu = mu + step * delta[n]
    return w, mu


def mu(g: TransverseMetric, tau: float = 1.0, n: int = 1, restarts: int = 8, seed: int = 0,
       max_iter: int = 400, tol: float = 1e-12) -> MuResult:
    """Infimum of W(g, f, tau) over the normalized constraint set.

    tau != 1 is reduced to tau = 1 by the scale invariance
    W(g, f, tau) = W(g / tau, f, 1).
    """
    if not tau > 0:
        raise NonPositiveTau(f"tau must be positive, got {tau}")
    gs = g.scaled(1.0 / tau) if tau != 1.0 else g
    P = _WProblem(gs, n)
    rng = np.random.default_rng(seed)
    y = 2.0 * gs.grid.s - 1.0
    basis = np.array([np.polynomial.legendre.legval(y, np.eye(6)[k]) for k in range(1, 6)])
    best = None
    total = 0
    for r in range(restarts):
        coef = np.zeros(5) if r == 0 else 0.6 * rng.standard_normal(5)
        w0 = P.normalize(np.exp(coef @ basis))
        w, it = _descend(P, w0, max_iter, tol)
        total += it
        val = P.value(w)
        if best is None or val < best[0]:
            best = (val, w)
    w, lam = _polish(P, best[1])
    if not np.all(w > 0) or P.value(w) > best[0] + 1e-9:
        w, lam = best[1], best[0]
    res = float(np.abs(P.el(w, lam)).max())
    value = P.value(w)
    return MuResult(value=value, minimizer=w, el_residual=res, iterations=total,
                    multiplier=lam, converged=res < 1e-6, tau=tau)


def w_value(g: TransverseMetric, w: np.ndarray, n: int = 1) -> float:
    """Discrete W(g, ., 1) at a positive w (no normalization applied)."""
    return _WProblem(g, n).value(w)
