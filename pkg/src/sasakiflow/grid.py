"""Chebyshev collocation on the leaf coordinate s in [0, 1].

Nodes are the Gauss-Lobatto points s_j = (1 - cos(pi j / N)) / 2, so both
poles s = 0 and s = 1 are nodes.  Smooth basic functions on the sphere are
smooth functions of s up to the poles, which makes a global polynomial
basis spectrally accurate.  The same nodes are equispaced in the polar
angle sigma = arccos(1 - 2 s), which is used for arc-length integrals.
"""
from __future__ import annotations

from functools import cached_property

import numpy as np
from numpy.polynomial import chebyshev as C


class Grid:
    """Spectral grid of degree ``n`` (``n + 1`` nodes)."""

    def __init__(self, n: int = 64):
        if n < 16:
            raise ValueError(f"grid size must be >= 16, got {n}")
        self.n = int(n)
        j = np.arange(self.n + 1)
        self.sigma = np.pi * j / self.n
        self.y = -np.cos(self.sigma)  # Chebyshev variable y = 2 s - 1
        self.y[0], self.y[-1] = -1.0, 1.0
        self.s = 0.5 * (1.0 + self.y)
        if self.n % 2 == 0:
            self.y[self.n // 2] = 0.0
            self.s[self.n // 2] = 0.5

    def __repr__(self):
        return f"Grid(n={self.n})"

    def __eq__(self, other):
        return isinstance(other, Grid) and other.n == self.n

    def __hash__(self):
        return hash(("Grid", self.n))

    @property
    def size(self) -> int:
        return self.n + 1

    @cached_property
    def _to_coef(self) -> np.ndarray:
        return np.linalg.inv(C.chebvander(self.y, self.n))

    def coef(self, values: np.ndarray) -> np.ndarray:
        """Chebyshev coefficients (in y = 2s - 1) of nodal values."""
        return self._to_coef @ np.asarray(values, dtype=float)

    @cached_property
    def D(self) -> np.ndarray:
        """First-derivative matrix d/ds."""
        n = self.n
        x = np.cos(self.sigma)
        c = np.ones(n + 1)
        c[0] = c[-1] = 2.0
        c *= (-1.0) ** np.arange(n + 1)
        X = np.tile(x, (n + 1, 1)).T
        dX = X - X.T
        Dx = np.outer(c, 1.0 / c) / (dX + np.eye(n + 1))
        Dx -= np.diag(Dx.sum(axis=1))
        # x = cos(sigma) = 1 - 2 s, so d/ds = -2 d/dx
        return -2.0 * Dx

    def diff(self, values: np.ndarray) -> np.ndarray:
        return self.D @ values

    @cached_property
    def weights(self) -> np.ndarray:
        """Clenshaw-Curtis quadrature weights for ds on [0, 1]."""
        n = self.n
        w = np.zeros(n + 1)
        theta = self.sigma
        v = np.ones(n - 1)
        inner = theta[1:-1]
        if n % 2 == 0:
            w[0] = w[n] = 1.0 / (n**2 - 1)
            for k in range(1, n // 2):
                v -= 2.0 * np.cos(2 * k * inner) / (4 * k**2 - 1)
            v -= np.cos(n * inner) / (n**2 - 1)
        else:
            w[0] = w[n] = 1.0 / n**2
            for k in range(1, (n - 1) // 2 + 1):
                v -= 2.0 * np.cos(2 * k * inner) / (4 * k**2 - 1)
        w[1:-1] = 2.0 * v / n
        return 0.5 * w

    def integrate(self, values: np.ndarray) -> float:
        return float(self.weights @ values)

    def evaluate(self, values: np.ndarray, s) -> np.ndarray:
        """Spectral interpolation of nodal values at arbitrary s."""
        return C.chebval(2.0 * np.asarray(s, dtype=float) - 1.0, self.coef(values))

    def cumulative(self, values: np.ndarray, s) -> np.ndarray:
        """Antiderivative int_0^s of the interpolant."""
        a = C.chebint(self.coef(values), lbnd=-1.0)
        return 0.5 * C.chebval(2.0 * np.asarray(s, dtype=float) - 1.0, a)

    def arc_integral(self, values: np.ndarray, sigma) -> np.ndarray:
        """int_0^sigma g(sigma') d sigma' for g given at the nodes.

        With y = -cos(sigma), T_k(y) = (-1)^k cos(k sigma), so the
        antiderivative of the Chebyshev series is a closed-form sine series.
        """
        a = self.coef(values)
        sigma = np.asarray(sigma, dtype=float)
        k = np.arange(1, self.n + 1)
        sign = (-1.0) ** k
        out = a[0] * sigma
        out = out + np.tensordot(np.sin(np.multiply.outer(sigma, k)), sign * a[1:] / k, axes=([-1], [0]))
        return out

    def arc_derivative(self, values: np.ndarray, sigma) -> np.ndarray:
        """Evaluate g(sigma) itself from the same cosine series."""
        a = self.coef(values)
        sigma = np.asarray(sigma, dtype=float)
        k = np.arange(self.n + 1)
        return np.tensordot(np.cos(np.multiply.outer(sigma, k)), ((-1.0) ** k) * a, axes=([-1], [0]))

    def refine(self) -> "Grid":
        return Grid(2 * self.n)

    def transfer(self, values: np.ndarray, target: "Grid") -> np.ndarray:
        """Interpolate nodal values onto another grid."""
        return self.evaluate(values, target.s)
