"""Model Sasaki 3-spheres with Reeb field xi = a H1 + b H2.

S^3 sits in C^2 with leaf coordinate s = |z1|^2.  The weighted contact form
is eta = eta_round / (a |z1|^2 + b |z2|^2).  On torus-invariant data the
transverse Kahler geometry reduces to profiles in s:

* D(s) = a s + b (1 - s)
* q(s) = 2 s (1 - s) / D(s), the chart factor d/dtau = q d/ds where
  tau + i psi is the log transverse holomorphic coordinate
* A(s) = transverse area density per unit s and unit angle

The transverse Riemannian metric is (A/q) ds^2 + (q A) dpsi^2.  The
background is dilated by lambda = 2 (a + b) so that the basic class of the
transverse Ricci form equals the class of the metric (kappa = 1).
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .grid import Grid

TWO_PI = 2.0 * np.pi


class Family(str, enum.Enum):
    ROUND = "round"
    WEIGHTED = "weighted"


@dataclass(frozen=True, eq=False)
class ModelSpec:
    family: Family
    a: float
    b: float
    grid: Grid
    n: int = 1
    kappa: float = 1.0
    scale: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "scale", 2.0 * (self.a + self.b))

    def __repr__(self):
        return f"ModelSpec({self.family.value}, a={self.a!r}, b={self.b!r}, N={self.grid.n})"

    # closed-form profiles -------------------------------------------------
    def D(self, s):
        s = np.asarray(s, dtype=float)
        return self.a * s + self.b * (1.0 - s)

    def q(self, s):
        s = np.asarray(s, dtype=float)
        return 2.0 * s * (1.0 - s) / self.D(s)

    def dq(self, s):
        s = np.asarray(s, dtype=float)
        d = self.D(s)
        return 2.0 * ((1.0 - 2.0 * s) * d - s * (1.0 - s) * (self.a - self.b)) / d**2

    def d2q(self, s):
        # q = 2 s (1-s) / D with D linear: q'' = (-4 D^2 - 2 (1-2s) D D' ... ) / D^3
        s = np.asarray(s, dtype=float)
        d = self.D(s)
        dd = self.a - self.b
        num = 2.0 * s * (1.0 - s)
        dnum = 2.0 - 4.0 * s
        return -4.0 / d - 2.0 * dnum * dd / d**2 + 2.0 * num * dd**2 / d**3

    def background_area(self, s):
        return self.scale / (2.0 * self.D(s) ** 2)

    def background_potential(self, s):
        """Chart Kahler potential of the background, -lambda/(2b) log(1 - s).

        Any chart potential on the leaf space diverges at one pole; this one
        is finite on [0, 1).  Its complex Hessian reproduces background_area.
        """
        s = np.asarray(s, dtype=float)
        with np.errstate(divide="ignore"):
            return -self.scale / (2.0 * self.b) * np.log1p(-s)

    # nodal caches ---------------------------------------------------------
    @property
    def s(self) -> np.ndarray:
        return self.grid.s

    @property
    def q_nodes(self) -> np.ndarray:
        return self.q(self.grid.s)

    @property
    def dq_nodes(self) -> np.ndarray:
        return self.dq(self.grid.s)

    @property
    def d2q_nodes(self) -> np.ndarray:
        return self.d2q(self.grid.s)

    @property
    def background(self) -> np.ndarray:
        return self.background_area(self.grid.s)

    def with_grid(self, grid: Grid) -> "ModelSpec":
        return ModelSpec(self.family, self.a, self.b, grid)

    # contact structure ----------------------------------------------------
    def reeb(self, x: np.ndarray) -> np.ndarray:
        """Reeb field at points x = (x1, y1, x2, y2) of R^4, shape (..., 4)."""
        x1, y1, x2, y2 = np.moveaxis(x, -1, 0)
        return np.stack([-self.a * y1, self.a * x1, -self.b * y2, self.b * x2], axis=-1)

    def contact_form(self, x: np.ndarray) -> np.ndarray:
        x1, y1, x2, y2 = np.moveaxis(x, -1, 0)
        den = self.a * (x1**2 + y1**2) + self.b * (x2**2 + y2**2)
        return np.stack([-y1, x1, -y2, x2], axis=-1) / den[..., None]

    def contact_differential(self, x: np.ndarray) -> np.ndarray:
        """d(eta) as an antisymmetric matrix field, analytic Jacobian."""
        x1, y1, x2, y2 = np.moveaxis(x, -1, 0)
        den = self.a * (x1**2 + y1**2) + self.b * (x2**2 + y2**2)
        num = np.stack([-y1, x1, -y2, x2], axis=-1)
        dnum = np.array([[0, -1, 0, 0], [1, 0, 0, 0], [0, 0, 0, -1], [0, 0, 1, 0]], float)
        dden = np.stack([2 * self.a * x1, 2 * self.a * y1, 2 * self.b * x2, 2 * self.b * y2], axis=-1)
        # J[..., j, i] = d eta_j / d x_i
        J = dnum / den[..., None, None] - num[..., :, None] * dden[..., None, :] / den[..., None, None] ** 2
        return np.swapaxes(J, -1, -2) - J

    def contact_residuals(self, n_points: int = 2000, seed: int = 0) -> tuple[float, float]:
        """max |eta(xi) - 1| and max |i_xi d eta| on tangent vectors of S^3."""
        rng = np.random.default_rng(seed)
        x = rng.standard_normal((n_points, 4))
        x /= np.linalg.norm(x, axis=1, keepdims=True)
        xi = self.reeb(x)
        eta = self.contact_form(x)
        r1 = np.abs(np.einsum("ni,ni->n", eta, xi) - 1.0).max()
        deta = self.contact_differential(x)
        contracted = np.einsum("ni,nij->nj", xi, deta)
        # project away the radial direction (normal to S^3)
        contracted -= np.einsum("nj,nj->n", contracted, x)[:, None] * x
        r2 = np.abs(contracted).max()
        return float(r1), float(r2)

    # leaf-space data ------------------------------------------------------
    @property
    def is_quasi_regular(self) -> bool:
        ratio = self.a / self.b
        frac = Fraction(ratio).limit_denominator(1000)
        return abs(ratio - frac.numerator / frac.denominator) < 1e-12


def build_model(family, a: float = 1.0, b: float = 1.0, grid: int | Grid = 64) -> ModelSpec:
    family = Family(family.lower() if isinstance(family, str) else family)
    if not (a > 0 and b > 0):
        raise ValueError(f"Reeb weights must be positive, got a={a}, b={b}")
    if family is Family.ROUND and a != b:
        raise ValueError("the round family requires a == b")
    if family is Family.ROUND:
        a = b = 1.0
    if not isinstance(grid, Grid):
        grid = Grid(grid)
    model = ModelSpec(family, float(a), float(b), grid)
    if np.any(model.background[1:-1] <= 0):
        raise ValueError("background transverse metric is not positive")
    return model


def orbit_closure_rank(model: ModelSpec, s: float) -> int:
    """Dimension of the closure of the Reeb orbit through leaf coordinate s."""
    if not 0.0 <= s <= 1.0:
        raise ValueError(f"s must lie in [0, 1], got {s}")
    if s in (0.0, 1.0) or model.is_quasi_regular:
        return 1
    return model.n + 1


def orbit_closure_volume(model: ModelSpec, s: float, G: float | None = None) -> float:
    """Measure of the orbit closure through s, in the units of dmu.

    dmu is the Sasaki volume divided by 2 pi, so a circle of length L has
    measure L / (2 pi) and the torus {s = const} has measure 2 pi sqrt(G),
    G being the transverse psi-psi metric coefficient q A.
    """
    q = orbit_closure_rank(model, s)
    if q == 1:
        if s == 0.0:
            return 1.0 / model.b
        if s == 1.0:
            return 1.0 / model.a
        # closed generic orbit of a quasi-regular structure: period in theta
        frac = Fraction(model.a / model.b).limit_denominator(1000)
        period = TWO_PI * frac.numerator / model.a
        return period / TWO_PI
    if G is None:
        G = float(model.q(s) * model.background_area(s))
    return TWO_PI * np.sqrt(G)
