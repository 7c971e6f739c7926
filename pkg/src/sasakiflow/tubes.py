"""Transverse distance, tubes and volume growth.

For torus-invariant metrics the transverse distance between orbit-closure
classes is the distance between the levels of s,

    d(s1, s2) = | int_{s1}^{s2} sqrt(A / Q) ds |,

computed in the polar angle sigma = arccos(1 - 2 s), where the integrand
sqrt(A s (1 - s) / Q) / 1 is smooth up to both poles.  This is the exact
transverse distance whenever orbit closures are the levels of s (irregular
weights, or a pole as base point).  On a round leaf space, orbit closures
are single circles; tubes about interior circles of a constant-curvature
metric use the spherical cap formula.

Volumes are in units of dmu (Sasaki volume / 2 pi).  Curvature bounds in
this module use the Riemannian scalar curvature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .models import ModelSpec, orbit_closure_rank
from .transverse import TransverseMetric, curvature

FOUR_PI = 4.0 * np.pi


class FitUnstable(ArithmeticError):
    pass


class NotFound(ArithmeticError):
    pass


class DegenerateAnnulus(ValueError):
    pass


class Unsupported(NotImplementedError):
    pass


# distance ------------------------------------------------------------------

def arc_density(g: TransverseMetric) -> np.ndarray:
    """Nodal values of d(distance)/d(sigma) = sqrt(A / Q) ds/dsigma."""
    s = g.grid.s
    ratio = np.empty_like(s)
    inner = slice(1, -1)
    ratio[inner] = s[inner] * (1.0 - s[inner]) / g.Q[inner]
    # limits at the poles where Q vanishes linearly
    ratio[0] = 1.0 / g.dQ[0]
    ratio[-1] = -1.0 / g.dQ[-1]
    return np.sqrt(g.A * ratio)


class DistanceProfile:
    """Level distance from the pole s = 0, d(sigma), with its inverse."""

    def __init__(self, g: TransverseMetric):
        self.g = g
        self.h = arc_density(g)
        self.total = float(g.grid.arc_integral(self.h, np.pi))

    def at_sigma(self, sigma):
        return self.g.grid.arc_integral(self.h, sigma)

    def at_s(self, s):
        s = np.clip(np.asarray(s, dtype=float), 0.0, 1.0)
        return self.at_sigma(np.arccos(1.0 - 2.0 * s))

    def sigma_of(self, d: float) -> float:
        if d <= 0.0:
            return 0.0
        if d >= self.total:
            return math.pi
        return brentq(lambda x: float(self.at_sigma(x)) - d, 0.0, math.pi, xtol=1e-14)

    def s_of(self, d: float) -> float:
        return 0.5 * (1.0 - math.cos(self.sigma_of(d)))


def transverse_distance(g: TransverseMetric, s1: float, s2: float) -> float:
    prof = DistanceProfile(g)
    return float(abs(prof.at_s(s2) - prof.at_s(s1)))


def transverse_diameter(g: TransverseMetric) -> float:
    return DistanceProfile(g).total


def distance_gradient_norm(g: TransverseMetric) -> np.ndarray:
    """|grad h| for h = distance from the pole level, at interior nodes."""
    prof = DistanceProfile(g)
    s = g.grid.s[1:-1]
    sigma = np.arccos(1.0 - 2.0 * s)
    dd_dsigma = g.grid.arc_derivative(prof.h, sigma)
    dd_ds = dd_dsigma / np.sqrt(s * (1.0 - s))  # dsigma/ds = 1/sqrt(s(1-s))
    return np.abs(dd_ds) * np.sqrt(g.Q[1:-1] / g.A[1:-1])


# tube volumes ----------------------------------------------------------------

def _is_constant_curvature(g: TransverseMetric, tol: float = 1e-9) -> bool:
    R = curvature(g).scalar
    return float(np.ptp(R)) < tol * max(1.0, abs(R.mean()))


def _mass(g: TransverseMetric, s_lo: float, s_hi: float) -> float:
    c = g.grid.cumulative(g.A, np.array([s_lo, s_hi]))
    return float(2.0 * np.pi * (c[1] - c[0]))


def tube_volume(model: ModelSpec, g: TransverseMetric, center_s: float, r: float) -> float:
    if r < 0:
        raise ValueError("radius must be non-negative")
    if r == 0:
        return 0.0
    interior = 0.0 < center_s < 1.0
    if interior and orbit_closure_rank(model, center_s) == 1:
        # closure is one circle, not a level of s
        if not _is_constant_curvature(g):
            raise Unsupported("tubes about interior closed orbits need a homogeneous leaf space")
        K = 0.5 * float(curvature(g).scalar.mean())
        total = g.grid.integrate(g.density)
        rr = min(r, math.pi / math.sqrt(K))
        return min(total, 2.0 * np.pi * (1.0 - math.cos(math.sqrt(K) * rr)) / K)
    prof = DistanceProfile(g)
    dc = float(prof.at_s(center_s))
    s_lo = prof.s_of(dc - r)
    s_hi = prof.s_of(dc + r)
    return _mass(g, s_lo, s_hi)


def orbit_volume(model: ModelSpec, g: TransverseMetric, center_s: float) -> float:
    """Vol(P) of the orbit closure through center_s, in dmu units."""
    q = orbit_closure_rank(model, center_s)
    if q == 2:
        G = float(g.grid.evaluate(g.Q * g.A, center_s))
        return 2.0 * np.pi * math.sqrt(G)
    if center_s == 0.0:
        return 1.0 / model.b
    if center_s == 1.0:
        return 1.0 / model.a
    from fractions import Fraction

    frac = Fraction(model.a / model.b).limit_denominator(1000)
    return frac.numerator / model.a


@dataclass
class TubeReport:
    center_s: float
    radii: list
    volumes: list
    q: int
    fitted_coefficient: float
    expected_coefficient: float
    orbit_volume: float
    correction: float = 0.0

    @property
    def ratio(self) -> float:
        return self.fitted_coefficient / self.expected_coefficient


def gray_fit(model: ModelSpec, g: TransverseMetric, center_s: float, radii) -> TubeReport:
    """Fit V(r) / r^(3 - q) = c0 + c1 r^2 and compare c0 with Gray's law."""
    radii = np.asarray(radii, dtype=float)
    q = orbit_closure_rank(model, center_s)
    vols = np.array([tube_volume(model, g, center_s, r) for r in radii])
    if np.any(np.diff(vols) < 0):
        raise FitUnstable("tube volumes are not monotone")
    y = vols / radii ** (3 - q)
    X = np.column_stack([np.ones_like(radii), radii**2])
    (c0, c1), *_ = np.linalg.lstsq(X, y, rcond=None)
    if abs(c1) * radii.max() ** 2 > 0.5 * abs(c0):
        raise FitUnstable("second-order term dominates; use smaller radii")
    P = orbit_volume(model, g, center_s)
    # (pi r^2)^{(3-q)/2} / Gamma((3-q)/2 + 1)
    k = (3 - q) / 2.0
    expected = math.pi**k / math.gamma(k + 1.0) * P
    return TubeReport(center_s, radii.tolist(), vols.tolist(), q, float(c0), expected, P, float(c1))


# non-collapsing ----------------------------------------------------------------

def _tube_interval(g: TransverseMetric, center_s: float, r: float) -> tuple[float, float]:
    prof = DistanceProfile(g)
    dc = float(prof.at_s(center_s))
    return prof.s_of(dc - r), prof.s_of(dc + r)


def max_curvature_on_tube(g: TransverseMetric, center_s: float, r: float, samples: int = 400) -> float:
    lo, hi = _tube_interval(g, center_s, r)
    s = np.linspace(lo, hi, samples)
    return float(np.abs(g.grid.evaluate(curvature(g).scalar, s)).max())


@dataclass
class NoncollapseResult:
    ratio: float
    vacuous: bool
    max_curvature: float

    def __float__(self):
        return self.ratio


def noncollapse_ratio(model: ModelSpec, g: TransverseMetric, center_s: float, r: float) -> NoncollapseResult:
    """Vol(T(p, r)) / r^2, flagged vacuous when |R| <= 1/r^2 fails on the tube."""
    kmax = max_curvature_on_tube(g, center_s, r)
    ratio = tube_volume(model, g, center_s, r) / r**2
    return NoncollapseResult(ratio, kmax > 1.0 / r**2, kmax)


@dataclass
class RadiusCertificate:
    r_prime: float
    curvature_ok: bool
    scaled_volume_ok: bool
    doubling_ok: bool
    doubling_ratio: float
    volume_difference: float
    ratio_chain: list = field(default_factory=list)

    @property
    def all_hold(self) -> bool:
        return self.curvature_ok and self.scaled_volume_ok and self.doubling_ok


def radius_selection(model: ModelSpec, g: TransverseMetric, center_s: float, r: float,
                     C: float = 1.0, max_halvings: int = 30, n: int = 1) -> RadiusCertificate:
    """First dyadic r' = r / 2^k whose doubling ratio V(r')/V(r'/2) is at most 3^{2n}.

    Certificates: (i) |R| <= C / r'^2 on the tube, (ii) r'^{-2n} V(r') <=
    3^{2n} r^{-2n} V(r), (iii) the doubling ratio itself (the scale-free form
    of the bounded annulus volume).
    """
    bound = 3.0 ** (2 * n)
    Vr = tube_volume(model, g, center_s, r)
    if max_curvature_on_tube(g, center_s, r) > C / r**2:
        raise NotFound("curvature hypothesis fails at the top radius")
    chain = []
    for k in range(max_halvings):
        rp = r / 2**k
        V1 = tube_volume(model, g, center_s, rp)
        V2 = tube_volume(model, g, center_s, rp / 2)
        if V2 <= 0:
            break
        ratio = V1 / V2
        chain.append(ratio)
        if ratio <= bound:
            return RadiusCertificate(
                rp,
                max_curvature_on_tube(g, center_s, rp) <= C / rp**2,
                rp ** (-2 * n) * V1 <= bound * r ** (-2 * n) * Vr * (1 + 1e-12),
                True, ratio, V1 - V2, chain)
    raise NotFound(f"no dyadic radius below {r} qualifies")


# annulus and coarea --------------------------------------------------------------

@dataclass
class AnnulusReport:
    base_s: float
    k1: int
    k2: int
    volume: float
    radii: np.ndarray
    surface: np.ndarray
    r1: float
    r2: float
    slice_ok: tuple
    curvature_integral: float
    coarea_error: float
    slice_volume: float = 0.0  # volume of the slice annulus r1 <= d <= r2


def surface_measure(g: TransverseMetric, center_s: float, r: float) -> float:
    """Coarea density S(r) = dV/dr, the measure of {d = r} in dmu units."""
    prof = DistanceProfile(g)
    dc = float(prof.at_s(center_s))
    total = 0.0
    for d in (dc - r, dc + r):
        if 0.0 < d < prof.total:
            s = prof.s_of(d)
            total += 2.0 * np.pi * math.sqrt(float(g.grid.evaluate(g.Q * g.A, s)))
    return total


def annulus_diagnostics(g: TransverseMetric, u: np.ndarray, k1: int, k2: int,
                        samples: int = 64) -> AnnulusReport:
    """Annulus volumes, slice radii and curvature integral about argmin u."""
    if k1 >= k2:
        raise DegenerateAnnulus("need k1 < k2")
    prof = DistanceProfile(g)
    base = float(g.grid.s[int(np.argmin(u))])
    dc = float(prof.at_s(base))
    reach = max(dc, prof.total - dc)
    if 2.0**k2 > reach:
        raise DegenerateAnnulus(f"2^{k2} exceeds the distance range {reach:.4f}")

    def V(r):
        lo, hi = prof.s_of(dc - r), prof.s_of(dc + r)
        return _mass(g, lo, hi)

    Vann = V(2.0**k2) - V(2.0**k1)

    def pick(a, b, k):
        rs = np.linspace(a, b, samples)
        S = np.array([surface_measure(g, base, x) for x in rs])
        j = int(np.argmin(S))
        return rs[j], S[j] <= 2.0 * Vann / 2.0**k, rs, S

    r1, ok1, rs1, S1 = pick(2.0**k1, 2.0 ** (k1 + 1), k1)
    r2, ok2, rs2, S2 = pick(2.0 ** (k2 - 1), 2.0**k2, k2)
    # curvature integral over the annulus r1 <= d <= r2 (one or two s-intervals)
    R = curvature(g).scalar
    RA = R * g.A
    curv = slice_vol = 0.0
    for lo_d, hi_d in ((dc - r2, dc - r1), (dc + r1, dc + r2)):
        lo_d, hi_d = max(lo_d, 0.0), min(hi_d, prof.total)
        if hi_d > lo_d:
            ends = np.array([prof.s_of(lo_d), prof.s_of(hi_d)])
            c = g.grid.cumulative(RA, ends)
            curv += 2.0 * np.pi * float(c[1] - c[0])
            slice_vol += _mass(g, ends[0], ends[1])
    # coarea identity int_0^r S = V(r) at r = 2^k2
    from scipy.integrate import quad

    rr = 2.0**k2
    breaks = [x for x in (dc, prof.total - dc) if 0 < x < rr]
    coarea = quad(lambda t: surface_measure(g, base, t), 0.0, rr, points=breaks or None,
                  limit=200, epsabs=1e-12, epsrel=1e-10)[0]
    return AnnulusReport(base, k1, k2, Vann, np.concatenate([rs1, rs2]), np.concatenate([S1, S2]),
                         float(r1), float(r2), (bool(ok1), bool(ok2)), curv,
                         abs(coarea - V(rr)) / V(rr), slice_vol)


# Perelman cutoff -----------------------------------------------------------------

def cutoff_profile(x):
    """Smooth psi: 1 on [0, 1/2], 0 on [1, inf), decreasing between."""
    x = np.asarray(x, dtype=float)
    t = np.clip(2.0 * (1.0 - x), 0.0, 1.0)  # 1 at x=1/2, 0 at x=1

    def bump(y):
        with np.errstate(divide="ignore", over="ignore"):
            return np.where(y > 0, np.exp(-1.0 / np.where(y > 0, y, 1.0)), 0.0)

    return bump(t) / (bump(t) + bump(1.0 - t))


def cutoff_profile_derivative(x, h: float = 1e-6):
    return (cutoff_profile(np.asarray(x) + h) - cutoff_profile(np.asarray(x) - h)) / (2 * h)


def cutoff_entropy(g: TransverseMetric, center_s: float, r: float, density_scale: float = 1.0,
                   n: int = 1, nodes: int = 4000) -> float:
    """W of the cutoff test function u = e^C psi(d/r) at scale tau = r^2.

    C is fixed by (4 pi)^n = r^{-2n} int u^2 dmu.  density_scale multiplies
    the volume density only (a synthetic collapsing family).  Kahler traces.
    """
    prof = DistanceProfile(g)
    dc = float(prof.at_s(center_s))
    x, wq = np.polynomial.legendre.leggauss(nodes)
    sigma = 0.5 * np.pi * (x + 1.0)
    wq = 0.5 * np.pi * wq
    s = 0.5 * (1.0 - np.cos(sigma))
    # dmu = 2 pi A ds = 2 pi A (sin sigma / 2) dsigma
    dens = density_scale * 2.0 * np.pi * g.grid.evaluate(g.A, s) * 0.5 * np.sin(sigma)
    R = 0.5 * g.grid.evaluate(curvature(g).scalar, s)
    dist = np.abs(prof.at_sigma(sigma) - dc) / r
    psi = cutoff_profile(dist)
    dpsi = cutoff_profile_derivative(dist) / r
    tau = r * r
    I2 = np.sum(wq * dens * psi**2)
    if I2 <= 0:
        raise DegenerateAnnulus("cutoff has no mass")
    C = 0.5 * math.log((FOUR_PI * tau) ** n / I2)
    u2 = math.exp(2 * C) * psi**2
    grad2 = math.exp(2 * C) * 0.5 * dpsi**2  # |grad d| = 1, Kahler half
    with np.errstate(divide="ignore", invalid="ignore"):
        ulog = np.where(u2 > 0, u2 * np.log(np.where(u2 > 0, u2, 1.0)), 0.0)
    integrand = tau * (R * u2 + 4.0 * grad2) - ulog - 2 * n * u2
    return float(np.sum(wq * dens * integrand) / (FOUR_PI * tau) ** n)


# ambient oracles on the round sphere ----------------------------------------------

def sample_sphere(n_samples: int, seed: int) -> np.ndarray:
    """Uniform points of S^3 in C^2 as complex pairs, shape (n, 2)."""
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((n_samples, 4))
    x /= np.linalg.norm(x, axis=1, keepdims=True)
    return x[:, 0::2] + 1j * x[:, 1::2]


def mc_tube_comparison(model: ModelSpec, g: TransverseMetric, r: float, n_samples: int = 10**6,
                       seed: int = 0) -> dict:
    """Transverse tube vs geodesic tube about the pole circle {z1 = 0}.

    Requires the round model: the Hopf map is a Riemannian submersion onto
    the leaf space, so the ambient distance to the circle is 2 arccos|z2| in
    the transverse scaling used here.  Transverse membership uses the
    quadrature distance profile of g.
    """
    if model.a != model.b:
        raise Unsupported("geodesic tubes are closed-form only on the round sphere")
    z = sample_sphere(n_samples, seed)
    scale = math.sqrt(model.scale) / 2.0
    geo = 2.0 * scale * np.arccos(np.clip(np.abs(z[:, 1]), 0.0, 1.0))
    prof = DistanceProfile(g)
    s = np.abs(z[:, 0]) ** 2
    dT = prof.at_s(s)
    in_geo = geo <= r
    in_T = dT <= r
    vol = g.grid.integrate(g.density)
    return {
        "symmetric_difference": float(np.mean(in_geo ^ in_T)) * vol,
        "mc_volume": float(np.mean(in_geo)) * vol,
        "quadrature_volume": tube_volume(model, g, 0.0, r),
    }


def lipschitz_check(model: ModelSpec, g: TransverseMetric, n_pairs: int = 1000, seed: int = 0) -> float:
    """max over sampled pairs of |h(x) - h(y)| - dist(x, y) on the unit round S^3.

    h is the transverse distance to the pole circle, rescaled to the unit
    sphere whose transverse metric is g / scale.
    """
    if model.a != model.b:
        raise Unsupported("ambient distances are closed-form only on the round sphere")
    x = sample_sphere(n_pairs, seed)
    y = sample_sphere(n_pairs, seed + 1)
    # include same-orbit pairs: y = e^{i t} x
    t = np.random.default_rng(seed + 2).uniform(0, 2 * np.pi, n_pairs // 10)
    x = np.concatenate([x, x[: len(t)]])
    y = np.concatenate([y, np.exp(1j * t)[:, None] * x[: len(t)]])
    prof = DistanceProfile(g)
    unit = 1.0 / math.sqrt(model.scale)
    hx = unit * prof.at_s(np.abs(x[:, 0]) ** 2)
    hy = unit * prof.at_s(np.abs(y[:, 0]) ** 2)
    dist = np.arccos(np.clip(np.real(np.sum(x * np.conj(y), axis=1)), -1.0, 1.0))
    return float(np.max(np.abs(hx - hy) - dist))
