import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sasakiflow.grid import Grid
from sasakiflow.models import (
    Family, build_model, orbit_closure_rank, orbit_closure_volume,
)
from sasakiflow.transverse import TransverseMetric, volume


@pytest.fixture(scope="module")
def grid():
    return Grid(64)


def test_grid_rejects_tiny():
    with pytest.raises(ValueError):
        Grid(8)


def test_poles_are_nodes(grid):
    assert grid.s[0] == 0.0 and grid.s[-1] == 1.0
    assert np.all(np.diff(grid.s) > 0)


@given(st.integers(0, 20))
def test_derivative_exact_on_polynomials(k):
    g = Grid(32)
    f = g.s**k
    exact = k * g.s ** max(k - 1, 0) if k else np.zeros_like(g.s)
    assert np.abs(g.D @ f - exact).max() < 1e-9 * max(1, k**2)


@given(st.integers(0, 40))
def test_quadrature_exact_on_polynomials(k):
    g = Grid(64)
    assert abs(g.integrate(g.s**k) - 1.0 / (k + 1)) < 1e-13


def test_arc_integral_matches_direct(grid):
    f = np.exp(grid.s)
    sig = np.linspace(0, np.pi, 7)
    # int exp((1 - cos x)/2) dx by dense trapezoid
    x = np.linspace(0, np.pi, 200001)
    vals = np.exp((1 - np.cos(x)) / 2)
    cum = np.concatenate([[0], np.cumsum(0.5 * (vals[1:] + vals[:-1]) * np.diff(x))])
    ref = np.interp(sig, x, cum)
    assert np.allclose(grid.arc_integral(f, sig), ref, atol=1e-8)


def test_transfer_and_evaluate(grid):
    f = np.sin(3 * grid.s)
    fine = grid.refine()
    assert np.abs(grid.transfer(f, fine) - np.sin(3 * fine.s)).max() < 1e-13


@pytest.mark.parametrize("family,a,b", [("round", 1, 1), ("weighted", 1, math.sqrt(2)), ("weighted", 2, 3)])
def test_contact_identities(family, a, b):
    m = build_model(family, a, b, grid=32)
    r1, r2 = m.contact_residuals()
    assert r1 < 1e-12 and r2 < 1e-12


@pytest.mark.parametrize("a,b", [(-1, 1), (1, 0), (0, 0)])
def test_nonpositive_weights_rejected(a, b):
    with pytest.raises(ValueError):
        build_model("weighted", a, b)


def test_round_requires_equal_weights():
    with pytest.raises(ValueError):
        build_model("round", 1, 2)


def test_unknown_family():
    with pytest.raises(ValueError):
        build_model("lens", 1, 1)


def test_round_background_volume():
    m = build_model("round", grid=64)
    assert m.family is Family.ROUND
    assert abs(volume(TransverseMetric.kahler(m, m.background)) - 4 * math.pi) < 1e-12


def test_background_potential_generates_area():
    m = build_model("weighted", 1, math.sqrt(2), grid=64)
    # the potential is log-singular at s = 1, so stay away from it
    s = np.linspace(0.05, 0.9, 18)
    h = 1e-5
    phi = m.background_potential
    d1 = (phi(s + h) - phi(s - h)) / (2 * h)
    d2 = (phi(s + h) - 2 * phi(s) + phi(s - h)) / h**2
    A = 0.5 * (m.q(s) * d2 + m.dq(s) * d1)
    assert np.allclose(A, m.background_area(s), rtol=1e-5)


def test_quasi_regular_detection():
    assert build_model("weighted", 2, 3).is_quasi_regular
    assert not build_model("weighted", 1, math.sqrt(2)).is_quasi_regular


def test_orbit_ranks():
    irr = build_model("weighted", 1, math.sqrt(2))
    assert orbit_closure_rank(irr, 0.0) == 1 and orbit_closure_rank(irr, 1.0) == 1
    assert orbit_closure_rank(irr, 0.3) == 2
    qr = build_model("weighted", 2, 3)
    assert orbit_closure_rank(qr, 0.3) == 1
    with pytest.raises(ValueError):
        orbit_closure_rank(irr, 1.5)


def test_orbit_volumes_round():
    m = build_model("round")
    # Hopf fibres of the unit-speed Reeb field have length 2 pi
    assert orbit_closure_volume(m, 0.0) == pytest.approx(1.0)
    assert orbit_closure_volume(m, 0.4) == pytest.approx(1.0)
