import math
from pathlib import Path

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sasakiflow.conjugate import random_dilaton
from sasakiflow.models import build_model
from sasakiflow.transverse import (
    PositivityLost, TransverseMetric, basic_laplacian, curvature, grad_norm_sq,
    hessian_normalized, integrate, laplacian_matrix, metric_from_potential, volume,
)

FIXTURES = Path(__file__).parent / "fixtures"
MODELS = {"round": ("round", 1.0, 1.0), "weighted": ("weighted", 1.0, math.sqrt(2.0))}


def _load(name):
    lines = (FIXTURES / f"{name}_background.txt").read_text().splitlines()
    vol = float(next(l for l in lines if l.startswith("# volume")).split()[-1])
    return np.loadtxt(FIXTURES / f"{name}_background.txt"), vol


@pytest.mark.parametrize("name", list(MODELS))
def test_background_matches_symbolic_fixture(name):
    """Independent sympy derivation from the ambient contact data."""
    data, vol = _load(name)
    m = build_model(*MODELS[name], grid=64)
    g = TransverseMetric.kahler(m, m.background)
    s = data[:, 0]
    R = m.grid.evaluate(curvature(g).scalar, s)
    dens = m.grid.evaluate(g.density, s)
    # E = A/Q is singular at the poles, so interpolate A and use the exact q
    A = m.grid.evaluate(g.A, s)
    E, G = A / m.q(s), A * m.q(s)
    assert np.allclose(R, data[:, 1], rtol=1e-10)
    assert np.allclose(dens, data[:, 2], rtol=1e-10)
    assert np.allclose(E, data[:, 3], rtol=1e-10)
    assert np.allclose(G, data[:, 4], rtol=1e-10, atol=1e-14)
    assert volume(g) == pytest.approx(vol, rel=1e-10)


@pytest.fixture(scope="module")
def perturbed():
    m = build_model("weighted", 1.0, math.sqrt(2.0), grid=64)
    phi = 0.05 * np.cos(2 * np.pi * m.s) + 0.03 * m.s**2
    return m, metric_from_potential(m, phi)


def test_laplacian_self_adjoint(perturbed):
    m, g = perturbed
    rng = np.random.default_rng(3)
    f, h = random_dilaton(m.grid, rng), random_dilaton(m.grid, rng)
    lhs = integrate(g, h * basic_laplacian(g, f))
    rhs = integrate(g, f * basic_laplacian(g, h))
    assert abs(lhs - rhs) < 1e-11


def test_integration_by_parts(perturbed):
    m, g = perturbed
    f = random_dilaton(m.grid, np.random.default_rng(4))
    assert abs(integrate(g, basic_laplacian(g, f))) < 1e-11
    lhs = integrate(g, f * basic_laplacian(g, f))
    assert abs(lhs + integrate(g, grad_norm_sq(g, f))) < 1e-10


def test_laplacian_matrix_agrees(perturbed):
    m, g = perturbed
    f = np.sin(2 * m.s)
    assert np.allclose(laplacian_matrix(g) @ f, basic_laplacian(g, f), atol=1e-10)


def test_round_spectrum():
    m = build_model("round", grid=64)
    g = TransverseMetric.kahler(m, m.background)
    # first zonal eigenfunction of the round leaf space: 2 s - 1
    f = 2 * m.s - 1
    assert np.allclose(basic_laplacian(g, f), -2 * f, atol=1e-11)


def test_gauss_bonnet(perturbed):
    m, g = perturbed
    # R A = -(Q' + Q A'/A)', so the total only sees Q' at the poles
    expected = 2 * np.pi * (m.dq(0.0) - m.dq(1.0))
    assert integrate(g, curvature(g).scalar) == pytest.approx(expected, rel=1e-11)


@given(st.floats(0.1, 10.0))
@settings(max_examples=20, deadline=None)
def test_scaling(c):
    m = build_model("round", grid=32)
    g = TransverseMetric.kahler(m, m.background * (1 + 0.1 * m.s))
    gc = g.scaled(c)
    assert np.allclose(curvature(gc).scalar, curvature(g).scalar / c, rtol=1e-12)
    assert volume(gc) == pytest.approx(c * volume(g), rel=1e-13)
    f = np.cos(m.s)
    assert np.allclose(basic_laplacian(gc, f), basic_laplacian(g, f) / c, rtol=1e-12, atol=1e-13)


def test_hessian_trace_is_laplacian(perturbed):
    m, g = perturbed
    f = random_dilaton(m.grid, np.random.default_rng(5))
    hss, hpp = hessian_normalized(g, f)
    # Kahler-normalized trace (hss + hpp) / 2 is half the Riemannian Laplacian
    assert np.allclose(hss + hpp, basic_laplacian(g, f), atol=1e-10)


def test_positivity_lost():
    m = build_model("round", grid=32)
    with pytest.raises(PositivityLost):
        metric_from_potential(m, -10.0 * m.s**2)
