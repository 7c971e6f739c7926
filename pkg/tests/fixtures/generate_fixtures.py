"""Regenerate the symbolic background fixtures (needs sympy).

The transverse metric is derived from the ambient data only: contact form
eta = (s dth1 + (1-s) dth2) / D on S^3 with z1 = sqrt(s) e^{i th1},
z2 = sqrt(1-s) e^{i th2}, the complex structure of C^2, and
g^T(X, Y) = (lambda / 2) d eta(X, J Y) on horizontal vectors.  Gaussian
curvature uses the orthogonal-coordinates formula
K = -(1 / (2 sqrt(EG))) d/ds (G_s / sqrt(EG)).

    python tests/fixtures/generate_fixtures.py
"""
from pathlib import Path

import sympy as sp

HERE = Path(__file__).parent
S_SAMPLES = [sp.Rational(k, 20) for k in range(1, 20)]


def background(a, b):
    s = sp.symbols("s", positive=True)
    lam = 2 * (a + b)
    D = a * s + b * (1 - s)
    # coordinates (s, th1, th2); one-forms as coefficient vectors
    eta = sp.Matrix([0, s / D, (1 - s) / D])
    x = sp.symbols("x0:3")
    coords = [s, *x[1:]]
    deta = sp.zeros(3, 3)
    for i in range(3):
        for j in range(3):
            deta[i, j] = sp.diff(eta[j], coords[i]) - sp.diff(eta[i], coords[j])
    d_s = sp.Matrix([1, 0, 0])
    h = sp.Matrix([0, 1 - s, -s])  # horizontal: eta(h) = 0
    # J d_r = d_theta / r on each factor; d_s = d_r1/(2 sqrt s) - d_r2/(2 sqrt(1-s))
    J_ds = sp.Matrix([0, 1 / (2 * s), -1 / (2 * (1 - s))])
    J_h = -2 * s * (1 - s) * d_s
    assert sp.simplify((eta.T * h)[0]) == 0

    def form(X, Y):
        return (X.T * deta * Y)[0]

    E = sp.simplify(lam / 2 * form(d_s, J_ds))
    # psi: rotation of z1 projected along the Reeb field, period 2 pi / b per unit
    xi = sp.Matrix([0, a, b])
    rot = sp.Matrix([0, 1, 0])
    horiz = rot - (eta.T * rot)[0] * xi
    coef = sp.simplify(horiz[1] / h[1])
    Ghh = sp.simplify(lam / 2 * form(h, J_h))
    G = sp.simplify(coef**2 * Ghh / b**2)  # psi normalized to period 2 pi
    W = sp.sqrt(E * G)
    K = sp.simplify(-1 / (2 * W) * sp.diff(sp.diff(G, s) / W, s))
    # eta ^ (lam/2) d eta on (d_s, d_th1, d_th2), integrated over both
    # angles (4 pi^2) and divided by 2 pi
    top = eta[0] * deta[1, 2] - eta[1] * deta[0, 2] + eta[2] * deta[0, 1]
    vol_density = sp.simplify(2 * sp.pi * lam / 2 * sp.Abs(top))
    return s, E, G, 2 * K, vol_density


def write(name, a, b, label):
    s, E, G, R, rho = background(a, b)
    lines = [f"# {label}: s, R (Riemannian scalar), density, E = g(ds, ds), G = g(dpsi, dpsi)"]
    for sv in S_SAMPLES:
        vals = [sv, R.subs(s, sv), rho.subs(s, sv), E.subs(s, sv), G.subs(s, sv)]
        lines.append(" ".join(f"{float(sp.N(v, 30)):.12g}" for v in vals))
    total = sp.integrate(rho, (s, 0, 1))
    lines.append(f"# volume {float(sp.N(total, 30)):.12g}")
    (HERE / name).write_text("\n".join(lines) + "\n")


if __name__ == "__main__":
    write("round_background.txt", sp.Integer(1), sp.Integer(1), "round (1, 1)")
    write("weighted_background.txt", sp.Integer(1), sp.sqrt(2), "weighted (1, sqrt 2)")
