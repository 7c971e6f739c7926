"""Tube volumes on the irregular weighted sphere with weights (1, sqrt 2).

Generic Reeb orbits are dense in 2-tori, so tubes about them grow like r^1
instead of r^2.  The fitted leading coefficients are compared with the Gray
expansion, and the transverse diameter and weighted spectral gap are shown.
"""
import math

import numpy as np

from sasakiflow import flow, tubes
from sasakiflow.functionals import weighted_lambda1
from sasakiflow.models import build_model, orbit_closure_rank
from sasakiflow.transverse import TransverseMetric

model = build_model("weighted", 1.0, math.sqrt(2.0), grid=64)
g = TransverseMetric.kahler(model, model.background)
radii = np.linspace(0.02, 0.1, 5)

for s in (0.0, 0.5, 1.0):
    rep = tubes.gray_fit(model, g, s, radii)
    print(f"orbit at s={s:.1f}: closure rank {orbit_closure_rank(model, s)}, "
          f"fitted/expected = {rep.ratio:.8f}")
print("transverse diameter:", tubes.transverse_diameter(g))
print("Kahler lambda1 of the weighted operator:",
      weighted_lambda1(g, flow.ricci_potential(g), "kahler"))
