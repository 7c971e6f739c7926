"""Energy and entropy monotonicity for a dilaton solved backwards in time.

The unnormalized flow is rebuilt from a normalized run, a random terminal
dilaton is evolved by the conjugate heat equation, and F and W are tabulated.
Both columns are nondecreasing and the conjugate mass stays at one.
"""
import numpy as np

from sasakiflow import conjugate, flow
from sasakiflow.functionals import dF_dt_formula, energy_F, entropy_W
from sasakiflow.models import build_model

model = build_model("round", grid=48)
traj = flow.run_flow(model, flow.p2_perturbation(model, 0.15), 1.0, 0.01)
un = flow.to_unnormalized(traj, t_max=0.6, n_states=641)

g_T = un.metric_at(un.t_final)
rng = np.random.default_rng(0)
f_T = conjugate.random_dilaton(model.grid, rng, amplitude=0.3)
pF = conjugate.solve_backward_F(un, conjugate.normalize_dilaton(g_T, f_T))
pW = conjugate.solve_backward_W(un, conjugate.normalize_dilaton(g_T, f_T, 0.5), 0.5)
mass = conjugate.conjugate_mass(un, pF)

print(f"{'t~':>6} {'F':>10} {'dF/dt':>10} {'W':>10} {'mass':>14}")
for k in range(0, len(un.times), 64):
    g = un.metric_at(un.times[k])
    print(f"{un.times[k]:6.3f} {energy_F(g, pF.fields[k]):10.6f} {dF_dt_formula(g, pF.fields[k]):10.6f} "
          f"{entropy_W(g, pW.fields[k], pW.tau[k]):10.6f} {mass[k]:14.12f}")
print("PDE residual:", conjugate.pde_residual(un, pF))
