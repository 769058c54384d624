"""The free boundary relaxes monotonically to equilibrium.

At the boundary the specific volume obeys a scalar ODE whose orbit stays
between its starting value and the equilibrium ``xi*``.  We start the gas
at rest, compressed and expanded, and watch ``pi(t)`` approach ``xi*``.
Shrinking ``mu`` makes the boundary ODE stiffer, and its adaptive
sub-stepper needs more steps to cross the fast transient.
"""

import warnings

import numpy as np

from barogalerkin import ModelParams, run, stationary_xi
from barogalerkin.boundary import BoundaryState, advance_pi, pi_bounds, relaxation_rate
from barogalerkin.presets import boundary_relax

# these presets do not normalise the total mass
warnings.filterwarnings("ignore", "A2 unit mass")

params = ModelParams(N=16)
xs = stationary_xi(params)
rate = relaxation_rate(params)
print(f"xi* = {xs:g}, relaxation rate = {rate:g}")

for factor in (0.5, 2.0):
    t_end = 10 / rate
    traj = run(boundary_relax(params, factor=factor), params, t_end, output_times=np.linspace(0, t_end, 6))
    lo, hi = pi_bounds(factor * xs, params)
    print(f"\npi(0) = {factor * xs:g}, bracket [{lo:g}, {hi:g}]")
    for rec in traj.records:
        print(f"  t={rec.t:6.3f}  pi={rec.pi:.10f}  |pi - xi*|={abs(rec.pi - xs):.2e}  S={rec.S:.6f}")

print("\nstiffness: boundary ODE from pi = 1.5 xi* advanced over one unit of time")
for mu in (0.1, 0.01, 0.001):
    p = params.replace(mu=mu)
    end = advance_pi(BoundaryState(1.5 * xs), 1.0, p)
    print(f"  mu={mu:<6g} rate={relaxation_rate(p):9.1f}  sub-steps={end.substeps:5d}  |pi - xi*|={abs(end.pi - xs):.1e}")
