"""Where the energy goes.

Kinetic energy, internal energy and the work against the outer pressure
``P V`` add up to the total.  With a fixed boundary the total only
decreases through viscous dissipation.  When the boundary moves, its work
enters the balance as well.  We print both the plain residual and the
balance that includes the boundary work.
"""

import warnings

import numpy as np

from barogalerkin import ModelParams, run
from barogalerkin.presets import analytic_mixed, boundary_relax

# these presets do not normalise the total mass
warnings.filterwarnings("ignore", "A2 unit mass")

params = ModelParams(N=32)

cases = {
    "mixed modes, boundary at rest": analytic_mixed(params, amplitude=0.02, ratio=0.6),
    "boundary relaxing from 1.2 xi*": boundary_relax(params, factor=1.2),
}
for title, init in cases.items():
    traj = run(init, params, 2.0, output_times=np.linspace(0, 2, 5))
    print(title)
    print("      t    kinetic      internal     P V          dissipated   plain resid  balance")
    for r in traj.records:
        print(
            f"  {r.t:5.2f}  {r.kinetic:.4e}  {r.internal:.6f}  {r.pv:.6f}  "
            f"{r.dissipation_cum:.4e}  {r.energy_residual:+.2e}  {r.energy_balance:+.2e}"
        )
    print()
