"""Spectral convergence in the number of modes.

Analytic initial data has geometrically decaying coefficients, so the
Galerkin solution should converge faster than any power of N.  We compare
N = 8, 16, 32 against an N = 64 reference at a common final time.
"""

import warnings

import numpy as np

from barogalerkin import ModelParams, run
from barogalerkin.galerkin import eval_v, eval_xi
from barogalerkin.presets import analytic_mixed
from barogalerkin.spectral import gauss_legendre

# these presets do not normalise the total mass
warnings.filterwarnings("ignore", "A2 unit mass")

T = 0.05
x, w = gauss_legendre(257)


def final_fields(N):
    p = ModelParams(N=N, tol_ode=1e-13)
    s = run(analytic_mixed(p, amplitude=1e-4, ratio=0.7), p, T, output_times=[T]).final
    return eval_v(s, x), eval_xi(s, x)


v_ref, xi_ref = final_fields(64)
prev = None
for N in (8, 16, 32):
    v, xi = final_fields(N)
    err = np.sqrt(np.dot(w, (v - v_ref) ** 2 + (xi - xi_ref) ** 2))
    note = "" if prev is None else f"  log-ratio {np.log(prev / err):.2f}"
    print(f"N={N:3d}  L2 error {err:.3e}{note}")
    prev = err
