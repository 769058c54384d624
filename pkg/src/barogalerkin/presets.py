"""Named initial-data families.

=================  =======================================================
``stationary``     ``v0 = 0``, ``xi0 = xi*``
``single_mode``    one cosine mode in ``v0`` or one sine mode on top of ``xi*``
``boundary_relax`` uniform ``xi0 = pi0`` at rest; the boundary then relaxes
``custom``         sampled ``x, v, xi`` columns read from a text file
=================  =======================================================
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .errors import ConfigError
from .model import InitialData, ModelParams, stationary_xi
from .spectral import SQRT2, GridField

__all__ = ["PRESETS", "build_initial_data", "stationary", "single_mode", "boundary_relax", "custom", "analytic_mixed"]


def stationary(params: ModelParams) -> InitialData:
    xs = stationary_xi(params)
    return InitialData(lambda x: np.zeros_like(x), lambda x: np.full_like(x, xs), "stationary")


def single_mode(params: ModelParams, k: int = 1, amplitude: float = 1e-4, target: str = "velocity") -> InitialData:
    """Equilibrium plus ``amplitude`` times one basis function.

    ``target="velocity"`` puts ``amplitude * w_k`` into ``v0``;
    ``target="volume"`` adds ``amplitude * s_k`` to ``xi0 = xi*``.
    """
    k = int(k)
    if k < 1:
        raise ConfigError(f"single_mode needs k >= 1, got k={k}")
    xs = stationary_xi(params)
    name = f"single_mode(k={k}, amplitude={amplitude:g}, target={target})"
    if target == "velocity":
        return InitialData(lambda x: amplitude * SQRT2 * np.cos(np.pi * k * x), lambda x: np.full_like(x, xs), name)
    if target == "volume":
        return InitialData(lambda x: np.zeros_like(x), lambda x: xs + amplitude * SQRT2 * np.sin(np.pi * k * x), name)
    raise ConfigError(f"single_mode target must be 'velocity' or 'volume', got {target!r}")


def boundary_relax(params: ModelParams, pi0: float | None = None, factor: float | None = None) -> InitialData:
    """Gas at rest with uniform specific volume ``pi0`` (or ``factor * xi*``)."""
    xs = stationary_xi(params)
    if pi0 is None:
        pi0 = xs * (0.5 if factor is None else float(factor))
    pi0 = float(pi0)
    if not pi0 > 0:
        raise ConfigError(f"boundary_relax needs pi0 > 0, got {pi0}")
    return InitialData(lambda x: np.zeros_like(x), lambda x: np.full_like(x, pi0), f"boundary_relax(pi0={pi0:g})")


def analytic_mixed(params: ModelParams, amplitude: float = 1e-4, ratio: float = 0.7) -> InitialData:
    """Every mode excited with geometrically decaying weights ``ratio**k``.

    Uses the closed forms of ``sum r^k cos(k t)`` and ``sum r^k sin(k t)``,
    so both profiles are analytic and ``xi0`` equals ``xi*`` at both ends.
    """
    r = float(ratio)
    if not 0 < r < 1:
        raise ConfigError("analytic_mixed needs 0 < ratio < 1")
    xs = stationary_xi(params)

    def denom(x):
        return 1.0 - 2.0 * r * np.cos(np.pi * x) + r * r

    def v0(x):
        return amplitude * SQRT2 * (r * np.cos(np.pi * x) - r * r) / denom(x)

    def xi0(x):
        return xs + amplitude * SQRT2 * r * np.sin(np.pi * x) / denom(x)

    return InitialData(v0, xi0, f"analytic_mixed(amplitude={amplitude:g}, ratio={r:g})")


def custom(params: ModelParams, file: str | Path) -> InitialData:
    """Read whitespace or comma separated columns ``x, v, xi`` with a header row.

    The samples must lie on the closed uniform grid ``x_j = j/(M-1)``.
    """
    path = Path(file)
    if not path.is_file():
        raise ConfigError(f"custom initial data file not found: {path}")
    text = path.read_text()
    delim = "," if "," in text.splitlines()[0] else None
    try:
        data = np.loadtxt(path, delimiter=delim, skiprows=1, ndmin=2)
    except ValueError as exc:
        raise ConfigError(f"{path}: cannot parse numeric columns ({exc})") from exc
    if data.shape[1] < 3:
        raise ConfigError(f"{path}: expected columns x, v, xi")
    x = data[:, 0]
    grid = np.linspace(0.0, 1.0, len(x))
    if not np.allclose(x, grid, atol=1e-12):
        raise ConfigError(f"{path}: x column must be the uniform grid on [0, 1]")
    return InitialData(GridField(data[:, 1]), GridField(data[:, 2]), f"custom({path.name})")


PRESETS = {
    "stationary": stationary,
    "single_mode": single_mode,
    "boundary_relax": boundary_relax,
    "analytic_mixed": analytic_mixed,
    "custom": custom,
}


def build_initial_data(name: str, params: ModelParams, **kwargs) -> InitialData:
    try:
        builder = PRESETS[name]
    except KeyError:
        raise ConfigError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    try:
        return builder(params, **kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for preset {name!r}: {exc}") from None
