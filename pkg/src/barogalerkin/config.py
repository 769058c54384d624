"""YAML run configuration.

Schema (``schema_version: 1``)::

    schema_version: 1
    model:      {a, gamma, mu, P, R, N, oversample, M, xi_floor}
    time:       {t_end, tol_ode, output_dt, dt}
    initial:    {preset: <name>, ...preset parameters...}
    output:     {directory, formats: [csv, json], snapshot_times: [...]}
    monitors:   {hard: [...], soft: [...], energy_rtol, mean_v_atol, ...}
    mutations:  []

Every block except ``initial`` is optional.  ``time.dt`` switches to fixed
steps; without it the step adapts to ``tol_ode``.  Errors carry the file
name, the line and the dotted field path.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import yaml

from .diagnostics import MonitorConfig
from .errors import ConfigError
from .galerkin import MUTATIONS
from .model import InitialData, ModelParams
from .presets import PRESETS, build_initial_data

__all__ = ["RunConfig", "load_config", "parse_config", "SCHEMA_VERSION"]

SCHEMA_VERSION = 1

_BLOCKS = {
    "model": {"a", "gamma", "mu", "P", "R", "N", "oversample", "M", "xi_floor"},
    "time": {"t_end", "tol_ode", "output_dt", "dt"},
    "output": {"directory", "formats", "snapshot_times"},
    "monitors": {f.name for f in dataclasses.fields(MonitorConfig)},
}
_TOP = {"schema_version", "initial", "mutations", *_BLOCKS}


@dataclass
class RunConfig:
    params: ModelParams
    preset: str
    preset_args: dict
    t_end: float = 1.0
    output_dt: float | None = None
    dt: float | None = None
    directory: str = "output"
    formats: tuple = ("csv", "json")
    snapshot_times: tuple = ()
    monitors: MonitorConfig = field(default_factory=MonitorConfig)
    mutations: frozenset = frozenset()
    source: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    def initial_data(self) -> InitialData:
        args = dict(self.preset_args)
        if self.preset == "custom" and "file" in args:
            path = Path(args["file"])
            args["file"] = path if path.is_absolute() else self.base_dir / path
        return build_initial_data(self.preset, self.params, **args)

    def output_times(self) -> np.ndarray:
        if self.output_dt:
            n = int(round(self.t_end / self.output_dt))
            times = np.linspace(0.0, n * self.output_dt, n + 1)
            times = times[times <= self.t_end]
        else:
            times = np.linspace(0.0, self.t_end, 101)
        return np.unique(np.concatenate([times, [self.t_end], self.snapshot_times]))

    def with_overrides(self, **params) -> "RunConfig":
        return dataclasses.replace(self, params=self.params.replace(**params))


def _line_index(node, prefix=(), out=None):
    """Map dotted key paths to 1-based line numbers from a composed YAML tree."""
    out = {} if out is None else out
    if isinstance(node, yaml.MappingNode):
        for key, value in node.value:
            path = prefix + (str(key.value),)
            out[".".join(path)] = key.start_mark.line + 1
            _line_index(value, path, out)
    return out


class _Where:
    def __init__(self, lines, source):
        self.lines = lines
        self.source = source

    def error(self, path, msg):
        line = self.lines.get(path)
        loc = f"{self.source}:{line}" if line else self.source
        return ConfigError(f"{loc}: field '{path}': {msg}")


def _number(where, block, key, value, kind=float):
    path = f"{block}.{key}"
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise where.error(path, f"expected a number, got {value!r}")
    if kind is int and int(value) != value:
        raise where.error(path, f"expected an integer, got {value!r}")
    return kind(value)


def parse_config(data, source: str = "<config>", lines=None, base_dir: Path = Path(".")) -> RunConfig:
    """Validate a loaded mapping and build a :class:`RunConfig`."""
    where = _Where(lines or {}, source)
    if not isinstance(data, dict):
        raise ConfigError(f"{source}: top level must be a mapping")
    unknown = set(data) - _TOP
    if unknown:
        key = sorted(unknown)[0]
        raise where.error(key, f"unknown block; allowed: {sorted(_TOP)}")
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise where.error("schema_version", f"expected {SCHEMA_VERSION}, got {version!r}")

    blocks = {}
    for name, allowed in _BLOCKS.items():
        block = data.get(name) or {}
        if not isinstance(block, dict):
            raise where.error(name, "expected a mapping")
        extra = set(block) - allowed
        if extra:
            key = sorted(extra)[0]
            raise where.error(f"{name}.{key}", f"unknown field; allowed: {sorted(allowed)}")
        blocks[name] = block

    model = {}
    ints = {"R", "N", "oversample", "M"}
    for key, value in blocks["model"].items():
        model[key] = _number(where, "model", key, value, int if key in ints else float)
    time = blocks["time"]
    if "tol_ode" in time:
        model["tol_ode"] = _number(where, "time", "tol_ode", time["tol_ode"])
    try:
        params = ModelParams(**model)
    except ConfigError as exc:
        msg = str(exc)
        bad = next((k for k in model if msg.startswith(k) or f" {k} " in msg or f"({k}=" in msg), None)
        if bad:
            raise where.error(f"model.{bad}", msg) from None
        raise ConfigError(f"{source}: model: {msg}") from None

    t_end = _number(where, "time", "t_end", time.get("t_end", 1.0))
    if not t_end > 0:
        raise where.error("time.t_end", "must be positive")
    output_dt = time.get("output_dt")
    if output_dt is not None:
        output_dt = _number(where, "time", "output_dt", output_dt)
        if not output_dt > 0:
            raise where.error("time.output_dt", "must be positive")
    dt = time.get("dt")
    if dt is not None:
        dt = _number(where, "time", "dt", dt)
        if not dt > 0:
            raise where.error("time.dt", "must be positive")

    initial = data.get("initial")
    if not isinstance(initial, dict) or "preset" not in initial:
        raise where.error("initial", "expected a mapping with a 'preset' entry")
    preset = initial["preset"]
    if preset not in PRESETS:
        raise where.error("initial.preset", f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
    preset_args = {k: v for k, v in initial.items() if k != "preset"}

    out = blocks["output"]
    formats = tuple(out.get("formats", ("csv", "json")))
    bad = [f for f in formats if f not in ("csv", "json")]
    if bad:
        raise where.error("output.formats", f"unsupported format {bad[0]!r}; use csv and/or json")
    snaps = out.get("snapshot_times", []) or []
    if not isinstance(snaps, list):
        raise where.error("output.snapshot_times", "expected a list of times")
    snaps = tuple(_number(where, "output", "snapshot_times", s) for s in snaps)
    if any(s < 0 or s > t_end for s in snaps):
        raise where.error("output.snapshot_times", f"times must lie in [0, {t_end}]")

    mon = dict(blocks["monitors"])
    for key in ("hard", "soft"):
        if key in mon:
            if not isinstance(mon[key], list):
                raise where.error(f"monitors.{key}", "expected a list of monitor names")
            mon[key] = frozenset(mon[key])
    try:
        monitors = MonitorConfig(**mon)
    except TypeError as exc:
        raise ConfigError(f"{source}: monitors: {exc}") from None

    mutations = data.get("mutations") or []
    if not isinstance(mutations, list) or set(mutations) - MUTATIONS:
        raise where.error("mutations", f"expected a list drawn from {sorted(MUTATIONS)}")

    return RunConfig(
        params=params,
        preset=preset,
        preset_args=preset_args,
        t_end=t_end,
        output_dt=output_dt,
        dt=dt,
        directory=str(out.get("directory", "output")),
        formats=formats,
        snapshot_times=snaps,
        monitors=monitors,
        mutations=frozenset(mutations),
        source=data,
        base_dir=base_dir,
    )


def load_config(path) -> RunConfig:
    """Read and validate a YAML configuration file."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
    try:
        lines = _line_index(yaml.compose(text))
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"{path}:{mark.line + 1}" if mark else str(path)
        raise ConfigError(f"{loc}: YAML syntax error: {getattr(exc, 'problem', exc)}") from None
    return parse_config(data, str(path), lines, path.parent)
