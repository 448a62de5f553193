"""Run configuration: TOML schema, validation, sweep expansion.

The file layout mirrors the public key names:

    n_dim = 2
    k = 1
    alpha = 1.0

    [psi]
    family = "power_of_base"
    params = { epsilon = 0.1, exponent = 3.0 }

    [grid]
    variant = "axisym"          # or "full_s2"
    resolution = 96             # or [64, 128]

    [init]
    base = 1.0
    terms = [[2, 0, 0.1]]       # (degree, order, amplitude) rows
    # or: random = true, n_terms = 2, max_degree = 6, amplitude = 0.08

    [flow]
    residual_tol = 1e-6
    t_max = 50.0
    # any other FlowConfig field by name (dt_init, rtol, gamma, ...)

    [output]
    dir = "out"
    trace = true
    summary = true
    mesh = false
    snapshots = false

    [sweep]
    alpha = [0.75, 1.0, 1.5]
    epsilon = [0.05, 0.1]
    resolution = [48, 96]
    cap = 256

Unknown keys are rejected rather than ignored; a config that silently
drops a typo has a way of wasting a cluster allocation.
"""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field, fields
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

import numpy as np

from .anisotropy import PsiSpec, psi_spec_from_config, psi_spec_to_dict
from .errors import ConfigError
from .flow import FlowConfig, InitialSpec

SWEEP_CAP_DEFAULT = 256

_TOP_KEYS = {"n_dim", "k", "alpha", "psi", "grid", "init", "flow", "output", "sweep"}
_GRID_KEYS = {"variant", "resolution"}
_INIT_KEYS = {"base", "terms", "random", "n_terms", "max_degree", "amplitude"}
_OUTPUT_KEYS = {"dir", "trace", "summary", "mesh", "snapshots"}
_SWEEP_KEYS = {"alpha", "epsilon", "resolution", "cap"}
_FLOW_KEYS = {f.name for f in fields(FlowConfig)} - {
    "n_dim", "k", "alpha", "psi", "init", "grid_variant", "resolution"}
_FLOW_INT = {"max_steps", "monitor_every", "snapshot_every"}
_FLOW_BOOL = {"force_inadmissible", "allow_uneven"}


@dataclass(frozen=True)
class RandomInit:
    """Recipe for a seeded random even initial body."""

    n_terms: int = 2
    max_degree: int = 6
    amplitude: float = 0.08

    def draw(self, seed: int, full_s2: bool) -> InitialSpec:
        rng = np.random.default_rng(seed)
        terms = []
        for _ in range(self.n_terms):
            degree = int(rng.choice(np.arange(2, self.max_degree + 1, 2)))
            order = int(rng.integers(0, degree + 1)) if full_s2 else 0
            amp = float(rng.uniform(0.3, 1.0) * rng.choice([-1.0, 1.0]))
            # degree-weighted so high harmonics cannot break convexity
            terms.append((degree, order,
                          amp * self.amplitude * 6.0 / (degree * (degree + 1))))
        return InitialSpec(1.0, tuple(terms))


@dataclass(frozen=True)
class RunConfig:
    """A FlowConfig plus everything the CLI needs around it."""

    flow: FlowConfig
    out_dir: Path = Path("out")
    seed: int = 0
    random_init: RandomInit | None = None
    write_trace: bool = True
    write_summary: bool = True
    write_mesh: bool = False
    write_snapshots: bool = False
    psi_field_path: Path | None = None   # sampled-psi file, bypasses psi spec
    sweep: dict = field(default_factory=dict)
    sweep_cap: int = SWEEP_CAP_DEFAULT

    def resolved_flow(self) -> FlowConfig:
        """FlowConfig with the random initial body drawn, if one was asked for."""
        if self.random_init is None:
            return self.flow
        init = self.random_init.draw(self.seed,
                                     self.flow.grid_variant == "full_s2")
        return dataclasses.replace(self.flow, init=init)


def _require(table: dict, allowed: set, where: str) -> None:
    extra = set(table) - allowed
    if extra:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(extra)}")


def _as_int(value, name: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{name} must be an integer, got {value!r}")
    return value


def _as_real(value, name: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name} must be a number, got {value!r}")
    return float(value)


def _parse_resolution(raw):
    if isinstance(raw, list):
        if len(raw) != 2:
            raise ConfigError("grid.resolution list must be [n_lat, n_lon]")
        return (_as_int(raw[0], "resolution[0]"), _as_int(raw[1], "resolution[1]"))
    return _as_int(raw, "grid.resolution")


def _parse_init(table: dict):
    _require(table, _INIT_KEYS, "[init]")
    if table.get("random", False):
        return None, RandomInit(
            n_terms=_as_int(table.get("n_terms", 2), "init.n_terms"),
            max_degree=_as_int(table.get("max_degree", 6), "init.max_degree"),
            amplitude=_as_real(table.get("amplitude", 0.08), "init.amplitude"))
    terms = []
    for row in table.get("terms", []):
        if not isinstance(row, list) or len(row) != 3:
            raise ConfigError("init.terms rows must be [degree, order, amplitude]")
        terms.append((_as_int(row[0], "degree"), _as_int(row[1], "order"),
                      _as_real(row[2], "amplitude")))
    return InitialSpec(_as_real(table.get("base", 1.0), "init.base"),
                       tuple(terms)), None


def run_config_from_dict(data: dict) -> RunConfig:
    """Validate a parsed config table and build the RunConfig."""
    if not isinstance(data, dict):
        raise ConfigError("config root must be a table")
    _require(data, _TOP_KEYS, "config root")

    flow_kwargs: dict = {}
    for key in ("n_dim", "k"):
        if key in data:
            flow_kwargs[key] = _as_int(data[key], key)
    if "alpha" in data:
        flow_kwargs["alpha"] = _as_real(data["alpha"], "alpha")

    psi_field_path = None
    if "psi" in data:
        psi_table = data["psi"]
        if not isinstance(psi_table, dict):
            raise ConfigError("[psi] must be a table")
        if "file" in psi_table:
            # sampled anisotropy: admissibility checks only, not evolution
            if set(psi_table) != {"file"}:
                raise ConfigError("[psi] file excludes family/params")
            psi_field_path = Path(psi_table["file"])
        else:
            flow_kwargs["psi"] = psi_spec_from_config(psi_table)

    grid = data.get("grid", {})
    _require(grid, _GRID_KEYS, "[grid]")
    if "variant" in grid:
        flow_kwargs["grid_variant"] = grid["variant"]
    if "resolution" in grid:
        flow_kwargs["resolution"] = _parse_resolution(grid["resolution"])

    init_spec, random_init = _parse_init(data.get("init", {}))
    if init_spec is not None:
        flow_kwargs["init"] = init_spec

    flow_table = data.get("flow", {})
    _require(flow_table, _FLOW_KEYS, "[flow]")
    for key, value in flow_table.items():
        if key in _FLOW_INT:
            flow_kwargs[key] = _as_int(value, f"flow.{key}")
        elif key in _FLOW_BOOL:
            if not isinstance(value, bool):
                raise ConfigError(f"flow.{key} must be a boolean")
            flow_kwargs[key] = value
        else:
            flow_kwargs[key] = _as_real(value, f"flow.{key}")

    try:
        flow = FlowConfig(**flow_kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc

    out = data.get("output", {})
    _require(out, _OUTPUT_KEYS, "[output]")

    sweep = dict(data.get("sweep", {}))
    _require(sweep, _SWEEP_KEYS, "[sweep]")
    cap = _as_int(sweep.pop("cap", SWEEP_CAP_DEFAULT), "sweep.cap")
    for axis, values in sweep.items():
        if not isinstance(values, list) or not values:
            raise ConfigError(f"sweep.{axis} must be a nonempty list")

    return RunConfig(
        flow=flow,
        out_dir=Path(out.get("dir", "out")),
        random_init=random_init,
        write_trace=bool(out.get("trace", True)),
        write_summary=bool(out.get("summary", True)),
        write_mesh=bool(out.get("mesh", False)),
        write_snapshots=bool(out.get("snapshots", False)),
        psi_field_path=psi_field_path,
        sweep=sweep,
        sweep_cap=cap)


def load_config(path) -> RunConfig:
    """Parse a TOML run config. ConfigError on any schema violation."""
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return run_config_from_dict(data)


def expand_sweep(rc: RunConfig, allow_large: bool = False) -> list:
    """Cartesian sweep over the declared axes.

    Returns (label, FlowConfig) pairs in deterministic axis order. The
    product size is capped so a fat-fingered list cannot schedule a
    few thousand runs; pass allow_large (CLI --force) to override.
    """
    base = rc.resolved_flow()
    alphas = rc.sweep.get("alpha", [base.alpha])
    epsilons = rc.sweep.get("epsilon", [None])
    resolutions = rc.sweep.get("resolution", [base.resolution])

    total = len(alphas) * len(epsilons) * len(resolutions)
    if total > rc.sweep_cap and not allow_large:
        raise ConfigError(
            f"sweep of {total} runs exceeds the cap of {rc.sweep_cap}")

    def res_label(res):
        if isinstance(res, (list, tuple)):
            return "x".join(str(int(r)) for r in res)
        return str(res)

    runs = []
    for a in alphas:
        for eps in epsilons:
            for res in resolutions:
                kwargs = {"alpha": _as_real(a, "sweep.alpha")}
                if eps is not None:
                    params = dict(base.psi.params)
                    params["epsilon"] = _as_real(eps, "sweep.epsilon")
                    kwargs["psi"] = PsiSpec(base.psi.family, params)
                if "resolution" in rc.sweep:
                    kwargs["resolution"] = _parse_resolution(res)
                label = f"a{a}" + ("" if eps is None else f"_e{eps}")
                label += f"_r{res_label(res)}"
                runs.append((label.replace(".", "p"),
                             dataclasses.replace(base, **kwargs)))
    return runs


def config_echo(rc: RunConfig) -> dict:
    """The config as a plain dict, echoed into JSON summaries."""
    fc = rc.resolved_flow()
    return {
        "n_dim": fc.n_dim, "k": fc.k, "alpha": fc.alpha,
        "psi": psi_spec_to_dict(fc.psi),
        "grid": {"variant": fc.grid_variant,
                 "resolution": list(fc.resolution)
                 if isinstance(fc.resolution, tuple) else fc.resolution},
        "init": {"base": fc.init.base,
                 "terms": [list(t) for t in fc.init.terms]},
        "flow": {"residual_tol": fc.residual_tol, "t_max": fc.t_max,
                 "rtol": fc.rtol, "dt_init": fc.dt_init, "gamma": fc.gamma_value},
        "seed": rc.seed,
    }
