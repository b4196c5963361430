"""YAML experiment files.

Schema (every key optional except ``scheme``)::

    scheme: ap_diff            # see SCHEMES
    params: {G: 1.0, chi: 0.5, lambda0: 10.0, tau: 1.0}
    grid: {I: 100, dt: null, y_extension: null, lambda_rule: exact}
    snapshots: [0.5, 2.0]      # output times
    time_unit: native          # or "physical" (diffusive schemes divide by lambda0)
    steady: false              # also write the steady profile
    t_max: 20.0                # cap for the steady-state march
    probes: [0.5]              # x-locations of y-profiles
    output: runs/example
    seed: 0
    particles: 1200000         # monte_carlo only
    y_bins: 50                 # monte_carlo only
    table: {param_name: lambda0, values: [10, 100], mesh_pairs: [[50, 200]]}
"""
import math
from dataclasses import asdict, dataclass, field

import yaml

from .errors import CFLError, ConfigError, MeshError, ParameterError
from .model import ModelParams, Scaling

SCHEMES = (
    "ap_diff",
    "ap_diff_modified",
    "ap_hyp",
    "naive_split",
    "ks_limit",
    "ks_centered",
    "kinetic_limit",
    "monte_carlo",
)
KINETIC = ("ap_diff", "ap_diff_modified", "ap_hyp", "naive_split")
MACRO = ("ks_limit", "ks_centered", "kinetic_limit")
HYPERBOLIC = ("ap_hyp", "kinetic_limit")

_TOP_KEYS = {
    "scheme", "params", "grid", "snapshots", "time_unit", "steady", "t_max",
    "probes", "output", "seed", "particles", "y_bins", "table",
}
_PARAM_KEYS = {"G", "chi", "lambda0", "tau"}
_GRID_KEYS = {"I", "dt", "y_extension", "lambda_rule"}
_TABLE_KEYS = {"param_name", "values", "mesh_pairs", "method"}


@dataclass
class TableSpec:
    param_name: str
    values: list
    mesh_pairs: list
    method: str = "auto"


@dataclass
class ExperimentConfig:
    scheme: str
    G: float = 1.0
    chi: float = 0.5
    lambda0: float = 1.0
    tau: float = 1.0
    I: int = 100
    dt: float = None
    y_extension: float = None
    lambda_rule: str = "exact"
    snapshots: list = field(default_factory=list)
    time_unit: str = "native"
    steady: bool = False
    t_max: float = 20.0
    probes: list = field(default_factory=list)
    output: str = None
    seed: int = 0
    particles: int = 1_200_000
    y_bins: int = 50
    table: TableSpec = None

    @property
    def params(self):
        scaling = Scaling.HYPERBOLIC if self.scheme in HYPERBOLIC else Scaling.DIFFUSIVE
        return ModelParams(self.G, self.chi, self.lambda0, self.tau, scaling)

    def native_time(self, t):
        """Convert a snapshot time to the scheme's own time variable."""
        if self.time_unit == "physical" and self.params.scaling is Scaling.DIFFUSIVE \
                and self.scheme != "monte_carlo":
            return t / self.lambda0
        return t

    def scheme_config(self):
        """Build the solver configuration; raises the solver's own errors."""
        from . import ap_diff, ap_hyp, limits

        p = self.params
        if self.scheme in ("ap_diff", "ap_diff_modified"):
            return ap_diff.make_config(
                p, self.I, dt=self.dt, modified_tau=self.scheme == "ap_diff_modified",
                y_extension=self.y_extension, lambda_rule=self.lambda_rule,
            )
        if self.scheme == "ap_hyp":
            return ap_hyp.make_config(p, self.I, dt=self.dt)
        if self.scheme == "naive_split":
            return limits.make_naive_config(p, self.I, dt=self.dt)
        if self.scheme in MACRO:
            cfg = limits.macro_config(p, self.I, dt=self.dt)
            if self.scheme == "kinetic_limit":
                cfg.require_transport_cfl()
            else:
                cfg.require_diffusive_cfl()
            return cfg
        return None


def _number(errors, where, value, kind=float, positive=False):
    # YAML 1.1 reads exponents without a sign (1.0e8) as strings
    if isinstance(value, str):
        try:
            value = float(value)
        except ValueError:
            pass
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        errors.append(f"{where}: expected a number, got {value!r}")
        return None
    if kind is int and value != int(value):
        errors.append(f"{where}: expected an integer, got {value!r}")
        return None
    value = kind(value)
    if not math.isfinite(value) or (positive and value <= 0):
        errors.append(f"{where}: expected a positive finite value, got {value!r}")
        return None
    return value


def _section(errors, data, name, allowed):
    sec = data.get(name) or {}
    if not isinstance(sec, dict):
        errors.append(f"{name}: expected a mapping")
        return {}
    for key in sorted(set(sec) - allowed):
        errors.append(f"{name}.{key}: unknown key")
    return sec


def _number_list(errors, where, value):
    if not isinstance(value, list):
        errors.append(f"{where}: expected a list")
        return []
    out = [_number(errors, f"{where}[{j}]", v) for j, v in enumerate(value)]
    return [v for v in out if v is not None]


def parse_config(text):
    """Validate YAML text and return an :class:`ExperimentConfig`.

    All problems are collected and raised together as a :class:`ConfigError`.
    """
    try:
        data = yaml.safe_load(text) if text.strip() else {}
    except yaml.YAMLError as exc:
        raise ConfigError(f"not valid YAML: {exc}") from exc
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("top level must be a mapping")
    errors = [f"{k}: unknown key" for k in sorted(set(data) - _TOP_KEYS)]
    kw = {}

    scheme = data.get("scheme")
    if scheme is None:
        errors.append("scheme: required field missing")
    elif scheme not in SCHEMES:
        errors.append(f"scheme: unknown scheme {scheme!r}, expected one of {', '.join(SCHEMES)}")

    params = _section(errors, data, "params", _PARAM_KEYS)
    for key in ("G", "chi", "lambda0", "tau"):
        if key in params:
            v = _number(errors, f"params.{key}", params[key], positive=key in ("lambda0", "tau"))
            if v is not None:
                kw[key] = v

    grid = _section(errors, data, "grid", _GRID_KEYS)
    if "I" in grid:
        v = _number(errors, "grid.I", grid["I"], int, positive=True)
        if v is not None:
            kw["I"] = v
    for key in ("dt", "y_extension"):
        if grid.get(key) is not None:
            v = _number(errors, f"grid.{key}", grid[key], positive=True)
            if v is not None:
                kw[key] = v
    if "lambda_rule" in grid:
        if grid["lambda_rule"] not in ("exact", "trapezoid"):
            errors.append(f"grid.lambda_rule: expected exact or trapezoid, got {grid['lambda_rule']!r}")
        else:
            kw["lambda_rule"] = grid["lambda_rule"]

    if "snapshots" in data:
        snaps = _number_list(errors, "snapshots", data["snapshots"])
        if any(t < 0 for t in snaps):
            errors.append("snapshots: times must be nonnegative")
        kw["snapshots"] = sorted(snaps)
    if "probes" in data:
        probes = _number_list(errors, "probes", data["probes"])
        if any(not 0 <= x <= 1 for x in probes):
            errors.append("probes: x-locations must lie in [0, 1]")
        kw["probes"] = probes
    if "time_unit" in data:
        if data["time_unit"] not in ("native", "physical"):
            errors.append(f"time_unit: expected native or physical, got {data['time_unit']!r}")
        else:
            kw["time_unit"] = data["time_unit"]
    if "steady" in data:
        if not isinstance(data["steady"], bool):
            errors.append("steady: expected true or false")
        else:
            kw["steady"] = data["steady"]
    if "t_max" in data:
        v = _number(errors, "t_max", data["t_max"], positive=True)
        if v is not None:
            kw["t_max"] = v
    for key in ("seed", "particles", "y_bins"):
        if key in data:
            v = _number(errors, key, data[key], int, positive=key != "seed")
            if v is not None:
                if key == "seed" and v < 0:
                    errors.append("seed: must be nonnegative")
                kw[key] = v
    if data.get("output") is not None:
        if not isinstance(data["output"], str):
            errors.append("output: expected a path")
        else:
            kw["output"] = data["output"]

    if data.get("table") is not None:
        kw["table"] = _parse_table(errors, data)

    try:
        ModelParams(**{k: kw[k] for k in _PARAM_KEYS if k in kw})
    except ParameterError as exc:
        errors.append(f"params: {exc}")
    if errors:
        raise ConfigError(errors)
    cfg = ExperimentConfig(scheme=scheme, **kw)
    _validate(cfg)
    return cfg


def _parse_table(errors, data):
    tab = _section(errors, data, "table", _TABLE_KEYS)
    name = tab.get("param_name")
    if name not in ("lambda0", "tau"):
        errors.append(f"table.param_name: expected lambda0 or tau, got {name!r}")
    values = _number_list(errors, "table.values", tab.get("values", []))
    if not values:
        errors.append("table.values: need at least one value")
    pairs = []
    raw = tab.get("mesh_pairs", [])
    if not isinstance(raw, list) or not raw:
        errors.append("table.mesh_pairs: need a list of [I, I_prime] pairs")
        raw = []
    for j, pair in enumerate(raw):
        if not (isinstance(pair, list) and len(pair) == 2):
            errors.append(f"table.mesh_pairs[{j}]: expected [I, I_prime]")
            continue
        a = _number(errors, f"table.mesh_pairs[{j}][0]", pair[0], int, positive=True)
        b = _number(errors, f"table.mesh_pairs[{j}][1]", pair[1], int, positive=True)
        if a and b:
            if b % a:
                errors.append(f"table.mesh_pairs[{j}]: {b} is not a multiple of {a}")
            pairs.append((a, b))
    method = tab.get("method", "auto")
    if method not in ("auto", "direct", "march"):
        errors.append(f"table.method: expected auto, direct or march, got {method!r}")
    return TableSpec(name, values, pairs, method)


def _validate(cfg):
    """Check parameter domains and the scheme's mesh and step-size rules."""
    errors = []
    if cfg.table is not None and cfg.scheme not in KINETIC:
        errors.append(f"table: convergence tables need a kinetic scheme, not {cfg.scheme}")
    if cfg.scheme == "monte_carlo":
        from .monte_carlo import check_step, default_dt

        try:
            check_step(cfg.params, cfg.dt or default_dt(cfg.lambda0))
        except ParameterError as exc:
            errors.append(f"grid.dt: {exc}")
    else:
        try:
            cfg.scheme_config()
        except CFLError as exc:
            errors.append(f"grid.dt: {exc}")
        except (MeshError, ParameterError) as exc:
            errors.append(f"grid: {exc}")
    if errors:
        raise ConfigError(errors)


def config_to_dict(cfg):
    d = {
        "scheme": cfg.scheme,
        "params": {"G": cfg.G, "chi": cfg.chi, "lambda0": cfg.lambda0, "tau": cfg.tau},
        "grid": {"I": cfg.I, "dt": cfg.dt, "y_extension": cfg.y_extension,
                 "lambda_rule": cfg.lambda_rule},
        "snapshots": list(cfg.snapshots),
        "time_unit": cfg.time_unit,
        "steady": cfg.steady,
        "t_max": cfg.t_max,
        "probes": list(cfg.probes),
        "output": cfg.output,
        "seed": cfg.seed,
        "particles": cfg.particles,
        "y_bins": cfg.y_bins,
    }
    if cfg.table is not None:
        t = asdict(cfg.table)
        t["mesh_pairs"] = [list(p) for p in t["mesh_pairs"]]
        d["table"] = t
    return d


def dump_config(cfg):
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=False)


def load_config(path):
    with open(path) as fh:
        return parse_config(fh.read())
