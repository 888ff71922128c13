"""TOML experiment configuration.

Schema (every key optional, defaults shown)::

    [model]
    kind = "cpp"              # "cpp" | "indicator"
    rho = 0.5                 # power-law index, in (0, 2)
    c = 1.0                   # intensity scale
    kernel = "linear"         # "linear" | "sinusoid" | "hoelder"
    p = 0.75                  # hoelder exponent in [1/2, 1]; hoelder only
    kernel_alpha = 1.0        # override the declared Hoelder excess
    c_omega = 1.0             # override the declared C(omega)
    tau_rel_tol = 1e-4        # truncation tolerance relative to var(t0)
    tau = 0.001               # fixed inner truncation (overrides the policy)

    [chaining]
    alpha = 1.0
    beta = 2.0
    gamma = 0.5               # default alpha / 2
    delta = 0.5
    t0 = 0.5
    n_max = 20

    [experiment]
    eps_list = [0.2, 0.1, 0.05, 0.02]
    grid_exponent = 10
    replicates = 10000
    seed = 20100531
    sup_mode = "centered"     # "centered" | "absolute"
    workers = 1

    [audit]
    samples = 10000           # kernel audit triples
    eps = 0.1                 # cutoff for the moment audit
    replicates = 10000
    pairs = [[0.2, 0.7], [0.4, 0.45]]

    [output]
    csv = "sweep.csv"
    json = "sweep.json"

    [[bound_rows]]            # optional explicit inputs for ``bound``
    eps = 0.1
    b_eps = 0.0
    var_t0 = 0.01

Unknown keys are rejected and every value is range-checked at parse time;
errors name the offending key.
"""
from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .chaining import ChainingParams
from .errors import ConfigurationError, DomainError
from .montecarlo import DEFAULT_SEED, ExperimentConfig
from .processes import DEFAULT_TAU_REL_TOL, KernelSpec, PowerLawIntensity

_SCHEMA = {
    "model": {"kind": str, "rho": float, "c": float, "kernel": str, "p": float,
              "kernel_alpha": float, "c_omega": float, "tau_rel_tol": float, "tau": float},
    "chaining": {"alpha": float, "beta": float, "gamma": float, "delta": float,
                 "t0": float, "n_max": int},
    "experiment": {"eps_list": list, "grid_exponent": int, "replicates": int, "seed": int,
                   "sup_mode": str, "workers": int},
    "audit": {"samples": int, "eps": float, "replicates": int, "pairs": list},
    "output": {"csv": str, "json": str},
    "bound_rows": {"eps": float, "b_eps": float, "var_t0": float},
}

DEFAULT_PAIRS = ((0.2, 0.7), (0.4, 0.45), (0.1, 0.9), (0.5, 0.5))


@dataclass(frozen=True)
class BoundRow:
    eps: float
    b_eps: float
    var_t0: float


@dataclass(frozen=True)
class AuditConfig:
    samples: int = 10_000
    eps: float = 0.1
    replicates: int = 10_000
    pairs: tuple = DEFAULT_PAIRS


@dataclass(frozen=True)
class RunConfig:
    experiment: ExperimentConfig
    audit: AuditConfig = field(default_factory=AuditConfig)
    bound_rows: tuple = ()
    csv: str | None = None
    json: str | None = None


class ConfigKeyError(ConfigurationError):
    def __init__(self, key: str, msg: str):
        self.key = key
        super().__init__(f"{key}: {msg}")


def _typed(key, value, kind):
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigKeyError(key, f"expected a number, got {value!r}")
        value = float(value)
        if not math.isfinite(value):
            raise ConfigKeyError(key, "must be finite")
        return value
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigKeyError(key, f"expected an integer, got {value!r}")
        return value
    if not isinstance(value, kind):
        raise ConfigKeyError(key, f"expected {kind.__name__}, got {value!r}")
    return value


def _section(doc, name):
    raw = doc.get(name, {})
    if not isinstance(raw, dict):
        raise ConfigKeyError(name, "expected a table")
    out = {}
    for k, v in raw.items():
        if k not in _SCHEMA[name]:
            raise ConfigKeyError(f"{name}.{k}", "unknown key")
        out[k] = _typed(f"{name}.{k}", v, _SCHEMA[name][k])
    return out


def _build(key, fn, *args, **kw):
    try:
        return fn(*args, **kw)
    except (DomainError, ConfigurationError) as exc:
        if isinstance(exc, ConfigKeyError):
            raise
        raise ConfigKeyError(key, str(exc)) from None


def parse_config(doc: dict) -> RunConfig:
    for k in doc:
        if k not in _SCHEMA:
            raise ConfigKeyError(k, "unknown section")
    m = _section(doc, "model")
    ch = _section(doc, "chaining")
    ex = _section(doc, "experiment")
    au = _section(doc, "audit")
    out = _section(doc, "output")

    intensity = _build("model.rho", PowerLawIntensity, m.get("rho", 0.5), m.get("c", 1.0))
    kernel = _build(
        "model.kernel", KernelSpec, m.get("kernel", "linear"), m.get("p"),
        m.get("kernel_alpha"), m.get("c_omega"),
    )
    alpha = ch.get("alpha", 1.0)
    params = _build(
        "chaining", ChainingParams, alpha, ch.get("beta", 2.0),
        ch.get("gamma", alpha / 2.0), ch.get("delta", 0.5),
    )
    eps_list = ex.get("eps_list", [0.2, 0.1, 0.05, 0.02])
    eps_list = [_typed(f"experiment.eps_list[{i}]", e, float) for i, e in enumerate(eps_list)]
    n_max = ch.get("n_max", 20)
    if not 2 <= n_max <= 60:
        raise ConfigKeyError("chaining.n_max", f"must lie in [2, 60], got {n_max}")
    experiment = _build(
        "experiment", ExperimentConfig,
        model=m.get("kind", "cpp"), intensity=intensity, kernel=kernel, params=params,
        eps_list=tuple(eps_list), grid_exponent=ex.get("grid_exponent", 10),
        replicates=ex.get("replicates", 10_000), seed=ex.get("seed", DEFAULT_SEED),
        sup_mode=ex.get("sup_mode", "centered"), t0=ch.get("t0", 0.5), n_max=n_max,
        tau_rel_tol=m.get("tau_rel_tol", DEFAULT_TAU_REL_TOL), tau_fixed=m.get("tau"),
        workers=ex.get("workers", 1),
    )

    pairs = au.get("pairs", DEFAULT_PAIRS)
    checked = []
    for i, pr in enumerate(pairs):
        if not isinstance(pr, (list, tuple)) or len(pr) != 2:
            raise ConfigKeyError(f"audit.pairs[{i}]", "expected [s, t]")
        s, t = (_typed(f"audit.pairs[{i}]", x, float) for x in pr)
        if not (0 <= s <= 1 and 0 <= t <= 1):
            raise ConfigKeyError(f"audit.pairs[{i}]", "points must lie in [0, 1]")
        checked.append((s, t))
    audit = AuditConfig(au.get("samples", 10_000), au.get("eps", 0.1),
                        au.get("replicates", 10_000), tuple(checked))
    if audit.samples < 1000:
        raise ConfigKeyError("audit.samples", "must be >= 1000")
    if audit.replicates < 100:
        raise ConfigKeyError("audit.replicates", "must be >= 100")
    _build("audit.eps", experiment.model_at, audit.eps)

    rows_raw = doc.get("bound_rows", [])
    if not isinstance(rows_raw, list):
        raise ConfigKeyError("bound_rows", "expected an array of tables")
    rows = []
    for i, r in enumerate(rows_raw):
        if not isinstance(r, dict):
            raise ConfigKeyError(f"bound_rows[{i}]", "expected a table")
        for k in r:
            if k not in _SCHEMA["bound_rows"]:
                raise ConfigKeyError(f"bound_rows[{i}].{k}", "unknown key")
        missing = {"eps", "b_eps", "var_t0"} - set(r)
        if missing:
            raise ConfigKeyError(f"bound_rows[{i}].{sorted(missing)[0]}", "missing")
        vals = {k: _typed(f"bound_rows[{i}].{k}", v, float) for k, v in r.items()}
        for k in ("b_eps", "var_t0"):
            if vals[k] < 0:
                raise ConfigKeyError(f"bound_rows[{i}].{k}", "must be non-negative")
        rows.append(BoundRow(vals["eps"], vals["b_eps"], vals["var_t0"]))

    return RunConfig(experiment, audit, tuple(rows), out.get("csv"), out.get("json"))


def load_config(path) -> RunConfig:
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigurationError(f"{path}: invalid TOML: {exc}") from None
    return parse_config(doc)
