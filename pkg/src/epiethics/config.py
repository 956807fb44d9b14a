"""Plain key=value run configuration.

One `key=value` pair per line, `#` starts a comment, blank lines are
ignored. Unknown keys, duplicate keys, malformed values and invariant
violations are all rejected with the offending line number before any
solver work starts. Omitted keys take the benchmark defaults;
`phi0=auto`, `kappa=auto` and `tol=auto` ask for the derived values.
serialize_config emits a canonical text that parses back to an equal
RunConfig.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

from .epidemic import EpidemicState, PlannerParams, stability_bound
from .ethics import UtilityTransform, WelfareCriterion
from .planner import GridSpec
from .sensitivity import VictimProfile

__all__ = [
    "ConfigError",
    "RunConfig",
    "criterion_from_spec",
    "criterion_spec",
    "parse_config",
    "serialize_config",
]


class ConfigError(ValueError):
    """Invalid run configuration."""


_PARAM_KEYS = ("beta_contact", "gamma", "phi0", "kappa", "theta", "L_bar",
               "tau", "r", "nu", "w", "cost_per_death", "chi")
_GRID_KEYS = ("n_S", "n_I", "n_L")
_FLOAT_KEYS = {"beta_contact", "gamma", "phi0", "kappa", "theta", "L_bar",
               "r", "nu", "w", "cost_per_death", "chi", "tol", "S0", "I0",
               "horizon", "dt", "level_min", "level_max", "victim_lived",
               "victim_remaining", "exchange_rate"}
_INT_KEYS = {"tau", "n_S", "n_I", "n_L", "max_iters", "output_stride",
             "samples", "seed", "pop_cap"}
_LIST_KEYS = {"reference_pop", "ladder"}

KEY_ORDER = (
    "beta_contact", "gamma", "phi0", "kappa", "theta", "L_bar", "tau",
    "r", "nu", "w", "cost_per_death", "chi",
    "n_S", "n_I", "n_L", "tol", "max_iters",
    "S0", "I0", "horizon", "dt", "output_stride",
    "criteria", "samples", "seed", "pop_cap", "level_min", "level_max",
    "reference_pop", "victim_lived", "victim_remaining", "exchange_rate",
    "ladder", "out_dir",
)

# Construction errors name dataclass fields; translate the few that
# differ from their config keys.
_FIELD_TO_KEY = {"lived": "victim_lived", "remaining": "victim_remaining"}


@dataclass(frozen=True)
class RunConfig:
    """Everything a subcommand needs, validated."""

    params: PlannerParams
    grid: GridSpec
    S0: float = 0.98
    I0: float = 0.02
    horizon: float = 20.0
    dt: float = 1.0 / 365.0
    tol: Optional[float] = None        # None: solver default 1e-8 * w
    max_iters: int = 500
    output_stride: int = 1
    criteria: tuple = ()
    samples: int = 1000
    seed: int = 0
    pop_cap: int = 8
    level_min: float = -10.0
    level_max: float = 10.0
    reference_pop: tuple = (50.0, 50.0)
    victim: VictimProfile = VictimProfile()
    ladder: tuple = (0.0, 10.0, 20.0, 40.0)
    out_dir: str = "out"

    def state0(self) -> EpidemicState:
        rest = max(0.0, (1.0 - self.S0) - self.I0)
        return EpidemicState(S=self.S0, I=self.I0, R=rest)

    def level_range(self):
        return (self.level_min, self.level_max)


DEFAULT_CRITERIA_SPEC = "CU,TU,CLU:c=1,AU,RDCLU:c=1:rd=0.9"


def criterion_from_spec(spec: str) -> WelfareCriterion:
    """Parse `KIND[:c=X][:rd=X][:u=identity|powETA]` into a criterion."""
    parts = [p.strip() for p in spec.strip().split(":")]
    kind = parts[0]
    kwargs = {}
    u = None
    for part in parts[1:]:
        if "=" not in part:
            raise ConfigError(f"criterion option {part!r} is not name=value")
        name, _, value = part.partition("=")
        name = name.strip()
        value = value.strip()
        if name == "c":
            kwargs["c"] = _parse_float("criteria", value)
        elif name == "rd":
            kwargs["rank_discount"] = _parse_float("criteria", value)
        elif name == "u":
            if value == "identity":
                u = UtilityTransform()
            elif value.startswith("pow"):
                eta = _parse_float("criteria", value[3:])
                u = UtilityTransform(kind="power", eta=eta)
            else:
                raise ConfigError(
                    f"criterion transform {value!r} not recognised "
                    f"(use identity or pow<eta>)")
        else:
            raise ConfigError(f"unknown criterion option {name!r}")
    if u is not None:
        kwargs["u"] = u
    try:
        return WelfareCriterion(kind, **kwargs)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def criterion_spec(crit: WelfareCriterion) -> str:
    """Inverse of criterion_from_spec (round-trips exactly)."""
    bits = [crit.kind]
    if crit.kind in ("CLU", "RDCLU") and crit.c != 0.0:
        bits.append(f"c={crit.c!r}")
    if crit.kind == "RDCLU":
        bits.append(f"rd={crit.rank_discount!r}")
    if crit.u.kind == "power":
        bits.append(f"u=pow{crit.u.eta!r}")
    elif crit.u.kind != "identity":
        raise ConfigError(
            f"{crit.u.kind!r} transforms have no config spelling")
    return ":".join(bits)


def _parse_float(key, value, line=None):
    try:
        out = float(value)
    except ValueError:
        raise ConfigError(_at(line, f"{key}: not a number: {value!r}")) \
            from None
    if not math.isfinite(out):
        raise ConfigError(_at(line, f"{key}: must be finite, got {value!r}"))
    return out


def _parse_int(key, value, line=None):
    try:
        return int(value)
    except ValueError:
        raise ConfigError(_at(line, f"{key}: not an integer: {value!r}")) \
            from None


def _parse_float_list(key, value, line=None):
    items = [p.strip() for p in value.split(",") if p.strip()]
    return tuple(_parse_float(key, p, line) for p in items)


def _at(line, msg):
    return f"line {line}: {msg}" if line is not None else msg


def _guarded(ctor, kwargs, lines, extra_key=None):
    # Construct a validated object; on failure, point at the config line
    # that supplied the offending key.
    try:
        return ctor(**kwargs)
    except ValueError as exc:
        msg = str(exc)
        first = msg.split()[0] if msg else ""
        key = _FIELD_TO_KEY.get(first, first)
        if extra_key is not None and key not in lines:
            key = extra_key
        raise ConfigError(_at(lines.get(key), msg)) from exc


def parse_config(text: str) -> RunConfig:
    """Parse and validate key=value configuration text."""
    entries = {}
    for ln, raw in enumerate(text.splitlines(), start=1):
        stripped = raw.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(
                f"line {ln}: expected key=value, got {stripped!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in KEY_ORDER:
            raise ConfigError(f"line {ln}: unknown key {key!r}")
        if key in entries:
            raise ConfigError(
                f"line {ln}: duplicate key {key!r} "
                f"(first set on line {entries[key][1]})")
        entries[key] = (value, ln)

    lines = {k: ln for k, (_, ln) in entries.items()}

    def raw(key):
        return entries[key][0] if key in entries else None

    def fval(key, default):
        v = raw(key)
        return default if v is None else _parse_float(key, v, lines[key])

    def ival(key, default):
        v = raw(key)
        return default if v is None else _parse_int(key, v, lines[key])

    # planner parameters; phi0/kappa/tol accept "auto" for the derived value
    pkw = {}
    for key in _PARAM_KEYS:
        v = raw(key)
        if v is None or (key in ("phi0", "kappa") and v == "auto"):
            continue
        pkw[key] = _parse_int(key, v, lines[key]) if key == "tau" \
            else _parse_float(key, v, lines[key])
    params = _guarded(PlannerParams, pkw, lines)

    gkw = {k: _parse_int(k, raw(k), lines[k])
           for k in _GRID_KEYS if raw(k) is not None}
    grid = _guarded(GridSpec, gkw, lines)

    tol_raw = raw("tol")
    if tol_raw is None or tol_raw == "auto":
        tol = None
    else:
        tol = _parse_float("tol", tol_raw, lines["tol"])
        if tol <= 0.0:
            raise ConfigError(_at(lines["tol"], "tol must be positive"))

    S0 = fval("S0", 0.98)
    I0 = fval("I0", 0.02)
    for key, v in (("S0", S0), ("I0", I0)):
        if not 0.0 <= v <= 1.0:
            raise ConfigError(_at(lines.get(key),
                                  f"{key} must lie in [0, 1], got {v!r}"))
    if S0 + I0 > 1.0 + 1e-12:
        where = lines.get("I0", lines.get("S0"))
        raise ConfigError(_at(where, f"S0 + I0 must not exceed 1, "
                                     f"got {S0 + I0!r}"))

    horizon = fval("horizon", 20.0)
    if horizon <= 0.0:
        raise ConfigError(_at(lines.get("horizon"),
                              "horizon must be positive"))
    dt = fval("dt", 1.0 / 365.0)
    if dt <= 0.0:
        raise ConfigError(_at(lines.get("dt"), "dt must be positive"))
    bound = stability_bound(params)
    if dt > bound * (1.0 + 1e-12):
        raise ConfigError(_at(lines.get("dt"),
                              f"dt={dt!r} exceeds the stability bound "
                              f"0.1/max(beta_contact, gamma) = {bound!r}"))

    max_iters = ival("max_iters", 500)
    if max_iters < 1:
        raise ConfigError(_at(lines.get("max_iters"),
                              "max_iters must be at least 1"))
    output_stride = ival("output_stride", 1)
    if output_stride < 1:
        raise ConfigError(_at(lines.get("output_stride"),
                              "output_stride must be at least 1"))

    crit_raw = raw("criteria")
    if crit_raw is None:
        crit_raw = DEFAULT_CRITERIA_SPEC
    specs = [s.strip() for s in crit_raw.split(",") if s.strip()]
    if not specs:
        raise ConfigError(_at(lines.get("criteria"),
                              "criteria must list at least one criterion"))
    criteria = tuple(
        _guarded(criterion_from_spec, {"spec": s}, lines,
                 extra_key="criteria")
        for s in specs)

    samples = ival("samples", 1000)
    if samples < 1:
        raise ConfigError(_at(lines.get("samples"),
                              "samples must be at least 1"))
    seed = ival("seed", 0)
    if seed < 0:
        raise ConfigError(_at(lines.get("seed"), "seed must be >= 0"))
    pop_cap = ival("pop_cap", 8)
    if pop_cap < 2:
        raise ConfigError(_at(lines.get("pop_cap"),
                              "pop_cap must be at least 2"))
    level_min = fval("level_min", -10.0)
    level_max = fval("level_max", 10.0)
    if not level_min < level_max:
        where = lines.get("level_max", lines.get("level_min"))
        raise ConfigError(_at(where,
                              "level_min must be strictly below level_max"))

    ref_raw = raw("reference_pop")
    reference_pop = (50.0, 50.0) if ref_raw is None else \
        _parse_float_list("reference_pop", ref_raw, lines["reference_pop"])
    if not reference_pop:
        raise ConfigError(_at(lines.get("reference_pop"),
                              "reference_pop must list at least one level"))

    victim = _guarded(VictimProfile,
                      {"lived": fval("victim_lived", 20.0),
                       "remaining": fval("victim_remaining", 20.0),
                       "exchange_rate": fval("exchange_rate", 1.0)},
                      lines)

    lad_raw = raw("ladder")
    ladder = (0.0, 10.0, 20.0, 40.0) if lad_raw is None else \
        _parse_float_list("ladder", lad_raw, lines["ladder"])
    for v in ladder:
        if v < 0.0:
            raise ConfigError(_at(lines.get("ladder"),
                                  "ladder costs must be non-negative"))

    out_dir = raw("out_dir")
    if out_dir is None:
        out_dir = "out"
    if not out_dir:
        raise ConfigError(_at(lines.get("out_dir"),
                              "out_dir must not be empty"))

    return RunConfig(params=params, grid=grid, S0=S0, I0=I0, horizon=horizon,
                     dt=dt, tol=tol, max_iters=max_iters,
                     output_stride=output_stride, criteria=criteria,
                     samples=samples, seed=seed, pop_cap=pop_cap,
                     level_min=level_min, level_max=level_max,
                     reference_pop=reference_pop, victim=victim,
                     ladder=ladder, out_dir=out_dir)


def serialize_config(cfg: RunConfig) -> str:
    """Canonical text form; parse_config(serialize_config(cfg)) == cfg."""
    p, g, v = cfg.params, cfg.grid, cfg.victim
    values = {
        "beta_contact": repr(p.beta_contact),
        "gamma": repr(p.gamma),
        "phi0": repr(p.phi0),
        "kappa": repr(p.kappa),
        "theta": repr(p.theta),
        "L_bar": repr(p.L_bar),
        "tau": repr(p.tau),
        "r": repr(p.r),
        "nu": repr(p.nu),
        "w": repr(p.w),
        "cost_per_death": repr(p.cost_per_death),
        "chi": repr(p.chi),
        "n_S": repr(g.n_S),
        "n_I": repr(g.n_I),
        "n_L": repr(g.n_L),
        "tol": "auto" if cfg.tol is None else repr(cfg.tol),
        "max_iters": repr(cfg.max_iters),
        "S0": repr(cfg.S0),
        "I0": repr(cfg.I0),
        "horizon": repr(cfg.horizon),
        "dt": repr(cfg.dt),
        "output_stride": repr(cfg.output_stride),
        "criteria": ",".join(criterion_spec(c) for c in cfg.criteria),
        "samples": repr(cfg.samples),
        "seed": repr(cfg.seed),
        "pop_cap": repr(cfg.pop_cap),
        "level_min": repr(cfg.level_min),
        "level_max": repr(cfg.level_max),
        "reference_pop": ",".join(repr(x) for x in cfg.reference_pop),
        "victim_lived": repr(v.lived),
        "victim_remaining": repr(v.remaining),
        "exchange_rate": repr(v.exchange_rate),
        "ladder": ",".join(repr(x) for x in cfg.ladder),
        "out_dir": cfg.out_dir,
    }
    return "\n".join(f"{k}={values[k]}" for k in KEY_ORDER) + "\n"
