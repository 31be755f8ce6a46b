"""Run configuration: nested sections loaded from and written to YAML."""
from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import yaml

from .errors import ConfigError
from .scheduler import Exponents
from .solver import SCHEMES

PROFILES = ("gaussian_bump", "constant", "gaussian_pulse")


@dataclass(frozen=True)
class ProblemConfig:
    """Initial profile by name plus its parameters, gas exponent, dimension and end time."""

    profile: str = "gaussian_bump"
    profile_params: dict = field(default_factory=lambda: {"amplitude": 1.0, "width": 1.0})
    gamma: float = 2.0
    n_dim: int = 3
    T: float = 0.5


@dataclass(frozen=True)
class ScheduleConfig:
    eps: tuple = (0.1, 0.01, 0.001)
    m0_budget: float = 10.0
    exponents: dict = field(default_factory=dict)


@dataclass(frozen=True)
class SolverSection:
    h: float = 4e-3
    cfl: float = 0.4
    scheme: str = "llf1"
    n_snapshots: int = 51
    dissipation_rule: str = "implicit"
    density_floor: float = 1e-12


@dataclass(frozen=True)
class HarnessConfig:
    deltas: tuple = (0.1, 0.25)
    omega: tuple = (1.0, 2.0)
    test_support: tuple = (0.5, 1.0)
    time_window: tuple = (0.6, 0.9)
    n_random_tests: int = 2
    sphere_order: int = 12
    energy_tol: float = 1e-4
    equivalence_tol: float = 1e-6


@dataclass(frozen=True)
class RunConfig:
    problem: ProblemConfig = field(default_factory=ProblemConfig)
    schedule: ScheduleConfig = field(default_factory=ScheduleConfig)
    solver: SolverSection = field(default_factory=SolverSection)
    harness: HarnessConfig = field(default_factory=HarnessConfig)
    output: str = "out"

    def __post_init__(self):
        validate(self)

    def to_dict(self):
        def conv(x):
            if dataclasses.is_dataclass(x):
                return {f.name: conv(getattr(x, f.name)) for f in dataclasses.fields(x)}
            if isinstance(x, (tuple, list)):
                return [conv(v) for v in x]
            if isinstance(x, dict):
                return {k: conv(v) for k, v in x.items()}
            return x

        return conv(self)

    def dumps(self):
        return yaml.safe_dump(self.to_dict(), sort_keys=False)

    def with_eps(self, eps_list):
        return dataclasses.replace(self, schedule=dataclasses.replace(self.schedule, eps=tuple(eps_list)))

    def with_output(self, out):
        return dataclasses.replace(self, output=str(out))


_SECTIONS = {
    "problem": ProblemConfig,
    "schedule": ScheduleConfig,
    "solver": SolverSection,
    "harness": HarnessConfig,
}
_TUPLES = {"eps", "deltas", "omega", "test_support", "time_window"}


def _section(cls, data, name):
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"section '{name}' must be a mapping")
    known = {f.name: f for f in dataclasses.fields(cls)}
    kwargs = {}
    for key, val in data.items():
        if key not in known:
            raise ConfigError(f"unknown field '{name}.{key}'")
        if key in _TUPLES:
            if not isinstance(val, (list, tuple)):
                raise ConfigError(f"field '{name}.{key}' must be a list")
            try:
                val = tuple(float(v) for v in val)
            except (TypeError, ValueError):
                raise ConfigError(f"field '{name}.{key}' must hold numbers") from None
        elif isinstance(val, str) and isinstance(known[key].default, float):
            # YAML 1.1 reads 1e-3 (no dot) as a string
            try:
                val = float(val)
            except ValueError:
                raise ConfigError(f"field '{name}.{key}' must be a number, got {val!r}") from None
        kwargs[key] = val
    try:
        return cls(**kwargs)
    except TypeError as err:
        raise ConfigError(f"section '{name}': {err}") from None


def from_dict(d):
    if not isinstance(d, dict):
        raise ConfigError("configuration must be a mapping at the top level")
    extra = set(d) - set(_SECTIONS) - {"output"}
    if extra:
        raise ConfigError(f"unknown top-level field(s): {', '.join(sorted(extra))}")
    parts = {name: _section(cls, d.get(name), name) for name, cls in _SECTIONS.items()}
    return RunConfig(**parts, output=str(d.get("output", "out")))


def loads(text):
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as err:
        mark = getattr(err, "problem_mark", None)
        where = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        raise ConfigError(f"malformed YAML{where}: {getattr(err, 'problem', err)}") from None
    return from_dict(data or {})


def load(path):
    with open(path, encoding="utf-8") as fh:
        return loads(fh.read())


def _num(name, v, lo=None, hi=None, lo_open=True):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"field '{name}' must be a number, got {v!r}")
    if lo is not None and (v <= lo if lo_open else v < lo):
        raise ConfigError(f"field '{name}'={v} must be {'>' if lo_open else '>='} {lo}")
    if hi is not None and v > hi:
        raise ConfigError(f"field '{name}'={v} must be <= {hi}")


def validate(cfg: RunConfig):
    p, s, v, h = cfg.problem, cfg.schedule, cfg.solver, cfg.harness
    if p.profile not in PROFILES:
        raise ConfigError(f"field 'problem.profile': unknown profile {p.profile!r}; known: {PROFILES}")
    if not isinstance(p.profile_params, dict):
        raise ConfigError("field 'problem.profile_params' must be a mapping")
    _num("problem.gamma", p.gamma, 1.0)
    if isinstance(p.n_dim, bool) or not isinstance(p.n_dim, int) or p.n_dim < 2:
        raise ConfigError("field 'problem.n_dim' must be an integer >= 2")
    _num("problem.T", p.T, 0.0, lo_open=False)
    if len(s.eps) == 0:
        raise ConfigError("field 'schedule.eps' must not be empty")
    if any(b >= a for a, b in zip(s.eps, s.eps[1:])):
        raise ConfigError("field 'schedule.eps' must be strictly decreasing")
    _num("schedule.m0_budget", s.m0_budget, 0.0)
    bad = set(s.exponents) - {f.name for f in dataclasses.fields(Exponents)}
    if bad:
        raise ConfigError(f"field 'schedule.exponents': unknown key(s) {sorted(bad)}")
    _num("solver.h", v.h, 0.0, 1.0)
    _num("solver.cfl", v.cfl, 0.0, 1.0)
    if v.scheme not in SCHEMES:
        raise ConfigError(f"field 'solver.scheme': unknown scheme {v.scheme!r}; known: {SCHEMES}")
    if v.dissipation_rule not in ("implicit", "midpoint"):
        raise ConfigError("field 'solver.dissipation_rule' must be 'implicit' or 'midpoint'")
    if isinstance(v.n_snapshots, bool) or not isinstance(v.n_snapshots, int) or v.n_snapshots < 2:
        raise ConfigError("field 'solver.n_snapshots' must be an integer >= 2")
    for d in h.deltas:
        if not 0.0 < d < 0.5:
            raise ConfigError(f"field 'harness.deltas': {d} outside (0, 1/2)")
    for name in ("omega", "test_support", "time_window"):
        pair = getattr(h, name)
        if len(pair) != 2 or not 0.0 <= pair[0] < pair[1]:
            raise ConfigError(f"field 'harness.{name}' must be two increasing non-negative numbers")
    if h.time_window[1] > 1.0:
        raise ConfigError("field 'harness.time_window' is a fraction of T and must end by 1")
    if isinstance(h.n_random_tests, bool) or not isinstance(h.n_random_tests, int) or h.n_random_tests < 0:
        raise ConfigError("field 'harness.n_random_tests' must be a non-negative integer")
    if not isinstance(h.sphere_order, int) or h.sphere_order < 2:
        raise ConfigError("field 'harness.sphere_order' must be an integer >= 2")
    _num("harness.energy_tol", h.energy_tol, 0.0, lo_open=False)
    _num("harness.equivalence_tol", h.equivalence_tol, 0.0)
