from pathlib import Path

import pytest

from radvisc.config import RunConfig, load, loads
from radvisc.errors import ConfigError

CONFIGS = Path(__file__).resolve().parents[1] / "configs"


@pytest.mark.parametrize("name", ["reference.yaml", "constant.yaml"])
def test_round_trip_is_identity(name):
    cfg = load(CONFIGS / name)
    again = loads(cfg.dumps())
    assert again == cfg
    assert again.dumps() == cfg.dumps()


def test_defaults_round_trip():
    cfg = RunConfig()
    assert loads(cfg.dumps()) == cfg


def test_exponent_notation_without_dot_is_numeric():
    cfg = loads("solver:\n  h: 1e-3\nschedule:\n  eps: [1e-1, 1e-2]\n")
    assert cfg.solver.h == 1e-3
    assert cfg.schedule.eps == (0.1, 0.01)


def test_malformed_yaml_reports_line():
    with pytest.raises(ConfigError, match="line 3"):
        loads("problem:\n  gamma: 2.0\n bad: [\n")


@pytest.mark.parametrize(
    "text, match",
    [
        ("problem:\n  gama: 2.0\n", "problem.gama"),
        ("extra: 1\n", "extra"),
        ("schedule:\n  eps: [0.01, 0.1]\n", "strictly decreasing"),
        ("schedule:\n  eps: [0.1, 0.1]\n", "strictly decreasing"),
        ("schedule:\n  eps: []\n", "empty"),
        ("problem:\n  profile: square\n", "unknown profile"),
        ("solver:\n  scheme: weno\n", "unknown scheme"),
        ("harness:\n  deltas: [0.6]\n", "deltas"),
        ("problem:\n  gamma: abc\n", "number"),
        ("schedule:\n  exponents: {zeta: 1}\n", "exponents"),
        ("- 1\n- 2\n", "mapping"),
    ],
)
def test_invalid_configs(text, match):
    with pytest.raises(ConfigError, match=match):
        loads(text)
