import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from radvisc.errors import ScheduleError
from radvisc.scheduler import (
    Exponents,
    ViscousParams,
    schedule,
    schedule_table_csv,
    verify_constraints,
)


def test_eps_one_is_rejected():
    with pytest.raises(ScheduleError) as info:
        schedule(1.0, 3, 2.0)
    assert info.value.addend == "eps"


def test_reference_level_values():
    p = schedule(1e-3, 3, 2.0, 10.0)
    assert p.a == pytest.approx(0.1, rel=1e-14)
    assert p.b == pytest.approx(10.0**0.25, rel=1e-14)
    assert p.delta == pytest.approx(1e-9, rel=1e-14)
    theta = 0.5
    rho_bar = min(1e-3 ** (1 / 4), abs(math.log(1e-3)) ** (-2 / theta))
    assert p.rho_bar == pytest.approx(rho_bar, rel=1e-14)
    bn = p.b**3
    la = math.log(10.0)
    expected = [
        1e-3 * bn / 0.1,
        1e-9 * la * (1 + bn / 1e-3),
        rho_bar**theta * la,
        rho_bar**2 * bn,
        math.sqrt(1e-3) / 0.1,
    ]
    rep = verify_constraints(p)
    assert rep.total == pytest.approx(sum(expected), rel=1e-12)
    assert rep.passed
    assert all(v <= 10.0 for v in rep.addends.values())
    assert len(rep.addends) == 6


def test_zero_delta_and_rho_bar_leave_two_addends():
    p = ViscousParams(eps=1e-2, delta=0.0, rho_bar=0.0, a=0.2, b=1.5, n_dim=3, gamma=2.0)
    rep = verify_constraints(p)
    assert rep.total == pytest.approx(1e-2 * 1.5**3 / 0.2 + 0.1 / 0.2, rel=1e-14)


def test_total_increases_with_b():
    p = schedule(1e-2, 3, 2.0)
    q = ViscousParams(p.eps, p.delta, p.rho_bar, p.a, 2 * p.b, p.n_dim, p.gamma)
    assert verify_constraints(q).total > verify_constraints(p).total


@pytest.mark.parametrize("n_dim", [2, 3])
@pytest.mark.parametrize("gamma", [1.4, 2.0, 3.0])
def test_feasible_on_reference_range(n_dim, gamma):
    eps = np.geomspace(1e-1, 1e-6, 26)
    ps = [schedule(e, n_dim, gamma, 10.0) for e in eps]
    assert all(verify_constraints(p).passed for p in ps)
    ratio = [math.sqrt(p.eps) / p.a for p in ps]
    assert all(b < a for a, b in zip(ratio, ratio[1:]))
    for attr, sign in (("a", -1), ("b", 1), ("rho_bar", -1), ("delta", -1)):
        seq = np.array([getattr(p, attr) for p in ps])
        assert np.all(sign * np.diff(seq) >= 0.0)
    assert all(p.delta <= p.eps for p in ps)


@settings(max_examples=60, deadline=None)
@given(eps=st.floats(1e-6, 1e-1), n_dim=st.sampled_from([2, 3]))
def test_schedule_is_deterministic(eps, n_dim):
    assert schedule(eps, n_dim, 2.0) == schedule(eps, n_dim, 2.0)


def test_budget_violation_names_addend():
    with pytest.raises(ScheduleError) as info:
        schedule(0.1, 3, 2.0, m0_budget=0.5)
    assert info.value.addend is not None


def test_exponent_override():
    p = schedule(1e-2, 3, 2.0, exponents=Exponents(a_exp=0.25))
    assert p.a == pytest.approx(1e-2**0.25)


def test_table_csv_has_one_row_per_level():
    text = schedule_table_csv([schedule(e, 3, 2.0) for e in (0.1, 0.01)])
    lines = text.strip().splitlines()
    assert len(lines) == 3
    assert lines[0].startswith("eps,a,b,delta,rho_bar,")
    assert lines[1].endswith(",pass")
