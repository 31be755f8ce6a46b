"""Coupled parameter schedules ``(delta, rho_bar, a, b)`` for a viscosity level ``eps``."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

from .errors import ScheduleError

DEFAULT_M0 = 10.0

ADDENDS = (
    "eps_bn_over_a",
    "delta_log_a",
    "rhobar_theta_log_a",
    "rhobar_gamma_bn",
    "sqrt_eps_over_a",
    "convergence_hyp",
)


@dataclass(frozen=True)
class Exponents:
    """``a = eps**a_exp``, ``b = eps**(-1/(b_div n))``, ``delta = eps**delta_exp``.

    ``rho_bar = min(eps**(1/(rho_div gamma)), |log eps|**(-log_power/theta))``.
    """

    a_exp: float = 1.0 / 3.0
    b_div: float = 4.0
    delta_exp: float = 3.0
    rho_div: float = 2.0
    log_power: float = 2.0


@dataclass(frozen=True)
class ViscousParams:
    eps: float
    delta: float
    rho_bar: float
    a: float
    b: float
    n_dim: int
    gamma: float
    m0_budget: float = DEFAULT_M0
    constraint_values: dict = field(default_factory=dict, compare=False)

    def to_dict(self):
        return {
            "eps": self.eps,
            "delta": self.delta,
            "rho_bar": self.rho_bar,
            "a": self.a,
            "b": self.b,
            "n_dim": self.n_dim,
            "gamma": self.gamma,
            "m0_budget": self.m0_budget,
            "constraint_values": dict(self.constraint_values),
        }

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d.setdefault("constraint_values", {})
        return cls(**d)


@dataclass(frozen=True)
class ConstraintReport:
    addends: dict
    total: float
    budget: float
    delta_le_eps: bool

    @property
    def passed(self):
        return (
            self.total <= self.budget
            and all(v <= self.budget for v in self.addends.values())
            and self.delta_le_eps
        )

    def violating(self):
        for name, v in self.addends.items():
            if not v <= self.budget:
                return name, v
        if self.total > self.budget:
            return "total", self.total
        if not self.delta_le_eps:
            return "delta_le_eps", float("nan")
        return None


def constraint_addends(eps, delta, rho_bar, a, b, n_dim, gamma):
    """The five smallness addends plus the convergence hypothesis ``rho_bar**gamma b**n + delta b**n / eps``."""
    theta = (gamma - 1.0) / 2.0
    bn = b**n_dim
    la = abs(math.log(a))
    return {
        "eps_bn_over_a": eps * bn / a,
        "delta_log_a": delta * la * (1.0 + bn / eps),
        "rhobar_theta_log_a": rho_bar**theta * la,
        "rhobar_gamma_bn": rho_bar**gamma * bn,
        "sqrt_eps_over_a": math.sqrt(eps) / a,
        "convergence_hyp": rho_bar**gamma * bn + delta / eps * bn,
    }


def verify_constraints(params: ViscousParams) -> ConstraintReport:
    """Evaluate every addend, their sum, and ``delta <= eps`` against the budget."""
    add = constraint_addends(
        params.eps, params.delta, params.rho_bar, params.a, params.b, params.n_dim, params.gamma
    )
    total = sum(v for k, v in add.items() if k != "convergence_hyp")
    return ConstraintReport(add, total, params.m0_budget, params.delta <= params.eps)


def schedule(eps, n_dim, gamma, m0_budget=DEFAULT_M0, exponents: Exponents | None = None) -> ViscousParams:
    """One admissible parameter set for viscosity ``eps``.

    Raises ScheduleError if the resulting radii leave ``a in (0,1)``,
    ``b > 1`` or if any constraint exceeds ``m0_budget``.
    """
    ex = exponents or Exponents()
    if not (0.0 < eps < 1.0):
        raise ScheduleError(f"eps must lie in (0, 1), got {eps}", addend="eps", value=eps)
    if int(n_dim) != n_dim or n_dim < 2:
        raise ScheduleError("n_dim must be an integer >= 2", addend="n_dim", value=n_dim)
    if gamma <= 1.0:
        raise ScheduleError("gamma must exceed 1", addend="gamma", value=gamma)
    theta = (gamma - 1.0) / 2.0
    a = eps**ex.a_exp
    b = eps ** (-1.0 / (ex.b_div * n_dim))
    if not (0.0 < a < 1.0):
        raise ScheduleError(f"inner radius a={a} outside (0, 1)", addend="a", value=a)
    if not b > 1.0:
        raise ScheduleError(f"outer radius b={b} not above 1", addend="b", value=b)
    delta = eps**ex.delta_exp
    rho_bar = min(eps ** (1.0 / (ex.rho_div * gamma)), abs(math.log(eps)) ** (-ex.log_power / theta))
    params = ViscousParams(eps, delta, rho_bar, a, b, int(n_dim), float(gamma), float(m0_budget))
    report = verify_constraints(params)
    bad = report.violating()
    if bad is not None:
        raise ScheduleError(f"constraint {bad[0]}={bad[1]:.4g} exceeds budget {m0_budget}", *bad)
    return ViscousParams(
        eps, delta, rho_bar, a, b, int(n_dim), float(gamma), float(m0_budget), dict(report.addends)
    )


def schedule_table_csv(params_list):
    """CSV rows ``eps, a, b, delta, rho_bar, <addends>, total, pass``."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["eps", "a", "b", "delta", "rho_bar", *ADDENDS, "total", "pass"])
    for p in params_list:
        rep = verify_constraints(p)
        w.writerow(
            [repr(p.eps), repr(p.a), repr(p.b), repr(p.delta), repr(p.rho_bar)]
            + [repr(rep.addends[k]) for k in ADDENDS]
            + [repr(rep.total), "pass" if rep.passed else "fail"]
        )
    return buf.getvalue()
