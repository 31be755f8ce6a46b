"""Space-time integrals, weak residuals and sweep reports evaluated on solver trajectories.

Time integrals use the trapezoid rule over snapshot times.  Radial
integrals with weight ``r**(n-1)`` use the dual-cell volumes of the grid
unless stated otherwise; fields are taken as zero outside ``(a, b)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import AdmissibilityError, DomainError
from .model import GasLaw, RadialField, RadialGrid
from .solver import Trajectory
from .testfunctions import (
    MultiDTestFunction,
    Profile,
    TestFunction,
    radial_test_from_multiD,
    sphere_rule,
)

ADMISSIBILITY_TOL = 1e-12


def time_weights(times):
    """Trapezoid weights on the (possibly non-uniform) snapshot times."""
    t = np.asarray(times, dtype=float)
    w = np.zeros_like(t)
    if t.size > 1:
        dt = np.diff(t)
        w[:-1] += 0.5 * dt
        w[1:] += 0.5 * dt
    return w


def space_time(traj: Trajectory, values):
    """``int_0^T int_a^b values r**(n-1) dr dt`` for nodal ``values`` of shape ``(K, N)``."""
    return float(time_weights(traj.times) @ (np.asarray(values) @ traj.grid.volumes))


def space_time_plain(traj: Trajectory, values):
    """``int_0^T int_a^b values dr dt`` (no radial weight)."""
    return float(time_weights(traj.times) @ (np.asarray(values) @ traj.grid.cell_widths))


def _grad_r(traj: Trajectory, f):
    return np.gradient(f, traj.grid.nodes, axis=1, edge_order=2)


def _eval(phi, t, r):
    return np.broadcast_to(np.asarray(phi(t[:, None], r[None, :]), dtype=float), (t.size, r.size))


def radial_weights(grid: RadialGrid, r_lo, l):
    """Weights ``w`` with ``sum(w * g) = int_{r_lo}^b g_lin(y) y**l dy`` exactly.

    ``g_lin`` is the piecewise-linear interpolant of nodal values ``g``.
    """
    r = grid.nodes
    if not (r[0] <= r_lo < r[-1]):
        raise DomainError(f"radius {r_lo} outside [a, b)")
    w = np.zeros_like(r)
    i0 = int(np.searchsorted(r, r_lo, side="right") - 1)

    def seg(x0, x1):
        I_l = (x1 ** (l + 1) - x0 ** (l + 1)) / (l + 1)
        I_l1 = (x1 ** (l + 2) - x0 ** (l + 2)) / (l + 2)
        h = x1 - x0
        return (x1 * I_l - I_l1) / h, (I_l1 - x0 * I_l) / h

    # first (partial) segment: endpoint value at r_lo interpolated from nodes i0, i0+1
    x0, x1 = r[i0], r[i0 + 1]
    s = (r_lo - x0) / (x1 - x0)
    w_lo, w_hi = seg(r_lo, x1)
    w[i0] += w_lo * (1.0 - s)
    w[i0 + 1] += w_lo * s + w_hi
    if i0 + 1 < r.size - 1:
        x0, x1 = r[i0 + 1 : -1], r[i0 + 2 :]
        a0, a1 = seg(x0, x1)
        np.add.at(w, np.arange(i0 + 1, r.size - 1), a0)
        np.add.at(w, np.arange(i0 + 2, r.size), a1)
    return w


# energy --------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyReport:
    E0: float
    sup_energy: float
    dissipation: float
    max_total: float
    tol: float
    atol: float = 1e-10

    @property
    def passed(self):
        return self.max_total <= self.E0 * (1.0 + self.tol) + self.atol


def energy_report(traj: Trajectory, tol=1e-4, atol=1e-10) -> EnergyReport:
    """``E0``, ``sup_t E(t)``, total dissipation and ``max_t [E(t) + D(t)]``.

    The check compares ``max_t [E(t) + D(t)]`` with ``E0 (1 + tol) + atol``
    (``atol`` covers roundoff when ``E0 = 0``); the
    energy at ``t`` plus the dissipation accumulated up to ``t`` is the
    quantity the estimate bounds at every time.
    """
    E = np.asarray(traj.energy, dtype=float)
    D = np.asarray(traj.dissipation, dtype=float).sum(axis=1)
    return EnergyReport(float(E[0]), float(E.max()), float(D[-1]), float(np.max(E + D)), float(tol), float(atol))


# integrability ---------------------------------------------------------------


@dataclass(frozen=True)
class HigherIntegrability:
    total: float
    kinetic: float
    pressure: float


def higher_integrability(traj: Trajectory, omega: Profile) -> HigherIntegrability:
    """``int int (rho |u|**3 + rho**(gamma + theta)) omega r**(n-1)`` and its two parts."""
    law = traj.law
    w = np.asarray(omega.value(traj.grid.nodes), dtype=float)
    if np.any(w < 0.0):
        raise DomainError("omega must be non-negative")
    kin = traj.rho * np.abs(traj.u) ** 3 * w
    prs = traj.rho ** (law.gamma + law.theta) * w
    return HigherIntegrability(space_time(traj, kin + prs), space_time(traj, kin), space_time(traj, prs))


def tail_density_integrals(snapshot: RadialField, grid: RadialGrid, law: GasLaw, l, r):
    """``int_r^b rho**gamma y**l dy`` with exact weights for the linear interpolant of ``rho**gamma``."""
    if int(l) != l or not 0 <= l <= grid.n_dim - 1:
        raise DomainError(f"l must be an integer in [0, {grid.n_dim - 1}]")
    return float(radial_weights(grid, r, int(l)) @ snapshot.rho**law.gamma)


def tail_density_sup(traj: Trajectory, l, r):
    """``sup_t int_r^b rho**gamma y**l dy`` over snapshots."""
    w = radial_weights(traj.grid, r, int(l))
    return float(np.max(traj.rho**traj.law.gamma @ w))


def tail_bound_shape(traj: Trajectory, l, r):
    """``r**(l + 1 - n) E0 + rho_bar**gamma b**(l + 1)``."""
    p = traj.params
    return r ** (l + 1 - traj.grid.n_dim) * traj.E0 + p.rho_bar**traj.law.gamma * p.b ** (l + 1)


def rho_cubed_integral(traj: Trajectory, r):
    """``int_0^T int_r^b rho**3 y**(n-1) dy dt`` (same radial rule as the tail integrals)."""
    w = radial_weights(traj.grid, r, traj.grid.n_dim - 1)
    return float(time_weights(traj.times) @ (traj.rho**3 @ w))


def rho_cubed_scale(params):
    return 1.0 + params.b**params.n_dim / params.eps


# viscous derivative integrals ------------------------------------------------


def _check_delta(Delta):
    if not (0.0 < Delta < 0.5):
        raise DomainError(f"Delta must lie in (0, 1/2), got {Delta}")


def viscous_derivative_integrals(traj: Trajectory, Delta, omega: Profile):
    """``eps int int rho_r**2 1{rho<Delta} omega**2`` and the same with ``rho_r**2 / rho``.

    The indicator is evaluated nodewise without smoothing.
    """
    _check_delta(Delta)
    eps = traj.params.eps
    rho_r = _grad_r(traj, traj.rho)
    ind = traj.rho < Delta
    w2 = np.asarray(omega.value(traj.grid.nodes), dtype=float) ** 2
    base = np.where(ind, rho_r**2, 0.0) * w2
    return eps * space_time(traj, base), eps * space_time(traj, base / traj.rho)


def lemma_shapes(eps, a, gamma, Delta):
    """Right-hand side shapes of the two derivative bounds (constants dropped)."""
    _check_delta(Delta)
    se = math.sqrt(eps)
    ld = abs(math.log(Delta))
    s1 = se * (1.0 + Delta ** (4.0 - gamma)) + Delta / a + Delta**1.5 / se
    s2 = ld + math.sqrt(Delta) / se + math.sqrt(Delta) / a + se * ld * Delta ** ((2.0 - gamma) / 2.0)
    return s1, s2


# truncated entropy identity ----------------------------------------------------


@dataclass(frozen=True)
class Truncation:
    """Convex ``phi(rho)`` with ``phi'`` and ``phi''`` used in the continuity identity."""

    name: str
    Delta: float

    def value(self, rho):
        D = self.Delta
        if self.name == "quadratic":
            return np.where(rho < D, 0.5 * rho**2, 0.5 * D * D + D * (rho - D))
        return np.where(rho < D, rho * np.log(rho) - rho, rho * math.log(D) - D)

    def d1(self, rho):
        D = self.Delta
        if self.name == "quadratic":
            return np.minimum(rho, D)
        return np.log(np.minimum(rho, D))

    def d2(self, rho):
        D = self.Delta
        if self.name == "quadratic":
            return np.where(rho < D, 1.0, 0.0)
        return np.where(rho < D, 1.0 / rho, 0.0)


def truncation(name, Delta):
    _check_delta(Delta)
    if name not in ("quadratic", "log"):
        raise DomainError("truncation must be 'quadratic' or 'log'")
    return Truncation(name, float(Delta))


@dataclass(frozen=True)
class IdentityResidual:
    lhs: float
    terms: dict
    rhs: float

    @property
    def residual(self):
        return abs(self.lhs - self.rhs)


def continuity_identity_residual(traj: Trajectory, trunc: Truncation, omega: Profile) -> IdentityResidual:
    """Both sides of the truncated continuity identity with cutoff ``omega``.

    ``lhs = eps int int phi''(rho) rho_r**2 omega**2 r**(n-1)``; the right side
    is the sum of the signed ``terms``: terminal minus initial mass of
    ``phi``, the two ``(phi - rho phi')`` terms, the ``omega_r`` transport
    term, the ``omega_r`` viscous term and the viscous flux through ``r = b``.
    """
    eps = traj.params.eps
    r = traj.grid.nodes
    n = traj.grid.n_dim
    rho, u = traj.rho, traj.u
    w = np.asarray(omega.value(r), dtype=float)
    wr = np.asarray(omega.deriv(r), dtype=float)
    rho_r = _grad_r(traj, rho)
    u_r = _grad_r(traj, u)
    ph, d1, d2 = trunc.value(rho), trunc.d1(rho), trunc.d2(rho)
    g = ph - rho * d1
    V = traj.grid.volumes
    lhs = eps * space_time(traj, d2 * rho_r**2 * w**2)
    bflux = eps * r[-1] ** (n - 1) * d1[:, -1] * rho_r[:, -1] * w[-1] ** 2
    terms = {
        "time_boundary": -float((ph[-1] - ph[0]) * w**2 @ V),
        "u_r": space_time(traj, g * u_r * w**2),
        "omega_r_transport": 2.0 * space_time(traj, ph * u * w * wr),
        "geometric": space_time(traj, (n - 1) / r * g * u * w**2),
        "omega_r_viscous": -2.0 * eps * space_time(traj, d1 * rho_r * w * wr),
        "outer_boundary": float(time_weights(traj.times) @ bflux),
    }
    return IdentityResidual(lhs, terms, float(sum(terms.values())))


# weak residuals ----------------------------------------------------------------


@dataclass(frozen=True)
class WeakResidual:
    """``euler`` is the weak form of the limit equation on ``(a, b)``.

    For a discrete viscous solution ``euler + delta_term ~ viscous + boundary``;
    ``consistency`` is the mismatch.
    """

    euler: float
    viscous: float
    boundary: float = 0.0
    delta_term: float = 0.0

    @property
    def consistency(self):
        return abs(self.euler + self.delta_term - self.viscous - self.boundary)


def weak_residual_continuity(traj: Trajectory, phi: TestFunction) -> WeakResidual:
    """Weak continuity residual including the initial and terminal time terms."""
    t, r = traj.times, traj.grid.nodes
    n = traj.grid.n_dim
    V = traj.grid.volumes
    ph = _eval(phi.phi, t, r)
    pt = _eval(phi.phi_t, t, r)
    pr = _eval(phi.phi_r, t, r)
    euler = space_time(traj, traj.rho * pt + traj.m * pr)
    euler += float((traj.rho[0] * ph[0]) @ V - (traj.rho[-1] * ph[-1]) @ V)
    rho_r = _grad_r(traj, traj.rho)
    viscous = traj.params.eps * space_time(traj, rho_r * pr)
    bnd = -traj.params.eps * r[-1] ** (n - 1) * rho_r[:, -1] * ph[:, -1]
    return WeakResidual(euler, viscous, float(time_weights(t) @ bnd))


def check_admissible(phi: TestFunction, times):
    v = phi.max_origin_value(times)
    if not v <= ADMISSIBILITY_TOL:
        raise AdmissibilityError(f"test function has |phi(t, 0)| = {v:.3e} > {ADMISSIBILITY_TOL}")


def weak_residual_momentum(traj: Trajectory, phi: TestFunction, phi_eps: TestFunction | None = None) -> WeakResidual:
    """Weak momentum residual with the limit pressure, plus the viscous right side.

    ``phi`` must vanish at ``r = 0``.  ``phi_eps`` (default ``phi``) is the
    function actually integrated; pass a version vanishing on ``[0, a]``
    for the viscous identity.  ``delta_term`` holds the contribution of the
    artificial ``delta rho**2`` pressure.
    """
    t, r = traj.times, traj.grid.nodes
    check_admissible(phi, t)
    test = phi_eps or phi
    n = traj.grid.n_dim
    V = traj.grid.volumes
    law = traj.law
    ph = _eval(test.phi, t, r)
    pt = _eval(test.phi_t, t, r)
    pr = _eval(test.phi_r, t, r)
    rho, m = traj.rho, traj.m
    div = pr + (n - 1) / r * ph
    euler = space_time(traj, m * pt + m * m / rho * pr + law.euler_pressure(rho) * div)
    euler += float((m[0] * ph[0]) @ V - (m[-1] * ph[-1]) @ V)
    delta_term = space_time(traj, law.delta * rho**2 * div)
    M = r ** (n - 1) * m
    M_r = _grad_r(traj, M)
    eps = traj.params.eps
    viscous = eps * space_time_plain(traj, M_r * pr + (n - 1) / r * M_r * ph)
    bnd = r[-1] ** (n - 1) * law.pressure(rho[:, -1]) * ph[:, -1] - eps * M_r[:, -1] * ph[:, -1]
    return WeakResidual(euler, viscous, float(time_weights(t) @ bnd), delta_term)


# multi-dimensional equivalence ---------------------------------------------


@dataclass(frozen=True)
class Equivalence:
    multi_d: float
    radial: float

    @property
    def discrepancy(self):
        return abs(self.multi_d - self.radial)


def multiD_equivalence_check(traj: Trajectory, phi_md: MultiDTestFunction, j, n_dim, sphere_order=32) -> Equivalence:
    """Multi-dimensional momentum weak integral vs the radial one tested against the sphere moment.

    Both use the same ``(t, r)`` rule; the multi-dimensional side uses the
    sphere rule for the angular integral.  Pressure is the limit pressure.
    """
    if n_dim != traj.grid.n_dim:
        raise DomainError("n_dim does not match the trajectory")
    Y, W = sphere_rule(n_dim, sphere_order)
    t, r = traj.times, traj.grid.nodes
    rho, m = traj.rho, traj.m
    u = traj.u
    p = traj.law.euler_pressure(rho)
    V = traj.grid.volumes
    yj = Y[:, j]
    inside = r < phi_md.support_bound
    rs = r[inside]
    X = rs[:, None, None] * Y[None, :, :]
    md = np.zeros((t.size, r.size))
    for k in range(t.size):
        tk = np.full(X.shape[:-1], t[k])
        g = phi_md.grad(tk, X)
        radial_g = np.sum(g * Y[None, :, :], axis=-1)
        mk, uk = m[k][inside], u[k][inside]
        integrand = (
            (mk[:, None] * yj[None, :]) * phi_md.dt(tk, X)
            + (mk * uk)[:, None] * yj[None, :] * radial_g
            + p[k][inside][:, None] * g[..., j]
        )
        md[k, inside] = integrand @ W
    multi = space_time(traj, md)
    ends = []
    for k in (0, -1):
        vals = phi_md.value(np.full(X.shape[:-1], t[k]), X)
        ends.append(((m[k][inside][:, None] * yj[None, :]) * vals) @ W @ V[inside])
    multi += float(ends[0] - ends[1])

    zeta = radial_test_from_multiD(phi_md, j, n_dim, sphere_order)
    zt = np.asarray(zeta.phi_t(t[:, None], r[None, :]))
    zr = np.asarray(zeta.phi_r(t[:, None], r[None, :]))
    z = np.asarray(zeta.phi(t[:, None], r[None, :]))
    rad = space_time(traj, m * zt + m * u * zr + p * (zr + (n_dim - 1) / r * z))
    rad += float((m[0] * z[0]) @ V - (m[-1] * z[-1]) @ V)
    return Equivalence(multi, rad)


# trend fits and sweep reports ---------------------------------------------------


def loglog_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x``; ``nan`` if undefined."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    ok = (x > 0) & (y > 0) & np.isfinite(x) & np.isfinite(y)
    if ok.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[ok]), np.log(y[ok]), 1)[0])


def spread(values):
    """``max / min`` of positive values; ``inf`` if any is non-positive or missing."""
    v = np.asarray(values, dtype=float)
    if v.size == 0 or np.any(~np.isfinite(v)) or np.any(v <= 0.0):
        return float("inf")
    return float(v.max() / v.min())


@dataclass
class CriterionResult:
    name: str
    passed: bool
    detail: str
    value: float = float("nan")


@dataclass
class EstimateReport:
    """Per-level values of every tracked quantity plus fitted trends and verdicts."""

    eps: list
    rows: list = field(default_factory=list)
    slopes: dict = field(default_factory=dict)
    criteria: list = field(default_factory=list)
    failures: dict = field(default_factory=dict)

    def values(self, quantity):
        out = []
        for e in self.eps:
            hit = [r["value"] for r in self.rows if r["eps"] == e and r["quantity"] == quantity]
            out.append(hit[0] if hit else float("nan"))
        return np.array(out, dtype=float)

    def quantities(self):
        seen = []
        for r in self.rows:
            if r["quantity"] not in seen:
                seen.append(r["quantity"])
        return seen

    @property
    def passed(self):
        return all(c.passed for c in self.criteria) and not self.failures

