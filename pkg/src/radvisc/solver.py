"""IMEX finite-volume solver for the viscous radial gas system on ``(a, b)``.

Unknowns live at grid nodes; node ``i`` owns the dual cell between
neighbouring midpoints.  Per step:

* convection and pressure are advanced explicitly with a local Lax-Friedrichs
  flux, differenced with ``r**(n-1)``-weighted edge areas.  The geometric
  source is ``p_i (A_+ - A_-)``, so a constant state is an exact fixed point;
* density diffusion ``eps (r**(n-1) rho_r)_r`` is solved implicitly as a
  finite-volume tridiagonal system (zero flux at ``a``, ``rho = rho_bar`` at ``b``);
* momentum diffusion ``eps [M_rr - (n-1)/r M_r]`` acts on the lumped
  variable ``M = r**(n-1) m`` with a nodal three-point stencil and
  ``M = 0`` at both ends.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable

import numpy as np
from scipy.linalg import solve_banded

from .errors import ConfigError, DataError, SolverError
from .model import GasLaw, RadialField, RadialGrid, discrete_energy
from .scheduler import ViscousParams
from .testfunctions import smooth_step

SCHEMES = ("llf1", "llf2")


@dataclass(frozen=True)
class SolverConfig:
    """Time stepping controls.

    ``viscous_factor`` (optional) additionally caps ``dt`` by
    ``viscous_factor * min(h**2) / eps``; the implicit treatment makes it
    unnecessary for stability.  ``fixed_dt`` overrides the adaptive step.
    """

    T_final: float = 0.5
    cfl: float = 0.4
    scheme: str = "llf1"
    viscous_factor: float | None = None
    n_snapshots: int = 51
    snapshot_times: tuple | None = None
    density_floor: float = 1e-12
    fixed_dt: float | None = None
    max_steps: int = 10_000_000
    dissipation_rule: str = "implicit"

    def __post_init__(self):
        if not (0.0 < self.cfl <= 1.0):
            raise ConfigError(f"cfl must lie in (0, 1], got {self.cfl}")
        if not (self.T_final >= 0.0 and math.isfinite(self.T_final)):
            raise ConfigError("T_final must be finite and >= 0")
        if self.scheme not in SCHEMES:
            raise ConfigError(f"unknown scheme {self.scheme!r}; choose from {SCHEMES}")
        if self.dissipation_rule not in ("implicit", "midpoint"):
            raise ConfigError("dissipation_rule must be 'implicit' or 'midpoint'")
        if self.n_snapshots < 1:
            raise ConfigError("n_snapshots must be >= 1")
        if self.fixed_dt is not None and not self.fixed_dt > 0.0:
            raise ConfigError("fixed_dt must be positive")
        if self.viscous_factor is not None and not self.viscous_factor > 0.0:
            raise ConfigError("viscous_factor must be positive")

    def times(self):
        if self.snapshot_times is not None:
            ts = np.asarray(self.snapshot_times, dtype=float)
            if ts.size == 0 or ts[0] != 0.0 or np.any(np.diff(ts) <= 0.0) or ts[-1] > self.T_final:
                raise ConfigError("snapshot_times must start at 0, increase strictly and end by T_final")
            return ts
        if self.T_final == 0.0:
            return np.array([0.0])
        return np.linspace(0.0, self.T_final, max(2, self.n_snapshots))

    def to_dict(self):
        d = {k: getattr(self, k) for k in self.__dataclass_fields__}
        if d["snapshot_times"] is not None:
            d["snapshot_times"] = list(d["snapshot_times"])
        return d


# initial data -------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class InitialData:
    """Nodal initial state adapted to the truncated domain."""

    rho: np.ndarray
    m: np.ndarray
    mollification_width: float
    layer_width: float
    c_eps: float
    energy: float
    energy_target: float | None = None

    @property
    def energy_deviation(self):
        if self.energy_target is None:
            return None
        return abs(self.energy - self.energy_target) / max(abs(self.energy_target), 1e-300)

    def state(self):
        return RadialField(0.0, self.rho.copy(), self.m.copy(), np.zeros(3), self.c_eps)


_GL_S, _GL_W = np.polynomial.legendre.leggauss(24)
_KERNEL = np.exp(-1.0 / (1.0 - _GL_S**2))
_KERNEL_W = _GL_W * _KERNEL / np.dot(_GL_W, _KERNEL)


def _mollify(f: Callable, r, width, odd):
    """Convolve ``f`` with a normalized bump of half-width ``width``; ``f`` is reflected at 0."""
    pts = r[:, None] - width * _GL_S[None, :]
    vals = np.asarray(f(np.abs(pts)), dtype=float)
    if odd:
        vals = np.where(pts < 0.0, -vals, vals)
    return vals @ _KERNEL_W


def prepare_initial_data(
    rho0_raw: Callable,
    m0_raw: Callable,
    params: ViscousParams,
    grid: RadialGrid,
    law: GasLaw | None = None,
    mollification_width=None,
    layer_width=None,
    floor=1e-10,
    energy_target=None,
):
    """Smooth, blend and lift raw profiles into admissible data on ``grid``.

    The deviation ``rho0_raw - rho_bar`` and ``m0_raw`` are mollified, then
    blended so that ``rho`` is constant on ``[a, a + L]`` and equals
    ``rho_bar`` on ``[b - L, b]``, while ``m`` vanishes with all derivatives
    at ``a`` and identically on ``[b - L, b]``.  Density is finally lifted to
    ``max(rho_bar, floor)``.  Both boundary compatibility conditions then
    hold on any one-sided stencil supported in the layers.
    """
    law = law or GasLaw(params.gamma, params.delta)
    r = grid.nodes
    a, b, rho_bar = grid.a, grid.b, params.rho_bar
    span = b - a
    w = min(0.5 * a, span / 8.0) if mollification_width is None else float(mollification_width)
    L = min(0.5 * a, span / 8.0) if layer_width is None else float(layer_width)
    if not w >= 0.0 or w > span / 4.0:
        raise ConfigError(f"mollification width {w} must lie in [0, (b-a)/4]")
    if not L > 0.0 or 4.0 * L > span:
        raise ConfigError(f"boundary layers of width {L} do not fit in ({a}, {b})")

    raw_r = np.asarray(rho0_raw(r), dtype=float)
    raw_m = np.asarray(m0_raw(r), dtype=float)
    if not (np.all(np.isfinite(raw_r)) and np.all(np.isfinite(raw_m))):
        raise DataError("raw initial profiles are not finite on the grid")
    if np.any(raw_r < 0.0):
        raise DataError("raw initial density is negative")

    def dev(x):
        return np.asarray(rho0_raw(x), dtype=float) - rho_bar

    if w > 0.0:
        d = _mollify(dev, r, w, odd=False)
        mm = _mollify(m0_raw, r, w, odd=True)
    else:
        d, mm = dev(r), raw_m.copy()

    # density deviation: frozen at its value at a + 2L near a, zero near b
    d_in = d[np.searchsorted(r, a + 2.0 * L)] if np.any(r >= a + 2.0 * L) else d[-1]
    s_in = smooth_step((r - a - L) / L)
    s_out = 1.0 - smooth_step((r - (b - 2.0 * L)) / L)
    d = (s_in * d + (1.0 - s_in) * d_in) * s_out
    rho = rho_bar + d
    rho = np.maximum(rho, max(rho_bar, floor))
    rho[-1] = rho_bar if rho_bar >= floor else rho[-1]

    m = mm * smooth_step((r - a) / L) * s_out
    m[0] = 0.0
    m[-1] = 0.0

    e = discrete_energy(RadialField(0.0, rho, m), grid, rho_bar, law)
    if not math.isfinite(e):
        raise DataError("initial data have infinite discrete energy")
    return InitialData(rho, m, w, L, float(rho.min()), float(e), energy_target)


def constant_state(params: ViscousParams, grid: RadialGrid):
    """The steady state ``(rho_bar, 0)`` as initial data."""
    rho = np.full(grid.size, params.rho_bar)
    return InitialData(rho, np.zeros(grid.size), 0.0, 0.0, float(params.rho_bar), 0.0, 0.0)


# one step ----------------------------------------------------------------


@dataclass(frozen=True)
class StepInfo:
    dt: float
    boundary_mass_flux: float


def _minmod(x, y):
    return np.where(x * y > 0.0, np.sign(x) * np.minimum(np.abs(x), np.abs(y)), 0.0)


def _edge_states(q, r, order):
    if order == 1:
        return q[:-1], q[1:]
    dq = np.diff(q) / np.diff(r)
    slope = np.zeros_like(q)
    slope[1:-1] = _minmod(dq[:-1], dq[1:])
    mid = 0.5 * (r[1:] + r[:-1])
    return q[:-1] + slope[:-1] * (mid - r[:-1]), q[1:] + slope[1:] * (mid - r[1:])


def _convective_rates(rho, m, grid: RadialGrid, law: GasLaw, order):
    """Explicit rates ``(drho/dt, dm/dt)`` and the convective mass flux through the last interior edge."""
    r = grid.nodes
    A = grid.areas
    V = grid.volumes
    rl, rr = _edge_states(rho, r, order)
    ml, mr = _edge_states(m, r, order)
    if order == 2 and (np.any(rl <= 0.0) or np.any(rr <= 0.0)):
        rl, rr, ml, mr = rho[:-1], rho[1:], m[:-1], m[1:]
    pl, pr = law.pressure(rl), law.pressure(rr)
    alpha = np.maximum(np.abs(ml / rl) + law.sound_speed(rl), np.abs(mr / rr) + law.sound_speed(rr))
    f_rho = A * (0.5 * (ml + mr) - 0.5 * alpha * (rr - rl))
    f_mom = 0.5 * (ml * ml / rl + pl + mr * mr / rr + pr) - 0.5 * alpha * (mr - ml)

    drho = np.zeros_like(rho)
    drho[:-1] = -np.diff(np.concatenate(([0.0], f_rho))) / V[:-1]
    p = law.pressure(rho)
    dm = np.zeros_like(m)
    # pressure measured relative to the node value: exact balance for constant states
    dm[1:-1] = -(A[1:] * (f_mom[1:] - p[1:-1]) - A[:-1] * (f_mom[:-1] - p[1:-1])) / V[1:-1]
    return drho, dm, f_rho[-1]


def _mass_diffusion(d, dt, eps, grid: RadialGrid):
    """Backward Euler for ``V d_t = eps * flux difference`` on nodes ``0..N-1``, ``d = 0`` at ``b``."""
    V = grid.volumes[:-1]
    K = dt * eps * grid.areas / grid.spacing  # one per interior edge
    lower = np.zeros_like(V)
    upper = np.zeros_like(V)
    diag = V.copy()
    diag[:-1] += K[:-1]
    diag[1:] += K[:-1]
    diag[-1] += K[-1]
    upper[1:] = -K[:-1]
    lower[:-1] = -K[:-1]
    ab = np.vstack((upper, diag, lower))
    out = solve_banded((1, 1), ab, V * d[:-1], check_finite=False)
    return np.concatenate((out, [0.0]))


def _momentum_diffusion(M, dt, eps, grid: RadialGrid):
    """Backward Euler for ``M_t = eps (M_rr - (n-1)/r M_r)`` at interior nodes with ``M = 0`` at both ends."""
    r = grid.nodes
    hm = np.diff(r)[:-1]
    hp = np.diff(r)[1:]
    H = hm + hp
    g = (grid.n_dim - 1) / r[1:-1]
    lo = 2.0 / (hm * H) + g * hp / (hm * H)
    mid = -2.0 / (hm * hp) - g * (hp - hm) / (hm * hp)
    up = 2.0 / (hp * H) - g * hm / (hp * H)
    c = dt * eps
    diag = 1.0 - c * mid
    upper = np.zeros_like(diag)
    lower = np.zeros_like(diag)
    upper[1:] = -c * up[:-1]
    lower[:-1] = -c * lo[1:]
    ab = np.vstack((upper, diag, lower))
    out = np.zeros_like(M)
    out[1:-1] = solve_banded((1, 1), ab, M[1:-1], check_finite=False)
    return out


def dissipation_rates(rho, m, grid: RadialGrid, law: GasLaw):
    """The three weighted integrals (without the ``eps`` factor) at one state."""
    r = grid.nodes
    u = m / rho
    rho_r = grid.gradient(rho)
    u_r = grid.gradient(u)
    return np.array(
        [
            grid.integrate(law.internal_energy_d2(rho) * rho_r**2),
            grid.integrate(rho * u_r**2),
            grid.integrate((grid.n_dim - 1) * rho * u**2 / r**2),
        ]
    )


def stable_dt(state: RadialField, config: SolverConfig, params: ViscousParams, law: GasLaw, grid: RadialGrid):
    if config.fixed_dt is not None:
        return float(config.fixed_dt)
    speed = np.abs(state.m / state.rho) + law.sound_speed(state.rho)
    dt = config.cfl * float(np.min(grid.cell_widths / np.maximum(speed, 1e-300)))
    if config.viscous_factor is not None:
        dt = min(dt, config.viscous_factor * float(np.min(grid.spacing)) ** 2 / params.eps)
    return dt


def _check_floor(rho, floor, t, grid):
    bad = ~(rho >= floor)
    if np.any(bad):
        i = int(np.argmax(bad))
        raise SolverError(
            f"density {rho[i]:.3e} below floor {floor:.1e} at r={grid.nodes[i]:.6g}, t={t:.6g}",
            t=t,
            location=float(grid.nodes[i]),
        )


def step(state: RadialField, config: SolverConfig, params: ViscousParams, law: GasLaw, grid: RadialGrid, dt=None):
    """Advance one IMEX step; returns ``(new_state, StepInfo)``.

    ``dt`` defaults to the CFL-limited step.  ``StepInfo.boundary_mass_flux``
    is the time-integrated mass leaving the nodes ``0..N-1`` through the
    edge next to ``b`` (convective plus diffusive).
    """
    if dt is None:
        dt = stable_dt(state, config, params, law, grid)
    order = 2 if config.scheme == "llf2" else 1
    rho0, m0 = state.rho, state.m

    drho, dm, flux = _convective_rates(rho0, m0, grid, law, order)
    rho_s = rho0 + dt * drho
    m_s = m0 + dt * dm
    flux_int = flux
    if order == 2:
        _check_floor(rho_s, config.density_floor, state.t + dt, grid)
        drho2, dm2, flux2 = _convective_rates(rho_s, m_s, grid, law, order)
        rho_s = 0.5 * (rho0 + rho_s + dt * drho2)
        m_s = 0.5 * (m0 + m_s + dt * dm2)
        flux_int = 0.5 * (flux + flux2)
    _check_floor(rho_s, config.density_floor, state.t + dt, grid)

    rb = params.rho_bar
    rho1 = rb + _mass_diffusion(rho_s - rb, dt, params.eps, grid)
    rho1[-1] = rb
    w = grid.nodes ** (grid.n_dim - 1)
    m1 = _momentum_diffusion(w * m_s, dt, params.eps, grid) / w
    m1[0] = 0.0
    m1[-1] = 0.0
    t1 = state.t + dt
    _check_floor(rho1, config.density_floor, t1, grid)

    diff_flux = -params.eps * grid.areas[-1] * (rho1[-1] - rho1[-2]) / grid.spacing[-1]
    if config.dissipation_rule == "midpoint":
        rates = dissipation_rates(0.5 * (rho0 + rho1), 0.5 * (m0 + m1), grid, law)
    else:
        # end-of-step values: the rule consistent with backward Euler
        rates = dissipation_rates(rho1, m1, grid, law)
    acc = state.dissipation_acc + dt * params.eps * rates
    new = RadialField(t1, rho1, m1, acc, min(state.c_eps, float(rho1.min())) if state.c_eps else float(rho1.min()))
    return new, StepInfo(dt, dt * (flux_int + diff_flux))


# full run ------------------------------------------------------------------


@dataclass(eq=False)
class Trajectory:
    """Snapshots of a run with energy and dissipation bookkeeping."""

    times: np.ndarray
    rho: np.ndarray
    m: np.ndarray
    dissipation: np.ndarray
    energy: np.ndarray
    grid: RadialGrid
    params: ViscousParams
    law: GasLaw
    config: SolverConfig
    steps: int = 0
    boundary_mass_flux: float = 0.0
    status: str = "ok"
    c_eps: float = 0.0
    extra: dict = field(default_factory=dict)

    @property
    def E0(self):
        return float(self.energy[0])

    @property
    def snapshots(self):
        return [
            RadialField(float(t), self.rho[k], self.m[k], self.dissipation[k], self.c_eps)
            for k, t in enumerate(self.times)
        ]

    @property
    def T(self):
        return float(self.times[-1])

    @property
    def u(self):
        return self.m / self.rho

    def mass(self):
        return self.rho @ self.grid.volumes


def _trajectory(snaps, grid, params, law, config, steps, flux, status, c_eps):
    rho = np.array([s.rho for s in snaps])
    m = np.array([s.m for s in snaps])
    return Trajectory(
        times=np.array([s.t for s in snaps]),
        rho=rho,
        m=m,
        dissipation=np.array([s.dissipation_acc for s in snaps]),
        energy=np.array([discrete_energy(s, grid, params.rho_bar, law) for s in snaps]),
        grid=grid,
        params=params,
        law=law,
        config=config,
        steps=steps,
        boundary_mass_flux=flux,
        status=status,
        c_eps=c_eps,
    )


def run(init: InitialData, config: SolverConfig, params: ViscousParams, law: GasLaw, grid: RadialGrid) -> Trajectory:
    """March from ``init`` to ``T_final`` landing exactly on every snapshot time.

    A failing step raises SolverError with the partial trajectory attached.
    """
    times = config.times()
    state = init.state()
    snaps = [state.copy()]
    steps = 0
    flux = 0.0
    c_eps = float(state.rho.min())
    for target in times[1:]:
        while state.t < target:
            dt = stable_dt(state, config, params, law, grid)
            remaining = target - state.t
            if dt >= remaining * (1.0 - 1e-12):
                dt = remaining
            try:
                state, info = step(state, config, params, law, grid, dt)
            except SolverError as err:
                err.trajectory = _trajectory(snaps, grid, params, law, config, steps, flux, "failed", c_eps)
                raise
            if dt == remaining:
                state.t = float(target)
            steps += 1
            flux += info.boundary_mass_flux
            c_eps = min(c_eps, float(state.rho.min()))
            if steps > config.max_steps:
                err = SolverError("step budget exhausted", t=state.t)
                err.trajectory = _trajectory(snaps, grid, params, law, config, steps, flux, "failed", c_eps)
                raise err
        snaps.append(state.copy())
    return _trajectory(snaps, grid, params, law, config, steps, flux, "ok", c_eps)


def boundary_traces(traj: Trajectory):
    """Per-snapshot boundary quantities.

    ``rho_r_a`` is the scheme's boundary gradient (zero-flux condition),
    ``rho_r_a_stencil`` the one-sided second-order nodal derivative.
    """
    r = traj.grid.nodes
    h1, h2 = r[1] - r[0], r[2] - r[0]
    rho = traj.rho
    # second-order one-sided derivative on non-uniform nodes
    c0 = -(h1 + h2) / (h1 * h2)
    c1 = h2 / (h1 * (h2 - h1))
    c2 = -h1 / (h2 * (h2 - h1))
    return {
        "rho_r_a": np.zeros(len(traj.times)),
        "rho_r_a_stencil": c0 * rho[:, 0] + c1 * rho[:, 1] + c2 * rho[:, 2],
        "m_a": traj.m[:, 0].copy(),
        "rho_b": rho[:, -1] - traj.params.rho_bar,
        "m_b": traj.m[:, -1].copy(),
    }


def one_sided_derivative_at_a(values, grid: RadialGrid):
    r = grid.nodes
    h1, h2 = r[1] - r[0], r[2] - r[0]
    c0 = -(h1 + h2) / (h1 * h2)
    c1 = h2 / (h1 * (h2 - h1))
    c2 = -h1 / (h2 * (h2 - h1))
    return c0 * values[0] + c1 * values[1] + c2 * values[2]


def mass_budget(traj: Trajectory):
    """``(mass(T) - mass(0) of nodes 0..N-1) + outflow``; zero up to roundoff."""
    V = traj.grid.volumes[:-1]
    return float(V @ traj.rho[-1, :-1] - V @ traj.rho[0, :-1] + traj.boundary_mass_flux)


def with_T(config: SolverConfig, T):
    return replace(config, T_final=float(T), snapshot_times=None)
