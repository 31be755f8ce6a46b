"""Gas law, radial grids and discrete field containers.

Everything here is dimensionless: the pressure constant is fixed by the
scaling ``kappa = (gamma - 1)**2 / (4 gamma)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import ConfigError, DomainError

MAX_NODES = 20_000


@dataclass(frozen=True)
class GasLaw:
    """Polytropic gas ``p(rho) = kappa rho**gamma`` plus artificial ``delta rho**2``.

    ``kappa``, ``theta`` and ``lambda_kernel`` are derived from ``gamma``
    and cannot be passed in.
    """

    gamma: float
    delta: float = 0.0
    kappa: float = field(init=False)
    theta: float = field(init=False)
    lambda_kernel: float = field(init=False)

    def __post_init__(self):
        g = float(self.gamma)
        if not np.isfinite(g) or g <= 1.0:
            raise DomainError(f"gamma must be > 1, got {self.gamma!r}")
        if not np.isfinite(self.delta) or self.delta < 0.0:
            raise DomainError(f"delta must be >= 0, got {self.delta!r}")
        object.__setattr__(self, "gamma", g)
        object.__setattr__(self, "delta", float(self.delta))
        object.__setattr__(self, "kappa", (g - 1.0) ** 2 / (4.0 * g))
        object.__setattr__(self, "theta", (g - 1.0) / 2.0)
        object.__setattr__(self, "lambda_kernel", (3.0 - g) / (2.0 * (g - 1.0)))

    def with_delta(self, delta):
        return GasLaw(self.gamma, delta)

    # thermodynamic functions, all vectorised over rho

    def pressure(self, rho):
        return pressure(rho, self)

    def euler_pressure(self, rho):
        """Pressure without the artificial ``delta rho**2`` term."""
        rho = _nonneg(rho, "rho")
        return self.kappa * rho**self.gamma

    def dpressure(self, rho):
        """``p_delta'(rho)``, the squared sound speed."""
        rho = _nonneg(rho, "rho")
        return self.kappa * self.gamma * rho ** (self.gamma - 1.0) + 2.0 * self.delta * rho

    def sound_speed(self, rho):
        return np.sqrt(self.dpressure(rho))

    def internal_energy(self, rho):
        """``h_delta(rho) = kappa rho**gamma / (gamma - 1) + delta rho**2``."""
        rho = _nonneg(rho, "rho")
        return self.kappa * rho**self.gamma / (self.gamma - 1.0) + self.delta * rho**2

    def internal_energy_d1(self, rho):
        rho = _nonneg(rho, "rho")
        return self.kappa * self.gamma / (self.gamma - 1.0) * rho ** (self.gamma - 1.0) + 2.0 * self.delta * rho

    def internal_energy_d2(self, rho):
        rho = np.asarray(rho, dtype=float)
        if np.any(rho <= 0.0):
            raise DomainError("h_delta'' needs rho > 0")
        return self.kappa * self.gamma * rho ** (self.gamma - 2.0) + 2.0 * self.delta


def _nonneg(x, name):
    x = np.asarray(x, dtype=float)
    if np.any(x < 0.0) or np.any(np.isnan(x)):
        raise DomainError(f"{name} must be non-negative")
    return x


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def pressure(rho, law: GasLaw):
    """``kappa rho**gamma + delta rho**2``; raises DomainError for rho < 0."""
    rho = _nonneg(rho, "rho")
    return _out(law.kappa * rho**law.gamma + law.delta * rho**2)


def relative_internal_energy(rho, rho_bar, law: GasLaw):
    """Second-order remainder ``h(rho) - h(rho_bar) - h'(rho_bar)(rho - rho_bar)``.

    Non-negative by convexity of ``h_delta`` and zero only at ``rho == rho_bar``.
    """
    rho = _nonneg(rho, "rho")
    rho_bar = _nonneg(rho_bar, "rho_bar")
    val = (
        law.internal_energy(rho)
        - law.internal_energy(rho_bar)
        - law.internal_energy_d1(rho_bar) * (rho - rho_bar)
    )
    # cancellation can leave -1e-17 where the exact value is 0
    return _out(np.maximum(val, 0.0))


def dominating_constant(rho_max, rho_bar, law: GasLaw, samples=100_000, safety=1.05):
    """Empirical ``M`` with ``rho + rho**gamma <= M (hbar(rho, rho_bar) + 1)`` on ``[0, rho_max]``.

    The sup of the ratio is taken over ``samples`` equispaced densities,
    polished by a bounded scalar search around the best sample, and
    inflated by ``safety``.
    """
    if not rho_max > 0.0:
        raise DomainError("rho_max must be positive")
    _nonneg(rho_bar, "rho_bar")

    def ratio(rho):
        return (rho + rho**law.gamma) / (relative_internal_energy(rho, rho_bar, law) + 1.0)

    rho = np.linspace(0.0, rho_max, int(samples))
    vals = ratio(rho)
    k = int(np.argmax(vals))
    lo, hi = rho[max(k - 1, 0)], rho[min(k + 1, rho.size - 1)]
    best = float(vals[k])
    if hi > lo:
        res = minimize_scalar(lambda x: -ratio(x), bounds=(lo, hi), method="bounded", options={"xatol": 1e-14})
        best = max(best, -float(res.fun))
    return safety * best


@dataclass(frozen=True, eq=False)
class RadialGrid:
    """Strictly increasing radial nodes on ``[a, b]`` in ``n_dim`` space dimensions.

    Finite-volume geometry is precomputed: ``edges`` are dual-cell
    boundaries (node midpoints plus ``a`` and ``b``), ``volumes`` the
    ``r**(n-1)``-weighted dual-cell measures and ``areas`` the weights
    ``r**(n-1)`` at interior edges.
    """

    a: float
    b: float
    nodes: np.ndarray
    n_dim: int
    min_spacing: float = 0.0

    def __post_init__(self):
        r = np.array(self.nodes, dtype=float)
        if not (0.0 < self.a < self.b):
            raise ConfigError(f"need 0 < a < b, got a={self.a}, b={self.b}")
        if int(self.n_dim) != self.n_dim or self.n_dim < 2:
            raise ConfigError("n_dim must be an integer >= 2")
        if r.ndim != 1 or r.size < 3:
            raise ConfigError("grid needs at least 3 nodes")
        if r.size > MAX_NODES:
            raise ConfigError(f"grid has {r.size} nodes, limit is {MAX_NODES}")
        if r[0] != self.a or r[-1] != self.b:
            raise ConfigError("grid must start at a and end at b")
        dr = np.diff(r)
        if np.any(dr <= 0.0) or dr.min() < self.min_spacing:
            raise ConfigError("grid spacing must be positive and above min_spacing")
        r.flags.writeable = False
        object.__setattr__(self, "nodes", r)
        object.__setattr__(self, "n_dim", int(self.n_dim))
        edges = np.concatenate(([self.a], 0.5 * (r[1:] + r[:-1]), [self.b]))
        n = self.n_dim
        vol = np.diff(edges**n) / n
        for arr in (edges, vol):
            arr.flags.writeable = False
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "volumes", vol)

    @classmethod
    def build(cls, a, b, h, n_dim, min_spacing=0.0):
        """Geometric nodes from ``a`` to 1 (relative spacing ``h``), uniform from 1 to ``b``.

        If ``b <= 1`` the grid is geometric on the whole interval.
        """
        if not (0.0 < a < b):
            raise ConfigError(f"need 0 < a < b, got a={a}, b={b}")
        if not (0.0 < h < 1.0):
            raise ConfigError("relative spacing h must lie in (0, 1)")
        knee = min(1.0, b)
        if a < knee:
            k = max(1, int(np.ceil(np.log(knee / a) / np.log1p(h))))
            geo = a * (knee / a) ** (np.arange(k + 1) / k)
            geo[0], geo[-1] = a, knee
        else:
            geo = np.array([a])
        if b > knee:
            k2 = max(1, int(np.ceil((b - knee) / h)))
            uni = np.linspace(knee, b, k2 + 1)[1:]
            nodes = np.concatenate((geo, uni))
        else:
            nodes = geo
        nodes[-1] = b
        return cls(a=float(a), b=float(b), nodes=nodes, n_dim=int(n_dim), min_spacing=min_spacing)

    @property
    def size(self):
        return self.nodes.size

    @property
    def spacing(self):
        return np.diff(self.nodes)

    @property
    def areas(self):
        """``r**(n-1)`` at the interior dual-cell edges."""
        return self.edges[1:-1] ** (self.n_dim - 1)

    @property
    def cell_widths(self):
        return np.diff(self.edges)

    def integrate(self, f):
        """``int_a^b f r**(n-1) dr`` with the dual-cell (midpoint) rule."""
        return float(np.dot(self.volumes, f))

    def gradient(self, f):
        """Second-order nodal derivative on the non-uniform nodes."""
        return np.gradient(f, self.nodes, edge_order=2)


@dataclass
class RadialField:
    """Discrete state ``(rho, m)`` at time ``t`` plus time-integrated dissipation.

    ``dissipation_acc`` holds the three viscosity-weighted integrals
    ``eps int int h''(rho) rho_r**2``, ``eps int int rho u_r**2`` and
    ``eps int int (n-1) rho u**2 / r**2`` (all with weight ``r**(n-1)``).
    """

    t: float
    rho: np.ndarray
    m: np.ndarray
    dissipation_acc: np.ndarray = field(default_factory=lambda: np.zeros(3))
    c_eps: float = 0.0

    def __post_init__(self):
        self.rho = np.asarray(self.rho, dtype=float)
        self.m = np.asarray(self.m, dtype=float)
        self.dissipation_acc = np.asarray(self.dissipation_acc, dtype=float)

    @property
    def u(self):
        return self.m / self.rho

    @property
    def dissipation(self):
        return float(self.dissipation_acc.sum())

    def copy(self):
        return RadialField(self.t, self.rho.copy(), self.m.copy(), self.dissipation_acc.copy(), self.c_eps)


def energy_density(rho, m, rho_bar, law: GasLaw):
    """``m**2 / (2 rho) + hbar_delta(rho, rho_bar)``."""
    rho = np.asarray(rho, dtype=float)
    return 0.5 * np.asarray(m) ** 2 / rho + relative_internal_energy(rho, rho_bar, law)


def discrete_energy(state: RadialField, grid: RadialGrid, rho_bar, law: GasLaw):
    """Dual-cell quadrature of the relative mechanical energy."""
    return grid.integrate(energy_density(state.rho, state.m, rho_bar, law))


def discrete_mass(state: RadialField, grid: RadialGrid):
    return grid.integrate(state.rho)
