"""Smooth compactly supported test functions on ``[0, inf)**2`` and the sphere-moment converter.

All evaluators broadcast over ``t`` and ``r``; the harness calls them with
``t`` of shape ``(K, 1)`` and ``r`` of shape ``(N,)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import DomainError


def _f(x):
    x = np.asarray(x, dtype=float)
    pos = x > 0.0
    return np.where(pos, np.exp(-1.0 / np.where(pos, x, 1.0)), 0.0)


def _df(x):
    x = np.asarray(x, dtype=float)
    pos = x > 0.0
    xs = np.where(pos, x, 1.0)
    return np.where(pos, np.exp(-1.0 / xs) / (xs * xs), 0.0)


def smooth_step(x):
    """C-infinity step: 0 for ``x <= 0``, 1 for ``x >= 1``."""
    a, b = _f(x), _f(1.0 - np.asarray(x, dtype=float))
    return a / (a + b)


def smooth_step_deriv(x):
    x = np.asarray(x, dtype=float)
    a, b = _f(x), _f(1.0 - x)
    da, db = _df(x), -_df(1.0 - x)
    return (da * (a + b) - a * (da + db)) / (a + b) ** 2


@dataclass(frozen=True)
class Profile:
    """A scalar function of one variable with its derivative."""

    value: Callable
    deriv: Callable
    support: float = math.inf

    def __call__(self, x):
        return self.value(x)


def cutoff(x1, x2):
    """Equal to 1 on ``[0, x1]``, 0 for ``x >= x2``."""
    if not 0.0 <= x1 < x2:
        raise DomainError("cutoff needs 0 <= x1 < x2")
    w = x2 - x1
    return Profile(
        lambda x: 1.0 - smooth_step((np.asarray(x, float) - x1) / w),
        lambda x: -smooth_step_deriv((np.asarray(x, float) - x1) / w) / w,
        x2,
    )


def bump(center, radius):
    """``exp(-1/(1 - z**2))`` with ``z = (x - center)/radius``, zero outside."""

    def val(x):
        z = (np.asarray(x, float) - center) / radius
        inside = np.abs(z) < 1.0
        zz = np.where(inside, z, 0.0)
        return np.where(inside, np.exp(-1.0 / (1.0 - zz * zz)), 0.0)

    def der(x):
        z = (np.asarray(x, float) - center) / radius
        inside = np.abs(z) < 1.0
        zz = np.where(inside, z, 0.0)
        d = 1.0 - zz * zz
        return np.where(inside, np.exp(-1.0 / d) * (-2.0 * zz / (d * d)) / radius, 0.0)

    return Profile(val, der, center + radius)


def poly_times(coeffs, base: Profile):
    """``P(x) * base(x)`` with ``P`` given by increasing-power coefficients."""
    P = np.polynomial.Polynomial(coeffs)
    dP = P.deriv()
    return Profile(
        lambda x: P(np.asarray(x, float)) * base.value(x),
        lambda x: dP(np.asarray(x, float)) * base.value(x) + P(np.asarray(x, float)) * base.deriv(x),
        base.support,
    )


def omega_cutoff(r1=1.0, r2=2.0):
    """The radial weight used by the integrability lemmas: 1 on ``[0, r1]``, 0 beyond ``r2``."""
    return cutoff(r1, r2)


@dataclass(frozen=True)
class TestFunction:
    """``phi(t, r)`` with partial derivatives, compact support and origin metadata."""

    __test__ = False

    phi: Callable
    phi_t: Callable
    phi_r: Callable
    support_bound: float
    time_bound: float
    name: str = ""

    def __call__(self, t, r):
        return self.phi(t, r)

    def origin_trace(self, t):
        """``(phi(t, 0), phi_r(t, 0))``."""
        t = np.asarray(t, dtype=float)
        return self.phi(t, 0.0), self.phi_r(t, 0.0)

    def max_origin_value(self, times):
        return float(np.max(np.abs(self.phi(np.asarray(times, float), 0.0))))


def tensor(psi: Profile, chi: Profile, name="tensor"):
    """``psi(t) chi(r)``."""
    return TestFunction(
        lambda t, r: psi.value(t) * chi.value(r),
        lambda t, r: psi.deriv(t) * chi.value(r),
        lambda t, r: psi.value(t) * chi.deriv(r),
        chi.support,
        psi.support,
        name,
    )


def origin_stress(psi: Profile, chi: Profile, name="r_chi_psi"):
    """``r chi(r) psi(t)``: vanishes at ``r = 0`` with ``phi_r(t, 0) = chi(0) psi(t)``."""
    return TestFunction(
        lambda t, r: psi.value(t) * np.asarray(r, float) * chi.value(r),
        lambda t, r: psi.deriv(t) * np.asarray(r, float) * chi.value(r),
        lambda t, r: psi.value(t) * (chi.value(r) + np.asarray(r, float) * chi.deriv(r)),
        chi.support,
        psi.support,
        name,
    )


def vanish_near_origin(phi: TestFunction, a, width=1.0):
    """``phi * step((r - a)/(width a))``: zero on ``[0, a]``, equal to ``phi`` beyond ``(1 + width) a``.

    For ``phi`` with ``phi(t, 0) = 0`` the product stays bounded in
    ``W^{1,inf}`` uniformly as ``a -> 0``.
    """
    L = width * a

    def beta(r):
        return smooth_step((np.asarray(r, float) - a) / L)

    def dbeta(r):
        return smooth_step_deriv((np.asarray(r, float) - a) / L) / L

    return TestFunction(
        lambda t, r: phi.phi(t, r) * beta(r),
        lambda t, r: phi.phi_t(t, r) * beta(r),
        lambda t, r: phi.phi_r(t, r) * beta(r) + phi.phi(t, r) * dbeta(r),
        phi.support_bound,
        phi.time_bound,
        phi.name + "_eps",
    )


def random_tensor_family(rng, count, r_max, t_max):
    """``count`` tensor-product bumps with random centres and widths inside ``[0, r_max) x [0, t_max)``."""
    out = []
    for k in range(count):
        rc = rng.uniform(0.2, 0.6) * r_max
        rw = rng.uniform(0.2, 0.35) * r_max
        tc = rng.uniform(0.3, 0.5) * t_max
        tw = rng.uniform(0.2, 0.3) * t_max
        out.append(tensor(bump(tc, tw), bump(rc, rw), name=f"random_{k}"))
    return out


# multi-dimensional test functions and the sphere moment ------------------


@dataclass(frozen=True)
class MultiDTestFunction:
    """``phi(t, x)`` on ``[0, inf) x R**n`` with ``phi_t`` and spatial gradient.

    ``value(t, X)`` and ``dt(t, X)`` take points ``X`` of shape ``(..., n)``;
    ``grad(t, X)`` returns shape ``(..., n)``.
    """

    value: Callable
    dt: Callable
    grad: Callable
    n_dim: int
    support_bound: float = math.inf
    time_bound: float = math.inf


def coordinate_weighted_multid(j, chi: Profile, psi: Profile, n_dim):
    """``x_j chi(|x|) psi(t)``."""

    def radius(X):
        return np.sqrt(np.sum(X * X, axis=-1))

    def val(t, X):
        return X[..., j] * chi.value(radius(X)) * psi.value(t)

    def dt(t, X):
        return X[..., j] * chi.value(radius(X)) * psi.deriv(t)

    def grad(t, X):
        R = radius(X)
        safe = np.where(R > 0.0, R, 1.0)
        radial = np.where(R > 0.0, chi.deriv(R) / safe, 0.0)
        g = (X[..., j] * radial)[..., None] * X
        g[..., j] += chi.value(R)
        return g * np.asarray(psi.value(t))[..., None]

    return MultiDTestFunction(val, dt, grad, n_dim, chi.support, psi.support)


def radial_multid(profile: Profile, psi: Profile, n_dim):
    """A radially symmetric ``chi(|x|) psi(t)``."""

    def radius(X):
        return np.sqrt(np.sum(X * X, axis=-1))

    def grad(t, X):
        R = radius(X)
        safe = np.where(R > 0.0, R, 1.0)
        return (np.where(R > 0.0, profile.deriv(R) / safe, 0.0) * psi.value(t))[..., None] * X

    return MultiDTestFunction(
        lambda t, X: profile.value(radius(X)) * psi.value(t),
        lambda t, X: profile.value(radius(X)) * psi.deriv(t),
        grad,
        n_dim,
        profile.support,
        psi.support,
    )


def sphere_rule(n_dim, order=32):
    """Nodes ``y`` of shape ``(K, n)`` on the unit sphere and weights summing to ``|S^{n-1}|``.

    ``n = 2``: trapezoid on ``4*order`` equispaced angles.
    ``n = 3``: Gauss-Legendre in ``cos(polar)`` times ``2*order`` equispaced azimuths.
    """
    if n_dim == 2:
        k = 4 * order
        ang = 2.0 * np.pi * np.arange(k) / k
        return np.stack((np.cos(ang), np.sin(ang)), axis=-1), np.full(k, 2.0 * np.pi / k)
    if n_dim == 3:
        mu, wmu = np.polynomial.legendre.leggauss(order)
        k = 2 * order
        ang = 2.0 * np.pi * np.arange(k) / k
        s = np.sqrt(1.0 - mu * mu)
        Y = np.stack(
            (
                (s[:, None] * np.cos(ang)[None, :]).ravel(),
                (s[:, None] * np.sin(ang)[None, :]).ravel(),
                np.repeat(mu, k),
            ),
            axis=-1,
        )
        W = np.repeat(wmu, k) * (2.0 * np.pi / k)
        return Y, W
    raise DomainError(f"sphere quadrature supports n_dim in {{2, 3}}, got {n_dim}")


def sphere_area(n_dim):
    return 2.0 * math.pi ** (n_dim / 2.0) / math.gamma(n_dim / 2.0)


@dataclass(frozen=True)
class SphereMoment:
    """Evaluate ``zeta(t, r) = int_{|y|=1} y_j phi(t, r y) dS_y`` and its derivatives."""

    phi: MultiDTestFunction
    j: int
    Y: np.ndarray
    W: np.ndarray

    def _apply(self, fn, t, r):
        t, r = np.broadcast_arrays(np.asarray(t, float), np.asarray(r, float))
        out = np.zeros(t.shape)
        tf, rf = t.ravel(), r.ravel()
        idx = np.flatnonzero(rf < self.phi.support_bound)
        chunk = max(1, 200_000 // self.W.size)
        flat = out.reshape(-1)
        for s in range(0, idx.size, chunk):
            k = idx[s : s + chunk]
            X = rf[k, None, None] * self.Y[None, :, :]
            T = np.broadcast_to(tf[k, None], X.shape[:-1])
            flat[k] = fn(T, X) @ self.weights
        return out

    @property
    def weights(self):
        return self.W * self.Y[:, self.j]

    def value(self, t, r):
        return self._apply(self.phi.value, t, r)

    def dt(self, t, r):
        return self._apply(self.phi.dt, t, r)

    def dr(self, t, r):
        return self._apply(lambda T, X: np.sum(self.phi.grad(T, X) * self.Y, axis=-1), t, r)


def radial_test_from_multiD(phi_md: MultiDTestFunction, j, n_dim, order=32):
    """Radial test function ``zeta`` generated by the ``j``-th sphere moment of ``phi_md``.

    ``zeta(t, 0) = 0`` holds up to roundoff of the symmetric sphere rule;
    ``zeta_r(t, 0)`` is generally non-zero and available via ``origin_trace``.
    """
    if n_dim not in (2, 3):
        raise DomainError(f"unsupported n_dim {n_dim}; only 2 and 3 are implemented")
    if not 0 <= j < n_dim:
        raise DomainError("component index out of range")
    Y, W = sphere_rule(n_dim, order)
    mom = SphereMoment(phi_md, j, Y, W)
    return TestFunction(mom.value, mom.dt, mom.dr, phi_md.support_bound, phi_md.time_bound, f"zeta_{j}")
