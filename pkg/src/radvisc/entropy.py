"""Weak entropy pairs generated by the ``s|s|/2`` kernel, and checks of their bounds.

With ``c = rho**theta`` and ``s = u + c*tau`` the kernel window
``[c**2 - (u - s)**2]_+**lambda`` becomes ``c**(2 lambda) (1 - tau**2)**lambda``
on ``tau in [-1, 1]``, and since ``c**(2 lambda + 1) = rho``::

    eta(rho, u) = rho * int 1/2 s|s| w(tau) dtau
    q(rho, u)   = rho * int 1/2 s|s| (theta s + (1 - theta) u) w(tau) dtau

with ``w(tau) = (1 - tau**2)**lambda``.  Every quantity below (values,
gradients, Hessians) reduces to the signed moments

    M_k(c, u) = int sign(u + c tau) tau**k w(tau) dtau,   k = 0..3,

which are evaluated with Gauss-Jacobi rules that carry the endpoint
singularity of ``w`` in their weight.  The sign change at ``tau0 = -u/c``
is handled by subtracting twice the moment over the shorter side, a
one-sided integral whose far endpoint is at least distance 1 from the
opposite singularity, so the remaining integrand is analytic there.

Derivatives with respect to ``(rho, m)`` are taken at fixed ``m``
(``eta_rho``) and fixed ``rho`` (``eta_m``).  Functions of ``(rho, u)`` are
differentiated at fixed ``u`` or fixed ``rho`` and say so in their names.
"""
from __future__ import annotations

import csv
import io
from dataclasses import asdict, dataclass
from functools import lru_cache

import numpy as np
from scipy.special import roots_jacobi

from .errors import DomainError, QuadratureError
from .model import GasLaw

DEFAULT_ORDER = 64
DERIVATIVE_FLOOR = 1e-12


class KernelQuadrature:
    """Gauss-Jacobi machinery for the signed moments of ``(1 - tau**2)**lam``."""

    def __init__(self, lam, order=DEFAULT_ORDER, tol=1e-12):
        if lam <= -1.0:
            raise DomainError("kernel exponent must exceed -1")
        self.lam = float(lam)
        self.order = int(order)
        self.tol = tol
        x, w = roots_jacobi(self.order, self.lam, self.lam)
        k = np.arange(4)
        self.full = np.array([np.dot(w, x**j) for j in k])
        # one-sided rules on [-1, 1] with weight (1 + x)**lam, plus a coarse
        # companion used as an error estimate
        self._left = roots_jacobi(self.order, 0.0, self.lam)
        self._left_coarse = roots_jacobi(max(self.order // 2, 2), 0.0, self.lam)

    def _partial(self, e, rule):
        """``int_{-1}^{e} tau**k w(tau) dtau`` for ``e in [-1, 0]``, shape ``e.shape + (4,)``."""
        x, w = rule
        half = 0.5 * (e + 1.0)[..., None]
        tau = -1.0 + half * (x + 1.0)
        g = w * (1.0 - tau) ** self.lam
        scale = half[..., 0] ** (self.lam + 1.0)
        out = np.stack([np.sum(g * tau**j, axis=-1) for j in range(4)], axis=-1)
        return scale[..., None] * out

    def partial(self, e):
        e = np.asarray(e, dtype=float)
        fine = self._partial(e, self._left)
        coarse = self._partial(e, self._left_coarse)
        est = float(np.max(np.abs(fine - coarse), initial=0.0))
        if est > self.tol:
            raise QuadratureError(f"kernel quadrature did not converge (estimate {est:.3e})", estimate=est)
        return fine

    def signed_moments(self, c, u):
        """``M_k = int sign(u + c tau) tau**k w dtau`` for ``c > 0``; shape ``broadcast + (4,)``."""
        c, u = np.broadcast_arrays(np.asarray(c, dtype=float), np.asarray(u, dtype=float))
        tau0 = -u / c
        pos = u >= 0.0
        # endpoint of the short side, mapped into [-1, 0]
        e = np.where(pos, np.maximum(tau0, -1.0), -np.minimum(tau0, 1.0))
        part = self.partial(e)
        parity = np.array([1.0, -1.0, 1.0, -1.0])
        return np.where(
            pos[..., None],
            self.full - 2.0 * part,
            -self.full + 2.0 * parity * part,
        )


@lru_cache(maxsize=32)
def kernel_quadrature(lam, order=DEFAULT_ORDER):
    return KernelQuadrature(lam, order)


def _prepare(rho, u, law, order):
    rho = np.asarray(rho, dtype=float)
    u = np.asarray(u, dtype=float)
    if np.any(rho < 0.0) or np.any(~np.isfinite(rho)) or np.any(~np.isfinite(u)):
        raise DomainError("rho must be finite and non-negative, u finite")
    rho, u = np.broadcast_arrays(rho, u)
    quad = kernel_quadrature(law.lambda_kernel, order)
    c = np.where(rho > 0.0, rho, 1.0) ** law.theta
    # rho**theta can underflow for tiny rho: treat those points as vacuum
    live = (rho > 0.0) & (c > 0.0)
    c = np.where(live, c, 1.0)
    M = quad.signed_moments(c, u)
    M = np.where(live[..., None], M, 0.0)
    return rho, u, c, M, live


def _kernel_sums(u, c, M):
    M0, M1, M2, M3 = (M[..., k] for k in range(4))
    S1 = u * M0 + c * M1
    S2 = u * u * M0 + 2.0 * u * c * M1 + c * c * M2
    S3 = u**3 * M0 + 3.0 * u * u * c * M1 + 3.0 * u * c * c * M2 + c**3 * M3
    T1 = u * M1 + c * M2
    return S1, S2, S3, T1


def _out(x):
    return float(x) if np.ndim(x) == 0 else x


def weak_entropy_pair(rho, u, law: GasLaw, order=DEFAULT_ORDER):
    """Values of the weak entropy and its flux at ``(rho, rho*u)``.

    Zero density returns ``(0, 0)``.
    """
    rho, u, c, M, live = _prepare(rho, u, law, order)
    _, S2, S3, _ = _kernel_sums(u, c, M)
    th = law.theta
    eta = 0.5 * rho * S2
    q = 0.5 * rho * (th * S3 + (1.0 - th) * u * S2)
    return _out(eta), _out(q)


def weak_entropy_gradient(rho, u, law: GasLaw, order=DEFAULT_ORDER, floor=DERIVATIVE_FLOOR):
    """``(eta_rho, eta_m)`` in conservative variables by differentiating under the integral."""
    if np.any(np.asarray(rho) < floor):
        raise DomainError(f"entropy derivatives need rho >= {floor}")
    rho, u, c, M, _ = _prepare(rho, u, law, order)
    S1, S2, _, T1 = _kernel_sums(u, c, M)
    eta_m = S1
    eta_rho = 0.5 * S2 + law.theta * c * T1 - u * S1
    return _out(eta_rho), _out(eta_m)


def weak_entropy_hessian(rho, u, law: GasLaw, order=DEFAULT_ORDER, floor=DERIVATIVE_FLOOR):
    """``(eta_rhorho, eta_rhom, eta_mm)`` of the weak entropy in ``(rho, m)``."""
    if np.any(np.asarray(rho) < floor):
        raise DomainError(f"entropy derivatives need rho >= {floor}")
    rho, u, c, M, _ = _prepare(rho, u, law, order)
    _, _, _, T1 = _kernel_sums(u, c, M)
    th = law.theta
    M0, M1, M2 = M[..., 0], M[..., 1], M[..., 2]
    e_mm = M0 / rho
    e_rm = (th * c * M1 - u * M0) / rho
    e_rr = (th * c * ((1.0 + th) * T1 + th * c * M2 - u * M1) - u * (th * c * M1 - u * M0)) / rho
    return _out(e_rr), _out(e_rm), _out(e_mm)


def base_gradient(rho_bar, law: GasLaw, order=DEFAULT_ORDER):
    """``grad eta(rho_bar, 0)``; the vacuum limit ``(0, 0)`` is used at ``rho_bar = 0``."""
    if rho_bar < 0.0:
        raise DomainError("rho_bar must be non-negative")
    if rho_bar == 0.0:
        return 0.0, 0.0
    return weak_entropy_gradient(rho_bar, 0.0, law, order, floor=0.0)


def modified_pair(rho, u, rho_bar, law: GasLaw, order=DEFAULT_ORDER):
    """Entropy pair with the tangent plane at ``(rho_bar, 0)`` removed.

    The flux correction uses the Euler pressure ``kappa rho**gamma``.
    """
    g_rho, g_m = base_gradient(rho_bar, law, order)
    eta, q = weak_entropy_pair(rho, u, law, order)
    rho = np.asarray(rho, dtype=float)
    m = rho * u
    eta_t = eta - g_rho * (rho - rho_bar) - g_m * m
    q_t = q - g_rho * m - g_m * (m * np.asarray(u) + law.euler_pressure(rho))
    return _out(eta_t), _out(q_t)


def physical_entropy_hessian_form(rho, u, xi, law: GasLaw):
    """``xi . Hess(eta*) . xi`` for the mechanical energy ``m**2/(2 rho) + kappa rho**gamma/(gamma-1)``.

    ``xi = (rho_r, m_r)``; evaluated as ``kappa gamma rho**(gamma-2) rho_r**2 + rho u_r**2``
    with ``u_r = (m_r - u rho_r) / rho``.
    """
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0.0):
        raise DomainError("physical entropy Hessian needs rho > 0")
    x1, x2 = np.asarray(xi[0], dtype=float), np.asarray(xi[1], dtype=float)
    u_r = (x2 - u * x1) / rho
    return _out(law.kappa * law.gamma * rho ** (law.gamma - 2.0) * x1**2 + rho * u_r**2)


def physical_entropy_hessian(rho, u, law: GasLaw):
    """Entries ``(h_rr, h_rm, h_mm)`` of ``Hess(eta*)`` in ``(rho, m)``."""
    rho = np.asarray(rho, dtype=float)
    return (
        u * u / rho + law.kappa * law.gamma * rho ** (law.gamma - 2.0),
        -u / rho,
        1.0 / rho,
    )


@dataclass
class EntropyEval:
    """Pointwise entropy data at one ``(rho, u)`` (arrays allowed)."""

    eta_check: object
    q_check: object
    eta_rho: object
    eta_m: object
    eta_tilde: object
    q_tilde: object
    hessian_form: object = None


def evaluate(rho, u, rho_bar, law: GasLaw, xi=None, order=DEFAULT_ORDER):
    eta, q = weak_entropy_pair(rho, u, law, order)
    e_r, e_m = weak_entropy_gradient(rho, u, law, order)
    et, qt = modified_pair(rho, u, rho_bar, law, order)
    form = None
    if xi is not None:
        h_rr, h_rm, h_mm = weak_entropy_hessian(rho, u, law, order)
        form = _out(h_rr * xi[0] ** 2 + 2.0 * h_rm * xi[0] * xi[1] + h_mm * xi[1] ** 2)
    return EntropyEval(eta, q, e_r, e_m, et, qt, form)


# bound verification --------------------------------------------------------

INEQUALITIES = (
    "q_tilde_lower",
    "sign_condition",
    "eta_m_growth",
    "eta_rho_growth",
    "eta_tilde_growth",
    "mixed_rho",
    "mixed_u",
    "eta_tilde_m_rho",
    "eta_tilde_m_u",
    "m_eta_tilde_m",
    "hessian",
)


@dataclass
class BoundRow:
    inequality: str
    level: int
    samples: int
    empirical_M: float
    max_violation: float


def _generalized_spectral_radius(a, b, c, p, q, r):
    """max |lambda| with ``[[a,b],[b,c]] x = lambda [[p,q],[q,r]] x``, second matrix SPD."""
    l11 = np.sqrt(p)
    l21 = q / l11
    l22 = np.sqrt(r - l21 * l21)
    # A = L^-1 H L^-T for the 2x2 lower-triangular Cholesky factor L
    a11 = a / p
    a21 = (b - l21 * a / l11) / (l11 * l22)
    a22 = (c - 2.0 * l21 * b / l11 + l21 * l21 * a / p) / (l22 * l22)
    mean = 0.5 * (a11 + a22)
    rad = np.sqrt(0.25 * (a11 - a22) ** 2 + a21 * a21)
    return np.maximum(np.abs(mean + rad), np.abs(mean - rad))


def bound_quantities(rho, u, rho_bar, law: GasLaw, order=DEFAULT_ORDER):
    """Left- and right-hand sides of each inequality on arrays of ``(rho, u)``.

    Returns ``{name: (lhs, rhs)}`` with ``|lhs| <= M rhs`` expected, except
    ``q_tilde_lower`` (``(q_tilde, A, B)`` with ``q_tilde >= A/M - M B``) and
    ``sign_condition`` (``(value, scale)`` with ``value <= 0`` expected).
    """
    rho, u = np.broadcast_arrays(np.asarray(rho, float), np.asarray(u, float))
    if np.any(rho <= 0.0):
        raise DomainError("bound sampling needs rho > 0")
    g, th = law.gamma, law.theta
    _, _, c, M, _ = _prepare(rho, u, law, order)
    S1, S2, S3, T1 = _kernel_sums(u, c, M)
    M0, M1, M2 = M[..., 0], M[..., 1], M[..., 2]
    m = rho * u
    eta = 0.5 * rho * S2
    q = 0.5 * rho * (th * S3 + (1.0 - th) * u * S2)
    eta_m = S1
    eta_rho = 0.5 * S2 + th * c * T1 - u * S1
    g_rho, g_m = base_gradient(rho_bar, law, order)
    p = law.euler_pressure(rho)
    eta_t = eta - g_rho * (rho - rho_bar) - g_m * m
    q_t = q - g_rho * m - g_m * (m * u + p)
    eta_t_rho, eta_t_m = eta_rho - g_rho, eta_m - g_m

    out = {}
    A = rho * np.abs(u) ** 3 + rho ** (g + th)
    B = rho * u * u + rho + rho**g
    out["q_tilde_lower"] = (q_t, A, B)
    flux = m * (eta_rho + u * eta_m)
    out["sign_condition"] = (-q + flux, np.abs(q) + np.abs(flux))
    out["eta_m_growth"] = (eta_m, np.abs(u) + rho**th)
    out["eta_rho_growth"] = (eta_rho, u * u + rho ** (2 * th))
    out["eta_tilde_growth"] = (
        np.abs(eta_t) + rho * np.abs(eta_t_rho + u * eta_t_m),
        rho * u * u + rho + rho**g,
    )
    # eta_rho + u eta_m = G + theta c G_c as a function of (rho, u)
    dK_drho = th * c / rho * ((1.0 + th) * T1 + th * c * M2)
    dK_du = S1 + th * c * M1
    out["mixed_rho"] = (dK_drho, rho ** (th - 1.0) * np.abs(u) + rho ** (2 * th - 1.0))
    out["mixed_u"] = (dK_du, np.abs(u) + rho**th)
    out["eta_tilde_m_rho"] = (th * c * M1 / rho, rho ** (th - 1.0))
    out["eta_tilde_m_u"] = (M0, np.ones_like(rho))
    out["m_eta_tilde_m"] = (m * eta_t_m, rho * u * u + rho**g + rho * rho_bar ** (2 * th))
    h_rr = (th * c * ((1.0 + th) * T1 + th * c * M2 - u * M1) - u * (th * c * M1 - u * M0)) / rho
    h_rm = (th * c * M1 - u * M0) / rho
    h_mm = M0 / rho
    p_rr, p_rm, p_mm = physical_entropy_hessian(rho, u, law)
    out["hessian"] = (_generalized_spectral_radius(h_rr, h_rm, h_mm, p_rr, p_rm, p_mm), np.ones_like(rho))
    return out


def verify_entropy_bounds(rho_values, u_values, rho_bar, law: GasLaw, order=DEFAULT_ORDER, level=0):
    """Smallest constant making each inequality hold on the tensor grid of samples.

    Violations are reported, never raised.  For ``sign_condition`` the
    constant column holds the largest signed value and ``max_violation``
    its positive part.
    """
    R, U = np.meshgrid(np.asarray(rho_values, float), np.asarray(u_values, float), indexing="ij")
    quantities = bound_quantities(R, U, rho_bar, law, order)
    n = R.size
    rows = []
    for name in INEQUALITIES:
        vals = quantities[name]
        if name == "q_tilde_lower":
            qt, A, B = vals
            # smallest M >= 0 with B M**2 + qt M - A >= 0, pointwise
            Mpt = (-qt + np.sqrt(qt * qt + 4.0 * A * B)) / (2.0 * B)
            rows.append(BoundRow(name, level, n, float(Mpt.max()), 0.0))
        elif name == "sign_condition":
            value, _ = vals
            vmax = float(value.max())
            rows.append(BoundRow(name, level, n, vmax, max(vmax, 0.0)))
        else:
            lhs, rhs = vals
            rows.append(BoundRow(name, level, n, float(np.max(np.abs(lhs) / rhs)), 0.0))
    return rows


def bound_study(rho_range, u_range, rho_bar, law: GasLaw, samples=200, levels=2, order=DEFAULT_ORDER):
    """Repeat ``verify_entropy_bounds`` with the sample count doubled per level.

    Densities are log-spaced over ``rho_range``, velocities uniform over
    ``u_range``; endpoints are shared by all levels.
    """
    rows = []
    for lev in range(levels):
        k = samples * 2**lev
        rho = np.geomspace(rho_range[0], rho_range[1], k)
        u = np.linspace(u_range[0], u_range[1], k)
        rows.extend(verify_entropy_bounds(rho, u, rho_bar, law, order, level=lev))
    return rows


def bound_rows_to_csv(rows):
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(asdict(rows[0]).keys()), lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in asdict(row).items()})
    return buf.getvalue()
