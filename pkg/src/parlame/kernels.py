"""Fundamental solutions of the heat and parabolic Lamé operators.

The operator is ``L u = u_t - mu * Lap u - (mu + lam) * grad div u`` with
constant coefficients and no lower-order terms.  Its fundamental solution is

    Phi_ij(x, t) = phi0(x, mu t) delta_ij
                   + int_{mu t}^{(2 mu + lam) t} d_i d_j phi0(x, s) ds

where ``phi0`` is the heat kernel.  Two evaluation paths exist:

* :func:`lame_kernel` integrates the ``s``-integral with adaptive
  Gauss-Kronrod quadrature (one point, reference quality);
* :func:`kernel_derivatives` evaluates the same integral, and any spatial
  derivatives of it, in closed form through incomplete gamma functions
  (vectorized, used by the potentials).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .errors import NotParabolicError, NumericalError

__all__ = [
    "LameCoefficients",
    "check_parabolicity",
    "heat_kernel",
    "heat_kernel_hessian",
    "heat_kernel_mass",
    "lame_kernel",
    "kernel_derivatives",
    "apply_stress",
    "lame_pde_residual",
]


@dataclass(frozen=True)
class LameCoefficients:
    """Constant Lamé coefficients with parabolicity margin ``theta``.

    The lower-order matrices ``a_j`` are identically zero (``A_TERMS``), so
    the modified stress operator coincides with the plain one.
    """

    mu: float
    lam: float
    theta: float = 1e-3

    A_TERMS = 0.0

    def __post_init__(self):
        for name in ("mu", "lam", "theta"):
            if not np.isfinite(getattr(self, name)):
                raise ValueError(f"{name} must be finite")
        if self.theta <= 0:
            raise ValueError("theta must be positive")

    @classmethod
    def heat(cls, mu=1.0, theta=None):
        """Coefficients for which the operator is ``d/dt - mu * Laplacian``."""
        return cls(mu, -mu, mu / 2 if theta is None else theta)

    @property
    def c_long(self):
        """Longitudinal diffusivity ``2 mu + lam``."""
        return 2 * self.mu + self.lam

    @property
    def is_heat(self):
        return self.lam == -self.mu

    def to_dict(self):
        return {"mu": self.mu, "lambda": self.lam, "theta": self.theta}

    @classmethod
    def from_dict(cls, d):
        return cls(float(d["mu"]), float(d.get("lambda", d.get("lam"))), float(d.get("theta", 1e-3)))


def check_parabolicity(coeffs: LameCoefficients, n: int = 3):
    """Roots ``(kappa1, kappa2)`` of the symbol's characteristic polynomial at ``|zeta| = 1``.

    Raises :class:`NotParabolicError` unless both are ``<= -theta``.
    """
    k1 = -(2 * coeffs.mu + coeffs.lam)
    k2 = -coeffs.mu
    if n < 2:
        raise ValueError("dimension must be >= 2")
    for name, k in (("kappa1", k1), ("kappa2", k2)):
        if k > -coeffs.theta:
            raise NotParabolicError(
                f"{name} = {k:g} exceeds -theta = {-coeffs.theta:g}; operator is not uniformly parabolic",
                root=k,
            )
    return k1, k2


# ------------------------------------------------------------ heat kernel


def heat_kernel(x, t):
    """``(4 pi t)^(-n/2) exp(-|x|^2 / 4t)`` for ``t > 0`` and ``0`` otherwise.

    ``x`` has shape ``(..., n)``; ``t`` broadcasts against ``x[..., 0]``.
    """
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    n = x.shape[-1]
    r2 = np.sum(x * x, axis=-1)
    pos = t > 0
    ts = np.where(pos, t, 1.0)
    val = (4 * np.pi * ts) ** (-n / 2) * np.exp(-r2 / (4 * ts))
    out = np.where(pos, val, 0.0)
    return out[()] if out.ndim == 0 else out


def heat_kernel_hessian(x, t):
    """Spatial Hessian of the heat kernel, ``phi0 * (x_i x_j / 4t^2 - delta_ij / 2t)``."""
    x = np.asarray(x, dtype=float)
    t = np.asarray(t, dtype=float)
    if np.any(t <= 0):
        raise ValueError("heat-kernel Hessian is undefined for t <= 0")
    n = x.shape[-1]
    phi = heat_kernel(x, t)[..., None, None]
    tt = t[..., None, None]
    outer = x[..., :, None] * x[..., None, :]
    return phi * (outer / (4 * tt**2) - np.eye(n) / (2 * tt))


def heat_kernel_mass(n, t, width=12.0, order=16, panels=6):
    """Tensor Gauss-Legendre integral of ``phi0(., t)`` over the box
    ``[-width sqrt(t), width sqrt(t)]^n``; equals 1 up to truncation."""
    if t <= 0:
        raise ValueError("t must be positive")
    half = width * math.sqrt(t)
    breaks = np.linspace(-half, half, panels + 1)
    g, gw = np.polynomial.legendre.leggauss(order)
    mid, rad = (breaks[1:] + breaks[:-1]) / 2, (breaks[1:] - breaks[:-1]) / 2
    nodes = (mid[:, None] + rad[:, None] * g).ravel()
    weights = (rad[:, None] * gw).ravel()
    grids = np.meshgrid(*([nodes] * n), indexing="ij")
    wts = np.ones(grids[0].shape)
    for ax in range(n):
        wts = wts * np.expand_dims(weights, [i for i in range(n) if i != ax])
    return float(np.sum(wts * heat_kernel(np.stack(grids, axis=-1), t)))


# ------------------------------------------- Gaussian derivative algebra


@lru_cache(maxsize=None)
def _axis_terms(k):
    """d^k/dz^k exp(-z^2/4s) = exp(-z^2/4s) * sum c z^m s^-q  -> {(m, q): c}."""
    terms = {(0, 0): 1.0}
    for _ in range(k):
        nxt = {}
        for (m, q), c in terms.items():
            if m:
                nxt[(m - 1, q)] = nxt.get((m - 1, q), 0.0) + m * c
            nxt[(m + 1, q + 1)] = nxt.get((m + 1, q + 1), 0.0) - 0.5 * c
        terms = {key: c for key, c in nxt.items() if c != 0.0}
    return tuple(sorted(terms.items()))


@lru_cache(maxsize=None)
def _gauss_terms(alpha):
    """Expansion of ``D^alpha phi0`` as ``phi0 * sum c z^beta s^-q``."""
    out = {}
    for combo in itertools.product(*[_axis_terms(a) for a in alpha]):
        c = 1.0
        beta = []
        q = 0
        for (m, qi), ci in combo:
            c *= ci
            beta.append(m)
            q += qi
        key = (tuple(beta), q)
        out[key] = out.get(key, 0.0) + c
    return tuple((b, q, c) for (b, q), c in sorted(out.items()) if c != 0.0)


def _monomial(z, beta):
    out = np.ones(z.shape[:-1])
    for i, b in enumerate(beta):
        if b:
            out = out * z[..., i] ** b
    return out


def _gauss_derivative(z, s, alpha):
    """``D^alpha phi0(z, s)`` for ``s > 0`` (vectorized)."""
    n = z.shape[-1]
    r2 = np.sum(z * z, axis=-1)
    base = (4 * np.pi * s) ** (-n / 2) * np.exp(-r2 / (4 * s))
    acc = np.zeros_like(base)
    for beta, q, c in _gauss_terms(alpha):
        acc = acc + c * _monomial(z, beta) * s ** (-q)
    return base * acc


def _g(nu, x):
    """``x^-nu * lower_gamma(nu, x)``, smooth down to ``x = 0``."""
    small = x < 1e-8
    xs = np.where(small, 1.0, x)
    val = special.gammainc(nu, xs) * special.gamma(nu) * xs ** (-nu)
    ser = 1.0 / nu - x / (nu + 1.0)
    return np.where(small, ser, val)


def _power_exp_integral(p, a, s1, s2):
    """``int_{s1}^{s2} s^-p exp(-a/s) ds`` for ``p > 1``, ``a >= 0``."""
    nu = p - 1.0
    x1, x2 = a / s1, a / s2
    lower = s1 ** (-nu) * _g(nu, x1) - s2 ** (-nu) * _g(nu, x2)
    xm = np.minimum(x1, x2)
    big = xm > nu + 1.0
    asafe = np.where(big, a, 1.0)
    upper = asafe ** (-nu) * special.gamma(nu) * (
        special.gammaincc(nu, np.where(big, x2, 1.0)) - special.gammaincc(nu, np.where(big, x1, 1.0))
    )
    return np.where(big, upper, lower)


def _gauss_derivative_integral(z, s1, s2, alpha):
    """``int_{s1}^{s2} D^alpha phi0(z, s) ds`` in closed form."""
    n = z.shape[-1]
    a = 0.25 * np.sum(z * z, axis=-1)
    cache = {}
    acc = np.zeros_like(a)
    for beta, q, c in _gauss_terms(alpha):
        if q not in cache:
            cache[q] = _power_exp_integral(n / 2 + q, a, s1, s2)
        acc = acc + c * _monomial(z, beta) * cache[q]
    return (4 * np.pi) ** (-n / 2) * acc


def _unit(n, *idx):
    a = [0] * n
    for i in idx:
        a[i] += 1
    return tuple(a)


def kernel_derivatives(z, s, coeffs: LameCoefficients, order: int = 0):
    """Fundamental solution and its spatial derivatives at ``(z, s)``.

    Parameters
    ----------
    z : (..., n) array
        Spatial offset ``x - y``.
    s : (...) array
        Time lag ``t - tau``; entries ``<= 0`` give zeros (causality).
    order : int
        Highest derivative order to return (0, 1 or 2).

    Returns
    -------
    list of arrays
        ``[Phi, dPhi, d2Phi]`` truncated to ``order + 1`` entries, where
        ``Phi[..., i, j]``, ``dPhi[..., i, j, k] = d_k Phi_ij`` and
        ``d2Phi[..., i, j, k, l] = d_k d_l Phi_ij``.
    """
    z = np.asarray(z, dtype=float)
    s = np.broadcast_to(np.asarray(s, dtype=float), z.shape[:-1])
    n = z.shape[-1]
    pos = s > 0
    ss = np.where(pos, s, 1.0)
    mu, c2 = coeffs.mu, coeffs.c_long
    s_mu = mu * ss
    s_c2 = c2 * ss
    with_integral = not coeffs.is_heat

    shape = z.shape[:-1]
    out = []
    for m in range(order + 1):
        arr = np.zeros(shape + (n, n) + (n,) * m)
        for didx in itertools.product(range(n), repeat=m):
            diag = _gauss_derivative(z, s_mu, _unit(n, *didx))
            for i in range(n):
                arr[(..., i, i) + didx] += diag
            if with_integral:
                for i in range(n):
                    for j in range(i, n):
                        v = _gauss_derivative_integral(z, s_mu, s_c2, _unit(n, i, j, *didx))
                        arr[(..., i, j) + didx] += v
                        if j != i:
                            arr[(..., j, i) + didx] += v
        mask = pos.reshape(shape + (1,) * (2 + m))
        out.append(np.where(mask, arr, 0.0))
    return out


def lame_kernel(x, t, coeffs: LameCoefficients, rtol=1e-10):
    """Fundamental solution at one point via adaptive quadrature of the ``s``-integral.

    Returns an ``(n, n)`` array; zero for ``t <= 0``.  When ``lam == -mu``
    the integration interval is empty and no quadrature is performed.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[-1]
    if t <= 0:
        return np.zeros((n, n))
    mu, c2 = coeffs.mu, coeffs.c_long
    out = heat_kernel(x, mu * t) * np.eye(n)
    if coeffs.is_heat:
        return out
    for i in range(n):
        for j in range(i, n):
            alpha = _unit(n, i, j)

            def f(sv, alpha=alpha):
                return float(_gauss_derivative(x[None, :], np.array([sv]), alpha)[0])

            val, err, info = integrate.quad(f, mu * t, c2 * t, epsabs=1e-300, epsrel=rtol, limit=200, full_output=1)[:3]
            if abs(err) > max(rtol * abs(val) * 10, 1e-300) and info.get("last", 0) >= 200:
                raise NumericalError(f"kernel quadrature did not converge (entry {i},{j})", achieved=err)
            out[i, j] += val
            if i != j:
                out[j, i] += val
    return out


# ---------------------------------------------------------------- stress


def apply_stress(field_jacobian, normal, coeffs: LameCoefficients, check=True):
    """Boundary stress of a field with Jacobian ``J[i, j] = du_i/dx_j``.

    ``(sigma u)_i = mu du_i/dnu + mu sum_j nu_j du_j/dx_i + lam nu_i div u``.
    Leading axes broadcast.
    """
    J = np.asarray(field_jacobian, dtype=float)
    nu = np.asarray(normal, dtype=float)
    if check and np.any(np.abs(np.linalg.norm(nu, axis=-1) - 1.0) > 1e-12):
        raise ValueError("stress normal must have unit length")
    dnu = np.einsum("...ij,...j->...i", J, nu)
    cross = np.einsum("...ji,...j->...i", J, nu)
    div = np.trace(J, axis1=-2, axis2=-1)
    return coeffs.mu * dnu + coeffs.mu * cross + coeffs.lam * nu * div[..., None]


# ------------------------------------------------------------ FD oracle


def lame_pde_residual(x, t, coeffs: LameCoefficients, h=1e-3):
    """Central-difference evaluation of ``L Phi`` at an off-pole point.

    Returns the ``(n, n)`` matrix ``Phi_t - mu Lap Phi - (mu + lam) grad div Phi``
    (applied columnwise) using second-order stencils of step ``h``.
    """
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    if t - h <= 0:
        raise ValueError("finite-difference stencil crosses t = 0")
    if np.linalg.norm(x) == 0 and t <= h:
        raise ValueError("stencil touches the pole")
    e = np.eye(n) * h
    pts, times = [x, x, x], [t + h, t - h, t]
    for i in range(n):
        pts += [x + e[i], x - e[i]]
        times += [t, t]
    for i in range(n):
        for k in range(i + 1, n):
            for si, sk in ((1, 1), (1, -1), (-1, 1), (-1, -1)):
                pts.append(x + si * e[i] + sk * e[k])
                times.append(t)
    (vals,) = kernel_derivatives(np.array(pts), np.array(times), coeffs, order=0)
    P_tp, P_tm, P0 = vals[0], vals[1], vals[2]
    dt = (P_tp - P_tm) / (2 * h)
    second = np.zeros((n, n, n, n))  # [a, b] -> d_a d_b Phi
    idx = 3
    for i in range(n):
        second[i, i] = (vals[idx] - 2 * P0 + vals[idx + 1]) / h**2
        idx += 2
    for i in range(n):
        for k in range(i + 1, n):
            pp, pm, mp, mm = vals[idx : idx + 4]
            second[i, k] = second[k, i] = (pp - pm - mp + mm) / (4 * h**2)
            idx += 4
    lap = sum(second[i, i] for i in range(n))
    graddiv = np.einsum("ikkj->ij", second)  # (grad div Phi)_ij = sum_k d_i d_k Phi_kj
    return dt - coeffs.mu * lap - (coeffs.mu + coeffs.lam) * graddiv
