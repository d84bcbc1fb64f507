"""Exact polynomial solutions of the heat and parabolic Lamé systems.

Contents
--------
* :func:`caloric_w` -- closed-form ``w^{(j,k)}`` with
  ``(d_t - d_y^2) w = t^j y^k`` and zero Cauchy data at ``y = 0``.
* :func:`poly_cauchy_solve` -- polynomial solution of ``L v = t^j x^alpha e_m``
  with ``v = d_n v = 0`` on the face ``x_n = 0``.
* :func:`reduce_boundary_data` -- lift of polynomial face data.
* :func:`spherical_harmonics`, :func:`heat_polynomial`,
  :func:`double_orthogonality_gram` -- the heat-polynomial basis built on
  solid harmonics.
* :func:`lame_caloric_basis` -- homogeneous polynomial solutions of the
  Lamé system generated from monomial Cauchy data on ``x_n = 0``.

All constructions use :class:`fractions.Fraction`; floats appear only in
normalization constants (``scale``) and in numerical Gram matrices.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import NumericalError, UnsupportedDimensionError
from .geometry import _sphere_rule, gauss_legendre, make_ball, volume_rule
from .kernels import LameCoefficients
from .polynomial import CaloricPolynomial, as_fraction, lame_apply

__all__ = [
    "caloric_w",
    "face_solve_scalar",
    "face_cauchy_extend",
    "poly_cauchy_solve",
    "face_stress",
    "reduce_boundary_data",
    "SphericalHarmonic",
    "spherical_harmonics",
    "heat_polynomial",
    "BasisElement",
    "heat_basis",
    "double_orthogonality_gram",
    "off_block_max",
    "lame_caloric_basis",
]

P = CaloricPolynomial


# ------------------------------------------------------------- w^{(j,k)}


@lru_cache(maxsize=None)
def caloric_w(j: int, k: int) -> CaloricPolynomial:
    """``w^{(j,k)}(y, t) = -sum_m t^(j-m) y^(k+2m+2) k! j! / ((k+2m+2)! (j-m)!)``.

    Returned as a one-variable polynomial (``x_1`` plays the role of ``y``).
    """
    if j < 0 or k < 0:
        raise ValueError("j and k must be non-negative")
    terms = {}
    for m in range(j + 1):
        c = Fraction(math.factorial(k) * math.factorial(j), math.factorial(k + 2 * m + 2) * math.factorial(j - m))
        terms[(k + 2 * m + 2, j - m)] = -c
    return P(1, terms)


def _embed_w(w, n, speed, j):
    """``speed^-(j+1) w(x_n, speed t)`` as a polynomial in ``n`` space variables."""
    speed = as_fraction(speed)
    factor = speed ** (-(j + 1))
    terms = {}
    for (py, pt), c in w.terms.items():
        key = (0,) * (n - 1) + (py, pt)
        terms[key] = c * speed**pt * factor
    return P(n, terms)


# ---------------------------------------------- scalar face problem (heat)


def face_solve_scalar(g: CaloricPolynomial, speed=1) -> CaloricPolynomial:
    """Solve ``(d_t - speed * Lap) v = g`` with ``v = d_n v = 0`` at ``x_n = 0``.

    Follows the constructive induction on ``|alpha'|``: a monomial datum
    ``t^j x'^a' x_n^k`` is answered by ``x'^a' W_{j,k}(x_n, t)`` and the
    defect ``speed * W * Lap'(x'^a')`` is solved recursively.
    """
    speed = as_fraction(speed)
    n = g.dim
    out = P(n)
    for key, c in g.terms.items():
        out = out + _face_monomial(n, key, speed) * c
    return out


@lru_cache(maxsize=None)
def _face_monomial(n, key, speed):
    alpha_p, k, j = key[: n - 1], key[n - 1], key[n]
    W = _embed_w(caloric_w(j, k), n, speed, j)
    xp = P.monomial(n, tuple(alpha_p) + (0,))
    v = xp * W
    lap_p = xp.laplacian(range(n - 1))
    if lap_p.is_zero():
        return v
    return v + face_solve_scalar(W * lap_p * speed, speed)


# -------------------------------------------- Cauchy-Kovalevskaya (Lamé)


def face_cauchy_extend(a0, a1, g, coeffs: LameCoefficients, max_steps=200):
    """Polynomial solution of ``L v = g`` with ``v = a0``, ``d_n v = a1`` on ``x_n = 0``.

    ``a0`` and ``a1`` must not depend on ``x_n``.  The Taylor coefficients in
    ``x_n`` are generated by solving the system for ``d_n^2 v``; the diagonal
    of that solve is ``diag(mu, ..., mu, 2 mu + lam)``.  The recursion
    terminates for polynomial data because every step lowers the weighted
    degree ``2 deg_t + deg_x'``.
    """
    n = len(a0)
    mu, lam = as_fraction(coeffs.mu), as_fraction(coeffs.lam)
    c2 = 2 * mu + lam
    for a in list(a0) + list(a1):
        if a.degree_in(n - 1) > 0:
            raise ValueError("Cauchy data must not depend on x_n")
    gmax = max(gi.degree_in(n - 1) for gi in g)
    # g_k = d_n^k g at x_n = 0
    gk = []
    cur = list(g)
    for _ in range(gmax + 1):
        gk.append([ci.restrict(n - 1) for ci in cur])
        cur = [ci.dx(n - 1) for ci in cur]
    zero = [P(n) for _ in range(n)]
    a = [list(a0), list(a1)]
    k = 0
    while True:
        ak, ak1 = a[k], a[k + 1]
        g_here = gk[k] if k < len(gk) else zero
        div_k = sum((ak[l].dx(l) for l in range(n - 1)), P(n))
        div_k1 = sum((ak1[l].dx(l) for l in range(n - 1)), P(n))
        nxt = []
        for i in range(n - 1):
            rhs = ak[i].dt() - ak[i].laplacian(range(n - 1)) * mu - (div_k.dx(i) + ak1[n - 1].dx(i)) * (mu + lam) - g_here[i]
            nxt.append(rhs * (1 / mu))
        rhs = ak[n - 1].dt() - ak[n - 1].laplacian(range(n - 1)) * mu - div_k1 * (mu + lam) - g_here[n - 1]
        nxt.append(rhs * (1 / c2))
        a.append(nxt)
        k += 1
        if k >= len(gk) and all(p.is_zero() for p in a[k]) and all(p.is_zero() for p in a[k + 1]):
            break
        if k > max_steps:
            raise NumericalError("Cauchy-Kovalevskaya recursion did not terminate")
    xn = P.x(n, n - 1)
    v = [P(n) for _ in range(n)]
    xpow = P.constant(n, 1)
    for kk, ak in enumerate(a):
        if kk:
            xpow = xpow * xn * Fraction(1, kk)
        for i in range(n):
            if not ak[i].is_zero():
                v[i] = v[i] + ak[i] * xpow
    return v


def _unit_vector_poly(n, m, p):
    return [p if i == m else P(n) for i in range(n)]


def poly_cauchy_solve(j: int, alpha, coeffs: LameCoefficients, component: Optional[int] = None):
    """Polynomial ``v`` with ``L v = t^j x^alpha e_m`` and zero Cauchy data on ``x_n = 0``.

    ``component`` (``m``, zero-based) defaults to the last one.  In the
    heat case (``lam = -mu``) the components decouple and the scalar
    induction of :func:`face_solve_scalar` is used with diffusivity ``mu``;
    otherwise the coupled system is expanded by :func:`face_cauchy_extend`.
    The result is checked exactly before it is returned.
    """
    alpha = tuple(int(a) for a in alpha)
    n = len(alpha)
    if n < 2:
        raise ValueError("need n >= 2")
    m = n - 1 if component is None else int(component)
    g = _unit_vector_poly(n, m, P.monomial(n, alpha, j))
    if coeffs.is_heat:
        v = _unit_vector_poly(n, m, face_solve_scalar(g[m], coeffs.mu))
    else:
        zero = [P(n) for _ in range(n)]
        v = face_cauchy_extend(zero, zero, g, coeffs)
    _verify_face_solution(v, g, coeffs)
    return v


def _verify_face_solution(v, g, coeffs):
    n = len(v)
    Lv = lame_apply(v, coeffs.mu, coeffs.lam)
    if any(not (a - b).is_zero() for a, b in zip(Lv, g)):
        raise ArithmeticError("polynomial solution fails L v = g")
    for p in v:
        if not p.restrict(n - 1).is_zero() or not p.dx(n - 1).restrict(n - 1).is_zero():
            raise ArithmeticError("polynomial solution violates the face conditions")


# ---------------------------------------------------- boundary data lift


def face_stress(u, coeffs: LameCoefficients, axis=None, sign=1):
    """Exact stress of a polynomial field for the normal ``sign * e_axis``."""
    n = len(u)
    axis = n - 1 if axis is None else axis
    mu, lam = as_fraction(coeffs.mu), as_fraction(coeffs.lam)
    s = as_fraction(sign)
    div = sum((u[k].dx(k) for k in range(n)), P(n))
    out = []
    for i in range(n):
        term = u[i].dx(axis) * mu + u[axis].dx(i) * mu
        if i == axis:
            term = term + div * lam
        out.append(term * s)
    return out


def reduce_boundary_data(f, u1, u2, coeffs: LameCoefficients):
    """Reduce face data to a zero-data problem on ``x_n = 0``.

    The face carries the stress convention of the normal ``+e_n``.  Returns
    ``(g, lift)`` with ``lift = u1 + x_n J (u2 - sigma u1)`` and
    ``g = f - L lift``, where ``J = diag(1/mu, ..., 1/mu, 1/(2 mu + lam))``.
    The lift reproduces ``u1`` and ``u2`` on the face exactly, so any ``v``
    solving ``L v = g`` with zero Cauchy data gives the solution ``v + lift``.
    """
    n = len(f)
    for p in list(u1) + list(u2):
        if p.degree_in(n - 1) > 0:
            raise ValueError("face data must not depend on x_n")
    mu, lam = as_fraction(coeffs.mu), as_fraction(coeffs.lam)
    J = [1 / mu] * (n - 1) + [1 / (2 * mu + lam)]
    su1 = face_stress(u1, coeffs)
    xn = P.x(n, n - 1)
    lift = [u1[i] + xn * (u2[i] - su1[i].restrict(n - 1)) * J[i] for i in range(n)]
    Llift = lame_apply(lift, mu, lam)
    g = [f[i] - Llift[i] for i in range(n)]
    slift = face_stress(lift, coeffs)
    for i in range(n):
        if not (lift[i].restrict(n - 1) - u1[i].restrict(n - 1)).is_zero():
            raise ArithmeticError("lift does not reproduce the face values")
        if not (slift[i].restrict(n - 1) - u2[i]).is_zero():
            raise ArithmeticError("lift does not reproduce the face stress")
    return g, lift


def solve_face_problem(f, u1, u2, coeffs: LameCoefficients):
    """Polynomial solution of the face Cauchy problem with polynomial data."""
    n = len(f)
    g, lift = reduce_boundary_data(f, u1, u2, coeffs)
    zero = [P(n) for _ in range(n)]
    v = face_cauchy_extend(zero, zero, g, coeffs)
    return [a + b for a, b in zip(v, lift)]


__all__ += ["solve_face_problem"]


# --------------------------------------------------- spherical harmonics


@dataclass(frozen=True)
class SphericalHarmonic:
    dim: int
    degree: int
    index: int
    poly: CaloricPolynomial  # exact coefficients; poly.scale is the L2(sphere) normalization

    def __call__(self, x):
        return self.poly(x)


def _re_im_power(n, m):
    """Real and imaginary parts of ``(x_1 + i x_2)^m`` as exact polynomials."""
    re, im = {}, {}
    for k in range(m + 1):
        c = math.comb(m, k)
        key = [0] * (n + 1)
        key[0], key[1] = m - k, k
        key = tuple(key)
        if k % 2 == 0:
            re[key] = c * (-1) ** (k // 2)
        else:
            im[key] = c * (-1) ** ((k - 1) // 2)
    return P(n, re), P(n, im)


def _legendre_coeffs(nu):
    """Exact coefficients of ``P_nu(u)`` keyed by power."""
    out = {}
    for k in range(nu // 2 + 1):
        c = Fraction((-1) ** k * math.comb(nu, k) * math.comb(2 * nu - 2 * k, nu), 2**nu)
        out[nu - 2 * k] = c
    return out


def _sphere_gram(polys, n, order):
    if n == 2:
        m = 2 * order
        th = 2 * math.pi * np.arange(m) / m
        pts = np.stack([np.cos(th), np.sin(th)], axis=-1)
        w = np.full(m, 2 * math.pi / m)
    else:
        pts, w = _sphere_rule(order, math.pi)
    vals = np.array([p(pts) for p in polys])
    return (vals * w) @ vals.T


@lru_cache(maxsize=None)
def spherical_harmonics(n: int, nu: int):
    """Real solid harmonics of degree ``nu``, orthonormal in ``L2`` of the unit sphere.

    ``n = 2``: ``Re`` and ``Im`` of ``(x_1 + i x_2)^nu`` (one constant for
    ``nu = 0``).  ``n = 3``: the ``2 nu + 1`` functions
    ``r^nu P_nu^m(cos theta) {cos, sin}(m phi)``, written as polynomials.
    """
    if n not in (2, 3):
        raise UnsupportedDimensionError(f"spherical harmonics only for n in {{2, 3}}, got {n}")
    if nu < 0:
        raise ValueError("degree must be non-negative")
    polys = []
    if n == 2:
        if nu == 0:
            polys = [P.constant(2, 1)]
        else:
            polys = list(_re_im_power(2, nu))
    else:
        r2 = sum((P.x(3, i) ** 2 for i in range(3)), P(3))
        leg = _legendre_coeffs(nu)
        for m in range(nu + 1):
            # m-th derivative of P_nu, then homogenize with r^2
            dm = {}
            for p, c in leg.items():
                if p >= m:
                    dm[p - m] = c * math.perm(p, m)
            q = P(3)
            for p, c in dm.items():
                k2 = (nu - m - p) // 2
                q = q + P.monomial(3, (0, 0, p)) * (r2**k2) * c
            re, im = _re_im_power(3, m)
            if m == 0:
                polys.append(q)
            else:
                polys.extend([q * re, q * im])
    gram = _sphere_gram(polys, n, nu + 2)
    norms = np.sqrt(np.diag(gram))
    scaled = [p.with_scale(1.0 / s) for p, s in zip(polys, norms)]
    check = gram / np.outer(norms, norms)
    if np.max(np.abs(check - np.eye(len(polys)))) > 1e-12:
        raise NumericalError("spherical harmonics failed the orthonormality check")
    return tuple(SphericalHarmonic(n, nu, s + 1, p) for s, p in enumerate(scaled))


# ------------------------------------------------------- heat polynomials


def _radial_coeffs(N, nu, n):
    c = [Fraction(1)]
    for j in range(1, N + 1):
        c.append(c[-1] * (2 * N - 2 * j + 2) * (n + 2 * N - 2 * j + 2 * nu) / j)
    return c


def heat_polynomial(N: int, nu: int, s: int, n: int, axis: Optional[int] = None) -> CaloricPolynomial:
    """Heat polynomial ``H^{(s)}_{N,nu}`` (or the axis variant ``H^{(s,i)}_{N,0}``).

    ``s`` is 1-based within the harmonics of degree ``nu``; ``axis`` is the
    zero-based coordinate index of the axis variant, which requires
    ``nu = 0`` and ``N >= 1``.  The result is checked to satisfy the heat
    equation exactly.
    """
    if N < 0 or nu < 0:
        raise ValueError("N and nu must be non-negative")
    if axis is not None:
        if nu != 0 or N < 1:
            raise ValueError("axis variant needs nu = 0 and N >= 1")
        terms = {}
        for j in range(N + 1):
            key = [0] * (n + 1)
            key[axis] = 2 * N - 2 * j
            key[n] = j
            terms[tuple(key)] = Fraction(math.factorial(2 * N), math.factorial(j) * math.factorial(2 * N - 2 * j))
        H = P(n, terms)
    else:
        if nu == 0 and N >= 1:
            raise ValueError("for nu = 0 and N >= 1 request an axis variant")
        harms = spherical_harmonics(n, nu)
        if not 1 <= s <= len(harms):
            raise ValueError(f"s must be in 1..{len(harms)} for degree {nu}")
        h = harms[s - 1].poly
        hx = h.with_scale(1.0)
        r2 = sum((P.x(n, i) ** 2 for i in range(n)), P(n))
        tpoly = P.t(n)
        H = P(n)
        for j, c in enumerate(_radial_coeffs(N, nu, n)):
            H = H + (tpoly**j) * (r2 ** (N - j)) * hx * c
        H = H.with_scale(h.scale)
    if not H.heat().is_zero():
        raise ArithmeticError("heat polynomial fails the heat equation")
    return H


@dataclass(frozen=True)
class BasisElement:
    poly: CaloricPolynomial
    N: int
    nu: int
    s: int
    axis: Optional[int] = None

    @property
    def key(self):
        """Harmonic label ``(nu, s)``; axis variants get ``(0, 'axis', i)``."""
        return (self.nu, self.s) if self.axis is None else (0, "axis", self.axis)


def heat_basis(n: int, degree: int, axes=(0,)):
    """Heat polynomials with ``2N + nu <= degree`` in lexicographic ``(nu, s, N)`` order,
    followed by axis variants ``H^{(1,i)}_{N,0}`` for ``i`` in ``axes``."""
    out = []
    for nu in range(degree + 1):
        for s in range(1, len(spherical_harmonics(n, nu)) + 1):
            for N in range((degree - nu) // 2 + 1):
                if nu == 0 and N >= 1:
                    continue
                out.append(BasisElement(heat_polynomial(N, nu, s, n), N, nu, s))
    for i in axes:
        for N in range(1, degree // 2 + 1):
            out.append(BasisElement(heat_polynomial(N, 0, 1, n, axis=i), N, 0, 1, axis=i))
    return out


def double_orthogonality_gram(basis, R=1.0, T=1.0, order=16):
    """Numerical ``L2(B(0,R) x (0,T))`` Gram matrix of basis elements."""
    polys = [b.poly if isinstance(b, BasisElement) else b for b in basis]
    dims = {p.dim for p in polys}
    if len(dims) != 1:
        raise ValueError("basis elements must share a dimension")
    n = dims.pop()
    rule = volume_rule(make_ball([0.0] * n, R), order)
    tau, wt = gauss_legendre(0.0, T, order)
    X = np.repeat(rule.nodes[None, :, :], len(tau), axis=0)
    tt = np.repeat(tau[:, None], len(rule), axis=1)
    W = wt[:, None] * rule.weights[None, :]
    vals = np.array([p(X, tt).ravel() for p in polys])
    return (vals * W.ravel()) @ vals.T


def off_block_max(G, keys):
    """Largest ``|G_ab|`` over pairs with different harmonic labels."""
    keys = list(keys)
    best = 0.0
    for a in range(len(keys)):
        for b in range(len(keys)):
            if keys[a] != keys[b]:
                best = max(best, abs(G[a, b]))
    return best


# -------------------------------------------- Lamé caloric vector basis


def lame_caloric_basis(n: int, degree: int, coeffs: LameCoefficients):
    """Homogeneous polynomial solutions of ``L v = 0`` up to parabolic degree ``degree``.

    One solution per monomial Cauchy datum ``t^j x'^b e_m`` placed either in
    ``v|_{x_n=0}`` or in ``d_n v|_{x_n=0}``.  By uniqueness of formal
    solutions these span all polynomial solutions of that degree.
    """
    out = []
    zero = [P(n) for _ in range(n)]
    for d in range(degree + 1):
        for which in (0, 1):
            dd = d - which
            if dd < 0:
                continue
            for j in range(dd // 2 + 1):
                for beta in _multi_indices(n - 1, dd - 2 * j):
                    mono = P.monomial(n, tuple(beta) + (0,), j)
                    for m in range(n):
                        data = _unit_vector_poly(n, m, mono)
                        a0, a1 = (data, zero) if which == 0 else (zero, data)
                        out.append(face_cauchy_extend(a0, a1, zero, coeffs))
    return out


def _multi_indices(k, total):
    if k == 0:
        if total == 0:
            yield ()
        return
    for first in range(total, -1, -1):
        for rest in _multi_indices(k - 1, total - first):
            yield (first,) + rest
