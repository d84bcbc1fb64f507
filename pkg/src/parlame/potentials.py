"""Parabolic potentials of the Lamé system.

``I`` (initial data), ``G`` (volume source), ``V`` (single layer, stress
density) and ``W`` (double layer, value density), the Green representation
check, and one-sided traces by offset evaluation plus extrapolation.

Densities are either callables ``f(y, tau) -> (..., n)`` (``y`` of shape
``(..., n)``, ``tau`` of shape ``(...)``), in which case a quadrature graded
around the target is built per evaluation, or :class:`Density` objects that
carry their own fixed rule and samples.

Time integrals use ``sigma = sqrt(t - tau)``.  Breakpoints in ``sigma`` are
placed geometrically toward zero and around ``D / sqrt(c)`` for the target's
distance ``D`` to the integration set and each diffusivity ``c``; spatial
panels are refined around the target's projection at the scale
``sigma * sqrt(c)``.  ``order`` is the number of Gauss points per panel.
"""

from __future__ import annotations

import csv
import io
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import AmbiguousTraceError, NumericalError
from .geometry import (
    Box,
    BoundaryPatch,
    CylinderDomain,
    QuadratureRule,
    composite_gauss,
    graded_breaks,
    surface_rule,
    time_rule,
    volume_rule,
    all_faces,
)
from .kernels import LameCoefficients, apply_stress, kernel_derivatives

__all__ = [
    "Density",
    "PotentialField",
    "QuadOptions",
    "poisson_integral",
    "volume_potential",
    "single_layer",
    "double_layer",
    "stress_of",
    "PolynomialField",
    "green_identity",
    "JumpResult",
    "jump_probe",
    "one_sided",
    "evaluate_batch",
    "batch_to_csv",
    "thread_count",
    "potential_matrix",
]

SURFACE_TOL = 1e-8
_CHUNK = 60000
_KINDS = ("volume", "value", "stress", "initial")


@dataclass(frozen=True)
class QuadOptions:
    order: int = 12
    time_order: int = 16
    levels: int = 12  # geometric refinement levels toward sigma = 0

    def __post_init__(self):
        for v in (self.order, self.time_order, self.levels):
            if int(v) != v or v < 1:
                raise ValueError("quadrature options must be positive integers")


DEFAULT = QuadOptions()


# ------------------------------------------------------------- densities


@dataclass(frozen=True)
class Density:
    """Samples of a density on a fixed quadrature rule.

    ``nodes`` are spatial points ``(N, n)``; ``times`` is ``(N,)`` for
    space-time densities and ``None`` for initial data.  ``normals`` is set
    for surface densities.
    """

    kind: str
    nodes: np.ndarray
    weights: np.ndarray
    samples: np.ndarray
    times: Optional[np.ndarray] = None
    normals: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"density kind must be one of {_KINDS}")
        if len(self.samples) != len(self.nodes) or len(self.weights) != len(self.nodes):
            raise ValueError("sample count must equal node count")
        if not np.all(np.isfinite(self.samples)):
            raise ValueError("density samples must be finite")
        if self.kind in ("value", "stress") and self.normals is None:
            raise ValueError("surface densities need normals")

    @classmethod
    def sample(cls, kind, func, rule: QuadratureRule, trule: Optional[QuadratureRule] = None):
        """Tabulate ``func`` on a spatial rule (times a time rule if given)."""
        if trule is None:
            y = rule.nodes
            return cls(kind, y, rule.weights, np.asarray(func(y), float), normals=rule.normals)
        tau = trule.nodes[:, 0]
        N, M = len(rule), len(tau)
        y = np.repeat(rule.nodes[None], M, axis=0).reshape(N * M, -1)
        tt = np.repeat(tau, N)
        w = (trule.weights[:, None] * rule.weights[None, :]).ravel()
        nrm = None if rule.normals is None else np.repeat(rule.normals[None], M, axis=0).reshape(N * M, -1)
        return cls(kind, y, w, np.asarray(func(y, tt), float), times=tt, normals=nrm)

    def __add__(self, other):
        self._compatible(other)
        return Density(self.kind, self.nodes, self.weights, self.samples + other.samples, self.times, self.normals)

    def __mul__(self, c):
        return Density(self.kind, self.nodes, self.weights, self.samples * float(c), self.times, self.normals)

    __rmul__ = __mul__

    def _compatible(self, other):
        if self.kind != other.kind or self.nodes.shape != other.nodes.shape or not np.array_equal(self.nodes, other.nodes):
            raise ValueError("densities live on different rules")


@dataclass(frozen=True)
class PotentialField:
    """A potential bound to its density: callable on targets ``(x, t)``."""

    which: str
    evaluator: Callable = field(repr=False)
    density: object = field(repr=False, default=None)

    def __call__(self, x, t):
        return self.evaluator(x, t)


# --------------------------------------------------------------- helpers


def _dist_box(x, lo, hi):
    gap = np.maximum(np.maximum(lo - x, x - hi), 0.0)
    return float(np.linalg.norm(gap))


def _sigma_breaks(smax, dists, coeffs, opts, floor=None):
    """Panel breakpoints on ``(0, smax)`` in ``sigma``."""
    pts = {0.0, smax}
    for j in range(1, opts.levels + 1):
        pts.add(smax * 2.0**-j)
    speeds = (coeffs.mu, coeffs.c_long)
    for D in dists:
        if D <= 0:
            continue
        for c in speeds:
            base = D / math.sqrt(c)
            for j in range(-4, 5):
                pts.add(base * 2.0**j)
    lo_cut = 0.0
    finite = [D for D in dists if D > 0]
    if finite and (floor is None or floor > 0):
        # the kernel carries exp(-D^2 / (4 c sigma^2)); below D / 16 / sqrt(c) it is < e^-64
        lo_cut = min(finite) / (16 * math.sqrt(max(speeds)))
    br = np.array(sorted(p for p in pts if lo_cut <= p <= smax))
    if br[0] > 0 and lo_cut == 0.0:
        br = np.concatenate([[0.0], br])
    keep = np.concatenate([[True], np.diff(br) > 1e-14 * smax])
    br = br[keep]
    return br


def _graded_axis(lo, hi, center, s_lo, s_hi, coeffs, order):
    """Panels around ``center`` resolving Gaussians of widths between ``s_lo`` and ``s_hi``."""
    scale = s_lo * math.sqrt(min(coeffs.mu, coeffs.c_long))
    reach = 14 * s_hi * math.sqrt(max(coeffs.mu, coeffs.c_long))
    levels = max(1, int(math.ceil(math.log2(reach / scale + 1)))) if scale > 0 else 1
    br = graded_breaks(lo, hi, center, scale, ratio=2.0, levels=levels)
    return composite_gauss(br, order)


def _space_time(br, spatial, D, coeffs, opts):
    """Tensor of Gauss panels in ``sigma`` with a spatial rule built once per panel.

    ``spatial(s_lo, s_hi)`` returns nodes and weights for Gaussian widths in
    that range.  Returns ``y, w, s`` with ``s = sigma^2`` and the Jacobian
    ``2 sigma`` folded into ``w``.
    """
    cmax = max(coeffs.mu, coeffs.c_long)
    ys, ws, ss = [], [], []
    for a, b in zip(br[:-1], br[1:]):
        if D > 0 and D**2 / (4 * cmax * b * b) > 700:
            continue
        sg, wsg = composite_gauss([a, b], opts.time_order)
        y, w = spatial(a if a > 0 else 0.5 * b, b)
        m = len(w)
        ys.append(np.tile(y, (len(sg), 1)))
        ws.append((2 * sg * wsg)[:, None] * w[None, :])
        ss.append(np.repeat(sg * sg, m))
    if not ys:
        return None
    return np.concatenate(ys), np.concatenate([w.ravel() for w in ws]), np.concatenate(ss)


def _tensor(rules):
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrids = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    w = np.ones(nodes.shape[0])
    for g in wgrids:
        w = w * g.ravel()
    return nodes, w


def _call_density(func, y, tau):
    if callable(func):
        val = np.asarray(func(y, tau), dtype=float)
    else:
        val = np.broadcast_to(np.asarray(func, dtype=float), y.shape)
    if val.shape != y.shape:
        val = np.broadcast_to(val, y.shape)
    return val


def _as_box(domain):
    return domain.base if isinstance(domain, CylinderDomain) else domain


def _parent_box(patch):
    return patch.base


# ------------------------------------------------------------ integrands


def _stress_kernel(A, nu, coeffs):
    """``S[..., i, j]``: stress in ``y`` (normal ``nu``) of column ``j`` of the kernel.

    ``A[..., i, j, k]`` are derivatives of ``Phi_ij`` with respect to
    ``z_k = x_k - y_k``; the sign flip from ``d/dy = -d/dz`` is included.
    """
    mu, lam = coeffs.mu, coeffs.lam
    t1 = np.einsum("...ijk,...k->...ij", A, nu)
    t2 = np.einsum("...kji,...k->...ij", A, nu)
    t3 = nu[..., :, None] * np.einsum("...kjk->...j", A)[..., None, :]
    return -(mu * t1 + mu * t2 + lam * t3)


def _accumulate(kind, z, s, w, dens, nu, coeffs, grad):
    """Weighted sum of one potential's integrand over flat arrays of nodes."""
    n = z.shape[-1]
    val = np.zeros(n)
    gval = np.zeros((n, n))
    for a in range(0, len(w), _CHUNK):
        sl = slice(a, a + _CHUNK)
        zz, ss, ww, dd = z[sl], s[sl], w[sl], dens[sl]
        order = (1 if kind == "W" else 0) + (1 if grad else 0)
        K = kernel_derivatives(zz, ss, coeffs, order=order)
        if kind == "W":
            nn = nu[sl] if nu.ndim == 2 else np.broadcast_to(nu, zz.shape)
            S = _stress_kernel(K[1], nn, coeffs)
            val -= np.einsum("m,mij,mi->j", ww, S, dd)
            if grad:
                A = np.moveaxis(K[2], -1, -4)  # [..., l, i, j, k]
                Sg = _stress_kernel(A, nn[:, None, :], coeffs)  # [..., l, i, j]
                gval -= np.einsum("m,mlij,mi->jl", ww, Sg, dd)
        else:
            val += np.einsum("m,mij,mj->i", ww, K[0], dd)
            if grad:
                gval += np.einsum("m,mijl,mj->il", ww, K[1], dd)
    return val, gval


# ---------------------------------------------------- fixed-rule densities


def _eval_fixed(kind, d: Density, x, t, coeffs, T1, grad):
    x = np.asarray(x, float)
    if d.times is None:
        s = np.full(len(d.weights), t - T1)
    else:
        s = t - d.times
    mask = s > 0
    if not np.any(mask):
        n = x.shape[0]
        return np.zeros(n), np.zeros((n, n))
    z = x[None, :] - d.nodes[mask]
    nu = d.normals[mask] if d.normals is not None else np.zeros_like(z)
    return _accumulate(kind, z, s[mask], d.weights[mask], d.samples[mask], nu, coeffs, grad)


# -------------------------------------------------------- public potentials


def poisson_integral(h, domain, x, t, coeffs: LameCoefficients, T1=0.0, opts: QuadOptions = DEFAULT, grad=False):
    """``I h(x, t) = int_Omega Phi^T(x - y, t - T1) h(y) dy``; zero for ``t <= T1``."""
    x = np.asarray(x, float)
    n = x.shape[0]
    if t <= T1:
        return (np.zeros(n), np.zeros((n, n))) if grad else np.zeros(n)
    if isinstance(h, Density):
        out = _eval_fixed("I", h, x, t, coeffs, T1, grad)
        return out if grad else out[0]
    y, w = _poisson_nodes(_as_box(domain), x, t, T1, coeffs, opts)
    dens = _call_density(lambda yy, tt: h(yy) if callable(h) else h, y, np.full(len(w), T1))
    out = _accumulate("I", x[None, :] - y, np.full(len(w), t - T1), w, dens, None, coeffs, grad)
    return out if grad else out[0]


def volume_potential(f, domain, x, t, coeffs: LameCoefficients, T1=0.0, opts: QuadOptions = DEFAULT, grad=False):
    """``G f(x, t) = int_T1^t int_Omega Phi^T(x - y, t - tau) f(y, tau) dy dtau``."""
    x = np.asarray(x, float)
    n = x.shape[0]
    if t <= T1:
        return (np.zeros(n), np.zeros((n, n))) if grad else np.zeros(n)
    if isinstance(f, Density):
        out = _eval_fixed("G", f, x, t, coeffs, T1, grad)
        return out if grad else out[0]
    box = _as_box(domain)
    smax = math.sqrt(t - T1)
    if isinstance(box, Box):
        d_out = _dist_box(x, box.lo, box.hi)
        d_in = box.distance_to_boundary(x) if d_out == 0 else 0.0
        dists = [d_out] if d_out > 0 else [d_in]
        br = _sigma_breaks(smax, dists, coeffs, opts, floor=d_out)

        def spatial(s_lo, s_hi):
            return _tensor([_graded_axis(lo, hi, x[i], s_lo, s_hi, coeffs, opts.order) for i, (lo, hi) in enumerate(box.bounds)])

        nodes = _space_time(br, spatial, d_out, coeffs, opts)
        if nodes is None:
            return (np.zeros(n), np.zeros((n, n))) if grad else np.zeros(n)
        y, w, s = nodes
    else:
        rule = volume_rule(box, 4 * opts.order)
        trule = time_rule(T1, t, opts.time_order, mode="sqrt")
        M = len(trule)
        y = np.tile(rule.nodes, (M, 1))
        w = (trule.weights[:, None] * rule.weights[None, :]).ravel()
        s = np.repeat(t - trule.nodes[:, 0], len(rule))
    dens = _call_density(f, y, t - s)
    out = _accumulate("G", x[None, :] - y, s, w, dens, None, coeffs, grad)
    return out if grad else out[0]


def _surface_nodes(patch: BoundaryPatch, x, t, T1, coeffs, opts):
    """Graded space-time nodes on one patch for the target ``(x, t)``."""
    smax = math.sqrt(t - T1)
    if patch.is_face:
        D = patch.distance(x)
        br = _sigma_breaks(smax, [D], coeffs, opts, floor=D)
        box = patch.base

        def spatial(s_lo, s_hi):
            rules = []
            for i, (lo, hi) in enumerate(box.bounds):
                if i == patch.axis:
                    rules.append((np.array([patch.plane]), np.array([1.0])))
                else:
                    rules.append(_graded_axis(lo, hi, x[i], s_lo, s_hi, coeffs, opts.order))
            return _tensor(rules)

        nodes = _space_time(br, spatial, D, coeffs, opts)
        if nodes is None:
            return None
        y, w, s = nodes
        return y, w, s, np.broadcast_to(patch.normal, y.shape)
    rule = surface_rule(patch, 4 * opts.order)
    trule = time_rule(T1, t, 4 * opts.time_order, mode="sqrt")
    M = len(trule)
    y = np.tile(rule.nodes, (M, 1))
    w = (trule.weights[:, None] * rule.weights[None, :]).ravel()
    s = np.repeat(t - trule.nodes[:, 0], len(rule))
    nu = np.tile(rule.normals, (M, 1))
    return y, w, s, nu


def _patch_list(patches, density):
    if isinstance(patches, BoundaryPatch):
        return [(patches, density)]
    out = []
    for item in patches:
        if isinstance(item, BoundaryPatch):
            out.append((item, density))
        else:
            out.append(tuple(item))
    return out


def _min_distance(pairs, x):
    ds = [p.distance(x) for p, _ in pairs if p.is_face]
    return min(ds) if ds else math.inf


def _layer(kind, density, patches, x, t, coeffs, T1, opts, grad, side):
    x = np.asarray(x, float)
    n = x.shape[0]
    zero = (np.zeros(n), np.zeros((n, n)))
    if isinstance(density, Density):
        if t <= T1:
            return zero
        return _eval_fixed(kind, density, x, t, coeffs, T1, grad)
    pairs = _patch_list(patches, density)
    if t <= T1:
        return zero
    near = [p for p, _ in pairs if p.is_face and p.distance(x) < SURFACE_TOL]
    if near:
        if side is None:
            raise AmbiguousTraceError("target lies on the integration surface; pass side='interior' or 'exterior'")
        p0 = near[0]
        sign = -1.0 if side in ("interior", "-") else 1.0

        def f(xx, tt):
            return _layer(kind, density, patches, xx, tt, coeffs, T1, opts, grad, None)

        return _extrapolate_side(f, x, t, p0.normal * sign, grad)
    val, gval = zero[0].copy(), zero[1].copy()
    for patch, dens in pairs:
        nodes = _surface_nodes(patch, x, t, T1, coeffs, opts)
        if nodes is None:
            continue
        y, w, s, nu = nodes
        dd = _call_density(dens, y, t - s)
        v, g = _accumulate(kind, x[None, :] - y, s, w, dd, np.asarray(nu), coeffs, grad)
        val += v
        gval += g
    return val, gval


def single_layer(v, patches, x, t, coeffs: LameCoefficients, T1=0.0, opts: QuadOptions = DEFAULT, grad=False, side=None):
    """``V v(x, t) = int int Phi^T(x - y, t - tau) v(y, tau) ds(y) dtau``.

    ``patches`` is one patch, a list of patches sharing ``v``, or a list of
    ``(patch, density)`` pairs.  On the surface a ``side`` of
    ``'interior'`` or ``'exterior'`` selects a one-sided limit.
    """
    out = _layer("V", v, patches, x, t, coeffs, T1, opts, grad, side)
    return out if grad else out[0]


def double_layer(w, patches, x, t, coeffs: LameCoefficients, T1=0.0, opts: QuadOptions = DEFAULT, grad=False, side=None):
    """``W w(x, t) = -int int [sigma_y Phi(x - y, t - tau)]^T w(y, tau) ds(y) dtau``."""
    out = _layer("W", w, patches, x, t, coeffs, T1, opts, grad, side)
    return out if grad else out[0]


def stress_of(grad_matrix, normal, coeffs):
    """Stress of a field at a point from its Jacobian ``J[i, l] = d_l u_i``."""
    return apply_stress(grad_matrix, normal, coeffs)


def _poisson_nodes(box, x, t, T1, coeffs, opts):
    sigma = math.sqrt(t - T1)
    if isinstance(box, Box):
        return _tensor([_graded_axis(lo, hi, x[i], sigma, sigma, coeffs, opts.order) for i, (lo, hi) in enumerate(box.bounds)])
    rule = volume_rule(box, 4 * opts.order)
    return rule.nodes, rule.weights


def potential_matrix(kind, scalars, support, x, t, coeffs: LameCoefficients, T1=0.0, opts: QuadOptions = DEFAULT):
    """Potentials of the densities ``e_m q_k`` for many scalar ``q_k`` at once.

    ``kind`` is ``'V'`` or ``'W'`` (``support`` a boundary patch, ``q_k(y, tau)``)
    or ``'I'`` (``support`` a spatial domain, ``q_k(y)``).  ``scalars(y, tau)``
    returns all densities as an array ``(..., K)``.  The result ``M[i, m, k]``
    is component ``i`` of the potential of ``e_m q_k`` at ``(x, t)``.
    """
    x = np.asarray(x, float)
    n = x.shape[0]
    if t <= T1:
        return None
    if kind == "I":
        y, w = _poisson_nodes(_as_box(support), x, t, T1, coeffs, opts)
        s = np.full(len(w), t - T1)
        Q = np.asarray(scalars(y, np.full(len(w), T1)), float)
        (K,) = kernel_derivatives(x[None, :] - y, s, coeffs, order=0)
        return np.einsum("a,aim,ak->imk", w, K, Q)
    nodes = _surface_nodes(support, x, t, T1, coeffs, opts)
    if nodes is None:
        return None
    y, w, s, nu = nodes
    Q = np.asarray(scalars(y, t - s), float)
    out = 0.0
    for a in range(0, len(w), _CHUNK):
        sl = slice(a, a + _CHUNK)
        if kind == "V":
            (K,) = kernel_derivatives(x[None, :] - y[sl], s[sl], coeffs, order=0)
            out = out + np.einsum("a,aim,ak->imk", w[sl], K, Q[sl])
        else:
            _, D1 = kernel_derivatives(x[None, :] - y[sl], s[sl], coeffs, order=1)
            S = _stress_kernel(D1, np.asarray(nu[sl]), coeffs)
            out = out - np.einsum("a,amj,ak->jmk", w[sl], S, Q[sl])
    return out


# --------------------------------------------------------- one-sided traces


EPS_DEFAULT = tuple(np.geomspace(1e-1, 1e-3, 5))


def _extrapolate(eps, vals, degree=2):
    """Polynomial-in-eps extrapolation to 0 with a crude error estimate."""
    eps = np.asarray(eps, float)
    vals = np.asarray(vals, float)
    flat = vals.reshape(len(eps), -1)
    fit = np.polynomial.polynomial.polyfit(eps, flat, degree)[0]
    # compare against a lower-degree fit on the points closest to the surface
    k = min(len(eps), degree + 1)
    idx = np.argsort(eps)[:k]
    alt = np.polynomial.polynomial.polyfit(eps[idx], flat[idx], max(degree - 1, 0))[0]
    err = float(np.max(np.abs(fit - alt))) if flat.size else 0.0
    return fit.reshape(vals.shape[1:]), err


def _extrapolate_side(f, x0, t0, direction, grad, eps=EPS_DEFAULT):
    vals, gvals = [], []
    for e in eps:
        v, g = f(x0 + e * direction, t0)
        vals.append(v)
        gvals.append(g)
    v0, _ = _extrapolate(eps, vals)
    g0, _ = _extrapolate(eps, gvals)
    return v0, g0


def one_sided(func, x0, t0, normal, side, eps=EPS_DEFAULT):
    """Extrapolated limit of ``func(x, t)`` as ``x -> x0`` along ``-+normal``."""
    sign = -1.0 if side in ("interior", "-") else 1.0
    vals = [np.asarray(func(np.asarray(x0) + sign * e * np.asarray(normal), t0), float) for e in eps]
    return _extrapolate(eps, vals)


@dataclass
class JumpResult:
    quantity: str
    interior: np.ndarray
    exterior: np.ndarray
    jump: np.ndarray  # interior minus exterior
    error_estimate: float
    eps: tuple
    interior_samples: np.ndarray
    exterior_samples: np.ndarray


def jump_probe(quantity, density, patches, x0, t0, coeffs: LameCoefficients, T1=0.0, eps=EPS_DEFAULT,
               opts: QuadOptions = DEFAULT, normal=None, tol=5e-2):
    """Interior and exterior limits of ``W``, ``sigma V`` or ``sigma W`` at a surface point.

    The probe moves to ``x0 -+ eps * normal`` (interior first), extrapolates
    each side to ``eps = 0`` and returns interior minus exterior.  Raises
    :class:`NumericalError` when the two extrapolations used for the error
    estimate disagree by more than ``tol``.
    """
    quantity = {"sigmav": "sigmaV", "sigmaw": "sigmaW", "w": "W"}.get(str(quantity).lower(), quantity)
    if quantity not in ("W", "sigmaV", "sigmaW"):
        raise ValueError("quantity must be 'W', 'sigmaV' or 'sigmaW'")
    x0 = np.asarray(x0, float)
    if normal is None:
        pairs = _patch_list(patches, density)
        normal = pairs[0][0].normal
    normal = np.asarray(normal, float)
    kind = "V" if quantity == "sigmaV" else "W"
    want_grad = quantity != "W"

    def q(x):
        v, g = _layer(kind, density, patches, x, t0, coeffs, T1, opts, want_grad, None)
        return apply_stress(g, normal, coeffs) if want_grad else v

    samples = {}
    limits = {}
    errs = []
    for side, sign in (("interior", -1.0), ("exterior", 1.0)):
        vals = np.array([q(x0 + sign * e * normal) for e in eps])
        samples[side] = vals
        limits[side], err = _extrapolate(eps, vals)
        errs.append(err)
    est = max(errs)
    if not np.all(np.isfinite(est)) or est > tol:
        raise NumericalError(f"one-sided extrapolation did not settle (estimate {est:.3g})", achieved=est)
    return JumpResult(quantity, limits["interior"], limits["exterior"], limits["interior"] - limits["exterior"],
                      est, tuple(float(e) for e in eps), samples["interior"], samples["exterior"])


# ---------------------------------------------------------- Green identity


class PolynomialField:
    """Vector field given by exact polynomials: values, Jacobian, ``L u``."""

    def __init__(self, components, coeffs: LameCoefficients):
        from .polynomial import lame_apply

        self.components = list(components)
        self.coeffs = coeffs
        self.n = len(self.components)
        self._jac = [[p.dx(l) for l in range(self.n)] for p in self.components]
        self._src = lame_apply(self.components, coeffs.mu, coeffs.lam)

    @property
    def source_is_zero(self):
        return all(p.is_zero() for p in self._src)

    def value(self, x, t):
        return np.stack([p(x, t) for p in self.components], axis=-1)

    def jacobian(self, x, t):
        return np.stack([np.stack([d(x, t) for d in row], axis=-1) for row in self._jac], axis=-2)

    def source(self, x, t):
        return np.stack([p(x, t) for p in self._src], axis=-1)

    def stress(self, x, t, normal):
        return apply_stress(self.jacobian(x, t), np.broadcast_to(normal, np.shape(x)), self.coeffs)


def green_identity(u, domain: CylinderDomain, x, t, coeffs: LameCoefficients, T1=0.0, opts: QuadOptions = DEFAULT,
                   parts=False):
    """``I u + G L u + V sigma u + W u`` at ``(x, t)`` and the reference value.

    ``u`` needs ``value(y, tau)``, ``jacobian(y, tau)`` and ``source(y, tau)``
    (for instance a :class:`PolynomialField`).  The reference is ``u(x, t)``
    inside the cylinder and zero outside its closure.
    """
    x = np.asarray(x, float)
    box = domain.base
    faces = all_faces(domain)
    I = poisson_integral(lambda y: u.value(y, np.full(y.shape[:-1], T1)), box, x, t, coeffs, T1, opts)
    G = volume_potential(u.source, box, x, t, coeffs, T1, opts)
    def stress_density(nu):
        return lambda y, tau: apply_stress(u.jacobian(y, tau), np.broadcast_to(nu, y.shape), coeffs)

    V = _sum_layers("V", [(p, stress_density(p.normal)) for p in faces], x, t, coeffs, T1, opts)
    W = _sum_layers("W", [(p, u.value) for p in faces], x, t, coeffs, T1, opts)
    total = I + G + V + W
    inside = box.contains(x) and T1 < t <= domain.T + T1
    ref = u.value(x, t) if inside else np.zeros_like(total)
    if parts:
        return total, np.asarray(ref, float), {"I": I, "G": G, "V": V, "W": W}
    return total, np.asarray(ref, float)


def _sum_layers(kind, pairs, x, t, coeffs, T1, opts):
    return _layer(kind, None, pairs, x, t, coeffs, T1, opts, False, None)[0]


# -------------------------------------------------------------- batches


def thread_count():
    """Worker count from ``PARLAME_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("PARLAME_THREADS", "1")))
    except ValueError:
        return 1


def evaluate_batch(func, targets, threads=None):
    """Evaluate ``func(x, t)`` on ``targets`` (rows ``x_1..x_n, t``), preserving order."""
    targets = np.asarray(targets, float)
    threads = thread_count() if threads is None else threads
    jobs = [(row[:-1], float(row[-1])) for row in targets]
    if threads <= 1:
        res = [func(x, t) for x, t in jobs]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            res = list(ex.map(lambda a: func(*a), jobs))
    return np.array(res)


def batch_to_csv(targets, values, path=None):
    """CSV with columns ``x_1..x_n, t, component, value`` (one row per component)."""
    targets = np.asarray(targets, float)
    values = np.asarray(values, float)
    n = targets.shape[1] - 1
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow([f"x_{i + 1}" for i in range(n)] + ["t", "component", "value"])
    for row, val in zip(targets, values):
        for c, v in enumerate(np.atleast_1d(val)):
            wr.writerow([repr(float(a)) for a in row] + [c, repr(float(v))])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
