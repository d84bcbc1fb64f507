"""Domains, boundary patches and quadrature rules.

Spatial bases are axis-aligned boxes or balls.  A :class:`CylinderDomain`
adds a finite time horizon ``T``.  Quadrature rules are plain containers of
nodes and positive weights; surface rules also carry outward unit normals.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Optional, Sequence, Union

import numpy as np

from .errors import InvalidGeometryError, UnsupportedDimensionError

__all__ = [
    "Box",
    "Ball",
    "Cap",
    "CylinderDomain",
    "BoundaryPatch",
    "QuadratureRule",
    "make_box",
    "make_ball",
    "volume_rule",
    "surface_rule",
    "time_rule",
    "gauss_legendre",
    "composite_gauss",
    "graded_breaks",
    "domain_to_json",
    "domain_from_json",
]


@lru_cache(maxsize=None)
def _leggauss(order):
    x, w = np.polynomial.legendre.leggauss(order)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(a, b, order):
    """Gauss-Legendre nodes and weights on ``[a, b]``."""
    x, w = _leggauss(order)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


def composite_gauss(breaks, order):
    """Composite Gauss-Legendre rule over consecutive breakpoints."""
    breaks = np.asarray(breaks, dtype=float)
    x, w = _leggauss(order)
    a = breaks[:-1, None]
    half = 0.5 * (breaks[1:, None] - a)
    nodes = a + half * (x[None, :] + 1.0)
    weights = half * w[None, :]
    return nodes.ravel(), weights.ravel()


def graded_breaks(a, b, center, scale, ratio=2.0, levels=6, min_panels=1):
    """Breakpoints on ``[a, b]`` refined geometrically around ``center``.

    Panels next to ``center`` have width ``scale``; each further panel grows
    by ``ratio`` for ``levels`` steps.  Whatever remains of ``[a, b]`` is cut
    into ``min_panels`` equal pieces.  ``center`` may lie outside ``[a, b]``.
    """
    pts = {float(a), float(b)}
    if min_panels > 1:
        pts.update(np.linspace(a, b, min_panels + 1)[1:-1].tolist())
    if scale > 0:
        offs = scale * ratio ** np.arange(levels)
        offs = np.concatenate([[0.0], np.cumsum(offs)])
        for p in np.concatenate([center - offs, center + offs]):
            if a < p < b:
                pts.add(float(p))
    out = np.array(sorted(pts))
    # drop slivers produced by coincident points
    keep = np.concatenate([[True], np.diff(out) > 1e-14 * max(1.0, b - a)])
    out = out[keep]
    out[-1] = b
    return out


# ---------------------------------------------------------------- bases


@dataclass(frozen=True)
class Box:
    bounds: tuple

    @property
    def dim(self):
        return len(self.bounds)

    @property
    def lo(self):
        return np.array([b[0] for b in self.bounds], dtype=float)

    @property
    def hi(self):
        return np.array([b[1] for b in self.bounds], dtype=float)

    @property
    def measure(self):
        return float(np.prod(self.hi - self.lo))

    @property
    def center(self):
        return 0.5 * (self.lo + self.hi)

    @property
    def n_faces(self):
        return 2 * self.dim

    def face_measure(self, axis):
        widths = self.hi - self.lo
        return float(np.prod(np.delete(widths, axis)))

    def contains(self, x, tol=0.0):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x > self.lo - tol) and np.all(x < self.hi + tol))

    def distance_to_boundary(self, x):
        """Unsigned distance from ``x`` to the boundary of the box."""
        x = np.asarray(x, dtype=float)
        if self.contains(x):
            return float(np.min(np.minimum(x - self.lo, self.hi - x)))
        gap = np.maximum(np.maximum(self.lo - x, x - self.hi), 0.0)
        return float(np.linalg.norm(gap))

    def mirror(self, axis, side):
        """Mirror image of the box across one of its faces."""
        b = [list(p) for p in self.bounds]
        lo, hi = b[axis]
        w = hi - lo
        b[axis] = [lo - w, lo] if side == 0 else [hi, hi + w]
        return make_box(b)


@dataclass(frozen=True)
class Ball:
    center: tuple
    radius: float

    @property
    def dim(self):
        return len(self.center)

    @property
    def measure(self):
        n = self.dim
        return math.pi ** (n / 2) / math.gamma(n / 2 + 1) * self.radius**n

    @property
    def boundary_measure(self):
        n = self.dim
        return 2 * math.pi ** (n / 2) / math.gamma(n / 2) * self.radius ** (n - 1)

    def contains(self, x, tol=0.0):
        d = np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(self.center))
        return bool(d < self.radius + tol)

    def distance_to_boundary(self, x):
        d = np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(self.center))
        return float(abs(d - self.radius))


Base = Union[Box, Ball]


def make_box(bounds: Sequence[Sequence[float]]) -> Box:
    bounds = tuple((float(lo), float(hi)) for lo, hi in bounds)
    if len(bounds) < 2:
        raise InvalidGeometryError(f"box needs dimension >= 2, got {len(bounds)}")
    for i, (lo, hi) in enumerate(bounds):
        if not (np.isfinite(lo) and np.isfinite(hi)) or lo >= hi:
            raise InvalidGeometryError(f"degenerate axis {i}: ({lo}, {hi})")
    return Box(bounds)


def make_ball(center: Sequence[float], radius: float) -> Ball:
    center = tuple(float(c) for c in center)
    if len(center) < 2:
        raise InvalidGeometryError("ball needs dimension >= 2")
    if not radius > 0 or not np.isfinite(radius):
        raise InvalidGeometryError(f"ball radius must be positive, got {radius}")
    return Ball(center, float(radius))


@dataclass(frozen=True)
class CylinderDomain:
    base: Base
    T: float

    def __post_init__(self):
        if not (np.isfinite(self.T) and self.T > 0):
            raise InvalidGeometryError(f"time horizon must be finite and > 0, got {self.T}")

    @property
    def dim(self):
        return self.base.dim


@dataclass(frozen=True)
class Cap:
    """Spherical cap: points whose direction from the center is within
    ``half_angle`` of ``direction``.  ``half_angle = pi`` is the whole sphere."""

    direction: tuple
    half_angle: float


@dataclass(frozen=True)
class BoundaryPatch:
    """A relatively open piece of the boundary of ``parent.base``.

    For a box the selector is ``(axis, side)`` with ``side`` 0 for the face
    ``x[axis] = lo`` and 1 for ``x[axis] = hi``.  For a ball it is a
    :class:`Cap`.
    """

    parent: CylinderDomain
    selector: object

    def __post_init__(self):
        base = self.parent.base
        if isinstance(base, Box):
            axis, side = self.selector
            if not (0 <= axis < base.dim and side in (0, 1)):
                raise InvalidGeometryError(f"bad face selector {self.selector}")
        else:
            cap = self.selector
            if not isinstance(cap, Cap) or not (0 < cap.half_angle <= math.pi):
                raise InvalidGeometryError("empty or malformed spherical cap")
            if len(cap.direction) != base.dim or np.linalg.norm(cap.direction) == 0:
                raise InvalidGeometryError("cap direction must be a nonzero vector")

    @property
    def base(self):
        return self.parent.base

    @property
    def is_face(self):
        return isinstance(self.parent.base, Box)

    @property
    def axis(self):
        return self.selector[0]

    @property
    def side(self):
        return self.selector[1]

    @property
    def plane(self):
        """Coordinate of the face hyperplane (box faces only)."""
        b = self.base.bounds[self.axis]
        return b[self.side]

    @property
    def normal(self):
        """Constant outward normal of a box face."""
        nu = np.zeros(self.base.dim)
        nu[self.axis] = -1.0 if self.side == 0 else 1.0
        return nu

    @property
    def measure(self):
        if self.is_face:
            return self.base.face_measure(self.axis)
        cap, r, n = self.selector, self.base.radius, self.base.dim
        if n == 2:
            return 2 * cap.half_angle * r
        if n == 3:
            return 2 * math.pi * r**2 * (1 - math.cos(cap.half_angle))
        raise UnsupportedDimensionError("caps only in dimension 2 or 3")

    def distance(self, x):
        """Euclidean distance from ``x`` to the closure of a box face."""
        x = np.asarray(x, dtype=float)
        lo, hi = self.base.lo.copy(), self.base.hi.copy()
        lo[self.axis] = hi[self.axis] = self.plane
        gap = np.maximum(np.maximum(lo - x, x - hi), 0.0)
        return float(np.linalg.norm(gap))


def face(domain: CylinderDomain, axis: int, side: int) -> BoundaryPatch:
    return BoundaryPatch(domain, (axis, side))


def all_faces(domain: CylinderDomain):
    return [face(domain, a, s) for a in range(domain.dim) for s in (0, 1)]


__all__ += ["face", "all_faces"]


# ------------------------------------------------------------ quadrature


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    normals: Optional[np.ndarray] = field(default=None)

    def __post_init__(self):
        if np.any(self.weights <= 0):
            raise ValueError("quadrature weights must be positive")
        if len(self.nodes) != len(self.weights):
            raise ValueError("node/weight count mismatch")

    def __len__(self):
        return len(self.weights)

    def integrate(self, values):
        values = np.asarray(values)
        return np.tensordot(self.weights, values, axes=(0, 0))


def _check_order(order):
    if int(order) != order or order < 1:
        raise ValueError(f"quadrature order must be an integer >= 1, got {order}")
    return int(order)


def _tensor(rules):
    grids = np.meshgrid(*[r[0] for r in rules], indexing="ij")
    wgrids = np.meshgrid(*[r[1] for r in rules], indexing="ij")
    nodes = np.stack([g.ravel() for g in grids], axis=-1)
    weights = np.prod(np.stack([g.ravel() for g in wgrids], axis=-1), axis=-1)
    return nodes, weights


def _polar_rule(R, order, n):
    r, wr = gauss_legendre(0.0, R, order)
    m = 2 * order
    if n == 2:
        th = 2 * math.pi * np.arange(m) / m
        rr, tt = np.meshgrid(r, th, indexing="ij")
        w = (wr * r)[:, None] * np.full(m, 2 * math.pi / m)[None, :]
        pts = np.stack([rr * np.cos(tt), rr * np.sin(tt)], axis=-1)
        return pts.reshape(-1, 2), w.ravel()
    if n == 3:
        dirs, wd = _sphere_rule(order, math.pi)
        pts = r[:, None, None] * dirs[None, :, :]
        w = (wr * r**2)[:, None] * wd[None, :]
        return pts.reshape(-1, 3), w.ravel()
    raise UnsupportedDimensionError("ball rules exist only for n = 2, 3")


def _sphere_rule(order, half_angle):
    """Unit-sphere cap rule around +e3: Gauss in cos(polar), trapezoid in azimuth."""
    c, wc = gauss_legendre(math.cos(half_angle), 1.0, order)
    m = 2 * order
    ph = 2 * math.pi * np.arange(m) / m
    cc, pp = np.meshgrid(c, ph, indexing="ij")
    ss = np.sqrt(np.clip(1 - cc**2, 0, None))
    dirs = np.stack([ss * np.cos(pp), ss * np.sin(pp), cc], axis=-1).reshape(-1, 3)
    w = (wc[:, None] * np.full(m, 2 * math.pi / m)[None, :]).ravel()
    return dirs, w


def _rotation_to(direction):
    """Orthogonal matrix taking +e3 to ``direction``."""
    d = np.asarray(direction, float)
    d = d / np.linalg.norm(d)
    e3 = np.array([0.0, 0.0, 1.0])
    v = np.cross(e3, d)
    c = float(e3 @ d)
    if np.linalg.norm(v) < 1e-15:
        return np.eye(3) if c > 0 else np.diag([1.0, -1.0, -1.0])
    vx = np.array([[0, -v[2], v[1]], [v[2], 0, -v[0]], [-v[1], v[0], 0]])
    return np.eye(3) + vx + vx @ vx / (1 + c)


def volume_rule(domain, order: int) -> QuadratureRule:
    """Quadrature over the spatial base (tensor Gauss for boxes, polar for balls)."""
    order = _check_order(order)
    base = domain.base if isinstance(domain, CylinderDomain) else domain
    if isinstance(base, Box):
        nodes, w = _tensor([gauss_legendre(lo, hi, order) for lo, hi in base.bounds])
        return QuadratureRule(nodes, w)
    pts, w = _polar_rule(base.radius, order, base.dim)
    return QuadratureRule(pts + np.asarray(base.center), w)


def surface_rule(patch: BoundaryPatch, order: int) -> QuadratureRule:
    """Quadrature over a boundary patch, with outward normals per node."""
    order = _check_order(order)
    base = patch.base
    if patch.is_face:
        rules = []
        for i, (lo, hi) in enumerate(base.bounds):
            if i == patch.axis:
                rules.append((np.array([patch.plane]), np.array([1.0])))
            else:
                rules.append(gauss_legendre(lo, hi, order))
        nodes, w = _tensor(rules)
        normals = np.tile(patch.normal, (len(w), 1))
        return QuadratureRule(nodes, w, normals)
    cap, r, n = patch.selector, base.radius, base.dim
    if n == 2:
        d = np.asarray(cap.direction, float)
        phi0 = math.atan2(d[1], d[0])
        ph, wph = gauss_legendre(phi0 - cap.half_angle, phi0 + cap.half_angle, order)
        normals = np.stack([np.cos(ph), np.sin(ph)], axis=-1)
        return QuadratureRule(np.asarray(base.center) + r * normals, r * wph, normals)
    if n == 3:
        dirs, wd = _sphere_rule(order, cap.half_angle)
        normals = dirs @ _rotation_to(cap.direction).T
        return QuadratureRule(np.asarray(base.center) + r * normals, r**2 * wd, normals)
    raise UnsupportedDimensionError("caps only in dimension 2 or 3")


def time_rule(T1: float, T2: float, order: int, mode: str = "plain") -> QuadratureRule:
    """Gauss rule on ``(T1, T2)``.

    ``mode="sqrt"`` substitutes ``tau = T2 - s**2`` so integrands behaving
    like ``(T2 - tau)**(-1/2)`` become smooth in ``s``.
    """
    order = _check_order(order)
    if not T1 < T2:
        raise ValueError(f"time rule needs T1 < T2, got ({T1}, {T2})")
    if mode == "plain":
        tau, w = gauss_legendre(T1, T2, order)
    elif mode == "sqrt":
        s, ws = gauss_legendre(0.0, math.sqrt(T2 - T1), order)
        tau, w = T2 - s**2, 2 * s * ws
        tau, w = tau[::-1].copy(), w[::-1].copy()
    else:
        raise ValueError(f"unknown time-rule mode {mode!r}")
    return QuadratureRule(tau[:, None], w)


# ------------------------------------------------------------------ json


def domain_to_json(domain: CylinderDomain) -> str:
    base = domain.base
    if isinstance(base, Box):
        doc = {"kind": "box", "bounds": [list(b) for b in base.bounds], "T": domain.T}
    else:
        doc = {"kind": "ball", "center": list(base.center), "radius": base.radius, "T": domain.T}
    return json.dumps(doc)


def domain_from_json(text) -> CylinderDomain:
    doc = json.loads(text) if isinstance(text, str) else dict(text)
    kind = doc.get("kind")
    if kind == "box":
        base = make_box(doc["bounds"])
    elif kind == "ball":
        base = make_ball(doc["center"], doc["radius"])
    else:
        raise InvalidGeometryError(f"unknown domain kind {kind!r}")
    return CylinderDomain(base, float(doc["T"]))
