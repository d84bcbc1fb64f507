"""Regularized reconstruction for the lateral Cauchy problem.

Given ``f`` in the cylinder and values ``u1`` / stresses ``u2`` on a face
``Gamma`` of a box, the potential sum ``P = G f + V u2 + W u1`` is computed
on a mirror box ``Omega+`` across ``Gamma``.  An extension ``F`` solving the
homogeneous system on the union of both boxes is fitted to ``P`` there by
Tikhonov-regularized least squares, and ``U = P - F`` is the candidate
solution inside the box.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

from .caloric import heat_basis, lame_caloric_basis
from .errors import IllConditionedError, InvalidGeometryError
from .geometry import BoundaryPatch, CylinderDomain, all_faces, make_box
from .kernels import LameCoefficients, apply_stress
from .polynomial import CaloricPolynomial, as_fraction, lame_apply
from .potentials import (
    DEFAULT,
    QuadOptions,
    double_layer,
    evaluate_batch,
    potential_matrix,
    single_layer,
    volume_potential,
)

__all__ = [
    "CauchyData",
    "ReconstructionConfig",
    "FitResult",
    "ReconstructionResult",
    "mirror_domain",
    "default_basis",
    "collocation_nodes",
    "interior_grid",
    "potential_sum",
    "assemble_target",
    "design_matrix",
    "ExtensionBasis",
    "fit_extension",
    "ReconstructionProblem",
    "reconstruct",
    "uniqueness_probe",
    "report_json",
    "field_csv",
]


# ------------------------------------------------------------------ data


@dataclass(frozen=True)
class CauchyData:
    """Cauchy data on the face ``patch`` of ``domain``.

    ``u1(y, tau)`` are values and ``u2(y, tau)`` stresses for the outward
    normal of the patch; ``f(y, tau)`` is the source (``None`` means zero).
    """

    domain: CylinderDomain
    patch: BoundaryPatch
    u1: Callable
    u2: Callable
    f: Optional[Callable] = None

    def __post_init__(self):
        if not self.patch.is_face:
            raise InvalidGeometryError("Cauchy data must live on a box face")

    @classmethod
    def from_field(cls, field_, domain, patch, coeffs: LameCoefficients):
        """Data of a field exposing ``value``, ``jacobian`` and ``source``."""
        nu = patch.normal

        def u2(y, tau):
            return apply_stress(field_.jacobian(y, tau), np.broadcast_to(nu, np.shape(y)), coeffs)

        src = getattr(field_, "source", None)
        if getattr(field_, "source_is_zero", False):
            src = None
        return cls(domain, patch, field_.value, u2, src)

    @classmethod
    def zero(cls, domain, patch):
        z = lambda y, tau: np.zeros(np.shape(y))  # noqa: E731
        return cls(domain, patch, z, z, None)

    def scaled(self, c):
        c = float(c)
        f = None if self.f is None else (lambda y, tau: c * self.f(y, tau))
        return CauchyData(self.domain, self.patch, lambda y, tau: c * self.u1(y, tau), lambda y, tau: c * self.u2(y, tau), f)

    def __add__(self, other):
        f = None
        if self.f is not None or other.f is not None:
            fa = self.f or (lambda y, tau: np.zeros(np.shape(y)))
            fb = other.f or (lambda y, tau: np.zeros(np.shape(y)))
            f = lambda y, tau: fa(y, tau) + fb(y, tau)  # noqa: E731
        return CauchyData(self.domain, self.patch, lambda y, tau: self.u1(y, tau) + other.u1(y, tau),
                          lambda y, tau: self.u2(y, tau) + other.u2(y, tau), f)


@dataclass(frozen=True)
class ReconstructionConfig:
    """``degree`` bounds the caloric polynomials; ``layer_degree`` bounds the
    polynomial densities of the layer functions (``None`` drops them)."""

    degree: int = 8
    layer_degree: Optional[int] = 4
    alphas: tuple = (1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12)
    n_space: int = 10  # collocation points per spatial axis in Omega+
    n_time: int = 8
    t_min_frac: float = 0.05
    opts: QuadOptions = DEFAULT

    def __post_init__(self):
        if any(a < 0 for a in self.alphas):
            raise ValueError("regularization parameters must be non-negative")
        if self.degree < 0 or self.n_space < 1 or self.n_time < 1:
            raise ValueError("degree and grid sizes must be positive")

    def to_dict(self):
        return {
            "degree": self.degree,
            "layer_degree": self.layer_degree,
            "alphas": list(self.alphas),
            "n_space": self.n_space,
            "n_time": self.n_time,
            "t_min_frac": self.t_min_frac,
            "order": self.opts.order,
            "time_order": self.opts.time_order,
        }


# ------------------------------------------------------------- geometry


def mirror_domain(domain: CylinderDomain, patch: BoundaryPatch):
    """The box reflected across the face hyperplane, as ``Omega+``."""
    return domain.base.mirror(patch.axis, patch.side)


def _grid_1d(lo, hi, m):
    # cell midpoints keep nodes off the boundary of the box
    return lo + (hi - lo) * (np.arange(m) + 0.5) / m


def collocation_nodes(domain: CylinderDomain, patch: BoundaryPatch, n_space=10, n_time=8, t_min_frac=0.05):
    """Tensor grid in ``Omega+ x (t_min, T)``, rows ``x_1..x_n, t``."""
    box = mirror_domain(domain, patch)
    axes = [_grid_1d(lo, hi, n_space) for lo, hi in box.bounds]
    T = domain.T
    tmin = t_min_frac * T
    axes.append(tmin + (T - tmin) * (np.arange(1, n_time + 1)) / n_time)
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


def interior_grid(domain: CylinderDomain, n_space=8, n_time=4, t_min_frac=0.25):
    """Evaluation grid inside the cylinder (cell midpoints, ``t`` in ``(t_min, T]``)."""
    box = domain.base
    axes = [_grid_1d(lo, hi, n_space) for lo, hi in box.bounds]
    T = domain.T
    tmin = t_min_frac * T
    axes.append(tmin + (T - tmin) * (np.arange(1, n_time + 1)) / n_time)
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=-1)


# ----------------------------------------------------------------- basis


def default_basis(n, degree, coeffs: LameCoefficients, center, t0=0.0):
    """Vector caloric polynomials spanning all solutions of parabolic degree ``<= degree``.

    Heat case in the plane: heat polynomials (with the ``x_1`` axis
    variants) times unit vectors.  Otherwise: the Cauchy-Kovalevskaya
    monomial solutions.  Both
    are translated to ``(center, t0)``.
    """
    center = [as_fraction(float(c)) for c in center]
    t0 = as_fraction(float(t0))
    out = []
    if coeffs.is_heat and n == 2:
        scalars = [b.poly for b in heat_basis(n, degree, axes=(0,))]
        if coeffs.mu != 1:
            scalars = [p.scale_time(as_fraction(coeffs.mu)) for p in scalars]
        for p in scalars:
            q = p.shift(center, t0).with_scale(1.0)
            for m in range(n):
                out.append([q if i == m else CaloricPolynomial(n) for i in range(n)])
    else:
        for v in lame_caloric_basis(n, degree, coeffs):
            out.append([p.shift(center, t0) for p in v])
    for v in out:
        if any(not r.is_zero() for r in lame_apply(v, coeffs.mu, coeffs.lam)):
            raise ArithmeticError("basis element is not a solution")
    return out


def design_matrix(basis, nodes):
    """``A[(node, component), element]``; nodes are rows ``x_1..x_n, t``."""
    nodes = np.asarray(nodes, float)
    x, t = nodes[:, :-1], nodes[:, -1]
    cols = []
    for v in basis:
        cols.append(np.stack([p(x, t) for p in v], axis=-1).ravel())
    return np.array(cols).T


def _total_degree(k, d):
    out = []
    for tot in range(d + 1):
        out.extend(_compositions(k, tot))
    return out


def _compositions(k, tot):
    if k == 1:
        return [(tot,)]
    return [(a,) + rest for a in range(tot, -1, -1) for rest in _compositions(k - 1, tot - a)]


def _legendre_products(coords, lo, hi, indices):
    """Products of Legendre polynomials of the scaled coordinates, ``(..., K)``."""
    from numpy.polynomial import legendre

    u = 2.0 * (coords - lo) / (hi - lo) - 1.0
    dmax = max(max(ix) for ix in indices)
    vals = [legendre.legvander(u[..., i], dmax) for i in range(coords.shape[-1])]
    cols = []
    for ix in indices:
        c = np.ones(coords.shape[:-1])
        for i, a in enumerate(ix):
            c = c * vals[i][..., a]
        cols.append(c)
    return np.stack(cols, axis=-1)


class ExtensionBasis:
    """Caloric functions on ``Omega u Gamma u Omega+`` used to fit the extension ``F``.

    Columns are the caloric polynomials of :func:`default_basis` followed,
    when ``layer_degree`` is set, by layer functions: single- and
    double-layer potentials over each face other than ``Gamma`` and Poisson
    integrals over the box, with densities ``e_m q`` where ``q`` runs over
    Legendre products of total degree ``<= layer_degree``.  Layer functions
    solve the homogeneous system away from their supports, which lie on the
    boundary of the extended cylinder or at ``t = 0``.
    """

    def __init__(self, domain, patch, coeffs, degree=8, layer_degree=None, opts: QuadOptions = DEFAULT):
        self.domain, self.patch, self.coeffs, self.opts = domain, patch, coeffs, opts
        n = domain.dim
        box = domain.base
        plus = mirror_domain(domain, patch)
        center = 0.5 * (np.minimum(box.lo, plus.lo) + np.maximum(box.hi, plus.hi))
        self.polys = default_basis(n, degree, coeffs, center, 0.5 * domain.T)
        self.layers = []
        if layer_degree is not None and layer_degree >= 0:
            T = domain.T
            for fc in all_faces(domain):
                if (fc.axis, fc.side) == (patch.axis, patch.side):
                    continue
                tang = [i for i in range(n) if i != fc.axis]
                idx = _total_degree(len(tang) + 1, layer_degree)
                lo = np.array([box.lo[i] for i in tang] + [0.0])
                hi = np.array([box.hi[i] for i in tang] + [T])

                def q(y, tau, tang=tang, lo=lo, hi=hi, idx=idx):
                    c = np.concatenate([y[..., tang], np.asarray(tau)[..., None]], axis=-1)
                    return _legendre_products(c, lo, hi, idx)

                for kind in ("V", "W"):
                    self.layers.append((kind, fc, q, len(idx)))
            idx = _total_degree(n, layer_degree)

            def q0(y, tau, idx=idx):
                return _legendre_products(y, box.lo, box.hi, idx)

            self.layers.append(("I", box, q0, len(idx)))

    @property
    def size(self):
        n = self.domain.dim
        return len(self.polys) + sum(n * K for *_, K in self.layers)

    def labels(self):
        out = [f"poly[{i}]" for i in range(len(self.polys))]
        for kind, sup, _, K in self.layers:
            name = kind if kind == "I" else f"{kind}[axis={sup.axis},side={sup.side}]"
            out.extend(f"{name}[m={m},k={k}]" for m in range(self.domain.dim) for k in range(K))
        return out

    def _layer_row(self, x, t):
        n = self.domain.dim
        blocks = []
        for kind, sup, q, K in self.layers:
            M = potential_matrix(kind, q, sup, x, t, self.coeffs, 0.0, self.opts)
            blocks.append(np.zeros((n, n * K)) if M is None else M.reshape(n, n * K))
        return np.concatenate(blocks, axis=1) if blocks else np.zeros((n, 0))

    def matrix(self, nodes, threads=None):
        """Design matrix with rows ``(node, component)``."""
        nodes = np.asarray(nodes, float)
        A = design_matrix(self.polys, nodes)
        if self.layers:
            L = evaluate_batch(self._layer_row, nodes, threads)
            A = np.concatenate([A, L.reshape(len(nodes) * self.domain.dim, -1)], axis=1)
        return A


# ---------------------------------------------------------- potential sum


def potential_sum(data: CauchyData, coeffs: LameCoefficients, x, t, opts: QuadOptions = DEFAULT):
    """``G f + V u2 + W u1`` at one target."""
    val = single_layer(data.u2, data.patch, x, t, coeffs, 0.0, opts)
    val = val + double_layer(data.u1, data.patch, x, t, coeffs, 0.0, opts)
    if data.f is not None:
        val = val + volume_potential(data.f, data.domain.base, x, t, coeffs, 0.0, opts)
    return val


def assemble_target(data: CauchyData, coeffs, nodes, opts: QuadOptions = DEFAULT, threads=None):
    """Stacked potential sums at ``nodes``, shape ``(len(nodes), n)``."""
    return evaluate_batch(lambda x, t: potential_sum(data, coeffs, x, t, opts), nodes, threads)


# ------------------------------------------------------------------ solve


@dataclass
class FitResult:
    coefficients: np.ndarray
    alpha: float
    residual: float  # relative l2 misfit
    condition: float
    rank: int


def fit_extension(A, b, alpha=0.0, rcond=1e-13):
    """Minimize ``|A c - b|^2 + alpha^2 |c|^2`` through the SVD of ``A``.

    With ``alpha = 0`` a numerically rank-deficient ``A`` raises
    :class:`IllConditionedError`.
    """
    A = np.asarray(A, float)
    b = np.asarray(b, float).ravel()
    U, s, Vt = np.linalg.svd(A, full_matrices=False)
    rank = int(np.sum(s > rcond * s[0])) if s.size else 0
    cond = float(s[0] / s[-1]) if s.size and s[-1] > 0 else math.inf
    if alpha == 0 and rank < A.shape[1]:
        raise IllConditionedError(
            f"design matrix is rank deficient (rank {rank} of {A.shape[1]}, condition {cond:.3g}); use alpha > 0"
        )
    beta = U.T @ b
    filt = s / (s**2 + alpha**2) if alpha > 0 else 1.0 / s
    c = Vt.T @ (filt * beta)
    nb = np.linalg.norm(b)
    res = float(np.linalg.norm(A @ c - b) / nb) if nb > 0 else float(np.linalg.norm(A @ c - b))
    return FitResult(c, float(alpha), res, cond, rank)


class ReconstructionProblem:
    """Data-independent part of a reconstruction: basis, nodes and design matrices.

    Building it evaluates every basis column at the collocation nodes and on
    the interior grid once, so several data sets can share the work.
    """

    def __init__(self, domain: CylinderDomain, patch: BoundaryPatch, coeffs: LameCoefficients,
                 config: ReconstructionConfig = ReconstructionConfig(), grid=None, threads=None):
        self.domain, self.patch, self.coeffs, self.config, self.threads = domain, patch, coeffs, config, threads
        self.basis = ExtensionBasis(domain, patch, coeffs, config.degree, config.layer_degree, config.opts)
        self.nodes = collocation_nodes(domain, patch, config.n_space, config.n_time, config.t_min_frac)
        n = domain.dim
        if len(self.nodes) * n < self.basis.size:
            raise ValueError("fewer collocation equations than basis elements")
        A = self.basis.matrix(self.nodes, threads)
        scales = np.linalg.norm(A, axis=0)
        scales[scales == 0] = 1.0
        self.scales = scales
        self.A = A / scales
        self.grid = interior_grid(domain) if grid is None else np.asarray(grid, float)
        self.Ag = self.basis.matrix(self.grid, threads) / scales

    def solve(self, data: CauchyData, reference: Optional[Callable] = None, alphas=None):
        """Fit ``F`` for each ``alpha`` and evaluate ``U`` on the grid."""
        if (data.patch.axis, data.patch.side) != (self.patch.axis, self.patch.side):
            raise ValueError("data live on a different face than the problem")
        alphas = tuple(self.config.alphas if alphas is None else alphas)
        cfg = self.config
        b = assemble_target(data, self.coeffs, self.nodes, cfg.opts, self.threads).ravel()
        fits = _fit_all(self.A, b, alphas)
        P = assemble_target(data, self.coeffs, self.grid, cfg.opts, self.threads)
        ref = None
        if reference is not None:
            ref = np.array([np.asarray(reference(r[:-1], r[-1]), float) for r in self.grid])
        errors, fields = [], []
        for fr in fits:
            if fr is None:
                errors.append(None)
                fields.append(None)
                continue
            U = P - (self.Ag @ fr.coefficients).reshape(P.shape)
            fields.append(U)
            if ref is not None:
                nr = np.linalg.norm(ref)
                errors.append(float(np.linalg.norm(U - ref) / (nr if nr > 0 else 1.0)))
            else:
                errors.append(None)
        valid = [i for i, fr in enumerate(fits) if fr is not None]
        if not valid:
            raise IllConditionedError("no regularization parameter produced a fit")
        if ref is not None:
            best = min(valid, key=lambda i: errors[i])
        else:
            best = min(valid, key=lambda i: alphas[i])
        return ReconstructionResult(fits[best], fits, errors, alphas, self, P, fields[best], ref, data)


@dataclass
class ReconstructionResult:
    fit: FitResult
    fits: list  # one FitResult (or None) per alpha in the sweep
    errors: list  # relative interior l2 error per alpha (None without a reference)
    alphas: tuple
    problem: ReconstructionProblem = field(repr=False)
    grid_potential: np.ndarray = field(repr=False)
    grid_field: np.ndarray = field(repr=False)
    reference: Optional[np.ndarray] = field(repr=False, default=None)
    data: Optional[CauchyData] = field(repr=False, default=None)

    @property
    def coefficients(self):
        return self.fit.coefficients

    @property
    def grid(self):
        return self.problem.grid

    @property
    def best_error(self):
        errs = [e for e in self.errors if e is not None]
        return min(errs) if errs else None

    def extension(self, x, t):
        """The fitted ``F`` at ``(x, t)``."""
        pr = self.problem
        row = pr.basis.matrix(np.concatenate([np.asarray(x, float), [t]])[None, :], 1)
        return (row / pr.scales) @ self.fit.coefficients

    def field(self, x, t):
        """``U = P - F`` at a point of the closed cylinder."""
        pr = self.problem
        x = np.asarray(x, float)
        if not (pr.domain.base.contains(x, tol=1e-12) and 0 < t <= pr.domain.T):
            raise InvalidGeometryError("reconstruction target lies outside the cylinder")
        return potential_sum(self.data, pr.coeffs, x, t, pr.config.opts) - self.extension(x, t)


def _fit_all(A, b, alphas):
    fits = []
    for a in alphas:
        try:
            fits.append(fit_extension(A, b, a))
        except IllConditionedError:
            fits.append(None)
    return fits


def reconstruct(data: CauchyData, coeffs: LameCoefficients, config: ReconstructionConfig = ReconstructionConfig(),
                reference: Optional[Callable] = None, grid=None, threads=None, problem=None):
    """Fit ``F`` for every ``alpha`` in the sweep and evaluate ``U`` on ``grid``.

    With a ``reference(x, t)`` the relative interior ``l2`` error is recorded
    per ``alpha`` and the best one is selected; otherwise the smallest
    ``alpha`` with a valid fit is used.
    """
    if problem is None:
        problem = ReconstructionProblem(data.domain, data.patch, coeffs, config, grid, threads)
    return problem.solve(data, reference)


def uniqueness_probe(data: CauchyData, coeffs, config: ReconstructionConfig = ReconstructionConfig(),
                     deltas=(0.0, 1e-3, 1e-2), alpha=None, threads=None, problem=None):
    """Reconstruct from ``delta * data`` and report interior sup norms.

    A single ``alpha`` (default: the smallest in the sweep) is used for all
    runs so the map from data to field stays linear.
    """
    alpha = min(config.alphas) if alpha is None else alpha
    if problem is None:
        problem = ReconstructionProblem(data.domain, data.patch, coeffs, config, None, threads)
    rows = []
    for d in deltas:
        res = problem.solve(data.scaled(d), alphas=(alpha,))
        rows.append({"delta": float(d), "interior_sup": float(np.abs(res.grid_field).max()),
                     "fit_residual": res.fit.residual})
    out = {"alpha": float(alpha), "runs": rows}
    by = {r["delta"]: r["interior_sup"] for r in rows}
    if 1e-2 in by and 1e-3 in by and by[1e-3] > 0:
        out["scaling_ratio"] = by[1e-2] / by[1e-3]
    return out


# ---------------------------------------------------------------- output


def report_json(result: ReconstructionResult, config: ReconstructionConfig, coeffs: LameCoefficients, extra=None):
    fits = []
    for a, fr, err in zip(result.alphas, result.fits, result.errors):
        fits.append({
            "alpha": float(a),
            "fit_residual": None if fr is None else fr.residual,
            "condition": None if fr is None else fr.condition,
            "coefficient_norm": None if fr is None else float(np.linalg.norm(fr.coefficients)),
            "interior_error": err,
        })
    doc = {
        "config": config.to_dict(),
        "coefficients": coeffs.to_dict(),
        "alpha": result.fit.alpha,
        "fit_residual": result.fit.residual,
        "condition": result.fit.condition,
        "rank": result.fit.rank,
        "basis_size": result.problem.basis.size,
        "best_error": result.best_error,
        "sweep": fits,
    }
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True)


def field_csv(result: ReconstructionResult, path=None):
    grid = result.grid
    n = grid.shape[1] - 1
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    head = [f"x_{i + 1}" for i in range(n)] + ["t"] + [f"U_{i + 1}" for i in range(n)]
    if result.reference is not None:
        head += [f"ref_{i + 1}" for i in range(n)]
    wr.writerow(head)
    for k, row in enumerate(grid):
        vals = list(row) + list(result.grid_field[k])
        if result.reference is not None:
            vals += list(result.reference[k])
        wr.writerow([repr(float(v)) for v in vals])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text
