"""Exponential family showing that the lateral Cauchy problem is unstable.

``u_n(x, t) = exp(k^2 c (t - r) + k x_n) / k^N`` with ``c = 2 mu + lam`` and
all other components zero solves ``L u = 0``.  Its Cauchy data on the face
``x_n = 0`` shrink like ``k^(1-N)`` while the solution at ``x_n > 0`` grows
like ``e^(k x_n) / k^N``.  Only the finite-horizon case ``r = T`` is built.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .kernels import LameCoefficients, apply_stress

__all__ = [
    "IllPosedFamily",
    "FamilyData",
    "family_solution",
    "family_jacobian",
    "family_data",
    "family_residual",
    "amplification_table",
    "table_to_csv",
    "parse_k_range",
]


@dataclass(frozen=True)
class IllPosedFamily:
    k: int
    N: int
    r: float
    coeffs: LameCoefficients
    n: int = 2

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise ValueError("k must be a positive integer")
        if int(self.N) != self.N or self.N < 1:
            raise ValueError("N must be a positive integer")
        if not self.r > 0:
            raise ValueError("r must be positive")
        if self.n < 2:
            raise ValueError("dimension must be at least 2")

    @property
    def c(self):
        return self.coeffs.c_long


def _scalar(fam, xn, t):
    return np.exp(fam.k**2 * fam.c * (np.asarray(t, float) - fam.r) + fam.k * np.asarray(xn, float)) / float(fam.k) ** fam.N


def family_solution(fam: IllPosedFamily, x, t):
    """Field values, shape ``(..., n)``; only the last component is nonzero."""
    x = np.asarray(x, float)
    out = np.zeros(np.broadcast_shapes(x.shape, np.shape(t) + (fam.n,)))
    out[..., -1] = _scalar(fam, x[..., -1], t)
    return out


def family_jacobian(fam: IllPosedFamily, x, t):
    x = np.asarray(x, float)
    J = np.zeros(x.shape[:-1] + (fam.n, fam.n))
    J[..., -1, -1] = fam.k * _scalar(fam, x[..., -1], t)
    return J


def family_residual(fam: IllPosedFamily, x, t, h=1e-3):
    """Central-difference ``L u`` at one point (only ``d_n`` and ``d_t`` act)."""
    x = np.asarray(x, float)
    e = np.zeros(fam.n)
    e[-1] = h

    def u(xx, tt):
        return family_solution(fam, xx, tt)

    ut = (u(x, t + h) - u(x, t - h)) / (2 * h)
    second = np.zeros((fam.n, fam.n, fam.n))  # [a, b, i] -> d_a d_b u_i
    E = np.eye(fam.n) * h
    for a in range(fam.n):
        for b in range(fam.n):
            second[a, b] = (u(x + E[a] + E[b], t) - u(x + E[a] - E[b], t) - u(x - E[a] + E[b], t) + u(x - E[a] - E[b], t)) / (4 * h * h)
    lap = np.einsum("aai->i", second)
    graddiv = np.einsum("iaa->i", second)
    mu, lam = fam.coeffs.mu, fam.coeffs.lam
    return ut - mu * lap - (mu + lam) * graddiv


@dataclass(frozen=True)
class FamilyData:
    """Closed-form Cauchy data of a family member on ``x_n = 0``.

    Stress values use the normal ``+e_n``.  ``f`` vanishes identically.
    """

    fam: IllPosedFamily

    def u1(self, y, t):
        y = np.asarray(y, float)
        out = np.zeros(np.broadcast_shapes(y.shape, np.shape(t) + (self.fam.n,)))
        out[..., -1] = _scalar(self.fam, 0.0, t)
        return out

    def u2(self, y, t):
        fam = self.fam
        y = np.asarray(y, float)
        out = np.zeros(np.broadcast_shapes(y.shape, np.shape(t) + (fam.n,)))
        out[..., -1] = fam.c * fam.k * _scalar(fam, 0.0, t)
        return out

    def u0(self, x):
        return family_solution(self.fam, x, 0.0)

    def f(self, x, t):
        return np.zeros(np.broadcast_shapes(np.shape(x), np.shape(t) + (self.fam.n,)))

    def compatibility_defect(self, y):
        """Max deviation in ``u0 = u1(., 0)`` and ``sigma u0 = u2(., 0)`` at face points ``y``."""
        y = np.asarray(y, float)
        nrm = np.zeros(self.fam.n)
        nrm[-1] = 1.0
        d1 = np.abs(self.u0(y) - self.u1(y, 0.0)).max()
        s0 = apply_stress(family_jacobian(self.fam, y, 0.0), nrm, self.fam.coeffs)
        d2 = np.abs(s0 - self.u2(y, 0.0)).max()
        return float(max(d1, d2))


def family_data(fam: IllPosedFamily) -> FamilyData:
    return FamilyData(fam)


def amplification_table(ks, N, coeffs: LameCoefficients, xn=1.0, n=2, T=1.0, grid=32):
    """Rows ``(k, data_norm, solution_sup, ratio)``.

    ``data_norm`` is the largest of the discrete sups of ``|u1|``, ``|u2|``
    over the face of the unit cube times ``[0, T]`` and of ``|u0|`` over the
    cube, on ``grid`` points per axis (endpoints included).
    """
    if not 0 <= xn <= 1:
        raise ValueError("probe x_n must lie in [0, 1]")
    tt = np.linspace(0.0, T, grid)
    xs = np.linspace(0.0, 1.0, grid)
    rows = []
    for k in ks:
        fam = IllPosedFamily(int(k), int(N), float(T), coeffs, n)
        d = FamilyData(fam)
        # data depend only on t (face) or x_n (initial); sample those axes
        face_pts = np.zeros((grid, n))
        s1 = np.abs(d.u1(face_pts, tt)).max()
        s2 = np.abs(d.u2(face_pts, tt)).max()
        cube = np.zeros((grid, n))
        cube[:, -1] = xs
        s0 = np.abs(d.u0(cube)).max()
        data_norm = float(max(s1, s2, s0))
        sol = math.exp(fam.k * xn) / float(fam.k) ** fam.N
        rows.append((fam.k, data_norm, sol, sol / data_norm))
    return rows


def table_to_csv(rows, path=None):
    buf = io.StringIO()
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(["k", "data_norm", "solution_sup", "ratio"])
    for k, a, b, c in rows:
        wr.writerow([k, repr(a), repr(b), repr(c)])
    text = buf.getvalue()
    if path is not None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    return text


def parse_k_range(text):
    """``"1..20"`` or ``"1,2,5"`` to a list of ints."""
    text = str(text).strip()
    if ".." in text:
        a, b = text.split("..", 1)
        a, b = int(a), int(b)
        if b < a:
            raise ValueError(f"empty k range {text!r}")
        return list(range(a, b + 1))
    return [int(v) for v in text.split(",") if v.strip()]
