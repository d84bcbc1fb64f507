"""Sparse polynomials in ``(x_1, ..., x_n, t)`` with exact rational coefficients.

Terms are stored as ``{(a_1, ..., a_n, j): Fraction}`` meaning
``coef * x^a * t^j``.  An optional floating ``scale`` multiplies the
polynomial at evaluation time only; it lets normalized bases (whose
constants are irrational) keep exact coefficients.
"""

from __future__ import annotations

import json
from fractions import Fraction
from numbers import Rational

import numpy as np

__all__ = ["CaloricPolynomial", "as_fraction", "lame_apply", "vector_to_json", "vector_from_json"]


def as_fraction(value):
    """Exact rational for ints, Fractions and decimal-looking floats."""
    if isinstance(value, Rational):
        return Fraction(value)
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(value)


class CaloricPolynomial:
    __slots__ = ("dim", "terms", "scale", "_cache")

    def __init__(self, dim, terms=None, scale=1.0):
        self.dim = int(dim)
        clean = {}
        for key, c in (terms or {}).items():
            key = tuple(int(k) for k in key)
            if len(key) != self.dim + 1:
                raise ValueError(f"term key {key} has wrong length for dim {self.dim}")
            c = as_fraction(c)
            if c != 0:
                clean[key] = clean.get(key, 0) + c
        self.terms = {k: c for k, c in clean.items() if c != 0}
        self.scale = float(scale)
        self._cache = None

    # --------------------------------------------------------- builders
    @classmethod
    def zero(cls, dim):
        return cls(dim)

    @classmethod
    def constant(cls, dim, c):
        return cls(dim, {(0,) * (dim + 1): c})

    @classmethod
    def monomial(cls, dim, alpha, j=0, coef=1):
        alpha = tuple(alpha)
        if len(alpha) != dim:
            raise ValueError("multi-index length must equal dim")
        return cls(dim, {alpha + (j,): coef})

    @classmethod
    def x(cls, dim, i):
        a = [0] * dim
        a[i] = 1
        return cls.monomial(dim, a)

    @classmethod
    def t(cls, dim):
        return cls.monomial(dim, [0] * dim, 1)

    # ------------------------------------------------------- arithmetic
    def _coerce(self, other):
        if isinstance(other, CaloricPolynomial):
            if other.dim != self.dim:
                raise ValueError("dimension mismatch")
            return other
        return CaloricPolynomial.constant(self.dim, as_fraction(other))

    def _same_scale(self, other):
        if self.is_zero():
            return other.scale
        if other.is_zero():
            return self.scale
        if self.scale != other.scale:
            raise ValueError("cannot add polynomials with different evaluation scales")
        return self.scale

    def __add__(self, other):
        other = self._coerce(other)
        scale = self._same_scale(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return CaloricPolynomial(self.dim, out, scale)

    __radd__ = __add__

    def __neg__(self):
        return CaloricPolynomial(self.dim, {k: -c for k, c in self.terms.items()}, self.scale)

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, CaloricPolynomial):
            c = as_fraction(other)
            return CaloricPolynomial(self.dim, {k: v * c for k, v in self.terms.items()}, self.scale)
        other = self._coerce(other)
        out = {}
        for k1, c1 in self.terms.items():
            for k2, c2 in other.terms.items():
                k = tuple(a + b for a, b in zip(k1, k2))
                out[k] = out.get(k, 0) + c1 * c2
        return CaloricPolynomial(self.dim, out, self.scale * other.scale)

    __rmul__ = __mul__

    def __pow__(self, p):
        if int(p) != p or p < 0:
            raise ValueError("only non-negative integer powers")
        out = CaloricPolynomial.constant(self.dim, 1)
        base = self
        p = int(p)
        while p:
            if p & 1:
                out = out * base
            base = base * base
            p >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, CaloricPolynomial):
            return self.dim == other.dim and self.terms == other.terms and self.scale == other.scale
        try:
            return self == self._coerce(other)
        except (TypeError, ValueError):
            return NotImplemented

    def __hash__(self):
        return hash((self.dim, frozenset(self.terms.items()), self.scale))

    def is_zero(self):
        return not self.terms

    def with_scale(self, scale):
        return CaloricPolynomial(self.dim, self.terms, scale)

    # ---------------------------------------------------------- calculus
    def dx(self, i):
        out = {}
        for k, c in self.terms.items():
            if k[i]:
                nk = list(k)
                nk[i] -= 1
                out[tuple(nk)] = c * k[i]
        return CaloricPolynomial(self.dim, out, self.scale)

    def dt(self):
        return self.dx(self.dim)

    def laplacian(self, axes=None):
        axes = range(self.dim) if axes is None else axes
        out = CaloricPolynomial(self.dim, scale=self.scale)
        for i in axes:
            out = out + self.dx(i).dx(i)
        return out

    def heat(self, speed=1):
        """``(d/dt - speed * Laplacian)`` applied exactly."""
        return self.dt() - self.laplacian() * as_fraction(speed)

    def euler(self):
        """``sum_j x_j d/dx_j`` (spatial Euler operator)."""
        out = CaloricPolynomial(self.dim, scale=self.scale)
        for i in range(self.dim):
            out = out + CaloricPolynomial.x(self.dim, i) * self.dx(i)
        return out

    # ---------------------------------------------------- substitutions
    def restrict(self, i, value=0):
        """Substitute ``x_i = value`` (``i = dim`` means ``t``)."""
        value = as_fraction(value)
        out = {}
        for k, c in self.terms.items():
            nk = list(k)
            p = nk[i]
            nk[i] = 0
            nk = tuple(nk)
            out[nk] = out.get(nk, 0) + c * value**p
        return CaloricPolynomial(self.dim, out, self.scale)

    def scale_time(self, a):
        """``P(x, a t)``."""
        a = as_fraction(a)
        return CaloricPolynomial(self.dim, {k: c * a ** k[-1] for k, c in self.terms.items()}, self.scale)

    def shift(self, center, t0=0):
        """``P(x - center, t - t0)`` expanded exactly."""
        center = [as_fraction(c) for c in center] + [as_fraction(t0)]
        lin = [
            CaloricPolynomial.x(self.dim, i) - center[i] if i < self.dim else CaloricPolynomial.t(self.dim) - center[i]
            for i in range(self.dim + 1)
        ]
        powers = [{0: CaloricPolynomial.constant(self.dim, 1)} for _ in lin]

        def pw(i, p):
            if p not in powers[i]:
                powers[i][p] = pw(i, p - 1) * lin[i]
            return powers[i][p]

        out = CaloricPolynomial(self.dim)
        for k, c in self.terms.items():
            term = CaloricPolynomial.constant(self.dim, c)
            for i, p in enumerate(k):
                if p:
                    term = term * pw(i, p)
            out = out + term
        return out.with_scale(self.scale)

    # ------------------------------------------------------------ degree
    @property
    def degree(self):
        return max((sum(k) for k in self.terms), default=-1)

    @property
    def parabolic_degree(self):
        """Max over terms of ``|alpha| + 2 j``."""
        return max((sum(k[:-1]) + 2 * k[-1] for k in self.terms), default=-1)

    def degree_in(self, i):
        return max((k[i] for k in self.terms), default=-1)

    def is_homogeneous(self, deg):
        return all(sum(k[:-1]) == deg and k[-1] == 0 for k in self.terms)

    # -------------------------------------------------------- evaluation
    def _arrays(self):
        if self._cache is None:
            keys = list(self.terms)
            exps = np.array(keys, dtype=int).reshape(len(keys), self.dim + 1)
            coefs = np.array([float(self.terms[k]) for k in keys])
            self._cache = (exps, coefs)
        return self._cache

    def __call__(self, x, t=0.0):
        """Evaluate at points ``x`` of shape ``(..., n)`` and times ``t``."""
        x = np.asarray(x, dtype=float)
        t = np.broadcast_to(np.asarray(t, dtype=float), x.shape[:-1])
        exps, coefs = self._arrays()
        if len(coefs) == 0:
            return np.zeros(x.shape[:-1])
        vars_ = np.concatenate([x, t[..., None]], axis=-1)
        out = np.zeros(x.shape[:-1])
        maxp = exps.max(axis=0)
        pows = []
        for i in range(self.dim + 1):
            p = [np.ones_like(vars_[..., i])]
            for _ in range(maxp[i]):
                p.append(p[-1] * vars_[..., i])
            pows.append(p)
        for e, c in zip(exps, coefs):
            term = c
            for i, p in enumerate(e):
                if p:
                    term = term * pows[i][p]
            out = out + term
        return self.scale * out

    # --------------------------------------------------------------- io
    def to_dict(self):
        doc = {
            "dim": self.dim,
            "terms": [
                {"alpha": list(k[:-1]), "j": k[-1], "num": c.numerator, "den": c.denominator}
                for k, c in sorted(self.terms.items())
            ],
        }
        if self.scale != 1.0:
            doc["scale"] = self.scale
        return doc

    def to_json(self):
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, doc):
        dim = int(doc["dim"])
        terms = {}
        for term in doc["terms"]:
            key = tuple(term["alpha"]) + (int(term.get("j", 0)),)
            terms[key] = terms.get(key, 0) + Fraction(int(term["num"]), int(term.get("den", 1)))
        return cls(dim, terms, doc.get("scale", 1.0))

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    def __repr__(self):
        if not self.terms:
            return "0"
        names = [f"x{i + 1}" for i in range(self.dim)] + ["t"]
        parts = []
        for k, c in sorted(self.terms.items(), reverse=True):
            mono = "*".join(f"{n}^{p}" if p > 1 else n for n, p in zip(names, k) if p)
            parts.append(f"{c}*{mono}" if mono else f"{c}")
        body = " + ".join(parts)
        return body if self.scale == 1.0 else f"{self.scale!r}*({body})"


def lame_apply(v, mu, lam):
    """Exact ``L v = v_t - mu Lap v - (mu + lam) grad div v`` for a polynomial vector."""
    mu, lam = as_fraction(mu), as_fraction(lam)
    n = len(v)
    div = CaloricPolynomial(v[0].dim, scale=v[0].scale)
    for k in range(n):
        div = div + v[k].dx(k)
    return [v[i].dt() - v[i].laplacian() * mu - div.dx(i) * (mu + lam) for i in range(n)]


def vector_to_json(v):
    return json.dumps([p.to_dict() for p in v])


def vector_from_json(text):
    return [CaloricPolynomial.from_dict(d) for d in json.loads(text)]
