import math
from fractions import Fraction

import numpy as np
import pytest
import sympy as sp
from scipy.special import sph_harm_y

from conftest import COEFF_SETS
from parlame.caloric import (
    _multi_indices,
    caloric_w,
    double_orthogonality_gram,
    face_cauchy_extend,
    face_stress,
    heat_basis,
    heat_polynomial,
    lame_caloric_basis,
    off_block_max,
    poly_cauchy_solve,
    reduce_boundary_data,
    solve_face_problem,
    spherical_harmonics,
)
from parlame.errors import UnsupportedDimensionError
from parlame.kernels import LameCoefficients
from parlame.polynomial import CaloricPolynomial as P
from parlame.polynomial import lame_apply

Y, T = sp.symbols("y t")


def w_sympy(j, k):
    """Independent construction: solve (d_t - d_y^2) w = t^j y^k, w = w_y = 0 at y = 0,
    by undetermined coefficients over monomials y^(k+2+2m) t^(j-m)."""
    cs = sp.symbols(f"c0:{j + 1}")
    w = sum(cs[m] * Y ** (k + 2 + 2 * m) * T ** (j - m) for m in range(j + 1))
    eqs = sp.Poly(sp.expand(sp.diff(w, T) - sp.diff(w, Y, 2) - T**j * Y**k), Y, T).coeffs()
    sol = sp.solve(eqs, cs, dict=True)[0]
    return sp.expand(w.subs(sol))


@pytest.mark.parametrize("j,k", [(0, 0), (1, 0), (2, 3), (4, 1)])
def test_w_matches_undetermined_coefficients(j, k):
    w = caloric_w(j, k)
    mine = sum(sp.Rational(c.numerator, c.denominator) * Y ** key[0] * T ** key[1] for key, c in w.terms.items())
    assert sp.expand(mine - w_sympy(j, k)) == 0


def test_w_known_value():
    assert caloric_w(1, 0) == P(1, {(4, 0): Fraction(-1, 24), (2, 1): Fraction(-1, 2)})


def test_w_identities_through_six():
    for j in range(7):
        for k in range(7):
            w = caloric_w(j, k)
            assert w.heat() == P.monomial(1, (k,), j)
            assert w.restrict(0).is_zero() and w.dx(0).restrict(0).is_zero()


@pytest.mark.parametrize("coeffs", COEFF_SETS)
@pytest.mark.parametrize("n", [2, 3])
def test_poly_cauchy_solve_exact(coeffs, n):
    for total in range(5):
        for j in range(total + 1):
            for alpha in _multi_indices(n, total - j):
                for m in range(n):
                    v = poly_cauchy_solve(j, alpha, coeffs, component=m)
                    Lv = lame_apply(v, coeffs.mu, coeffs.lam)
                    for i in range(n):
                        assert Lv[i] == (P.monomial(n, alpha, j) if i == m else P(n))
                        assert v[i].restrict(n - 1).is_zero()
                        assert v[i].dx(n - 1).restrict(n - 1).is_zero()


def test_heat_route_equals_coupled_route_when_decoupled():
    c = LameCoefficients.heat()
    v1 = poly_cauchy_solve(2, (1, 3), c, component=0)
    zero = [P(2), P(2)]
    g = [P.monomial(2, (1, 3), 2), P(2)]
    v2 = face_cauchy_extend(zero, zero, g, c)
    assert all(a == b for a, b in zip(v1, v2))


@pytest.mark.parametrize("coeffs", COEFF_SETS)
def test_face_problem_with_general_data(coeffs):
    n = 2
    x1, t = P.x(2, 0), P.t(2)
    f = [x1 * t, P.x(2, 1) ** 2]
    u1 = [x1**2 + t, P.constant(2, 3)]
    u2 = [x1, t * x1]
    g, lift = reduce_boundary_data(f, u1, u2, coeffs)
    u = solve_face_problem(f, u1, u2, coeffs)
    Lu = lame_apply(u, coeffs.mu, coeffs.lam)
    su = face_stress(u, coeffs)
    for i in range(n):
        assert Lu[i] == f[i]
        assert u[i].restrict(1) == u1[i]
        assert su[i].restrict(1) == u2[i]


def test_face_data_must_be_tangential():
    with pytest.raises(ValueError):
        reduce_boundary_data([P(2), P(2)], [P.x(2, 1), P(2)], [P(2), P(2)], LameCoefficients(1, 0))


def test_harmonics_2d_closed_form():
    th = np.linspace(0, 2 * np.pi, 7)
    pts = np.stack([np.cos(th), np.sin(th)], axis=-1)
    h = spherical_harmonics(2, 3)
    assert np.allclose(h[0](pts), np.cos(3 * th) / np.sqrt(np.pi))
    assert np.allclose(h[1](pts), np.sin(3 * th) / np.sqrt(np.pi))
    assert np.allclose(spherical_harmonics(2, 0)[0](pts), 1 / np.sqrt(2 * np.pi))


@pytest.mark.parametrize("nu", [0, 1, 2, 3, 4])
def test_harmonics_3d_span_scipy_harmonics(nu):
    rng = np.random.default_rng(nu)
    theta = np.arccos(rng.uniform(-1, 1, 80))
    phi = rng.uniform(0, 2 * np.pi, 80)
    pts = np.stack([np.sin(theta) * np.cos(phi), np.sin(theta) * np.sin(phi), np.cos(theta)], axis=-1)
    ref = []
    for m in range(nu + 1):
        Ym = sph_harm_y(nu, m, theta, phi)
        ref.append(Ym.real)
        if m:
            ref.append(Ym.imag)
    ref = np.array(ref).T
    hs = spherical_harmonics(3, nu)
    assert len(hs) == 2 * nu + 1
    for h in hs:
        vals = h(pts)
        coef, *_ = np.linalg.lstsq(ref, vals, rcond=None)
        assert np.abs(ref @ coef - vals).max() < 1e-12
        assert h.poly.is_homogeneous(nu)
        assert h.poly.laplacian().is_zero()


def test_harmonics_reject_other_dimensions():
    with pytest.raises(UnsupportedDimensionError):
        spherical_harmonics(4, 1)


def test_heat_polynomial_values():
    # H_{1,0} along axis 0: x^2 + 2 t; H_{1,1} in 2D: (x^2 + y^2 + 8 t) x up to normalization
    assert heat_polynomial(1, 0, 1, 2, axis=0) == P(2, {(2, 0, 0): 1, (0, 0, 1): 2})
    H = heat_polynomial(1, 1, 1, 2).with_scale(1.0)
    ref = P(2, {(3, 0, 0): 1, (1, 2, 0): 1, (1, 0, 1): 8})
    assert H == ref
    with pytest.raises(ValueError):
        heat_polynomial(1, 0, 1, 2)


@pytest.mark.parametrize("n", [2, 3])
def test_heat_basis_annihilated(n):
    for b in heat_basis(n, 7, axes=range(n)):
        assert b.poly.heat().is_zero()


def test_double_orthogonality_small():
    basis = [b for b in heat_basis(2, 6, axes=()) if b.N <= 2]
    keys = [b.key for b in basis]
    G = double_orthogonality_gram(basis, 1.0, 1.0, 16)
    assert off_block_max(G, keys) <= 1e-8 * max(1.0, np.abs(G).max())
    assert np.all(np.diag(G) > 0)


@pytest.mark.parametrize("coeffs", COEFF_SETS)
def test_lame_caloric_basis_solutions(coeffs):
    basis = lame_caloric_basis(2, 3, coeffs)
    assert len(basis) == 20
    for v in basis:
        assert all(p.is_zero() for p in lame_apply(v, coeffs.mu, coeffs.lam))
    # linear independence at random points
    rng = np.random.default_rng(0)
    X = rng.uniform(-1, 1, (60, 2))
    tt = rng.uniform(0, 1, 60)
    A = np.array([np.concatenate([p(X, tt) for p in v]) for v in basis]).T
    assert np.linalg.matrix_rank(A) == len(basis)
