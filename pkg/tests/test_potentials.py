import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import COEFF_SETS
from parlame.caloric import heat_polynomial, lame_caloric_basis
from parlame.errors import AmbiguousTraceError
from parlame.geometry import CylinderDomain, composite_gauss, face, make_box, surface_rule, time_rule
from parlame.kernels import LameCoefficients, heat_kernel, heat_kernel_hessian
from parlame.polynomial import CaloricPolynomial as P
from parlame.potentials import (
    Density,
    PolynomialField,
    QuadOptions,
    batch_to_csv,
    double_layer,
    evaluate_batch,
    green_identity,
    jump_probe,
    poisson_integral,
    potential_matrix,
    single_layer,
    volume_potential,
)

SQUARE = CylinderDomain(make_box([[0.0, 1.0], [0.0, 1.0]]), 1.0)
BOTTOM = face(SQUARE, 1, 0)
FAR = np.array([0.3, -0.4])


def v_density(y, tau):
    return np.stack([1 + y[..., 0] * tau, y[..., 0] ** 2], -1)


def brute_kernel(z, s, mu, c2, m=48):
    """Fundamental solution through Gauss quadrature of its defining s-integral."""
    u, wu = np.polynomial.legendre.leggauss(m)
    a, b = mu * s, c2 * s
    S = (a + b) / 2 + (b - a) / 2 * u[:, None]
    I = np.einsum("m,n,mnij->nij", wu, (b - a) / 2, heat_kernel_hessian(z[None], S))
    return heat_kernel(z, mu * s)[:, None, None] * np.eye(z.shape[-1]) + I


def brute_single_layer(x, t, coeffs, m):
    ys, wy = composite_gauss([0, 0.15, 0.3, 0.45, 1], m)
    sg, ws = composite_gauss(np.linspace(0, np.sqrt(t), 5), m)
    S, Yy = np.meshgrid(sg, ys, indexing="ij")
    W = 2 * S * np.outer(ws, wy)
    y = np.stack([Yy.ravel(), 0 * Yy.ravel()], -1)
    s = (S**2).ravel()
    K = brute_kernel(x - y, s, coeffs.mu, coeffs.c_long)
    return np.einsum("n,nji,nj->i", W.ravel(), K, v_density(y, t - s))


def test_single_layer_heat_matches_mpmath():
    mpmath.mp.dps = 20
    t = 0.8

    def f(y, tau, comp):
        s = t - tau
        phi = mpmath.exp(-((FAR[0] - y) ** 2 + FAR[1] ** 2) / (4 * s)) / (4 * mpmath.pi * s)
        return phi * [1 + y * tau, y**2][comp]

    ref = np.array([float(mpmath.quad(lambda y, tau: f(y, tau, c), [0, 1], [0, t])) for c in (0, 1)])
    val = single_layer(v_density, BOTTOM, FAR, t, LameCoefficients.heat())
    assert np.allclose(val, ref, rtol=0, atol=1e-8)


@pytest.mark.parametrize("coeffs", COEFF_SETS[1:])
def test_single_layer_lame_matches_brute_force(coeffs):
    t = 0.8
    ref = brute_single_layer(FAR, t, coeffs, 48)
    assert np.allclose(ref, brute_single_layer(FAR, t, coeffs, 32), atol=1e-12)
    assert np.allclose(single_layer(v_density, BOTTOM, FAR, t, coeffs), ref, rtol=0, atol=1e-8)


@pytest.mark.parametrize("coeffs", COEFF_SETS)
def test_poisson_integral_of_constant_is_identity(coeffs):
    big = make_box([[-12.0, 12.0], [-12.0, 12.0]])
    out = poisson_integral(lambda y: np.broadcast_to([1.0, 2.0], y.shape), big, np.array([0.2, -0.1]), 0.5, coeffs)
    assert np.allclose(out, [1.0, 2.0], atol=1e-10)


@pytest.mark.parametrize("coeffs", COEFF_SETS)
def test_volume_potential_of_constant_source(coeffs):
    big = make_box([[-12.0, 12.0], [-12.0, 12.0]])
    f = lambda y, tau: np.broadcast_to([1.0, -1.0], y.shape)  # noqa: E731
    out = volume_potential(f, big, np.array([0.0, 0.3]), 0.4, coeffs)
    assert np.allclose(out, [0.4, -0.4], atol=1e-9)


def test_potentials_vanish_before_initial_time():
    c = LameCoefficients(1.0, 0.0)
    assert not single_layer(v_density, BOTTOM, FAR, 0.0, c).any()
    assert not double_layer(v_density, BOTTOM, FAR, -1.0, c).any()
    assert not poisson_integral(lambda y: y, SQUARE.base, FAR, 0.0, c).any()


def test_causality_future_density_ignored():
    c = LameCoefficients(1.0, 0.0)
    t = 0.5

    def altered(y, tau):
        return v_density(y, tau) + np.where(tau > t, 100.0, 0.0)[..., None]

    a = double_layer(v_density, BOTTOM, FAR, t, c)
    b = double_layer(altered, BOTTOM, FAR, t, c)
    assert np.array_equal(a, b)


@settings(max_examples=8, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3))
def test_layers_linear_in_density(a, b):
    c = LameCoefficients(2.0, 0.5)
    opts = QuadOptions(8, 8)
    w1 = v_density
    w2 = lambda y, tau: np.stack([np.cos(y[..., 0]), tau + 0 * y[..., 0]], -1)  # noqa: E731
    comb = lambda y, tau: a * w1(y, tau) + b * w2(y, tau)  # noqa: E731
    x = np.array([0.6, 0.2])
    for layer in (single_layer, double_layer):
        lhs = layer(comb, BOTTOM, x, 0.7, c, opts=opts)
        rhs = a * layer(w1, BOTTOM, x, 0.7, c, opts=opts) + b * layer(w2, BOTTOM, x, 0.7, c, opts=opts)
        assert np.allclose(lhs, rhs, atol=1e-12 * (1 + np.abs(rhs).max()))


def test_surface_target_needs_side():
    c = LameCoefficients.heat()
    x0 = np.array([0.5, 0.0])
    with pytest.raises(AmbiguousTraceError):
        double_layer(v_density, BOTTOM, x0, 0.5, c)
    inside = double_layer(v_density, BOTTOM, x0, 0.5, c, side="interior")
    outside = double_layer(v_density, BOTTOM, x0, 0.5, c, side="exterior")
    assert np.allclose(inside - outside, v_density(x0, 0.5), atol=1e-3)


def test_fixed_density_matches_callable_far_away():
    c = LameCoefficients(1.0, 0.0)
    rule = surface_rule(BOTTOM, 40)
    dens = Density.sample("stress", v_density, rule, time_rule(0.0, 0.8, 40, mode="sqrt"))
    x = np.array([0.5, -1.0])
    assert np.allclose(single_layer(dens, BOTTOM, x, 0.8, c), single_layer(v_density, BOTTOM, x, 0.8, c), atol=1e-8)
    doubled = dens + dens
    assert np.allclose(single_layer(doubled, BOTTOM, x, 0.8, c), 2 * single_layer(dens, BOTTOM, x, 0.8, c))


@pytest.mark.parametrize("coeffs", COEFF_SETS[1:])
def test_gradient_matches_finite_difference(coeffs):
    x, t, h = np.array([0.4, 0.3]), 0.6, 1e-4
    val, g = double_layer(v_density, BOTTOM, x, t, coeffs, grad=True)
    for k in range(2):
        e = np.zeros(2)
        e[k] = h
        fd = (double_layer(v_density, BOTTOM, x + e, t, coeffs) - double_layer(v_density, BOTTOM, x - e, t, coeffs)) / (2 * h)
        assert np.allclose(g[:, k], fd, atol=1e-6)


def test_potential_matrix_matches_individual_layers():
    c = LameCoefficients(2.0, 0.5)
    x, t = np.array([0.4, 0.6]), 0.7

    def scal(y, tau):
        return np.stack([np.ones_like(tau), y[..., 0] * tau], -1)

    for kind, layer in (("V", single_layer), ("W", double_layer)):
        M = potential_matrix(kind, scal, BOTTOM, x, t, c)
        for m in range(2):
            for k in range(2):
                dens = lambda y, tau, m=m, k=k: np.eye(2)[m] * scal(y, tau)[..., k:k + 1]  # noqa: E731
                assert np.allclose(M[:, m, k], layer(dens, BOTTOM, x, t, c), atol=1e-13)
    M = potential_matrix("I", lambda y, tau: np.stack([y[..., 0]], -1), SQUARE.base, x, t, c)
    ref = poisson_integral(lambda y: np.stack([y[..., 0], 0 * y[..., 0]], -1), SQUARE.base, x, t, c)
    assert np.allclose(M[:, 0, 0], ref, atol=1e-13)


def _heat_field():
    c = LameCoefficients.heat()
    return PolynomialField([heat_polynomial(1, 1, 1, 2).with_scale(1.0), P(2)], c), c


@pytest.mark.parametrize("x,t", [((0.5, 0.5), 0.5), ((0.9, 0.07), 0.9), ((1.3, 0.5), 0.5), ((0.5, -0.2), 0.3)])
def test_green_identity_heat(x, t):
    field, c = _heat_field()
    total, ref = green_identity(field, SQUARE, np.array(x), t, c)
    assert np.abs(total - ref).max() <= 1e-8


@pytest.mark.parametrize("coeffs", COEFF_SETS[1:])
def test_green_identity_lame_with_source(coeffs):
    # a shifted face solution has L u = t x1 x2 e_1, exercising the volume potential
    from parlame.caloric import poly_cauchy_solve

    v = [p.shift((0.3, -0.2)) for p in poly_cauchy_solve(1, (1, 1), coeffs, 0)]
    field = PolynomialField(v, coeffs)
    assert not field.source_is_zero
    opts = QuadOptions(8, 12)
    for x, t in (((0.5, 0.5), 0.5), ((1.3, 0.5), 0.5)):
        total, ref = green_identity(field, SQUARE, np.array(x), t, coeffs, opts=opts)
        assert np.abs(total - ref).max() <= 2e-3


def test_green_identity_lame_caloric_field():
    c = LameCoefficients(1.0, 0.0)
    field = PolynomialField(lame_caloric_basis(2, 3, c)[-1], c)
    assert field.source_is_zero
    total, ref = green_identity(field, SQUARE, np.array([0.4, 0.6]), 0.7, c, opts=QuadOptions(8, 12))
    assert np.abs(total - ref).max() <= 2e-3


@pytest.mark.parametrize("coeffs", [COEFF_SETS[0], COEFF_SETS[1]])
@pytest.mark.parametrize("quantity", ["W", "sigmaV", "sigmaW"])
def test_jump_relations(coeffs, quantity):
    x0, t0 = np.array([0.5, 0.0]), 0.5
    res = jump_probe(quantity, v_density, BOTTOM, x0, t0, coeffs)
    expected = np.zeros(2) if quantity == "sigmaW" else v_density(x0, t0)
    assert np.abs(res.jump - expected).max() <= 1e-2
    assert res.interior_samples.shape == (5, 2)


def test_batch_evaluation_is_order_preserving(tmp_path):
    c = LameCoefficients.heat()
    targets = np.array([[0.2, -0.5, 0.6], [0.8, -0.3, 0.9], [0.5, -1.0, 0.4]])
    f = lambda x, t: single_layer(v_density, BOTTOM, x, t, c, opts=QuadOptions(6, 8))  # noqa: E731
    serial = evaluate_batch(f, targets, threads=1)
    parallel = evaluate_batch(f, targets, threads=3)
    assert np.array_equal(serial, parallel)
    text = batch_to_csv(targets, serial, tmp_path / "b.csv")
    assert text.splitlines()[0] == "x_1,x_2,t,component,value"
    assert len(text.splitlines()) == 7
    assert (tmp_path / "b.csv").read_text() == text
