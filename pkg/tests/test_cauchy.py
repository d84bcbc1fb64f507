import json
import math

import numpy as np
import pytest

from parlame.caloric import heat_polynomial
from parlame.cauchy import (
    CauchyData,
    ExtensionBasis,
    ReconstructionConfig,
    ReconstructionProblem,
    collocation_nodes,
    default_basis,
    field_csv,
    fit_extension,
    interior_grid,
    mirror_domain,
    report_json,
    uniqueness_probe,
)
from parlame.errors import IllConditionedError, InvalidGeometryError
from parlame.geometry import BoundaryPatch, Cap, CylinderDomain, face, make_ball, make_box
from parlame.kernels import LameCoefficients
from parlame.polynomial import CaloricPolynomial as P
from parlame.polynomial import lame_apply
from parlame.potentials import PolynomialField, QuadOptions

SQUARE = CylinderDomain(make_box([[0.0, 1.0], [0.0, 1.0]]), 1.0)
GAMMA = face(SQUARE, 1, 0)
HEAT = LameCoefficients.heat()
SMALL = ReconstructionConfig(degree=6, layer_degree=3, n_space=6, n_time=5, opts=QuadOptions(8, 8))


@pytest.fixture(scope="module")
def problem():
    return ReconstructionProblem(SQUARE, GAMMA, HEAT, SMALL, grid=interior_grid(SQUARE, 4, 2))


@pytest.fixture(scope="module")
def manufactured():
    field = PolynomialField([heat_polynomial(1, 1, 1, 2).with_scale(1.0), P(2)], HEAT)
    return CauchyData.from_field(field, SQUARE, GAMMA, HEAT), field


def test_fit_exact_recovery():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(40, 10))
    c = rng.normal(size=10)
    fit = fit_extension(A, A @ c, 0.0)
    assert np.allclose(fit.coefficients, c, atol=1e-12)
    assert fit.residual < 1e-14 and fit.rank == 10


def test_tikhonov_monotone_in_alpha():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(30, 12)) @ np.diag(np.logspace(0, -8, 12))
    b = rng.normal(size=30)
    fits = [fit_extension(A, b, a) for a in (1e-6, 1e-4, 1e-2, 1.0)]
    res = [f.residual for f in fits]
    norms = [np.linalg.norm(f.coefficients) for f in fits]
    assert all(x <= y + 1e-15 for x, y in zip(res, res[1:]))
    assert all(x >= y for x, y in zip(norms, norms[1:]))


def test_rank_deficiency_needs_regularization():
    A = np.ones((5, 2))
    with pytest.raises(IllConditionedError):
        fit_extension(A, np.ones(5), 0.0)
    assert fit_extension(A, np.ones(5), 1e-3).residual < 1e-5


def test_negative_alpha_rejected():
    with pytest.raises(ValueError):
        ReconstructionConfig(alphas=(-1.0,))


def test_cauchy_data_needs_box_face():
    ball = CylinderDomain(make_ball([0, 0], 1.0), 1.0)
    cap = BoundaryPatch(ball, Cap((0.0, -1.0), 1.0))
    with pytest.raises(InvalidGeometryError):
        CauchyData.zero(ball, cap)


def test_mirror_and_nodes():
    plus = mirror_domain(SQUARE, GAMMA)
    assert plus.bounds == ((0.0, 1.0), (-1.0, 0.0))
    nodes = collocation_nodes(SQUARE, GAMMA, 4, 3)
    assert nodes.shape == (48, 3)
    assert np.all(nodes[:, 1] < 0) and np.all(nodes[:, 2] > 0)
    g = interior_grid(SQUARE, 4, 2)
    assert np.all((g[:, :2] > 0) & (g[:, :2] < 1))


@pytest.mark.parametrize("coeffs", [HEAT, LameCoefficients(1.0, 0.0), LameCoefficients.heat(2.0)])
def test_default_basis_solves_system(coeffs):
    basis = default_basis(2, 4, coeffs, (0.5, 0.0), 0.5)
    assert basis
    for v in basis[:: max(1, len(basis) // 10)]:
        assert all(p.is_zero() for p in lame_apply(v, coeffs.mu, coeffs.lam))


def test_extension_basis_layer_columns_are_caloric():
    basis = ExtensionBasis(SQUARE, GAMMA, HEAT, degree=2, layer_degree=1, opts=QuadOptions(8, 8))
    assert basis.size == len(basis.labels())
    # a layer column solves the heat equation away from its support: check by finite differences
    x, t, h = np.array([0.5, -0.5]), 0.6, 1e-3
    row = lambda xx, tt: basis.matrix(np.array([list(xx) + [tt]]))  # noqa: E731
    e = np.eye(2) * h
    ut = (row(x, t + h) - row(x, t - h)) / (2 * h)
    lap = sum(row(x + e[i], t) - 2 * row(x, t) + row(x - e[i], t) for i in range(2)) / h**2
    res = ut - lap
    assert np.abs(res).max() <= 1e-4 * max(1.0, np.abs(ut).max())


def test_zero_data_gives_zero_field(problem):
    res = problem.solve(CauchyData.zero(SQUARE, GAMMA))
    assert np.abs(res.grid_field).max() == 0.0


def test_manufactured_reconstruction(problem, manufactured):
    data, field = manufactured
    res = problem.solve(data, reference=field.value)
    assert res.best_error <= 1e-2
    assert res.errors[0] > res.best_error  # heavy regularization is worse
    x, t = np.array([0.5, 0.5]), 0.75
    assert np.allclose(res.field(x, t), field.value(x, t), atol=5e-2)


def test_reconstruction_linear_in_data(problem, manufactured):
    data, _ = manufactured
    a = problem.solve(data, alphas=(1e-8,))
    # scaling by a power of two is exact in binary, so linearity holds to roundoff
    b = problem.solve(data.scaled(2.0), alphas=(1e-8,))
    assert np.allclose(b.grid_field, 2 * a.grid_field, rtol=1e-12, atol=1e-14)


def test_field_outside_cylinder_rejected(problem, manufactured):
    data, _ = manufactured
    res = problem.solve(data, alphas=(1e-6,))
    with pytest.raises(InvalidGeometryError):
        res.field(np.array([0.5, -0.5]), 0.5)
    with pytest.raises(InvalidGeometryError):
        res.field(np.array([0.5, 0.5]), 2.0)


def test_uniqueness_probe_scaling(problem, manufactured):
    data, _ = manufactured
    rep = uniqueness_probe(data, HEAT, SMALL, alpha=1e-8, problem=problem)
    runs = {r["delta"]: r["interior_sup"] for r in rep["runs"]}
    assert runs[0.0] <= 1e-6
    assert rep["scaling_ratio"] == pytest.approx(10.0, rel=1e-6)


def test_reports_deterministic(problem, manufactured, tmp_path):
    data, field = manufactured
    r1 = problem.solve(data, reference=field.value)
    r2 = problem.solve(data, reference=field.value)
    j1, j2 = report_json(r1, SMALL, HEAT), report_json(r2, SMALL, HEAT)
    assert j1 == j2
    doc = json.loads(j1)
    assert doc["basis_size"] == problem.basis.size and len(doc["sweep"]) == len(SMALL.alphas)
    assert field_csv(r1) == field_csv(r2)
    assert field_csv(r1).splitlines()[0] == "x_1,x_2,t,U_1,U_2,ref_1,ref_2"


def test_too_few_nodes_rejected():
    cfg = ReconstructionConfig(degree=8, layer_degree=None, n_space=2, n_time=2)
    with pytest.raises(ValueError):
        ReconstructionProblem(SQUARE, GAMMA, HEAT, cfg)


def test_data_on_other_face_rejected(problem):
    with pytest.raises(ValueError):
        problem.solve(CauchyData.zero(SQUARE, face(SQUARE, 0, 0)))
