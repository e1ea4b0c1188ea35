import math

import numpy as np
import pytest
import scipy.sparse as sp

from hdmlab.linalg import (
    NonPositiveCurvature,
    NotConverged,
    SparseSystem,
    UnsupportedDegree,
    cell_quadrature,
    dump_matrix,
    gauss_rectangle,
    gauss_triangle,
    solve_spd,
)
from hdmlab.mesh import generate_square_rectangular, generate_square_triangular


def test_cg_identity():
    b = np.array([3.0, -1.0, 2.0])
    x = solve_spd(SparseSystem(sp.identity(3, format="csr"), b))
    assert np.allclose(x, b, atol=1e-14)


def test_cg_2x2_hand_solution():
    A = sp.csr_matrix(np.array([[2.0, 1.0], [1.0, 2.0]]))
    x = solve_spd(SparseSystem(A, np.array([1.0, 1.0])))
    assert np.allclose(x, [1.0 / 3.0, 1.0 / 3.0], atol=1e-13)


def test_cg_residual_tolerance_on_random_spd():
    rng = np.random.default_rng(3)
    n = 60
    M = rng.standard_normal((n, n))
    A = sp.csr_matrix(M @ M.T + n * np.eye(n))
    b = rng.standard_normal(n)
    system = SparseSystem(A, b)
    x = solve_spd(system, tol=1e-12)
    assert np.linalg.norm(A @ x - b) / np.linalg.norm(b) <= 1e-12
    assert system.iterations > 0


def test_cg_rejects_indefinite():
    A = sp.csr_matrix(np.array([[1.0, 0.0], [0.0, -1.0]]))
    with pytest.raises(NonPositiveCurvature):
        solve_spd(SparseSystem(A, np.array([1.0, 1.0])))


def test_cg_not_converged_reports_iterations():
    # an unreachable tolerance on the (numerically singular) Hilbert matrix
    from scipy.linalg import hilbert
    n = 12
    A = sp.csr_matrix(hilbert(n))
    b = np.ones(n)
    with pytest.raises(NotConverged) as err:
        solve_spd(SparseSystem(A, b), tol=1e-16)
    assert err.value.iterations > 0


def test_symmetry_defect():
    A = sp.csr_matrix(np.array([[1.0, 2.0], [2.0, 1.0]]))
    assert SparseSystem(A, np.zeros(2)).symmetry_defect() == 0.0


def test_dump_matrix(tmp_path):
    A = sp.csr_matrix(np.array([[1.5, 0.0], [0.0, -2.0]]))
    path = tmp_path / "mat.txt"
    dump_matrix(A, path)
    rows = [line.split() for line in path.read_text().splitlines()]
    entries = {(int(r[0]), int(r[1])): float(r[2]) for r in rows}
    assert entries == {(0, 0): 1.5, (1, 1): -2.0}


def test_triangle_degree1_centroid_weight():
    rule = gauss_triangle(1)
    assert abs(rule.weights.sum() - 0.5) < 1e-14


def test_rectangle_degree3_tensor_gauss():
    rule = gauss_rectangle(3)
    assert rule.points.shape == (4, 2)
    assert np.allclose(rule.weights, 0.25)
    nodes = np.unique(np.round(rule.points[:, 0], 14))
    assert np.allclose(nodes, 0.5 + np.array([-1, 1]) / (2 * np.sqrt(3.0)))


def test_triangle_degree4_x2y2():
    rule = gauss_triangle(4)
    x, y = rule.points[:, 0], rule.points[:, 1]
    val = rule.weights @ (x ** 2 * y ** 2)
    assert abs(val - 1.0 / 180.0) < 1e-13


@pytest.mark.parametrize("degree", range(1, 9))
def test_monomial_exactness_sweep(degree):
    for rule in (gauss_triangle(degree), gauss_rectangle(degree)):
        x, y = rule.points[:, 0], rule.points[:, 1]
        for a in range(degree + 1):
            for b in range(degree + 1 - a):
                got = rule.weights @ (x ** a * y ** b)
                if rule.element == "triangle":
                    exact = (math.factorial(a) * math.factorial(b)
                             / math.factorial(a + b + 2))
                else:
                    exact = 1.0 / ((a + 1) * (b + 1))
                assert abs(got - exact) <= 1e-13 * max(1.0, exact)


def test_unsupported_degree():
    with pytest.raises(UnsupportedDegree):
        gauss_triangle(9)
    with pytest.raises(UnsupportedDegree):
        gauss_rectangle(0)


def test_cell_quadrature_integrates_area():
    for mesh in (generate_square_triangular(1), generate_square_rectangular(1)):
        total = 0.0
        for k in range(mesh.n_cells):
            _, qw = cell_quadrature(mesh, k, 4)
            total += qw.sum()
        assert abs(total - 1.0) < 1e-13


def test_cell_quadrature_polynomial_on_triangle():
    mesh = generate_square_triangular(0)
    val = 0.0
    for k in range(mesh.n_cells):
        qx, qw = cell_quadrature(mesh, k, 4)
        val += qw @ (qx[:, 0] ** 2 * qx[:, 1] ** 2)
    # int over unit square of x^2 y^2 = 1/9
    assert abs(val - 1.0 / 9.0) < 1e-14
