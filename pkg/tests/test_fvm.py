import numpy as np
import pytest

from hdmlab.core import gram_matrix, source_vector
from hdmlab.fvm import (
    NotAdmissible,
    cell_laplacians,
    consistent_gradient,
    fvm_ops,
    modified_fvm_rhs,
    tpfa_interpolant,
)
from hdmlab.mesh import (
    build_mesh,
    generate_square_rectangular,
    generate_square_triangular,
)
from tests.test_mesh import unit_rect_grid


def test_stencil_hand_values_3x3():
    # center cell of the 3x3 unit grid: Delta coefficients -36 (self),
    # +9 (each neighbor); gradient row pairs +-(3/2) per direction
    ops = fvm_ops(unit_rect_grid(3))
    k = 4
    st = list(ops.stencils[k])
    dc = ops.delta_coeffs[k]
    assert abs(dc[st.index(4)] + 36.0) < 1e-12
    for nb in (1, 3, 5, 7):
        assert abs(dc[st.index(nb)] - 9.0) < 1e-12
    gc = ops.grad_coeffs[k]
    assert np.allclose(gc[st.index(5)], [1.5, 0.0], atol=1e-12)
    assert np.allclose(gc[st.index(3)], [-1.5, 0.0], atol=1e-12)
    assert np.allclose(gc[st.index(7)], [0.0, 1.5], atol=1e-12)


def test_constrained_cells_touch_boundary():
    ops = fvm_ops(unit_rect_grid(4))
    # only the four fully interior cells of a 4x4 grid are free
    assert ops.n_free == 4
    free = np.nonzero(ops.free)[0]
    assert sorted(free) == [5, 6, 9, 10]


def test_matrix_identity_plain_vs_modified():
    for mesh in (unit_rect_grid(5), generate_square_rectangular(3)):
        A = gram_matrix(fvm_ops(mesh)).toarray()
        B = gram_matrix(fvm_ops(mesh, modified=True)).toarray()
        assert np.abs(A - B).max() <= 1e-15 * np.abs(A).max()


def test_modified_rhs_constant_source_matches_plain():
    # for f = 1 the gradient correction integrates to zero over each cell
    mesh = unit_rect_grid(5)
    ops = fvm_ops(mesh, modified=True)
    one = lambda x: np.ones(x.shape[0])
    b_plain = source_vector(fvm_ops(mesh), one)
    b_mod = modified_fvm_rhs(mesh, ops, one)
    assert np.abs(b_plain - b_mod).max() < 1e-14


def test_modified_rhs_equals_moment_formula():
    mesh = unit_rect_grid(6)
    ops = fvm_ops(mesh, modified=True)
    f = lambda x: np.sin(x[:, 0]) * (1 + x[:, 1] ** 2)
    b = modified_fvm_rhs(mesh, ops, f)
    generic = source_vector(ops, f)
    assert np.abs(b - generic).max() < 1e-13


def test_consistent_gradient_vanishes_on_interior_of_linear_field():
    # with v_K = a . x_K the face values reproduce a . x_sigma and the
    # Stokes gradient equals a on cells with no boundary face
    mesh = unit_rect_grid(6)
    ops = fvm_ops(mesh)
    a = np.array([2.0, -3.0])
    v = mesh.cell_centers @ a
    g = consistent_gradient(mesh, v, ops)
    inner = ~mesh.boundary_vertex[[list(c) for c in mesh.cells]].any(axis=1)
    assert np.abs(g[inner] - a).max() < 1e-12


def test_consistent_equals_jump_gradient_when_super_admissible():
    # on a super-admissible mesh (face midpoints on the center segment at
    # the two-point interpolation point) the two gradient formulas agree
    mesh = generate_square_rectangular(3)
    ops = fvm_ops(mesh)
    rng = np.random.default_rng(8)
    for _ in range(100):
        v = rng.standard_normal(mesh.n_cells)
        g1 = consistent_gradient(mesh, v, ops)
        g2 = np.array([gc.T @ v[st] for st, gc in
                       zip(ops.stencils, ops.grad_coeffs)])
        # grad~ and grad differ by Delta_K (x_sigma-weighted offsets); they
        # coincide where every face of the cell is interior
        inner = ~mesh.boundary_vertex[[list(c) for c in mesh.cells]].any(axis=1)
        assert np.abs(g1[inner] - g2[inner]).max() < 1e-10 * max(
            1.0, np.abs(g1[inner]).max())


def test_hessian_norm_is_laplacian_square_sum():
    mesh = unit_rect_grid(5)
    ops = fvm_ops(mesh)
    rng = np.random.default_rng(3)
    v = rng.standard_normal(mesh.n_cells)
    v[ops.constrained] = 0.0
    lap = cell_laplacians(ops, v)
    quad = sum(
        float(cell.qw @ np.einsum(
            "qab,qab->q",
            np.einsum("qiab,i->qab", cell.hess, v[cell.dofs]),
            np.einsum("qiab,i->qab", cell.hess, v[cell.dofs])))
        for cell in ops.cells)
    direct = float((mesh.cell_areas * lap ** 2).sum())
    assert abs(quad - direct) < 1e-10 * max(1.0, direct)


def test_tpfa_interpolant_residual_and_quadratic_exactness():
    mesh = generate_square_rectangular(3)
    ops = fvm_ops(mesh)
    # quadratic: Laplacian is constant 2, Delta_K is exact on interior cells
    u = lambda x: x[:, 0] ** 2
    lap = lambda x: np.full(x.shape[0], 2.0)
    v = tpfa_interpolant(mesh, ops, lap, tol=1e-13)
    lapv = cell_laplacians(ops, v)
    res = mesh.cell_areas[ops.free] * (lapv[ops.free] - 2.0)
    assert np.abs(res).max() < 1e-10


def test_tpfa_interpolant_residual_generic():
    mesh = generate_square_rectangular(3)
    ops = fvm_ops(mesh)
    lap = lambda x: np.sin(np.pi * x[:, 0]) * np.sin(np.pi * x[:, 1])
    v = tpfa_interpolant(mesh, ops, lap, tol=1e-13)
    lapv = cell_laplacians(ops, v)
    from hdmlab.linalg import cell_quadrature
    worst = 0.0
    for k in np.nonzero(ops.free)[0]:
        qx, qw = cell_quadrature(mesh, k, 4)
        worst = max(worst, abs(mesh.cell_areas[k] * lapv[k] - qw @ lap(qx)))
    assert worst < 1e-10


def test_not_admissible_raised():
    # skewed quadrilaterals break the center-line orthogonality
    verts = np.array([[0.0, 0.0], [0.8, 0.0], [2.0, 0.0],
                      [0.0, 1.0], [1.2, 1.0], [2.0, 1.0]])
    cells = [(0, 1, 4, 3), (1, 2, 5, 4)]
    mesh = build_mesh(verts, cells)
    with pytest.raises(NotAdmissible):
        fvm_ops(mesh)


def test_triangular_circumcenter_mesh_accepted():
    mesh = generate_square_triangular(2, center_rule="circumcenter")
    ops = fvm_ops(mesh)
    assert ops.n_free > 0
