"""Two-point-flux finite volume Hessian discretisation.

Cell unknowns, a per-cell discrete Laplacian/gradient built from face
jumps, the modified variant that only changes the source quadrature, and
the TPFA interpolant used to probe superconvergence.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .core import BTensor, CellOps, DiscretisationOps
from .linalg import SparseSystem, cell_quadrature, solve_spd
from .mesh import check_delta_adapted, face_distances


class NotAdmissible(Exception):
    def __init__(self, faces):
        super().__init__(f"{len(faces)} faces violate two-point orthogonality")
        self.faces = faces


@dataclass
class FvmOps(DiscretisationOps):
    """FVM discretisation plus the raw stencil data."""

    d_sigma: np.ndarray = None          # (nf,)
    stencils: list = field(default_factory=list)   # per cell: dof indices
    delta_coeffs: list = field(default_factory=list)  # per cell: (nl,)
    grad_coeffs: list = field(default_factory=list)   # per cell: (nl, 2)
    gradt_coeffs: list = field(default_factory=list)  # per cell: (nl, 2)
    modified: bool = False


def _center_face_dist(mesh, cell, face):
    n = mesh.face_normals[face]
    return abs(np.dot(mesh.cell_centers[cell] - mesh.face_midpoints[face], n))


def fvm_ops(mesh, check=True, modified=False, quad_degree=4):
    """Build the Delta-adapted FVM discretisation (trace/Laplacian B).

    ``modified=True`` switches the function reconstruction to the
    gradient-corrected one; the stiffness stencil is untouched.
    """
    if check:
        report = check_delta_adapted(mesh)
        if not report.admissible:
            raise NotAdmissible(report.failed_faces)
    d_sigma = face_distances(mesh)
    btensor = BTensor("tracelap")
    nc = mesh.n_cells
    touches_boundary = np.zeros(nc, dtype=bool)
    for f in np.nonzero(mesh.boundary_face)[0]:
        touches_boundary[mesh.face_cells[f, 0]] = True
    # cells sharing only a vertex with the boundary also touch it
    for k, verts in enumerate(mesh.cells):
        if mesh.boundary_vertex[list(verts)].any():
            touches_boundary[k] = True

    cells = []
    stencils, dcoefs, gcoefs, gtcoefs = [], [], [], []
    sqrt_d = np.sqrt(2.0)
    eye = np.eye(2)
    for k in range(nc):
        area = mesh.cell_areas[k]
        xk = mesh.cell_centers[k]
        sten = [k]
        pos = {k: 0}
        nloc = 1
        for f in mesh.cell_faces[k]:
            km, kp = mesh.face_cells[f]
            other = kp if km == k else km
            if other >= 0 and other not in pos:
                pos[other] = nloc
                sten.append(other)
                nloc += 1
        dc = np.zeros(nloc)
        gc = np.zeros((nloc, 2))
        gtc = np.zeros((nloc, 2))
        for f, sgn in zip(mesh.cell_faces[k], mesh.cell_face_signs[k]):
            km, kp = mesh.face_cells[f]
            other = kp if km == k else km
            meas = mesh.face_measures[f]
            nks = sgn * mesh.face_normals[f]
            if other >= 0:
                c = meas / (area * d_sigma[f])
                dc[pos[other]] += c
                dc[0] -= c
                vec = meas * (mesh.face_midpoints[f] - xk) / (area * d_sigma[f])
                gc[pos[other]] += vec
                gc[0] -= vec
                # face value weights for the consistent gradient
                wk = _center_face_dist(mesh, other, f) / d_sigma[f]
                wo = _center_face_dist(mesh, k, f) / d_sigma[f]
                gtc[0] += meas * wk * nks / area
                gtc[pos[other]] += meas * wo * nks / area
            # boundary faces: jump and face value are both zero
        sten = np.array(sten, dtype=int)
        qx, qw = cell_quadrature(mesh, k, quad_degree)
        nq = qx.shape[0]
        pi = np.zeros((nq, nloc))
        pi[:, 0] = 1.0
        if modified:
            pi += np.einsum("qd,ld->ql", qx - xk, gtc)
        grad = np.broadcast_to(gc, (nq, nloc, 2)).copy()
        hess = np.broadcast_to(
            (dc / sqrt_d)[:, None, None] * eye, (nq, nloc, 2, 2)
        ).copy()
        cells.append(CellOps(dofs=sten, qx=qx, qw=qw, pi=pi, grad=grad,
                             hess=hess))
        stencils.append(sten)
        dcoefs.append(dc)
        gcoefs.append(gc)
        gtcoefs.append(gtc)

    return FvmOps(
        mesh=mesh,
        btensor=btensor,
        n_dofs=nc,
        constrained=touches_boundary,
        cells=cells,
        scheme="mfvm" if modified else "fvm",
        d_sigma=d_sigma,
        stencils=stencils,
        delta_coeffs=dcoefs,
        grad_coeffs=gcoefs,
        gradt_coeffs=gtcoefs,
        modified=modified,
    )


def cell_laplacians(ops, dofs):
    """Delta_K of a dof vector, one value per cell."""
    return np.array([dc @ dofs[st] for st, dc in
                     zip(ops.stencils, ops.delta_coeffs)])


def consistent_gradient(mesh, dofs, ops=None):
    """Per-cell Stokes-formula gradient built from two-point face values."""
    if ops is None:
        ops = fvm_ops(mesh, check=False)
    return np.array([gt.T @ dofs[st] for st, gt in
                     zip(ops.stencils, ops.gradt_coeffs)])


def modified_fvm_rhs(mesh, ops, f, quad_degree=4):
    """Reduced load vector of the modified scheme via cell moments.

    RHS_i = sum_K [ (phi_i)_K int_K f + grad~_K phi_i . int_K f (x - x_K) ].
    """
    idx = ops.free_index()
    b = np.zeros(ops.n_free)
    for k in range(mesh.n_cells):
        qx, qw = cell_quadrature(mesh, k, quad_degree)
        fv = np.asarray(f(qx))
        m0 = qw @ fv
        m1 = (qw * fv) @ (qx - mesh.cell_centers[k])
        if idx[k] >= 0:
            b[idx[k]] += m0
        loc = idx[ops.stencils[k]]
        keep = loc >= 0
        if keep.any():
            np.add.at(b, loc[keep], ops.gradt_coeffs[k][keep] @ m1)
    return b


def tpfa_interpolant(mesh, ops, lap_u, tol=1e-13, quad_degree=4):
    """Dof vector matching cell averages of the Laplacian.

    Solves the SPD two-point scheme |K| Delta_K v = int_K (lap_u) over the
    unconstrained cells, zero elsewhere.
    """
    idx = ops.free_index()
    n = ops.n_free
    rows, cols, vals = [], [], []
    b = np.zeros(n)
    for k in range(mesh.n_cells):
        i = idx[k]
        if i < 0:
            continue
        # row of -|K| Delta_K restricted to free cells
        for j, c in zip(ops.stencils[k], ops.delta_coeffs[k]):
            coeff = -c * mesh.cell_areas[k]
            if idx[j] >= 0:
                rows.append(i)
                cols.append(idx[j])
                vals.append(coeff)
        qx, qw = cell_quadrature(mesh, k, quad_degree)
        b[i] = -float(qw @ np.asarray(lap_u(qx)))
    A = sp.coo_matrix((vals, (rows, cols)), shape=(n, n)).tocsr()
    system = SparseSystem(A, b)
    x = solve_spd(system, tol=tol)
    return ops.expand(x)
