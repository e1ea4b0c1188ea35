"""Gradient-recovery Hessian discretisation on P1 conforming elements.

Vertex unknowns; the recovered gradient is the area-weighted vertex
average of the piecewise-constant P1 gradients, and the twisted Hessian
combines its broken derivative with a mesh-scaled stabilisation of the
recovery defect.
"""

from __future__ import annotations

import numpy as np

from .core import BTensor, CellOps, DiscretisationOps
from .fem import NotTriangular
from .linalg import cell_quadrature


class InvalidRho(Exception):
    pass


# Absolute scale of the stabilisation field. The recovery defect of the
# averaging operator is first order in h, so the penalty must stay well
# below the principal term for the results to be insensitive to rho over
# several orders of magnitude; this factor keeps it subdominant while the
# Gram matrix remains SPD for every rho > 0.
STAB_SCALE = 0.01


def _p1_geometry(mesh, k):
    """Barycentric gradients (3,2) of the P1 basis on triangle k."""
    pts = mesh.vertices[list(mesh.cells[k])]
    T = np.vstack([np.ones(3), pts.T])
    Tinv = np.linalg.inv(T)
    return Tinv[:, 1:]   # row i: grad lambda_i


def _barycentric(mesh, k, x):
    pts = mesh.vertices[list(mesh.cells[k])]
    T = np.vstack([np.ones(3), pts.T])
    rhs = np.vstack([np.ones(x.shape[0]), x.T])
    return np.linalg.solve(T, rhs).T   # (nq, 3)


def gr_ops(mesh, rho=1.0, btensor=None, quad_degree=4):
    # degree 4 integrates every assembled product exactly (the quadratic
    # stabilisation profile squared is the highest-degree term)
    """Gradient-recovery discretisation with stabilisation weight ``rho``."""
    if any(len(c) != 3 for c in mesh.cells):
        raise NotTriangular("gradient recovery requires a triangular mesh")
    if not rho > 0.0:
        raise InvalidRho(f"rho = {rho}")
    btensor = btensor or BTensor("identity")

    nv = mesh.n_vertices
    nc = mesh.n_cells
    vertex_cells = [[] for _ in range(nv)]
    for k, verts in enumerate(mesh.cells):
        for v in verts:
            vertex_cells[v].append(k)

    p1_grads = [_p1_geometry(mesh, k) for k in range(nc)]

    cells = []
    for k, verts in enumerate(mesh.cells):
        verts = list(verts)
        # stencil: vertices of every cell meeting one of this cell's vertices
        sten = sorted({w for v in verts for j in vertex_cells[v]
                       for w in mesh.cells[j]})
        pos = {v: i for i, v in enumerate(sten)}
        nl = len(sten)

        # recovered gradient at each of the 3 corners, as rows over the
        # stencil; clamped boundary conditions pin it to zero at boundary
        # vertices so the recovered field stays in H^1_0
        qcoef = np.zeros((3, nl, 2))
        for i, v in enumerate(verts):
            if mesh.boundary_vertex[v]:
                continue
            areas = mesh.cell_areas[vertex_cells[v]]
            wsum = areas.sum()
            for j, aj in zip(vertex_cells[v], areas):
                gj = p1_grads[j]
                for m, w in enumerate(mesh.cells[j]):
                    qcoef[i, pos[w]] += (aj / wsum) * gj[m]

        gK = p1_grads[k]
        qx, qw = cell_quadrature(mesh, k, quad_degree)
        lam = _barycentric(mesh, k, qx)          # (nq, 3)
        nq = qx.shape[0]

        pi = np.zeros((nq, nl))
        broken = np.zeros((nq, nl, 2))
        for i, v in enumerate(verts):
            pi[:, pos[v]] = lam[:, i]
            broken[:, pos[v], :] = gK[i]

        # gradient reconstruction: the recovered (vertex-averaged) gradient
        grad = np.einsum("qi,ila->qla", lam, qcoef)

        # broken derivative of the recovered-gradient field (constant on K)
        dmat = np.einsum("ila,ib->lab", qcoef, gK)
        # read-only broadcast view: constant in q, kept unmaterialized to
        # bound memory on fine meshes
        hess_err = np.broadcast_to(dmat, (nq, nl, 2, 2))

        # stabilisation: s_K otimes (recovered - broken) gradient, with a
        # per-cell profile orthogonal to linears so the stabilised term is
        # L2(K)-orthogonal to the constant Hessian reconstructions
        prof = lam[:, 0] ** 2
        M = np.einsum("qi,qj,q->ij", lam, lam, qw)
        rhs_p = np.einsum("qi,q,q->i", lam, prof, qw)
        prof = prof - lam @ np.linalg.solve(M, rhs_p)
        area = mesh.cell_areas[k]
        nrm = np.sqrt((qw @ prof ** 2) / area)
        prof = prof / nrm
        sK = (STAB_SCALE * rho / mesh.cell_diams[k]) * np.ones(2) / np.sqrt(2.0)
        defect = grad - broken
        hess = hess_err + np.einsum("q,a,qlb->qlab", prof, sK, defect)

        cells.append(
            CellOps(
                dofs=np.array(sten),
                qx=qx,
                qw=qw,
                pi=pi,
                grad=grad,
                hess=btensor.apply(hess),
                hess_err=hess_err,
            )
        )
    return DiscretisationOps(mesh, btensor, nv,
                             mesh.boundary_vertex.copy(), cells, scheme="gr")


def gr_interpolant(mesh, ops, u):
    """Vertex interpolant with clamped boundary values."""
    dofs = np.zeros(mesh.n_vertices)
    dofs[ops.free] = np.asarray(u(mesh.vertices[ops.free]), dtype=float)
    return dofs
