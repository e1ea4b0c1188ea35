"""Morley triangle and Adini rectangle as Hessian discretisations."""

from __future__ import annotations

import numpy as np

from .core import BTensor, CellOps, DiscretisationOps
from .linalg import cell_quadrature


class NotTriangular(Exception):
    pass


class NotRectangular(Exception):
    pass


def _face_lookup(mesh):
    return {
        (min(a, b), max(a, b)): f
        for f, (a, b) in enumerate(mesh.face_vertices)
    }


def _monomials_p2(x, xc, h):
    """Scaled P2 monomials, their gradients and Hessians at points x."""
    s = (x - xc) / h
    xi, eta = s[:, 0], s[:, 1]
    one = np.ones_like(xi)
    zero = np.zeros_like(xi)
    vals = np.stack([one, xi, eta, xi ** 2, xi * eta, eta ** 2], axis=1)
    gx = np.stack([zero, one, zero, 2 * xi, eta, zero], axis=1) / h
    gy = np.stack([zero, zero, one, zero, xi, 2 * eta], axis=1) / h
    grads = np.stack([gx, gy], axis=2)
    hess = np.zeros((x.shape[0], 6, 2, 2))
    hess[:, 3, 0, 0] = 2 / h ** 2
    hess[:, 4, 0, 1] = hess[:, 4, 1, 0] = 1 / h ** 2
    hess[:, 5, 1, 1] = 2 / h ** 2
    return vals, grads, hess


def _monomials_adini(x, xc, h):
    """Scaled P3 + {x y^3, x^3 y} monomials with gradients and Hessians."""
    s = (x - xc) / h
    u, v = s[:, 0], s[:, 1]
    one = np.ones_like(u)
    zero = np.zeros_like(u)
    vals = np.stack(
        [one, u, v, u ** 2, u * v, v ** 2, u ** 3, u ** 2 * v, u * v ** 2,
         v ** 3, u * v ** 3, u ** 3 * v],
        axis=1,
    )
    gx = np.stack(
        [zero, one, zero, 2 * u, v, zero, 3 * u ** 2, 2 * u * v, v ** 2,
         zero, v ** 3, 3 * u ** 2 * v],
        axis=1,
    ) / h
    gy = np.stack(
        [zero, zero, one, zero, u, 2 * v, zero, u ** 2, 2 * u * v,
         3 * v ** 2, 3 * u * v ** 2, u ** 3],
        axis=1,
    ) / h
    grads = np.stack([gx, gy], axis=2)
    n = x.shape[0]
    hxx = np.stack(
        [zero, zero, zero, 2 * one, zero, zero, 6 * u, 2 * v, zero, zero,
         zero, 6 * u * v],
        axis=1,
    ) / h ** 2
    hxy = np.stack(
        [zero, zero, zero, zero, one, zero, zero, 2 * u, 2 * v, zero,
         3 * v ** 2, 3 * u ** 2],
        axis=1,
    ) / h ** 2
    hyy = np.stack(
        [zero, zero, zero, zero, zero, 2 * one, zero, zero, 2 * u, 6 * v,
         6 * u * v, zero],
        axis=1,
    ) / h ** 2
    hess = np.empty((n, 12, 2, 2))
    hess[:, :, 0, 0] = hxx
    hess[:, :, 0, 1] = hess[:, :, 1, 0] = hxy
    hess[:, :, 1, 1] = hyy
    return vals, grads, hess


def morley_ops(mesh, btensor=None, quad_degree=6):
    """Morley nonconforming discretisation on a triangular mesh.

    Dofs: one value per vertex, one normal derivative per edge midpoint
    (along the globally fixed face normal). Boundary dofs are constrained.
    """
    if any(len(c) != 3 for c in mesh.cells):
        raise NotTriangular("Morley requires a triangular mesh")
    btensor = btensor or BTensor("identity")
    lookup = _face_lookup(mesh)
    nv = mesh.n_vertices
    n_dofs = nv + mesh.n_faces
    constrained = np.zeros(n_dofs, dtype=bool)
    constrained[:nv] = mesh.boundary_vertex
    constrained[nv:] = mesh.boundary_face

    cells = []
    for k, verts in enumerate(mesh.cells):
        pts = mesh.vertices[list(verts)]
        xc = mesh.cell_masscenters[k]
        h = mesh.cell_diams[k]
        # edge opposite vertex i
        edges = [
            lookup[(min(verts[(i + 1) % 3], verts[(i + 2) % 3]),
                    max(verts[(i + 1) % 3], verts[(i + 2) % 3]))]
            for i in range(3)
        ]
        V = np.empty((6, 6))
        vv, _, _ = _monomials_p2(pts, xc, h)
        V[:3] = vv
        mids = mesh.face_midpoints[edges]
        _, gg, _ = _monomials_p2(mids, xc, h)
        for i, e in enumerate(edges):
            V[3 + i] = gg[i] @ mesh.face_normals[e]
        C = np.linalg.inv(V)
        qx, qw = cell_quadrature(mesh, k, quad_degree)
        mv, mg, mh = _monomials_p2(qx, xc, h)
        cells.append(
            CellOps(
                dofs=np.array([*verts, *(nv + np.array(edges))]),
                qx=qx,
                qw=qw,
                pi=mv @ C,
                grad=np.einsum("qjd,jk->qkd", mg, C),
                hess=btensor.apply(np.einsum("qjab,jk->qkab", mh, C)),
            )
        )
    return DiscretisationOps(mesh, btensor, n_dofs, constrained, cells,
                             scheme="morley")


def morley_interpolant(mesh, ops, u, grad_u):
    """Canonical interpolant: vertex values and edge-mean normal slopes.

    The edge dof is the mean of the normal derivative over the edge (for
    the quadratic reconstruction itself this equals its midpoint value);
    the mean is what makes the per-cell mean-Hessian identity exact.
    """
    nv = mesh.n_vertices
    dofs = np.zeros(ops.n_dofs)
    dofs[:nv] = np.asarray(u(mesh.vertices))
    # five-point Gauss on each edge (degree-9 accurate normal slopes)
    a = mesh.vertices[[fv[0] for fv in mesh.face_vertices]]
    b = mesh.vertices[[fv[1] for fv in mesh.face_vertices]]
    gt, gw = np.polynomial.legendre.leggauss(5)
    mean = np.zeros(mesh.n_faces)
    for t, w in zip(0.5 * (gt + 1.0), 0.5 * gw):
        g = np.asarray(grad_u(a + t * (b - a)))
        mean += w * np.einsum("fd,fd->f", g, mesh.face_normals)
    dofs[nv:] = mean
    dofs[ops.constrained] = 0.0
    return dofs


def adini_ops(mesh, btensor=None, quad_degree=6):
    """Adini nonconforming discretisation on an axis-aligned rectangular mesh.

    Three dofs per vertex: value and the two gradient components.
    """
    if any(len(c) != 4 for c in mesh.cells):
        raise NotRectangular("Adini requires a rectangular mesh")
    btensor = btensor or BTensor("identity")
    nv = mesh.n_vertices
    n_dofs = 3 * nv
    constrained = np.repeat(mesh.boundary_vertex, 3)

    cells = []
    for k, verts in enumerate(mesh.cells):
        pts = mesh.vertices[list(verts)]
        if not (np.isclose(pts[0, 1], pts[1, 1]) and
                np.isclose(pts[1, 0], pts[2, 0])):
            raise NotRectangular(f"cell {k} is not axis-aligned")
        xc = mesh.cell_masscenters[k]
        h = mesh.cell_diams[k]
        vv, gg, _ = _monomials_adini(pts, xc, h)
        V = np.empty((12, 12))
        for i in range(4):
            V[3 * i] = vv[i]
            V[3 * i + 1] = gg[i, :, 0]
            V[3 * i + 2] = gg[i, :, 1]
        C = np.linalg.inv(V)
        qx, qw = cell_quadrature(mesh, k, quad_degree)
        mv, mg, mh = _monomials_adini(qx, xc, h)
        dofs = np.concatenate([[3 * v, 3 * v + 1, 3 * v + 2] for v in verts])
        cells.append(
            CellOps(
                dofs=dofs,
                qx=qx,
                qw=qw,
                pi=mv @ C,
                grad=np.einsum("qjd,jk->qkd", mg, C),
                hess=btensor.apply(np.einsum("qjab,jk->qkab", mh, C)),
            )
        )
    return DiscretisationOps(mesh, btensor, n_dofs, constrained, cells,
                             scheme="adini")


def adini_interpolant(mesh, ops, u, grad_u):
    dofs = np.zeros(ops.n_dofs)
    dofs[0::3] = np.asarray(u(mesh.vertices))
    g = np.asarray(grad_u(mesh.vertices))
    dofs[1::3] = g[:, 0]
    dofs[2::3] = g[:, 1]
    dofs[ops.constrained] = 0.0
    return dofs
