"""Sparse symmetric solves and numerical quadrature."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp


class NotConverged(Exception):
    def __init__(self, iterations, residual):
        super().__init__(f"CG: residual {residual:.3e} after {iterations} iterations")
        self.iterations = iterations
        self.residual = residual


class NonPositiveCurvature(Exception):
    """p^T A p <= 0 during CG; the assembled matrix is not SPD."""


class UnsupportedDegree(Exception):
    pass


@dataclass
class SparseSystem:
    """Symmetric sparse system over the unconstrained dofs."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    solution: np.ndarray = None
    iterations: int = 0

    @property
    def n(self):
        return self.rhs.shape[0]

    def symmetry_defect(self):
        d = abs(self.matrix - self.matrix.T)
        return float(d.max()) if d.nnz else 0.0


def solve_spd(system, tol=1e-12):
    """Jacobi-preconditioned conjugate gradient; stores and returns the solution.

    The relative residual ||Ax-b||/||b|| is driven below ``tol``. Raises
    NotConverged after 50*n iterations or on stagnation above the target,
    NonPositiveCurvature if the matrix is found indefinite.
    """
    A = system.matrix
    b = system.rhs
    nb = np.linalg.norm(b)
    if nb == 0.0:
        system.solution = np.zeros_like(b)
        system.iterations = 0
        return system.solution
    dinv = 1.0 / A.diagonal()
    if not np.all(np.isfinite(dinv)) or np.any(A.diagonal() <= 0):
        raise NonPositiveCurvature("non-positive diagonal entry")
    x = np.zeros_like(b)
    r = b.copy()
    z = dinv * r
    p = z.copy()
    rz = float(r @ z)
    maxit = 50 * system.n
    best = np.inf
    stall = 0
    for it in range(1, maxit + 1):
        Ap = A @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise NonPositiveCurvature(f"p^T A p = {pAp:.3e} at iteration {it}")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        res = np.linalg.norm(r) / nb
        if res <= tol:
            system.solution = x
            system.iterations = it
            return x
        if res < best * (1.0 - 1e-12):
            best = res
            stall = 0
        else:
            stall += 1
            # CG can plateau for long stretches on ill-conditioned systems;
            # only a very long stall is treated as a round-off floor
            if stall > 5000:
                # recompute the true residual before giving up: the
                # recursive residual can drift at round-off level
                res_true = np.linalg.norm(b - A @ x) / nb
                if res_true <= tol:
                    system.solution = x
                    system.iterations = it
                    return x
                raise NotConverged(it, res_true)
        z = dinv * r
        rz_new = float(r @ z)
        beta = rz_new / rz
        rz = rz_new
        p = z + beta * p
    raise NotConverged(maxit, np.linalg.norm(b - A @ x) / nb)


def dump_matrix(matrix, path):
    """Coordinate text format: one `i j value` line per stored entry."""
    coo = matrix.tocoo()
    with open(path, "w") as fh:
        for i, j, v in zip(coo.row, coo.col, coo.data):
            fh.write(f"{i} {j} {v:.17g}\n")


@dataclass
class QuadratureRule:
    """Points and weights on a reference element ([0,1]^2 or unit triangle)."""

    element: str                  # "triangle" | "rectangle"
    points: np.ndarray            # (nq, 2) reference coordinates
    weights: np.ndarray           # (nq,)
    degree: int = 0

    def __post_init__(self):
        self._verify()

    def _verify(self):
        ref = 0.5 if self.element == "triangle" else 1.0
        if abs(self.weights.sum() - ref) > 1e-13:
            raise AssertionError("weights do not sum to the element measure")
        x, y = self.points[:, 0], self.points[:, 1]
        for a in range(self.degree + 1):
            for b in range(self.degree + 1 - a):
                got = float(self.weights @ (x ** a * y ** b))
                if self.element == "triangle":
                    # int over {x,y>0, x+y<1} of x^a y^b
                    exact = (
                        math.factorial(a) * math.factorial(b)
                        / math.factorial(a + b + 2)
                    )
                else:
                    exact = 1.0 / ((a + 1) * (b + 1))
                if abs(got - exact) > 1e-13 * max(1.0, abs(exact)):
                    raise AssertionError(
                        f"rule not exact for x^{a} y^{b}: {got} vs {exact}"
                    )


def _gauss_legendre01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


def gauss_rectangle(degree):
    """Tensor Gauss-Legendre rule on [0,1]^2, exact up to ``degree``."""
    if not 1 <= degree <= 8:
        raise UnsupportedDegree(str(degree))
    n = degree // 2 + 1
    x, w = _gauss_legendre01(n)
    X, Y = np.meshgrid(x, x, indexing="ij")
    W = np.outer(w, w)
    return QuadratureRule(
        "rectangle",
        np.column_stack([X.ravel(), Y.ravel()]),
        W.ravel(),
        degree=degree,
    )


def gauss_triangle(degree):
    """Collapsed (Duffy) tensor rule on the unit triangle, exact up to ``degree``.

    The map (u,v) -> (u, v(1-u)) raises the u-degree by one, hence the
    extra point in that direction.
    """
    if not 1 <= degree <= 8:
        raise UnsupportedDegree(str(degree))
    nu = (degree + 1) // 2 + 1
    nv = degree // 2 + 1
    u, wu = _gauss_legendre01(nu)
    v, wv = _gauss_legendre01(nv)
    U, V = np.meshgrid(u, v, indexing="ij")
    X = U
    Y = V * (1.0 - U)
    W = np.outer(wu, wv) * (1.0 - U)
    return QuadratureRule(
        "triangle",
        np.column_stack([X.ravel(), Y.ravel()]),
        W.ravel(),
        degree=degree,
    )


def cell_quadrature(mesh, cell, degree):
    """Physical points and weights on one mesh cell."""
    verts = mesh.cells[cell]
    pts = mesh.vertices[list(verts)]
    if len(verts) == 3:
        rule = gauss_triangle(degree)
        a, b, c = pts
        J = np.column_stack([b - a, c - a])
        x = a + rule.points @ J.T
        # |det J| maps the reference measure 1/2 to the triangle area
        w = rule.weights * abs(np.linalg.det(J))
        return x, w
    rule = gauss_rectangle(degree)
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    span = hi - lo
    x = lo + rule.points * span
    w = rule.weights * span[0] * span[1]
    return x, w
