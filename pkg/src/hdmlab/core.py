"""The Hessian-discretisation abstraction.

A discretisation is a set of per-cell sampled operators (function,
gradient and twisted-Hessian reconstructions at quadrature points) over a
dof space with homogeneous clamped constraints. This module assembles and
solves the associated scheme and computes the framework's accuracy
diagnostics: consistency, limit-conformity and coercivity.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .linalg import SparseSystem, solve_spd


class EmptyConstrainedSpace(Exception):
    """No unconstrained dofs (mesh too coarse for the scheme)."""


class PowerIterationStalled(Exception):
    pass


@dataclass(frozen=True)
class BTensor:
    """Linear map on symmetric 2x2 matrices with A = B^T B.

    variant "identity": B xi = xi (full Hessian).
    variant "tracelap": B xi = tr(xi)/sqrt(d) Id (Laplacian only).
    """

    variant: str = "identity"
    dim: int = 2

    def apply(self, xi):
        """Apply B to an array of symmetric matrices, shape (..., d, d)."""
        xi = np.asarray(xi, dtype=float)
        if self.variant == "identity":
            return xi
        if self.variant == "tracelap":
            tr = np.trace(xi, axis1=-2, axis2=-1) / np.sqrt(self.dim)
            return tr[..., None, None] * np.eye(self.dim)
        raise ValueError(f"unknown B variant {self.variant!r}")


@dataclass
class CellOps:
    """Sampled local operators of one cell."""

    dofs: np.ndarray       # (nl,) global dof indices
    qx: np.ndarray         # (nq, 2) quadrature points
    qw: np.ndarray         # (nq,)
    pi: np.ndarray         # (nq, nl) function reconstruction
    grad: np.ndarray       # (nq, nl, 2)
    hess: np.ndarray       # (nq, nl, 2, 2), B already applied
    hess_err: np.ndarray = None  # optional alternative used in error norms


@dataclass
class DiscretisationOps:
    """Quadrature-sampled realization of a Hessian discretisation."""

    mesh: object
    btensor: BTensor
    n_dofs: int
    constrained: np.ndarray        # (n_dofs,) bool
    cells: list                    # list of CellOps
    scheme: str = ""
    rhs_builder: object = None     # optional f -> rhs override

    @property
    def free(self):
        return ~self.constrained

    @property
    def n_free(self):
        return int(self.free.sum())

    def free_index(self):
        """Map global dof -> reduced index (-1 when constrained)."""
        idx = -np.ones(self.n_dofs, dtype=int)
        idx[self.free] = np.arange(self.n_free)
        return idx

    def expand(self, reduced):
        full = np.zeros(self.n_dofs)
        full[self.free] = reduced
        return full


@dataclass
class DiscreteSolution:
    dofs: np.ndarray
    ops: DiscretisationOps
    iterations: int = 0

    def __post_init__(self):
        assert np.all(self.dofs[self.ops.constrained] == 0.0)


def _pair_matrices(ops, kinds):
    """Reduced Gram-type matrices for the requested operator samplings.

    kinds is a sequence of names from {"pi", "grad", "hess"}; one CSR matrix
    per name, all over the free dofs, assembled cell by cell.
    """
    idx = ops.free_index()
    rows = {k: [] for k in kinds}
    cols = {k: [] for k in kinds}
    vals = {k: [] for k in kinds}
    for cell in ops.cells:
        loc = idx[cell.dofs]
        keep = loc >= 0
        if not keep.any():
            continue
        li = loc[keep]
        for k in kinds:
            s = getattr(cell, k)[:, keep]
            if k == "pi":
                m = np.einsum("qi,qj,q->ij", s, s, cell.qw)
            elif k == "grad":
                m = np.einsum("qid,qjd,q->ij", s, s, cell.qw)
            else:
                m = np.einsum("qikl,qjkl,q->ij", s, s, cell.qw)
            rows[k].append(np.repeat(li, li.size))
            cols[k].append(np.tile(li, li.size))
            vals[k].append(m.ravel())
    n = ops.n_free
    out = []
    for k in kinds:
        if rows[k]:
            m = sp.coo_matrix(
                (np.concatenate(vals[k]),
                 (np.concatenate(rows[k]), np.concatenate(cols[k]))),
                shape=(n, n),
            ).tocsr()
        else:
            m = sp.csr_matrix((n, n))
        out.append(m)
    return out


def gram_matrix(ops):
    """Reduced matrix of the bilinear form int H_D^B u : H_D^B v."""
    if ops.n_free == 0:
        raise EmptyConstrainedSpace(ops.scheme or "discretisation")
    return _pair_matrices(ops, ("hess",))[0]


def source_vector(ops, f):
    """Reduced load vector int f Pi_D phi_i by quadrature."""
    idx = ops.free_index()
    b = np.zeros(ops.n_free)
    for cell in ops.cells:
        loc = idx[cell.dofs]
        keep = loc >= 0
        if not keep.any():
            continue
        fv = np.asarray(f(cell.qx), dtype=float)
        np.add.at(b, loc[keep], cell.pi[:, keep].T @ (cell.qw * fv))
    return b


def assemble_hessian_scheme(ops, f):
    """Reduced SPD system of the Hessian scheme for source ``f``."""
    A = gram_matrix(ops)
    if ops.rhs_builder is not None:
        b = ops.rhs_builder(f)
    else:
        b = source_vector(ops, f)
    return SparseSystem(A, b)


def solve_hessian_scheme(ops, f, tol=1e-12):
    system = assemble_hessian_scheme(ops, f)
    x = solve_spd(system, tol=tol)
    return DiscreteSolution(ops.expand(x), ops, iterations=system.iterations)


def apply_sampled(cell, kind, dofs):
    """Evaluate a sampled operator of one cell on a global dof vector."""
    s = getattr(cell, kind)
    if s is None and kind == "hess_err":
        s = cell.hess
    local = dofs[cell.dofs]
    return np.tensordot(s, local, axes=([1], [0]))


@dataclass
class ErrorNorms:
    errL2: float
    errH1: float
    errH2B: float
    relL2: float
    relH1: float
    relH2B: float


def error_norms(sol, problem):
    """Absolute and relative L2 / H1 / twisted-H2 errors by quadrature.

    When the discretisation provides a dedicated error Hessian (gradient
    recovery does), that sampling is compared against the raw Hessian of
    the exact solution; otherwise H_D^B is compared against B applied to it.
    """
    ops = sol.ops
    B = ops.btensor
    e0 = e1 = e2 = n0 = n1 = n2 = 0.0
    for cell in ops.cells:
        w = cell.qw
        u = np.asarray(problem.u(cell.qx))
        gu = np.asarray(problem.grad_u(cell.qx))
        hu = np.asarray(problem.hess_u(cell.qx))
        uh = apply_sampled(cell, "pi", sol.dofs)
        guh = apply_sampled(cell, "grad", sol.dofs)
        if cell.hess_err is not None:
            huh = apply_sampled(cell, "hess_err", sol.dofs)
            hex_ = hu
        else:
            huh = apply_sampled(cell, "hess", sol.dofs)
            hex_ = B.apply(hu)
        e0 += w @ (uh - u) ** 2
        n0 += w @ u ** 2
        e1 += w @ ((guh - gu) ** 2).sum(axis=1)
        n1 += w @ (gu ** 2).sum(axis=1)
        e2 += w @ ((huh - hex_) ** 2).sum(axis=(1, 2))
        n2 += w @ (hex_ ** 2).sum(axis=(1, 2))
    e0, e1, e2 = np.sqrt([e0, e1, e2])
    n0, n1, n2 = np.sqrt([n0, n1, n2])
    return ErrorNorms(e0, e1, e2, e0 / n0, e1 / n1, e2 / n2)


def _factorized_gram(ops):
    G = gram_matrix(ops)
    return G, spla.splu(G.tocsc())


def consistency_measure_SD(ops, u, grad_u, hess_u):
    """Best simultaneous approximation of (u, grad u, H^B u), sum-of-squares.

    Minimizes the sum of squared L2 defects of the three reconstructions
    over the constrained space and returns the square root of the minimum
    (bounds the sum-of-norms variant within a factor sqrt(3)).
    """
    B = ops.btensor
    idx = ops.free_index()
    Mpi, Mgrad, G = _pair_matrices(ops, ("pi", "grad", "hess"))
    b = np.zeros(ops.n_free)
    const = 0.0
    for cell in ops.cells:
        w = cell.qw
        uv = np.asarray(u(cell.qx))
        gv = np.asarray(grad_u(cell.qx))
        hv = B.apply(np.asarray(hess_u(cell.qx)))
        const += w @ uv ** 2 + w @ (gv ** 2).sum(axis=1)
        const += w @ (hv ** 2).sum(axis=(1, 2))
        loc = idx[cell.dofs]
        keep = loc >= 0
        if not keep.any():
            continue
        li = loc[keep]
        np.add.at(b, li, cell.pi[:, keep].T @ (w * uv))
        np.add.at(b, li, np.einsum("qid,qd,q->i", cell.grad[:, keep], gv, w))
        np.add.at(b, li, np.einsum("qikl,qkl,q->i", cell.hess[:, keep], hv, w))
    A = (Mpi + Mgrad + G).tocsc()
    x = spla.splu(A).solve(b)
    val2 = const - b @ x
    return float(np.sqrt(max(val2, 0.0)))


def limit_conformity_WD(ops, xi, div2_xi):
    """Dual norm of the discrete integration-by-parts defect for ``xi``.

    ``div2_xi`` evaluates H : B^T B xi (supplied analytically).
    """
    B = ops.btensor
    idx = ops.free_index()
    b = np.zeros(ops.n_free)
    for cell in ops.cells:
        w = cell.qw
        dv = np.asarray(div2_xi(cell.qx))
        bxi = B.apply(np.asarray(xi(cell.qx)))
        loc = idx[cell.dofs]
        keep = loc >= 0
        if not keep.any():
            continue
        li = loc[keep]
        np.add.at(b, li, cell.pi[:, keep].T @ (w * dv))
        np.add.at(
            b, li, -np.einsum("qikl,qkl,q->i", cell.hess[:, keep], bxi, w)
        )
    G, lu = _factorized_gram(ops)
    y = lu.solve(b)
    return float(np.sqrt(max(b @ y, 0.0)))


def coercivity_measure_CD(ops, rtol=1e-8, maxit=10_000, seed=0):
    """max of the function/gradient-to-Hessian Rayleigh quotients.

    Power iteration on G^{-1} M for the Pi and grad mass matrices.
    """
    Mpi, Mgrad, G = _pair_matrices(ops, ("pi", "grad", "hess"))
    lu = spla.splu(G.tocsc())
    rng = np.random.default_rng(seed)
    best = 0.0
    for M in (Mpi, Mgrad):
        x = rng.standard_normal(ops.n_free)
        x /= np.linalg.norm(x)
        lam = 0.0
        for _ in range(maxit):
            y = lu.solve(M @ x)
            ny = np.linalg.norm(y)
            if ny == 0.0:
                lam = 0.0
                break
            y /= ny
            lam_new = float(y @ (M @ y)) / float(y @ (G @ y))
            done = abs(lam_new - lam) <= rtol * abs(lam_new)
            lam = lam_new
            x = y
            if done:
                break
        else:
            raise PowerIterationStalled(f"lambda = {lam:.6e}")
        best = max(best, np.sqrt(lam))
    return float(best)
