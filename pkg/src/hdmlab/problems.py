"""Manufactured exact solutions for the clamped biharmonic problem.

Each problem carries vectorized callables for u, its gradient, Hessian,
Laplacian and the source f = Delta^2 u. The derivative chains are derived
symbolically once per problem (and cached), then compiled to numpy; a
finite-difference bilaplacian gate and clamped-boundary samples are
checked at construction time.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
import sympy as sym


class EvaluationNearSingularity(Exception):
    pass


class InconsistentSource(Exception):
    """The analytic source failed the finite-difference bilaplacian gate."""


OMEGA = 3.0 * np.pi / 2.0


def singular_exponent(initial=0.5444837367, iterations=3):
    """Root of sin^2(g*omega) = g^2 sin^2(omega) near the tabulated value."""
    g = initial
    s2 = np.sin(OMEGA) ** 2
    for _ in range(iterations):
        F = np.sin(g * OMEGA) ** 2 - g * g * s2
        dF = OMEGA * np.sin(2.0 * g * OMEGA) - 2.0 * g * s2
        g -= F / dF
    return g


@dataclass
class Problem:
    name: str
    label: str
    domain: str                    # "square" | "lshape"
    u: object
    grad_u: object
    hess_u: object
    lap_u: object
    f: object


def _as_points(x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    return np.atleast_2d(x), single


def _vectorize_scalar(fn):
    def call(pts):
        pts, single = _as_points(pts)
        v = np.asarray(fn(pts[:, 0], pts[:, 1]), dtype=float)
        v = np.broadcast_to(v, pts.shape[:1]).copy()
        return v[0] if single else v
    return call


def _vectorize_vector(fns):
    def call(pts):
        pts, single = _as_points(pts)
        cols = [np.broadcast_to(np.asarray(f(pts[:, 0], pts[:, 1]),
                                           dtype=float), pts.shape[:1])
                for f in fns]
        v = np.stack(cols, axis=1)
        return v[0] if single else v
    return call


def _vectorize_matrix(fxx, fxy, fyy):
    def call(pts):
        pts, single = _as_points(pts)
        n = pts.shape[0]
        xx = np.broadcast_to(np.asarray(fxx(pts[:, 0], pts[:, 1]),
                                        dtype=float), (n,))
        xy = np.broadcast_to(np.asarray(fxy(pts[:, 0], pts[:, 1]),
                                        dtype=float), (n,))
        yy = np.broadcast_to(np.asarray(fyy(pts[:, 0], pts[:, 1]),
                                        dtype=float), (n,))
        h = np.empty((n, 2, 2))
        h[:, 0, 0] = xx
        h[:, 0, 1] = h[:, 1, 0] = xy
        h[:, 1, 1] = yy
        return h[0] if single else h
    return call


def _square_problem(name, label, expr):
    x, y = sym.symbols("x y", real=True)
    ux = sym.diff(expr, x)
    uy = sym.diff(expr, y)
    uxx = sym.diff(ux, x)
    uxy = sym.diff(ux, y)
    uyy = sym.diff(uy, y)
    lap = uxx + uyy
    f = sym.diff(lap, x, 2) + sym.diff(lap, y, 2)
    L = lambda e: sym.lambdify((x, y), e, "numpy")
    problem = Problem(
        name=name,
        label=label,
        domain="square",
        u=_vectorize_scalar(L(expr)),
        grad_u=_vectorize_vector([L(ux), L(uy)]),
        hess_u=_vectorize_matrix(L(uxx), L(uxy), L(uyy)),
        lap_u=_vectorize_scalar(L(lap)),
        f=_vectorize_scalar(L(sym.expand(f))),
    )
    _validate(problem)
    return problem


@functools.lru_cache(maxsize=None)
def problem_sq_sin2():
    x, y = sym.symbols("x y", real=True)
    return _square_problem(
        "sq-sin2", "sin^2 product on the unit square",
        sym.sin(sym.pi * x) ** 2 * sym.sin(sym.pi * y) ** 2,
    )


@functools.lru_cache(maxsize=None)
def problem_sq_poly():
    x, y = sym.symbols("x y", real=True)
    return _square_problem(
        "sq-poly", "clamped bubble polynomial",
        x ** 2 * y ** 2 * (1 - x) ** 2 * (1 - y) ** 2,
    )


@functools.lru_cache(maxsize=None)
def problem_sq_trig():
    x, y = sym.symbols("x y", real=True)
    bubble = x ** 2 * y ** 2 * (1 - x) ** 2 * (1 - y) ** 2
    return _square_problem(
        "sq-trig", "bubble with trigonometric modulation",
        bubble * (sym.cos(2 * sym.pi * x) + sym.sin(2 * sym.pi * y)),
    )


@functools.lru_cache(maxsize=None)
def problem_sq_exp():
    x, y = sym.symbols("x y", real=True)
    bubble = x ** 3 * y ** 3 * (1 - x) ** 3 * (1 - y) ** 3
    return _square_problem(
        "sq-exp", "cubic bubble with exponential modulation",
        bubble * (sym.exp(x) * sym.sin(2 * sym.pi * x)
                  + sym.cos(2 * sym.pi * x)),
    )


def _polar_guard(fn):
    """Wrap an (r, t)-lambdified callable as a Cartesian point function."""
    def call(xv, yv):
        r = np.hypot(xv, yv)
        if np.any(r < 1e-12):
            raise EvaluationNearSingularity("evaluation at the re-entrant corner")
        t = np.arctan2(yv, xv)
        t = np.where(t < 0.0, t + 2.0 * np.pi, t)
        return fn(r, t)
    return call


@functools.lru_cache(maxsize=None)
def problem_lshape_singular():
    """Singular solution on the L-shaped domain (-1,1)^2 minus a quadrant."""
    gam = singular_exponent()
    r, t = sym.symbols("r t", positive=True, real=True)
    w = sym.Float(OMEGA, 17)
    g = sym.Float(gam, 17)
    gfun = (
        (sym.sin((g - 1) * w) / (g - 1) - sym.sin((g + 1) * w) / (g + 1))
        * (sym.cos((g - 1) * t) - sym.cos((g + 1) * t))
        - (sym.sin((g - 1) * t) / (g - 1) - sym.sin((g + 1) * t) / (g + 1))
        * (sym.cos((g - 1) * w) - sym.cos((g + 1) * w))
    )
    bubble = (r ** 2 * sym.cos(t) ** 2 - 1) ** 2 \
        * (r ** 2 * sym.sin(t) ** 2 - 1) ** 2
    u = bubble * r ** (1 + g) * gfun

    def Dx(e):
        return sym.cos(t) * sym.diff(e, r) - sym.sin(t) / r * sym.diff(e, t)

    def Dy(e):
        return sym.sin(t) * sym.diff(e, r) + sym.cos(t) / r * sym.diff(e, t)

    ux, uy = Dx(u), Dy(u)
    uxx, uxy, uyy = Dx(ux), Dy(ux), Dy(uy)
    lap = sym.expand(uxx + uyy)
    f = sym.expand(Dx(Dx(lap)) + Dy(Dy(lap)))
    L = lambda e: _polar_guard(sym.lambdify((r, t), e, "numpy"))
    problem = Problem(
        name="lshape",
        label="singular corner solution on the L-shape",
        domain="lshape",
        u=_vectorize_scalar(L(u)),
        grad_u=_vectorize_vector([L(ux), L(uy)]),
        hess_u=_vectorize_matrix(L(uxx), L(uxy), L(uyy)),
        lap_u=_vectorize_scalar(L(lap)),
        f=_vectorize_scalar(L(f)),
    )
    _validate(problem)
    return problem


def by_name(name):
    table = {
        "sq-sin2": problem_sq_sin2,
        "sq-poly": problem_sq_poly,
        "sq-trig": problem_sq_trig,
        "sq-exp": problem_sq_exp,
        "lshape": problem_lshape_singular,
    }
    if name not in table:
        raise KeyError(f"unknown problem {name!r}")
    return table[name]()


def interior_points(problem, n, seed=0, margin=5e-3):
    """Random interior sample points clear of the boundary (and corner)."""
    rng = np.random.default_rng(seed)
    pts = []
    while len(pts) < n:
        if problem.domain == "square":
            p = rng.uniform(margin, 1.0 - margin, size=2)
        else:
            p = rng.uniform(-1.0 + margin, 1.0 - margin, size=2)
            inside = not (p[0] > -margin and p[1] < margin)
            if not (inside and np.hypot(*p) > 0.1):
                continue
        pts.append(p)
    return np.array(pts)


def boundary_points(problem, n_per_side=50):
    s = np.linspace(0.0, 1.0, n_per_side)
    if problem.domain == "square":
        segs = [((0, 0), (1, 0)), ((1, 0), (1, 1)),
                ((1, 1), (0, 1)), ((0, 1), (0, 0))]
    else:
        segs = [((0, 0), (1, 0)), ((1, 0), (1, 1)), ((1, 1), (-1, 1)),
                ((-1, 1), (-1, -1)), ((-1, -1), (0, -1)), ((0, -1), (0, 0))]
    pts = []
    for a, b in segs:
        a, b = np.array(a, float), np.array(b, float)
        pts.append(a + s[:, None] * (b - a))
    pts = np.vstack(pts)
    if problem.domain == "lshape":
        pts = pts[np.hypot(pts[:, 0], pts[:, 1]) > 1e-9]
    return pts


def fd_bilaplacian(u, pts, h=1e-3):
    """Composition of two centered 5-point Laplacians."""
    def lap(p):
        e1 = np.array([h, 0.0])
        e2 = np.array([0.0, h])
        return (u(p + e1) + u(p - e1) + u(p + e2) + u(p - e2)
                - 4.0 * u(p)) / h ** 2
    e1 = np.array([h, 0.0])
    e2 = np.array([0.0, h])
    return (lap(pts + e1) + lap(pts - e1) + lap(pts + e2) + lap(pts - e2)
            - 4.0 * lap(pts)) / h ** 2


def _validate(problem):
    fd_tol = 1e-3 if problem.domain == "lshape" else 1e-4
    bc_tol = 1e-10 if problem.domain == "lshape" else 1e-12
    pts = interior_points(problem, 100, seed=12345)
    fv = problem.f(pts)
    fd = fd_bilaplacian(problem.u, pts)
    # defect relative to the magnitude of f over the sample
    bad = np.abs(fv - fd) / np.abs(fv).max()
    if bad.max() > fd_tol:
        raise InconsistentSource(
            f"{problem.name}: FD defect {bad.max():.3e} exceeds {fd_tol:.0e}"
        )
    bpts = boundary_points(problem)
    ub = np.abs(problem.u(bpts)).max()
    gb = np.abs(problem.grad_u(bpts)).max()
    if max(ub, gb) > bc_tol:
        raise InconsistentSource(
            f"{problem.name}: clamped boundary defect {max(ub, gb):.3e}"
        )
