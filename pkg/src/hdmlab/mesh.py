"""Polytopal meshes of the unit square and the L-shaped domain.

Structured triangular (criss-cross) and rectangular families with uniform
refinement, cell-center rules for two-point flux admissibility, and a
line-based text dump/load format.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


class DegenerateFace(Exception):
    """A cell center lies on (or too close to) one of its faces."""


# inward nudge applied to circumcenters that fall on the cell boundary,
# as a fraction of the cell diameter
CENTER_NUDGE = 1e-3


@dataclass
class Mesh:
    """Immutable 2D polytopal mesh (triangles and/or axis-aligned quads).

    ``faces[i]`` joins ``face_vertices[i]``; its unit normal points out of
    the owner cell ``face_cells[i, 0]`` (the lower adjacent cell index).
    ``face_cells[i, 1]`` is -1 on the boundary.
    """

    vertices: np.ndarray          # (nv, 2)
    cells: list                   # per cell: tuple of vertex indices, CCW
    cell_centers: np.ndarray      # (nc, 2) chosen points x_K
    cell_masscenters: np.ndarray  # (nc, 2)
    cell_areas: np.ndarray        # (nc,)
    cell_diams: np.ndarray        # (nc,)
    face_vertices: np.ndarray     # (nf, 2) vertex pairs
    face_cells: np.ndarray        # (nf, 2) owner, neighbour or -1
    face_normals: np.ndarray      # (nf, 2) unit, out of owner
    face_measures: np.ndarray     # (nf,)
    face_midpoints: np.ndarray    # (nf, 2)
    cell_faces: list              # per cell: array of face indices
    cell_face_signs: list         # per cell: +1 if owner else -1
    boundary_vertex: np.ndarray = field(default=None)  # (nv,) bool
    table_h: float = None         # h reported in convergence tables

    @property
    def n_cells(self):
        return len(self.cells)

    @property
    def n_vertices(self):
        return self.vertices.shape[0]

    @property
    def n_faces(self):
        return self.face_vertices.shape[0]

    @property
    def boundary_face(self):
        return self.face_cells[:, 1] < 0

    @property
    def h(self):
        return float(self.cell_diams.max())

    @property
    def area(self):
        return float(self.cell_areas.sum())

    def outward_normal(self, cell, face):
        sign = 1.0 if self.face_cells[face, 0] == cell else -1.0
        return sign * self.face_normals[face]

    def regularity_ratio(self):
        """max over cells of h_K / rho_K (rho_K = inradius-like measure)."""
        ratios = []
        for k, verts in enumerate(self.cells):
            pts = self.vertices[list(verts)]
            if len(verts) == 3:
                a = np.linalg.norm(pts[1] - pts[0])
                b = np.linalg.norm(pts[2] - pts[1])
                c = np.linalg.norm(pts[0] - pts[2])
                rho = 2.0 * self.cell_areas[k] / (a + b + c)
            else:
                # distance from the mass center to each edge line
                xc = self.cell_masscenters[k]
                rho = np.inf
                for i in range(len(verts)):
                    p, q = pts[i], pts[(i + 1) % len(verts)]
                    t = (q - p) / np.linalg.norm(q - p)
                    n = np.array([t[1], -t[0]])
                    rho = min(rho, abs(np.dot(xc - p, n)))
            ratios.append(self.cell_diams[k] / rho)
        return float(max(ratios))


def _polygon_area_centroid(pts):
    x, y = pts[:, 0], pts[:, 1]
    xs, ys = np.roll(x, -1), np.roll(y, -1)
    cross = x * ys - xs * y
    area = 0.5 * cross.sum()
    cx = ((x + xs) * cross).sum() / (6.0 * area)
    cy = ((y + ys) * cross).sum() / (6.0 * area)
    return area, np.array([cx, cy])


def build_mesh(vertices, cells, centers=None, table_h=None):
    """Assemble the full face/incidence structure from vertices and cells.

    Cells must be given as CCW vertex cycles. ``centers`` defaults to the
    mass centers.
    """
    vertices = np.asarray(vertices, dtype=float)
    nc = len(cells)
    areas = np.empty(nc)
    diams = np.empty(nc)
    masscenters = np.empty((nc, 2))
    for k, verts in enumerate(cells):
        pts = vertices[list(verts)]
        area, cen = _polygon_area_centroid(pts)
        if area <= 0:
            raise ValueError(f"cell {k} is not CCW or degenerate")
        areas[k] = area
        masscenters[k] = cen
        diams[k] = max(
            np.linalg.norm(pts[i] - pts[j])
            for i in range(len(verts))
            for j in range(i + 1, len(verts))
        )
    centers = masscenters.copy() if centers is None else np.asarray(centers, float)

    face_index = {}
    fverts, fcells = [], []
    cell_faces = [[] for _ in range(nc)]
    cell_face_signs = [[] for _ in range(nc)]
    for k, verts in enumerate(cells):
        m = len(verts)
        for i in range(m):
            a, b = verts[i], verts[(i + 1) % m]
            key = (a, b) if a < b else (b, a)
            if key not in face_index:
                face_index[key] = len(fverts)
                fverts.append((a, b))
                fcells.append([k, -1])
                cell_faces[k].append(face_index[key])
                cell_face_signs[k].append(1)
            else:
                f = face_index[key]
                if fcells[f][1] != -1:
                    raise ValueError("face shared by more than two cells")
                fcells[f][1] = k
                cell_faces[k].append(f)
                cell_face_signs[k].append(-1)

    fverts = np.array(fverts, dtype=int)
    fcells = np.array(fcells, dtype=int)
    p = vertices[fverts[:, 0]]
    q = vertices[fverts[:, 1]]
    t = q - p
    meas = np.linalg.norm(t, axis=1)
    # CCW traversal by the owner puts the outward normal at (dy, -dx)
    normals = np.column_stack([t[:, 1], -t[:, 0]]) / meas[:, None]
    mids = 0.5 * (p + q)

    boundary_vertex = np.zeros(vertices.shape[0], dtype=bool)
    for f in np.nonzero(fcells[:, 1] < 0)[0]:
        boundary_vertex[fverts[f]] = True

    return Mesh(
        vertices=vertices,
        cells=[tuple(c) for c in cells],
        cell_centers=centers,
        cell_masscenters=masscenters,
        cell_areas=areas,
        cell_diams=diams,
        face_vertices=fverts,
        face_cells=fcells,
        face_normals=normals,
        face_measures=meas,
        face_midpoints=mids,
        cell_faces=[np.array(f, dtype=int) for f in cell_faces],
        cell_face_signs=[np.array(s, dtype=int) for s in cell_face_signs],
        boundary_vertex=boundary_vertex,
        table_h=table_h,
    )


def _crisscross(x0, y0, nx, ny, s, vindex, vlist, cells, centers, center_rule):
    """Criss-cross triangles on an nx-by-ny grid of squares of side s."""

    def vid(x, y):
        key = (round(x / s * 2) , round(y / s * 2))
        if key not in vindex:
            vindex[key] = len(vlist)
            vlist.append((x, y))
        return vindex[key]

    for i in range(nx):
        for j in range(ny):
            xa, ya = x0 + i * s, y0 + j * s
            bl = vid(xa, ya)
            br = vid(xa + s, ya)
            tr = vid(xa + s, ya + s)
            tl = vid(xa, ya + s)
            c = vid(xa + 0.5 * s, ya + 0.5 * s)
            sq_center = np.array([xa + 0.5 * s, ya + 0.5 * s])
            # south, east, north, west triangles (all CCW)
            for a, b in ((bl, br), (br, tr), (tr, tl), (tl, bl)):
                cells.append((a, b, c))
                pa, pb = np.array(vlist[a]), np.array(vlist[b])
                if center_rule == "circumcenter":
                    # circumcenter of a right isoceles triangle is the
                    # hypotenuse midpoint, on the cell boundary; nudge it
                    # inward so two-point distances stay positive
                    m = 0.5 * (pa + pb)
                    inward = sq_center - m
                    inward /= np.linalg.norm(inward)
                    centers.append(m + CENTER_NUDGE * s * inward)
                else:
                    centers.append((pa + pb + sq_center) / 3.0)


def generate_square_triangular(level, center_rule="masscenter"):
    """Criss-cross triangulation of the unit square.

    A 2^level x 2^level grid of squares, each split into four triangles by
    its diagonals. ``center_rule`` is "circumcenter" (Delta-adapted, centers
    nudged off the hypotenuse) or "masscenter".
    """
    if level < 0:
        raise ValueError("level must be >= 0")
    if center_rule not in ("circumcenter", "masscenter"):
        raise ValueError(f"unknown center rule {center_rule!r}")
    n = 2 ** level
    s = 1.0 / n
    vindex, vlist, cells, centers = {}, [], [], []
    _crisscross(0.0, 0.0, n, n, s, vindex, vlist, cells, centers, center_rule)
    return build_mesh(vlist, cells, centers, table_h=s * np.sqrt(2.0) / 2.0)


def generate_square_rectangular(level):
    """Uniform 2^level x 2^level squares on the unit square, x_K = mass center."""
    if level < 0:
        raise ValueError("level must be >= 0")
    n = 2 ** level
    s = 1.0 / n
    vlist = [(i * s, j * s) for j in range(n + 1) for i in range(n + 1)]

    def vid(i, j):
        return j * (n + 1) + i

    cells = [
        (vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1))
        for j in range(n)
        for i in range(n)
    ]
    return build_mesh(vlist, cells, table_h=s * np.sqrt(2.0))


def generate_lshape_triangular(level, center_rule="masscenter"):
    """Criss-cross triangulation of (-1,1)^2 minus the quadrant [0,1)x(-1,0]."""
    if level < 0:
        raise ValueError("level must be >= 0")
    if center_rule not in ("circumcenter", "masscenter"):
        raise ValueError(f"unknown center rule {center_rule!r}")
    n = 2 ** level
    s = 1.0 / n
    vindex, vlist, cells, centers = {}, [], [], []
    for x0, y0 in ((0.0, 0.0), (-1.0, 0.0), (-1.0, -1.0)):
        _crisscross(x0, y0, n, n, s, vindex, vlist, cells, centers, center_rule)
    return build_mesh(vlist, cells, centers, table_h=s * np.sqrt(2.0) / 2.0)


@dataclass(frozen=True)
class MeshFamily:
    """A refinement family: domain, element type and center rule."""

    domain: str = "unit-square"     # unit-square | L-shape
    element: str = "triangle"       # triangle | rectangle
    center_rule: str = "masscenter"  # circumcenter | masscenter

    def build(self, level):
        if self.domain == "L-shape":
            if self.element != "triangle":
                raise ValueError("only triangular L-shape meshes are supported")
            return generate_lshape_triangular(level, self.center_rule)
        if self.element == "triangle":
            return generate_square_triangular(level, self.center_rule)
        return generate_square_rectangular(level)


@dataclass
class AdmissibilityReport:
    admissible: bool
    super_admissible: bool
    d_sigma: np.ndarray            # (nf,) two-point distances
    failed_faces: list             # face indices violating orthogonality


def face_distances(mesh):
    """Orthogonal distances d_sigma per face; raises on degenerate centers."""
    nf = mesh.n_faces
    d = np.empty(nf)
    for f in range(nf):
        n = mesh.face_normals[f]
        mid = mesh.face_midpoints[f]
        k, l = mesh.face_cells[f]
        dk = abs(np.dot(mesh.cell_centers[k] - mid, n))
        if l >= 0:
            dk += abs(np.dot(mesh.cell_centers[l] - mid, n))
        d[f] = dk
        if d[f] <= 1e-14:
            raise DegenerateFace(f"face {f}: d_sigma = {d[f]:.3e}")
    return d


def check_delta_adapted(mesh, tol=1e-10):
    """Per-face orthogonality / intersection verdicts for the TPFA scheme."""
    d = face_distances(mesh)
    admissible = True
    superadm = True
    failed = []
    for f in range(mesh.n_faces):
        p = mesh.vertices[mesh.face_vertices[f, 0]]
        q = mesh.vertices[mesh.face_vertices[f, 1]]
        t = (q - p) / mesh.face_measures[f]
        k, l = mesh.face_cells[f]
        xk = mesh.cell_centers[k]
        if l >= 0:
            xl = mesh.cell_centers[l]
            dx = xl - xk
            if abs(np.dot(dx, t)) > tol * np.linalg.norm(dx):
                admissible = False
                superadm = False
                failed.append(f)
                continue
            # foot of the (orthogonal) connecting line on the face
            foot = xk - np.dot(xk - p, mesh.face_normals[f]) * mesh.face_normals[f]
        else:
            foot = xk - np.dot(xk - p, mesh.face_normals[f]) * mesh.face_normals[f]
        s = np.dot(foot - p, t)
        if s < -tol or s > mesh.face_measures[f] + tol:
            admissible = False
            superadm = False
            failed.append(f)
            continue
        if np.linalg.norm(foot - mesh.face_midpoints[f]) > tol:
            superadm = False
    return AdmissibilityReport(admissible, superadm, d, failed)


def dump_mesh(mesh, path):
    """Write the line-based text format: v / c / f records, 17 digits."""
    with open(path, "w") as fh:
        for x, y in mesh.vertices:
            fh.write(f"v {x:.17g} {y:.17g}\n")
        for k, verts in enumerate(mesh.cells):
            vs = " ".join(str(v) for v in verts)
            cx, cy = mesh.cell_centers[k]
            fh.write(f"c {k} {vs} {cx:.17g} {cy:.17g}\n")
        for f in range(mesh.n_faces):
            a, b = mesh.face_vertices[f]
            k, l = mesh.face_cells[f]
            fh.write(f"f {a} {b} {k} {l}\n")


def load_mesh(path):
    """Rebuild a mesh from the text format (faces are re-derived)."""
    vlist, cells, centers = [], [], []
    with open(path) as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            if parts[0] == "v":
                vlist.append((float(parts[1]), float(parts[2])))
            elif parts[0] == "c":
                verts = tuple(int(p) for p in parts[2:-2])
                cells.append(verts)
                centers.append((float(parts[-2]), float(parts[-1])))
    return build_mesh(vlist, cells, np.array(centers))
