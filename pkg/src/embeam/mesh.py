"""Subdomain triangulations.

Each polygonal subdomain is meshed independently (meshes need not match
across the interface network). Triangulation of a general simple polygon
uses a Delaunay kernel: boundary points are laid out along the polygon
edges at the target spacing, an interior grid is kept clear of the
boundary, and triangles outside the polygon are discarded. Boundary
conformity and the size bound are verified, with retries at smaller
spacing if either fails. Rectangles can use an exact structured split.

Boundary edges carry the index of the polygon edge they lie on, which is
how interface segments are later matched to bulk edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import Delaunay

from .elasticity import triangle_area, triangle_diameter

__all__ = [
    "MeshError",
    "SubdomainMesh",
    "triangulate_subdomain",
    "rectangle_mesh",
    "write_mesh_text",
    "read_mesh_text",
    "point_on_segment",
    "polygon_contains",
]

GEOM_RTOL = 1e-12


class MeshError(ValueError):
    """Invalid geometry or a failed meshing attempt."""


@dataclass(frozen=True)
class SubdomainMesh:
    """Triangulation of one polygonal subdomain.

    nodes: (n, 2) float array. triangles: (m, 3) int array, counterclockwise.
    boundary_edges: (k, 3) int array of (triangle, local edge, tag) where
    local edge e runs from vertex e to vertex (e+1) % 3 of the triangle and
    tag is the polygon edge index (-1 when unknown).
    """

    nodes: np.ndarray
    triangles: np.ndarray
    subdomain_id: int
    boundary_edges: np.ndarray

    def __post_init__(self) -> None:
        nodes = np.ascontiguousarray(np.asarray(self.nodes, dtype=float))
        tris = np.ascontiguousarray(np.asarray(self.triangles, dtype=np.int64))
        bed = np.ascontiguousarray(np.asarray(self.boundary_edges, dtype=np.int64))
        if bed.size == 0:
            bed = bed.reshape(0, 3)
        for arr, name in ((nodes, "nodes"), (tris, "triangles"), (bed, "boundary_edges")):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        areas = np.array([triangle_area(nodes[t]) for t in tris])
        if tris.size and areas.min() <= 0.0:
            bad = int(np.argmin(areas))
            raise MeshError(
                f"subdomain {self.subdomain_id}: triangle {bad} has signed area "
                f"{areas[bad]:.3e} (must be positive)"
            )

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    def triangle_coords(self, tri: int) -> np.ndarray:
        return self.nodes[self.triangles[tri]]

    def edge_nodes(self, tri: int, local_edge: int) -> tuple[int, int]:
        conn = self.triangles[tri]
        return int(conn[local_edge]), int(conn[(local_edge + 1) % 3])

    def max_diameter(self) -> float:
        return max(triangle_diameter(self.nodes[t]) for t in self.triangles)


# ---------------------------------------------------------------------------
# geometric predicates


def polygon_contains(polygon: np.ndarray, p: np.ndarray) -> bool:
    """Ray-casting point-in-polygon test (points on the boundary count as in)."""
    poly = np.asarray(polygon, dtype=float)
    x, y = float(p[0]), float(p[1])
    diam = max(np.ptp(poly[:, 0]), np.ptp(poly[:, 1]))
    tol = 1e-12 * max(diam, 1.0)
    inside = False
    m = len(poly)
    for i in range(m):
        a, b = poly[i], poly[(i + 1) % m]
        if _dist_to_segment(np.array([x, y]), a, b) <= tol:
            return True
        if (a[1] > y) != (b[1] > y):
            xc = a[0] + (y - a[1]) / (b[1] - a[1]) * (b[0] - a[0])
            if x < xc:
                inside = not inside
    return inside


def _dist_to_segment(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> float:
    d = b - a
    L2 = float(d @ d)
    if L2 == 0.0:
        return float(np.linalg.norm(p - a))
    u = np.clip(float((p - a) @ d) / L2, 0.0, 1.0)
    return float(np.linalg.norm(p - (a + u * d)))


def point_on_segment(p: np.ndarray, a: np.ndarray, b: np.ndarray, tol: float) -> bool:
    return _dist_to_segment(np.asarray(p, float), np.asarray(a, float), np.asarray(b, float)) <= tol


def _validate_polygon(polygon: np.ndarray) -> np.ndarray:
    poly = np.asarray(polygon, dtype=float)
    if poly.ndim != 2 or poly.shape[1] != 2 or len(poly) < 3:
        raise MeshError("polygon must be a list of at least 3 planar points")
    diam = max(np.ptp(poly[:, 0]), np.ptp(poly[:, 1]))
    tol = 1e-12 * max(diam, 1.0)
    m = len(poly)
    for i in range(m):
        if np.linalg.norm(poly[(i + 1) % m] - poly[i]) <= tol:
            raise MeshError(f"degenerate polygon: vertices {i} and {(i + 1) % m} coincide")
    area2 = 0.0
    for i in range(m):
        a, b = poly[i], poly[(i + 1) % m]
        area2 += a[0] * b[1] - b[0] * a[1]
    if area2 <= tol * diam:
        raise MeshError("degenerate polygon: vanishing or negative area (must be counterclockwise)")
    for i in range(m):
        prv, cur, nxt = poly[i - 1], poly[i], poly[(i + 1) % m]
        d1, d2 = cur - prv, nxt - cur
        cross = d1[0] * d2[1] - d1[1] * d2[0]
        if abs(cross) <= tol * diam and float(d1 @ d2) < 0.0:
            raise MeshError(f"degenerate polygon: spike at vertex {i}")
    return poly


def _boundary_points(poly: np.ndarray, h: float) -> np.ndarray:
    """Points along the polygon edges at spacing <= h; vertices appear once."""
    pts: list[np.ndarray] = []
    m = len(poly)
    for i in range(m):
        a, b = poly[i], poly[(i + 1) % m]
        L = float(np.linalg.norm(b - a))
        nseg = max(1, int(np.ceil(L / h - 1e-9)))
        for k in range(nseg):
            pts.append(a + (k / nseg) * (b - a))
    return np.array(pts)


def _interior_points(poly: np.ndarray, h: float) -> np.ndarray:
    xmin, ymin = poly.min(axis=0)
    xmax, ymax = poly.max(axis=0)
    xs = np.arange(xmin + h, xmax - 0.25 * h, h)
    ys = np.arange(ymin + h, ymax - 0.25 * h, h)
    keep = []
    m = len(poly)
    # points closer than this to an edge can invade a boundary sub-edge's
    # diametral circle and break Delaunay edge recovery
    clearance = 0.55 * h
    for y in ys:
        for x in xs:
            p = np.array([x, y])
            if not polygon_contains(poly, p):
                continue
            d = min(_dist_to_segment(p, poly[i], poly[(i + 1) % m]) for i in range(m))
            if d >= clearance:
                keep.append(p)
    return np.array(keep) if keep else np.zeros((0, 2))


def _attempt_triangulation(
    poly: np.ndarray, h: float, subdomain_id: int
) -> SubdomainMesh | None:
    bpts = _boundary_points(poly, h)
    ipts = _interior_points(poly, h)
    points = np.vstack([bpts, ipts]) if len(ipts) else bpts
    if len(points) < 3:
        return None
    dt = Delaunay(points)
    diam = max(np.ptp(poly[:, 0]), np.ptp(poly[:, 1]))
    tol = 1e-12 * max(diam, 1.0)

    tris = []
    for simplex in dt.simplices:
        c = points[simplex]
        centroid = c.mean(axis=0)
        if triangle_area(c) <= tol * diam:
            continue
        if not polygon_contains(poly, centroid):
            continue
        # centroid on the boundary within tol means a degenerate sliver
        m = len(poly)
        if min(_dist_to_segment(centroid, poly[i], poly[(i + 1) % m]) for i in range(m)) <= tol:
            continue
        t = list(simplex)
        if triangle_area(c) < 0:
            t = [t[0], t[2], t[1]]
        tris.append(t)
    if not tris:
        return None
    triangles = np.array(tris, dtype=np.int64)

    # compact to used nodes
    used = np.unique(triangles)
    remap = -np.ones(len(points), dtype=np.int64)
    remap[used] = np.arange(len(used))
    nodes = points[used]
    triangles = remap[triangles]

    # boundary edges = edges used by exactly one triangle
    edge_count: dict[tuple[int, int], list[tuple[int, int]]] = {}
    for ti, t in enumerate(triangles):
        for e in range(3):
            a, b = int(t[e]), int(t[(e + 1) % 3])
            edge_count.setdefault((min(a, b), max(a, b)), []).append((ti, e))
    boundary = []
    m = len(poly)
    for (a, b), owners in edge_count.items():
        if len(owners) != 1:
            continue
        ti, e = owners[0]
        tag = -1
        for pe in range(m):
            pa, pb = poly[pe], poly[(pe + 1) % m]
            if point_on_segment(nodes[a], pa, pb, tol) and point_on_segment(nodes[b], pa, pb, tol):
                tag = pe
                break
        if tag < 0:
            return None  # boundary edge not on any polygon edge: nonconforming
        boundary.append((ti, e, tag))

    mesh = SubdomainMesh(nodes, triangles, subdomain_id, np.array(boundary, dtype=np.int64))

    # all polygon vertices must be mesh nodes
    for v in poly:
        if np.min(np.linalg.norm(nodes - v, axis=1)) > tol:
            return None
    # each polygon edge must be fully covered by tagged boundary edges
    for pe in range(m):
        pa, pb = poly[pe], poly[(pe + 1) % m]
        L = float(np.linalg.norm(pb - pa))
        cov = 0.0
        for ti, e, tag in boundary:
            if tag == pe:
                na, nb = mesh.edge_nodes(ti, e)
                cov += float(np.linalg.norm(nodes[nb] - nodes[na]))
        if abs(cov - L) > 1e-9 * max(L, 1.0):
            return None
    return mesh


def triangulate_subdomain(
    polygon, target_h: float, subdomain_id: int = 0
) -> SubdomainMesh:
    """Triangulate a simple counterclockwise polygon.

    Every polygon vertex becomes a mesh node, boundary edges are tagged by
    the polygon edge containing them, and the maximum triangle diameter is
    at most 2 * target_h.
    """
    if target_h <= 0.0:
        raise MeshError(f"target_h must be positive, got {target_h}")
    poly = _validate_polygon(polygon)
    h = float(target_h)
    for _ in range(6):
        mesh = _attempt_triangulation(poly, h, subdomain_id)
        if mesh is not None and mesh.max_diameter() <= 2.0 * target_h + 1e-12:
            return mesh
        h *= 0.7
    raise MeshError(
        f"subdomain {subdomain_id}: failed to produce a conforming triangulation "
        f"at target_h={target_h}"
    )


def rectangle_mesh(
    x0: float,
    y0: float,
    x1: float,
    y1: float,
    nx: int,
    ny: int,
    subdomain_id: int = 0,
) -> SubdomainMesh:
    """Structured split of an axis-aligned rectangle into 2*nx*ny triangles.

    Boundary tags follow the counterclockwise polygon
    [(x0,y0), (x1,y0), (x1,y1), (x0,y1)]: 0 bottom, 1 right, 2 top, 3 left.
    """
    if nx < 1 or ny < 1 or x1 <= x0 or y1 <= y0:
        raise MeshError("rectangle_mesh requires x1 > x0, y1 > y0, nx, ny >= 1")
    xs = np.linspace(x0, x1, nx + 1)
    ys = np.linspace(y0, y1, ny + 1)
    nodes = np.array([[x, y] for y in ys for x in xs])

    def nid(i: int, j: int) -> int:
        return j * (nx + 1) + i

    tris = []
    for j in range(ny):
        for i in range(nx):
            a, b = nid(i, j), nid(i + 1, j)
            c, d = nid(i + 1, j + 1), nid(i, j + 1)
            tris.append([a, b, c])
            tris.append([a, c, d])
    triangles = np.array(tris, dtype=np.int64)

    boundary = []
    for i in range(nx):
        boundary.append((2 * i, 0, 0))  # bottom: edge a->b of lower triangle
    for j in range(ny):
        boundary.append((2 * (j * nx + nx - 1), 1, 1))  # right: edge b->c
    for i in range(nx):
        boundary.append((2 * ((ny - 1) * nx + i) + 1, 1, 2))  # top: edge c->d
    for j in range(ny):
        boundary.append((2 * (j * nx) + 1, 2, 3))  # left: edge d->a
    return SubdomainMesh(nodes, triangles, subdomain_id, np.array(boundary, dtype=np.int64))


# ---------------------------------------------------------------------------
# plain-text mesh exchange: node count, "x y" lines, triangle count,
# "i j k subdomain_id" lines


def write_mesh_text(meshes, path) -> None:
    meshes = list(meshes)
    offsets = np.cumsum([0] + [m.n_nodes for m in meshes])
    with open(path, "w") as fh:
        fh.write(f"{int(offsets[-1])}\n")
        for m in meshes:
            for x, y in m.nodes:
                fh.write(f"{float(x):.17g} {float(y):.17g}\n")
        ntri = sum(len(m.triangles) for m in meshes)
        fh.write(f"{ntri}\n")
        for off, m in zip(offsets, meshes):
            for i, j, k in m.triangles:
                fh.write(f"{i + off} {j + off} {k + off} {m.subdomain_id}\n")


def read_mesh_text(path) -> list[SubdomainMesh]:
    """Read the plain-text format back into per-subdomain meshes.

    Boundary edges are recomputed topologically; tags are -1 since the
    format does not store them.
    """
    with open(path) as fh:
        tokens = fh.read().split()
    pos = 0

    def take(k: int) -> list[str]:
        nonlocal pos
        out = tokens[pos : pos + k]
        pos += k
        return out

    nn = int(take(1)[0])
    nodes = np.array([float(v) for v in take(2 * nn)]).reshape(nn, 2)
    nt = int(take(1)[0])
    raw = np.array([int(v) for v in take(4 * nt)]).reshape(nt, 4)

    meshes = []
    for sid in sorted(set(raw[:, 3].tolist())):
        tris = raw[raw[:, 3] == sid][:, :3]
        used = np.unique(tris)
        remap = -np.ones(nn, dtype=np.int64)
        remap[used] = np.arange(len(used))
        local_tris = remap[tris]
        edge_count: dict[tuple[int, int], list[tuple[int, int]]] = {}
        for ti, t in enumerate(local_tris):
            for e in range(3):
                a, b = int(t[e]), int(t[(e + 1) % 3])
                edge_count.setdefault((min(a, b), max(a, b)), []).append((ti, e))
        boundary = [(ti, e, -1) for owners in edge_count.values() if len(owners) == 1
                    for ti, e in owners]
        meshes.append(
            SubdomainMesh(nodes[used], local_tris, int(sid), np.array(boundary, dtype=np.int64))
        )
    return meshes
