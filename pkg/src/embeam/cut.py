"""Union refinement of the interface into quadrature sub-segments.

Nitsche coupling terms pair bulk traces from two independently built
triangulations with the interface beam basis. Integrands are polynomial
only where no basis changes, so each segment is cut at every breakpoint of
(a) its own beam elements, (b) the trace partition of the first adjacent
mesh and (c) of the second. Each resulting sub-segment resolves to exactly
one triangle per side; the adjacent triangle diameters provide the local
mesh sizes used in the penalty scaling.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elasticity import triangle_diameter
from .interface import InterfaceMesh, InterfaceSegment
from .mesh import MeshError, SubdomainMesh

__all__ = ["SubSegment", "CutPartition", "build_cut_partition"]


@dataclass(frozen=True)
class SubSegment:
    """One integration interval [s0, s1] of a segment."""

    s0: float
    s1: float
    element_index: int  # beam element of the segment containing the interval
    tri_plus: int  # triangle of the adjacent_sides[0] mesh
    tri_minus: int
    h_plus: float  # adjacent triangle diameters
    h_minus: float

    @property
    def length(self) -> float:
        return self.s1 - self.s0


@dataclass(frozen=True)
class CutPartition:
    """Per segment index: the ordered tuple of sub-segments."""

    per_segment: tuple[tuple[SubSegment, ...], ...]

    def __iter__(self):
        return iter(self.per_segment)


def _edges_on_segment(
    mesh: SubdomainMesh, seg: InterfaceSegment, tol: float
) -> list[tuple[float, float, int]]:
    """Boundary edges of the mesh lying on the segment, as (s_lo, s_hi, tri)."""
    a0 = seg.endpoints[0]
    found = []
    for ti, e, _tag in mesh.boundary_edges:
        na, nb = mesh.edge_nodes(int(ti), int(e))
        pa, pb = mesh.nodes[na], mesh.nodes[nb]
        da = abs(float((pa - a0) @ seg.normal))
        db = abs(float((pb - a0) @ seg.normal))
        if da > tol or db > tol:
            continue
        sa = float((pa - a0) @ seg.tangent)
        sb = float((pb - a0) @ seg.tangent)
        lo, hi = min(sa, sb), max(sa, sb)
        if hi < -tol or lo > seg.length + tol:
            continue
        found.append((lo, hi, int(ti)))
    return found


def _coverage_gap(intervals: list[tuple[float, float, int]], L: float, tol: float):
    """First gap of the interval union within [0, L], or None."""
    cursor = 0.0
    for lo, hi, _ in sorted(intervals):
        if lo > cursor + tol:
            return (cursor, lo)
        cursor = max(cursor, hi)
        if cursor >= L - tol:
            return None
    return None if cursor >= L - tol else (cursor, L)


def build_cut_partition(
    interface: InterfaceMesh, meshes: dict[int, SubdomainMesh]
) -> CutPartition:
    """Cut every interface segment against both adjacent bulk traces.

    Raises MeshError naming the segment and arclength interval when a bulk
    mesh does not cover a segment with boundary edges.
    """
    per_segment = []
    for seg in interface.segments:
        tol = 1e-12 * max(seg.length, 1.0)
        sides = []
        for sid in seg.adjacent_sides:
            if sid not in meshes:
                raise MeshError(f"segment {seg.index}: no mesh for subdomain {sid}")
            edges = _edges_on_segment(meshes[sid], seg, max(tol, 1e-12))
            gap = _coverage_gap(edges, seg.length, 1e-9 * max(seg.length, 1.0))
            if gap is not None:
                raise MeshError(
                    f"segment {seg.index}: mesh of subdomain {sid} does not cover "
                    f"s in [{gap[0]:.6g}, {gap[1]:.6g}]"
                )
            sides.append(edges)

        breakpoints = set(np.round(seg.element_s / seg.length, 12).tolist())
        for edges in sides:
            for lo, hi, _ in edges:
                for v in (lo, hi):
                    if -tol < v < seg.length + tol:
                        breakpoints.add(round(min(max(v, 0.0), seg.length) / seg.length, 12))
        s_sorted = np.array(sorted(breakpoints)) * seg.length

        subs = []
        for k in range(len(s_sorted) - 1):
            s0, s1 = float(s_sorted[k]), float(s_sorted[k + 1])
            if s1 - s0 <= tol:
                continue
            mid = 0.5 * (s0 + s1)
            tris = []
            for sid, edges in zip(seg.adjacent_sides, sides):
                hit = [ti for lo, hi, ti in edges if lo - tol <= mid <= hi + tol]
                if not hit:
                    raise MeshError(
                        f"segment {seg.index}: no boundary edge of subdomain {sid} "
                        f"contains s={mid:.6g}"
                    )
                tris.append(hit[0])
            mesh_p = meshes[seg.adjacent_sides[0]]
            mesh_m = meshes[seg.adjacent_sides[1]]
            subs.append(
                SubSegment(
                    s0=s0,
                    s1=s1,
                    element_index=seg.element_of(mid),
                    tri_plus=tris[0],
                    tri_minus=tris[1],
                    h_plus=triangle_diameter(mesh_p.triangle_coords(tris[0])),
                    h_minus=triangle_diameter(mesh_m.triangle_coords(tris[1])),
                )
            )
        total = sum(s.length for s in subs)
        if abs(total - seg.length) > 1e-12 * max(seg.length, 1.0):
            raise MeshError(
                f"segment {seg.index}: sub-segments sum to {total}, expected {seg.length}"
            )
        per_segment.append(tuple(subs))
    return CutPartition(tuple(per_segment))
