"""Meshing, interface network and cut-partition tests."""

import math

import numpy as np
import pytest
from numpy.testing import assert_allclose

from embeam.cut import build_cut_partition
from embeam.interface import build_interface
from embeam.mesh import (
    MeshError,
    point_on_segment,
    polygon_contains,
    rectangle_mesh,
    read_mesh_text,
    triangulate_subdomain,
    write_mesh_text,
)

SQ = 1.0 - 1.0 / math.sqrt(2.0)
CANTILEVER_POINTS = {
    "A": (0.0, 0.5),
    "B": (SQ, 0.5),
    "C": (1.0, 1.0),
    "D": (1.0, 0.0),
    "E": (2.0 - SQ, 0.5),
    "F": (2.0, 0.5),
}
CANTILEVER_POLYGONS = {
    1: [(0.0, 0.5), (SQ, 0.5), (1.0, 1.0), (0.0, 1.0)],
    2: [(0.0, 0.0), (1.0, 0.0), (SQ, 0.5), (0.0, 0.5)],
    3: [(SQ, 0.5), (1.0, 0.0), (2.0 - SQ, 0.5), (1.0, 1.0)],
    4: [(1.0, 1.0), (2.0 - SQ, 0.5), (2.0, 0.5), (2.0, 1.0)],
    5: [(1.0, 0.0), (2.0, 0.0), (2.0, 0.5), (2.0 - SQ, 0.5)],
}
CANTILEVER_SEGMENTS = [
    ("A", "B", (1, 2)),
    ("B", "C", (1, 3)),
    ("B", "D", (2, 3)),
    ("C", "E", (3, 4)),
    ("D", "E", (3, 5)),
    ("E", "F", (4, 5)),
]


class TestTriangulate:
    def test_unit_square_coarse(self):
        m = triangulate_subdomain([(0, 0), (1, 0), (1, 1), (0, 1)], 0.5)
        assert len(m.triangles) >= 8
        assert m.max_diameter() <= 1.0 + 1e-12

    def test_cantilever_vertex_preserved(self):
        m = triangulate_subdomain(CANTILEVER_POLYGONS[1], 0.1, 1)
        b = np.array([SQ, 0.5])
        assert np.min(np.linalg.norm(m.nodes - b, axis=1)) < 1e-13

    def test_diameter_bound(self):
        for h in (0.4, 0.15):
            m = triangulate_subdomain(CANTILEVER_POLYGONS[3], h, 3)
            assert m.max_diameter() <= 2 * h + 1e-12

    def test_boundary_edges_tagged_and_on_polygon(self):
        poly = np.array(CANTILEVER_POLYGONS[3], dtype=float)
        m = triangulate_subdomain(poly, 0.2, 3)
        assert set(m.boundary_edges[:, 2].tolist()) == {0, 1, 2, 3}
        for ti, e, tag in m.boundary_edges:
            a, b = m.edge_nodes(int(ti), int(e))
            pa, pb = poly[tag], poly[(tag + 1) % 4]
            for p in (m.nodes[a], m.nodes[b]):
                assert point_on_segment(p, pa, pb, 1e-12 * 2.0)

    def test_each_boundary_edge_single_owner(self):
        m = triangulate_subdomain([(0, 0), (1, 0), (1, 1), (0, 1)], 0.3)
        counts = {}
        for ti, t in enumerate(m.triangles):
            for e in range(3):
                a, b = int(t[e]), int(t[(e + 1) % 3])
                counts[(min(a, b), max(a, b))] = counts.get((min(a, b), max(a, b)), 0) + 1
        for ti, e, _tag in m.boundary_edges:
            a, b = m.edge_nodes(int(ti), int(e))
            assert counts[(min(a, b), max(a, b))] == 1

    def test_nonconvex_polygon(self):
        L = [(0, 0), (2, 0), (2, 1), (1, 1), (1, 2), (0, 2)]
        m = triangulate_subdomain(L, 0.3, 9)
        poly = np.array(L, dtype=float)
        for t in m.triangles:
            assert polygon_contains(poly, m.nodes[t].mean(axis=0))

    def test_rejects_duplicate_vertices(self):
        with pytest.raises(MeshError):
            triangulate_subdomain([(0, 0), (0, 0), (1, 0), (1, 1)], 0.5)

    def test_rejects_clockwise(self):
        with pytest.raises(MeshError):
            triangulate_subdomain([(0, 0), (0, 1), (1, 1), (1, 0)], 0.5)

    def test_rejects_spike(self):
        with pytest.raises(MeshError):
            triangulate_subdomain([(0, 0), (1, 0), (2, 0), (1, 0), (1, 1)], 0.5)

    def test_rejects_bad_h(self):
        with pytest.raises(MeshError):
            triangulate_subdomain([(0, 0), (1, 0), (1, 1)], -0.1)


class TestRectangle:
    def test_counts_and_tags(self):
        m = rectangle_mesh(0.0, 0.0, 2.0, 1.0, 4, 2, 7)
        assert m.n_nodes == 15
        assert len(m.triangles) == 16
        assert m.subdomain_id == 7
        tags = m.boundary_edges[:, 2]
        assert [np.count_nonzero(tags == k) for k in range(4)] == [4, 2, 4, 2]

    def test_all_areas_positive(self):
        m = rectangle_mesh(0.0, 0.0, 1.0, 0.5, 3, 2)
        assert m.max_diameter() < 0.5


class TestMeshText:
    def test_round_trip(self, tmp_path):
        m1 = rectangle_mesh(0, 0, 1, 0.5, 2, 1, 1)
        m2 = rectangle_mesh(0, 0.5, 1, 1, 3, 2, 2)
        path = tmp_path / "mesh.txt"
        write_mesh_text([m1, m2], path)
        back = read_mesh_text(path)
        assert [m.subdomain_id for m in back] == [1, 2]
        for orig, rt in zip([m1, m2], back):
            assert_allclose(rt.nodes, orig.nodes)
            assert np.array_equal(rt.triangles, orig.triangles)
            assert len(rt.boundary_edges) == len(orig.boundary_edges)


class TestInterface:
    def test_cantilever_network(self):
        iface = build_interface(
            CANTILEVER_POINTS, CANTILEVER_SEGMENTS, element_size=0.2,
            polygons={k: np.array(v, float) for k, v in CANTILEVER_POLYGONS.items()},
        )
        assert len(iface.segments) == 6
        by_pos = {lbl: iface.endpoint_node_id(p) for lbl, p in CANTILEVER_POINTS.items()}
        junctions = {lbl: iface.nodes[nid].is_junction for lbl, nid in by_pos.items()}
        assert junctions["B"] and junctions["E"]
        assert len(iface.nodes[by_pos["B"]].incident_segments) == 3
        assert len(iface.nodes[by_pos["E"]].incident_segments) == 3
        assert not junctions["A"] and not junctions["F"]

    def test_axis_aligned_frame(self):
        iface = build_interface(
            {"P": (0.0, 0.0), "Q": (1.0, 0.0)}, [("P", "Q", (1, 2))], element_size=0.5
        )
        seg = iface.segments[0]
        assert_allclose(seg.tangent, [1.0, 0.0])
        assert_allclose(seg.normal, [0.0, 1.0])
        assert_allclose(seg.length, 1.0)

    def test_side_orientation_against_polygons(self):
        # subdomain 1 above the segment: its outward normal is -n, so it
        # must land in adjacent_sides[1] regardless of declaration order
        polys = {
            1: np.array([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]),
            2: np.array([(0.0, -1.0), (1.0, -1.0), (1.0, 0.0), (0.0, 0.0)]),
        }
        for sides in [(1, 2), (2, 1)]:
            iface = build_interface(
                {"P": (0.0, 0.0), "Q": (1.0, 0.0)},
                [("P", "Q", sides)],
                element_size=0.5,
                polygons=polys,
            )
            assert iface.segments[0].adjacent_sides == (2, 1)
            assert iface.segments[0].outward_sign(2) == 1.0
            assert iface.segments[0].outward_sign(1) == -1.0

    def test_collinear_continuation_not_junction(self):
        iface = build_interface(
            {"P": (0.0, 0.0), "Q": (1.0, 0.0), "R": (2.0, 0.0)},
            [("P", "Q", (1, 2)), ("Q", "R", (1, 2))],
            element_size=0.5,
        )
        nid = iface.endpoint_node_id((1.0, 0.0))
        assert not iface.nodes[nid].is_junction

    def test_corner_is_junction(self):
        iface = build_interface(
            {"P": (0.0, 0.0), "Q": (1.0, 0.0), "R": (1.0, 1.0)},
            [("P", "Q", (1, 2)), ("Q", "R", (1, 2))],
            element_size=0.5,
        )
        assert iface.nodes[iface.endpoint_node_id((1.0, 0.0))].is_junction

    def test_zero_length_rejected(self):
        with pytest.raises(MeshError):
            build_interface({"P": (0.0, 0.0), "Q": (0.0, 0.0)}, [("P", "Q", (1, 2))])

    def test_inconsistent_sides_rejected(self):
        polys = {
            1: np.array([(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]),
            2: np.array([(0.0, 1.0), (1.0, 1.0), (1.0, 2.0), (0.0, 2.0)]),
        }
        # segment along y=0 does not separate these subdomains
        with pytest.raises(MeshError):
            build_interface(
                {"P": (0.0, 0.0), "Q": (1.0, 0.0)},
                [("P", "Q", (1, 2))],
                element_size=0.5,
                polygons=polys,
            )

    def test_same_side_twice_rejected(self):
        with pytest.raises(MeshError):
            build_interface({"P": (0.0, 0.0), "Q": (1.0, 0.0)}, [("P", "Q", (1, 1))])

    def test_element_arclengths_tile_segment(self):
        iface = build_interface(
            {"P": (0.0, 0.0), "Q": (0.7, 0.9)}, [("P", "Q", (1, 2))], element_size=0.25
        )
        seg = iface.segments[0]
        assert_allclose(np.diff(seg.element_s).sum(), seg.length, rtol=1e-14)


def _stacked_rectangles(nx_bottom, nx_top, element_size):
    m1 = rectangle_mesh(0, 0, 1, 0.5, nx_bottom, max(1, nx_bottom // 2), 1)
    m2 = rectangle_mesh(0, 0.5, 1, 1, nx_top, max(1, nx_top // 2), 2)
    polys = {
        1: np.array([(0.0, 0.0), (1.0, 0.0), (1.0, 0.5), (0.0, 0.5)]),
        2: np.array([(0.0, 0.5), (1.0, 0.5), (1.0, 1.0), (0.0, 1.0)]),
    }
    iface = build_interface(
        {"L": (0.0, 0.5), "R": (1.0, 0.5)},
        [("L", "R", (1, 2))],
        element_size=element_size,
        polygons=polys,
    )
    return {1: m1, 2: m2}, iface


class TestCutPartition:
    def test_union_of_breakpoints(self):
        # bulk traces at thirds and halves, one beam element: {0,1/3,1/2,2/3,1}
        meshes, iface = _stacked_rectangles(2, 3, element_size=1.0)
        cut = build_cut_partition(iface, meshes)
        subs = cut.per_segment[0]
        breaks = [s.s0 for s in subs] + [subs[-1].s1]
        assert_allclose(breaks, [0.0, 1 / 3, 0.5, 2 / 3, 1.0], atol=1e-12)

    def test_matching_meshes_keep_common_partition(self):
        meshes, iface = _stacked_rectangles(4, 4, element_size=0.25)
        cut = build_cut_partition(iface, meshes)
        breaks = [s.s0 for s in cut.per_segment[0]] + [1.0]
        assert_allclose(breaks, np.linspace(0, 1, 5), atol=1e-12)

    def test_beam_breakpoint_splits_bulk_edge(self):
        meshes, iface = _stacked_rectangles(2, 2, element_size=0.2)
        cut = build_cut_partition(iface, meshes)
        breaks = np.array([s.s0 for s in cut.per_segment[0]] + [1.0])
        assert np.any(np.isclose(breaks, 0.2, atol=1e-12))
        assert np.any(np.isclose(breaks, 0.5, atol=1e-12))

    def test_lengths_tile_exactly(self):
        meshes, iface = _stacked_rectangles(5, 7, element_size=0.31)
        cut = build_cut_partition(iface, meshes)
        total = sum(s.length for s in cut.per_segment[0])
        assert abs(total - 1.0) < 1e-12

    def test_swapped_meshes_same_breakpoints(self):
        meshes, iface = _stacked_rectangles(3, 5, element_size=0.4)
        cut1 = build_cut_partition(iface, meshes)
        # same geometry with subdomain roles swapped top/bottom
        m1 = rectangle_mesh(0, 0, 1, 0.5, 5, 2, 1)
        m2 = rectangle_mesh(0, 0.5, 1, 1, 3, 1, 2)
        cut2 = build_cut_partition(iface, {1: m1, 2: m2})
        b1 = [s.s0 for s in cut1.per_segment[0]]
        b2 = [s.s0 for s in cut2.per_segment[0]]
        assert_allclose(b1, b2, atol=1e-12)

    def test_interior_point_maps_to_adjacent_triangles(self):
        meshes, iface = _stacked_rectangles(3, 4, element_size=0.5)
        cut = build_cut_partition(iface, meshes)
        seg = iface.segments[0]
        for sub in cut.per_segment[0]:
            mid = seg.point_at(0.5 * (sub.s0 + sub.s1))
            for sid, tri in ((1, sub.tri_plus), (2, sub.tri_minus)):
                coords = meshes[sid].triangle_coords(tri)
                assert polygon_contains(coords, mid)

    def test_gap_reported_with_interval(self):
        # segment extends past the meshed strip: coverage error names the gap
        meshes, _ = _stacked_rectangles(2, 2, element_size=0.5)
        iface = build_interface(
            {"L": (0.0, 0.5), "R": (1.5, 0.5)}, [("L", "R", (1, 2))], element_size=0.5
        )
        with pytest.raises(MeshError, match="does not cover"):
            build_cut_partition(iface, meshes)

    def test_h_is_adjacent_triangle_diameter(self):
        meshes, iface = _stacked_rectangles(2, 4, element_size=1.0)
        cut = build_cut_partition(iface, meshes)
        for sub in cut.per_segment[0]:
            from embeam.elasticity import triangle_diameter

            assert_allclose(sub.h_plus, triangle_diameter(meshes[1].triangle_coords(sub.tri_plus)))
            assert_allclose(sub.h_minus, triangle_diameter(meshes[2].triangle_coords(sub.tri_minus)))
