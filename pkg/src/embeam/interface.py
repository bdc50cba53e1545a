"""Interface networks: straight segments carrying beam-truss elements.

A segment runs from its first to its second endpoint; the frame is
t = unit vector along the segment and n = t rotated by +90 degrees.
``adjacent_sides`` orders the two neighbouring subdomains as (the one whose
outward normal along the segment is +n, the one whose outward normal is
-n), so the first entry lies in the -n half-plane. Interface nodes are
shared wherever segments meet; a node is a junction when three or more
segments meet there or two meet at an angle, which is why all global
interface DOFs are Cartesian (u_x, u_y, theta).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import MeshError, polygon_contains

__all__ = [
    "InterfaceSegment",
    "InterfaceNode",
    "InterfaceMesh",
    "build_interface",
]


@dataclass(frozen=True)
class InterfaceSegment:
    """One straight segment of the interface network.

    element_nodes: (ne, 2) global interface node ids per beam element.
    element_s: (ne + 1,) arclength breakpoints, element_s[0] = 0,
    element_s[-1] = length.
    """

    index: int
    endpoints: np.ndarray  # (2, 2)
    tangent: np.ndarray
    normal: np.ndarray
    length: float
    element_nodes: np.ndarray
    element_s: np.ndarray
    adjacent_sides: tuple[int, int]

    def point_at(self, s: float) -> np.ndarray:
        return self.endpoints[0] + s * self.tangent

    def outward_sign(self, subdomain_id: int) -> float:
        """+1 if the subdomain's outward normal along this segment is +n."""
        if subdomain_id == self.adjacent_sides[0]:
            return 1.0
        if subdomain_id == self.adjacent_sides[1]:
            return -1.0
        raise KeyError(f"subdomain {subdomain_id} is not adjacent to segment {self.index}")

    def element_of(self, s: float) -> int:
        """Index of the beam element whose arclength interval contains s."""
        k = int(np.searchsorted(self.element_s, s, side="right") - 1)
        return min(max(k, 0), len(self.element_nodes) - 1)


@dataclass(frozen=True)
class InterfaceNode:
    position: np.ndarray
    incident_segments: tuple[int, ...]
    is_junction: bool


@dataclass(frozen=True)
class InterfaceMesh:
    """Segments plus the global interface node table.

    node_positions: (n, 2) for all interface nodes (segment endpoints first,
    then per-segment interior nodes). nodes: metadata for the endpoint nodes
    only (interior nodes are never junctions).
    """

    segments: tuple[InterfaceSegment, ...]
    nodes: tuple[InterfaceNode, ...]
    node_positions: np.ndarray

    @property
    def n_nodes(self) -> int:
        return self.node_positions.shape[0]

    def endpoint_node_id(self, position) -> int:
        p = np.asarray(position, dtype=float)
        d = np.linalg.norm(self.node_positions - p, axis=1)
        i = int(np.argmin(d))
        scale = max(np.ptp(self.node_positions), 1.0)
        if d[i] > 1e-9 * scale:
            raise KeyError(f"no interface node at {position}")
        return i


def _cross2(a: np.ndarray, b: np.ndarray) -> float:
    return float(a[0] * b[1] - a[1] * b[0])


def build_interface(
    points: dict[str, np.ndarray],
    segments: list[tuple[str, str, tuple[int, int]]],
    element_size: float | dict[int, float] = 0.1,
    polygons: dict[int, np.ndarray] | None = None,
) -> InterfaceMesh:
    """Construct the interface network.

    Parameters
    ----------
    points : mapping from label to 2D coordinates.
    segments : (from_label, to_label, (side_a, side_b)) per segment. When
        ``polygons`` is given the side pair may be in either order; it is
        oriented (and checked) against the geometry. Without polygons the
        pair is taken literally as (outward normal +n, outward normal -n).
    element_size : beam element target length, scalar or per segment index.
    polygons : optional subdomain polygons for side validation.
    """
    pts = {k: np.asarray(v, dtype=float) for k, v in points.items()}
    scale = max(
        (np.ptp(np.array(list(pts.values())), axis=0).max() if pts else 1.0), 1.0
    )
    tol = 1e-9 * scale

    # unique endpoint nodes
    labels = []
    positions = []
    for a, b, _sides in segments:
        for lbl in (a, b):
            if lbl not in pts:
                raise MeshError(f"segment endpoint {lbl!r} is not a declared point")
            if lbl not in labels:
                labels.append(lbl)
                positions.append(pts[lbl])
    node_pos = list(positions)
    label_to_node = {lbl: i for i, lbl in enumerate(labels)}

    built: list[InterfaceSegment] = []
    incident: dict[int, list[int]] = {i: [] for i in range(len(labels))}
    for si, (a, b, sides) in enumerate(segments):
        pa, pb = pts[a], pts[b]
        L = float(np.linalg.norm(pb - pa))
        if L <= tol:
            raise MeshError(f"segment {si} ({a}->{b}) has zero length")
        t = (pb - pa) / L
        n = np.array([-t[1], t[0]])
        if len(set(sides)) != 2:
            raise MeshError(f"segment {si} must border two distinct subdomains, got {sides}")
        side_plus, side_minus = _orient_sides(si, pa, pb, n, sides, polygons, scale)

        h = element_size[si] if isinstance(element_size, dict) else float(element_size)
        ne = max(1, int(np.ceil(L / h - 1e-9)))
        s_break = np.linspace(0.0, L, ne + 1)
        ids = [label_to_node[a]]
        for k in range(1, ne):
            node_pos.append(pa + s_break[k] * t)
            ids.append(len(node_pos) - 1)
        ids.append(label_to_node[b])
        elem_nodes = np.array([[ids[k], ids[k + 1]] for k in range(ne)], dtype=np.int64)

        built.append(
            InterfaceSegment(
                index=si,
                endpoints=np.array([pa, pb]),
                tangent=t,
                normal=n,
                length=L,
                element_nodes=elem_nodes,
                element_s=s_break,
                adjacent_sides=(side_plus, side_minus),
            )
        )
        incident[label_to_node[a]].append(si)
        incident[label_to_node[b]].append(si)

    # no endpoint may fall strictly inside another segment
    for i, p in enumerate(positions):
        for seg in built:
            a0, b0 = seg.endpoints
            if np.linalg.norm(p - a0) <= tol or np.linalg.norm(p - b0) <= tol:
                continue
            s = float((p - a0) @ seg.tangent)
            if 0 < s < seg.length and abs(float((p - a0) @ seg.normal)) <= tol:
                raise MeshError(
                    f"endpoint {labels[i]!r} lies inside segment {seg.index}; split the segment"
                )

    nodes = []
    for i in range(len(labels)):
        segs = tuple(incident[i])
        if len(segs) >= 3:
            junction = True
        elif len(segs) == 2:
            t1 = built[segs[0]].tangent
            t2 = built[segs[1]].tangent
            junction = abs(_cross2(t1, t2)) > 1e-12
        else:
            junction = False
        nodes.append(InterfaceNode(positions[i], segs, junction))

    return InterfaceMesh(tuple(built), tuple(nodes), np.array(node_pos))


def _orient_sides(
    si: int,
    pa: np.ndarray,
    pb: np.ndarray,
    n: np.ndarray,
    sides: tuple[int, int],
    polygons: dict[int, np.ndarray] | None,
    scale: float,
) -> tuple[int, int]:
    if polygons is None:
        return int(sides[0]), int(sides[1])
    mid = 0.5 * (pa + pb)
    eps = 1e-6 * scale
    plus_probe = mid + eps * n
    minus_probe = mid - eps * n
    side_plus = side_minus = None
    for sid in sides:
        if sid not in polygons:
            raise MeshError(f"segment {si}: no polygon declared for subdomain {sid}")
        poly = np.asarray(polygons[sid], dtype=float)
        in_plus = polygon_contains(poly, plus_probe)
        in_minus = polygon_contains(poly, minus_probe)
        if in_plus and not in_minus:
            side_minus = sid  # occupies the +n half-plane: outward normal is -n
        elif in_minus and not in_plus:
            side_plus = sid
        else:
            raise MeshError(
                f"segment {si}: subdomain {sid} does not border the segment consistently"
            )
    if side_plus is None or side_minus is None:
        raise MeshError(f"segment {si}: side assignment {sides} inconsistent with geometry")
    return int(side_plus), int(side_minus)
