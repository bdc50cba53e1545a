"""Solution exporters.

Three formats:

* legacy-ASCII unstructured-grid files (point displacement vectors, cell
  stress tensors) that any VTK-reading tool can warp and color;
* flat SVG drawings of the undeformed (light) and deformed (dark) meshes
  with the deformed interface curves on top;
* per-segment comma-delimited interface profiles with the columns
  s, u_n, u_t, theta, jump_u_n_side1, jump_u_n_side2, sigma_n_side1,
  sigma_n_side2 (sides ordered as the segment's adjacent_sides). Floats
  are written with 17 significant digits so re-importing reproduces the
  values bit-exactly.
"""

from __future__ import annotations

import numpy as np

from .system import Solution, postprocess

__all__ = [
    "write_vtk",
    "write_svg",
    "write_profiles",
    "read_profile",
    "export",
]

PROFILE_HEADER = (
    "s,u_n,u_t,theta,jump_u_n_side1,jump_u_n_side2,sigma_n_side1,sigma_n_side2"
)


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def write_vtk(solution: Solution, path, title: str = "embeam solution") -> None:
    """Legacy ASCII unstructured grid: undeformed points, triangle cells,
    nodal displacement vectors and per-cell stress tensors."""
    problem = solution.system.problem
    post = postprocess(solution, scale=1.0)
    sids = sorted(problem.meshes)
    offsets = {}
    npts = 0
    for sid in sids:
        offsets[sid] = npts
        npts += problem.meshes[sid].n_nodes
    ncells = sum(len(problem.meshes[sid].triangles) for sid in sids)

    lines = [
        "# vtk DataFile Version 3.0",
        title,
        "ASCII",
        "DATASET UNSTRUCTURED_GRID",
        f"POINTS {npts} double",
    ]
    for sid in sids:
        for x, y in problem.meshes[sid].nodes:
            lines.append(f"{_fmt(x)} {_fmt(y)} 0")
    lines.append(f"CELLS {ncells} {4 * ncells}")
    for sid in sids:
        off = offsets[sid]
        for i, j, k in problem.meshes[sid].triangles:
            lines.append(f"3 {i + off} {j + off} {k + off}")
    lines.append(f"CELL_TYPES {ncells}")
    lines.extend(["5"] * ncells)
    lines.append(f"POINT_DATA {npts}")
    lines.append("VECTORS displacement double")
    for sid in sids:
        for ux, uy in solution.bulk_displacements(sid):
            lines.append(f"{_fmt(ux)} {_fmt(uy)} 0")
    lines.append(f"CELL_DATA {ncells}")
    lines.append("TENSORS stress double")
    for sid in sids:
        for s in post.stresses[sid]:
            lines.append(f"{_fmt(s.sxx)} {_fmt(s.sxy)} 0")
            lines.append(f"{_fmt(s.sxy)} {_fmt(s.syy)} 0")
            lines.append("0 0 0")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _mesh_edge_path(nodes: np.ndarray, triangles: np.ndarray, tf) -> str:
    seen = set()
    parts = []
    for tri in triangles:
        for e in range(3):
            a, b = int(tri[e]), int(tri[(e + 1) % 3])
            key = (min(a, b), max(a, b))
            if key in seen:
                continue
            seen.add(key)
            x0, y0 = tf(nodes[a])
            x1, y1 = tf(nodes[b])
            parts.append(f"M{x0:.2f} {y0:.2f}L{x1:.2f} {y1:.2f}")
    return "".join(parts)


def write_svg(solution: Solution, path, scale: float = 1.0) -> None:
    """Undeformed mesh in light gray, deformed mesh in dark blue, deformed
    interface curves in red; deformation magnified by ``scale``."""
    problem = solution.system.problem
    post = postprocess(solution, scale=scale)

    all_pts = [m.nodes for m in problem.meshes.values()]
    all_pts += [post.deformed_nodes[sid] for sid in problem.meshes]
    stacked = np.vstack(all_pts)
    lo = stacked.min(axis=0)
    hi = stacked.max(axis=0)
    span = np.maximum(hi - lo, 1e-12)
    W = 900.0
    H = W * span[1] / span[0]
    pad = 0.03 * W

    def tf(p):
        x = pad + (p[0] - lo[0]) / span[0] * (W - 2 * pad)
        y = H - (pad + (p[1] - lo[1]) / span[1] * (H - 2 * pad))
        return x, y

    body = []
    for sid, mesh in problem.meshes.items():
        body.append(
            f'<path d="{_mesh_edge_path(mesh.nodes, mesh.triangles, tf)}" '
            'stroke="#cccccc" stroke-width="0.6" fill="none"/>'
        )
    for sid, mesh in problem.meshes.items():
        body.append(
            f'<path d="{_mesh_edge_path(post.deformed_nodes[sid], mesh.triangles, tf)}" '
            'stroke="#1f3d7a" stroke-width="0.9" fill="none"/>'
        )
    iv = solution.interface_values()
    for seg in problem.interface.segments:
        pts = []
        for k, pair in enumerate(seg.element_nodes):
            for idx, nid in enumerate(pair if k == 0 else pair[1:]):
                p = problem.interface.node_positions[nid]
                u = iv[nid, :2]
                pts.append(tf(p + scale * u))
        d = "M" + "L".join(f"{x:.2f} {y:.2f}" for x, y in pts)
        body.append(f'<path d="{d}" stroke="#c0392b" stroke-width="1.8" fill="none"/>')

    svg = (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{W:.0f}" height="{H:.0f}" '
        f'viewBox="0 0 {W:.0f} {H:.0f}">\n' + "\n".join(body) + "\n</svg>\n"
    )
    with open(path, "w") as fh:
        fh.write(svg)


def write_profiles(solution: Solution, stem) -> list[str]:
    """One CSV per interface segment: ``<stem>_seg<k>.csv``."""
    problem = solution.system.problem
    post = postprocess(solution, scale=1.0)
    paths = []
    for prof in post.profiles:
        seg = problem.interface.segments[prof.segment_index]
        side1, side2 = seg.adjacent_sides
        path = f"{stem}_seg{prof.segment_index}.csv"
        rows = [PROFILE_HEADER]
        for i, s in enumerate(prof.s):
            rows.append(
                ",".join(
                    _fmt(v)
                    for v in (
                        s,
                        prof.u_n[i],
                        prof.u_t[i],
                        prof.theta[i],
                        prof.jump_u_n[side1][i],
                        prof.jump_u_n[side2][i],
                        prof.sigma_n[side1][i],
                        prof.sigma_n[side2][i],
                    )
                )
            )
        with open(path, "w") as fh:
            fh.write("\n".join(rows) + "\n")
        paths.append(path)
    return paths


def read_profile(path) -> dict[str, np.ndarray]:
    """Read one profile CSV back into column arrays keyed by header name."""
    with open(path) as fh:
        header = fh.readline().strip().split(",")
        data = np.array(
            [[float(v) for v in line.split(",")] for line in fh if line.strip()]
        )
    return {name: data[:, k] for k, name in enumerate(header)}


def export(solution: Solution, fmt: str, path, scale: float = 1.0):
    """Dispatch on format name: 'vtk', 'svg' or 'profiles'."""
    if fmt == "vtk":
        write_vtk(solution, path)
        return [str(path)]
    if fmt == "svg":
        write_svg(solution, path, scale=scale)
        return [str(path)]
    if fmt == "profiles":
        stem = str(path)
        if stem.endswith(".csv"):
            stem = stem[: -len(".csv")]
        return write_profiles(solution, stem)
    raise ValueError(f"unknown export format {fmt!r}")
