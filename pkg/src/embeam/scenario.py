"""Scenario configuration: a versioned JSON schema, built-in scenarios and
the translation into a discrete :class:`~embeam.system.Problem`.

The config document is strict: the schema version field ``"spec": 1`` is
required and unknown keys are rejected everywhere. Built-in scenarios are
plain config dicts, so command-line overrides and round-tripping work the
same for them as for user files.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass

import numpy as np

from .beam import SectionProperties
from .coupling import CouplingMode, CouplingParams
from .elasticity import Material
from .interface import InterfaceMesh, build_interface
from .mesh import triangulate_subdomain
from .system import DirichletBC, DofMap, Problem

__all__ = [
    "ConfigError",
    "Scenario",
    "builtin_scenario",
    "BUILTIN_SCENARIOS",
    "build_problem",
    "apply_overrides",
]


class ConfigError(ValueError):
    pass


_SQ = 1.0 - 1.0 / math.sqrt(2.0)
_CANTILEVER_POINTS = {
    "A": [0.0, 0.5],
    "B": [_SQ, 0.5],
    "C": [1.0, 1.0],
    "D": [1.0, 0.0],
    "E": [2.0 - _SQ, 0.5],
    "F": [2.0, 0.5],
}
_CANTILEVER_GEOMETRY = {
    "subdomains": [
        {"id": 1, "polygon": [[0.0, 0.5], [_SQ, 0.5], [1.0, 1.0], [0.0, 1.0]]},
        {"id": 2, "polygon": [[0.0, 0.0], [1.0, 0.0], [_SQ, 0.5], [0.0, 0.5]]},
        {"id": 3, "polygon": [[_SQ, 0.5], [1.0, 0.0], [2.0 - _SQ, 0.5], [1.0, 1.0]]},
        {"id": 4, "polygon": [[1.0, 1.0], [2.0 - _SQ, 0.5], [2.0, 0.5], [2.0, 1.0]]},
        {"id": 5, "polygon": [[1.0, 0.0], [2.0, 0.0], [2.0, 0.5], [2.0 - _SQ, 0.5]]},
    ],
    "interface": {
        "points": _CANTILEVER_POINTS,
        "segments": [
            {"from": "A", "to": "B", "sides": [1, 2]},
            {"from": "B", "to": "C", "sides": [1, 3]},
            {"from": "B", "to": "D", "sides": [2, 3]},
            {"from": "C", "to": "E", "sides": [3, 4]},
            {"from": "D", "to": "E", "sides": [3, 5]},
            {"from": "E", "to": "F", "sides": [4, 5]},
        ],
    },
}

# clamp the x = 0 faces: polygon edge 3 of subdomains 1 and 2
_CANTILEVER_COMMON = {
    "spec": 1,
    "geometry": {"builtin": "cantilever"},
    "material": {"E": 1.0e6, "nu": 1.0 / 3.0},
    "sections": {"EI": 0.0, "EA": 0.0},
    "coupling": {"mode": "hybrid", "gamma0_factor": 20.0, "alpha": 0.0, "beta": 0.0},
    "boundary": {
        "clamp_edges": [[1, 3], [2, 3]],
        "clamp_interface_points": ["A"],
    },
    "mesh": {"target_h": 0.1, "interface_h": None},
    "output": {"directory": "out", "formats": ["vtk", "svg", "profiles"], "deformation_scale": 1.0},
}

BUILTIN_SCENARIOS = {
    "cantilever-bend": {
        **copy.deepcopy(_CANTILEVER_COMMON),
        "loads": {"body": [0.0, -2.0e4], "interface": {}},
    },
    "cantilever-stretch": {
        **copy.deepcopy(_CANTILEVER_COMMON),
        "loads": {"body": [1.0e5, 0.0], "interface": {}},
    },
}

_MODES = {m.value: m for m in CouplingMode}


def _expect_keys(d: dict, allowed: set, required: set, context: str) -> None:
    if not isinstance(d, dict):
        raise ConfigError(f"{context}: expected an object, got {type(d).__name__}")
    unknown = set(d) - allowed
    if unknown:
        raise ConfigError(f"{context}: unknown keys {sorted(unknown)}")
    missing = required - set(d)
    if missing:
        raise ConfigError(f"{context}: missing required keys {sorted(missing)}")


def _as_float(v, context: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{context}: expected a number, got {v!r}")
    return float(v)


def _as_point(v, context: str) -> list:
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ConfigError(f"{context}: expected [x, y]")
    return [_as_float(v[0], context), _as_float(v[1], context)]


def _scalar_or_by_id(v, context: str):
    """A float, or a {"<id>": float} mapping with integer-string keys."""
    if isinstance(v, dict):
        out = {}
        for k, val in v.items():
            try:
                key = int(k)
            except (TypeError, ValueError):
                raise ConfigError(f"{context}: keys must be integer ids, got {k!r}")
            out[str(key)] = _as_float(val, context)
        return out
    return _as_float(v, context)


def _normalize(data: dict) -> dict:
    _expect_keys(
        data,
        {"spec", "geometry", "material", "sections", "coupling", "loads", "boundary", "mesh", "output"},
        {"spec", "geometry", "material", "coupling"},
        "config",
    )
    if data["spec"] != 1:
        raise ConfigError(f"unsupported schema version {data['spec']!r} (expected 1)")
    out: dict = {"spec": 1}

    geom = data["geometry"]
    if "builtin" in geom:
        _expect_keys(geom, {"builtin"}, {"builtin"}, "geometry")
        if geom["builtin"] != "cantilever":
            raise ConfigError(f"unknown builtin geometry {geom['builtin']!r}")
        out["geometry"] = {"builtin": geom["builtin"]}
    else:
        _expect_keys(geom, {"subdomains", "interface"}, {"subdomains", "interface"}, "geometry")
        subs = []
        for i, s in enumerate(geom["subdomains"]):
            _expect_keys(s, {"id", "polygon"}, {"id", "polygon"}, f"geometry.subdomains[{i}]")
            poly = [_as_point(p, f"geometry.subdomains[{i}].polygon") for p in s["polygon"]]
            subs.append({"id": int(s["id"]), "polygon": poly})
        itf = geom["interface"]
        _expect_keys(itf, {"points", "segments"}, {"points", "segments"}, "geometry.interface")
        points = {str(k): _as_point(v, f"geometry.interface.points[{k}]") for k, v in itf["points"].items()}
        segments = []
        for i, s in enumerate(itf["segments"]):
            _expect_keys(s, {"from", "to", "sides"}, {"from", "to", "sides"}, f"geometry.interface.segments[{i}]")
            if len(s["sides"]) != 2:
                raise ConfigError(f"geometry.interface.segments[{i}].sides must list two subdomains")
            segments.append({"from": str(s["from"]), "to": str(s["to"]),
                             "sides": [int(s["sides"][0]), int(s["sides"][1])]})
        out["geometry"] = {"subdomains": subs, "interface": {"points": points, "segments": segments}}

    mat = data["material"]
    if "E" in mat:
        _expect_keys(mat, {"E", "nu"}, {"E", "nu"}, "material")
        out["material"] = {"E": _as_float(mat["E"], "material.E"), "nu": _as_float(mat["nu"], "material.nu")}
    else:
        out["material"] = {}
        for k, v in mat.items():
            _expect_keys(v, {"E", "nu"}, {"E", "nu"}, f"material[{k}]")
            out["material"][str(int(k))] = {"E": _as_float(v["E"], "E"), "nu": _as_float(v["nu"], "nu")}

    sec = data.get("sections", {"EI": 0.0, "EA": 0.0})
    if "EI" in sec or "EA" in sec:
        _expect_keys(sec, {"EI", "EA"}, set(), "sections")
        out["sections"] = {"EI": _as_float(sec.get("EI", 0.0), "sections.EI"),
                           "EA": _as_float(sec.get("EA", 0.0), "sections.EA")}
    else:
        out["sections"] = {}
        for k, v in sec.items():
            _expect_keys(v, {"EI", "EA"}, set(), f"sections[{k}]")
            out["sections"][str(int(k))] = {"EI": _as_float(v.get("EI", 0.0), "EI"),
                                            "EA": _as_float(v.get("EA", 0.0), "EA")}

    cpl = data["coupling"]
    _expect_keys(cpl, {"mode", "gamma0_factor", "alpha", "beta"}, {"mode"}, "coupling")
    if cpl["mode"] not in _MODES:
        raise ConfigError(f"coupling.mode must be one of {sorted(_MODES)}, got {cpl['mode']!r}")
    out["coupling"] = {
        "mode": cpl["mode"],
        "gamma0_factor": _as_float(cpl.get("gamma0_factor", 20.0), "coupling.gamma0_factor"),
        "alpha": _scalar_or_by_id(cpl.get("alpha", 0.0), "coupling.alpha"),
        "beta": _scalar_or_by_id(cpl.get("beta", 0.0), "coupling.beta"),
    }

    loads = data.get("loads", {})
    _expect_keys(loads, {"body", "interface"}, set(), "loads")
    body = loads.get("body", [0.0, 0.0])
    if isinstance(body, dict):
        body_out = {str(int(k)): _as_point(v, f"loads.body[{k}]") for k, v in body.items()}
    else:
        body_out = _as_point(body, "loads.body")
    iface_loads = {}
    for k, v in loads.get("interface", {}).items():
        _expect_keys(v, {"f_n", "f_t"}, set(), f"loads.interface[{k}]")
        iface_loads[str(int(k))] = {"f_n": _as_float(v.get("f_n", 0.0), "f_n"),
                                    "f_t": _as_float(v.get("f_t", 0.0), "f_t")}
    out["loads"] = {"body": body_out, "interface": iface_loads}

    bnd = data.get("boundary", {})
    _expect_keys(bnd, {"clamp_edges", "clamp_interface_points"}, set(), "boundary")
    out["boundary"] = {
        "clamp_edges": [[int(a), int(b)] for a, b in bnd.get("clamp_edges", [])],
        "clamp_interface_points": [str(p) for p in bnd.get("clamp_interface_points", [])],
    }

    mesh = data.get("mesh", {})
    _expect_keys(mesh, {"target_h", "interface_h"}, set(), "mesh")
    out["mesh"] = {
        "target_h": _scalar_or_by_id(mesh.get("target_h", 0.1), "mesh.target_h"),
        "interface_h": None if mesh.get("interface_h") is None
        else _as_float(mesh["interface_h"], "mesh.interface_h"),
    }

    outp = data.get("output", {})
    _expect_keys(outp, {"directory", "formats", "deformation_scale"}, set(), "output")
    formats = list(outp.get("formats", ["vtk", "svg", "profiles"]))
    for f in formats:
        if f not in ("vtk", "svg", "profiles"):
            raise ConfigError(f"output.formats: unknown format {f!r}")
    out["output"] = {
        "directory": str(outp.get("directory", "out")),
        "formats": formats,
        "deformation_scale": _as_float(outp.get("deformation_scale", 1.0), "output.deformation_scale"),
    }
    return out


@dataclass(frozen=True)
class Scenario:
    """A validated, normalized scenario configuration."""

    data: dict

    @classmethod
    def from_dict(cls, data: dict) -> "Scenario":
        return cls(_normalize(data))

    @classmethod
    def from_json(cls, text: str) -> "Scenario":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"invalid JSON: {exc}") from exc
        return cls.from_dict(data)

    @classmethod
    def from_file(cls, path) -> "Scenario":
        try:
            with open(path) as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_json(text)

    def to_dict(self) -> dict:
        return copy.deepcopy(self.data)

    def to_json(self) -> str:
        return json.dumps(self.data, indent=2, sort_keys=True)

    @property
    def mode(self) -> CouplingMode:
        return _MODES[self.data["coupling"]["mode"]]

    @property
    def output(self) -> dict:
        return copy.deepcopy(self.data["output"])


def builtin_scenario(name: str) -> Scenario:
    if name not in BUILTIN_SCENARIOS:
        raise ConfigError(
            f"unknown builtin scenario {name!r}; available: {sorted(BUILTIN_SCENARIOS)}"
        )
    return Scenario.from_dict(copy.deepcopy(BUILTIN_SCENARIOS[name]))


def apply_overrides(data: dict, overrides: list[str]) -> dict:
    """Apply ``--set dotted.key=value`` overrides to a raw config dict.

    Values parse as JSON when possible, otherwise as literal strings.
    """
    out = copy.deepcopy(data)
    for ov in overrides:
        if "=" not in ov:
            raise ConfigError(f"override {ov!r} must look like key.path=value")
        key, _, raw = ov.partition("=")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        node = out
        parts = key.split(".")
        for p in parts[:-1]:
            if not isinstance(node, dict):
                raise ConfigError(f"override {ov!r}: {p!r} is not an object")
            node = node.setdefault(p, {})
        if not isinstance(node, dict):
            raise ConfigError(f"override {ov!r}: path does not lead into an object")
        node[parts[-1]] = value
    return out


def _resolve_by_id(value, ids, context: str, factory=float):
    """Uniform scalar or per-id dict, resolved to {id: value} over ids."""
    if isinstance(value, dict):
        out = {}
        for i in ids:
            if str(i) not in value:
                raise ConfigError(f"{context}: missing entry for id {i}")
            out[i] = factory(value[str(i)])
        return out
    return {i: factory(value) for i in ids}


@dataclass
class BuiltProblem:
    problem: Problem
    dof_map: DofMap
    interface: InterfaceMesh
    probe_nodes: dict  # point label -> interface node id
    scenario: Scenario


def build_problem(scenario: Scenario) -> BuiltProblem:
    """Mesh the geometry and assemble a Problem from a scenario."""
    data = scenario.data
    geom = data["geometry"]
    if "builtin" in geom:
        geom = _CANTILEVER_GEOMETRY
    polygons = {s["id"]: np.asarray(s["polygon"], dtype=float) for s in geom["subdomains"]}
    sids = sorted(polygons)
    seg_specs = geom["interface"]["segments"]
    points = {k: np.asarray(v, dtype=float) for k, v in geom["interface"]["points"].items()}

    target_h = _resolve_by_id(data["mesh"]["target_h"], sids, "mesh.target_h")
    meshes = {sid: triangulate_subdomain(polygons[sid], target_h[sid], sid) for sid in sids}

    if data["mesh"]["interface_h"] is not None:
        element_size: float | dict = float(data["mesh"]["interface_h"])
    else:
        element_size = {
            i: 0.5 * (target_h[s["sides"][0]] + target_h[s["sides"][1]])
            for i, s in enumerate(seg_specs)
        }
    interface = build_interface(
        points,
        [(s["from"], s["to"], (s["sides"][0], s["sides"][1])) for s in seg_specs],
        element_size=element_size,
        polygons=polygons,
    )

    mat_cfg = data["material"]
    if "E" in mat_cfg:
        materials: Material | dict = Material(mat_cfg["E"], mat_cfg["nu"])
        lam_mu = {sid: materials.lam + materials.mu for sid in sids}
    else:
        materials = {}
        lam_mu = {}
        for sid in sids:
            if str(sid) not in mat_cfg:
                raise ConfigError(f"material: missing entry for subdomain {sid}")
            m = mat_cfg[str(sid)]
            materials[sid] = Material(m["E"], m["nu"])
            lam_mu[sid] = materials[sid].lam + materials[sid].mu

    factor = data["coupling"]["gamma0_factor"]
    gamma0 = {sid: factor * lam_mu[sid] for sid in sids}
    params = CouplingParams(
        mode=scenario.mode,
        gamma0=gamma0,
        alpha=_resolve_by_id(data["coupling"]["alpha"], sids, "coupling.alpha"),
        beta=_resolve_by_id(data["coupling"]["beta"], sids, "coupling.beta"),
    )

    sec_cfg = data["sections"]
    if "EI" in sec_cfg:
        sections: SectionProperties | dict = SectionProperties(sec_cfg["EI"], sec_cfg["EA"])
    else:
        sections = {}
        for i in range(len(seg_specs)):
            entry = sec_cfg.get(str(i), {"EI": 0.0, "EA": 0.0})
            sections[i] = SectionProperties(entry["EI"], entry["EA"])

    body_cfg = data["loads"]["body"]
    if isinstance(body_cfg, dict):
        body_loads = {sid: np.asarray(body_cfg[str(sid)], dtype=float)
                      for sid in sids if str(sid) in body_cfg}
    else:
        body_loads = {sid: np.asarray(body_cfg, dtype=float) for sid in sids}
    interface_loads = {
        int(k): (v["f_n"], v["f_t"]) for k, v in data["loads"]["interface"].items()
    }

    dof_map = DofMap.build(meshes, interface)
    dofs: list[int] = []
    vals: list[float] = []
    for sid, edge in data["boundary"]["clamp_edges"]:
        if sid not in meshes:
            raise ConfigError(f"boundary.clamp_edges: unknown subdomain {sid}")
        mesh = meshes[sid]
        nodes = set()
        for ti, e, tag in mesh.boundary_edges:
            if tag == edge:
                a, b = mesh.edge_nodes(int(ti), int(e))
                nodes.update((a, b))
        if not nodes:
            raise ConfigError(f"boundary.clamp_edges: no mesh edges tagged {edge} in subdomain {sid}")
        for nd in sorted(nodes):
            for c in (0, 1):
                dofs.append(dof_map.bulk_dof(sid, nd, c))
                vals.append(0.0)

    hybrid = scenario.mode is CouplingMode.HYBRID
    for label in data["boundary"]["clamp_interface_points"]:
        if label not in points:
            raise ConfigError(f"boundary.clamp_interface_points: unknown point {label!r}")
        nid = interface.endpoint_node_id(points[label])
        for c in (0, 1):
            dofs.append(dof_map.interface_dof(nid, c))
            vals.append(0.0)
        incident = [s for s in interface.segments
                    if any(np.allclose(points[label], ep) for ep in s.endpoints)]
        ei_active = any(
            (sections[s.index].EI if isinstance(sections, dict) else sections.EI) > 0.0
            for s in incident
        ) and not hybrid
        if ei_active:
            dofs.append(dof_map.interface_dof(nid, 2))
            vals.append(0.0)

    problem = Problem(
        meshes=meshes,
        interface=interface,
        materials=materials,
        params=params,
        sections=sections,
        body_loads=body_loads,
        interface_loads=interface_loads,
        dirichlet=DirichletBC(np.array(dofs, dtype=np.int64), np.array(vals)),
    )
    probes = {}
    for label, p in points.items():
        try:
            probes[label] = interface.endpoint_node_id(p)
        except KeyError:
            continue
    return BuiltProblem(problem, dof_map, interface, probes, scenario)
