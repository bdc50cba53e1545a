"""Command-line front end.

Subcommands: solve, patch-test, convergence, export. Configs are JSON
documents (see scenario.py); the --config value may also name a built-in
scenario such as cantilever-bend. Exit codes: 0 success, 2 config error,
3 solver error, 4 I/O error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from .coupling import CouplingMode
from .export import export as export_solution
from .mesh import MeshError, write_mesh_text
from .scenario import (
    BUILTIN_SCENARIOS,
    ConfigError,
    Scenario,
    apply_overrides,
    build_problem,
)
from .studies import run_convergence, run_patch_test
from .system import SolverError, solve

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_IO = 4


def _load_scenario(config: str, overrides: list[str]) -> Scenario:
    if os.path.exists(config):
        with open(config) as fh:
            try:
                data = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"invalid JSON in {config}: {exc}") from exc
    elif config in BUILTIN_SCENARIOS:
        data = BUILTIN_SCENARIOS[config]
    else:
        raise ConfigError(
            f"config {config!r} is neither a readable file nor a builtin scenario "
            f"(builtins: {sorted(BUILTIN_SCENARIOS)})"
        )
    if overrides:
        data = apply_overrides(data, overrides)
    return Scenario.from_dict(data)


def _solve_scenario(scenario: Scenario):
    built = build_problem(scenario)
    solution = solve(built.problem)
    return built, solution


def _summary(built, solution) -> dict:
    probes = {}
    iv = solution.interface_values()
    for label, nid in built.probe_nodes.items():
        probes[label] = [float(v) for v in iv[nid]]
    diag = solution.diagnostics
    return {
        "mode": built.scenario.data["coupling"]["mode"],
        "dofs": int(built.dof_map.size),
        "constrained_dofs": int(len(built.problem.dirichlet.dofs)),
        "newton_iterations": int(diag.newton_iterations),
        "energy": solution.quadratic_energy(),
        "probes": probes,
    }


def _cmd_solve(args) -> int:
    scenario = _load_scenario(args.config, args.set or [])
    built, solution = _solve_scenario(scenario)
    out_cfg = scenario.output
    out_dir = args.out or out_cfg["directory"]
    scale = args.scale if args.scale is not None else out_cfg["deformation_scale"]
    os.makedirs(out_dir, exist_ok=True)
    mesh_path = os.path.join(out_dir, "mesh.txt")
    write_mesh_text(
        [built.problem.meshes[sid] for sid in sorted(built.problem.meshes)], mesh_path
    )
    artifacts = [mesh_path]
    for fmt in out_cfg["formats"]:
        target = os.path.join(out_dir, {"vtk": "solution.vtk", "svg": "deformed.svg",
                                        "profiles": "profiles"}[fmt])
        artifacts += export_solution(solution, fmt, target, scale=scale)
    summary = _summary(built, solution)
    summary["outputs"] = artifacts
    summary_path = os.path.join(out_dir, "summary.json")
    with open(summary_path, "w") as fh:
        json.dump(summary, fh, indent=2, sort_keys=True)
    print(json.dumps(summary, indent=2, sort_keys=True))
    print(f"wrote {summary_path}")
    return EXIT_OK


def _cmd_patch_test(args) -> int:
    report = run_patch_test(target_h=args.h, gamma0_factor=args.gamma0_factor)
    print(report.summary())
    print(f"runtime: {report.runtime:.2f}s")
    return EXIT_OK


def _cmd_convergence(args) -> int:
    hs = [2.0 ** -(k + 2) for k in range(args.levels)]
    mode = CouplingMode(args.mode)
    report = run_convergence(hs=hs, mode=mode, alpha=args.alpha, beta=args.beta)
    print(f"mode: {report.mode}")
    print(report.table())
    print(f"runtime: {report.runtime:.1f}s")
    return EXIT_OK


def _cmd_export(args) -> int:
    scenario = _load_scenario(args.config, args.set or [])
    built, solution = _solve_scenario(scenario)
    scale = args.scale if args.scale is not None else scenario.output["deformation_scale"]
    out_dir = os.path.dirname(args.out)
    if out_dir:
        os.makedirs(out_dir, exist_ok=True)
    paths = export_solution(solution, args.format, args.out, scale=scale)
    for p in paths:
        print(f"wrote {p}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="embeam",
        description="Plane-stress FEM with Nitsche-coupled beam-truss interfaces",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="solve a scenario and write artifacts")
    p_solve.add_argument("--config", required=True,
                         help="config JSON path or builtin scenario name")
    p_solve.add_argument("--out", help="output directory (default from config)")
    p_solve.add_argument("--set", action="append", metavar="KEY=VALUE",
                         help="override a config entry (dotted path, JSON value)")
    p_solve.add_argument("--scale", type=float, help="deformation scale for exports")
    p_solve.set_defaults(fn=_cmd_solve)

    p_patch = sub.add_parser("patch-test", help="two-rectangle uniform-stress patch test")
    p_patch.add_argument("--h", type=float, default=0.25, help="coarse-side mesh size")
    p_patch.add_argument("--gamma0-factor", type=float, default=20.0)
    p_patch.set_defaults(fn=_cmd_patch_test)

    p_conv = sub.add_parser("convergence", help="manufactured-solution rate study")
    p_conv.add_argument("--levels", type=int, default=4)
    p_conv.add_argument("--mode", default="hybrid",
                        choices=[m.value for m in CouplingMode if m is not CouplingMode.CONTACT])
    p_conv.add_argument("--alpha", type=float, default=0.0)
    p_conv.add_argument("--beta", type=float, default=0.0)
    p_conv.set_defaults(fn=_cmd_convergence)

    p_exp = sub.add_parser("export", help="solve a scenario and export one format")
    p_exp.add_argument("--config", required=True)
    p_exp.add_argument("--format", required=True, choices=["vtk", "svg", "profiles"])
    p_exp.add_argument("--out", required=True, help="output file path (or stem for profiles)")
    p_exp.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_exp.add_argument("--scale", type=float)
    p_exp.set_defaults(fn=_cmd_export)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, MeshError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SolverError as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
