"""Global DOF management, sparse symmetric assembly, Dirichlet elimination,
direct solve and the semismooth Newton loop for Contact mode.

Bulk nodes carry 2 DOFs, interface nodes 3 (u_x, u_y, theta). The assembled
matrix is bulk stiffness + interface beam-truss stiffness + the coupling
blocks of the active mode; in Contact mode only the linear part (which
includes the tangential cohesive channel) is assembled and the normal
coupling enters through the nonlinear residual.

Factorization goes through CHOLMOD (cvxopt), a sparse symmetric Cholesky
that fails loudly on an indefinite matrix; the usual cause here is a
Nitsche penalty gamma0 chosen too small.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np
import scipy.sparse as sp

from . import beam as beam_mod
from .beam import SectionProperties
from .coupling import (
    CouplingMode,
    CouplingParams,
    SideTrace,
    TauStabilization,
    cohesive_blocks,
    contact_jacobian,
    contact_residual,
    hybrid_blocks,
    make_side_trace,
)
from .cut import CutPartition, build_cut_partition
from .elasticity import (
    Material,
    Stress2,
    body_load_vector,
    element_stress,
    p1_stiffness,
)
from .interface import InterfaceMesh
from .mesh import SubdomainMesh

try:  # pragma: no cover - exercised implicitly on import
    from cvxopt import cholmod as _cholmod
    from cvxopt import matrix as _cvx_matrix
    from cvxopt import spmatrix as _cvx_spmatrix
except ImportError:  # pragma: no cover
    _cholmod = None

__all__ = [
    "AssemblyError",
    "SolverError",
    "DofMap",
    "DirichletBC",
    "Problem",
    "GlobalSystem",
    "SolveDiagnostics",
    "Solution",
    "assemble",
    "apply_dirichlet",
    "solve_linear",
    "solve_contact",
    "solve",
    "postprocess",
    "PostprocessResult",
    "InterfaceProfile",
]


class AssemblyError(RuntimeError):
    pass


class SolverError(RuntimeError):
    pass


@dataclass(frozen=True)
class DofMap:
    """Global equation numbering: bulk blocks per subdomain, then the
    interface block (3 DOFs per interface node)."""

    bulk_offset: dict
    bulk_nodes: dict
    interface_offset: int
    n_interface_nodes: int
    size: int

    @classmethod
    def build(cls, meshes: dict[int, SubdomainMesh], interface: InterfaceMesh) -> "DofMap":
        offset = 0
        bulk_offset, bulk_nodes = {}, {}
        for sid in sorted(meshes):
            bulk_offset[sid] = offset
            bulk_nodes[sid] = meshes[sid].n_nodes
            offset += 2 * meshes[sid].n_nodes
        n_if = interface.n_nodes
        return cls(bulk_offset, bulk_nodes, offset, n_if, offset + 3 * n_if)

    def bulk_dof(self, subdomain_id: int, node: int, comp: int) -> int:
        return self.bulk_offset[subdomain_id] + 2 * node + comp

    def triangle_dofs(self, subdomain_id: int, conn) -> np.ndarray:
        base = self.bulk_offset[subdomain_id]
        return np.array(
            [base + 2 * n + c for n in conn for c in (0, 1)], dtype=np.int64
        )

    def interface_dof(self, node: int, comp: int) -> int:
        return self.interface_offset + 3 * node + comp

    def interface_element_dofs(self, node_pair) -> np.ndarray:
        return np.array(
            [self.interface_offset + 3 * n + c for n in node_pair for c in (0, 1, 2)],
            dtype=np.int64,
        )


@dataclass(frozen=True)
class DirichletBC:
    """Constrained DOF indices with prescribed values."""

    dofs: np.ndarray
    values: np.ndarray

    def __post_init__(self) -> None:
        dofs = np.asarray(self.dofs, dtype=np.int64)
        values = np.asarray(self.values, dtype=float)
        if dofs.shape != values.shape:
            raise ValueError("dofs and values must have matching shapes")
        order = np.argsort(dofs)
        object.__setattr__(self, "dofs", dofs[order])
        object.__setattr__(self, "values", values[order])
        if len(np.unique(self.dofs)) != len(self.dofs):
            raise ValueError("duplicate constrained DOF")

    @classmethod
    def empty(cls) -> "DirichletBC":
        return cls(np.zeros(0, dtype=np.int64), np.zeros(0))

    @classmethod
    def combine(cls, *bcs: "DirichletBC") -> "DirichletBC":
        if not bcs:
            return cls.empty()
        return cls(
            np.concatenate([b.dofs for b in bcs]),
            np.concatenate([b.values for b in bcs]),
        )


@dataclass
class Problem:
    """Full discrete problem description.

    materials, sections, body_loads and interface_loads accept either a
    single value (uniform) or a dict keyed by subdomain/segment index.
    Interface loads are (f_n, f_t) pairs of constants or callables of the
    segment arclength.
    """

    meshes: dict[int, SubdomainMesh]
    interface: InterfaceMesh
    materials: Material | dict[int, Material]
    params: CouplingParams
    sections: SectionProperties | dict[int, SectionProperties] = field(
        default_factory=SectionProperties
    )
    body_loads: dict[int, np.ndarray] = field(default_factory=dict)
    interface_loads: dict[int, tuple] = field(default_factory=dict)
    dirichlet: DirichletBC = field(default_factory=DirichletBC.empty)
    cut: CutPartition | None = None

    def material_for(self, subdomain_id: int) -> Material:
        if isinstance(self.materials, dict):
            return self.materials[subdomain_id]
        return self.materials

    def section_for(self, segment_index: int) -> SectionProperties:
        if isinstance(self.sections, dict):
            return self.sections.get(segment_index, SectionProperties())
        return self.sections

    def ensure_cut(self) -> CutPartition:
        if self.cut is None:
            self.cut = build_cut_partition(self.interface, self.meshes)
        return self.cut


@dataclass
class _CouplingSide:
    """One (sub-segment, side) with its trace operators and scatter map."""

    trace: SideTrace
    dofs: np.ndarray  # (12,)
    subdomain_id: int
    segment_index: int
    tri: int


@dataclass
class GlobalSystem:
    matrix: sp.csr_matrix
    rhs: np.ndarray
    dof_map: DofMap
    dirichlet: DirichletBC
    coupling_sides: list  # list[_CouplingSide]
    problem: Problem


def _coupling_sides(problem: Problem, dof_map: DofMap) -> list[_CouplingSide]:
    cut = problem.ensure_cut()
    sides = []
    for seg, subs in zip(problem.interface.segments, cut.per_segment):
        for sub in subs:
            iface_dofs = dof_map.interface_element_dofs(
                problem.interface.segments[seg.index].element_nodes[sub.element_index]
            )
            for sid, tri, h in (
                (seg.adjacent_sides[0], sub.tri_plus, sub.h_plus),
                (seg.adjacent_sides[1], sub.tri_minus, sub.h_minus),
            ):
                mesh = problem.meshes[sid]
                trace = make_side_trace(
                    seg,
                    sub.s0,
                    sub.s1,
                    sub.element_index,
                    mesh,
                    tri,
                    problem.material_for(sid),
                    h,
                )
                dofs = np.concatenate(
                    [dof_map.triangle_dofs(sid, mesh.triangles[tri]), iface_dofs]
                )
                sides.append(
                    _CouplingSide(
                        trace=trace,
                        dofs=dofs,
                        subdomain_id=sid,
                        segment_index=seg.index,
                        tri=tri,
                    )
                )
    return sides


def _scatter(rows, cols, vals, dofs: np.ndarray, K_local: np.ndarray) -> None:
    n = len(dofs)
    rows.append(np.repeat(dofs, n))
    cols.append(np.tile(dofs, n))
    vals.append(K_local.ravel())


def _coupling_block(side: _CouplingSide, params: CouplingParams) -> np.ndarray:
    sid = side.subdomain_id
    gamma0 = params.gamma0_for(sid)
    if params.mode in (CouplingMode.HYBRID, CouplingMode.STRONG_STIFFNESS):
        return hybrid_blocks(side.trace, gamma0 / side.trace.h)
    tau = TauStabilization.for_side(params, sid, side.trace.h)
    if params.mode is CouplingMode.COHESIVE:
        return cohesive_blocks(
            side.trace, params.alpha_for(sid), params.beta_for(sid), tau
        )
    if params.mode is CouplingMode.CONTACT:
        # linear part only: the tangential cohesive channel
        return cohesive_blocks(
            side.trace, params.alpha_for(sid), params.beta_for(sid), tau, channels="t"
        )
    raise AssemblyError(f"unknown coupling mode {params.mode}")


def assemble(problem: Problem) -> GlobalSystem:
    """Assemble matrix and right-hand side for the problem's coupling mode.

    In Contact mode the result is the linear part only; solve_contact adds
    the normal contact terms iteratively.
    """
    dof_map = DofMap.build(problem.meshes, problem.interface)
    rows: list[np.ndarray] = []
    cols: list[np.ndarray] = []
    vals: list[np.ndarray] = []
    rhs = np.zeros(dof_map.size)

    for sid, mesh in problem.meshes.items():
        mat = problem.material_for(sid)
        f_body = problem.body_loads.get(sid)
        for tri in range(len(mesh.triangles)):
            coords = mesh.triangle_coords(tri)
            dofs = dof_map.triangle_dofs(sid, mesh.triangles[tri])
            _scatter(rows, cols, vals, dofs, p1_stiffness(coords, mat))
            if f_body is not None:
                rhs[dofs] += body_load_vector(coords, f_body)

    hybrid_sections = problem.params.mode is CouplingMode.HYBRID
    for seg in problem.interface.segments:
        sec = problem.section_for(seg.index)
        EI, EA = (0.0, 0.0) if hybrid_sections else (sec.EI, sec.EA)
        f_pair = problem.interface_loads.get(seg.index)
        for k, pair in enumerate(seg.element_nodes):
            L_e = seg.element_s[k + 1] - seg.element_s[k]
            dofs = dof_map.interface_element_dofs(pair)
            K_e = beam_mod.cartesian_element_stiffness(
                EI, EA, L_e, seg.normal, seg.tangent
            )
            _scatter(rows, cols, vals, dofs, K_e)
            if f_pair is not None:
                f_n = f_pair[0] if callable(f_pair[0]) else (lambda s, v=f_pair[0]: v)
                f_t = f_pair[1] if callable(f_pair[1]) else (lambda s, v=f_pair[1]: v)
                rhs[dofs] += beam_mod.interface_load_vector(
                    f_n, f_t, seg.normal, seg.tangent, L_e, seg.element_s[k]
                )

    sides = _coupling_sides(problem, dof_map)
    for side in sides:
        _scatter(rows, cols, vals, side.dofs, _coupling_block(side, problem.params))

    K = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(dof_map.size, dof_map.size),
    ).tocsr()
    return GlobalSystem(K, rhs, dof_map, problem.dirichlet, sides, problem)


@dataclass
class ReducedSystem:
    matrix: sp.csc_matrix
    rhs: np.ndarray
    free: np.ndarray
    template: np.ndarray  # full-size vector holding constrained values

    def expand(self, x_free: np.ndarray) -> np.ndarray:
        x = self.template.copy()
        x[self.free] = x_free
        return x


def apply_dirichlet(system: GlobalSystem, bc: DirichletBC | None = None) -> ReducedSystem:
    """Symmetric elimination of constrained DOFs.

    Rows and columns of constrained DOFs are removed; the right-hand side
    receives -K[:, c] v_c for prescribed values v_c.
    """
    bc = system.dirichlet if bc is None else bc
    n = system.dof_map.size
    if len(bc.dofs) and (bc.dofs.min() < 0 or bc.dofs.max() >= n):
        raise AssemblyError(f"constrained DOF out of range 0..{n - 1}")
    mask = np.ones(n, dtype=bool)
    mask[bc.dofs] = False
    free = np.nonzero(mask)[0]
    template = np.zeros(n)
    template[bc.dofs] = bc.values
    rhs = system.rhs.copy()
    if len(bc.dofs):
        rhs -= system.matrix @ template
    K_ff = system.matrix[free][:, free].tocsc()
    return ReducedSystem(K_ff, rhs[free], free, template)


def _factorize(K: sp.csc_matrix):
    """Sparse symmetric factorization; raises SolverError when not SPD."""
    if K.shape[0] == 0:
        return lambda b: b
    if _cholmod is not None:
        coo = K.tocoo()
        A = _cvx_spmatrix(
            coo.data.tolist(), coo.row.tolist(), coo.col.tolist(), coo.shape
        )
        try:
            F = _cholmod.symbolic(A)
            _cholmod.numeric(A, F)
        except ArithmeticError as exc:
            raise SolverError(
                "factorization failed: matrix is not positive definite "
                "(Nitsche penalty gamma0 likely too small)"
            ) from exc

        def solve_fn(b: np.ndarray) -> np.ndarray:
            x = _cvx_matrix(np.asarray(b, dtype=float))
            _cholmod.solve(F, x)
            return np.asarray(x).ravel()

        return solve_fn

    import scipy.sparse.linalg as spla  # fallback path

    try:
        lu = spla.splu(K)
    except RuntimeError as exc:
        raise SolverError(f"sparse factorization failed: {exc}") from exc
    if np.any(np.abs(lu.U.diagonal()) < 1e-300):
        raise SolverError("factorization failed: singular pivot")
    return lu.solve


@dataclass
class SolveDiagnostics:
    newton_iterations: int = 0
    residual_history: list = field(default_factory=list)
    active_set_history: list = field(default_factory=list)


@dataclass
class Solution:
    """Solved DOF vector with per-field views and solver diagnostics."""

    values: np.ndarray
    dof_map: DofMap
    system: GlobalSystem
    diagnostics: SolveDiagnostics = field(default_factory=SolveDiagnostics)

    def bulk_displacements(self, subdomain_id: int) -> np.ndarray:
        off = self.dof_map.bulk_offset[subdomain_id]
        n = self.dof_map.bulk_nodes[subdomain_id]
        return self.values[off : off + 2 * n].reshape(n, 2)

    def interface_values(self) -> np.ndarray:
        """Interface nodal (u_x, u_y, theta), shape (n_interface_nodes, 3)."""
        off = self.dof_map.interface_offset
        return self.values[off:].reshape(self.dof_map.n_interface_nodes, 3)

    def quadratic_energy(self) -> float:
        """0.5 z^T K z - F^T z of the assembled (linear-part) system."""
        K, f, z = self.system.matrix, self.system.rhs, self.values
        return float(0.5 * z @ (K @ z) - f @ z)


def _check_residual(K, x, b) -> float:
    res = float(np.abs(K @ x - b).max())
    scale = float(
        sp.linalg.norm(K, np.inf) * np.abs(x).max() + np.abs(b).max()
    ) if K.shape[0] else 1.0
    if res > 1e-10 * max(scale, 1e-300):
        raise SolverError(f"direct solve residual {res:.3e} exceeds tolerance")
    return res


def solve_linear(system: GlobalSystem) -> Solution:
    """Direct sparse solve of an assembled linear-mode system."""
    if system.problem.params.mode is CouplingMode.CONTACT:
        raise SolverError("Contact mode requires solve_contact")
    red = apply_dirichlet(system)
    x_f = _factorize(red.matrix)(red.rhs)
    _check_residual(red.matrix, x_f, red.rhs)
    z = red.expand(x_f)
    return Solution(z, system.dof_map, system)


def _contact_alpha_check(problem: Problem) -> None:
    for seg in problem.interface.segments:
        for sid in seg.adjacent_sides:
            if problem.params.alpha_for(sid) <= 0.0:
                raise SolverError(
                    "Contact mode requires alpha > 0 on every side "
                    f"(segment {seg.index}, subdomain {sid})"
                )


def solve_contact(
    problem: Problem,
    initial_guess: np.ndarray | None = None,
    max_iterations: int = 50,
    rtol: float = 1e-10,
) -> Solution:
    """Semismooth Newton solve of the one-sided (contact) coupling.

    The linear part is assembled once; each iteration re-evaluates the
    normal contact residual and generalized Jacobian at the current iterate
    and takes a full step. Convergence requires both a relative residual
    below rtol and an unchanged active set.
    """
    if problem.params.mode is not CouplingMode.CONTACT:
        raise SolverError("solve_contact requires Contact mode")
    _contact_alpha_check(problem)
    system = assemble(problem)
    red = apply_dirichlet(system)
    K_lin, F = system.matrix, system.rhs

    if initial_guess is None:
        cohesive = replace(problem, params=replace(problem.params, mode=CouplingMode.COHESIVE))
        cohesive.cut = problem.cut
        z = solve_linear(assemble(cohesive)).values.copy()
        z[system.dirichlet.dofs] = system.dirichlet.values
    else:
        z = np.asarray(initial_guess, dtype=float).copy()
        z[system.dirichlet.dofs] = system.dirichlet.values

    diag = SolveDiagnostics()
    scale = max(float(np.linalg.norm(F[red.free])), 1e-300)
    prev_active: np.ndarray | None = None

    for it in range(max_iterations):
        residual = K_lin @ z - F
        states = []
        jac_rows, jac_cols, jac_vals = [], [], []
        n_active = 0
        for side in system.coupling_sides:
            alpha = problem.params.alpha_for(side.subdomain_id)
            gamma0 = problem.params.gamma0_for(side.subdomain_id)
            r_loc, state = contact_residual(side.trace, z[side.dofs], alpha, gamma0)
            residual[side.dofs] += r_loc
            states.append(state)
            n_active += int(state.active.sum())
        active_flags = np.concatenate([s.active for s in states])
        res_norm = float(np.linalg.norm(residual[red.free]))
        diag.residual_history.append(res_norm)
        diag.active_set_history.append(n_active)
        scale = max(scale, float(np.linalg.norm((K_lin @ z)[red.free])))

        active_stable = prev_active is not None and np.array_equal(prev_active, active_flags)
        if res_norm <= rtol * scale and active_stable:
            diag.newton_iterations = it
            sol = Solution(z, system.dof_map, system, diag)
            return sol
        prev_active = active_flags

        for side, state in zip(system.coupling_sides, states):
            alpha = problem.params.alpha_for(side.subdomain_id)
            gamma0 = problem.params.gamma0_for(side.subdomain_id)
            K_loc = contact_jacobian(side.trace, state, alpha, gamma0)
            _scatter(jac_rows, jac_cols, jac_vals, side.dofs, K_loc)
        K_contact = sp.coo_matrix(
            (np.concatenate(jac_vals), (np.concatenate(jac_rows), np.concatenate(jac_cols))),
            shape=K_lin.shape,
        ).tocsr()
        K_total = (K_lin + K_contact)[red.free][:, red.free].tocsc()
        dz = _factorize(K_total)(-residual[red.free])
        z = z.copy()
        z[red.free] += dz

    raise SolverError(
        f"semismooth Newton did not converge in {max_iterations} iterations; "
        f"residual history: {['%.3e' % r for r in diag.residual_history]}"
    )


def solve(problem: Problem) -> Solution:
    """Assemble and solve with the mode-appropriate driver."""
    if problem.params.mode is CouplingMode.CONTACT:
        return solve_contact(problem)
    return solve_linear(assemble(problem))


# ---------------------------------------------------------------------------
# postprocessing


@dataclass
class InterfaceProfile:
    """Sampled interface quantities along one segment (at the coupling
    quadrature points): arclength, interface displacement components,
    rotation, side-signed normal jumps and normal stresses per side."""

    segment_index: int
    s: np.ndarray
    u_n: np.ndarray
    u_t: np.ndarray
    theta: np.ndarray
    jump_u_n: dict  # subdomain id -> (m,) array
    sigma_n: dict  # subdomain id -> (m,) array


@dataclass
class PostprocessResult:
    deformed_nodes: dict  # subdomain id -> (n, 2)
    stresses: dict  # subdomain id -> list[Stress2]
    profiles: list  # list[InterfaceProfile]
    scale: float


def postprocess(solution: Solution, scale: float = 1.0) -> PostprocessResult:
    """Deformed geometry, per-triangle stresses and interface profiles."""
    problem = solution.system.problem
    deformed = {}
    stresses = {}
    for sid, mesh in problem.meshes.items():
        u = solution.bulk_displacements(sid)
        deformed[sid] = mesh.nodes + scale * u
        mat = problem.material_for(sid)
        tri_stresses = []
        for tri in range(len(mesh.triangles)):
            dofs = u[mesh.triangles[tri]].ravel()
            tri_stresses.append(element_stress(mesh.triangle_coords(tri), dofs, mat))
        stresses[sid] = tri_stresses

    by_segment: dict[int, dict] = {}
    for side in solution.system.coupling_sides:
        seg = problem.interface.segments[side.segment_index]
        entry = by_segment.setdefault(
            side.segment_index,
            {"s": {}, "iface": {}, "jump": {}, "sig": {}},
        )
        tr = side.trace
        z = solution.values[side.dofs]
        jump = np.einsum("qkm,m->qk", tr.jump_op, z)
        jump_n = tr.sign * (jump @ tr.n)
        sig_n = tr.sign * float(tr.n @ (tr.traction_op @ z))
        for q, s_val in enumerate(tr.s_points):
            key = round(float(s_val), 12)
            entry["jump"].setdefault(side.subdomain_id, {})[key] = float(jump_n[q])
            entry["sig"].setdefault(side.subdomain_id, {})[key] = sig_n
            if key not in entry["iface"]:
                k = seg.element_of(s_val)
                L_e = seg.element_s[k + 1] - seg.element_s[k]
                s_loc = float(s_val - seg.element_s[k])
                dofs_e = solution.values[
                    solution.dof_map.interface_element_dofs(seg.element_nodes[k])
                ]
                _, u_n, u_t = beam_mod.evaluate_interface_field(
                    seg.normal, seg.tangent, L_e, s_loc, dofs_e
                )
                theta = beam_mod.interface_rotation(seg.normal, L_e, s_loc, dofs_e)
                entry["iface"][key] = (u_n, u_t, theta)

    profiles = []
    for seg_index in sorted(by_segment):
        entry = by_segment[seg_index]
        s_sorted = sorted(entry["iface"].keys())
        vals = np.array([entry["iface"][s] for s in s_sorted])
        seg = problem.interface.segments[seg_index]
        jump_u_n = {
            sid: np.array([entry["jump"][sid].get(s, np.nan) for s in s_sorted])
            for sid in entry["jump"]
        }
        sigma_n = {
            sid: np.array([entry["sig"][sid].get(s, np.nan) for s in s_sorted])
            for sid in entry["sig"]
        }
        profiles.append(
            InterfaceProfile(
                segment_index=seg_index,
                s=np.array(s_sorted),
                u_n=vals[:, 0],
                u_t=vals[:, 1],
                theta=vals[:, 2],
                jump_u_n=jump_u_n,
                sigma_n=sigma_n,
            )
        )
    return PostprocessResult(deformed, stresses, profiles, scale)
