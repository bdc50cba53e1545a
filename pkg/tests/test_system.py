"""Assembly, Dirichlet elimination, linear solve and the semismooth Newton
contact driver."""

import numpy as np
import pytest
import scipy.sparse as sp
from numpy.testing import assert_allclose

from embeam.beam import SectionProperties
from embeam.coupling import CouplingMode, CouplingParams
from embeam.elasticity import Material
from embeam.interface import build_interface
from embeam.mesh import rectangle_mesh
from embeam.system import (
    AssemblyError,
    DirichletBC,
    DofMap,
    Problem,
    Solution,
    SolverError,
    _factorize,
    apply_dirichlet,
    assemble,
    postprocess,
    solve,
    solve_contact,
    solve_linear,
)

MAT = Material(1.0e6, 1.0 / 3.0)
GAMMA0 = 20.0 * (MAT.lam + MAT.mu)


def stacked_problem(mode=CouplingMode.HYBRID, nx=(2, 3), element_size=0.5, **params_kw):
    meshes = {
        1: rectangle_mesh(0, 0, 1, 0.5, nx[0], max(1, nx[0] // 2), 1),
        2: rectangle_mesh(0, 0.5, 1, 1, nx[1], max(1, nx[1] // 2), 2),
    }
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
    params = CouplingParams(mode=mode, gamma0=GAMMA0, **params_kw)
    return Problem(meshes=meshes, interface=iface, materials=MAT, params=params)


def clamp_bottom(problem):
    dm = DofMap.build(problem.meshes, problem.interface)
    dofs = []
    mesh = problem.meshes[1]
    for nd in range(mesh.n_nodes):
        if abs(mesh.nodes[nd, 1]) < 1e-12:
            dofs += [dm.bulk_dof(1, nd, 0), dm.bulk_dof(1, nd, 1)]
    problem.dirichlet = DirichletBC(np.array(dofs), np.zeros(len(dofs)))
    return dm


class TestAssemble:
    def test_zero_loads_zero_solution(self):
        prob = stacked_problem()
        clamp_bottom(prob)
        sol = solve_linear(assemble(prob))
        assert_allclose(sol.values, 0.0, atol=1e-14)
        assert sol.diagnostics.newton_iterations == 0

    def test_unconstrained_nullspace_is_three(self):
        prob = stacked_problem()
        K = assemble(prob).matrix.toarray()
        sv = np.linalg.svd(K, compute_uv=False)
        assert np.all(sv[-3:] < 1e-10 * sv[0])
        assert sv[-4] > 1e-6 * sv[0]

    def test_strong_with_zero_sections_equals_hybrid(self):
        prob_h = stacked_problem(CouplingMode.HYBRID)
        prob_s = stacked_problem(CouplingMode.STRONG_STIFFNESS)
        prob_s.sections = SectionProperties(0.0, 0.0)
        K_h = assemble(prob_h).matrix.toarray()
        K_s = assemble(prob_s).matrix.toarray()
        assert_allclose(K_s, K_h, atol=1e-14 * np.abs(K_h).max())

    def test_numerical_symmetry(self):
        for mode, kw in [
            (CouplingMode.HYBRID, {}),
            (CouplingMode.COHESIVE, dict(alpha=1e-3, beta=1e-4)),
            (CouplingMode.CONTACT, dict(alpha=1e-3)),
        ]:
            prob = stacked_problem(mode, **kw)
            if mode is not CouplingMode.HYBRID:
                prob.sections = SectionProperties(10.0, 100.0)
            K = assemble(prob).matrix
            d = (K - K.T).toarray()
            assert np.abs(d).max() <= 1e-12 * np.abs(K.toarray()).max()

    def test_body_and_interface_loads_assemble(self):
        prob = stacked_problem()
        prob.body_loads = {1: np.array([0.0, -1.0]), 2: np.array([0.0, -1.0])}
        prob.interface_loads = {0: (1.0, 2.0)}
        system = assemble(prob)
        # total vertical body force is the domain area
        dm = system.dof_map
        f_bulk = sum(
            system.rhs[dm.bulk_dof(sid, nd, 1)]
            for sid in (1, 2)
            for nd in range(dm.bulk_nodes[sid])
        )
        # interface loads add f_n on u_y (n = (0,1)) over unit length
        f_iface_y = sum(
            system.rhs[dm.interface_dof(nd, 1)] for nd in range(dm.n_interface_nodes)
        )
        f_iface_x = sum(
            system.rhs[dm.interface_dof(nd, 0)] for nd in range(dm.n_interface_nodes)
        )
        assert_allclose(f_bulk, -1.0, rtol=1e-12)
        assert_allclose(f_iface_y, 1.0, rtol=1e-12)
        assert_allclose(f_iface_x, 2.0, rtol=1e-12)


class TestDirichlet:
    def test_clamp_everything_gives_empty_system(self):
        prob = stacked_problem()
        system = assemble(prob)
        n = system.dof_map.size
        bc = DirichletBC(np.arange(n), np.zeros(n))
        red = apply_dirichlet(system, bc)
        assert red.matrix.shape == (0, 0)
        assert red.rhs.size == 0

    def test_prescribed_value_moves_to_rhs(self):
        prob = stacked_problem()
        system = assemble(prob)
        v = 0.37
        bc = DirichletBC(np.array([5]), np.array([v]))
        red = apply_dirichlet(system, bc)
        K = system.matrix.toarray()
        free = np.setdiff1d(np.arange(system.dof_map.size), [5])
        assert_allclose(red.rhs, system.rhs[free] - K[free, 5] * v, atol=1e-12)

    def test_bad_dof_rejected(self):
        prob = stacked_problem()
        system = assemble(prob)
        with pytest.raises(AssemblyError):
            apply_dirichlet(system, DirichletBC(np.array([10**6]), np.array([0.0])))

    def test_duplicate_dof_rejected(self):
        with pytest.raises(ValueError):
            DirichletBC(np.array([1, 1]), np.array([0.0, 0.0]))


class TestFactorize:
    def test_identity(self):
        b = np.array([1.0, -2.0, 3.0])
        x = _factorize(sp.eye(3, format="csc"))(b)
        assert_allclose(x, b)

    def test_small_spd(self):
        K = sp.csc_matrix(np.array([[2.0, 1.0], [1.0, 2.0]]))
        x = _factorize(K)(np.array([1.0, 1.0]))
        assert_allclose(x, [1.0 / 3.0, 1.0 / 3.0], rtol=1e-14)

    def test_indefinite_raises(self):
        K = sp.csc_matrix(np.array([[1.0, 3.0], [3.0, 1.0]]))
        with pytest.raises(SolverError, match="positive definite"):
            _factorize(K)


class TestContactSolve:
    def test_requires_contact_mode(self):
        prob = stacked_problem(CouplingMode.HYBRID)
        with pytest.raises(SolverError):
            solve_contact(prob)

    def test_rejects_zero_alpha(self):
        prob = stacked_problem(CouplingMode.CONTACT, alpha=0.0)
        clamp_bottom(prob)
        with pytest.raises(SolverError, match="alpha > 0"):
            solve_contact(prob)

    def test_separating_load_matches_cohesive(self):
        # pulling the top subdomain away opens the interface everywhere:
        # no active points, so contact equals the cohesive solution
        alpha = 1e-5
        prob = stacked_problem(CouplingMode.CONTACT, nx=(2, 3), alpha=alpha, beta=alpha)
        clamp_bottom(prob)
        prob.body_loads = {2: np.array([0.0, 2.0e4])}
        sol = solve_contact(prob)
        assert sol.diagnostics.newton_iterations <= 2
        assert all(n == 0 for n in sol.diagnostics.active_set_history)

        prob_c = stacked_problem(CouplingMode.COHESIVE, nx=(2, 3), alpha=alpha, beta=alpha)
        clamp_bottom(prob_c)
        prob_c.body_loads = {2: np.array([0.0, 2.0e4])}
        sol_c = solve_linear(assemble(prob_c))
        scale = np.abs(sol_c.values).max()
        assert np.abs(sol.values - sol_c.values).max() <= 1e-9 * scale

    def test_pressing_load_activates_and_converges(self):
        alpha = 1e-5
        prob = stacked_problem(CouplingMode.CONTACT, nx=(3, 4), alpha=alpha, beta=alpha)
        clamp_bottom(prob)
        prob.body_loads = {2: np.array([0.0, -2.0e4])}
        sol = solve_contact(prob)
        diag = sol.diagnostics
        assert diag.active_set_history[-1] > 0
        # piecewise-linear system: once the active set is stable the
        # residual collapses by many orders in a single step
        hist = diag.residual_history
        act = diag.active_set_history
        stable_from = next(i for i in range(1, len(act)) if act[i] == act[i - 1])
        assert hist[stable_from + 1] <= hist[stable_from] / 1e6

    def test_solve_dispatches_by_mode(self):
        prob = stacked_problem(CouplingMode.CONTACT, alpha=1e-5)
        clamp_bottom(prob)
        prob.body_loads = {2: np.array([0.0, 1.0e4])}
        sol = solve(prob)
        assert isinstance(sol, Solution)


class TestPostprocess:
    def test_zero_solution_undeformed(self):
        prob = stacked_problem()
        clamp_bottom(prob)
        sol = solve_linear(assemble(prob))
        post = postprocess(sol, scale=2.0)
        for sid, mesh in prob.meshes.items():
            assert_allclose(post.deformed_nodes[sid], mesh.nodes, atol=1e-12)
            for s in post.stresses[sid]:
                assert abs(s.sxx) + abs(s.syy) + abs(s.sxy) < 1e-9

    def test_rigid_translation_uniform_shift(self):
        prob = stacked_problem()
        system = assemble(prob)
        z = np.zeros(system.dof_map.size)
        shift = np.array([0.3, -0.2])
        for sid in (1, 2):
            off = system.dof_map.bulk_offset[sid]
            n = system.dof_map.bulk_nodes[sid]
            z[off : off + 2 * n] = np.tile(shift, n)
        off = system.dof_map.interface_offset
        for nd in range(system.dof_map.n_interface_nodes):
            z[off + 3 * nd : off + 3 * nd + 2] = shift
        sol = Solution(z, system.dof_map, system)
        post = postprocess(sol, scale=1.0)
        for sid, mesh in prob.meshes.items():
            assert_allclose(post.deformed_nodes[sid], mesh.nodes + shift, atol=1e-14)
            for s in post.stresses[sid]:
                assert abs(s.sxx) + abs(s.syy) + abs(s.sxy) < 1e-10

    def test_profiles_cover_segment(self):
        prob = stacked_problem()
        clamp_bottom(prob)
        prob.body_loads = {1: np.array([0.0, -1e3]), 2: np.array([0.0, -1e3])}
        sol = solve_linear(assemble(prob))
        post = postprocess(sol)
        assert len(post.profiles) == 1
        prof = post.profiles[0]
        assert prof.s.min() > 0.0 and prof.s.max() < 1.0
        assert set(prof.jump_u_n) == {1, 2}
        assert np.all(np.isfinite(prof.u_n))
