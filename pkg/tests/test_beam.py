"""Interface element checks: Hermite bending, truss, transformations and
field evaluation, with polynomial-algebra oracles independent of the
hand-coded shape functions."""

import numpy as np
import pytest
from numpy.polynomial import Polynomial
from numpy.testing import assert_allclose

from embeam import beam
from embeam.beam import (
    SectionProperties,
    cartesian_element_stiffness,
    evaluate_interface_field,
    hermite_bending_stiffness,
    interface_load_vector,
    local_to_cartesian,
    truss_stiffness,
)

SPEC_HERMITE = np.array(
    [
        [12.0, 6.0, -12.0, 6.0],
        [6.0, 4.0, -6.0, 2.0],
        [-12.0, -6.0, 12.0, -6.0],
        [6.0, 2.0, -6.0, 4.0],
    ]
)


def hermite_polynomials(L):
    """Cubic Hermite basis built by solving for polynomial coefficients
    (independent oracle for shape-function code)."""
    basis = []
    for k in range(4):
        # conditions: value at 0, slope at 0, value at L, slope at L
        A = np.zeros((4, 4))
        for j in range(4):
            p = Polynomial([0.0] * j + [1.0])
            A[0, j] = p(0.0)
            A[1, j] = p.deriv()(0.0)
            A[2, j] = p(L)
            A[3, j] = p.deriv()(L)
        rhs = np.zeros(4)
        rhs[k] = 1.0
        basis.append(Polynomial(np.linalg.solve(A, rhs)))
    return basis


def gauss_stiffness_oracle(EI, L, degree2_basis):
    x, w = np.polynomial.legendre.leggauss(4)
    s = 0.5 * L * (x + 1.0)
    ws = 0.5 * L * w
    dd = np.array([[p.deriv(2)(si) for p in degree2_basis] for si in s])
    K = np.zeros((len(degree2_basis),) * 2)
    for q in range(len(s)):
        K += EI * ws[q] * np.outer(dd[q], dd[q])
    return K


class TestHermite:
    def test_matches_spec_matrix(self):
        assert_allclose(hermite_bending_stiffness(1.0, 1.0), SPEC_HERMITE, atol=1e-12)

    def test_matches_quadrature_oracle(self):
        for EI, L in [(1.0, 1.0), (3.5, 0.7), (2.0e4, 0.25)]:
            oracle = gauss_stiffness_oracle(EI, L, hermite_polynomials(L))
            K = hermite_bending_stiffness(EI, L)
            assert_allclose(K, oracle, rtol=1e-12, atol=1e-12 * np.abs(oracle).max())

    def test_linear_deflection_is_nullspace(self):
        K = hermite_bending_stiffness(5.0, 2.0)
        u = np.array([0.0, 1.0, 2.0, 1.0])  # u_n = s
        assert_allclose(K @ u, 0.0, atol=1e-12 * np.abs(K).max())

    def test_zero_stiffness(self):
        assert_allclose(hermite_bending_stiffness(0.0, 1.3), 0.0)

    @pytest.mark.parametrize("L", [0.0, -1.0])
    def test_rejects_bad_length(self, L):
        with pytest.raises(ValueError):
            hermite_bending_stiffness(1.0, L)


class TestTruss:
    def test_values(self):
        assert_allclose(truss_stiffness(1.0, 2.0), [[0.5, -0.5], [-0.5, 0.5]])
        assert_allclose(truss_stiffness(1e6, 1.0), [[1e6, -1e6], [-1e6, 1e6]])

    def test_matches_quadrature_oracle(self):
        L = 0.8
        lin = [Polynomial([1.0, -1.0 / L]), Polynomial([0.0, 1.0 / L])]
        x, w = np.polynomial.legendre.leggauss(2)
        s = 0.5 * L * (x + 1.0)
        ws = 0.5 * L * w
        K = np.zeros((2, 2))
        for q in range(2):
            d = np.array([p.deriv()(s[q]) for p in lin])
            K += 4.2 * ws[q] * np.outer(d, d)
        assert_allclose(truss_stiffness(4.2, L), K, rtol=1e-13)

    def test_constant_motion_gives_zero_force(self):
        assert_allclose(truss_stiffness(7.0, 1.1) @ [3.0, 3.0], 0.0, atol=1e-12)

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            truss_stiffness(-1.0, 1.0)
        with pytest.raises(ValueError):
            truss_stiffness(1.0, 0.0)


class TestTransformation:
    def test_axis_aligned(self):
        T = local_to_cartesian([0.0, 1.0], [1.0, 0.0])
        assert_allclose(T, [[0, 1, 0], [1, 0, 0], [0, 0, 1]])

    def test_orthogonal_for_random_frames(self):
        rng = np.random.default_rng(3)
        for _ in range(5):
            ang = rng.uniform(0, 2 * np.pi)
            t = np.array([np.cos(ang), np.sin(ang)])
            n = np.array([-t[1], t[0]])
            T = local_to_cartesian(n, t)
            assert_allclose(T @ T.T, np.eye(3), atol=1e-14)

    def test_identity_case(self):
        T = local_to_cartesian([1.0, 0.0], [0.0, 1.0])
        assert_allclose(T @ [1.0, 0.0, 0.0], [1.0, 0.0, 0.0])

    def test_rejects_bad_frame(self):
        with pytest.raises(ValueError):
            local_to_cartesian([1.0, 0.0], [1.0, 0.0])

    def test_congruence_identity(self):
        # assembling in local DOFs then transforming equals transforming first
        ang = 0.61
        t = np.array([np.cos(ang), np.sin(ang)])
        n = np.array([-t[1], t[0]])
        L, EI, EA = 0.9, 3.0, 5.0
        K_cart = cartesian_element_stiffness(EI, EA, L, n, t)
        T = local_to_cartesian(n, t)
        Tb = np.zeros((6, 6))
        Tb[:3, :3] = T
        Tb[3:, 3:] = T
        # local element matrix over (u_n1, u_t1, th1, u_n2, u_t2, th2)
        Kb = hermite_bending_stiffness(EI, L)
        Kt = truss_stiffness(EA, L)
        K_loc = np.zeros((6, 6))
        bend_ix = [0, 2, 3, 5]
        truss_ix = [1, 4]
        for a, ia in enumerate(bend_ix):
            for b, ib in enumerate(bend_ix):
                K_loc[ia, ib] += Kb[a, b]
        for a, ia in enumerate(truss_ix):
            for b, ib in enumerate(truss_ix):
                K_loc[ia, ib] += Kt[a, b]
        assert_allclose(Tb @ K_loc @ Tb.T, K_cart, rtol=1e-14, atol=1e-14 * EA)


class TestFieldEvaluation:
    FRAME = dict(n=np.array([0.0, 1.0]), t=np.array([1.0, 0.0]))

    def test_partition_of_unity(self):
        c = np.array([0.4, -0.7])
        dofs = np.array([c[0], c[1], 0.0, c[0], c[1], 0.0])
        for s in (0.0, 0.31, 1.0):
            u, un, ut = evaluate_interface_field(self.FRAME["n"], self.FRAME["t"], 1.0, s, dofs)
            assert_allclose(u, c, atol=1e-14)

    def test_linear_reproduction_midpoint(self):
        # endpoint values 0 and 1 with matching slopes: u_n linear
        dofs = np.array([0.0, 0.0, 1.0, 0.0, 1.0, 1.0])
        _, un, _ = evaluate_interface_field(self.FRAME["n"], self.FRAME["t"], 1.0, 0.5, dofs)
        assert_allclose(un, 0.5, atol=1e-14)

    def test_cubic_bubble_midpoint(self):
        dofs = np.array([0.0, 0.0, 1.0, 0.0, 0.0, -1.0])  # theta1 = 1, theta2 = -1
        _, un, _ = evaluate_interface_field(self.FRAME["n"], self.FRAME["t"], 1.0, 0.5, dofs)
        assert_allclose(un, 0.25, rtol=1e-14)

    def test_rejects_out_of_element(self):
        with pytest.raises(ValueError):
            evaluate_interface_field(self.FRAME["n"], self.FRAME["t"], 1.0, 1.5, np.zeros(6))


class TestLoads:
    def test_zero_loads(self):
        f = interface_load_vector(lambda s: 0.0, lambda s: 0.0, [0.0, 1.0], [1.0, 0.0], 1.0)
        assert_allclose(f, 0.0)

    def test_constant_tangential(self):
        f = interface_load_vector(lambda s: 0.0, lambda s: 1.0, [0.0, 1.0], [1.0, 0.0], 1.0)
        # horizontal segment, t = (1, 0): u_x components get 1/2 each
        assert_allclose(f, [0.5, 0.0, 0.0, 0.5, 0.0, 0.0], atol=1e-14)

    def test_constant_normal_hermite_loads(self):
        f = interface_load_vector(lambda s: 1.0, lambda s: 0.0, [0.0, 1.0], [1.0, 0.0], 1.0)
        # (u_n1, th1, u_n2, th2) loads (1/2, 1/12, 1/2, -1/12) land on (u_y, theta)
        assert_allclose(f, [0.0, 0.5, 1.0 / 12.0, 0.0, 0.5, -1.0 / 12.0], atol=1e-14)


class TestRigidMotion:
    def test_rigid_motion_has_zero_energy(self):
        rng = np.random.default_rng(11)
        for _ in range(4):
            ang = rng.uniform(0, 2 * np.pi)
            t = np.array([np.cos(ang), np.sin(ang)])
            n = np.array([-t[1], t[0]])
            p0 = rng.uniform(-1, 1, 2)
            L = rng.uniform(0.2, 2.0)
            omega = rng.uniform(-1, 1)
            shift = rng.uniform(-1, 1, 2)
            dofs = []
            for pt in (p0, p0 + L * t):
                u = shift + omega * np.array([-pt[1], pt[0]])
                dofs.extend([u[0], u[1], omega])
            K = cartesian_element_stiffness(2.0, 3.0, L, n, t)
            e = np.array(dofs) @ K @ np.array(dofs)
            assert abs(e) < 1e-12 * np.abs(K).max()

    def test_two_element_segment_nullspace_dimension(self):
        # straight segment of 2 elements, EI and EA positive: nullspace 3
        t = np.array([1.0, 0.0])
        n = np.array([0.0, 1.0])
        L = 0.5
        K = np.zeros((9, 9))
        for first in (0, 3):
            Ke = cartesian_element_stiffness(1.0, 1.0, L, n, t)
            ix = list(range(first, first + 6))
            K[np.ix_(ix, ix)] += Ke
        sv = np.linalg.svd(K, compute_uv=False)
        assert np.all(sv[-3:] < 1e-12 * sv[0])
        assert sv[-4] > 1e-8 * sv[0]


def test_section_properties_validation():
    SectionProperties(1.0, 2.0)
    with pytest.raises(ValueError):
        SectionProperties(-1.0, 0.0)
