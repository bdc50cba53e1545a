"""Interface structural elements: Hermite bending, linear truss, and the
per-node transformation between local (u_n, u_t, theta) and Cartesian
(u_x, u_y, theta) degrees of freedom.

Every interface node carries three Cartesian DOFs. On a straight segment
with frame (n, t) the normal deflection u_n is discretized by C1 cubic
Hermite polynomials over (u_n1, theta1, u_n2, theta2) and the tangential
displacement u_t by linear polynomials over (u_t1, u_t2); theta = u_n'(s).
Sharing the Cartesian triple at segment junctions keeps the displacement
field continuous even where segments meet at an angle.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SectionProperties",
    "hermite_shape",
    "hermite_shape_d1",
    "hermite_shape_d2",
    "linear_shape",
    "hermite_bending_stiffness",
    "truss_stiffness",
    "local_to_cartesian",
    "bending_dof_matrix",
    "truss_dof_matrix",
    "cartesian_element_stiffness",
    "evaluate_interface_field",
    "interface_rotation",
    "interface_load_vector",
    "gauss_rule",
]

_GAUSS4_X, _GAUSS4_W = np.polynomial.legendre.leggauss(4)


@dataclass(frozen=True)
class SectionProperties:
    """Bending stiffness EI (force * length^2) and axial stiffness EA
    (force) of an interface segment; constant per segment."""

    EI: float = 0.0
    EA: float = 0.0

    def __post_init__(self) -> None:
        if self.EI < 0.0 or self.EA < 0.0:
            raise ValueError("section stiffnesses EI, EA must be nonnegative")


def gauss_rule(a: float, b: float, npts: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre points and weights on the interval [a, b]."""
    if npts == 4:
        x, w = _GAUSS4_X, _GAUSS4_W
    else:
        x, w = np.polynomial.legendre.leggauss(npts)
    mid, half = 0.5 * (a + b), 0.5 * (b - a)
    return mid + half * x, half * w


def _check_length(L: float) -> None:
    if L <= 0.0:
        raise ValueError(f"element length must be positive, got {L}")


def hermite_shape(s: float | np.ndarray, L: float) -> np.ndarray:
    """Cubic Hermite basis (H1..H4) at local coordinate s in [0, L].

    Ordering matches the DOF vector (u_n1, theta1, u_n2, theta2); the theta
    shape functions carry the length scale so theta is a true derivative.
    Returns shape (4,) for scalar s, (m, 4) for an array.
    """
    _check_length(L)
    xi = np.asarray(s, dtype=float) / L
    H = np.stack(
        [
            1.0 - 3.0 * xi**2 + 2.0 * xi**3,
            L * (xi - 2.0 * xi**2 + xi**3),
            3.0 * xi**2 - 2.0 * xi**3,
            L * (-(xi**2) + xi**3),
        ],
        axis=-1,
    )
    return H


def hermite_shape_d1(s: float | np.ndarray, L: float) -> np.ndarray:
    """First derivative of the Hermite basis with respect to s."""
    _check_length(L)
    xi = np.asarray(s, dtype=float) / L
    return np.stack(
        [
            (-6.0 * xi + 6.0 * xi**2) / L,
            1.0 - 4.0 * xi + 3.0 * xi**2,
            (6.0 * xi - 6.0 * xi**2) / L,
            -2.0 * xi + 3.0 * xi**2,
        ],
        axis=-1,
    )


def hermite_shape_d2(s: float | np.ndarray, L: float) -> np.ndarray:
    """Second derivative of the Hermite basis with respect to s."""
    _check_length(L)
    xi = np.asarray(s, dtype=float) / L
    return np.stack(
        [
            (-6.0 + 12.0 * xi) / L**2,
            (-4.0 + 6.0 * xi) / L,
            (6.0 - 12.0 * xi) / L**2,
            (-2.0 + 6.0 * xi) / L,
        ],
        axis=-1,
    )


def linear_shape(s: float | np.ndarray, L: float) -> np.ndarray:
    """Linear basis (1 - s/L, s/L) over (u_t1, u_t2)."""
    _check_length(L)
    xi = np.asarray(s, dtype=float) / L
    return np.stack([1.0 - xi, xi], axis=-1)


def hermite_bending_stiffness(EI: float, L: float) -> np.ndarray:
    """Bending stiffness (4x4) over (u_n1, theta1, u_n2, theta2).

    Exact Galerkin matrix of the cubic Hermite basis for the energy
    EI * integral of (u_n'')^2; symmetric PSD with the constant and linear
    deflections as nullspace.
    """
    _check_length(L)
    if EI < 0.0:
        raise ValueError(f"bending stiffness must be nonnegative, got {EI}")
    c = EI / L**3
    return c * np.array(
        [
            [12.0, 6.0 * L, -12.0, 6.0 * L],
            [6.0 * L, 4.0 * L**2, -6.0 * L, 2.0 * L**2],
            [-12.0, -6.0 * L, 12.0, -6.0 * L],
            [6.0 * L, 2.0 * L**2, -6.0 * L, 4.0 * L**2],
        ]
    )


def truss_stiffness(EA: float, L: float) -> np.ndarray:
    """Axial stiffness (2x2) over (u_t1, u_t2): (EA/L) [[1,-1],[-1,1]]."""
    _check_length(L)
    if EA < 0.0:
        raise ValueError(f"axial stiffness must be nonnegative, got {EA}")
    c = EA / L
    return c * np.array([[1.0, -1.0], [-1.0, 1.0]])


def _check_frame(n: np.ndarray, t: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    n = np.asarray(n, dtype=float)
    t = np.asarray(t, dtype=float)
    if (
        abs(float(n @ n) - 1.0) > 1e-10
        or abs(float(t @ t) - 1.0) > 1e-10
        or abs(float(n @ t)) > 1e-10
    ):
        raise ValueError("(n, t) must be an orthonormal frame")
    return n, t


def local_to_cartesian(n: np.ndarray, t: np.ndarray) -> np.ndarray:
    """Nodal transformation (u_x, u_y, theta) = T (u_n, u_t, theta).

    T = [[n_x, t_x, 0], [n_y, t_y, 0], [0, 0, 1]]; orthogonal, so the
    inverse is the transpose.
    """
    n, t = _check_frame(n, t)
    return np.array([[n[0], t[0], 0.0], [n[1], t[1], 0.0], [0.0, 0.0, 1.0]])


def bending_dof_matrix(n: np.ndarray) -> np.ndarray:
    """Rows extracting (u_n1, theta1, u_n2, theta2) from the six Cartesian
    element DOFs (u_x1, u_y1, theta1, u_x2, u_y2, theta2)."""
    n = np.asarray(n, dtype=float)
    G = np.zeros((4, 6))
    G[0, 0:2] = n
    G[1, 2] = 1.0
    G[2, 3:5] = n
    G[3, 5] = 1.0
    return G


def truss_dof_matrix(t: np.ndarray) -> np.ndarray:
    """Rows extracting (u_t1, u_t2) from the six Cartesian element DOFs."""
    t = np.asarray(t, dtype=float)
    G = np.zeros((2, 6))
    G[0, 0:2] = t
    G[1, 3:5] = t
    return G


def cartesian_element_stiffness(
    EI: float, EA: float, L: float, n: np.ndarray, t: np.ndarray
) -> np.ndarray:
    """Beam-truss element stiffness (6x6) in Cartesian interface DOFs."""
    n, t = _check_frame(n, t)
    Gb = bending_dof_matrix(n)
    Gt = truss_dof_matrix(t)
    K = Gb.T @ hermite_bending_stiffness(EI, L) @ Gb
    K += Gt.T @ truss_stiffness(EA, L) @ Gt
    return K


def evaluate_interface_field(
    n: np.ndarray,
    t: np.ndarray,
    L: float,
    s_local: float,
    cartesian_dofs: np.ndarray,
) -> tuple[np.ndarray, float, float]:
    """Interface displacement at local coordinate s on one element.

    Returns (u_Gamma, u_n, u_t) with u_Gamma = u_n * n + u_t * t. The local
    DOFs are recovered from the Cartesian element vector through the
    transposed nodal transformation.
    """
    if not -1e-12 * max(L, 1.0) <= s_local <= L * (1.0 + 1e-12) + 1e-12:
        raise ValueError(f"s={s_local} outside element [0, {L}]")
    n, t = _check_frame(n, t)
    d = np.asarray(cartesian_dofs, dtype=float)
    un = float(hermite_shape(s_local, L) @ (bending_dof_matrix(n) @ d))
    ut = float(linear_shape(s_local, L) @ (truss_dof_matrix(t) @ d))
    return un * n + ut * t, un, ut


def interface_rotation(
    n: np.ndarray, L: float, s_local: float, cartesian_dofs: np.ndarray
) -> float:
    """Slope theta(s) = u_n'(s) of the Hermite deflection on one element."""
    d = np.asarray(cartesian_dofs, dtype=float)
    return float(hermite_shape_d1(s_local, L) @ (bending_dof_matrix(n) @ d))


def interface_load_vector(
    f_n,
    f_t,
    n: np.ndarray,
    t: np.ndarray,
    L: float,
    s_start: float = 0.0,
) -> np.ndarray:
    """Consistent element load vector (6, Cartesian DOFs) for distributed
    loads f_n(s), f_t(s) given as callables of the global arclength.

    Integrated with 4-point Gauss per element, exact for the cubic basis
    against polynomial loads up to degree 4.
    """
    n, t = _check_frame(n, t)
    s_loc, w = gauss_rule(0.0, L)
    H = hermite_shape(s_loc, L)
    P = linear_shape(s_loc, L)
    s_glob = s_start + s_loc
    fn = np.array([float(f_n(s)) for s in s_glob])
    ft = np.array([float(f_t(s)) for s in s_glob])
    load_bend = (w[:, None] * fn[:, None] * H).sum(axis=0)
    load_truss = (w[:, None] * ft[:, None] * P).sum(axis=0)
    return bending_dof_matrix(n).T @ load_bend + truss_dof_matrix(t).T @ load_truss
