"""Plane-stress linear elasticity on constant-strain (P1) triangles.

All element-level routines are pure functions of the triangle vertex
coordinates and a :class:`Material`; strains and stresses are constant per
element, so stiffness and loads are integrated in closed form.

Vertex coordinates are passed as a (3, 2) array in counterclockwise order;
element displacement vectors interleave components as
(u1x, u1y, u2x, u2y, u3x, u3y).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Material",
    "Stress2",
    "lame_from_engineering",
    "triangle_area",
    "triangle_diameter",
    "strain_displacement",
    "elastic_moduli",
    "p1_stiffness",
    "body_load_vector",
    "element_stress",
    "edge_traction",
    "normal_tangential_stress",
]


def lame_from_engineering(E: float, nu: float) -> tuple[float, float]:
    """Convert Young's modulus and Poisson's ratio to plane-stress Lame
    parameters (lambda, mu).

    Plane stress modifies the first parameter: lambda = E*nu/(1 - nu^2),
    while mu = E/(2*(1 + nu)) as usual.
    """
    if E <= 0.0:
        raise ValueError(f"Young's modulus must be positive, got {E}")
    if not -1.0 < nu < 0.5:
        raise ValueError(f"Poisson's ratio must lie in (-1, 1/2), got {nu}")
    lam = E * nu / (1.0 - nu * nu)
    mu = E / (2.0 * (1.0 + nu))
    return lam, mu


@dataclass(frozen=True)
class Material:
    """Isotropic plane-stress material.

    Parameters
    ----------
    E : float
        Young's modulus (stress units).
    nu : float
        Poisson's ratio, in (-1, 1/2).

    The Lame parameters ``lam`` and ``mu`` are derived on construction.
    """

    E: float
    nu: float
    lam: float = field(init=False)
    mu: float = field(init=False)

    def __post_init__(self) -> None:
        lam, mu = lame_from_engineering(self.E, self.nu)
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)


@dataclass(frozen=True)
class Stress2:
    """Symmetric 2x2 stress tensor in component form."""

    sxx: float
    syy: float
    sxy: float

    def tensor(self) -> np.ndarray:
        return np.array([[self.sxx, self.sxy], [self.sxy, self.syy]])

    def traction(self, n: np.ndarray) -> np.ndarray:
        """Traction vector sigma . n."""
        n = np.asarray(n, dtype=float)
        return np.array(
            [self.sxx * n[0] + self.sxy * n[1], self.sxy * n[0] + self.syy * n[1]]
        )


def triangle_area(coords: np.ndarray) -> float:
    """Signed area of a triangle given as a (3, 2) coordinate array."""
    c = np.asarray(coords, dtype=float)
    return 0.5 * (
        (c[1, 0] - c[0, 0]) * (c[2, 1] - c[0, 1])
        - (c[2, 0] - c[0, 0]) * (c[1, 1] - c[0, 1])
    )


def triangle_diameter(coords: np.ndarray) -> float:
    """Longest edge length of a triangle."""
    c = np.asarray(coords, dtype=float)
    e = c[[1, 2, 0]] - c
    return float(np.sqrt((e * e).sum(axis=1).max()))


def _checked_area(coords: np.ndarray) -> float:
    area = triangle_area(coords)
    if area <= 0.0:
        raise ValueError(f"triangle has non-positive area {area}")
    return area


def strain_displacement(coords: np.ndarray) -> tuple[np.ndarray, float]:
    """Constant strain-displacement matrix B (3x6) and the triangle area.

    Rows of B produce the Voigt strain (eps_xx, eps_yy, gamma_xy) from the
    interleaved element displacement vector; gamma_xy is the engineering
    shear strain 2*eps_xy.
    """
    c = np.asarray(coords, dtype=float)
    area = _checked_area(c)
    # gradients of the P1 barycentric shape functions
    b = np.array([c[1, 1] - c[2, 1], c[2, 1] - c[0, 1], c[0, 1] - c[1, 1]])
    g = np.array([c[2, 0] - c[1, 0], c[0, 0] - c[2, 0], c[1, 0] - c[0, 0]])
    b /= 2.0 * area
    g /= 2.0 * area
    B = np.zeros((3, 6))
    B[0, 0::2] = b
    B[1, 1::2] = g
    B[2, 0::2] = g
    B[2, 1::2] = b
    return B, area


def elastic_moduli(material: Material) -> np.ndarray:
    """Voigt moduli matrix D (3x3) with sigma = D @ (eps_xx, eps_yy, gamma_xy)."""
    lam, mu = material.lam, material.mu
    return np.array(
        [
            [lam + 2.0 * mu, lam, 0.0],
            [lam, lam + 2.0 * mu, 0.0],
            [0.0, 0.0, mu],
        ]
    )


def p1_stiffness(coords: np.ndarray, material: Material) -> np.ndarray:
    """Element stiffness matrix (6x6) of the constant-strain triangle.

    Exact since the integrand is constant: K = area * B^T D B. The result is
    symmetric positive semidefinite with the three rigid-body modes as its
    nullspace.
    """
    B, area = strain_displacement(coords)
    D = elastic_moduli(material)
    return area * (B.T @ D @ B)


def body_load_vector(coords: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Consistent load vector (6,) for a constant body force per unit area.

    Each node receives area * f / 3 (exact for P1 shape functions).
    """
    area = _checked_area(coords)
    f = np.asarray(f, dtype=float)
    return np.tile(area * f / 3.0, 3)


def element_stress(
    coords: np.ndarray, displacements: np.ndarray, material: Material
) -> Stress2:
    """Constant P1 stress of an element displacement vector."""
    B, _ = strain_displacement(coords)
    voigt = elastic_moduli(material) @ (B @ np.asarray(displacements, dtype=float))
    return Stress2(sxx=voigt[0], syy=voigt[1], sxy=voigt[2])


def edge_traction(stress: Stress2, n: np.ndarray) -> np.ndarray:
    """Traction sigma . n for a unit normal n."""
    n = np.asarray(n, dtype=float)
    if abs(float(n @ n) - 1.0) > 1e-12:
        raise ValueError("normal vector must have unit length")
    return stress.traction(n)


def normal_tangential_stress(
    stress: Stress2, n: np.ndarray, t: np.ndarray
) -> tuple[float, float]:
    """Scalar contractions (sigma_n, sigma_t) = (n.sigma.n, t.sigma.n)."""
    tr = edge_traction(stress, n)
    t = np.asarray(t, dtype=float)
    return float(np.asarray(n, dtype=float) @ tr), float(t @ tr)
