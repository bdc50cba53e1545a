"""Interface coupling blocks on cut sub-segments.

Each block couples the 6 DOFs of one adjacent bulk triangle with the 6
Cartesian DOFs of the interface beam element under the sub-segment, in the
combined local ordering z = (bulk 6, interface 6). Everything is integrated
with 4-point Gauss per sub-segment, which is exact for all products of the
traces involved (P1 bulk displacement and constant traction against cubic
Hermite and linear interface shapes).

Three couplings are provided per side i of a sub-segment:

* symmetric-penalty blocks: -(sigma(u_i).n_i, v_i - v_G)
  - (u_i - u_G, sigma(v_i).n_i) + gamma_i (u_i - u_G, v_i - v_G)
  with gamma_i = gamma_{0,i} / h_i;
* stabilized cohesive blocks with compliance C_i = alpha_i n(x)n
  + beta_i t(x)t and stabilization tau_i = diag(1/(h_i/gamma_{0,i}
  + alpha_i), 1/(h_i/gamma_{0,i} + beta_i)) in the (n, t) frame, which
  degenerate to the penalty blocks entry-wise as alpha, beta -> 0;
* the one-sided (contact) residual and its generalized Jacobian in the
  plus-part reformulation of the Kuhn-Tucker conditions, with
  1/eps_i = gamma_{0,i}/h_i + 1/alpha_i. The branch is decided per
  quadrature point: active (contact) where the gap indicator
  g_i = jump_n - eps_i * p_i is positive, with multiplier
  p_i = sigma_n(u_i) + jump_n / alpha_i.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from . import beam
from .elasticity import Material, elastic_moduli, strain_displacement
from .interface import InterfaceSegment
from .mesh import SubdomainMesh

__all__ = [
    "CouplingMode",
    "CouplingParams",
    "TauStabilization",
    "ContactState",
    "SideTrace",
    "plus_part",
    "make_side_trace",
    "hybrid_blocks",
    "cohesive_blocks",
    "contact_residual",
    "contact_jacobian",
]

N_GAUSS = 4


class CouplingMode(Enum):
    HYBRID = "hybrid"
    STRONG_STIFFNESS = "strong-stiffness"
    COHESIVE = "cohesive"
    CONTACT = "contact"


def plus_part(x):
    """[x]_+ = max(x, 0), elementwise."""
    return np.maximum(x, 0.0)


def _per_side(value, subdomain_id: int) -> float:
    if isinstance(value, dict):
        return float(value[subdomain_id])
    return float(value)


@dataclass(frozen=True)
class CouplingParams:
    """Interface coupling parameters.

    gamma0, alpha and beta are either uniform scalars or per-subdomain
    dicts. gamma0 is the dimensionless-in-h penalty scale (stress units);
    the assembled penalty is gamma0 / h with h the local adjacent-triangle
    diameter. alpha and beta are the normal and tangential compliances of
    the cohesive law (inverse stiffnesses).
    """

    mode: CouplingMode = CouplingMode.HYBRID
    gamma0: float | dict = 1.0
    alpha: float | dict = 0.0
    beta: float | dict = 0.0

    def __post_init__(self) -> None:
        for sid in self._probe_ids():
            if self.gamma0_for(sid) <= 0.0:
                raise ValueError("gamma0 must be positive")
            if self.alpha_for(sid) < 0.0 or self.beta_for(sid) < 0.0:
                raise ValueError("compliances alpha, beta must be nonnegative")
            if self.mode in (CouplingMode.HYBRID, CouplingMode.STRONG_STIFFNESS) and (
                self.alpha_for(sid) != 0.0 or self.beta_for(sid) != 0.0
            ):
                raise ValueError(f"{self.mode.value} mode requires alpha = beta = 0")

    def _probe_ids(self):
        ids = set()
        for v in (self.gamma0, self.alpha, self.beta):
            if isinstance(v, dict):
                ids.update(v.keys())
        return ids or {0}

    def gamma0_for(self, subdomain_id: int) -> float:
        return _per_side(self.gamma0, subdomain_id)

    def alpha_for(self, subdomain_id: int) -> float:
        return _per_side(self.alpha, subdomain_id)

    def beta_for(self, subdomain_id: int) -> float:
        return _per_side(self.beta, subdomain_id)


@dataclass(frozen=True)
class TauStabilization:
    """Stabilization weights of the cohesive form for one side of one
    sub-segment: tau_n = 1/(h/gamma0 + alpha), tau_t = 1/(h/gamma0 + beta)."""

    tau_n: float
    tau_t: float

    @classmethod
    def for_side(cls, params: CouplingParams, subdomain_id: int, h: float) -> "TauStabilization":
        if h <= 0.0:
            raise ValueError("local mesh size h must be positive")
        base = h / params.gamma0_for(subdomain_id)
        return cls(
            tau_n=1.0 / (base + params.alpha_for(subdomain_id)),
            tau_t=1.0 / (base + params.beta_for(subdomain_id)),
        )


@dataclass
class ContactState:
    """Per-quadrature-point contact branch data for one sub-segment side."""

    active: np.ndarray  # bool (nq,)
    gap: np.ndarray  # g_i = jump_n - eps * p_i
    multiplier: np.ndarray  # p_i = sigma_n + jump_n / alpha
    nitsche_epsilon: float


@dataclass(frozen=True)
class SideTrace:
    """Trace operators of one (sub-segment, side) pair at its quadrature
    points, over the combined 12 local DOFs (bulk triangle, interface
    element).

    jump_op[q] maps z to u_i(x_q) - u_Gamma(x_q); traction_op maps z to
    sigma(u_i) . n_i (constant for P1). sign is +1 when the side's outward
    normal equals the segment normal n.
    """

    n: np.ndarray
    t: np.ndarray
    sign: float
    h: float
    s_points: np.ndarray  # (nq,) global arclength
    weights: np.ndarray  # (nq,)
    jump_op: np.ndarray  # (nq, 2, 12)
    traction_op: np.ndarray  # (2, 12)
    bulk_disp_op: np.ndarray = field(repr=False, default=None)  # (nq, 2, 6)
    iface_disp_op: np.ndarray = field(repr=False, default=None)  # (nq, 2, 6)


def _barycentric_rows(tri_coords: np.ndarray, points: np.ndarray) -> np.ndarray:
    """P1 shape function values (npts, 3) at the given physical points."""
    A = np.ones((3, 3))
    A[1:, :] = tri_coords.T
    rhs = np.ones((3, len(points)))
    rhs[1:, :] = points.T
    return np.linalg.solve(A, rhs).T


def make_side_trace(
    segment: InterfaceSegment,
    s0: float,
    s1: float,
    element_index: int,
    mesh: SubdomainMesh,
    triangle: int,
    material: Material,
    h: float,
) -> SideTrace:
    """Build the trace operators for one side of the interval [s0, s1]."""
    sign = segment.outward_sign(mesh.subdomain_id)
    n, t = segment.normal, segment.tangent
    s_q, w_q = beam.gauss_rule(s0, s1, N_GAUSS)
    x_q = segment.endpoints[0] + np.outer(s_q, t)

    lam_rows = _barycentric_rows(mesh.triangle_coords(triangle), x_q)
    U = np.zeros((N_GAUSS, 2, 6))
    U[:, 0, 0::2] = lam_rows
    U[:, 1, 1::2] = lam_rows

    B, _ = strain_displacement(mesh.triangle_coords(triangle))
    D = elastic_moduli(material)
    n_i = sign * n
    Nmat = np.array([[n_i[0], 0.0, n_i[1]], [0.0, n_i[1], n_i[0]]])
    traction = np.zeros((2, 12))
    traction[:, :6] = Nmat @ D @ B

    elem_s0 = segment.element_s[element_index]
    L_e = segment.element_s[element_index + 1] - elem_s0
    Gb = beam.bending_dof_matrix(n)
    Gt = beam.truss_dof_matrix(t)
    s_loc = s_q - elem_s0
    H = beam.hermite_shape(s_loc, L_e)  # (nq, 4)
    P = beam.linear_shape(s_loc, L_e)  # (nq, 2)
    w_n = H @ Gb  # (nq, 6)
    w_t = P @ Gt
    W = n[None, :, None] * w_n[:, None, :] + t[None, :, None] * w_t[:, None, :]

    jump = np.concatenate([U, -W], axis=2)
    return SideTrace(
        n=n,
        t=t,
        sign=sign,
        h=h,
        s_points=s_q,
        weights=w_q,
        jump_op=jump,
        traction_op=traction,
        bulk_disp_op=U,
        iface_disp_op=W,
    )


def hybrid_blocks(trace: SideTrace, gamma: float) -> np.ndarray:
    """Symmetric-penalty coupling block (12x12) for one side.

    Implements -(sigma(u_i).n_i, v_i - v_G) - (u_i - u_G, sigma(v_i).n_i)
    + gamma (u_i - u_G, v_i - v_G) over the sub-segment.
    """
    K = np.zeros((12, 12))
    S = trace.traction_op
    for w, J in zip(trace.weights, trace.jump_op):
        K -= w * (S.T @ J + J.T @ S)
        K += w * gamma * (J.T @ J)
    return K


def _channel_rows(trace: SideTrace, direction: np.ndarray):
    """Scalar channel rows (nq, 12) of jump and traction along a frame axis."""
    j_rows = np.einsum("k,qkm->qm", direction, trace.jump_op)
    p_row = direction @ trace.traction_op
    return j_rows, p_row


def cohesive_blocks(
    trace: SideTrace,
    alpha: float,
    beta: float,
    tau: TauStabilization,
    channels: str = "nt",
) -> np.ndarray:
    """Stabilized cohesive coupling block (12x12) for one side.

    Channel-decomposed form of
    -(sigma.n_i, C sigma(v).n_i) - (sigma.n_i, v_i - v_G)
    - (C sigma.n_i + u_i - u_G, sigma(v).n_i)
    + (C sigma.n_i + u_i - u_G, tau (C sigma(v).n_i + v_i - v_G)),
    where the n and t channels carry compliances alpha and beta and
    stabilizations tau_n and tau_t. ``channels`` selects "n", "t" or both;
    the tangential channel alone is what Contact mode assembles linearly.
    """
    K = np.zeros((12, 12))
    for axis, compliance, tau_c in (
        (trace.n, alpha, tau.tau_n),
        (trace.t, beta, tau.tau_t),
    ):
        key = "n" if axis is trace.n else "t"
        if key not in channels:
            continue
        j_rows, p_row = _channel_rows(trace, axis)
        PtP = np.outer(p_row, p_row)
        for w, j in zip(trace.weights, j_rows):
            stab = compliance * p_row + j
            K += w * (
                -compliance * PtP
                - np.outer(p_row, j)
                - np.outer(j, p_row)
                + tau_c * np.outer(stab, stab)
            )
    return K


def _contact_rows(trace: SideTrace, alpha: float, gamma0: float):
    """Side-signed normal jump, multiplier and gap rows for the contact law."""
    if alpha <= 0.0:
        raise ValueError("Contact coupling requires alpha > 0 (alpha = 0 is rejected)")
    eps = 1.0 / (gamma0 / trace.h + 1.0 / alpha)
    jn_rows, pn_row = _channel_rows(trace, trace.n)
    jn_rows = trace.sign * jn_rows  # jump_n^i = n_i . (u_i - u_n n)
    sigma_n_row = trace.sign * pn_row  # sigma_n = n . sigma(u_i) . n
    p_rows = sigma_n_row[None, :] + jn_rows / alpha
    g_rows = jn_rows - eps * p_rows
    return eps, jn_rows, p_rows, g_rows


def contact_residual(
    trace: SideTrace,
    z: np.ndarray,
    alpha: float,
    gamma0: float,
) -> tuple[np.ndarray, ContactState]:
    """Nonlinear normal contact residual (12,) for one side at state z.

    Realizes the plus-part reformulation of the Kuhn-Tucker conditions:
    (jump_n / alpha, jump_n(v)) + (eps^-1 [g]_+, jump_n(v) - eps p(v))
    - (eps p, p(v)), with g = jump_n - eps p. The tangential part of the
    one-sided law is linear and assembled via cohesive_blocks(channels="t").
    """
    eps, jn_rows, p_rows, g_rows = _contact_rows(trace, alpha, gamma0)
    z = np.asarray(z, dtype=float)
    jn = jn_rows @ z
    p = p_rows @ z
    g = g_rows @ z
    active = g > 0.0
    r = np.zeros(12)
    for q in range(len(trace.weights)):
        w = trace.weights[q]
        r += w * (jn[q] / alpha) * jn_rows[q]
        r += w * (plus_part(g[q]) / eps) * g_rows[q]
        r -= w * eps * p[q] * p_rows[q]
    return r, ContactState(active=active, gap=g, multiplier=p, nitsche_epsilon=eps)


def contact_jacobian(
    trace: SideTrace,
    state: ContactState,
    alpha: float,
    gamma0: float,
) -> np.ndarray:
    """Generalized derivative (12x12) of contact_residual at the given state.

    The plus-part contributes its bilinear form only at active quadrature
    points, so the tangent is symmetric on every branch.
    """
    eps, jn_rows, p_rows, g_rows = _contact_rows(trace, alpha, gamma0)
    K = np.zeros((12, 12))
    for q in range(len(trace.weights)):
        w = trace.weights[q]
        K += (w / alpha) * np.outer(jn_rows[q], jn_rows[q])
        if state.active[q]:
            K += (w / eps) * np.outer(g_rows[q], g_rows[q])
        K -= w * eps * np.outer(p_rows[q], p_rows[q])
    return K
