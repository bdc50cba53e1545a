"""embeam: plane-stress finite elements with embedded beam-truss interface
networks, coupled by hybridized Nitsche methods.

The bulk domains are triangulated independently per subdomain (meshes need
not match at the interface). The interface carries its own displacement
field with Euler-Bernoulli bending and axial stiffness, discretized by
cubic Hermite and linear shape functions over shared Cartesian nodal DOFs
(u_x, u_y, theta). Four couplings are available: the pure hybrid method,
strong coupling with interface stiffness, a stabilized cohesive law with
normal/tangential compliances, and a one-sided cohesive law with contact
solved by semismooth Newton.
"""

from .beam import (
    SectionProperties,
    cartesian_element_stiffness,
    evaluate_interface_field,
    hermite_bending_stiffness,
    interface_load_vector,
    local_to_cartesian,
    truss_stiffness,
)
from .coupling import (
    ContactState,
    CouplingMode,
    CouplingParams,
    TauStabilization,
    cohesive_blocks,
    contact_jacobian,
    contact_residual,
    hybrid_blocks,
    plus_part,
)
from .cut import CutPartition, SubSegment, build_cut_partition
from .elasticity import (
    Material,
    Stress2,
    body_load_vector,
    edge_traction,
    element_stress,
    lame_from_engineering,
    p1_stiffness,
)
from .export import export, read_profile, write_profiles, write_svg, write_vtk
from .interface import InterfaceMesh, InterfaceNode, InterfaceSegment, build_interface
from .mesh import (
    MeshError,
    SubdomainMesh,
    rectangle_mesh,
    read_mesh_text,
    triangulate_subdomain,
    write_mesh_text,
)
from .scenario import BUILTIN_SCENARIOS, ConfigError, Scenario, builtin_scenario, build_problem
from .studies import run_convergence, run_patch_test
from .system import (
    DirichletBC,
    DofMap,
    GlobalSystem,
    Problem,
    Solution,
    SolverError,
    apply_dirichlet,
    assemble,
    postprocess,
    solve,
    solve_contact,
    solve_linear,
)

__version__ = "0.1.0"
