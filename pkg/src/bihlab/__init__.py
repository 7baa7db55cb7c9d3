"""Discrete laboratory for the two biharmonic Hilbert complexes.

Assembles the six tensor differential operators on voxelized 3D domains
with mixed essential/natural boundary parts, verifies the complex and
identity structure exactly, and computes Helmholtz decompositions,
cohomology (Dirichlet/Neumann tensor fields), minimal-norm potentials,
and optimal Friedrichs/Poincare constants.
"""

from .domain import (
    GridSpec,
    VoxelDomain,
    BoundaryPartition,
    DofMask,
    build_domain,
    build_masks,
    partition_boundary,
)
from .diff_ops import (
    SparseOp,
    BlockDiagMass,
    assemble_biharmonic_ops,
    assemble_vector_ops,
    partial,
    restrict,
    weighted_adjoint,
    write_sparseop,
    read_sparseop,
)
from .complexes import (
    Weight,
    DofSpace,
    HilbertComplex,
    PolynomialSpace,
    build_complex,
    dual_complex,
    end_projectors,
    identity_weight,
    random_weight,
    weak_bc_space,
    weak_strong_report,
    parse_descriptor,
    complex_from_descriptor,
)
from .hodge import (
    HarmonicBasis,
    DecompositionResult,
    PoincareReport,
    harmonic_fields,
    helmholtz,
    potential_solve,
    poincare_constants,
    combined_estimate_check,
    kernel_projector,
    alt_projection_check,
    weight_independence_study,
)
from .identities import REGISTRY, run_all, run_identity
from .reporting import Field, save_field, load_field

__version__ = "0.1.0"
