"""
trimshell: explicit dynamics of trimmed isogeometric Reissner-Mindlin shells

Tensor-product B-spline discretizations of shell mid-surfaces cut by trimming
curves, polynomial-extension stabilization of small cut elements, row-sum
lumped mass matrices with critical time step analysis, and central difference /
Newmark time integration, together with the benchmark problems and the
experiment pipeline that drives them.
"""

try:
    from ._version import version as __version__
except ImportError:  # pragma: no cover
    __version__ = "0.0.0"

# Discretization
from .assembly import (
    ConstrainedSystem,
    LoadData,
    MaterialParams,
    ShellDiscretization,
    ShellSystem,
    apply_dirichlet,
    assemble_load,
    assemble_mass,
    assemble_stiffness,
    assemble_system,
    generalized_strains,
    generalized_stresses,
    project_initial,
    stresses_at,
)

# Experiment pipeline
from .config import ExperimentConfig, load_config, parse_config
from .dynamics import (
    DynState,
    RunResult,
    central_difference_run,
    error_norms,
    newmark_run,
)

# Errors
from .errors import (
    ConfigurationError,
    DomainError,
    IndefiniteLumpedMassError,
    InstabilityError,
    ModelValidityWarning,
    SingularChartError,
    SolverError,
    StabilizationInfeasibleError,
    TrimShellError,
    UnsupportedOrderError,
)
from .examples import Problem, build_example

# Geometry
from .geometry import SurfaceChart, frame_at, slenderness, volume_frame_at
from .harness import convergence, run, spectrum, sweep
from .manufactured import ManufacturedSolution, TimeProfile

# Utility functions
from .path import output_path, project_root

# Spectral analysis
from .spectrum import (
    LumpedMass,
    SpectrumReport,
    critical_dt,
    jacobi_scaling,
    max_generalized_eig,
    min_generalized_eigs,
    row_sum_lump,
    scaled_solver,
    spectrum_report,
)

# Splines
from .splines import (
    KnotVector,
    SplineSpace1D,
    TensorSplineSpace,
    eval_basis_derivs_1d,
    greville_points,
)
from .stabilization import ExtensionMap, stabilize

# Trimming
from .trimming import ElementGrid, TrimmedMesh, TrimRegion, classify_elements

__all__ = [
    # Splines
    "KnotVector",
    "SplineSpace1D",
    "TensorSplineSpace",
    "eval_basis_derivs_1d",
    "greville_points",
    # Geometry
    "SurfaceChart",
    "frame_at",
    "slenderness",
    "volume_frame_at",
    # Trimming and stabilization
    "ElementGrid",
    "TrimRegion",
    "TrimmedMesh",
    "classify_elements",
    "ExtensionMap",
    "stabilize",
    # Discretization
    "MaterialParams",
    "LoadData",
    "ShellDiscretization",
    "ShellSystem",
    "ConstrainedSystem",
    "assemble_mass",
    "assemble_stiffness",
    "assemble_load",
    "assemble_system",
    "apply_dirichlet",
    "project_initial",
    "generalized_strains",
    "generalized_stresses",
    "stresses_at",
    # Spectral analysis
    "LumpedMass",
    "SpectrumReport",
    "row_sum_lump",
    "max_generalized_eig",
    "min_generalized_eigs",
    "critical_dt",
    "spectrum_report",
    "jacobi_scaling",
    "scaled_solver",
    # Time integration
    "DynState",
    "RunResult",
    "central_difference_run",
    "newmark_run",
    "error_norms",
    # Experiment pipeline
    "ManufacturedSolution",
    "TimeProfile",
    "Problem",
    "build_example",
    "ExperimentConfig",
    "load_config",
    "parse_config",
    "run",
    "sweep",
    "spectrum",
    "convergence",
    # Errors
    "TrimShellError",
    "DomainError",
    "UnsupportedOrderError",
    "SingularChartError",
    "StabilizationInfeasibleError",
    "ConfigurationError",
    "IndefiniteLumpedMassError",
    "SolverError",
    "InstabilityError",
    "ModelValidityWarning",
    # Path functions
    "project_root",
    "output_path",
]
