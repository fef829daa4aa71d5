"""mblight: 1D Maxwell-Bloch solver suite.

FDTD electromagnetics on a staggered grid, weakly coupled to an N-level
Lindblad density-matrix propagator, with a setup model, result archive
writer and command line front end.
"""

from .constants import C0, E0, EPS0, HBAR, MU0, PLANCK
from .errors import (
    ConflictError,
    CorruptArchiveError,
    MblightError,
    NotFoundError,
    SolverError,
    ValidationError,
)
from .quantum import (
    LindbladRelaxation,
    PropagatorWorkspace,
    QmDescription,
    QmOperator,
    build_liouvillian,
    matrix_exponential,
    polarization_rate,
    precompute_relaxation_propagator,
    step_exact,
    step_rk4,
    step_splitting,
    triangle_pairs,
    two_level_description,
)
from .core import (
    BoundaryReflectivity,
    ConstantField,
    CurveField,
    DEFAULT_SEED,
    Device,
    GaussianPulse,
    Material,
    RandomField,
    Record,
    Region,
    Result,
    Scenario,
    SechPulse,
    add_material,
    available_solvers,
    available_writers,
    clear_material_library,
    create_solver,
    create_writer,
    ensure_material,
    get_material,
    material_names,
    scenario_validate,
)
from .solver_fdtd import (
    COURANT_NUMBER,
    CellCoefficients,
    FdtdSolver,
    GridLayout,
    get_fdtd_constants,
    init_fdtd_simulation,
)
from .writer_raw import RawWriter, read_archive, write_archive
from .setups import builtin_names, builtin_setup

__version__ = "0.1.0"
