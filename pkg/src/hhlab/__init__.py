"""Numerical laboratory for the generalized Henon-Heiles family.

Simulation, chaos diagnostics (sections, Lyapunov exponents), symmetry-line
periodic orbits, and sparse recovery of the equations of motion from data.
"""

__version__ = "0.1.0"

from .errors import (
    AllClean,
    EmptyLine,
    HHLabError,
    LibraryTooSmall,
    NoCrossings,
    NoIntersections,
    NonFinite,
    NoRelation,
    NoReturn,
    NotClosed,
    OffShell,
    RankDeficient,
    TooShort,
    Unbounded,
)
from .system import (
    State,
    SystemParams,
    TangentFrame,
    Trajectory,
    critical_energy,
    flow_endpoint,
    grad_potential,
    hessian_potential,
    integrate,
    integrate_variational,
    max_energy_drift,
    potential,
    rescale,
    rhs,
    solve_momentum_on_shell,
    total_energy,
)
from .diagnostics import (
    LyapunovMap,
    LyapunovResult,
    SectionPoint,
    SectionSet,
    classify_spectrum,
    largest_lyapunov,
    lyapunov_map,
    poincare_section,
)
from .symmetry import (
    Involution,
    PeriodicIC,
    SymmetryLine,
    advance_line,
    base_involution,
    gamma0,
    periodic_ics,
    return_map,
    verify_periodic,
)
from .sindy import (
    CandidateLibrary,
    ModelDiff,
    RelationReport,
    SparseModel,
    build_library,
    estimate_derivatives,
    exact_model,
    extra_term_series,
    find_dtc,
    model_diff,
    periodic_relation,
    reconstruct,
    stlsq,
)
from . import catalog, io
