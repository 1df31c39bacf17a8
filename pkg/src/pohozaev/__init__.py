"""Ground states of dilation-covariant variational problems.

A problem is a family of nonnegative functionals psi_i and a potential Phi,
homogeneous of degrees lambda_i and lambda_Phi under ``u(x) -> u(x/t)``.
Ground states minimize ``I = sum psi_i - Phi`` on the Pohozaev set
``sum lambda_i psi_i = lambda_Phi Phi``.
"""

from .config import RunConfig, emit_config, load_config, parse_config
from .core import (
    DilationAction,
    FamilyValues,
    FiberProfile,
    FunctionalFamily,
    PohozaevState,
    Tolerances,
    fiber,
    fiber_root,
    make_state,
    onmanifold_energy,
    pohozaev_identity_check,
    project_to_pohozaev,
)
from .calculus import symmetrize
from .errors import (
    EXIT_CODES,
    HYPOTHESIS_FAILURE_EXIT,
    BracketNotFound,
    ConfigError,
    EpsilonTooLarge,
    GridTooCoarse,
    MissingGradient,
    NoConvergence,
    NonadmissibleExponents,
    NonFiniteValue,
    NotOnManifold,
    ParseError,
    PhiNeverPositive,
    PhiNonpositive,
    PohozaevError,
    ValidationError,
)
from .grids import BoxGrid, GridFunction, RadialGrid, quad, read_csv, resample, write_csv
from .harness import HypothesisReport, check_family
from .harness import check_instance as check_hypotheses
from .nonlinearity import NonlinearitySpec, cubic, cubic_jump, from_config, from_name, power, with_jumps
from .oracle import shooting_oracle
from .problems import Anisotropic, Classical, FractionalSum, GridSpec, ProblemInstance, build_family, check_instance
from .solver import SolverOptions, SolveReport, solve, solve_discontinuous

__version__ = "0.1.0"

__all__ = [
    "RunConfig",
    "emit_config",
    "load_config",
    "parse_config",
    "DilationAction",
    "FamilyValues",
    "FiberProfile",
    "FunctionalFamily",
    "PohozaevState",
    "Tolerances",
    "fiber",
    "fiber_root",
    "make_state",
    "onmanifold_energy",
    "pohozaev_identity_check",
    "project_to_pohozaev",
    "symmetrize",
    "EXIT_CODES",
    "HYPOTHESIS_FAILURE_EXIT",
    "BracketNotFound",
    "ConfigError",
    "EpsilonTooLarge",
    "GridTooCoarse",
    "MissingGradient",
    "NoConvergence",
    "NonadmissibleExponents",
    "NonFiniteValue",
    "NotOnManifold",
    "ParseError",
    "PhiNeverPositive",
    "PhiNonpositive",
    "PohozaevError",
    "ValidationError",
    "BoxGrid",
    "GridFunction",
    "RadialGrid",
    "quad",
    "read_csv",
    "resample",
    "write_csv",
    "HypothesisReport",
    "check_family",
    "check_hypotheses",
    "NonlinearitySpec",
    "cubic",
    "cubic_jump",
    "from_config",
    "from_name",
    "power",
    "with_jumps",
    "shooting_oracle",
    "Anisotropic",
    "Classical",
    "FractionalSum",
    "GridSpec",
    "ProblemInstance",
    "build_family",
    "check_instance",
    "SolverOptions",
    "SolveReport",
    "solve",
    "solve_discontinuous",
]
