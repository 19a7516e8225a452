"""Discrete maximal operators, slice norms and BMO characterizations on uniform grids."""
from .grid import (
    Cube,
    CubeFamily,
    GridFunction,
    GridParseError,
    PrefixTable,
    build_prefix,
    cubes_containing,
    format_grid,
    load_grid,
    parse_grid,
    save_grid,
    window_average,
)
from .norms import (
    CHARACTERIZATIONS,
    ExponentSet,
    SliceParams,
    bmo_norm,
    characterization,
    conjugate,
    holder_check,
    local_averages,
    lp_norm,
    slice_norm,
)
from .operators import (
    OperatorParams,
    SignedDecomposition,
    commutator_maximal,
    commutator_sharp,
    decompose_sign,
    maximal,
    maximal_at,
    maximal_commutator,
    maximal_fast,
    maximal_restricted,
    sharp_maximal,
)
from .verify import GeneratorSpec, SuiteConfig, VerificationReport, generate, run_suite

__version__ = "0.1.0"
