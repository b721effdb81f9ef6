"""Maximin utility preference robust optimization toolkit.

Builds ambiguity sets of piecewise-linear utilities from pairwise
comparisons, evaluates Lebesgue-Stieltjes preference rows exactly, and
solves the resulting maximin problems by inner LP/MIP plus an outer
derivative-free search or a single mixed-integer reformulation.
"""

from .ambiguity import (
    AmbiguitySpec,
    ErrorBoundInputs,
    assemble,
    error_bound_inputs,
    feasibility,
    hausdorff_bound,
    hoffman_bound,
    slater_margin,
    slater_point,
    value_error_bound,
)
from .dfree import DfreeConfig, OuterResult, outer_solve
from .elicit import (
    Answer,
    ElicitationSession,
    Question,
    run_algorithm,
    simulate_dm,
)
from .grids import (
    BarycentricCoords,
    GridProduct,
    Simplex,
    barycentric_coords,
    grid_from_lists,
    locate_cell,
    locate_simplex,
    triangulate_cell,
    unit_grid,
)
from .lsint import (
    DiscreteLottery,
    GeneralPsi,
    LotteryPair,
    PreferenceConstraint,
    SimplePsi,
    certain,
    constraint_row,
    corner_lottery,
    ls_integral_pla,
    transform_by_parts,
)
from .models import (
    EplaInner,
    InconsistencyConfig,
    LinearGroups,
    GeneralReward,
    MaximinResult,
    ScenarioSet,
    inner_epla,
    inner_epla_constrained,
    inner_inconsistent,
    inner_mixed,
    inner_ipla,
    ipla_system,
    maximin_constrained,
    maximin_epla,
    maximin_ipla,
    maximin_mixed,
    maximin_true,
    perturb_prefs,
    saa_study,
    single_milp,
)
from .pla import (
    Partition,
    PlaUtility,
    ShapeSpec,
    TYPE1,
    TYPE2,
    check_shape,
    coefficient_vector,
    interpolate_from_function,
    mixed_partition,
    sup_distance,
)
from .solver import (
    ProgramIR,
    SolveResult,
    get_backend,
    make_ir,
    register_backend,
    solve_lp,
    solve_mip,
    verify_backend,
    write_lp,
)

__version__ = "0.1.0"
