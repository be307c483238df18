"""Pathwise stochastic calculus along level-crossing partitions.

Everything here is probability-free: local times, quadratic variation, and
change-of-variable formulas are computed exactly from a single piecewise
linear path, and the probabilistic statements are audited as frequency
checks over seeded path ensembles.
"""

from .audit import (
    AdmissibilityError,
    AuditReport,
    DeviationReport,
    HitRule,
    MonteCarloConfig,
    ResolvedStrategy,
    SimpleStrategy,
    StrategyEvent,
    buy_and_hold,
    crossing_bound_report,
    deviation_frequency,
    min_wealth,
    resolve,
    upcrossing_strategy,
    wealth,
)
from .calculus import (
    AbsoluteContinuityError,
    CVDecomposition,
    FunctionDescriptor,
    IntegralResult,
    OccupationReport,
    QVResult,
    QVStudy,
    TanakaMeyerResult,
    bv_function,
    c2_function,
    change_of_variable,
    follmer_integral,
    ito_bound_check,
    ito_identity_check,
    occupation_density_check,
    qvar_function,
    quadratic_variation,
    quadratic_variation_along,
    tanaka_meyer,
    verify_absolute_continuity,
    young_integral,
)
from .localtime import (
    ConvergenceReport,
    CoarseningWarning,
    CrossingTally,
    FieldMismatchError,
    LocalTimeField,
    ResolutionWarning,
    Section,
    TestFunction,
    WeakL2Report,
    convergence_study,
    count_differing,
    crossing_counts,
    default_test_functions,
    discrete_local_time,
    downcrossing_estimator,
    holder_coefficient,
    local_time_field,
    p_variation,
    p_variation_profile,
    tanaka_residual,
    tanaka_term,
    uniform_distance,
    weak_l2_check,
)
from .partitions import (
    Grid,
    Partition,
    as_grid,
    lebesgue_partition,
    mesh_along,
    save_partition_csv,
    verify_nested,
)
from .paths import (
    CsvFormatError,
    DomainError,
    HalfOpenInterval,
    Path,
    PathValidationError,
    brownian_path,
    constant_path,
    evaluate,
    evaluate_many,
    first_hit,
    linear_path,
    load_csv,
    make_path,
    next_grid_hit,
    path_extremes,
    random_segment_path,
    save_csv,
    tent_path,
    zigzag_path,
)

__version__ = "0.1.0"

__all__ = [
    "__version__",
    # paths
    "Path", "HalfOpenInterval", "make_path", "evaluate", "evaluate_many",
    "path_extremes", "next_grid_hit", "first_hit", "brownian_path",
    "tent_path", "constant_path", "linear_path", "zigzag_path",
    "random_segment_path", "save_csv", "load_csv",
    "PathValidationError", "DomainError", "CsvFormatError",
    # partitions
    "Grid", "as_grid", "Partition", "lebesgue_partition", "mesh_along",
    "verify_nested", "save_partition_csv",
    # local time
    "discrete_local_time", "tanaka_term", "tanaka_residual",
    "CrossingTally", "crossing_counts", "downcrossing_estimator",
    "Section", "LocalTimeField", "local_time_field", "uniform_distance",
    "ConvergenceReport", "convergence_study", "p_variation",
    "p_variation_profile", "holder_coefficient", "TestFunction",
    "default_test_functions", "WeakL2Report", "weak_l2_check",
    "count_differing", "ResolutionWarning", "CoarseningWarning",
    "FieldMismatchError",
    # calculus
    "QVResult", "QVStudy", "quadratic_variation_along", "quadratic_variation",
    "FunctionDescriptor", "c2_function", "bv_function", "qvar_function",
    "verify_absolute_continuity", "AbsoluteContinuityError",
    "IntegralResult", "follmer_integral", "ito_identity_check",
    "ito_bound_check", "young_integral", "CVDecomposition",
    "change_of_variable", "TanakaMeyerResult", "tanaka_meyer",
    "OccupationReport", "occupation_density_check",
    # audit
    "HitRule", "StrategyEvent", "SimpleStrategy", "ResolvedStrategy",
    "buy_and_hold", "resolve", "wealth", "min_wealth", "upcrossing_strategy",
    "AdmissibilityError", "AuditReport", "crossing_bound_report",
    "MonteCarloConfig", "DeviationReport", "deviation_frequency",
]
