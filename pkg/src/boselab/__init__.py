"""Random weighted partitions, Bose-Einstein equilibria and condensation.

Exact counting and sampling of the measures P_M and P_{M,N} over occupation
sequences, the equilibrium parameters that describe their typical shape,
and the contour-integral machinery behind their concentration bounds.
"""

from .equilibrium import (
    ConvergenceError,
    DeltaSpec,
    EquilibriumSolution,
    GrandCanonicalSolution,
    Regime,
    RegimeError,
    classify,
    coloring_threshold,
    condensed_profile,
    cumulative_tail,
    deviation_radius,
    occupation,
    occupation_profile,
    reference_profile,
    solve_b,
    solve_beta_mu,
    threshold,
    total_occupation,
)
from .exact_oracle import (
    CapacityError,
    Configuration,
    WeightTable,
    build_table,
    config_weight,
    enumerate_configs,
    exact_linear_statistic,
    gen_function_coeffs,
    log_weight_cumulative,
    log_weight_exact_energy,
    weight_cumulative,
    weight_exact_energy,
    weight_fixed,
)
from .experiments import (
    ExperimentReport,
    run_coloring,
    run_condensation,
    run_deviation,
    run_profile,
)
from .multiplicities import MultiplicitySpec, format_spec, multiplicity, parse_spec, verify_envelope
from .saddlepoint import (
    ActionProfile,
    action,
    check_bounds,
    contour_log_weight,
    contour_weight,
    phase,
    verify_f21,
)
from .sampler import (
    EfficiencyError,
    SampleBatch,
    empirical_tail,
    sample_boltzmann,
    sample_fixed,
    sample_fixed_projected,
    sample_variable,
)
from .special_sums import (
    QuadratureError,
    bose_integral,
    bose_sum,
    bose_sum_em,
    euler_maclaurin,
    gamma_zeta,
)

__version__ = "0.1.0"
