"""Numerical laboratory for IRS-aided multi-antenna broadcast channels.

Channel models, closed-form capacity and threshold formulas, element and
power allocation solvers, a hybrid SDMA-TDMA scheduler with Monte-Carlo
validation, and a CSV experiment harness.
"""

from .config import (
    CENTRALIZED,
    CONTINUOUS,
    DISTRIBUTED,
    LOS,
    AngleSet,
    GuardExceededError,
    InfeasibleError,
    SystemConfig,
    ValidationError,
    db_to_linear,
    dbm_to_watts,
    derive_trial_seed,
    generator_from_seed,
    linear_to_db,
    load_scenario,
    make_config,
    upa_factors,
    validate_homogeneous,
    watts_to_dbm,
)
from .channel import (
    ChannelRealization,
    PhasePattern,
    complex_normal,
    default_angles,
    effective_channel,
    ideal_aod_set,
    steering_inner_product,
    synth_channels,
    ula_response,
    upa_response,
)
from .beamform import (
    BeamformerSet,
    brute_force_phase_search,
    mrt_beamformer,
    optimal_phase_pattern,
    passive_gain,
    quantization_gain,
)
from .capacity import (
    RateReport,
    ThresholdReport,
    asymptotic_sum_rates,
    capacity_region_centralized,
    capacity_region_distributed,
    centralized_sum_rate,
    distributed_sum_rate,
    distributed_tdma_sum_rate,
    distributed_user_rate,
    dof,
    g_curve,
    solve_c_th,
    sum_rate_crossover,
    threshold_report,
)
from .allocation import (
    AllocationResult,
    equalizing_powers,
    exhaustive_element_search,
    maxmin_allocation,
    round_elements,
    snr_coefficient,
    sumrate_equal_allocation,
    water_filling,
)
from .scheduler import (
    CorrelationEstimate,
    SlotPlan,
    build_slot_plans,
    correlation_closed_form,
    correlation_monte_carlo,
    ergodic_rate_closed_form,
    ergodic_rate_monte_carlo,
    hybrid_sum_rate,
    slot_sinr,
)

__version__ = "0.1.0"
