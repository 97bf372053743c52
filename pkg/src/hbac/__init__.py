"""Heat-bath algorithmic cooling toolkit.

Simulates and analyzes entropy-pumping protocols on small qubit registers:
a classical diagonal-state cooling engine, dipolar spin dynamics in
frequency units, ensemble-robust segmented pulse search, and an error
model fitted to a measured three-qubit run.
"""

from hbac.cooling import (
    AsymptoteResult,
    BathParameters,
    ConvergenceError,
    DiagonalState,
    Permutation,
    Trajectory,
    apply_permutation,
    asymptotic_polarization,
    new_product_state,
    polarization_of,
    polarizations,
    ppa_sort_step,
    refresh,
    run_ppa,
    swap_gate,
    three_bit_compression,
)
from hbac.experiment import (
    DEFAULT_BATH,
    REFERENCE_RUN,
    ErrorModel,
    GateStep,
    ProtocolSchedule,
    RefreshStep,
    StepReport,
    calibrate_refresh,
    default_schedule,
    fit_error_model,
    protocol_fidelity,
    run_protocol,
    summarize,
)
from hbac.pulses import (
    OptimizationConfig,
    PulseSearchResult,
    PulseSegment,
    RFDistribution,
    SegmentedPulse,
    fidelity_profile,
    gate_fidelity,
    load_pulse,
    optimize_pulse,
    populations_after,
    pulse_propagator,
    refine_pulse,
    save_pulse,
    state_fidelity,
)
from hbac.spins import (
    SpinSystem,
    ToggleSequence,
    ToggleStep,
    balanced_xyz_cycle,
    collective_rotation,
    evolve,
    exchange_hamiltonian,
    natural_hamiltonian,
    optimal_transfer_time,
    pauli,
    register_hamiltonian,
    spin_lock_cycle,
    state_correlation_fidelity,
    toggling_average,
    transfer_curve,
    transfer_efficiency,
)

__version__ = "0.1.0"
