"""Simulator and algebra toolkit for tunable decoherence-free subspaces in a
driven three-level atom-cavity ensemble."""

from .algebra import (
    ModeTransform,
    c_dagger_c_matrix,
    c_dagger_d_matrix,
    complementary_normalization,
    complementary_vector,
    dfs_dimension,
    dfs_members,
    eigenstate_normalization,
    eigenstate_overlap,
    eigenstate_vector,
    jump_eigenvalue,
    single_particle_jump_matrix,
    transform_matrices,
)
from .basis import (
    CollectiveOperators,
    SymmetricBasis,
    bilinear_matrix,
    collective_operators,
    enumerate_basis,
)
from .config import ExperimentConfig, dump_config, load_config
from .errors import (
    ConfigError,
    DfsimError,
    NonDiagonalizableError,
    NumericalError,
    RankDeficiencyError,
)
from .lindblad import (
    DensityState,
    EffectiveParams,
    OperatorCache,
    TrajectoryRecord,
    build_hamiltonian,
    build_jump,
    dfs_overlap,
    gram_schmidt,
    ground_state,
    integrate,
    lindblad_rhs,
    orthonormal_dfs_basis,
    purity,
)
from .protocols import (
    CentralShortcutSchedule,
    EdgeShortcutSchedule,
    PhysicalParams,
    QuenchSchedule,
    RampSchedule,
    RegimeWarning,
    SearchResult,
    central_shortcut_schedule,
    edge_shortcut_schedule,
    map_physical_params,
    meets_threshold,
    quench_schedule,
    ramp_schedule,
    search_min_quench_time,
    search_min_ramp_time,
    select_quench_mu,
    subspace_alignment,
)
from .runner import (
    RunSummary,
    dfs_structure,
    run_experiment,
    run_table,
    search_experiment,
    write_timeseries,
)
from .shells import ShellBasis, allowed_j, keff_x, predict_final_state, qfi, shell_basis

__version__ = "0.1.0"
