"""Sparse model selection for incompressible hyperelastic materials.

Fits two eight-term constitutive model families to tension, compression, and
shear stress data, penalizes the term amplitudes with the Lp family to induce
sparsity, and offers discrete subset selection, greedy model growth,
hyperparameter sweeps, and loss-landscape grids for deciding which terms a
material actually needs.
"""

from .dataio import (
    DEFAULT_RANGES,
    Dataset,
    dataset_to_json,
    generate_synthetic,
    r_squared,
    read_csv,
    write_csv,
    write_json,
)
from .discovery import (
    DEFAULT_FROZEN_EXPONENTS,
    LandscapeGrid,
    SubsetReport,
    SweepCell,
    calibrate_alpha,
    enumerate_best_in_class,
    greedy_densify,
    l0_crossover,
    loss_landscape_grid,
    lp_sweep,
)
from .errors import (
    ConfigurationError,
    DataFormatError,
    DivergenceError,
    DomainError,
    TermOverflowError,
)
from .kinematics import (
    DeformationState,
    LoadMode,
    invariants_from_stretches,
    shear_state,
    uniaxial_state,
)
from .materials import (
    ModelFamily,
    ParamVector,
    STRETCH_EXPONENTS,
    TermMask,
    energy,
    energy_terms,
    masks_of_cardinality,
    stress_gradient,
    stress_shear,
    stress_uniaxial,
    term_labels,
)
from .objective import (
    LossBreakdown,
    LossModel,
    Normalization,
    PenaltyConfig,
    Reduction,
    check_gradient,
    count_active,
    data_loss,
    loss_gradient,
    penalty,
    total_loss,
)
from .optim import (
    AdamConfig,
    FitResult,
    RestartSummary,
    derive_seed,
    fit,
    informed_init,
    multi_restart_fit,
)

__version__ = "0.1.0"
