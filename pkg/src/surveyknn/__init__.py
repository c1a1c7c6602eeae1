"""Design-weighted k-nearest-neighbor regression for complex survey data.

The package provides: finite-population generation with embedded ladders
(``population``), classical sampling designs with exact inclusion
probabilities (``designs``), the population / design-weighted /
hypothetical k-NN estimators (``neighbors``), computable design
diagnostics (``diagnostics``), closed-form error-rate machinery
(``bounds``), a Monte Carlo study harness (``studies``), CSV input and
output (``dataio``), figure rendering (``plots``), and a CLI (``cli``).
"""

from .bounds import (
    TheoryParams,
    design_gap_bound,
    ht_error_constants,
    kn_schedule,
    knn_bias_constant,
    rate_bound,
    unit_ball_volume,
)
from .designs import (
    DesignSpec,
    InclusionProbs,
    Sample,
    Stratum,
    draw,
    enumerate_all_samples,
    estimate_joint_probs,
    inclusion_probs,
    pps_probabilities,
)
from .diagnostics import (
    C9Result,
    c4_ratio_scan,
    c7_min_inclusion,
    c8_dependence_measure,
    c9_rij_exhaustive,
    dependence_measure_from_probs,
)
from .errors import (
    CapacityError,
    DataFormatError,
    DiagnosticUnavailableError,
    SurveyKnnError,
)
from .neighbors import (
    NeighborIndex,
    ball_members,
    estimate_hypothetical,
    estimate_population,
    estimate_sample_ht,
    hypothetical_weights,
    knn_radius,
    partition_signature,
)
from .population import (
    Population,
    SuperpopSpec,
    generate_embedded_populations,
    standardize_covariates,
    true_regression,
)
from .results import StudyRecord, StudyResult
from .studies import (
    StudyConfig,
    run_c4_study,
    run_c9_study,
    run_consistency_study,
    run_wine_study,
    study_config,
    vif,
)

__version__ = "0.1.0"
