from threshold_risk.domain.estimators import (
    EstimatorParams,
    HardThresholdParams,
    PiecewiseLinearParams,
    SemisoftParams,
    always_zero_estimator,
    apply_estimator,
    apply_to_vector,
    from_normalized,
    identity_estimator,
)
from threshold_risk.domain.sequences import (
    CalibratedEnsemble,
    DecayModel,
    DecaySequence,
    calibrate_ensemble,
    coefficient_clusters,
    decay_profile_energy,
    default_p_grid,
    histogram,
    make_sequence,
    snr,
)
from threshold_risk.domain.value_objects import EstimatorKind, OutputFormat

__all__ = [
    "CalibratedEnsemble",
    "DecayModel",
    "DecaySequence",
    "EstimatorKind",
    "EstimatorParams",
    "HardThresholdParams",
    "OutputFormat",
    "PiecewiseLinearParams",
    "SemisoftParams",
    "always_zero_estimator",
    "apply_estimator",
    "apply_to_vector",
    "calibrate_ensemble",
    "coefficient_clusters",
    "decay_profile_energy",
    "default_p_grid",
    "from_normalized",
    "histogram",
    "identity_estimator",
    "make_sequence",
    "snr",
]
