from threshold_risk.engine.config import ExperimentConfig, RuntimeConfig, load_experiment_file, load_runtime_config
from threshold_risk.engine.metrics import EvaluationMetrics, MetricsCollectingObjective, OptimizationMetrics
from threshold_risk.engine.monte_carlo import (
    AcceptanceError,
    CellCheck,
    SimulationReport,
    check_cells,
    simulate_point,
    simulate_sequence,
)
from threshold_risk.engine.optimizer import (
    OptimizationResult,
    OptimizerSettings,
    SweepRow,
    average_mse,
    optimize_all,
    optimize_ht,
    optimize_pl,
    optimize_ss,
    sweep_decay,
    sweep_table,
)
from threshold_risk.engine.random_streams import SubstreamProvider
from threshold_risk.engine.risk_analysis import (
    FisherInfo,
    NumericError,
    QuadratureError,
    RiskPoint,
    StandardizedArgs,
    bias,
    bias_deriv,
    check_bounds,
    crb_biased_scalar,
    crb_unbiased,
    mse,
    oracle_bound,
    quadrature_oracle_bias,
    quadrature_oracle_mse,
    risk_curve,
)

__all__ = [
    "AcceptanceError",
    "CellCheck",
    "EvaluationMetrics",
    "ExperimentConfig",
    "FisherInfo",
    "MetricsCollectingObjective",
    "NumericError",
    "OptimizationMetrics",
    "OptimizationResult",
    "OptimizerSettings",
    "QuadratureError",
    "RiskPoint",
    "RuntimeConfig",
    "SimulationReport",
    "StandardizedArgs",
    "SubstreamProvider",
    "SweepRow",
    "average_mse",
    "bias",
    "bias_deriv",
    "check_bounds",
    "check_cells",
    "crb_biased_scalar",
    "crb_unbiased",
    "load_experiment_file",
    "load_runtime_config",
    "mse",
    "optimize_all",
    "optimize_ht",
    "optimize_pl",
    "optimize_ss",
    "oracle_bound",
    "quadrature_oracle_bias",
    "quadrature_oracle_mse",
    "risk_curve",
    "simulate_point",
    "simulate_sequence",
    "sweep_decay",
    "sweep_table",
]
