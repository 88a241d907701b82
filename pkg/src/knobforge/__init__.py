"""knobforge: metric pruning, workload mapping, and latency prediction.

The package ingests per-workload observation tables (knob settings, runtime
metrics, latency), prunes redundant metrics with factor analysis plus
clustering, matches unseen workloads to their nearest historical neighbour,
and predicts latency with interchangeable regressors evaluated by MAPE/MSE.
"""

__version__ = "0.1.0"

from .cluster import (
    GaussianMixture,
    KMeans,
    ModelSelection,
    bic,
    select_k,
    silhouette_score,
    sweep_k,
)
from .evaluation import EvalReport, emit_report, load_report, mape, mse
from .exceptions import (
    AlignmentError,
    ClusterDegeneracy,
    DegenerateInput,
    InsufficientRows,
    InvalidK,
    InvalidTarget,
    KnobforgeError,
    LeakageError,
    NumericalError,
    ParseError,
    PipelineError,
    ScalerScopeError,
    SchemaError,
    ShapeError,
    UndefinedMape,
    UndefinedSilhouette,
)
from .factors import FactorAnalysis
from .forest import DecisionTreeRegressor, RandomForestRegressor
from .gp import GaussianProcessRegressor, log_marginal_likelihood, rbf_kernel
from .ingest import (
    ColumnKind,
    ColumnSchema,
    Encoding,
    HoldoutSplit,
    WorkloadRepository,
    WorkloadTable,
    drop_constant_columns,
    load_repository,
    load_schema_hint,
    split_holdout,
)
from .mapping import (
    AugmentedDataset,
    MappingResult,
    RowOrigin,
    augment,
    map_workload,
    score_workload,
)
from .neural import MlpRegressor
from .pipeline import (
    LeakageGuard,
    PipelineConfig,
    PipelineRun,
    run_pipeline,
    run_stage1,
    run_stage2,
)
from .preprocessing import ColumnScaler
from .pruning import MetricPruner, PrunedMetricSet, prune_metrics, prune_with_selection
from .regressors import RegressorSpec, load_model, make_regressor, save_model
from .synth import GroundTruth, SynthSpec, generate, oracle_latency, write_corpus

__all__ = [
    "__version__",
    "AlignmentError",
    "AugmentedDataset",
    "ClusterDegeneracy",
    "ColumnKind",
    "ColumnScaler",
    "ColumnSchema",
    "DecisionTreeRegressor",
    "DegenerateInput",
    "Encoding",
    "EvalReport",
    "FactorAnalysis",
    "GaussianMixture",
    "GaussianProcessRegressor",
    "GroundTruth",
    "HoldoutSplit",
    "InsufficientRows",
    "InvalidK",
    "InvalidTarget",
    "KMeans",
    "KnobforgeError",
    "LeakageError",
    "LeakageGuard",
    "MappingResult",
    "MetricPruner",
    "MlpRegressor",
    "ModelSelection",
    "NumericalError",
    "ParseError",
    "PipelineConfig",
    "PipelineError",
    "PipelineRun",
    "PrunedMetricSet",
    "RandomForestRegressor",
    "RegressorSpec",
    "RowOrigin",
    "ScalerScopeError",
    "SchemaError",
    "ShapeError",
    "SynthSpec",
    "UndefinedMape",
    "UndefinedSilhouette",
    "WorkloadRepository",
    "WorkloadTable",
    "augment",
    "bic",
    "drop_constant_columns",
    "emit_report",
    "generate",
    "load_model",
    "load_report",
    "load_repository",
    "load_schema_hint",
    "log_marginal_likelihood",
    "make_regressor",
    "map_workload",
    "mape",
    "mse",
    "oracle_latency",
    "prune_metrics",
    "prune_with_selection",
    "rbf_kernel",
    "run_pipeline",
    "run_stage1",
    "run_stage2",
    "save_model",
    "score_workload",
    "select_k",
    "silhouette_score",
    "split_holdout",
    "sweep_k",
    "write_corpus",
]
