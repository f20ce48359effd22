"""Joint familiarity + novelty anomaly detection.

A detector combines two complementary signals: how far a sample's learned
features sit from a memory bank of training-normal features (familiarity),
and how much of the sample the network's exact input-space explanation fails
to align with (novelty).  The networks are bias-free alignment networks
whose forward pass collapses, per input, into a single faithful linear map.
"""

from .datasets import DatasetTable, load_csv, load_pgm, save_csv, save_heatmap, save_pgm
from .errors import (
    ConfigurationError,
    DecompositionError,
    DimensionError,
    FamnovError,
    ParseError,
    PipelineStageError,
    StateError,
)
from .evaluation import (
    ConfusionReport,
    LabeledScores,
    auroc,
    confusion_at,
    fn_reduction,
    oracle_threshold,
    pca_diagnostic,
)
from .model_io import load_model, save_model
from .network import (
    ActivationTrace,
    BcosLayer,
    BcosNetwork,
    TrainConfig,
    bcos_unit,
    collapse,
    effective_weight,
    features,
    forward,
    gradients,
    train,
)
from .outliers import GaussianModel, fit_gaussian, sample_outliers
from .pipeline import (
    Detector,
    NetworkSpec,
    RunConfig,
    ScoreSpec,
    TrainSpec,
    build_detector,
    run_pipeline,
    score_table,
)
from .rng import Rng, derive_seed
from .scoring import (
    MemoryBank,
    ScoreConfig,
    ScoreRecord,
    build_memory_bank,
    ens,
    ffs,
    fit_normalization,
    joint_score,
    score_sample,
)

__version__ = "0.1.0"
