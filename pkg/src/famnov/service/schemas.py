"""Pydantic request and response models for the HTTP service.

File paths in requests are resolved on the machine running the service; the
CLI runs the service in-process by default, so paths behave like local CLI
arguments.
"""

from __future__ import annotations

from pydantic import BaseModel, Field

from ..pipeline import NetworkSpec, ScoreSpec, TrainSpec


class HealthResponse(BaseModel):
    status: str
    version: str
    models: list[str]


class TrainRequest(BaseModel):
    name: str = "default"
    normals_csv: str
    outliers_csv: str | None = None  # default: synthesize from a Gaussian fit
    n_outliers: int | None = Field(default=None, ge=1)
    clamp: tuple[float, float] | None = None
    seed: int
    network: NetworkSpec
    train: TrainSpec = TrainSpec()
    score: ScoreSpec = ScoreSpec()
    model_out: str | None = None


class TrainResponse(BaseModel):
    name: str
    layer_dims: list[int]
    bank_rows: int
    feature_layer: int
    train_accuracy: float
    model_file: str | None = None


class GenOutliersRequest(BaseModel):
    normals_csv: str
    count: int = Field(ge=1)
    seed: int
    clamp: tuple[float, float] | None = None
    out_csv: str


class GenOutliersResponse(BaseModel):
    out_csv: str
    count: int
    dim: int
    jitter: float


class ScoreRequest(BaseModel):
    """Score inline samples or a CSV against a registered or rebuilt detector.

    Either ``model`` names a detector registered by a previous train call on
    this server, or ``model_file`` + ``normals_csv`` rebuild one statelessly
    from a saved network and its training data.
    """

    model: str | None = None
    model_file: str | None = None
    normals_csv: str | None = None
    score: ScoreSpec = ScoreSpec()  # used only when rebuilding from model_file
    samples: list[list[float]] | None = None
    input_csv: str | None = None
    out_csv: str | None = None


class ScoreRecordModel(BaseModel):
    sample_id: str
    ffs_raw: float
    ens_raw: float
    ffs_norm: float
    ens_norm: float
    joint: float
    label: int | None = None


class ScoreResponse(BaseModel):
    records: list[ScoreRecordModel]
    out_csv: str | None = None


class ExplainRequest(BaseModel):
    model: str | None = None
    model_file: str | None = None
    sample: list[float] | None = None
    input_pgm: str | None = None
    node: int = Field(default=1, ge=0, le=1)
    layer: int = Field(default=0, ge=0)
    heatmap_out: str | None = None  # needs image input or explicit shape
    shape: tuple[int, int] | None = None


class ExplainResponse(BaseModel):
    novelty: float
    logits: list[float]
    contributions: list[float]
    heatmap_out: str | None = None


class EvalRequest(BaseModel):
    """Metrics for one score file/column, optionally against a baseline column."""

    scores_csv: str
    column: str = "joint"
    baseline_column: str | None = "ffs_raw"
    metrics_out: str | None = None


class EvalResponse(BaseModel):
    auroc: float
    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int
    fnr: float
    fpr: float
    fn_reduction: float | None = None
    metrics_out: str | None = None


class PipelineResponse(BaseModel):
    metrics: dict[str, float]
    files: dict[str, str]
