"""End-to-end run: fit outlier model, train, bank, normalize, score, evaluate.

``RunConfig`` is the single configuration object for a run; it doubles as
the request schema of the HTTP pipeline endpoint and as the on-disk JSON
config format of the CLI.  All randomness derives from the mandatory seed
(stream 0: network init, stream 1: outlier sampling, stream 2: training
shuffles), so two runs with the same config are byte-identical across every
emitted file.

Stage order is fixed and logged: load_data, fit_gaussian, sample_outliers,
train, build_memory_bank, fit_normalization, score, evaluate,
write_outputs.  A failing stage aborts the run with the stage name attached.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from pydantic import BaseModel, Field, field_validator

from . import model_io
from .datasets import (
    DatasetTable,
    load_csv,
    save_csv,
    save_heatmap,
    save_metrics,
    save_scores_csv,
)
from .errors import ConfigurationError, PipelineStageError
from .evaluation import (
    LabeledScores,
    auroc,
    fn_reduction,
    oracle_threshold,
    pca_diagnostic,
    save_projection,
)
from .network import BcosNetwork, TrainConfig, collapse, forward, train
from .outliers import fit_gaussian, sample_outliers
from .rng import Rng, derive_seed
from .scoring import (
    MemoryBank,
    ScoreConfig,
    ScoreRecord,
    build_memory_bank,
    ens,
    ffs_leave_one_out,
    fit_normalization,
    score_sample,
)

__all__ = [
    "NetworkSpec",
    "TrainSpec",
    "ScoreSpec",
    "RunConfig",
    "Detector",
    "build_detector",
    "score_table",
    "PipelineResult",
    "run_pipeline",
]

logger = logging.getLogger(__name__)

STAGES = (
    "load_data",
    "fit_gaussian",
    "sample_outliers",
    "train",
    "build_memory_bank",
    "fit_normalization",
    "score",
    "evaluate",
    "write_outputs",
)


class NetworkSpec(BaseModel):
    """Architecture: dimensions per layer boundary and alignment exponent(s)."""

    layer_dims: list[int] = Field(min_length=3)
    b_exponent: float | list[float] = 1.5

    @field_validator("layer_dims")
    @classmethod
    def _positive_dims(cls, dims):
        if any(d < 1 for d in dims):
            raise ValueError(f"layer dims must be positive, got {dims}")
        if dims[-1] != 2:
            raise ValueError(f"final dimension must be 2 (normal/outlier head), got {dims[-1]}")
        return dims


class TrainSpec(BaseModel):
    learning_rate: float = Field(default=0.05, gt=0)
    epochs: int = Field(default=200, ge=0)
    batch_size: int = Field(default=32, ge=1)


class ScoreSpec(BaseModel):
    k: int = Field(default=2, ge=1)
    novelty_layer: int = Field(default=0, ge=0)
    target_node: int = Field(default=0, ge=0, le=1)
    joint_weight: float = 1.0
    feature_layer: int | None = Field(default=None, ge=0)  # None = penultimate


class RunConfig(BaseModel):
    """Full description of one pipeline run."""

    seed: int
    train_normals: str
    test_normal: str
    test_anomaly: str
    out_dir: str
    outliers_csv: str | None = None  # when set, skip synthesis and load these
    n_outliers: int | None = Field(default=None, ge=1)  # default: len(train)
    clamp: tuple[float, float] | None = None
    network: NetworkSpec
    train: TrainSpec = TrainSpec()
    score: ScoreSpec = ScoreSpec()
    heatmap_count: int = Field(default=0, ge=0)
    heatmap_node: int = Field(default=1, ge=0, le=1)  # 1 = outlier branch
    heatmap_shape: tuple[int, int] | None = None  # (height, width) of flattened rows


@dataclass
class Detector:
    """Everything needed to score test samples: network, bank, fitted config."""

    network: BcosNetwork
    bank: MemoryBank
    score_config: ScoreConfig
    train_ffs: np.ndarray  # per-training-normal raw channel scores, kept for
    train_ens: np.ndarray  # diagnostics such as the projection plot


def _feature_layer(net: BcosNetwork, spec: ScoreSpec) -> int:
    layer = spec.feature_layer if spec.feature_layer is not None else net.num_layers - 1
    if not 0 <= layer < net.num_layers:
        raise ConfigurationError(
            f"feature layer {layer} out of range [0, {net.num_layers})"
        )
    return layer


def build_detector(net: BcosNetwork, normals: DatasetTable, spec: ScoreSpec) -> Detector:
    """Bank the normal features and fit score normalization on them.

    Training normals are scored leave-one-out against the bank so that each
    sample's own stored feature does not pin its nearest distance to zero.
    """
    layer = _feature_layer(net, spec)
    bank = build_memory_bank(net, normals, layer)
    train_ffs = np.empty(len(normals))
    train_ens = np.empty(len(normals))
    for i in range(len(normals)):
        train_ffs[i] = ffs_leave_one_out(bank, i, spec.k)
        train_ens[i] = ens(net, normals.samples[i], spec.novelty_layer, spec.target_node)
    cfg = ScoreConfig(
        k=spec.k,
        novelty_layer=spec.novelty_layer,
        target_node=spec.target_node,
        joint_weight=spec.joint_weight,
        normalization=fit_normalization(train_ffs, train_ens),
    )
    return Detector(network=net, bank=bank, score_config=cfg,
                    train_ffs=train_ffs, train_ens=train_ens)


def score_table(detector: Detector, table: DatasetTable) -> list[ScoreRecord]:
    return [
        score_sample(detector.network, detector.bank, detector.score_config, row)
        for row in table.samples
    ]


@dataclass
class PipelineResult:
    metrics: dict
    files: dict[str, str]
    detector: Detector


def _stage(name: str):
    logger.info("stage: %s", name)


def run_pipeline(cfg: RunConfig) -> PipelineResult:
    """Execute every stage; see the module docstring for the fixed order."""
    stage = "load_data"
    try:
        out_dir = Path(cfg.out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        _stage(stage)
        for role, path in (
            ("train_normals", cfg.train_normals),
            ("test_normal", cfg.test_normal),
            ("test_anomaly", cfg.test_anomaly),
        ):
            if not Path(path).is_file():
                raise ConfigurationError(f"{role} path does not exist: {path}")
        if cfg.outliers_csv is not None and not Path(cfg.outliers_csv).is_file():
            raise ConfigurationError(f"outliers path does not exist: {cfg.outliers_csv}")
        normals = load_csv(cfg.train_normals, split="train_normal")
        test_normal = load_csv(cfg.test_normal, split="test_normal")
        test_anomaly = load_csv(cfg.test_anomaly, split="test_anomaly")
        if normals.dim != cfg.network.layer_dims[0]:
            raise ConfigurationError(
                f"network expects {cfg.network.layer_dims[0]}-dim inputs, "
                f"training data has {normals.dim}"
            )

        files: dict[str, str] = {}
        if cfg.outliers_csv is None:
            stage = "fit_gaussian"
            _stage(stage)
            gaussian = fit_gaussian(normals)
            stage = "sample_outliers"
            _stage(stage)
            n_out = cfg.n_outliers if cfg.n_outliers is not None else len(normals)
            outliers = sample_outliers(
                gaussian, n_out, Rng(derive_seed(cfg.seed, 1)), clamp=cfg.clamp
            )
            files["outliers"] = str(out_dir / "outliers.csv")
            save_csv(outliers, files["outliers"])
        else:
            _stage("fit_gaussian")  # skipped: real outliers supplied
            _stage("sample_outliers")
            outliers = load_csv(cfg.outliers_csv, split="outlier")

        stage = "train"
        _stage(stage)
        net = BcosNetwork.random(
            cfg.network.layer_dims, cfg.network.b_exponent, seed=derive_seed(cfg.seed, 0)
        )
        trained = train(
            net,
            normals,
            outliers,
            TrainConfig(
                learning_rate=cfg.train.learning_rate,
                epochs=cfg.train.epochs,
                batch_size=cfg.train.batch_size,
                seed=derive_seed(cfg.seed, 2),
            ),
        )
        files["model"] = str(out_dir / "model.bin")
        model_io.save_model(trained, files["model"])

        stage = "build_memory_bank"
        _stage(stage)
        _stage("fit_normalization")  # both happen inside build_detector
        detector = build_detector(trained, normals, cfg.score)

        stage = "score"
        _stage(stage)
        records = score_table(detector, test_normal) + score_table(detector, test_anomaly)
        ids = [f"test_normal-{i}" for i in range(len(test_normal))] + [
            f"test_anomaly-{i}" for i in range(len(test_anomaly))
        ]
        labels = np.concatenate(
            [np.zeros(len(test_normal), dtype=int), np.ones(len(test_anomaly), dtype=int)]
        )
        files["scores"] = str(out_dir / "scores.csv")
        save_scores_csv(ids, records, labels, files["scores"])

        stage = "evaluate"
        _stage(stage)
        joint = LabeledScores(np.array([r.joint for r in records]), labels, ids)
        ffs_only = LabeledScores(np.array([r.ffs_raw for r in records]), labels, ids)
        ens_only = LabeledScores(np.array([r.ens_raw for r in records]), labels, ids)
        report = oracle_threshold(joint)
        metrics = {
            "auroc": auroc(joint),
            "auroc_ffs": auroc(ffs_only),
            "auroc_ens": auroc(ens_only),
            "threshold": report.threshold,
            "tp": report.tp,
            "fp": report.fp,
            "tn": report.tn,
            "fn": report.fn,
            "fnr": report.fnr,
            "fpr": report.fpr,
            "fn_reduction": fn_reduction(ffs_only, joint),
        }
        layer = detector.bank.source_layer
        test_feats = np.vstack(
            [
                forward(detector.network, row)[1].inputs[layer]
                for row in np.vstack([test_normal.samples, test_anomaly.samples])
            ]
        )
        ens_col = np.concatenate([detector.train_ens, np.array([r.ens_raw for r in records])])
        projection = pca_diagnostic(detector.bank, test_feats, ens_col, test_ids=ids)

        stage = "write_outputs"
        _stage(stage)
        files["metrics"] = str(out_dir / "metrics.txt")
        save_metrics(metrics, files["metrics"])
        files["projection"] = str(out_dir / "projection.csv")
        save_projection(projection, files["projection"])
        if cfg.heatmap_count > 0:
            shape = cfg.heatmap_shape or test_anomaly.shape_hint
            if shape is None:
                raise ConfigurationError(
                    "heatmaps need a (height, width); set heatmap_shape for CSV data"
                )
            for i in range(min(cfg.heatmap_count, len(test_anomaly))):
                x = test_anomaly.samples[i]
                _, trace = forward(detector.network, x)
                theta = collapse(detector.network, trace, 0, cfg.heatmap_node)
                path = str(out_dir / f"heatmap_{i}.pgm")
                save_heatmap(theta * x, shape, path)
                files[f"heatmap_{i}"] = path
        return PipelineResult(metrics=metrics, files=files, detector=detector)
    except PipelineStageError:
        raise
    except Exception as exc:
        logger.error("stage %s failed: %s", stage, exc)
        raise PipelineStageError(stage, exc) from exc
