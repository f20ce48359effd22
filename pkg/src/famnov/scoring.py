"""Anomaly scores: familiarity, novelty, and their normalized combination.

The familiarity score (FFS) of a test feature is the sum of Euclidean
distances to its k nearest rows in a memory bank of training-normal
features (k = 2 by default).  The novelty score (ENS) is one minus the
cosine between the network's collapsed explanation at a chosen layer and
the vector it explains; a vanished explanation scores 1.  The joint score
is the sum of the z-normalized channels, with the novelty channel weighted.

Normalization statistics are fitted on training-normal samples only, never
on test data.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import DatasetTable
from .errors import ConfigurationError, DimensionError, StateError
from .linalg import as_vector, cosine
from .network import ActivationTrace, BcosNetwork, collapse, features, forward

__all__ = [
    "MemoryBank",
    "NormalizationStats",
    "ScoreConfig",
    "ScoreRecord",
    "build_memory_bank",
    "ffs",
    "ffs_leave_one_out",
    "ens",
    "fit_normalization",
    "joint_score",
    "score_sample",
]

_STD_FLOOR = 1e-12


class MemoryBank:
    """Read-only matrix of training-normal features at one layer."""

    def __init__(self, features: np.ndarray, source_layer: int):
        feats = np.array(features, dtype=np.float64)
        if feats.ndim != 2:
            raise DimensionError(f"expected a 2-D feature matrix, got shape {feats.shape}")
        if feats.shape[0] < 2:
            raise ConfigurationError(
                f"memory bank needs at least 2 rows, got {feats.shape[0]}"
            )
        if not np.all(np.isfinite(feats)):
            raise ValueError("memory bank contains non-finite features")
        feats.setflags(write=False)
        self.features = feats
        self.source_layer = int(source_layer)

    @property
    def rows(self) -> int:
        return self.features.shape[0]

    @property
    def feature_dim(self) -> int:
        return self.features.shape[1]


def build_memory_bank(net: BcosNetwork, normals: DatasetTable, layer: int) -> MemoryBank:
    """Bank of per-sample representations at ``layer``, in dataset order."""
    if len(normals) < 2:
        raise ConfigurationError(f"need at least 2 normal samples, got {len(normals)}")
    rows = [features(net, normals.samples[i], layer) for i in range(len(normals))]
    return MemoryBank(np.vstack(rows), source_layer=layer)


def ffs(bank: MemoryBank, feature, k: int = 2) -> float:
    """Sum of Euclidean distances to the k nearest bank rows.

    The scan is exhaustive and exact; ties at the kth neighbor go to the
    lower row index.
    """
    feature = as_vector(feature)
    if feature.shape[0] != bank.feature_dim:
        raise DimensionError(
            f"feature has {feature.shape[0]} dims, bank stores {bank.feature_dim}"
        )
    if k < 1:
        raise ConfigurationError(f"k must be >= 1, got {k}")
    if k > bank.rows:
        raise ConfigurationError(f"k={k} exceeds bank size {bank.rows}")
    dists = np.sqrt(((bank.features - feature) ** 2).sum(axis=1))
    nearest = np.argsort(dists, kind="stable")[:k]  # stable: lower index wins ties
    return float(sum(dists[nearest].tolist()))  # sequential sum, ascending order


def ffs_leave_one_out(bank: MemoryBank, row: int, k: int = 2) -> float:
    """FFS of bank row ``row`` against the rest of the bank.

    Used when fitting normalization on the training normals themselves:
    including a sample's own bank row would pin its nearest distance to 0
    and degenerate the familiarity channel (exactly so for k = 1).
    """
    if k > bank.rows - 1:
        raise ConfigurationError(
            f"k={k} needs {k} neighbors besides the sample itself, bank has {bank.rows} rows"
        )
    feature = bank.features[row]
    dists = np.sqrt(((bank.features - feature) ** 2).sum(axis=1))
    dists[row] = np.inf
    nearest = np.argsort(dists, kind="stable")[:k]
    return float(sum(dists[nearest].tolist()))


def _ens_from_trace(
    net: BcosNetwork, trace: ActivationTrace, layer: int, node: int
) -> float:
    explanation = collapse(net, trace, layer, node)
    return 1.0 - cosine(explanation, trace.inputs[layer])


def ens(net: BcosNetwork, x, layer: int, node: int) -> float:
    """One minus the alignment between the collapsed explanation and its input.

    ``layer = 0`` explains the raw input; deeper layers explain intermediate
    representations.  Always in [0, 2]; exactly 1.0 when the explanation
    vanishes (zero-norm convention).
    """
    _, trace = forward(net, x)
    return _ens_from_trace(net, trace, layer, node)


@dataclass(frozen=True)
class NormalizationStats:
    """Per-channel mean and population std, std floored at 1e-12."""

    ffs_mean: float
    ffs_std: float
    ens_mean: float
    ens_std: float


@dataclass
class ScoreConfig:
    """Scoring hyperparameters plus fitted normalization statistics."""

    k: int = 2
    novelty_layer: int = 0
    target_node: int = 0
    joint_weight: float = 1.0
    normalization: NormalizationStats | None = None

    def __post_init__(self):
        if self.k < 1:
            raise ConfigurationError(f"k must be >= 1, got {self.k}")
        if self.target_node not in (0, 1):
            raise ConfigurationError(f"target node must be 0 or 1, got {self.target_node}")


def fit_normalization(ffs_scores, ens_scores) -> NormalizationStats:
    """Channel statistics from training-normal scores (population std)."""
    f = as_vector(ffs_scores)
    e = as_vector(ens_scores)
    if f.shape[0] < 2 or e.shape[0] < 2:
        raise ConfigurationError("need at least 2 scores per channel to fit normalization")
    return NormalizationStats(
        ffs_mean=float(f.mean()),
        ffs_std=max(float(f.std()), _STD_FLOOR),
        ens_mean=float(e.mean()),
        ens_std=max(float(e.std()), _STD_FLOOR),
    )


@dataclass(frozen=True)
class ScoreRecord:
    """All scores for one test sample, raw and normalized, with provenance."""

    ffs_raw: float
    ens_raw: float
    ffs_norm: float
    ens_norm: float
    joint: float
    layer_used: int
    node_used: int

    def __post_init__(self):
        if self.ffs_raw < 0:
            raise ValueError(f"familiarity score must be >= 0, got {self.ffs_raw}")
        if not 0.0 <= self.ens_raw <= 2.0:
            raise ValueError(f"novelty score must be in [0, 2], got {self.ens_raw}")


def joint_score(ffs_raw: float, ens_raw: float, cfg: ScoreConfig) -> ScoreRecord:
    """Combine raw channel scores: ``z(ffs) + joint_weight * z(ens)``."""
    stats = cfg.normalization
    if stats is None:
        raise StateError("normalization statistics are not fitted")
    ffs_norm = (ffs_raw - stats.ffs_mean) / stats.ffs_std
    ens_norm = (ens_raw - stats.ens_mean) / stats.ens_std
    return ScoreRecord(
        ffs_raw=float(ffs_raw),
        ens_raw=float(ens_raw),
        ffs_norm=ffs_norm,
        ens_norm=ens_norm,
        joint=ffs_norm + cfg.joint_weight * ens_norm,
        layer_used=cfg.novelty_layer,
        node_used=cfg.target_node,
    )


def score_sample(net: BcosNetwork, bank: MemoryBank, cfg: ScoreConfig, x) -> ScoreRecord:
    """Score one sample; a single forward pass feeds both channels."""
    _, trace = forward(net, x)
    feature = trace.inputs[bank.source_layer]
    ffs_raw = ffs(bank, feature, cfg.k)
    ens_raw = _ens_from_trace(net, trace, cfg.novelty_layer, cfg.target_node)
    return joint_score(ffs_raw, ens_raw, cfg)
