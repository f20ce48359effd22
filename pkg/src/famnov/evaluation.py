"""Detector evaluation: AUROC, oracle-threshold confusion, FN reduction, PCA.

Scores follow the convention higher = more anomalous.  AUROC uses the
rank-statistic formulation with ties credited 0.5.  The oracle threshold is
the score cut maximizing balanced accuracy on labeled data; it exists only
for false-negative/false-positive analysis, never for deployment.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DimensionError
from .linalg import as_matrix, as_vector, pca_project
from .scoring import MemoryBank, ffs

__all__ = [
    "LabeledScores",
    "ConfusionReport",
    "ProjectionTable",
    "auroc",
    "confusion_at",
    "oracle_threshold",
    "fn_reduction",
    "pca_diagnostic",
    "save_projection",
]

_STD_FLOOR = 1e-12


@dataclass
class LabeledScores:
    """Scores with 0/1 labels (1 = anomaly) and per-sample identifiers."""

    scores: np.ndarray
    labels: np.ndarray
    ids: list[str]

    def __post_init__(self):
        self.scores = as_vector(self.scores)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.labels.shape != self.scores.shape:
            raise DimensionError(
                f"{self.labels.shape[0]} labels for {self.scores.shape[0]} scores"
            )
        if len(self.ids) != self.scores.shape[0]:
            raise DimensionError(
                f"{len(self.ids)} ids for {self.scores.shape[0]} scores"
            )
        if not np.all((self.labels == 0) | (self.labels == 1)):
            raise ConfigurationError("labels must be 0 (normal) or 1 (anomaly)")

    def require_both_classes(self):
        if not (np.any(self.labels == 0) and np.any(self.labels == 1)):
            raise ConfigurationError("need at least one sample of each class")


@dataclass(frozen=True)
class ConfusionReport:
    """Counts and rates at one threshold (anomaly predicted when score > threshold)."""

    threshold: float
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def fnr(self) -> float:
        pos = self.tp + self.fn
        return self.fn / pos if pos else 0.0

    @property
    def fpr(self) -> float:
        neg = self.tn + self.fp
        return self.fp / neg if neg else 0.0

    @property
    def balanced_accuracy(self) -> float:
        tpr = self.tp / (self.tp + self.fn) if (self.tp + self.fn) else 0.0
        tnr = self.tn / (self.tn + self.fp) if (self.tn + self.fp) else 0.0
        return (tpr + tnr) / 2.0


def _midranks(scores: np.ndarray) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    order = np.argsort(scores, kind="stable")
    ranks = np.empty(len(scores))
    i = 0
    while i < len(scores):
        j = i
        while j + 1 < len(scores) and scores[order[j + 1]] == scores[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def auroc(ls: LabeledScores) -> float:
    """Probability a random anomaly outscores a random normal (ties 0.5)."""
    ls.require_both_classes()
    ranks = _midranks(ls.scores)
    pos = ls.labels == 1
    n_pos = int(pos.sum())
    n_neg = len(ls.labels) - n_pos
    rank_sum = float(ranks[pos].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def confusion_at(ls: LabeledScores, threshold: float) -> ConfusionReport:
    predicted = ls.scores > threshold
    actual = ls.labels == 1
    return ConfusionReport(
        threshold=float(threshold),
        tp=int(np.sum(predicted & actual)),
        fp=int(np.sum(predicted & ~actual)),
        tn=int(np.sum(~predicted & ~actual)),
        fn=int(np.sum(~predicted & actual)),
    )


def oracle_threshold(ls: LabeledScores) -> ConfusionReport:
    """Best balanced-accuracy cut over all midpoints of adjacent sorted scores.

    Ties in balanced accuracy go to the lower threshold.  When every score is
    identical there are no midpoints and the common score itself is used.
    """
    ls.require_both_classes()
    distinct = np.unique(ls.scores)
    if len(distinct) == 1:
        candidates = distinct
    else:
        candidates = (distinct[:-1] + distinct[1:]) / 2.0
    best: ConfusionReport | None = None
    for threshold in candidates:  # ascending, so strict improvement keeps lower cut
        report = confusion_at(ls, float(threshold))
        if best is None or report.balanced_accuracy > best.balanced_accuracy:
            best = report
    return best


def fn_reduction(base: LabeledScores, joint: LabeledScores) -> float:
    """Fraction of the base method's false negatives the joint method removes.

    Each score set is cut at its own oracle threshold.  Returns 0.0 when the
    base method has no false negatives to remove.
    """
    if base.ids != joint.ids or not np.array_equal(base.labels, joint.labels):
        raise ConfigurationError("score sets must cover the same samples and labels")
    fn_base = oracle_threshold(base).fn
    if fn_base == 0:
        return 0.0
    fn_joint = oracle_threshold(joint).fn
    return (fn_base - fn_joint) / fn_base


@dataclass
class ProjectionTable:
    """Rows of bank and test points in the two-component projection plane."""

    kinds: list[str]  # "bank" or "test"
    ids: list[str]
    pc1: np.ndarray
    pc2: np.ndarray
    nn2_distance: np.ndarray


def pca_diagnostic(
    bank: MemoryBank,
    test_features,
    ens_column=None,
    test_ids: Sequence[str] | None = None,
) -> ProjectionTable:
    """Two-component view of bank and test features for plotting.

    ``ens_column`` optionally carries raw novelty scores for the bank rows
    followed by the test rows; it is z-scored with bank statistics and
    appended as one extra coordinate before fitting, which shifts points
    whose novelty deviates from the training norm.  The 2-NN distance column
    is always computed against the unaugmented bank, one value per point.
    """
    test = as_matrix(test_features)
    if test.shape[1] != bank.feature_dim:
        raise DimensionError(
            f"test features have {test.shape[1]} dims, bank stores {bank.feature_dim}"
        )
    n_bank, n_test = bank.rows, test.shape[0]
    bank_mat = np.asarray(bank.features)
    if ens_column is not None:
        col = as_vector(ens_column)
        if col.shape[0] != n_bank + n_test:
            raise DimensionError(
                f"expected {n_bank + n_test} novelty values (bank then test), got {col.shape[0]}"
            )
        mu = float(col[:n_bank].mean())
        sd = max(float(col[:n_bank].std()), _STD_FLOOR)
        z = (col - mu) / sd
        bank_mat = np.hstack([bank_mat, z[:n_bank, None]])
        test = np.hstack([test, z[n_bank:, None]])
    components, bank_proj = pca_project(bank_mat, 2)
    center = bank_mat.mean(axis=0)
    test_proj = (test - center) @ components.T
    nn2 = np.array(
        [ffs(bank, row, 2) for row in bank.features]
        + [ffs(bank, row, 2) for row in as_matrix(test_features)]
    )
    if test_ids is None:
        test_ids = [f"test-{i}" for i in range(n_test)]
    return ProjectionTable(
        kinds=["bank"] * n_bank + ["test"] * n_test,
        ids=[f"bank-{i}" for i in range(n_bank)] + list(test_ids),
        pc1=np.concatenate([bank_proj[:, 0], test_proj[:, 0]]),
        pc2=np.concatenate([bank_proj[:, 1], test_proj[:, 1]]),
        nn2_distance=nn2,
    )


def save_projection(table: ProjectionTable, path) -> None:
    """Write the projection table as comma-separated text."""
    lines = ["kind,sample_id,pc1,pc2,nn2_distance"]
    for i in range(len(table.ids)):
        lines.append(
            ",".join(
                [
                    table.kinds[i],
                    table.ids[i],
                    repr(float(table.pc1[i])),
                    repr(float(table.pc2[i])),
                    repr(float(table.nn2_distance[i])),
                ]
            )
        )
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
