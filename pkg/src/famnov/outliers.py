"""Synthetic outlier class from a Gaussian fit to the normal training data.

The normal class is approximated by its sample mean and covariance; outliers
are draws from that distribution.  The approximation error is exactly what
the two-class head later learns to discriminate, so no real anomalies are
needed for training.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets import DatasetTable
from .errors import ConfigurationError
from .linalg import cholesky_with_jitter
from .rng import Rng

__all__ = ["GaussianModel", "fit_gaussian", "sample_outliers"]


@dataclass(frozen=True)
class GaussianModel:
    """Mean, covariance, and cached lower Cholesky factor (with its jitter)."""

    mean: np.ndarray
    cov: np.ndarray
    chol: np.ndarray
    jitter: float

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def fit_gaussian(normals: DatasetTable) -> GaussianModel:
    """Sample mean and covariance (denominator N - 1) of the normal split."""
    if len(normals) < 2:
        raise ConfigurationError(f"need at least 2 samples to fit, got {len(normals)}")
    x = normals.samples
    mean = x.mean(axis=0)
    centered = x - mean
    cov = centered.T @ centered / (len(normals) - 1)
    cov = (cov + cov.T) / 2.0  # exact symmetry despite accumulation order
    chol, jitter = cholesky_with_jitter(cov)
    return GaussianModel(mean=mean, cov=cov, chol=chol, jitter=jitter)


def sample_outliers(
    model: GaussianModel,
    n: int,
    rng: Rng,
    clamp: tuple[float, float] | None = None,
) -> DatasetTable:
    """Draw ``n`` samples ``mean + chol @ z`` with z standard normal.

    Sample i consumes normal deviates ``[i*dim, (i+1)*dim)`` of the stream,
    so output is fully determined by (model, n, seed).  ``clamp`` optionally
    restricts every element to a data range such as pixel [0, 1].
    """
    if n < 1:
        raise ConfigurationError(f"sample count must be >= 1, got {n}")
    z = rng.normals(n * model.dim).reshape(n, model.dim)
    samples = model.mean + z @ model.chol.T
    if clamp is not None:
        lo, hi = clamp
        if not lo < hi:
            raise ConfigurationError(f"clamp range must satisfy lo < hi, got {clamp}")
        samples = np.clip(samples, lo, hi)
    return DatasetTable(samples=samples, split="outlier")
