"""Dense linear algebra and statistics helpers.

Vectors and matrices are float64 numpy arrays; :func:`as_vector` and
:func:`as_matrix` are the validating constructors every public entry point
runs its inputs through, so NaN and infinity never enter the numerics.
Heavy lifting (products, Cholesky) is delegated to numpy behind these
interfaces.
"""

from __future__ import annotations

import numpy as np

from .errors import DecompositionError, DimensionError
from .rng import Rng

__all__ = [
    "NORM_EPS",
    "as_vector",
    "as_matrix",
    "dot",
    "cosine",
    "matvec",
    "matmul",
    "cholesky",
    "cholesky_with_jitter",
    "pca_project",
]

# Norms below this floor are treated as zero throughout the package.
NORM_EPS = 1e-12

_PCA_MAX_ITER = 100
_PCA_TOL = 1e-10
_PCA_SEED = 0x5EED_0F_9A1A  # fixed internal seed, keeps components reproducible


def as_vector(values) -> np.ndarray:
    """Coerce to a finite 1-D float64 array."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1:
        raise DimensionError(f"expected a 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector contains NaN or infinite elements")
    return v

def as_matrix(values) -> np.ndarray:
    """Coerce to a finite 2-D float64 array."""
    m = np.asarray(values, dtype=np.float64)
    if m.ndim != 2:
        raise DimensionError(f"expected a 2-D matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise ValueError("matrix contains NaN or infinite elements")
    return m


def dot(a, b) -> float:
    a, b = as_vector(a), as_vector(b)
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    return float(a @ b)


def cosine(a, b) -> float:
    """Cosine of the angle between two vectors.

    Returns exactly 0.0 when either norm is below :data:`NORM_EPS`; this
    zero-norm convention keeps downstream alignment scores total and bounded.
    """
    a, b = as_vector(a), as_vector(b)
    if a.shape != b.shape:
        raise DimensionError(f"length mismatch: {a.shape[0]} vs {b.shape[0]}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na < NORM_EPS or nb < NORM_EPS:
        return 0.0
    return float(a @ b) / (na * nb)


def matvec(m, v) -> np.ndarray:
    m, v = as_matrix(m), as_vector(v)
    if m.shape[1] != v.shape[0]:
        raise DimensionError(f"matrix has {m.shape[1]} cols, vector has {v.shape[0]}")
    return m @ v


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionError(f"inner dimensions differ: {a.shape} x {b.shape}")
    return a @ b


def cholesky_with_jitter(
    cov, *, jitter: float = 1e-8, max_jitter: float = 1e-2
) -> tuple[np.ndarray, float]:
    """Lower Cholesky factor of ``cov + jitter * I``, with the jitter used.

    The jitter starts at ``jitter`` and escalates tenfold on failure up to
    ``max_jitter``; rank-deficient covariances (duplicated samples, constant
    coordinates) are therefore always factorable.
    """
    cov = as_matrix(cov)
    n, m = cov.shape
    if n != m:
        raise DimensionError(f"expected a square matrix, got {n}x{m}")
    scale = float(np.max(np.abs(cov))) if cov.size else 0.0
    if not np.allclose(cov, cov.T, atol=1e-8 * max(1.0, scale)):
        raise DimensionError("matrix is not symmetric")
    eye = np.eye(n)
    j = jitter
    while True:
        try:
            return np.linalg.cholesky(cov + j * eye), j
        except np.linalg.LinAlgError:
            j *= 10.0
            if j > max_jitter:
                raise DecompositionError(
                    f"matrix is not positive semi-definite even with jitter {max_jitter}"
                ) from None


def cholesky(cov, *, jitter: float = 1e-8, max_jitter: float = 1e-2) -> np.ndarray:
    """Lower-triangular L with ``L @ L.T == cov + jitter * I``."""
    factor, _ = cholesky_with_jitter(cov, jitter=jitter, max_jitter=max_jitter)
    return factor


def _power_component(a: np.ndarray, prior: list[np.ndarray], rng: Rng) -> np.ndarray:
    """Dominant eigenvector of ``a`` restricted to the complement of ``prior``."""
    n = a.shape[0]
    v = rng.normals(n)
    for p in prior:
        v -= (v @ p) * p
    norm = np.linalg.norm(v)
    if norm < NORM_EPS:  # pathological start, fall back to a basis vector
        v = np.zeros(n)
        v[len(prior) % n] = 1.0
    else:
        v /= norm
    for _ in range(_PCA_MAX_ITER):
        w = a @ v
        for p in prior:
            w -= (w @ p) * p
        norm = np.linalg.norm(w)
        if norm < NORM_EPS:
            break  # no variance left in this subspace, keep current direction
        w /= norm
        if np.linalg.norm(w - v) < _PCA_TOL:
            v = w
            break
        v = w
    # sign convention: largest-magnitude entry is positive
    peak = int(np.argmax(np.abs(v)))
    if v[peak] < 0:
        v = -v
    return v


def pca_project(data, k: int) -> tuple[np.ndarray, np.ndarray]:
    """Top-k principal directions of mean-centered ``data`` plus projections.

    Components are found by iterated power method with deflation (at most
    100 iterations per component or 1e-10 convergence), started from a fixed
    internal seed so repeated calls are bit-identical.  Returns
    ``(components, projected)`` with ``components`` of shape (k, d) and
    ``projected = centered @ components.T`` of shape (n, k).
    """
    data = as_matrix(data)
    n, d = data.shape
    if k > d:
        raise DimensionError(f"requested {k} components from {d}-column data")
    if n < 2:
        raise DimensionError(f"PCA needs at least 2 rows, got {n}")
    centered = data - data.mean(axis=0)
    cov = centered.T @ centered / (n - 1)
    rng = Rng(_PCA_SEED)
    components: list[np.ndarray] = []
    work = cov.copy()
    for _ in range(k):
        v = _power_component(work, components, rng)
        lam = float(v @ work @ v)
        work = work - lam * np.outer(v, v)
        components.append(v)
    comp = np.vstack(components) if components else np.zeros((0, d))
    return comp, centered @ comp.T
