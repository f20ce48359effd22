"""Synthetic benchmark with controlled familiar and novel anomalies.

Training normals live on three orthogonal spokes inside a
``subspace_dim``-dimensional subspace of the input space: each sample is a
radius in ``[radius_lo, radius_hi]`` times a spoke direction with small
angular noise, and the remaining input coordinates are exactly zero.  The
radius spread matters: networks built from alignment units are positively
homogeneous, so the feature bank forms dense cones that absorb feature-norm
changes, and only genuine direction changes register as unfamiliar.

Two anomaly flavors probe complementary failure modes:

* familiar anomalies sit on the same spokes but at radii beyond the training
  range, a shift within the subspace that feature familiarity catches and
  input-space explanations cannot (the explanation of a scaled sample aligns
  exactly as well as the original);
* novel anomalies are normal draws tilted into the orthogonal complement at
  a steep angle, which barely moves their bank features but leaves most of
  the input unexplained.

Generation is fully determined by the seed.  Run as a module to write the
CSV files:  ``python -m famnov.synthetic OUT_DIR --seed 7``
"""

from __future__ import annotations

import argparse
import os
from pathlib import Path

import numpy as np

from .datasets import DatasetTable, save_csv
from .rng import Rng

__all__ = ["make_benchmark", "write_benchmark"]


def _unit(v: np.ndarray) -> np.ndarray:
    return v / np.linalg.norm(v)


def make_benchmark(
    seed: int = 7,
    dim: int = 12,
    subspace_dim: int = 10,
    n_spokes: int = 3,
    n_train: int = 400,
    n_test_normal: int = 150,
    n_familiar: int = 75,
    n_novel: int = 75,
    angular_noise: float = 0.02,
    radius_lo: float = 0.05,
    radius_hi: float = 4.0,
    familiar_radius: tuple[float, float] = (6.0, 9.0),
    novel_angle_deg: tuple[float, float] = (75.0, 88.0),
) -> dict[str, DatasetTable]:
    """Build the benchmark tables, keyed by role.

    Returns ``train_normal``, ``test_normal``, ``familiar_anomaly``,
    ``novel_anomaly``, and ``test_anomaly`` (familiar and novel stacked).
    """
    if not 1 <= subspace_dim < dim:
        raise ValueError(f"need 1 <= subspace_dim < dim, got {subspace_dim} of {dim}")
    if n_spokes > subspace_dim:
        raise ValueError(f"{n_spokes} orthogonal spokes do not fit in {subspace_dim} dims")
    rng = Rng(seed)

    geometry = rng.spawn(0)
    spokes = []
    for _ in range(n_spokes):
        d = geometry.normals(subspace_dim)
        for p in spokes:
            d -= (d @ p) * p
        spokes.append(_unit(d))

    def draw(r: Rng, count: int, r_lo: float, r_hi: float) -> np.ndarray:
        out = np.zeros((count, dim))
        for i in range(count):
            spoke = spokes[r.integer_below(n_spokes)]
            direction = _unit(spoke + angular_noise * r.normals(subspace_dim))
            out[i, :subspace_dim] = (r_lo + (r_hi - r_lo) * r.uniform()) * direction
        return out

    train = draw(rng.spawn(1), n_train, radius_lo, radius_hi)
    test_normal = draw(rng.spawn(2), n_test_normal, radius_lo, radius_hi)
    familiar = draw(rng.spawn(3), n_familiar, familiar_radius[0], familiar_radius[1])

    novel_rng = rng.spawn(4)
    novel = draw(novel_rng, n_novel, radius_lo, radius_hi)
    comp = dim - subspace_dim
    lo, hi = novel_angle_deg
    for i in range(n_novel):
        angle = np.radians(lo + (hi - lo) * novel_rng.uniform())
        magnitude = np.linalg.norm(novel[i, :subspace_dim]) * np.tan(angle)
        novel[i, subspace_dim:] = magnitude * _unit(novel_rng.normals(comp))

    tables = {
        "train_normal": DatasetTable(train, split="train_normal"),
        "test_normal": DatasetTable(
            test_normal, labels=np.zeros(n_test_normal, dtype=int), split="test_normal"
        ),
        "familiar_anomaly": DatasetTable(
            familiar, labels=np.ones(n_familiar, dtype=int), split="test_anomaly"
        ),
        "novel_anomaly": DatasetTable(
            novel, labels=np.ones(n_novel, dtype=int), split="test_anomaly"
        ),
    }
    tables["test_anomaly"] = DatasetTable(
        np.vstack([familiar, novel]),
        labels=np.ones(n_familiar + n_novel, dtype=int),
        split="test_anomaly",
    )
    return tables


def write_benchmark(
    out_dir: str | os.PathLike, seed: int = 7, **kwargs
) -> dict[str, str]:
    """Write every benchmark table as CSV; returns role -> path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tables = make_benchmark(seed=seed, **kwargs)
    paths = {}
    for role, table in tables.items():
        path = out / f"{role}.csv"
        save_csv(table, path)
        paths[role] = str(path)
    return paths


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description="write the synthetic benchmark CSVs")
    parser.add_argument("out_dir")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args(argv)
    paths = write_benchmark(args.out_dir, seed=args.seed)
    for role, path in paths.items():
        print(f"{role}: {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
