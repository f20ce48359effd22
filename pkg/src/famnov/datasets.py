"""Dataset containers and file formats.

Two on-disk formats, both dependency-free and bit-exact:

* CSV with a header row ``x0,...,x{d-1}`` plus an optional trailing
  ``label`` column.  Floats are written with ``repr`` so a save/load
  round-trip reproduces every value exactly.
* Binary P5 PGM (one gray channel, maxval <= 65535, two-byte samples stored
  big-endian above 255).  Pixels load as reals in [0, 1].
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DimensionError, ParseError
from .linalg import as_matrix, as_vector

__all__ = [
    "SPLITS",
    "DatasetTable",
    "load_csv",
    "save_csv",
    "load_pgm",
    "save_pgm",
    "save_heatmap",
    "ScoresTable",
    "save_scores_csv",
    "load_scores_csv",
    "save_metrics",
    "load_metrics",
]

SPLITS = ("train_normal", "test_normal", "test_anomaly", "outlier")


@dataclass
class DatasetTable:
    """Labeled collection of fixed-dimension real vectors.

    ``samples`` is one row per sample; ``labels`` (0 = normal, 1 = anomaly)
    is optional; ``shape_hint`` carries (height, width) for flattened images.
    """

    samples: np.ndarray
    labels: np.ndarray | None = None
    split: str = "train_normal"
    shape_hint: tuple[int, int] | None = None

    def __post_init__(self):
        self.samples = as_matrix(self.samples)
        if self.labels is not None:
            self.labels = np.asarray(self.labels, dtype=np.int64)
            if self.labels.shape != (self.samples.shape[0],):
                raise DimensionError(
                    f"{self.labels.shape[0]} labels for {self.samples.shape[0]} samples"
                )
        if self.split not in SPLITS:
            raise ValueError(f"unknown split {self.split!r}, expected one of {SPLITS}")
        if self.shape_hint is not None:
            h, w = self.shape_hint
            if h * w != self.samples.shape[1]:
                raise DimensionError(
                    f"shape hint {h}x{w} does not match row width {self.samples.shape[1]}"
                )

    def __len__(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]


def _fmt(x: float) -> str:
    return repr(float(x))


def load_csv(path: str | os.PathLike, split: str = "train_normal") -> DatasetTable:
    """Load a dataset table; a trailing ``label`` column becomes labels."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = [ln.rstrip("\n") for ln in fh]
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not lines or not lines[0].strip():
        raise ParseError(f"{path}: missing header row")
    header = lines[0].split(",")
    has_label = header[-1].strip() == "label"
    width = len(header) - (1 if has_label else 0)
    if width < 1:
        raise ParseError(f"{path}: header declares no value columns")
    rows, labels = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        cells = line.split(",")
        if len(cells) != len(header):
            raise ParseError(
                f"{path}: row {lineno} has {len(cells)} cells, expected {len(header)}"
            )
        values = []
        for col, cell in enumerate(cells[:width]):
            try:
                values.append(float(cell))
            except ValueError:
                raise ParseError(
                    f"{path}: row {lineno}, column {col + 1}: non-numeric cell {cell!r}"
                ) from None
        if has_label:
            cell = cells[-1]
            try:
                labels.append(int(float(cell)))
            except ValueError:
                raise ParseError(
                    f"{path}: row {lineno}, column {len(header)}: bad label {cell!r}"
                ) from None
        rows.append(values)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return DatasetTable(
        samples=np.array(rows, dtype=np.float64),
        labels=np.array(labels, dtype=np.int64) if has_label else None,
        split=split,
    )


def save_csv(table: DatasetTable, path: str | os.PathLike) -> None:
    cols = [f"x{i}" for i in range(table.dim)]
    if table.labels is not None:
        cols.append("label")
    out = [",".join(cols)]
    for i in range(len(table)):
        cells = [_fmt(v) for v in table.samples[i]]
        if table.labels is not None:
            cells.append(str(int(table.labels[i])))
        out.append(",".join(cells))
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(out) + "\n")


# -- PGM ---------------------------------------------------------------

def _pgm_tokens(data: bytes, path, count: int) -> tuple[list[bytes], int]:
    """First ``count`` whitespace-separated header tokens, skipping comments."""
    tokens: list[bytes] = []
    i = 0
    while len(tokens) < count:
        if i >= len(data):
            raise ParseError(f"{path}: truncated header")
        c = data[i : i + 1]
        if c == b"#":
            while i < len(data) and data[i : i + 1] != b"\n":
                i += 1
        elif c.isspace():
            i += 1
        else:
            j = i
            while j < len(data) and not data[j : j + 1].isspace():
                j += 1
            tokens.append(data[i:j])
            i = j
    return tokens, i + 1  # payload starts after single whitespace byte


def load_pgm(path: str | os.PathLike, split: str = "test_normal") -> DatasetTable:
    """Load a binary P5 graymap as a single-row table scaled to [0, 1]."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    tokens, offset = _pgm_tokens(data, path, 4)
    if tokens[0] != b"P5":
        raise ParseError(f"{path}: bad magic {tokens[0]!r}, expected P5")
    try:
        width, height, maxval = (int(t) for t in tokens[1:])
    except ValueError:
        raise ParseError(f"{path}: non-numeric header fields") from None
    if width < 1 or height < 1 or not (0 < maxval <= 65535):
        raise ParseError(f"{path}: invalid dimensions {width}x{height} maxval {maxval}")
    wide = maxval > 255
    expected = width * height * (2 if wide else 1)
    payload = data[offset : offset + expected]
    if len(payload) < expected:
        raise ParseError(f"{path}: truncated payload, {len(payload)} of {expected} bytes")
    raw = np.frombuffer(payload, dtype=">u2" if wide else np.uint8)
    row = raw.astype(np.float64) / float(maxval)
    return DatasetTable(
        samples=row.reshape(1, -1), split=split, shape_hint=(height, width)
    )


def save_pgm(
    row, shape: tuple[int, int], path: str | os.PathLike, maxval: int = 255
) -> None:
    """Write values in [0, 1] as a binary P5 graymap."""
    row = as_vector(row)
    h, w = shape
    if h * w != row.shape[0]:
        raise DimensionError(f"shape {h}x{w} does not match {row.shape[0]} pixels")
    if not (0 < maxval <= 65535):
        raise ValueError(f"maxval must be in (0, 65535], got {maxval}")
    levels = np.clip(np.rint(row * maxval), 0, maxval)
    dtype = ">u2" if maxval > 255 else np.uint8
    with open(path, "wb") as fh:
        fh.write(f"P5\n{w} {h}\n{maxval}\n".encode("ascii"))
        fh.write(levels.astype(dtype).tobytes())


def save_heatmap(
    contributions,
    shape: tuple[int, int],
    path: str | os.PathLike,
    maxval: int = 255,
) -> None:
    """Render per-pixel contribution magnitudes as a graymap.

    ``contributions`` is the elementwise product of a collapsed explanation
    with its input; magnitudes are min-max scaled to [0, maxval].  A
    degenerate range (constant magnitudes) renders as all zeros.  The scaling
    constants are recorded in a ``<path>.scale.txt`` sidecar so the absolute
    values stay recoverable.
    """
    contributions = as_vector(contributions)
    h, w = shape
    if h * w != contributions.shape[0]:
        raise DimensionError(
            f"shape {h}x{w} does not match {contributions.shape[0]} values"
        )
    mag = np.abs(contributions)
    lo, hi = float(mag.min()), float(mag.max())
    if hi - lo < 1e-300:
        scaled = np.zeros_like(mag)
    else:
        scaled = (mag - lo) / (hi - lo)
    save_pgm(scaled, shape, path, maxval=maxval)
    with open(f"{path}.scale.txt", "w", encoding="ascii", newline="\n") as fh:
        fh.write(f"min_abs={_fmt(lo)}\nmax_abs={_fmt(hi)}\nmaxval={maxval}\n")


# -- score tables and metrics reports ----------------------------------

_SCORE_COLUMNS = ("sample_id", "ffs_raw", "ens_raw", "ffs_norm", "ens_norm", "joint", "label")


@dataclass
class ScoresTable:
    """Parsed contents of a score CSV, one entry per test sample."""

    ids: list[str]
    ffs_raw: np.ndarray
    ens_raw: np.ndarray
    ffs_norm: np.ndarray
    ens_norm: np.ndarray
    joint: np.ndarray
    labels: np.ndarray | None = None

    def column(self, name: str) -> np.ndarray:
        if name not in ("ffs_raw", "ens_raw", "ffs_norm", "ens_norm", "joint"):
            raise ValueError(f"unknown score column {name!r}")
        return getattr(self, name)


def save_scores_csv(
    ids: Sequence[str],
    records: Sequence,
    labels: Sequence[int] | None,
    path: str | os.PathLike,
) -> None:
    """Write one row per test sample; no label renders as an empty cell."""
    if labels is not None and len(labels) != len(records):
        raise DimensionError(f"{len(labels)} labels for {len(records)} records")
    if len(ids) != len(records):
        raise DimensionError(f"{len(ids)} ids for {len(records)} records")
    lines = [",".join(_SCORE_COLUMNS)]
    for i, rec in enumerate(records):
        label = "" if labels is None else str(int(labels[i]))
        lines.append(
            ",".join(
                [
                    str(ids[i]),
                    _fmt(rec.ffs_raw),
                    _fmt(rec.ens_raw),
                    _fmt(rec.ffs_norm),
                    _fmt(rec.ens_norm),
                    _fmt(rec.joint),
                    label,
                ]
            )
        )
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_scores_csv(path: str | os.PathLike) -> ScoresTable:
    try:
        with open(path, "r", encoding="ascii") as fh:
            lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    except OSError as exc:
        raise ParseError(f"{path}: {exc}") from exc
    if not lines or tuple(lines[0].split(",")) != _SCORE_COLUMNS:
        raise ParseError(f"{path}: missing or malformed score header")
    ids: list[str] = []
    cols: dict[str, list[float]] = {c: [] for c in _SCORE_COLUMNS[1:-1]}
    labels: list[int] = []
    any_label = False
    for lineno, line in enumerate(lines[1:], start=2):
        cells = line.split(",")
        if len(cells) != len(_SCORE_COLUMNS):
            raise ParseError(f"{path}: row {lineno} has {len(cells)} cells")
        ids.append(cells[0])
        try:
            for name, cell in zip(_SCORE_COLUMNS[1:-1], cells[1:-1]):
                cols[name].append(float(cell))
        except ValueError:
            raise ParseError(f"{path}: row {lineno}: non-numeric score cell") from None
        if cells[-1] != "":
            any_label = True
            try:
                labels.append(int(cells[-1]))
            except ValueError:
                raise ParseError(f"{path}: row {lineno}: bad label {cells[-1]!r}") from None
        else:
            labels.append(-1)
    if any_label and -1 in labels:
        raise ParseError(f"{path}: labels must be present on all rows or none")
    return ScoresTable(
        ids=ids,
        ffs_raw=np.array(cols["ffs_raw"]),
        ens_raw=np.array(cols["ens_raw"]),
        ffs_norm=np.array(cols["ffs_norm"]),
        ens_norm=np.array(cols["ens_norm"]),
        joint=np.array(cols["joint"]),
        labels=np.array(labels, dtype=np.int64) if any_label else None,
    )


def save_metrics(metrics: dict, path: str | os.PathLike) -> None:
    """Write a metrics report, one ``key=value`` line per metric."""
    lines = []
    for key, value in metrics.items():
        if isinstance(value, float):
            lines.append(f"{key}={_fmt(value)}")
        else:
            lines.append(f"{key}={value}")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def load_metrics(path: str | os.PathLike) -> dict[str, float]:
    metrics: dict[str, float] = {}
    with open(path, "r", encoding="ascii") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            key, _, value = line.partition("=")
            metrics[key] = float(value)
    return metrics
