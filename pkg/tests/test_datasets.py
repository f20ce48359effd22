"""File formats: CSV tables, P5 graymaps, heatmaps, score files, metrics."""

import numpy as np
import pytest

from famnov.datasets import (
    DatasetTable,
    load_csv,
    load_metrics,
    load_pgm,
    load_scores_csv,
    save_csv,
    save_heatmap,
    save_metrics,
    save_pgm,
    save_scores_csv,
)
from famnov.errors import DimensionError, ParseError
from famnov.scoring import ScoreRecord


class TestDatasetTable:
    def test_label_length_checked(self):
        with pytest.raises(DimensionError):
            DatasetTable(np.zeros((3, 2)), labels=[0, 1])

    def test_split_checked(self):
        with pytest.raises(ValueError):
            DatasetTable(np.zeros((2, 2)), split="validation")

    def test_shape_hint_checked(self):
        with pytest.raises(DimensionError):
            DatasetTable(np.zeros((2, 5)), shape_hint=(2, 2))

    def test_rejects_nan(self):
        with pytest.raises(ValueError):
            DatasetTable(np.array([[1.0, float("nan")]]))


class TestCsv:
    def test_basic_load(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("x0,x1\n1.5,2.5\n3.0,4.0\n0.0,-1.0\n")
        table = load_csv(path)
        assert len(table) == 3
        assert table.dim == 2
        assert table.labels is None
        np.testing.assert_array_equal(table.samples[1], [3.0, 4.0])

    def test_label_column(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("x0,x1,label\n1.0,2.0,0\n3.0,4.0,1\n")
        table = load_csv(path)
        assert table.labels.tolist() == [0, 1]

    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(42)
        table = DatasetTable(
            rng.normal(size=(20, 4)) * 10.0 ** rng.integers(-8, 8),
            labels=rng.integers(0, 2, size=20),
            split="test_anomaly",
        )
        path = tmp_path / "data.csv"
        save_csv(table, path)
        loaded = load_csv(path, split="test_anomaly")
        np.testing.assert_array_equal(loaded.samples, table.samples)
        np.testing.assert_array_equal(loaded.labels, table.labels)

    def test_ragged_row_names_location(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("x0,x1\n1.0,2.0\n3.0\n")
        with pytest.raises(ParseError, match="row 3"):
            load_csv(path)

    def test_non_numeric_cell_names_location(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("x0,x1\n1.0,oops\n")
        with pytest.raises(ParseError, match="row 2, column 2"):
            load_csv(path)

    def test_missing_file(self):
        with pytest.raises(ParseError):
            load_csv("/nonexistent/data.csv")

    def test_empty_file(self, tmp_path):
        path = tmp_path / "data.csv"
        path.write_text("")
        with pytest.raises(ParseError):
            load_csv(path)


class TestPgm:
    def test_all_black(self, tmp_path):
        path = tmp_path / "img.pgm"
        path.write_bytes(b"P5\n2 2\n255\n\x00\x00\x00\x00")
        table = load_pgm(path)
        np.testing.assert_array_equal(table.samples[0], [0, 0, 0, 0])
        assert table.shape_hint == (2, 2)

    def test_scale_endpoint(self, tmp_path):
        path = tmp_path / "img.pgm"
        path.write_bytes(b"P5\n1 1\n255\n\xff")
        assert load_pgm(path).samples[0, 0] == 1.0

    def test_header_comments(self, tmp_path):
        path = tmp_path / "img.pgm"
        path.write_bytes(b"P5\n# a comment\n2 1\n255\n\x80\x40")
        table = load_pgm(path)
        assert table.shape_hint == (1, 2)
        np.testing.assert_allclose(table.samples[0], [128 / 255, 64 / 255])

    def test_write_read_identity(self, tmp_path):
        rng = np.random.default_rng(7)
        levels = rng.integers(0, 256, size=12)
        row = levels / 255.0
        path = tmp_path / "img.pgm"
        save_pgm(row, (3, 4), path)
        loaded = load_pgm(path)
        np.testing.assert_array_equal(loaded.samples[0], row)
        assert loaded.shape_hint == (3, 4)

    def test_sixteen_bit_round_trip(self, tmp_path):
        rng = np.random.default_rng(8)
        levels = rng.integers(0, 65536, size=6)
        row = levels / 65535.0
        path = tmp_path / "img.pgm"
        save_pgm(row, (2, 3), path, maxval=65535)
        np.testing.assert_allclose(load_pgm(path).samples[0], row, atol=1e-12)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "img.pgm"
        path.write_bytes(b"P6\n1 1\n255\n\x00\x00\x00")
        with pytest.raises(ParseError):
            load_pgm(path)

    def test_truncated_payload(self, tmp_path):
        path = tmp_path / "img.pgm"
        path.write_bytes(b"P5\n2 2\n255\n\x00\x00")
        with pytest.raises(ParseError):
            load_pgm(path)


class TestHeatmap:
    def test_constant_contributions_render_as_zeros(self, tmp_path):
        path = tmp_path / "heat.pgm"
        save_heatmap(np.full(6, 3.5), (2, 3), path)
        np.testing.assert_array_equal(load_pgm(path).samples[0], np.zeros(6))

    def test_single_hot_pixel(self, tmp_path):
        contributions = np.zeros(9)
        contributions[4] = -2.0  # magnitude matters, sign does not
        path = tmp_path / "heat.pgm"
        save_heatmap(contributions, (3, 3), path)
        loaded = load_pgm(path).samples[0]
        assert loaded[4] == 1.0
        assert loaded.sum() == 1.0

    def test_reloadable_with_same_shape(self, tmp_path):
        rng = np.random.default_rng(9)
        path = tmp_path / "heat.pgm"
        save_heatmap(rng.normal(size=20), (4, 5), path)
        assert load_pgm(path).shape_hint == (4, 5)

    def test_sidecar_records_scale(self, tmp_path):
        path = tmp_path / "heat.pgm"
        save_heatmap(np.array([0.0, 1.0, -4.0, 2.0]), (2, 2), path)
        sidecar = (tmp_path / "heat.pgm.scale.txt").read_text()
        assert "min_abs=0.0" in sidecar
        assert "max_abs=4.0" in sidecar
        assert "maxval=255" in sidecar

    def test_shape_mismatch(self, tmp_path):
        with pytest.raises(DimensionError):
            save_heatmap(np.zeros(5), (2, 2), tmp_path / "heat.pgm")


def _records(n):
    return [
        ScoreRecord(
            ffs_raw=float(i),
            ens_raw=float(i % 2),
            ffs_norm=float(i) - 1.0,
            ens_norm=0.5 * i,
            joint=float(i) - 1.0 + 0.5 * i,
            layer_used=0,
            node_used=0,
        )
        for i in range(n)
    ]


class TestScoresCsv:
    def test_round_trip_with_labels(self, tmp_path):
        path = tmp_path / "scores.csv"
        save_scores_csv(["a", "b", "c"], _records(3), [0, 1, 0], path)
        table = load_scores_csv(path)
        assert table.ids == ["a", "b", "c"]
        assert table.labels.tolist() == [0, 1, 0]
        np.testing.assert_array_equal(table.ffs_raw, [0.0, 1.0, 2.0])
        np.testing.assert_array_equal(table.joint, [-1.0, 0.5, 2.0])

    def test_unlabeled_rows_have_empty_cells(self, tmp_path):
        path = tmp_path / "scores.csv"
        save_scores_csv(["a", "b"], _records(2), None, path)
        lines = path.read_text().strip().split("\n")
        assert lines[1].endswith(",")
        assert load_scores_csv(path).labels is None

    def test_header_checked(self, tmp_path):
        path = tmp_path / "scores.csv"
        path.write_text("bogus,header\n")
        with pytest.raises(ParseError):
            load_scores_csv(path)


class TestMetrics:
    def test_round_trip(self, tmp_path):
        metrics = {"auroc": 0.973, "tp": 42, "fnr": 1.0 / 3.0}
        path = tmp_path / "metrics.txt"
        save_metrics(metrics, path)
        loaded = load_metrics(path)
        assert loaded["auroc"] == 0.973
        assert loaded["tp"] == 42.0
        assert loaded["fnr"] == 1.0 / 3.0

    def test_key_value_format(self, tmp_path):
        path = tmp_path / "metrics.txt"
        save_metrics({"auroc": 0.5}, path)
        assert path.read_text() == "auroc=0.5\n"
