import math

import numpy as np
import pytest

from conftest import write_wine_like_csv
from surveyknn.dataio import (
    TabularSchema,
    WINE_COLUMNS,
    read_points_csv,
    read_results,
    read_sample_csv,
    read_table,
    read_wine_csv,
    write_matrix_csv,
    write_results,
)
from surveyknn.errors import DataFormatError
from surveyknn.results import StudyRecord, StudyResult


class TestWineIngestion:
    def test_reads_population_with_density_dropped(self, wine_like_file):
        path, data = wine_like_file
        with pytest.warns(UserWarning, match="expected 4898 rows"):
            pop = read_wine_csv(path)
        assert pop.size == 60
        assert pop.dim == 10
        np.testing.assert_allclose(pop.y, data[:, -1])

    def test_row_order_preserved(self, wine_like_file):
        path, data = wine_like_file
        with pytest.warns(UserWarning):
            pop = read_wine_csv(path)
        kept = [i for i, c in enumerate(WINE_COLUMNS[:-1]) if c != "density"]
        np.testing.assert_allclose(pop.x, data[:, kept], atol=1e-5)

    def test_header_mismatch_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a;b;c\n1;2;3\n")
        with pytest.raises(DataFormatError, match="header"):
            read_wine_csv(path)

    def test_bad_cell_reports_row_and_column(self, tmp_path):
        path = tmp_path / "wine.csv"
        write_wine_like_csv(path, rows=5)
        lines = path.read_text().splitlines()
        parts = lines[3].split(";")
        parts[4] = "not-a-number"
        lines[3] = ";".join(parts)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(DataFormatError, match="row 4, column 'chlorides'"):
            read_wine_csv(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("")
        with pytest.raises(DataFormatError, match="empty"):
            read_wine_csv(path)


def some_records():
    return [
        StudyRecord("consistency", 100, 20, 4, "srswor", 3, -1, "mse", 1 / 3),
        StudyRecord("consistency", 100, 20, 4, "srswor", 0, -1, "mse", math.pi),
        StudyRecord("consistency", 50, 10, 3, "srswor", 0, 2, "estimate", 1e-300),
        StudyRecord("c4", 50, 20, 4, "pps", -1, 0, "max_ratio", 0.1),
    ]


class TestResultsRoundTrip:
    def test_round_trip_is_lossless(self, tmp_path):
        path = tmp_path / "results.csv"
        result = StudyResult(some_records())
        write_results(result, path)
        back = read_results(path)
        assert back.records == result.sorted().records

    def test_empty_result_is_header_only(self, tmp_path):
        path = tmp_path / "empty.csv"
        write_results(StudyResult(), path)
        assert path.read_text() == "study,N,n,kn,design,grid_id,replicate,statistic,value\n"
        assert read_results(path).records == []

    def test_output_is_order_independent(self, tmp_path):
        records = some_records()
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        write_results(StudyResult(records), a)
        write_results(StudyResult(list(reversed(records))), b)
        assert a.read_bytes() == b.read_bytes()

    def test_non_results_file_rejected(self, tmp_path):
        path = tmp_path / "junk.csv"
        path.write_text("x,y\n1,2\n")
        with pytest.raises(DataFormatError, match="not a results file"):
            read_results(path)

    def test_custom_delimiter_round_trip(self, tmp_path):
        path = tmp_path / "semi.csv"
        result = StudyResult(some_records())
        write_results(result, path, delimiter=";")
        assert ";" in path.read_text().splitlines()[0]
        back = read_results(path, delimiter=";")
        assert back.records == result.sorted().records


class TestMatrixCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "grid.csv"
        rows = np.array([[0.1, 0.2], [1 / 3, math.e]])
        write_matrix_csv(path, ["a", "b"], rows)
        schema = TabularSchema(columns=("a", "b"), delimiter=",")
        _, back = read_table(path, schema)
        np.testing.assert_array_equal(back, rows)


class TestAdhocReaders:
    def test_sample_with_pi(self, tmp_path):
        path = tmp_path / "sample.csv"
        path.write_text("x1,y,pi\n0.0,2.0,0.5\n1.0,4.0,0.25\n")
        covariates, x, y, pi = read_sample_csv(path)
        assert covariates == ["x1"]
        np.testing.assert_array_equal(x[:, 0], [0.0, 1.0])
        np.testing.assert_array_equal(y, [2.0, 4.0])
        np.testing.assert_array_equal(pi, [0.5, 0.25])

    def test_sample_defaults_pi_to_one(self, tmp_path):
        path = tmp_path / "sample.csv"
        path.write_text("u,v,y\n0,1,5\n1,0,6\n")
        covariates, x, y, pi = read_sample_csv(path)
        assert covariates == ["u", "v"]
        np.testing.assert_array_equal(pi, [1.0, 1.0])

    def test_sample_requires_response(self, tmp_path):
        path = tmp_path / "sample.csv"
        path.write_text("x1,x2\n0,1\n")
        with pytest.raises(DataFormatError, match="'y' column"):
            read_sample_csv(path)

    def test_points_header_must_match(self, tmp_path):
        path = tmp_path / "points.csv"
        path.write_text("x1\n0.5\n")
        np.testing.assert_array_equal(read_points_csv(path, ["x1"]), [[0.5]])
        with pytest.raises(DataFormatError, match="header"):
            read_points_csv(path, ["x1", "x2"])


def test_schema_validation():
    with pytest.raises(ValueError, match="unique"):
        TabularSchema(columns=("a", "a"))
    with pytest.raises(ValueError, match="single character"):
        TabularSchema(columns=("a",), delimiter=";;")
