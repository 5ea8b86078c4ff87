import numpy as np
import pytest

from wear import CsvSchema, InvalidDataError, InvalidParameterError, load_csv


def write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


class TestLoadCsv:
    def test_small_file_with_header(self, tmp_path):
        path = write(tmp_path, "a,b,y\n1,2,3\n4,5,6\n7,8,9\n")
        data = load_csv(CsvSchema(path=path, target_column="y"))
        assert data.features.values.shape == (3, 2)
        np.testing.assert_array_equal(data.features.values, [[1, 2], [4, 5], [7, 8]])
        np.testing.assert_array_equal(data.true_labels, [3, 6, 9])
        assert data.annotations is None

    def test_parse_error_names_line_and_column(self, tmp_path):
        path = write(tmp_path, "x,y\nabc,2\n3,4\n")
        with pytest.raises(InvalidDataError) as excinfo:
            load_csv(CsvSchema(path=path, target_column="y"))
        assert "line 2, column 1" in str(excinfo.value)

    def test_roundtrip_is_bit_exact(self, tmp_path):
        gen = np.random.default_rng(0)
        X = gen.normal(size=(20, 3))
        y = gen.normal(size=20)
        lines = ["f1,f2,f3,target"]
        for row, label in zip(X, y):
            lines.append(",".join(repr(float(v)) for v in row) + "," + repr(float(label)))
        path = write(tmp_path, "\n".join(lines) + "\n")
        data = load_csv(CsvSchema(path=path, target_column="target"))
        np.testing.assert_array_equal(data.features.values, X)
        np.testing.assert_array_equal(data.true_labels, y)

    def test_preserves_row_order(self, tmp_path):
        path = write(tmp_path, "x,y\n9,1\n1,2\n5,3\n")
        data = load_csv(CsvSchema(path=path, target_column="y"))
        np.testing.assert_array_equal(data.features.values[:, 0], [9, 1, 5])
        np.testing.assert_array_equal(data.true_labels, [1, 2, 3])

    def test_target_by_index_without_header(self, tmp_path):
        path = write(tmp_path, "1,2,3\n4,5,6\n")
        data = load_csv(CsvSchema(path=path, target_column=0, has_header=False))
        np.testing.assert_array_equal(data.true_labels, [1, 4])
        np.testing.assert_array_equal(data.features.values, [[2, 3], [5, 6]])

    def test_explicit_feature_columns(self, tmp_path):
        path = write(tmp_path, "a,b,c,y\n1,2,3,4\n5,6,7,8\n")
        data = load_csv(CsvSchema(path=path, target_column="y", feature_columns=("c", "a")))
        np.testing.assert_array_equal(data.features.values, [[3, 1], [7, 5]])

    def test_custom_delimiter(self, tmp_path):
        path = write(tmp_path, "a;y\n1;2\n3;4\n")
        data = load_csv(CsvSchema(path=path, target_column="y", delimiter=";"))
        np.testing.assert_array_equal(data.true_labels, [2, 4])

    def test_missing_target_name(self, tmp_path):
        path = write(tmp_path, "a,b\n1,2\n")
        with pytest.raises(InvalidDataError) as excinfo:
            load_csv(CsvSchema(path=path, target_column="label"))
        assert "label" in str(excinfo.value)

    def test_target_also_feature_rejected(self, tmp_path):
        path = write(tmp_path, "a,y\n1,2\n")
        with pytest.raises(InvalidDataError):
            load_csv(CsvSchema(path=path, target_column="y", feature_columns=("a", "y")))

    def test_empty_file(self, tmp_path):
        path = write(tmp_path, "")
        with pytest.raises(InvalidDataError):
            load_csv(CsvSchema(path=path, target_column=0, has_header=False))

    def test_header_only(self, tmp_path):
        path = write(tmp_path, "a,y\n")
        with pytest.raises(InvalidDataError):
            load_csv(CsvSchema(path=path, target_column="y"))

    def test_ragged_rows(self, tmp_path):
        path = write(tmp_path, "a,b,y\n1,2,3\n4,5\n")
        with pytest.raises(InvalidDataError) as excinfo:
            load_csv(CsvSchema(path=path, target_column="y"))
        assert "line 3" in str(excinfo.value)

    def test_missing_cell_flagged(self, tmp_path):
        path = write(tmp_path, "a,y\n1,\n2,3\n")
        with pytest.raises(InvalidDataError) as excinfo:
            load_csv(CsvSchema(path=path, target_column="y"))
        assert "line 2, column 2" in str(excinfo.value)

    def test_nonexistent_file(self, tmp_path):
        with pytest.raises(InvalidDataError):
            load_csv(CsvSchema(path=tmp_path / "nope.csv", target_column=0, has_header=False))

    def test_multichar_delimiter_rejected(self):
        with pytest.raises(InvalidParameterError):
            CsvSchema(path="x.csv", target_column=0, delimiter=",,")

    def test_duplicate_header_reference_rejected(self, tmp_path):
        path = write(tmp_path, "a,a,y\n1,2,3\n")
        with pytest.raises(InvalidDataError) as excinfo:
            load_csv(CsvSchema(path=path, target_column="y", feature_columns=("a",)))
        assert "ambiguous" in str(excinfo.value)
