import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from jive.exceptions import DataFileError, InputError
from jive.io import (
    read_blocks,
    read_json,
    read_labels,
    read_matrix,
    write_json,
    write_labels,
    write_matrix,
)


def write_text(path, text):
    path.write_text(text)
    return path


class TestMatrixFiles:
    @settings(max_examples=25, deadline=None)
    @given(arrays(np.float64, st.tuples(st.integers(1, 5), st.integers(1, 5)),
                  elements=st.floats(allow_nan=False, allow_infinity=False)))
    def test_round_trip_is_exact(self, tmp_path_factory, data):
        path = tmp_path_factory.mktemp("rt") / "m.tsv"
        rows = [f"v{i}" for i in range(data.shape[0])]
        cols = [f"s{j}" for j in range(data.shape[1])]
        write_matrix(path, data, rows, cols)
        m = read_matrix(path)
        np.testing.assert_array_equal(m.data, data)
        assert m.row_labels == tuple(rows) and m.column_labels == tuple(cols)

    def test_csv_by_suffix(self, tmp_path):
        path = write_text(tmp_path / "m.csv", ",a,b\nx,1,2\n")
        np.testing.assert_array_equal(read_matrix(path).data, [[1.0, 2.0]])

    def test_bad_value_position(self, tmp_path):
        path = write_text(tmp_path / "m.tsv", "\ta\tb\nx\t1\t2\ny\t3\toops\n")
        with pytest.raises(DataFileError, match=r"m\.tsv, row 3, column 3") as info:
            read_matrix(path)
        assert (info.value.row, info.value.column) == (3, 3)

    @pytest.mark.parametrize("text, pattern", [
        ("", "empty"),
        ("\ta\ta\nx\t1\t2\n", "duplicate sample"),
        ("\ta\t\nx\t1\t2\n", "empty sample label"),
        ("\ta\tb\nx\t1\n", "expected 3 fields"),
        ("\ta\tb\nx\t1\tnan\n", "non-finite"),
        ("\ta\tb\n", "no variable rows"),
    ])
    def test_malformed(self, tmp_path, text, pattern):
        with pytest.raises(DataFileError, match=pattern):
            read_matrix(write_text(tmp_path / "m.tsv", text))

    def test_shape_mismatch_on_write(self, tmp_path):
        with pytest.raises(InputError):
            write_matrix(tmp_path / "m.tsv", np.ones((2, 2)), ["a"], ["x", "y"])


class TestBlocks:
    def test_columns_aligned_to_first_file(self, tmp_path):
        a = write_text(tmp_path / "a.tsv", "\ts1\ts2\nx\t1\t2\n")
        b = write_text(tmp_path / "b.tsv", "\ts2\ts1\ny\t20\t10\n")
        ds = read_blocks([("A", a), ("B", b)])
        np.testing.assert_array_equal(ds.matrices[1], [[10.0, 20.0]])
        assert ds.sample_labels == ("s1", "s2")

    def test_sample_count_mismatch_names_both_files(self, tmp_path):
        a = write_text(tmp_path / "a.tsv", "\ts1\ts2\nx\t1\t2\n")
        b = write_text(tmp_path / "b.tsv", "\ts1\ny\t1\n")
        with pytest.raises(InputError) as info:
            read_blocks([("A", a), ("B", b)])
        assert "a.tsv" in str(info.value) and "b.tsv" in str(info.value)

    def test_sample_set_mismatch(self, tmp_path):
        a = write_text(tmp_path / "a.tsv", "\ts1\ts2\nx\t1\t2\n")
        b = write_text(tmp_path / "b.tsv", "\ts1\ts3\ny\t1\t2\n")
        with pytest.raises(InputError, match="'s2'"):
            read_blocks([("A", a), ("B", b)])

    def test_duplicate_block_names(self, tmp_path):
        a = write_text(tmp_path / "a.tsv", "\ts1\nx\t1\n")
        with pytest.raises(InputError):
            read_blocks([("A", a), ("A", a)])


class TestLabelsAndJson:
    def test_labels_round_trip(self, tmp_path):
        write_labels(tmp_path / "l.tsv", ["s1", "s2"], [1, 2])
        assert read_labels(tmp_path / "l.tsv") == {"s1": "1", "s2": "2"}

    def test_duplicate_label(self, tmp_path):
        path = write_text(tmp_path / "l.tsv", "sample\tgroup\ns1\ta\ns1\tb\n")
        with pytest.raises(DataFileError, match="row 3, column 1"):
            read_labels(path)

    def test_json_format_tag(self, tmp_path):
        write_json(tmp_path / "m.json", {"x": np.float64(1.5), "y": (1, 2)})
        assert read_json(tmp_path / "m.json")["y"] == [1, 2]
        with pytest.raises(DataFileError, match="expected format"):
            read_json(tmp_path / "m.json", format_tag="other/1")
