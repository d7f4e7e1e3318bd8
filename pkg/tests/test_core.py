import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fairkit.core import Dataset, ValidationError, partition_groups, validate_dataset


def _as_sets(groups):
    return {k: set(v.tolist()) for k, v in groups._asdict().items()}


class TestPartitionGroups:
    def test_two_rows(self):
        assert _as_sets(partition_groups([1, 0], [1, 0])) == {
            "d_pos": {0},
            "d_neg": set(),
            "a_pos": set(),
            "a_neg": {1},
        }

    def test_single_group(self):
        g = partition_groups([1, 1, 1], [0, 0, 0])
        assert g.a_pos.tolist() == [0, 1, 2]
        assert g.d_pos.size == g.d_neg.size == g.a_neg.size == 0

    def test_six_rows(self):
        # hand enumeration
        g = _as_sets(partition_groups([1, 1, 0, 1, 0, 0], [0, 0, 0, 1, 1, 1]))
        assert g == {"a_pos": {0, 1}, "a_neg": {2}, "d_pos": {3}, "d_neg": {4, 5}}

    def test_length_mismatch(self):
        with pytest.raises(ValidationError, match="length mismatch"):
            partition_groups([1, 0, 1], [1, 0])

    @given(st.lists(st.tuples(st.integers(0, 1), st.integers(0, 1)), min_size=1, max_size=60))
    def test_is_partition(self, pairs):
        y, s = map(np.array, zip(*pairs))
        g = partition_groups(y, s)
        all_idx = np.concatenate(list(g))
        assert sorted(all_idx.tolist()) == list(range(len(y)))
        assert len(g.d_pos) + len(g.d_neg) == int(s.sum())


class TestValidateDataset:
    def test_valid_returns_same(self):
        d = Dataset(np.eye(3), [1, 0, 1], [0, 1, 1])
        assert validate_dataset(d) is d
        built = validate_dataset(np.eye(3), [1, 0, 1], [0, 1, 1])
        np.testing.assert_array_equal(built.X, np.eye(3))
        assert built.feature_names == ("x0", "x1", "x2")

    def test_non_binary_label(self):
        with pytest.raises(ValidationError, match=r"y\[1\] = 2"):
            validate_dataset(np.zeros((3, 1)), [1, 2, 0], [0, 0, 1])

    def test_non_binary_protected(self):
        with pytest.raises(ValidationError, match=r"s\[2\]"):
            validate_dataset(np.zeros((3, 1)), [1, 0, 0], [0, 0, -1])

    def test_nan_feature(self):
        X = np.ones((3, 2))
        X[0, 1] = np.nan
        with pytest.raises(ValidationError, match=r"X\[0, 1\]"):
            validate_dataset(X, [1, 0, 1], [0, 1, 0])

    def test_length_mismatch(self):
        with pytest.raises(ValidationError, match="length mismatch"):
            validate_dataset(np.ones((3, 2)), [1, 0], [0, 1, 0])

    def test_duplicate_names(self):
        with pytest.raises(ValidationError, match="duplicate"):
            Dataset(np.ones((2, 2)), [1, 0], [0, 1], ("a", "a"))

    def test_immutable(self):
        d = Dataset(np.ones((2, 2)), [1, 0], [0, 1])
        with pytest.raises(ValueError):
            d.X[0, 0] = 5.0
        with pytest.raises(AttributeError):
            d.y = np.array([0, 0])

    def test_drop_and_subset(self):
        d = Dataset(np.arange(6.0).reshape(3, 2), [1, 0, 1], [0, 1, 0], ("a", "b"))
        assert d.drop_columns(["a"]).feature_names == ("b",)
        sub = d.subset([2, 0])
        np.testing.assert_array_equal(sub.X, [[4, 5], [0, 1]])
        np.testing.assert_array_equal(sub.s, [0, 0])
