"""Dataset split partition tests."""

import pytest

from microdet.ingest import DatasetSplit, split_dataset
from microdet.ingest.split import SplitError


def _ids(n):
    return [f"video_{i:03d}" for i in range(n)]


def test_ten_videos_six_two_two():
    s = split_dataset(_ids(10), seed=0)
    assert (len(s.train), len(s.val), len(s.test)) == (6, 2, 2)


def test_101_videos_largest_remainder():
    s = split_dataset(_ids(101), seed=0)
    assert (len(s.train), len(s.val), len(s.test)) == (61, 20, 20)


def test_deterministic():
    assert split_dataset(_ids(20), seed=7) == split_dataset(_ids(20), seed=7)


def test_independent_of_input_order():
    ids = _ids(20)
    assert split_dataset(ids, seed=3) == split_dataset(list(reversed(ids)), seed=3)


def test_partition_over_100_seeds():
    ids = _ids(17)
    for seed in range(100):
        s = split_dataset(ids, seed=seed)
        parts = [set(s.train), set(s.val), set(s.test)]
        assert parts[0] | parts[1] | parts[2] == set(ids)
        assert not (parts[0] & parts[1] or parts[0] & parts[2] or parts[1] & parts[2])


def test_zero_split_errors():
    with pytest.raises(SplitError, match="smaller ratio"):
        split_dataset(_ids(5), ratio=(20, 1, 1), seed=0)


def test_too_few_sources():
    with pytest.raises(SplitError, match="at least 5"):
        split_dataset(_ids(4), seed=0)


def test_json_round_trip(tmp_path):
    s = split_dataset(_ids(12), seed=5)
    p = tmp_path / "split.json"
    s.to_json(p)
    assert DatasetSplit.from_json(p) == s
