"""Tests for the gpact_sim.io.utils file."""
import pytest
import h5py
import numpy as np
from gpact_sim.io.utils import (
    array_to_digests,
    digests_to_array,
    list_hdf5_groups,
    read_hdf5_attrs,
    read_hdf5_dataset,
    read_hdf5_group,
    strings_to_array,
    write_hdf5_attrs,
    write_hdf5_group,
)


@pytest.fixture
def hdf5_file(tmp_path):
    """Small archive-shaped file with one chain group."""
    path = str(tmp_path / "run.h5")
    with h5py.File(path, "w") as f:
        f.create_dataset("heights", data=np.array([0, 1, 2]))
        f.create_dataset("chains/7/timestamp", data=np.array([0, 4, 5]))
        f.attrs["seed"] = 0
        f.attrs["chains"] = 1
    return path


def test_read_hdf5_dataset(hdf5_file):
    """Test `read_hdf5_dataset` reads top-level and nested datasets."""
    np.testing.assert_array_equal(read_hdf5_dataset(hdf5_file, "heights"), [0, 1, 2])
    np.testing.assert_array_equal(read_hdf5_dataset(hdf5_file, "chains/7/timestamp"), [0, 4, 5])


def test_write_hdf5_group(hdf5_file):
    """Test `write_hdf5_group` writes nested groups and replaces entries."""
    write_hdf5_group(hdf5_file, {"heights": np.array([9]), "new": {"inner": {"ds": np.arange(3)}}})
    np.testing.assert_array_equal(read_hdf5_dataset(hdf5_file, "heights"), [9])
    np.testing.assert_array_equal(read_hdf5_dataset(hdf5_file, "new/inner/ds"), [0, 1, 2])
    # Untouched entries survive in append mode.
    np.testing.assert_array_equal(read_hdf5_dataset(hdf5_file, "chains/7/timestamp"), [0, 4, 5])

    write_hdf5_group(hdf5_file, {"only": np.array([1])}, mode="w")
    with h5py.File(hdf5_file, "r") as f:
        assert list(f.keys()) == ["only"]


def test_read_hdf5_group(hdf5_file):
    """Test `read_hdf5_group` returns datasets keyed relative to the group."""
    data = read_hdf5_group(hdf5_file)
    assert sorted(data) == ["chains/7/timestamp", "heights"]
    data = read_hdf5_group(hdf5_file, "chains/7")
    assert list(data) == ["timestamp"]
    np.testing.assert_array_equal(data["timestamp"], [0, 4, 5])


def test_list_hdf5_groups(hdf5_file):
    assert list_hdf5_groups(hdf5_file) == ["chains"]
    assert list_hdf5_groups(hdf5_file, "chains") == ["7"]
    assert list_hdf5_groups(hdf5_file, "chains/7") == []


def test_hdf5_attrs(hdf5_file):
    """Test `read_hdf5_attrs` and `write_hdf5_attrs`."""
    assert read_hdf5_attrs(hdf5_file, "/", "seed") == 0
    assert read_hdf5_attrs(hdf5_file) == {"seed": 0, "chains": 1}

    write_hdf5_attrs(hdf5_file, "/", {"seed": 5, "format_id": "gpact-run"})
    attrs = read_hdf5_attrs(hdf5_file)
    assert attrs["seed"] == 5
    assert attrs["format_id"] == "gpact-run"

    write_hdf5_attrs(hdf5_file, "fresh", {"name": "B"})
    assert read_hdf5_attrs(hdf5_file, "fresh", "name") == "B"


def test_digest_arrays():
    digests = [bytes([i]) * 32 for i in range(3)]
    array = digests_to_array(digests)
    assert array.shape == (3, 32)
    assert array.dtype == np.uint8
    assert array_to_digests(array) == digests
    assert digests_to_array([]).shape == (0, 32)
    assert array_to_digests(digests_to_array([])) == []


def test_strings_to_array(tmp_path):
    path = str(tmp_path / "strings.h5")
    write_hdf5_group(path, {"lines": strings_to_array(["a,b", "période"])})
    lines = [line.decode("utf-8") for line in read_hdf5_dataset(path, "lines")]
    assert lines == ["a,b", "période"]
