"""Low-level HDF5 helpers used by the run archive."""

from __future__ import annotations
import h5py  # type: ignore[import]
import numpy as np
from typing import Any, Optional, Sequence, Union
from gpact_sim.model.chain import DIGEST_SIZE

Node = Union[h5py.File, h5py.Group]


def digests_to_array(digests: Sequence[bytes]) -> np.ndarray:
    """Pack 32-byte digests into an `(n, 32)` uint8 array."""
    if not digests:
        return np.zeros((0, DIGEST_SIZE), dtype=np.uint8)
    return np.frombuffer(b"".join(digests), dtype=np.uint8).reshape(-1, DIGEST_SIZE)


def array_to_digests(array: np.ndarray) -> list[bytes]:
    """Inverse of `digests_to_array`."""
    return [row.tobytes() for row in np.asarray(array, dtype=np.uint8)]


def strings_to_array(strings: Sequence[str]) -> np.ndarray:
    """Variable-length UTF-8 string array that h5py can store."""
    return np.array(list(strings), dtype=h5py.string_dtype("utf-8"))


def _overwrite_dataset(parent: Node, name: str, data: np.ndarray):
    if name in parent:
        del parent[name]
    parent.create_dataset(name, data=data)


def _overwrite_group(parent: Node, name: str) -> h5py.Group:
    if name in parent:
        del parent[name]
    return parent.create_group(name)


def write_hdf5_group(filename: str, data: dict[str, Any], mode: str = "a"):
    """Write nested groups of arrays.

    Args:
        filename: Path to an HDF5 file. Created if it does not exist.
        data: Mapping of names to arrays (datasets) or nested mappings
            (groups). Existing entries with the same names are replaced.
        mode: h5py file mode. Use `"w"` to truncate the file first.
    """

    def write_group(parent: Node, entries: dict[str, Any]):
        for name, value in entries.items():
            if isinstance(value, dict):
                write_group(_overwrite_group(parent, name), value)
            else:
                _overwrite_dataset(parent, name, value)

    with h5py.File(filename, mode) as f:
        write_group(f, data)


def read_hdf5_dataset(filename: str, dataset: str) -> np.ndarray:
    """Read a dataset into memory."""
    with h5py.File(filename, "r") as f:
        return f[dataset][()]


def read_hdf5_group(filename: str, group: str = "/") -> dict[str, np.ndarray]:
    """Read every dataset below `group`.

    Returns:
        A flat dictionary keyed by dataset path relative to `group`.
    """
    data: dict[str, np.ndarray] = {}

    def visit(name: str, item: Any):
        if isinstance(item, h5py.Dataset):
            data[name] = item[()]

    with h5py.File(filename, "r") as f:
        f[group].visititems(visit)
    return data


def list_hdf5_groups(filename: str, group: str = "/") -> list[str]:
    """Names of the direct subgroups of `group`."""
    with h5py.File(filename, "r") as f:
        return [name for name, item in f[group].items() if isinstance(item, h5py.Group)]


def write_hdf5_attrs(filename: str, path: str, attributes: dict[str, Any]):
    """Set attributes on a group or dataset, replacing existing ones."""
    with h5py.File(filename, "a") as f:
        node = f.require_group(path) if path not in f else f[path]
        for name, value in attributes.items():
            if name in node.attrs:
                del node.attrs[name]
            node.attrs.create(name, value)


def read_hdf5_attrs(
    filename: str, path: str = "/", attribute: Optional[str] = None
) -> Union[Any, dict[str, Any]]:
    """Read all attributes of `path`, or only `attribute` if given."""
    with h5py.File(filename, "r") as f:
        node = f[path]
        if attribute is None:
            return dict(node.attrs)
        return node.attrs[attribute]
