"""HDF5 archive of a simulation's header chains and run reports.

Layout:

    /chains/<id>/height          (n,) int64
    /chains/<id>/timestamp       (n,) int64
    /chains/<id>/receipt_root    (n, 32) uint8
    /chains/<id>/parent_digest   (n, 32) uint8
    /reports                     (m,) machine lines
    /                            attrs: format_id, config (YAML)

Each chain group also carries `name` and `receipts` (receipt count per
block) as attributes and datasets respectively.
"""

from __future__ import annotations
from pathlib import Path
from typing import Optional, Sequence, Union
from gpact_sim.io.config import dump_config
from gpact_sim.io.report import machine_line
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
from gpact_sim.model.chain import BlockHeader, ChainId
from gpact_sim.model.config import ScenarioConfig, SimulationConfig
from gpact_sim.model.report import RunReport
from gpact_sim.protocol.chain_sim import Simulation
import logging
import numpy as np

logger = logging.getLogger(__name__)

FORMAT_ID = 1.0


def _decode(value) -> str:
    return value.decode("utf-8") if isinstance(value, bytes) else str(value)


def write_archive(
    filename: Union[str, Path],
    sim: Simulation,
    reports: Sequence[RunReport] = (),
    sim_config: Optional[SimulationConfig] = None,
    scenario: Optional[ScenarioConfig] = None,
):
    """Write the header chains of `sim` and the given reports to `filename`.

    An existing file is overwritten.
    """
    filename = str(filename)
    chains = {}
    for chain_id in sorted(sim.chains):
        state = sim.chains[chain_id]
        headers = state.headers
        chains[str(chain_id)] = {
            "height": np.array([h.height for h in headers], dtype=np.int64),
            "timestamp": np.array([h.timestamp for h in headers], dtype=np.int64),
            "receipt_root": digests_to_array([h.receipt_root for h in headers]),
            "parent_digest": digests_to_array([h.parent_digest for h in headers]),
            "receipts": np.array([len(b.receipts) for b in state.blocks], dtype=np.int64),
        }
    write_hdf5_group(
        filename,
        {"chains": chains, "reports": strings_to_array([machine_line(r) for r in reports])},
        mode="w",
    )
    for chain_id in sorted(sim.chains):
        write_hdf5_attrs(filename, f"chains/{chain_id}", {"name": sim.chains[chain_id].name})
    attrs: dict[str, object] = {"format_id": FORMAT_ID}
    if scenario is not None:
        attrs["config"] = dump_config(sim_config or sim.config, scenario)
    write_hdf5_attrs(filename, "/", attrs)
    logger.info("Archived %d chains and %d reports to %s.", len(chains), len(reports), filename)


def load_headers(filename: Union[str, Path]) -> dict[ChainId, list[BlockHeader]]:
    """Read the header chains back from an archive."""
    filename = str(filename)
    headers: dict[ChainId, list[BlockHeader]] = {}
    for name in list_hdf5_groups(filename, "chains"):
        data = read_hdf5_group(filename, f"chains/{name}")
        chain = int(name)
        headers[chain] = [
            BlockHeader(chain, int(height), int(timestamp), root, parent)
            for height, timestamp, root, parent in zip(
                data["height"],
                data["timestamp"],
                array_to_digests(data["receipt_root"]),
                array_to_digests(data["parent_digest"]),
            )
        ]
    return dict(sorted(headers.items()))


def load_report_lines(filename: Union[str, Path]) -> list[str]:
    """Machine lines of the archived reports."""
    return [_decode(line) for line in read_hdf5_dataset(str(filename), "reports")]


def load_archived_config(filename: Union[str, Path]) -> Optional[str]:
    """YAML configuration stored with the archive, if any."""
    attrs = read_hdf5_attrs(str(filename))
    config = attrs.get("config")
    return None if config is None else _decode(config)
