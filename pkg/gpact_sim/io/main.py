"""High-level wrappers for running configured scenarios and archiving them."""

from __future__ import annotations
from attrs import define, field
from pathlib import Path
from typing import Optional, Union
from gpact_sim.io.archive import (
    load_archived_config,
    load_headers,
    load_report_lines,
    write_archive,
)
from gpact_sim.io.config import load_config
from gpact_sim.model.chain import BlockHeader, ChainId
from gpact_sim.model.report import RunReport
from gpact_sim.protocol.scenarios import build_simulation, run_scenario


def run_config(path: Union[str, Path], archive: Optional[Union[str, Path]] = None) -> RunReport:
    """Run the scenario described by a YAML configuration file.

    Args:
        path: Path to the configuration file.
        archive: If given, also write an HDF5 archive of the run there.

    Returns:
        The run report.
    """
    sim_config, scenario = load_config(path)
    sim = build_simulation(scenario, sim_config)
    report = run_scenario(scenario, sim_config, sim)
    if archive is not None:
        write_archive(archive, sim, [report], sim_config, scenario)
    return report


@define
class Archive:
    """Contents of a run archive.

    Attributes:
        headers: Header chain of every simulated chain.
        reports: Machine lines of the archived runs.
        config: YAML configuration of the run, if stored.
    """

    headers: dict[ChainId, list[BlockHeader]] = field(factory=dict)
    reports: list[str] = field(factory=list)
    config: Optional[str] = None


def load_archive(path: Union[str, Path]) -> Archive:
    """Load a run archive written by `write_archive`."""
    return Archive(
        headers=load_headers(path),
        reports=load_report_lines(path),
        config=load_archived_config(path),
    )
