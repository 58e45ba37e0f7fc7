"""Safety and liveness checks over many fault-injected runs.

`explore_write` enumerates every combination of faults for the two-chain write
scenario and checks that each terminal state either committed on both chains
or discarded on both. `random_scenario` and `check_liveness` drive the
randomized liveness batch.
"""

from __future__ import annotations
from attrs import define, field
from itertools import product
from typing import Iterator, Optional
from gpact_sim.errors import PostStateError
from gpact_sim.model.attestation import AttestationMode
from gpact_sim.model.calltree import CallPath
from gpact_sim.model.config import (
    DUPLICABLE_ROLES,
    CrashPhase,
    EngineOrder,
    FaultSpec,
    ScenarioConfig,
    SimulationConfig,
)
from gpact_sim.model.report import RunReport
from gpact_sim.protocol.scenarios import run_scenario
import logging
import numpy as np

logger = logging.getLogger(__name__)

DUPLICATE_DELAYS = (0, 1, 2)
LIVENESS_SLACK = 3
MIN_INTERLEAVINGS = 200

# Paths of every node of each scenario's call tree.
TREE_PATHS = {
    "read": ("root", "1"),
    "write": ("root", "1"),
    "trade": ("root", "1", "1.1", "1.2", "1.3"),
}


def write_fault_space(timeout_periods: int = 8) -> Iterator[tuple[AttestationMode, list[FaultSpec]]]:
    """Every fault combination of the write scenario, per attestation mode.

    Dimensions: attestation mode, failing node (none, the segment or the
    root), root on time or after the timeout, coordinator crash (none or any
    phase) and duplicate submission (none, or any role with any delay,
    including one that lands after the timeout).
    """
    crashes: list[Optional[CrashPhase]] = [None, *CrashPhase]
    delays = (*DUPLICATE_DELAYS, timeout_periods + 1)
    duplicates = [None] + [(role, delay) for role in DUPLICABLE_ROLES for delay in delays]
    failing: list[Optional[CallPath]] = [None, CallPath((1,)), CallPath.root()]
    for mode, fail, delay_root, crash, duplicate in product(
        AttestationMode, failing, (False, True), crashes, duplicates
    ):
        faults = []
        if fail is not None:
            faults.append(FaultSpec(fail_segment_at=fail))
        if delay_root:
            faults.append(FaultSpec(delay_root=True))
        if crash is not None:
            faults.append(FaultSpec(crash_coordinator_after=crash))
        if duplicate is not None:
            faults.append(FaultSpec(duplicate=duplicate[0], duplicate_delay=duplicate[1]))
        yield mode, faults


def trace_signature(report: RunReport) -> tuple:
    """Period-relative shape of a run and its decision, used to tell interleavings apart."""
    return (report.outcome.name,) + tuple(
        (
            entry.period - report.start_period,
            entry.chain,
            entry.role.value,
            int(entry.status),
            str(entry.path) if entry.path is not None else "",
            entry.actor,
        )
        for entry in report.trace
    )


def check_liveness(report: RunReport, timeout_periods: int) -> list[str]:
    """Problems with a terminated run: a stall, leftover locks or a late end."""
    problems = []
    if report.stalled:
        problems.append("no root decision")
    if report.lock_residue:
        problems.append(f"{len(report.lock_residue)} contracts still locked")
    bound = timeout_periods + report.depth + LIVENESS_SLACK
    if report.periods_elapsed > bound:
        problems.append(f"took {report.periods_elapsed} periods, bound is {bound}")
    return problems


@define
class ExplorationResult:
    """Outcome of a set of checked runs.

    Attributes:
        runs: Number of runs executed.
        signatures: Distinct trace signatures seen.
        violations: Description of every failed check.
    """

    runs: int = 0
    signatures: set[tuple] = field(factory=set)
    violations: list[str] = field(factory=list)

    @property
    def distinct(self) -> int:
        """Number of distinct interleavings."""
        return len(self.signatures)

    @property
    def ok(self) -> bool:
        """Return `True` if no check failed."""
        return not self.violations


def explore_write(
    sim_config: Optional[SimulationConfig] = None, timeout_periods: int = 8
) -> ExplorationResult:
    """Run the write scenario under every combination of faults.

    Every run must end with the watched storage at either its committed or
    its initial values on both chains, with no locks left and within the
    liveness bound.
    """
    result = ExplorationResult()
    for mode, faults in write_fault_space(timeout_periods):
        config = ScenarioConfig(
            "write",
            attestation_mode=mode,
            faults=faults,
            timeout_periods=timeout_periods,
        )
        label = f"{mode.value}[{', '.join(str(f) for f in faults) or 'no faults'}]"
        result.runs += 1
        try:
            report = run_scenario(config, sim_config)
        except PostStateError as exc:
            result.violations.append(f"{label}: {exc}")
            continue
        result.signatures.add(trace_signature(report))
        result.violations.extend(
            f"{label}: {problem}" for problem in check_liveness(report, timeout_periods)
        )
    logger.info(
        "Explored %d runs, %d distinct interleavings, %d violations.",
        result.runs,
        result.distinct,
        len(result.violations),
    )
    return result


def random_faults(rng: np.random.Generator, scenario: str, max_byzantine: int) -> list[FaultSpec]:
    """Draw up to two compatible faults for `scenario`."""
    kinds = ["crash", "fail", "duplicate", "delay-root", "byzantine"]
    faults: list[FaultSpec] = []
    chosen = rng.choice(len(kinds), size=int(rng.integers(0, 3)), replace=False)
    for index in sorted(int(i) for i in chosen):
        kind = kinds[index]
        if kind == "crash":
            phases = list(CrashPhase)
            faults.append(FaultSpec(crash_coordinator_after=phases[int(rng.integers(len(phases)))]))
        elif kind == "fail":
            paths = TREE_PATHS[scenario]
            path = CallPath.parse(paths[int(rng.integers(len(paths)))])
            faults.append(FaultSpec(fail_segment_at=path))
        elif kind == "duplicate":
            role = DUPLICABLE_ROLES[int(rng.integers(len(DUPLICABLE_ROLES)))]
            delay = DUPLICATE_DELAYS[int(rng.integers(len(DUPLICATE_DELAYS)))]
            faults.append(FaultSpec(duplicate=role, duplicate_delay=delay))
        elif kind == "delay-root":
            faults.append(FaultSpec(delay_root=True))
        elif max_byzantine > 0:
            faults.append(FaultSpec(byzantine_signers=int(rng.integers(1, max_byzantine + 1))))
    return faults


def random_scenario(rng: np.random.Generator, sim_config: Optional[SimulationConfig] = None) -> ScenarioConfig:
    """Draw a fault-injected read, write or trade run.

    Byzantine faults stay within the number of signers each chain can lose
    while still reaching its threshold.
    """
    sim_config = sim_config if sim_config is not None else SimulationConfig()
    scenario = sorted(TREE_PATHS)[int(rng.integers(len(TREE_PATHS)))]
    modes = list(AttestationMode)
    orders = list(EngineOrder)
    return ScenarioConfig(
        scenario,
        attestation_mode=modes[int(rng.integers(len(modes)))],
        engine=orders[int(rng.integers(len(orders)))],
        faults=random_faults(rng, scenario, sim_config.signers - sim_config.threshold),
        timeout_periods=int(rng.integers(4, 25)),
    )


def run_checked(config: ScenarioConfig, sim_config: Optional[SimulationConfig] = None) -> list[str]:
    """Run `config` and return every safety or liveness violation."""
    label = f"{config.name}/{config.attestation_mode.value}/{config.engine.value}"
    faults = ", ".join(str(f) for f in config.faults) or "no faults"
    try:
        report = run_scenario(config, sim_config)
    except PostStateError as exc:
        return [f"{label} [{faults}]: {exc}"]
    return [
        f"{label} [{faults}]: {problem}"
        for problem in check_liveness(report, config.timeout_periods)
    ]
