"""Configuration objects for simulations and scenario runs.

These are plain `attrs` classes. `gpact_sim.io.config` builds them from YAML
files and from the compact fault strings accepted on the command line.
"""

from __future__ import annotations
from attrs import define, field, validators
from enum import Enum
from typing import Any, Optional
from gpact_sim.errors import ConfigError
from gpact_sim.model.attestation import AttestationMode
from gpact_sim.model.calltree import CallPath
from gpact_sim.model.chain import ChainId
from gpact_sim.model.events import Role


class SignatureSchemeName(Enum):
    """Available signature schemes."""

    KEYED_TAG = "keyed-tag"
    ED25519 = "ed25519"


class EngineOrder(Enum):
    """Segment execution order of the coordinator."""

    SERIAL = "serial"
    PARALLEL = "parallel"


class CrashPhase(Enum):
    """Point after which a crashed coordinator stops submitting transactions.

    `SEGMENT` crashes after the first segment step, `SEGMENTS` after the last.
    """

    BEFORE_START = "before-start"
    START = "start"
    SEGMENT = "segment"
    SEGMENTS = "segments"
    ROOT = "root"


SCENARIO_NAMES = ("read", "write", "trade", "livelock", "timestamped")
DUPLICABLE_ROLES = (Role.START, Role.SEGMENT, Role.ROOT, Role.SIGNALLING)


def _positive(instance, attribute, value):
    if value < 1:
        raise ConfigError(f"{attribute.name} must be at least 1, got {value}.")


@define(frozen=True)
class ChainConfig:
    """One simulated chain.

    Attributes:
        id: Chain id.
        name: Human readable name.
        signers: Number of signers attesting this chain.
        threshold: Signatures required to accept an attestation.
    """

    id: ChainId
    name: str = ""
    signers: int = field(default=3, validator=_positive)
    threshold: int = field(default=2, validator=_positive)

    def __attrs_post_init__(self):
        if self.threshold > self.signers:
            raise ConfigError(
                f"Chain {self.id}: threshold {self.threshold} exceeds "
                f"{self.signers} signers."
            )


@define
class SimulationConfig:
    """Chain-level settings shared by every run.

    Attributes:
        chains: Per-chain overrides of signer counts, keyed by id. Chains not
            listed use `signers` and `threshold`.
        signature_scheme: Scheme used by signers and registrars.
        seed: Seed for keys, transaction ids and randomized runs.
        coordinator_only_segments: Restrict pre-timeout segments to the
            coordinator.
        signers: Default signer count per chain.
        threshold: Default threshold per chain.
    """

    chains: list[ChainConfig] = field(factory=list)
    signature_scheme: SignatureSchemeName = SignatureSchemeName.KEYED_TAG
    seed: int = 0
    coordinator_only_segments: bool = True
    signers: int = field(default=3, validator=_positive)
    threshold: int = field(default=2, validator=_positive)

    def __attrs_post_init__(self):
        ids = [chain.id for chain in self.chains]
        if len(set(ids)) != len(ids):
            raise ConfigError(f"Duplicate chain ids in {ids}.")
        if self.threshold > self.signers:
            raise ConfigError(
                f"threshold {self.threshold} exceeds {self.signers} signers."
            )

    def chain_config(self, chain: ChainId, name: str = "") -> ChainConfig:
        """Return the configuration of `chain`, falling back to the defaults."""
        for config in self.chains:
            if config.id == chain:
                return config
        return ChainConfig(
            id=chain, name=name, signers=self.signers, threshold=self.threshold
        )


@define(frozen=True)
class FaultSpec:
    """A single injected fault. Exactly one field is set.

    Attributes:
        crash_coordinator_after: Coordinator crashes after this phase.
        fail_segment_at: The business function at this path reverts.
        byzantine_signers: Number of faulty signers on every chain.
        duplicate: Role whose transaction is submitted a second time.
        duplicate_delay: Periods between the original and the duplicate.
        delay_root: Coordinator holds the root transaction past the timeout.
    """

    crash_coordinator_after: Optional[CrashPhase] = None
    fail_segment_at: Optional[CallPath] = None
    byzantine_signers: int = field(default=0, validator=validators.ge(0))
    duplicate: Optional[Role] = None
    duplicate_delay: int = field(default=0, validator=validators.ge(0))
    delay_root: bool = False

    def __attrs_post_init__(self):
        kinds = [
            self.crash_coordinator_after is not None,
            self.fail_segment_at is not None,
            self.byzantine_signers > 0,
            self.duplicate is not None,
            self.delay_root,
        ]
        if sum(kinds) != 1:
            raise ConfigError("A fault spec must describe exactly one fault.")
        if self.duplicate is not None and self.duplicate not in DUPLICABLE_ROLES:
            raise ConfigError(f"Cannot duplicate {self.duplicate.value} transactions.")

    def __str__(self) -> str:
        if self.crash_coordinator_after is not None:
            return f"crash:{self.crash_coordinator_after.value}"
        if self.fail_segment_at is not None:
            return f"fail:{self.fail_segment_at}"
        if self.byzantine_signers:
            return f"byzantine:{self.byzantine_signers}"
        if self.duplicate is not None:
            return f"duplicate:{self.duplicate.value}@{self.duplicate_delay}"
        return "delay-root"


@define
class ScenarioConfig:
    """A single scenario run.

    Attributes:
        name: One of `read`, `write`, `trade`, `livelock`, `timestamped`.
        attestation_mode: Direct signing or block header transfer.
        engine: Serial or parallel segment execution.
        faults: Injected faults.
        timeout_periods: Periods between Start and the transaction timeout.
        retries: Rounds played by the livelock scenario.
        conflicts: Whether same-depth segments have read-after-write
            conflicts. The parallel engine refuses such plans.
        agents: Run the timeout agent when the coordinator crashes.
        params: Scenario parameters such as trade prices and balances.
    """

    name: str = field(validator=validators.in_(SCENARIO_NAMES))
    attestation_mode: AttestationMode = AttestationMode.DIRECT
    engine: EngineOrder = EngineOrder.SERIAL
    faults: list[FaultSpec] = field(factory=list)
    timeout_periods: int = field(default=20, validator=_positive)
    retries: int = field(default=1, validator=_positive)
    conflicts: bool = False
    agents: bool = True
    params: dict[str, Any] = field(factory=dict)

    def __attrs_post_init__(self):
        crashes = [f for f in self.faults if f.crash_coordinator_after is not None]
        if len(crashes) > 1:
            raise ConfigError("At most one coordinator crash can be injected.")
        if sum(1 for f in self.faults if f.byzantine_signers) > 1:
            raise ConfigError("At most one byzantine signer count can be given.")

    @property
    def crash_phase(self) -> Optional[CrashPhase]:
        """Phase after which the coordinator crashes, if any."""
        for fault in self.faults:
            if fault.crash_coordinator_after is not None:
                return fault.crash_coordinator_after
        return None

    @property
    def failing_paths(self) -> list[CallPath]:
        """Paths whose business functions are made to revert."""
        return [f.fail_segment_at for f in self.faults if f.fail_segment_at is not None]

    @property
    def byzantine_signers(self) -> int:
        """Number of faulty signers per chain."""
        return max((f.byzantine_signers for f in self.faults), default=0)

    @property
    def duplicates(self) -> dict[Role, int]:
        """Duplicated roles mapped to their delay in periods."""
        return {f.duplicate: f.duplicate_delay for f in self.faults if f.duplicate}

    @property
    def delay_root(self) -> bool:
        """Whether the root transaction is held back past the timeout."""
        return any(f.delay_root for f in self.faults)
