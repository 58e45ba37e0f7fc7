"""Protocol events emitted by crosschain control contracts.

Each event kind has a fixed topic; the event body travels as the canonical
payload of a `LogEvent` (see `gpact_sim.io.codec`).
"""

from __future__ import annotations
from attrs import define, field
from enum import Enum, IntEnum
from typing import ClassVar, Optional, Union
from gpact_sim.model.calltree import CallExecutionTree, CallPath
from gpact_sim.model.chain import Address, ChainId
import hashlib


class EventKind(Enum):
    """Kinds of protocol events."""

    START = "Start"
    SEGMENT = "Segment"
    ROOT = "Root"
    SIGNALLING = "Signalling"

    @property
    def topic(self) -> bytes:
        """32-byte topic identifying events of this kind."""
        return hashlib.sha256(f"gpact.{self.value}".encode()).digest()

    @classmethod
    def from_topic(cls, topic: bytes) -> Optional[EventKind]:
        """Return the kind with the given topic, or `None` for foreign topics."""
        for kind in cls:
            if kind.topic == topic:
                return kind
        return None


class Outcome(IntEnum):
    """Outcome of a segment execution."""

    ERROR = 0
    SUCCESS = 1


class Decision(IntEnum):
    """Decision recorded in a Root Event."""

    ABORT = 0
    COMMIT = 1


class Role(Enum):
    """Protocol transaction roles."""

    START = "start"
    SEGMENT = "segment"
    ROOT = "root"
    SIGNALLING = "signalling"
    RELAY = "relay"


@define(frozen=True)
class StartEvent:
    """Registers a crosschain transaction on its root chain.

    Attributes:
        tx_id: 256-bit transaction identifier.
        root_chain: Chain hosting the entry-point function.
        coordinator: Account that submits the protocol transactions.
        timeout: Absolute period after which the transaction may be aborted.
        tree: The committed call execution tree.
    """

    kind: ClassVar[EventKind] = EventKind.START

    tx_id: int
    root_chain: ChainId
    coordinator: Address
    timeout: int
    tree: CallExecutionTree


@define(frozen=True)
class SegmentEvent:
    """Result of executing one non-root node of the call tree.

    Attributes:
        tx_id: Transaction identifier.
        root_chain: Root chain of the transaction.
        path: Path of the executed node.
        outcome: Success or error.
        return_value: Encoded return value. Empty on error.
        locked_contracts: Contracts locked by this segment. Empty on error.
    """

    kind: ClassVar[EventKind] = EventKind.SEGMENT

    tx_id: int
    root_chain: ChainId
    path: CallPath
    outcome: Outcome
    return_value: bytes = b""
    locked_contracts: tuple[Address, ...] = field(factory=tuple, converter=tuple)

    def __attrs_post_init__(self):
        if self.outcome == Outcome.ERROR and self.locked_contracts:
            raise ValueError("A failed segment cannot hold locks.")

    @property
    def succeeded(self) -> bool:
        """Return `True` if the segment succeeded."""
        return self.outcome == Outcome.SUCCESS


@define(frozen=True)
class RootEvent:
    """Commit or abort decision of a crosschain transaction."""

    kind: ClassVar[EventKind] = EventKind.ROOT

    tx_id: int
    root_chain: ChainId
    decision: Decision


@define(frozen=True)
class SignallingEvent:
    """Contracts unlocked on one chain after the root decision."""

    kind: ClassVar[EventKind] = EventKind.SIGNALLING

    tx_id: int
    root_chain: ChainId
    unlocked_contracts: tuple[Address, ...] = field(factory=tuple, converter=tuple)


ProtocolEvent = Union[StartEvent, SegmentEvent, RootEvent, SignallingEvent]


class RootDecision(Enum):
    """Decision state held in a control contract's transaction record."""

    PENDING = "pending"
    COMMIT = "commit"
    ABORT = "abort"


@define
class CrosschainTxRecord:
    """Per-transaction bookkeeping of a control contract.

    Attributes:
        tx_id: Transaction identifier.
        root_chain: Root chain of the transaction.
        phase_guard: Consumed `(role, path)` entries.
        locked_here: Contracts on this chain locked by the transaction.
        root_decision: Decision known on this chain.
        timeout: Timeout from the Start Event, once seen.
        coordinator: Coordinator from the Start Event, once seen.
    """

    tx_id: int
    root_chain: ChainId
    phase_guard: set[tuple[Role, CallPath]] = field(factory=set)
    locked_here: list[Address] = field(factory=list)
    root_decision: RootDecision = RootDecision.PENDING
    timeout: Optional[int] = None
    coordinator: Optional[Address] = None

    def consumed(self, role: Role, path: CallPath) -> bool:
        """Return `True` if `(role, path)` was already executed."""
        return (role, path) in self.phase_guard

    def consume(self, role: Role, path: CallPath):
        """Mark `(role, path)` as executed."""
        self.phase_guard.add((role, path))

    def decide(self, decision: Decision):
        """Record the root decision. The decision can only be made once."""
        if self.root_decision != RootDecision.PENDING:
            raise ValueError("The root decision was already recorded.")
        self.root_decision = (
            RootDecision.COMMIT if decision == Decision.COMMIT else RootDecision.ABORT
        )
