"""Data structures describing one simulated blockchain.

Blocks, headers, receipts and log events follow the shapes used by
Ethereum-like chains, reduced to what the crosschain protocol consumes.
Addresses are 20-byte opaque values and digests are 32-byte SHA-256 outputs.
"""

from __future__ import annotations
from attrs import define, field, validators
from enum import IntEnum
from typing import Any, Optional
import hashlib

ChainId = int
Address = bytes

ADDRESS_SIZE = 20
DIGEST_SIZE = 32
ZERO_DIGEST = bytes(DIGEST_SIZE)


def make_address(label: str, chain: Optional[ChainId] = None) -> Address:
    """Derive a deterministic 20-byte address from a label.

    Args:
        label: Human readable name of the account or contract.
        chain: Chain the contract lives on. Accounts are chain independent and
            leave this as `None`.

    Returns:
        The address as bytes.
    """
    name = label if chain is None else f"{chain}:{label}"
    return hashlib.sha256(name.encode()).digest()[:ADDRESS_SIZE]


def _check_size(size: int):
    def check(instance, attribute, value):
        if len(value) != size:
            raise ValueError(
                f"{attribute.name} must be {size} bytes, got {len(value)}."
            )

    return check


class TxStatus(IntEnum):
    """Outcome of a transaction as recorded in its receipt."""

    FAILURE = 0
    SUCCESS = 1


@define(frozen=True)
class LogEvent:
    """An event log entry.

    Attributes:
        emitter: Address of the contract that emitted the event.
        topic: Event kind discriminator (32 bytes).
        payload: Canonical byte encoding of the event body.
    """

    emitter: Address = field(validator=_check_size(ADDRESS_SIZE))
    topic: bytes = field(validator=_check_size(DIGEST_SIZE))
    payload: bytes


@define(frozen=True)
class Receipt:
    """Result of executing one transaction.

    Attributes:
        tx_digest: Digest identifying the transaction.
        status: Success or failure.
        events: Events emitted by the transaction. Failed transactions carry none.
        error: Reason for a failure. Diagnostic only; not part of the encoding.
    """

    tx_digest: bytes = field(validator=_check_size(DIGEST_SIZE))
    status: TxStatus
    events: tuple[LogEvent, ...] = field(factory=tuple, converter=tuple)
    error: Optional[str] = field(default=None, eq=False)

    @property
    def succeeded(self) -> bool:
        """Return `True` if the transaction succeeded."""
        return self.status == TxStatus.SUCCESS


@define(frozen=True)
class BlockHeader:
    """Header of a finalized block.

    Attributes:
        chain: Chain that produced the block.
        height: Block number; genesis is 0.
        timestamp: Period index in which the block was produced.
        receipt_root: Merkle root over the block's receipts.
        parent_digest: Digest of the previous header (zeros for genesis).
    """

    chain: ChainId
    height: int = field(validator=validators.ge(0))
    timestamp: int = field(validator=validators.ge(0))
    receipt_root: bytes = field(validator=_check_size(DIGEST_SIZE))
    parent_digest: bytes = field(validator=_check_size(DIGEST_SIZE))


@define
class Block:
    """A sealed block: its header plus the receipts it commits to."""

    header: BlockHeader
    receipts: list[Receipt] = field(factory=list)


@define(frozen=True, eq=False)
class Transaction:
    """A call submitted to a chain.

    Attributes:
        sender: Account submitting the transaction.
        to: Address of the contract being called.
        function: Exported function name.
        args: Positional arguments passed to the function. Protocol functions
            take attested events and call trees, business functions take
            unsigned integers and bytes.
    """

    sender: Address
    to: Address
    function: str
    args: tuple[Any, ...] = field(factory=tuple, converter=tuple)


@define(frozen=True)
class TxHandle:
    """Handle returned when a transaction is queued.

    Attributes:
        chain: Chain the transaction was submitted to.
        sequence: Position in the chain's submission order, starting at 0.
        tx_digest: Digest identifying the transaction.
    """

    chain: ChainId
    sequence: int
    tx_digest: bytes


@define(frozen=True)
class ReceiptLocation:
    """Where a receipt was included.

    Attributes:
        chain: Chain that included the receipt.
        height: Height of the including block.
        index: Receipt index within the block.
        timestamp: Period of the including block.
        receipt: The receipt itself.
    """

    chain: ChainId
    height: int
    index: int
    timestamp: int
    receipt: Receipt


@define(frozen=True)
class LocatedEvent:
    """A log event together with its position on its chain."""

    location: ReceiptLocation
    event_index: int

    @property
    def event(self) -> LogEvent:
        """The log event at this position."""
        return self.location.receipt.events[self.event_index]

    @property
    def chain(self) -> ChainId:
        """Chain the event was emitted on."""
        return self.location.chain
