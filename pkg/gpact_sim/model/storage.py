"""State of a contract using lockable storage."""

from __future__ import annotations
from attrs import define, field
from typing import Optional
from gpact_sim.model.chain import Address, ChainId


@define(frozen=True)
class LockHolder:
    """The crosschain transaction holding a contract lock."""

    root_chain: ChainId
    tx_id: int


@define
class LockableContractState:
    """Key-value storage with a contract-wide crosschain lock.

    Attributes:
        address: Address of the owning contract.
        normal: Committed storage.
        provisional: Writes buffered under the lock.
        lock: Holder of the lock, or `None` when unlocked.
    """

    address: Address
    normal: dict[bytes, bytes] = field(factory=dict)
    provisional: dict[bytes, bytes] = field(factory=dict)
    lock: Optional[LockHolder] = None

    @property
    def is_locked(self) -> bool:
        """Return `True` if a crosschain transaction holds the lock."""
        return self.lock is not None

    def copy(self) -> LockableContractState:
        """Return an independent copy of the storage."""
        return LockableContractState(
            address=self.address,
            normal=dict(self.normal),
            provisional=dict(self.provisional),
            lock=self.lock,
        )
