"""Lockable storage operations.

A contract's storage is locked as a whole by the first crosschain write. Until
the lock is released by a commit or abort signal, writes of the locking
transaction are buffered in provisional storage and every other access fails.
"""

from __future__ import annotations
from attrs import define, field
from typing import Callable, Optional
from gpact_sim.errors import ContractLockedError
from gpact_sim.model.chain import Address, ChainId
from gpact_sim.model.events import Decision
from gpact_sim.model.storage import LockableContractState, LockHolder


@define
class CrosschainContext:
    """The crosschain transaction on whose behalf a segment or root executes.

    Attributes:
        root_chain: Root chain of the transaction.
        tx_id: Transaction id.
        on_lock: Called with the contract address whenever a write locks a
            contract or writes to one it already holds.
    """

    root_chain: ChainId
    tx_id: int
    on_lock: Optional[Callable[[Address], None]] = field(default=None, eq=False)

    @property
    def holder(self) -> LockHolder:
        """Lock holder identifying this transaction."""
        return LockHolder(self.root_chain, self.tx_id)


def read(state: LockableContractState, key: bytes) -> bytes:
    """Read committed storage; fails while the contract is locked."""
    if state.is_locked:
        raise ContractLockedError(f"Contract {state.address.hex()} is locked.")
    return state.normal.get(key, b"")


def read_in_crosschain(
    state: LockableContractState, key: bytes, context: CrosschainContext
) -> bytes:
    """Read storage from within a crosschain execution, seeing its own writes."""
    if state.lock is not None and state.lock != context.holder:
        raise ContractLockedError(
            f"Contract {state.address.hex()} is locked by another transaction."
        )
    if state.lock is not None and key in state.provisional:
        return state.provisional[key]
    return state.normal.get(key, b"")


def write(
    state: LockableContractState,
    key: bytes,
    value: bytes,
    context: Optional[CrosschainContext] = None,
):
    """Write storage.

    Without a crosschain context the write goes to committed storage. With one,
    the contract is locked for the context's transaction and the value is
    buffered provisionally.

    Raises:
        ContractLockedError: If the contract is locked by any transaction for a
            plain write, or by a different transaction for a crosschain write.
    """
    if context is None:
        if state.is_locked:
            raise ContractLockedError(f"Contract {state.address.hex()} is locked.")
        state.normal[key] = value
        return
    if state.lock is not None and state.lock != context.holder:
        raise ContractLockedError(
            f"Contract {state.address.hex()} is locked by another transaction."
        )
    state.lock = context.holder
    if context.on_lock is not None:
        context.on_lock(state.address)
    state.provisional[key] = value


def signal(state: LockableContractState, decision: Decision, tx_id: int, root_chain: ChainId):
    """Commit or discard the provisional writes of a transaction and unlock.

    Raises:
        ContractLockedError: If the contract is not locked by this transaction.
    """
    if state.lock is None:
        raise ContractLockedError(f"Contract {state.address.hex()} is not locked.")
    if state.lock != LockHolder(root_chain, tx_id):
        raise ContractLockedError(
            f"Contract {state.address.hex()} is locked by another transaction."
        )
    if decision == Decision.COMMIT:
        state.normal.update(state.provisional)
    state.provisional.clear()
    state.lock = None
