"""Contracts, exported functions and the contexts business logic runs in.

Contracts are Python objects deployed on a `ChainState`. Methods decorated
with `exported` form the contract's dispatch table, keyed by the exported
function name. Business logic methods receive a `CallContext` first, giving
access to lockable storage, the block timestamp and crosschain calls.
"""

from __future__ import annotations
from abc import ABC, abstractmethod
from attrs import define, field
from typing import TYPE_CHECKING, Any, Callable, ClassVar, Optional, Sequence
from gpact_sim.errors import RevertError, SimulationError
from gpact_sim.io.codec import Encoder, Value, make_log_event
from gpact_sim.model.chain import Address, ChainId, LogEvent, make_address
from gpact_sim.model.events import ProtocolEvent
from gpact_sim.model.storage import LockableContractState
from gpact_sim.protocol import lockable
import copy

if TYPE_CHECKING:
    from gpact_sim.protocol.chain_sim import ChainState

PAUSED = b"paused"


def exported(name: str) -> Callable:
    """Mark a method as callable by transactions under `name`."""

    def mark(method: Callable) -> Callable:
        method._exported_as = name  # type: ignore[attr-defined]
        return method

    return mark


def uint_value(data: bytes) -> int:
    """Interpret stored bytes as an unsigned integer; empty reads as 0."""
    return int.from_bytes(data, "big") if data else 0


def uint_bytes(value: int) -> bytes:
    """Store an unsigned integer as 32 big-endian bytes."""
    return value.to_bytes(32, "big")


class Contract:
    """A contract deployed on a simulated chain.

    Subclasses keep all mutable state in `self.state` so that a chain can
    snapshot and restore it around transactions.
    """

    functions: ClassVar[dict[str, str]] = {}

    def __init_subclass__(cls, **kwargs):
        super().__init_subclass__(**kwargs)
        functions: dict[str, str] = {}
        for klass in reversed(cls.__mro__):
            for attr, value in vars(klass).items():
                name = getattr(value, "_exported_as", None)
                if name is not None:
                    functions[name] = attr
        cls.functions = functions

    def __init__(self, label: str, chain: ChainId):
        self.label = label
        self.chain = chain
        self.address = make_address(label, chain)
        self.chain_state: Optional[ChainState] = None
        self.state: Any = None

    def __repr__(self) -> str:
        return f"{type(self).__name__}(label={self.label!r}, chain={self.chain})"

    def has_function(self, name: str) -> bool:
        """Return `True` if `name` is exported."""
        return name in self.functions

    def function(self, name: str) -> Callable:
        """Return the bound method exported as `name`."""
        try:
            return getattr(self, self.functions[name])
        except KeyError:
            raise SimulationError(
                f"Contract {self.label} has no function {name!r}."
            ) from None

    def execute(self, name: str, tx: TxContext, args: Sequence[Any]) -> Any:
        """Run an exported function as the target of a transaction."""
        return self.function(name)(tx, *args)

    def snapshot(self) -> Any:
        """Return a deep copy of the contract state."""
        return copy.deepcopy(self.state)

    def restore(self, snapshot: Any):
        """Replace the contract state by a snapshot."""
        self.state = snapshot

    def digest_state(self, enc: Encoder):
        """Write the contract state into `enc` for state digests."""
        enc.address(self.address)


@define
class TxContext:
    """The transaction currently executing on a chain.

    Attributes:
        chain_state: Chain executing the transaction.
        sender: Account that submitted the transaction.
        timestamp: Timestamp of the block being sealed.
        events: Log events emitted so far.
    """

    chain_state: ChainState
    sender: Address
    timestamp: int
    events: list[LogEvent] = field(factory=list)

    @property
    def chain(self) -> ChainId:
        """Id of the executing chain."""
        return self.chain_state.chain

    def emit(self, emitter: Address, event: ProtocolEvent):
        """Emit a protocol event from the contract at `emitter`."""
        self.events.append(make_log_event(emitter, event))


class CallContext(ABC):
    """What business logic sees of the chain it runs on."""

    chain: ChainId
    caller: Address

    @property
    @abstractmethod
    def block_timestamp(self) -> int:
        """Timestamp of the block the call executes in."""

    @abstractmethod
    def contract(self, address: Address) -> BusinessContract:
        """Look up a business contract on the executing chain."""

    @abstractmethod
    def read(self, contract: BusinessContract, key: bytes) -> bytes:
        """Read a storage slot of `contract`."""

    @abstractmethod
    def write(self, contract: BusinessContract, key: bytes, value: bytes):
        """Write a storage slot of `contract`."""

    @abstractmethod
    def cross_call(
        self, chain: ChainId, address: Address, function: str, *args: Value
    ) -> Optional[Value]:
        """Call a function on another chain."""

    def call(self, address: Address, function: str, *args: Value) -> Optional[Value]:
        """Call a function of another contract on the same chain."""
        return self.contract(address).function(function)(self, *args)

    def read_uint(self, contract: BusinessContract, key: bytes) -> int:
        return uint_value(self.read(contract, key))

    def write_uint(self, contract: BusinessContract, key: bytes, value: int):
        self.write(contract, key, uint_bytes(value))


class PlainCallContext(CallContext):
    """A normal single-chain transaction.

    Writes go straight to committed storage. Crosschain calls are only allowed
    when they target the executing chain, where they become local calls.
    """

    def __init__(self, tx: TxContext):
        self.tx = tx
        self.chain = tx.chain
        self.caller = tx.sender

    @property
    def block_timestamp(self) -> int:
        return self.tx.timestamp

    def contract(self, address: Address) -> BusinessContract:
        return business_contract(self.tx.chain_state, address)

    def read(self, contract: BusinessContract, key: bytes) -> bytes:
        return lockable.read(contract.state, key)

    def write(self, contract: BusinessContract, key: bytes, value: bytes):
        lockable.write(contract.state, key, value)

    def cross_call(
        self, chain: ChainId, address: Address, function: str, *args: Value
    ) -> Optional[Value]:
        if chain != self.chain:
            raise RevertError(
                f"Call to chain {chain} outside of a crosschain transaction."
            )
        return self.call(address, function, *args)


def business_contract(chain_state: ChainState, address: Address) -> BusinessContract:
    """Return the business contract at `address`, reverting if there is none."""
    contract = chain_state.contracts.get(address)
    if not isinstance(contract, BusinessContract):
        raise RevertError(
            f"No business contract at {address.hex()} on chain {chain_state.chain}."
        )
    return contract


class BusinessContract(Contract):
    """Application contract whose storage is lockable.

    Every business contract can be paused by a plain transaction. Functions
    that call `require_active` revert while paused.
    """

    state: LockableContractState

    def __init__(self, label: str, chain: ChainId):
        super().__init__(label, chain)
        self.state = LockableContractState(self.address)

    def execute(self, name: str, tx: TxContext, args: Sequence[Any]) -> Any:
        return self.function(name)(PlainCallContext(tx), *args)

    def require_active(self, ctx: CallContext):
        """Revert if the contract is paused."""
        if ctx.read_uint(self, PAUSED):
            raise RevertError(f"{self.label} is paused.")

    @exported("setPaused")
    def set_paused(self, ctx: CallContext, paused: int):
        ctx.write_uint(self, PAUSED, paused)

    def value(self, key: bytes) -> int:
        """Committed value of a slot, bypassing the lock. For inspection only."""
        return uint_value(self.state.normal.get(key, b""))

    def digest_state(self, enc: Encoder):
        super().digest_state(enc)
        for store in (self.state.normal, self.state.provisional):
            enc.sequence(sorted(store.items()), lambda e, kv: e.bytes(kv[0]).bytes(kv[1]))
        lock = self.state.lock
        enc.u8(lock is not None)
        if lock is not None:
            enc.u64(lock.root_chain).u256(lock.tx_id)
