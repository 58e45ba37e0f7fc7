"""The Crosschain Control Contract.

Deployed once per chain, it registers crosschain transactions (`start`),
executes nodes of their call trees (`segment`, `root`) while checking every
crosschain call against the committed tree, and releases locks once the root
decision is known (`signalling`).
"""

from __future__ import annotations
from attrs import define, field
from typing import Optional, Sequence, Type, TypeVar
from gpact_sim.errors import (
    ApplicationError,
    AttestationError,
    CrossCallMismatchError,
    DuplicateTransactionError,
    MissingChildSegmentError,
    NoLocksHeldError,
    NotCoordinatorError,
    ProtocolError,
    ReplayError,
    RevertError,
    RootChainMismatchError,
    TransactionTimedOutError,
    UnresolvablePathError,
)
from gpact_sim.io.codec import (
    Encoder,
    Value,
    decode_args,
    decode_return,
    encode_args,
    encode_return,
)
from gpact_sim.model.attestation import AttestedEvent
from gpact_sim.model.calltree import CallExecutionTree, CallPath, FunctionCallSpec
from gpact_sim.model.chain import Address, ChainId
from gpact_sim.model.events import (
    CrosschainTxRecord,
    Decision,
    ProtocolEvent,
    Role,
    RootDecision,
    RootEvent,
    SegmentEvent,
    Outcome,
    SignallingEvent,
    StartEvent,
)
from gpact_sim.protocol import lockable
from gpact_sim.protocol.contracts import (
    BusinessContract,
    CallContext,
    Contract,
    TxContext,
    business_contract,
    exported,
)
from gpact_sim.protocol.lockable import CrosschainContext
import logging

logger = logging.getLogger(__name__)

E = TypeVar("E", StartEvent, SegmentEvent, RootEvent, SignallingEvent)

ROOT_PATH = CallPath.root()
MAX_TX_ID = 1 << 256


class CrosschainCall(CallContext):
    """Context of a node executing inside a segment or root transaction.

    Crosschain calls made by the business logic are checked in order against
    the node's children in the committed tree and answered with the children's
    attested return values.
    """

    def __init__(
        self,
        tx: TxContext,
        node: CallExecutionTree,
        child_returns: Sequence[bytes],
        crosschain: CrosschainContext,
    ):
        self.tx = tx
        self.chain = tx.chain
        self.caller = tx.sender
        self.node = node
        self.child_returns = list(child_returns)
        self.cursor = 0
        self.crosschain = crosschain

    @property
    def block_timestamp(self) -> int:
        return self.tx.timestamp

    def contract(self, address: Address) -> BusinessContract:
        return business_contract(self.tx.chain_state, address)

    def read(self, contract: BusinessContract, key: bytes) -> bytes:
        return lockable.read_in_crosschain(contract.state, key, self.crosschain)

    def write(self, contract: BusinessContract, key: bytes, value: bytes):
        lockable.write(contract.state, key, value, self.crosschain)

    def cross_call(
        self, chain: ChainId, address: Address, function: str, *args: Value
    ) -> Optional[Value]:
        actual = FunctionCallSpec(chain, address, function, encode_args(args))
        return decode_return(cross_call(self, actual))

    def finish(self):
        """Check that every expected crosschain call was made."""
        if self.cursor < len(self.node.children):
            raise CrossCallMismatchError(
                f"{self.cursor} of {len(self.node.children)} expected crosschain "
                "calls were made."
            )


def cross_call(context: CrosschainCall, actual: FunctionCallSpec) -> bytes:
    """Match a crosschain call against the next expected child.

    Returns:
        The attested return value of the matching child.

    Raises:
        CrossCallMismatchError: If the call differs from the expected one or
            more calls are made than the tree declares.
    """
    children = context.node.children
    if context.cursor >= len(children):
        raise CrossCallMismatchError(
            f"Unexpected crosschain call to {actual.function!r}: all "
            f"{len(children)} expected calls were already made."
        )
    expected = children[context.cursor].node
    for name in ("chain", "contract", "function", "expected_args"):
        if getattr(actual, name) != getattr(expected, name):
            label = "args" if name == "expected_args" else name
            raise CrossCallMismatchError(
                f"Crosschain call {context.cursor + 1} differs from the call tree "
                f"in its {label}."
            )
    value = context.child_returns[context.cursor]
    context.cursor += 1
    return value


@define
class ControlState:
    """Transaction records keyed by `(root_chain, tx_id)`."""

    records: dict[tuple[ChainId, int], CrosschainTxRecord] = field(factory=dict)


class CrosschainControl(Contract):
    """Crosschain control contract of one chain."""

    state: ControlState

    def __init__(self, chain: ChainId, coordinator_only_segments: bool = True):
        super().__init__("crosschain-control", chain)
        self.coordinator_only_segments = coordinator_only_segments
        self.state = ControlState()

    def record(self, root_chain: ChainId, tx_id: int) -> Optional[CrosschainTxRecord]:
        """Return the record of a transaction, if this chain has one."""
        return self.state.records.get((root_chain, tx_id))

    def _registrar(self, tx: TxContext):
        return tx.chain_state.registrar

    def _verify(self, tx: TxContext, att: AttestedEvent, kind: Type[E]) -> E:
        event: ProtocolEvent = self._registrar(tx).verify_attested_event(att)
        if not isinstance(event, kind):
            raise AttestationError(
                f"Expected a {kind.kind.value} Event, got a {event.kind.value} Event."
            )
        return event

    @exported("start")
    def start(self, tx: TxContext, tx_id: int, timeout_periods: int, tree: CallExecutionTree):
        """Register a crosschain transaction rooted on this chain."""
        if not 0 <= tx_id < MAX_TX_ID:
            raise ProtocolError(f"Transaction id {tx_id} is not a 256-bit value.")
        if timeout_periods < 0:
            raise ProtocolError("The timeout cannot be negative.")
        if (self.chain, tx_id) in self.state.records:
            raise DuplicateTransactionError(f"Duplicate txId {tx_id:#x}.")
        if tree.node.chain != self.chain:
            raise RootChainMismatchError(
                f"Call tree is rooted on chain {tree.node.chain}, not {self.chain}."
            )
        registrar = self._registrar(tx)
        for chain in sorted(tree.chains):
            if not registrar.is_registered(chain):
                raise ProtocolError(
                    f"Malformed tree: chain {chain} has no registered control contract."
                )
        timeout = tx.timestamp + timeout_periods
        record = CrosschainTxRecord(
            tx_id, self.chain, timeout=timeout, coordinator=tx.sender
        )
        record.consume(Role.START, ROOT_PATH)
        self.state.records[(self.chain, tx_id)] = record
        tx.emit(self.address, StartEvent(tx_id, self.chain, tx.sender, timeout, tree))
        logger.info(
            "Chain %d: started %#x, timeout at period %d.", self.chain, tx_id, timeout
        )

    def _child_events(
        self,
        tx: TxContext,
        start: StartEvent,
        path: CallPath,
        subtree: CallExecutionTree,
        child_atts: Sequence[AttestedEvent],
    ) -> list[SegmentEvent]:
        expected = {path.child(i): child for i, child in enumerate(subtree.children, 1)}
        found: dict[CallPath, SegmentEvent] = {}
        for att in child_atts:
            event = self._verify(tx, att, SegmentEvent)
            if (event.tx_id, event.root_chain) != (start.tx_id, start.root_chain):
                raise ProtocolError("Child Segment Event belongs to another transaction.")
            if event.path not in expected:
                raise ProtocolError(f"Unexpected child Segment Event for path {event.path}.")
            if event.path in found:
                raise ProtocolError(f"Duplicate child Segment Event for path {event.path}.")
            if att.source_chain != expected[event.path].node.chain:
                raise ProtocolError(
                    f"Segment Event for path {event.path} comes from the wrong chain."
                )
            found[event.path] = event
        missing = [str(p) for p in expected if p not in found]
        if missing:
            raise MissingChildSegmentError(
                f"Missing child Segment Event for path {', '.join(missing)}."
            )
        return [found[p] for p in expected]

    def _run(
        self,
        tx: TxContext,
        subtree: CallExecutionTree,
        children: Sequence[SegmentEvent],
        start: StartEvent,
    ) -> tuple[bool, bytes, list[Address]]:
        """Execute a node's function; roll its writes back on application errors."""
        snapshot = tx.chain_state.snapshot()
        locked: list[Address] = []

        def on_lock(address: Address):
            if address not in locked:
                locked.append(address)

        crosschain = CrosschainContext(start.root_chain, start.tx_id, on_lock)
        ctx = CrosschainCall(tx, subtree, [c.return_value for c in children], crosschain)
        node = subtree.node
        try:
            contract = business_contract(tx.chain_state, node.contract)
            if not contract.has_function(node.function):
                raise RevertError(f"{contract.label} has no function {node.function!r}.")
            try:
                args = decode_args(node.expected_args)
            except ValueError as exc:
                raise RevertError(f"Malformed arguments: {exc}") from None
            value = contract.function(node.function)(ctx, *args)
            ctx.finish()
        except ApplicationError as exc:
            tx.chain_state.restore(snapshot)
            logger.debug("Chain %d: %s reverted: %s", self.chain, node.function, exc)
            return False, b"", []
        return True, encode_return(value), locked

    @exported("segment")
    def segment(
        self,
        tx: TxContext,
        start_att: AttestedEvent,
        path: CallPath,
        child_atts: Sequence[AttestedEvent] = (),
    ):
        """Execute the non-root node at `path`."""
        start = self._verify(tx, start_att, StartEvent)
        if path.is_root:
            raise UnresolvablePathError("The root node is executed by the root transaction.")
        subtree = start.tree.resolve(path)
        if subtree.node.chain != self.chain:
            raise UnresolvablePathError(
                f"Path {path} resolves to chain {subtree.node.chain}, not {self.chain}."
            )
        key = (start.root_chain, start.tx_id)
        record = self.state.records.get(key)
        if record is not None and record.root_decision != RootDecision.PENDING:
            raise ProtocolError(f"Transaction {start.tx_id:#x} is already finalised here.")
        if tx.timestamp > start.timeout:
            raise TransactionTimedOutError(f"Transaction {start.tx_id:#x} timed out.")
        if self.coordinator_only_segments and tx.sender != start.coordinator:
            raise NotCoordinatorError("Only the coordinator may submit segments.")
        if record is not None and record.consumed(Role.SEGMENT, path):
            raise ReplayError(f"Segment {path} of {start.tx_id:#x} already executed.")
        children = self._child_events(tx, start, path, subtree, child_atts)

        if all(child.succeeded for child in children):
            ok, value, locked = self._run(tx, subtree, children, start)
        else:
            ok, value, locked = False, b"", []

        record = self.state.records.setdefault(
            key, CrosschainTxRecord(start.tx_id, start.root_chain)
        )
        record.timeout, record.coordinator = start.timeout, start.coordinator
        record.consume(Role.SEGMENT, path)
        record.locked_here.extend(a for a in locked if a not in record.locked_here)
        outcome = Outcome.SUCCESS if ok else Outcome.ERROR
        tx.emit(
            self.address,
            SegmentEvent(start.tx_id, start.root_chain, path, outcome, value, locked),
        )
        logger.debug(
            "Chain %d: segment %s of %#x -> %s, locked %d.",
            self.chain,
            path,
            start.tx_id,
            outcome.name.lower(),
            len(locked),
        )

    def _release(self, tx: TxContext, record: CrosschainTxRecord, decision: Decision) -> list[Address]:
        unlocked = list(record.locked_here)
        for address in unlocked:
            contract = business_contract(tx.chain_state, address)
            lockable.signal(contract.state, decision, record.tx_id, record.root_chain)
        record.locked_here = []
        return unlocked

    @exported("root")
    def root(
        self, tx: TxContext, start_att: AttestedEvent, child_atts: Sequence[AttestedEvent] = ()
    ):
        """Execute the entry-point function and decide commit or abort."""
        start = self._verify(tx, start_att, StartEvent)
        if start.root_chain != self.chain:
            raise RootChainMismatchError(
                f"Transaction {start.tx_id:#x} is rooted on chain {start.root_chain}."
            )
        key = (self.chain, start.tx_id)
        record = self.state.records.get(key)
        if record is None:
            raise ProtocolError(f"Transaction {start.tx_id:#x} was not started here.")
        if record.consumed(Role.ROOT, ROOT_PATH) or record.root_decision != RootDecision.PENDING:
            raise ReplayError(f"Root of {start.tx_id:#x} already executed.")

        locked: list[Address] = []
        if tx.timestamp > start.timeout:
            decision = Decision.ABORT
            logger.info("Chain %d: %#x timed out, aborting.", self.chain, start.tx_id)
        else:
            if tx.sender != start.coordinator:
                raise NotCoordinatorError("Only the coordinator may call root before the timeout.")
            children = self._child_events(tx, start, ROOT_PATH, start.tree, child_atts)
            if not all(child.succeeded for child in children):
                decision = Decision.ABORT
            else:
                ok, _, locked = self._run(tx, start.tree, children, start)
                decision = Decision.COMMIT if ok else Decision.ABORT

        record = self.state.records[key]
        record.locked_here.extend(a for a in locked if a not in record.locked_here)
        self._release(tx, record, decision)
        record.decide(decision)
        record.consume(Role.ROOT, ROOT_PATH)
        tx.emit(self.address, RootEvent(start.tx_id, self.chain, decision))
        logger.info(
            "Chain %d: root of %#x decided %s.", self.chain, start.tx_id, decision.name.lower()
        )

    @exported("signalling")
    def signalling(
        self, tx: TxContext, root_att: AttestedEvent, segment_atts: Sequence[AttestedEvent] = ()
    ):
        """Commit or discard this chain's provisional writes for a transaction."""
        root = self._verify(tx, root_att, RootEvent)
        record = self.state.records.get((root.root_chain, root.tx_id))
        if record is not None and record.consumed(Role.SIGNALLING, ROOT_PATH):
            raise ReplayError(f"Signalling of {root.tx_id:#x} already executed.")
        if record is None or not record.locked_here:
            raise NoLocksHeldError(f"No locks held for {root.tx_id:#x} on chain {self.chain}.")
        covered: set[Address] = set()
        for att in segment_atts:
            event = self._verify(tx, att, SegmentEvent)
            if (event.tx_id, event.root_chain) != (root.tx_id, root.root_chain):
                raise ProtocolError("Segment Event belongs to another transaction.")
            if att.source_chain != self.chain:
                raise ProtocolError("Segment Event was emitted on another chain.")
            if not event.locked_contracts:
                raise ProtocolError(f"Segment {event.path} holds no locks.")
            covered.update(event.locked_contracts)
        if covered != set(record.locked_here):
            raise ProtocolError("Segment Events do not account for the locked contracts.")
        unlocked = self._release(tx, record, root.decision)
        record.decide(root.decision)
        record.consume(Role.SIGNALLING, ROOT_PATH)
        tx.emit(self.address, SignallingEvent(root.tx_id, root.root_chain, unlocked))
        logger.info(
            "Chain %d: signalled %s of %#x, unlocked %d.",
            self.chain,
            root.decision.name.lower(),
            root.tx_id,
            len(unlocked),
        )

    def digest_state(self, enc: Encoder):
        super().digest_state(enc)
        for key in sorted(self.state.records):
            record = self.state.records[key]
            enc.u64(record.root_chain).u256(record.tx_id)
            enc.text(record.root_decision.value)
            guard = sorted((role.value, path.indices) for role, path in record.phase_guard)
            enc.sequence(guard, lambda e, entry: e.text(entry[0]).sequence(entry[1], Encoder.u32))
            enc.sequence(record.locked_here, Encoder.address)
