"""Lockstep simulation of several Ethereum-like chains.

Every call to `Simulation.advance_period` seals exactly one block on every
chain, stamped with the current period, and then moves the shared clock
forward. Transactions queued on a chain execute in submission order when its
next block is sealed. A transaction that raises a `GpactError` leaves no trace
but a failure receipt.
"""

from __future__ import annotations
from attrs import define, field
from typing import Any, Iterator, Optional, Sequence
from gpact_sim.errors import GpactError, SimulationError
from gpact_sim.io.codec import Encoder, decode_log_event, digest, header_digest, transaction_digest
from gpact_sim.model.attestation import AttestationMode, MerkleProof, SignerSet
from gpact_sim.model.chain import (
    ZERO_DIGEST,
    Address,
    Block,
    BlockHeader,
    ChainId,
    LocatedEvent,
    Receipt,
    ReceiptLocation,
    Transaction,
    TxHandle,
    TxStatus,
)
from gpact_sim.model.config import ChainConfig, SimulationConfig
from gpact_sim.model.events import EventKind, ProtocolEvent
from gpact_sim.protocol.contracts import BusinessContract, Contract, TxContext
from gpact_sim.protocol.control import CrosschainControl
from gpact_sim.protocol.merkle import EMPTY_ROOT, build_proof, receipt_leaf, receipts_root
from gpact_sim.protocol.registrar import Registrar
from gpact_sim.protocol.signing import Signer, make_scheme, make_signers
import logging

logger = logging.getLogger(__name__)


def genesis_header(chain: ChainId) -> BlockHeader:
    """Header of the genesis block of `chain`."""
    return BlockHeader(chain, 0, 0, EMPTY_ROOT, ZERO_DIGEST)


@define(eq=False)
class ChainState:
    """One simulated chain.

    Attributes:
        chain: Chain id.
        name: Human readable name.
        blocks: Sealed blocks, genesis first.
        pending: Transactions queued for the next block.
        contracts: Deployed contracts by address.
        period_clock: Period in which the next block will be sealed.
        locations: Where each executed transaction's receipt was included.
    """

    chain: ChainId
    name: str = ""
    blocks: list[Block] = field(factory=list)
    pending: list[tuple[TxHandle, Transaction]] = field(factory=list)
    contracts: dict[Address, Contract] = field(factory=dict)
    period_clock: int = 1
    locations: dict[bytes, ReceiptLocation] = field(factory=dict)
    _sequence: int = 0

    def __attrs_post_init__(self):
        if not self.blocks:
            self.blocks.append(Block(genesis_header(self.chain)))

    @property
    def headers(self) -> list[BlockHeader]:
        """All sealed headers, genesis first."""
        return [block.header for block in self.blocks]

    @property
    def height(self) -> int:
        """Height of the latest sealed block."""
        return len(self.blocks) - 1

    @property
    def registrar(self) -> Registrar:
        """The chain's registrar."""
        return self._system(Registrar)

    @property
    def control(self) -> CrosschainControl:
        """The chain's crosschain control contract."""
        return self._system(CrosschainControl)

    def _system(self, kind: type) -> Any:
        for contract in self.contracts.values():
            if isinstance(contract, kind):
                return contract
        raise SimulationError(f"Chain {self.chain} has no {kind.__name__}.")

    def deploy(self, contract: Contract) -> Contract:
        """Deploy `contract` on this chain."""
        if contract.chain != self.chain:
            raise SimulationError(
                f"{contract!r} belongs to chain {contract.chain}, not {self.chain}."
            )
        if contract.address in self.contracts:
            raise SimulationError(f"Redeployment of {contract.label} on chain {self.chain}.")
        contract.chain_state = self
        self.contracts[contract.address] = contract
        return contract

    def contract(self, address: Address) -> Contract:
        """Return the contract at `address`."""
        try:
            return self.contracts[address]
        except KeyError:
            raise SimulationError(
                f"Unknown contract {address.hex()} on chain {self.chain}."
            ) from None

    def submit(self, tx: Transaction) -> TxHandle:
        """Queue `tx` for the next block."""
        contract = self.contract(tx.to)
        if not contract.has_function(tx.function):
            raise SimulationError(f"Unknown function {tx.function!r} of {contract.label}.")
        tx_digest = transaction_digest(
            self.chain, self._sequence, tx.sender, tx.to, tx.function
        )
        handle = TxHandle(self.chain, self._sequence, tx_digest)
        self._sequence += 1
        self.pending.append((handle, tx))
        return handle

    def snapshot(self) -> dict[Address, Any]:
        """Copy the state of every contract."""
        return {address: c.snapshot() for address, c in self.contracts.items()}

    def restore(self, snapshot: dict[Address, Any]):
        """Restore contract states from `snapshot`."""
        for address, state in snapshot.items():
            self.contracts[address].restore(state)

    def execute(self, handle: TxHandle, tx: Transaction, timestamp: int) -> Receipt:
        """Execute a transaction against the current state."""
        snapshot = self.snapshot()
        ctx = TxContext(self, tx.sender, timestamp)
        contract = self.contracts[tx.to]
        try:
            contract.execute(tx.function, ctx, tx.args)
        except GpactError as exc:
            self.restore(snapshot)
            logger.warning(
                "Chain %d: %s.%s rejected: %s", self.chain, contract.label, tx.function, exc
            )
            return Receipt(handle.tx_digest, TxStatus.FAILURE, (), error=str(exc))
        logger.debug("Chain %d: %s.%s executed.", self.chain, contract.label, tx.function)
        return Receipt(handle.tx_digest, TxStatus.SUCCESS, ctx.events)

    def seal(self) -> BlockHeader:
        """Execute the queued transactions and seal the next block."""
        timestamp = self.period_clock
        pending, self.pending = self.pending, []
        receipts = [self.execute(handle, tx, timestamp) for handle, tx in pending]
        parent = self.blocks[-1].header
        header = BlockHeader(
            chain=self.chain,
            height=parent.height + 1,
            timestamp=timestamp,
            receipt_root=receipts_root(receipts),
            parent_digest=header_digest(parent),
        )
        self.blocks.append(Block(header, receipts))
        for index, ((handle, _), receipt) in enumerate(zip(pending, receipts)):
            self.locations[handle.tx_digest] = ReceiptLocation(
                self.chain, header.height, index, timestamp, receipt
            )
        return header

    def locked_contracts(self) -> list[Address]:
        """Business contracts currently locked."""
        return [
            address
            for address, contract in self.contracts.items()
            if isinstance(contract, BusinessContract) and contract.state.is_locked
        ]

    def state_digest(self) -> bytes:
        """Digest over the state of every contract."""
        enc = Encoder()
        for address in sorted(self.contracts):
            self.contracts[address].digest_state(enc)
        return digest(enc.getvalue())


class Simulation:
    """A set of chains advancing in lockstep.

    Every chain gets a registrar and a crosschain control contract. Each
    registrar knows the signer sets and control contracts of all chains.
    """

    def __init__(
        self,
        chains: Sequence[ChainConfig],
        mode: AttestationMode = AttestationMode.DIRECT,
        config: Optional[SimulationConfig] = None,
        byzantine: int = 0,
    ):
        self.config = config if config is not None else SimulationConfig()
        self.mode = mode
        self.scheme = make_scheme(self.config.signature_scheme)
        self.chains: dict[ChainId, ChainState] = {}
        self.signers: dict[ChainId, list[Signer]] = {}
        self.signer_sets: dict[ChainId, SignerSet] = {}
        for chain_config in chains:
            chain = chain_config.id
            if chain in self.chains:
                raise SimulationError(f"Duplicate chain id {chain}.")
            state = ChainState(chain, chain_config.name)
            state.deploy(Registrar(chain, mode, self.scheme))
            state.deploy(CrosschainControl(chain, self.config.coordinator_only_segments))
            self.chains[chain] = state
            self.signers[chain] = make_signers(
                self.scheme, self.config.seed, chain, chain_config.signers, byzantine
            )
            self.signer_sets[chain] = SignerSet(
                chain, [s.identity for s in self.signers[chain]], chain_config.threshold
            )
        for state in self.chains.values():
            for chain, other in self.chains.items():
                state.registrar.register_signer_set(chain, self.signer_sets[chain])
                state.registrar.register_control_contract(chain, other.control.address)

    @property
    def period(self) -> int:
        """Period in which the next blocks will be sealed."""
        return next(iter(self.chains.values())).period_clock

    def chain(self, chain: ChainId) -> ChainState:
        """Return the state of `chain`."""
        try:
            return self.chains[chain]
        except KeyError:
            raise SimulationError(f"Unknown chain {chain}.") from None

    def deploy(self, contract: Contract) -> Contract:
        """Deploy `contract` on its chain."""
        return self.chain(contract.chain).deploy(contract)

    def submit_transaction(self, chain: ChainId, tx: Transaction) -> TxHandle:
        """Queue `tx` for the next block of `chain`."""
        return self.chain(chain).submit(tx)

    def advance_period(self) -> list[tuple[ChainId, BlockHeader]]:
        """Seal one block on every chain and advance the clock."""
        sealed = [(chain, self.chains[chain].seal()) for chain in sorted(self.chains)]
        for state in self.chains.values():
            state.period_clock += 1
        return sealed

    def locate(self, handle: TxHandle) -> Optional[ReceiptLocation]:
        """Where the receipt of `handle` was included, or `None` while pending."""
        return self.chain(handle.chain).locations.get(handle.tx_digest)

    def receipt(self, handle: TxHandle) -> Receipt:
        """Receipt of an executed transaction."""
        location = self.locate(handle)
        if location is None:
            raise SimulationError("Transaction has not been included yet.")
        return location.receipt

    def build_receipt_proof(self, chain: ChainId, height: int, receipt_index: int) -> MerkleProof:
        """Inclusion proof of a receipt against its block's receipt root."""
        blocks = self.chain(chain).blocks
        if not 0 <= height < len(blocks):
            raise SimulationError(f"Chain {chain} has no block at height {height}.")
        receipts = blocks[height].receipts
        if not 0 <= receipt_index < len(receipts):
            raise SimulationError(
                f"Block {height} of chain {chain} has no receipt {receipt_index}."
            )
        return build_proof([receipt_leaf(r) for r in receipts], receipt_index)

    def events(
        self, chain: ChainId, kind: Optional[EventKind] = None
    ) -> Iterator[tuple[LocatedEvent, ProtocolEvent]]:
        """Protocol events emitted by the control contract of `chain`."""
        state = self.chain(chain)
        control = state.control.address
        for block in state.blocks:
            for index, receipt in enumerate(block.receipts):
                if not receipt.succeeded:
                    continue
                location = ReceiptLocation(
                    chain, block.header.height, index, block.header.timestamp, receipt
                )
                for event_index, log in enumerate(receipt.events):
                    if log.emitter != control:
                        continue
                    if kind is not None and log.topic != kind.topic:
                        continue
                    event = decode_log_event(log)
                    if event is not None:
                        yield LocatedEvent(location, event_index), event

    def lock_residue(self) -> list[tuple[ChainId, Address]]:
        """All locked business contracts across chains."""
        return [
            (chain, address)
            for chain in sorted(self.chains)
            for address in self.chains[chain].locked_contracts()
        ]

    def state_digest(self, chain: ChainId) -> bytes:
        """Digest of the contract state of `chain`."""
        return self.chain(chain).state_digest()
