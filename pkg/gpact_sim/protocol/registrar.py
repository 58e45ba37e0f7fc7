"""The Registrar contract and the attestation operations built on it.

Every chain runs a registrar holding the signer sets of all chains, the
addresses of their crosschain control contracts and, in header mode, the
block headers relayed to it. A registrar trusts its own chain's sealed
headers without relaying.
"""

from __future__ import annotations
from attrs import define, field
from typing import TYPE_CHECKING, Iterable, Sequence
from gpact_sim.errors import (
    AttestationError,
    ConflictingHeaderError,
    ModeMismatchError,
    NoRelayedHeaderError,
    ProofMismatchError,
    RegistrationError,
    ThresholdNotMetError,
    UnknownSourceChainError,
    WrongEmitterError,
)
from gpact_sim.io.codec import Encoder, decode_log_event, event_message, header_message
from gpact_sim.model.attestation import (
    AttestationMode,
    AttestedEvent,
    HeaderProof,
    SignerSet,
    ThresholdSignatures,
)
from gpact_sim.model.chain import (
    Address,
    BlockHeader,
    ChainId,
    LocatedEvent,
    LogEvent,
    Transaction,
    TxHandle,
)
from gpact_sim.model.events import ProtocolEvent
from gpact_sim.protocol.contracts import Contract, TxContext, exported
from gpact_sim.protocol.merkle import leaf_position, receipt_leaf
from gpact_sim.protocol.signing import SignatureScheme, Signer, collect_signatures
import logging

if TYPE_CHECKING:
    from gpact_sim.protocol.chain_sim import Simulation

logger = logging.getLogger(__name__)

RELAY_FUNCTION = "relayHeader"


@define
class RegistrarState:
    """Mutable state of a registrar.

    Attributes:
        signer_sets: Signer set per attested chain.
        control_contracts: Control contract address per chain.
        relayed_headers: Relayed headers by `(chain, height)`.
    """

    signer_sets: dict[ChainId, SignerSet] = field(factory=dict)
    control_contracts: dict[ChainId, Address] = field(factory=dict)
    relayed_headers: dict[tuple[ChainId, int], BlockHeader] = field(factory=dict)


class Registrar(Contract):
    """Verifies events attested from other chains."""

    state: RegistrarState

    def __init__(self, chain: ChainId, mode: AttestationMode, scheme: SignatureScheme):
        super().__init__("registrar", chain)
        self.mode = mode
        self.scheme = scheme
        self.state = RegistrarState()

    def register_signer_set(self, for_chain: ChainId, signer_set: SignerSet):
        """Trust `signer_set` for attestations from `for_chain`."""
        if signer_set.chain != for_chain:
            raise RegistrationError(
                f"Signer set for chain {signer_set.chain} registered for {for_chain}."
            )
        if for_chain in self.state.signer_sets:
            raise RegistrationError(
                f"Chain {self.chain} already has a signer set for chain {for_chain}."
            )
        self.state.signer_sets[for_chain] = signer_set

    def register_control_contract(self, for_chain: ChainId, address: Address):
        """Record the control contract of `for_chain`. Entries are immutable."""
        if for_chain in self.state.control_contracts:
            raise RegistrationError(
                f"Chain {self.chain} already has a control contract for chain {for_chain}."
            )
        self.state.control_contracts[for_chain] = address

    def is_registered(self, chain: ChainId) -> bool:
        """Return `True` if `chain` has a registered control contract."""
        return chain in self.state.control_contracts

    def _signer_set(self, chain: ChainId) -> SignerSet:
        try:
            return self.state.signer_sets[chain]
        except KeyError:
            raise UnknownSourceChainError(
                f"Chain {self.chain} has no signer set for chain {chain}."
            ) from None

    def _check_threshold(self, signer_set: SignerSet, message: bytes, signatures):
        valid = set()
        members = set(signer_set.members)
        for identity, signature in signatures:
            if identity in members and identity not in valid:
                if self.scheme.verify(identity, message, signature):
                    valid.add(identity)
        if len(valid) < signer_set.threshold:
            raise ThresholdNotMetError(
                f"{len(valid)} valid signatures for chain {signer_set.chain}, "
                f"{signer_set.threshold} required."
            )

    @exported(RELAY_FUNCTION)
    def relay_header(
        self, tx: TxContext, header: BlockHeader, signatures: Sequence[tuple[bytes, bytes]]
    ):
        """Store a header signed by a threshold of the source chain's signers.

        Relaying an identical header again is a no-op.
        """
        if self.mode != AttestationMode.HEADER:
            raise ModeMismatchError("Headers are only relayed in header mode.")
        signer_set = self._signer_set(header.chain)
        self._check_threshold(signer_set, header_message(header), signatures)
        key = (header.chain, header.height)
        stored = self.state.relayed_headers.get(key)
        if stored is not None:
            if stored != header:
                raise ConflictingHeaderError(
                    f"Conflicting header for chain {header.chain} at height "
                    f"{header.height}."
                )
            logger.debug("Header %s already relayed to chain %d.", key, self.chain)
            return
        self.state.relayed_headers[key] = header
        logger.debug("Relayed header %s to chain %d.", key, self.chain)

    def header(self, chain: ChainId, height: int) -> BlockHeader:
        """Return a trusted header of `chain` at `height`."""
        if chain == self.chain and self.chain_state is not None:
            blocks = self.chain_state.blocks
            if height < len(blocks):
                return blocks[height].header
        else:
            header = self.state.relayed_headers.get((chain, height))
            if header is not None:
                return header
        raise NoRelayedHeaderError(
            f"Chain {self.chain} has no header of chain {chain} at height {height}."
        )

    def has_header(self, chain: ChainId, height: int) -> bool:
        """Return `True` if the header can be used for proofs here."""
        try:
            self.header(chain, height)
        except NoRelayedHeaderError:
            return False
        return True

    def _check_header_proof(self, att: AttestedEvent, proof: HeaderProof):
        header = self.header(att.source_chain, proof.height)
        merkle = proof.merkle
        if receipt_leaf(proof.receipt) != merkle.leaf_digest:
            raise ProofMismatchError("Receipt does not match the proven leaf.")
        if not merkle.verify(header.receipt_root):
            raise ProofMismatchError("Merkle proof does not match the receipt root.")
        try:
            position = leaf_position(merkle)
        except ValueError as exc:
            raise ProofMismatchError(str(exc)) from None
        if position != proof.receipt_index:
            raise ProofMismatchError("Merkle proof is for a different receipt index.")
        if not proof.receipt.succeeded:
            raise ProofMismatchError("Proven receipt is a failed transaction.")
        events = proof.receipt.events
        if not 0 <= proof.event_index < len(events) or events[proof.event_index] != att.event:
            raise ProofMismatchError("Event is not at the claimed position.")

    def verify_attested_event(self, att: AttestedEvent) -> ProtocolEvent:
        """Verify an attested event and decode it.

        Raises:
            AttestationError: If the attestation does not verify.
        """
        signer_set = self._signer_set(att.source_chain)
        if att.mode != self.mode:
            raise ModeMismatchError(
                f"{att.mode.value} attestation in a {self.mode.value} mode simulation."
            )
        if isinstance(att.proof, ThresholdSignatures):
            message = event_message(att.source_chain, att.event)
            self._check_threshold(signer_set, message, att.proof.signatures)
        else:
            self._check_header_proof(att, att.proof)
        if att.event.emitter != self.state.control_contracts.get(att.source_chain):
            raise WrongEmitterError(
                f"Event emitted by {att.event.emitter.hex()}, not by the control "
                f"contract of chain {att.source_chain}."
            )
        try:
            event = decode_log_event(att.event)
        except ValueError as exc:
            raise AttestationError(f"Malformed event payload: {exc}") from None
        if event is None:
            raise AttestationError("Attested event is not a protocol event.")
        return event

    def digest_state(self, enc: Encoder):
        super().digest_state(enc)
        headers = sorted(self.state.relayed_headers.items())
        enc.sequence(headers, lambda e, kv: e.u64(kv[0][0]).u64(kv[0][1]))


def register_signer_set(
    sim: Simulation, on_chain: ChainId, for_chain: ChainId, signer_set: SignerSet
):
    """Register `signer_set` for `for_chain` with the registrar on `on_chain`."""
    sim.chain(on_chain).registrar.register_signer_set(for_chain, signer_set)


def sign_event(event: LogEvent, source_chain: ChainId, signers: Sequence[Signer]) -> AttestedEvent:
    """Attest `event` by direct signing."""
    signatures = collect_signatures(signers, event_message(source_chain, event))
    return AttestedEvent(event, source_chain, ThresholdSignatures(signatures))


def sign_header(signers: Sequence[Signer], header: BlockHeader) -> tuple:
    """Collect relayer signatures over `header`."""
    return collect_signatures(signers, header_message(header))


def relay_header(
    sim: Simulation,
    dest_chain: ChainId,
    header: BlockHeader,
    signatures: Sequence[tuple[bytes, bytes]],
    sender: Address,
) -> TxHandle:
    """Submit a header relay transaction to the registrar of `dest_chain`."""
    registrar = sim.chain(dest_chain).registrar
    tx = Transaction(sender, registrar.address, RELAY_FUNCTION, (header, tuple(signatures)))
    return sim.submit_transaction(dest_chain, tx)


def verify_attested_event(sim: Simulation, on_chain: ChainId, att: AttestedEvent) -> ProtocolEvent:
    """Verify `att` with the registrar on `on_chain`."""
    return sim.chain(on_chain).registrar.verify_attested_event(att)


def attest(sim: Simulation, located: LocatedEvent) -> AttestedEvent:
    """Build the attestation of a finalized event for the simulation's mode."""
    if sim.mode == AttestationMode.DIRECT:
        return sign_event(located.event, located.chain, sim.signers[located.chain])
    location = located.location
    proof = HeaderProof(
        height=location.height,
        receipt_index=location.index,
        event_index=located.event_index,
        receipt=location.receipt,
        merkle=sim.build_receipt_proof(location.chain, location.height, location.index),
    )
    return AttestedEvent(located.event, located.chain, proof)


def missing_headers(
    sim: Simulation, dest_chain: ChainId, events: Iterable[LocatedEvent]
) -> list[BlockHeader]:
    """Headers `dest_chain` needs before it can verify `events` in header mode."""
    if sim.mode != AttestationMode.HEADER:
        return []
    registrar = sim.chain(dest_chain).registrar
    needed = set()
    for located in events:
        key = (located.chain, located.location.height)
        if not registrar.has_header(*key):
            needed.add(key)
    return [sim.chain(chain).blocks[height].header for chain, height in sorted(needed)]
