"""Data structures for attesting events across chains."""

from __future__ import annotations
from attrs import define, field
from enum import Enum
from typing import Union
from gpact_sim.errors import RegistrationError
from gpact_sim.model.chain import ChainId, LogEvent, Receipt
import hashlib


class AttestationMode(Enum):
    """How events from one chain are made verifiable on another."""

    DIRECT = "direct"
    HEADER = "header"


def _check_threshold(instance: SignerSet, attribute, value: int):
    if not 1 <= value <= len(instance.members):
        raise RegistrationError(
            f"Threshold {value} out of range for {len(instance.members)} signers."
        )


def _check_distinct(instance: SignerSet, attribute, value):
    if len(set(value)) != len(value):
        raise RegistrationError("Signer set members must be distinct.")


@define(frozen=True)
class SignerSet:
    """Signers trusted to attest events or headers of one chain.

    Attributes:
        chain: The attested chain.
        members: Signer identities (public keys or key ids).
        threshold: Number of distinct valid signatures required.
    """

    chain: ChainId
    members: tuple[bytes, ...] = field(converter=tuple, validator=_check_distinct)
    threshold: int = field(validator=_check_threshold)


class Side(Enum):
    """Side on which a sibling digest is concatenated."""

    LEFT = "left"
    RIGHT = "right"


@define(frozen=True)
class MerkleProof:
    """Inclusion proof of a leaf in a binary Merkle tree.

    Attributes:
        leaf_digest: Digest of the proven leaf.
        siblings: Sibling digests from the leaf level upward.
    """

    leaf_digest: bytes
    siblings: tuple[tuple[Side, bytes], ...] = field(factory=tuple, converter=tuple)

    def fold(self) -> bytes:
        """Return the root obtained by folding the leaf through the siblings."""
        digest = self.leaf_digest
        for side, sibling in self.siblings:
            if side == Side.LEFT:
                digest = hashlib.sha256(sibling + digest).digest()
            else:
                digest = hashlib.sha256(digest + sibling).digest()
        return digest

    def verify(self, root: bytes) -> bool:
        """Check the proof against a claimed root."""
        return self.fold() == root


@define(frozen=True)
class ThresholdSignatures:
    """Signatures over an event by members of the source chain's signer set."""

    signatures: tuple[tuple[bytes, bytes], ...] = field(
        factory=tuple, converter=tuple
    )


@define(frozen=True)
class HeaderProof:
    """Proof that an event sits in a receipt committed to by a relayed header.

    Attributes:
        height: Height of the block containing the receipt.
        receipt_index: Index of the receipt in the block.
        event_index: Index of the event in the receipt.
        receipt: The full receipt, hashed into the leaf by the verifier.
        merkle: Inclusion proof of the receipt.
    """

    height: int
    receipt_index: int
    event_index: int
    receipt: Receipt
    merkle: MerkleProof


@define(frozen=True)
class AttestedEvent:
    """An event plus the proof that makes it trustworthy on another chain.

    Attributes:
        event: The attested log event.
        source_chain: Chain that emitted the event.
        proof: Threshold signatures (direct mode) or a header proof.
    """

    event: LogEvent
    source_chain: ChainId
    proof: Union[ThresholdSignatures, HeaderProof]

    @property
    def mode(self) -> AttestationMode:
        """Attestation mode implied by the proof variant."""
        if isinstance(self.proof, HeaderProof):
            return AttestationMode.HEADER
        return AttestationMode.DIRECT
