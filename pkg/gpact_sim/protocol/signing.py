"""Signature schemes and signer identities.

Two interchangeable schemes are provided. `KeyedTagScheme` produces
HMAC-SHA256 tags and verifies them against a key registry shared with the
verifiers. `Ed25519Scheme` produces real Ed25519 signatures. Keys are derived
deterministically from the simulation seed so runs are reproducible.
"""

from __future__ import annotations
from abc import ABC, abstractmethod
from attrs import define, field
from enum import Enum
from typing import Any, ClassVar, Optional, Sequence
from cryptography.exceptions import InvalidSignature
from cryptography.hazmat.primitives.asymmetric.ed25519 import (
    Ed25519PrivateKey,
    Ed25519PublicKey,
)
from cryptography.hazmat.primitives.serialization import Encoding, PublicFormat
from gpact_sim.model.chain import ChainId
from gpact_sim.model.config import SignatureSchemeName
import hashlib
import hmac
import logging

logger = logging.getLogger(__name__)


class SignatureScheme(ABC):
    """A signature scheme usable by signers and registrars."""

    name: ClassVar[str]

    @abstractmethod
    def keygen(self, seed: bytes) -> tuple[Any, bytes]:
        """Derive a key pair from a seed, returning `(secret, identity)`."""

    @abstractmethod
    def sign(self, secret: Any, message: bytes) -> bytes:
        """Sign `message`."""

    @abstractmethod
    def verify(self, identity: bytes, message: bytes, signature: bytes) -> bool:
        """Return `True` if `signature` is valid for `identity` over `message`."""


class KeyedTagScheme(SignatureScheme):
    """HMAC-SHA256 tags; verifiers look the key up by signer identity."""

    name = SignatureSchemeName.KEYED_TAG.value

    def __init__(self):
        self._keys: dict[bytes, bytes] = {}

    def keygen(self, seed: bytes) -> tuple[bytes, bytes]:
        key = hashlib.sha256(b"keyed-tag:" + seed).digest()
        identity = hashlib.sha256(b"identity:" + key).digest()
        self._keys[identity] = key
        return key, identity

    def sign(self, secret: bytes, message: bytes) -> bytes:
        return hmac.new(secret, message, hashlib.sha256).digest()

    def verify(self, identity: bytes, message: bytes, signature: bytes) -> bool:
        key = self._keys.get(identity)
        if key is None:
            return False
        expected = hmac.new(key, message, hashlib.sha256).digest()
        return hmac.compare_digest(expected, signature)


class Ed25519Scheme(SignatureScheme):
    """Ed25519 signatures from the `cryptography` package."""

    name = SignatureSchemeName.ED25519.value

    def __init__(self):
        self._public_keys: dict[bytes, Ed25519PublicKey] = {}

    def keygen(self, seed: bytes) -> tuple[Ed25519PrivateKey, bytes]:
        secret = Ed25519PrivateKey.from_private_bytes(hashlib.sha256(seed).digest())
        public_key = secret.public_key()
        identity = public_key.public_bytes(Encoding.Raw, PublicFormat.Raw)
        self._public_keys[identity] = public_key
        return secret, identity

    def sign(self, secret: Ed25519PrivateKey, message: bytes) -> bytes:
        return secret.sign(message)

    def verify(self, identity: bytes, message: bytes, signature: bytes) -> bool:
        public_key = self._public_keys.get(identity)
        try:
            if public_key is None:
                public_key = Ed25519PublicKey.from_public_bytes(identity)
            public_key.verify(signature, message)
        except (InvalidSignature, ValueError):
            return False
        return True


def make_scheme(name: SignatureSchemeName) -> SignatureScheme:
    """Instantiate the named signature scheme."""
    if name == SignatureSchemeName.ED25519:
        return Ed25519Scheme()
    return KeyedTagScheme()


class SignerBehaviour(Enum):
    """How a signer responds to signing requests."""

    HONEST = "honest"
    REFUSE = "refuse"
    GARBAGE = "garbage"


@define
class Signer:
    """A validator or relayer holding one key.

    Attributes:
        identity: Public identity registered with registrars.
        secret: Private key material.
        scheme: Scheme the key belongs to.
        behaviour: Honest, or one of the byzantine behaviours.
    """

    identity: bytes
    secret: Any = field(repr=False, eq=False)
    scheme: SignatureScheme = field(repr=False, eq=False)
    behaviour: SignerBehaviour = SignerBehaviour.HONEST

    def sign(self, message: bytes) -> Optional[bytes]:
        """Sign `message`. Byzantine signers refuse or return garbage."""
        if self.behaviour == SignerBehaviour.REFUSE:
            return None
        if self.behaviour == SignerBehaviour.GARBAGE:
            return hashlib.sha512(b"garbage" + self.identity + message).digest()
        return self.scheme.sign(self.secret, message)


def make_signers(
    scheme: SignatureScheme,
    seed: int,
    chain: ChainId,
    count: int,
    byzantine: int = 0,
) -> list[Signer]:
    """Create the signers attesting `chain`.

    Args:
        scheme: Signature scheme to derive keys with.
        seed: Simulation seed.
        chain: Attested chain.
        count: Number of signers.
        byzantine: The first `byzantine` signers are faulty. They alternate
            between refusing to sign and signing garbage.

    Returns:
        The signers in registration order.
    """
    signers = []
    for i in range(count):
        secret, identity = scheme.keygen(f"{seed}:{chain}:{i}".encode())
        behaviour = SignerBehaviour.HONEST
        if i < byzantine:
            behaviour = SignerBehaviour.REFUSE if i % 2 == 0 else SignerBehaviour.GARBAGE
        signers.append(Signer(identity, secret, scheme, behaviour))
    if byzantine:
        logger.warning("Chain %d: %d of %d signers are byzantine.", chain, byzantine, count)
    return signers


def collect_signatures(
    signers: Sequence[Signer], message: bytes
) -> tuple[tuple[bytes, bytes], ...]:
    """Ask every signer to sign `message`, dropping refusals."""
    signatures = []
    for signer in signers:
        signature = signer.sign(message)
        if signature is not None:
            signatures.append((signer.identity, signature))
    return tuple(signatures)
