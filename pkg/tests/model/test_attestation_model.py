"""Tests for the gpact_sim.model.attestation and gpact_sim.model.chain files."""
import hashlib
import pytest
from gpact_sim.errors import RegistrationError
from gpact_sim.model.attestation import MerkleProof, Side, SignerSet
from gpact_sim.model.chain import BlockHeader, LogEvent, make_address


def test_signer_set_validation():
    members = [b"a", b"b", b"c"]
    assert SignerSet(1, members, 2).members == (b"a", b"b", b"c")
    with pytest.raises(RegistrationError):
        SignerSet(1, members, 0)
    with pytest.raises(RegistrationError):
        SignerSet(1, members, 4)
    with pytest.raises(RegistrationError):
        SignerSet(1, [b"a", b"a"], 1)


def test_merkle_proof_fold():
    leaf, sibling = b"\x01" * 32, b"\x02" * 32
    right = MerkleProof(leaf, [(Side.RIGHT, sibling)])
    left = MerkleProof(leaf, [(Side.LEFT, sibling)])
    assert right.fold() == hashlib.sha256(leaf + sibling).digest()
    assert left.fold() == hashlib.sha256(sibling + leaf).digest()
    assert right.verify(right.fold())
    assert not left.verify(right.fold())
    assert MerkleProof(leaf).fold() == leaf


def test_addresses_and_sizes():
    assert len(make_address("x")) == 20
    assert make_address("x", 1) != make_address("x", 2)
    assert make_address("x") == make_address("x")
    with pytest.raises(ValueError):
        LogEvent(b"short", bytes(32), b"")
    with pytest.raises(ValueError):
        BlockHeader(1, -1, 0, bytes(32), bytes(32))
