"""Tests for the gpact_sim.protocol.merkle file."""
import hashlib
import pytest
from gpact_sim.model.attestation import MerkleProof, Side
from gpact_sim.model.chain import Receipt, TxStatus
from gpact_sim.protocol.merkle import (
    EMPTY_ROOT,
    build_levels,
    build_proof,
    leaf_position,
    merkle_root,
    receipt_leaf,
    receipts_root,
)


def h(data):
    return hashlib.sha256(data).digest()


def leaves(n):
    return [h(bytes([i])) for i in range(n)]


def test_small_roots():
    assert EMPTY_ROOT == h(b"")
    assert merkle_root([]) == EMPTY_ROOT
    a, b, c = leaves(3)
    assert merkle_root([a]) == a
    assert merkle_root([a, b]) == h(a + b)
    assert merkle_root([a, b, c]) == h(h(a + b) + h(c + c))
    assert [len(level) for level in build_levels(leaves(5))] == [5, 3, 2, 1]


@pytest.mark.parametrize("n", range(1, 12))
def test_every_proof_verifies(n):
    items = leaves(n)
    root = merkle_root(items)
    for index in range(n):
        proof = build_proof(items, index)
        assert proof.leaf_digest == items[index]
        assert proof.verify(root)
        position = sum(1 << i for i, (side, _) in enumerate(proof.siblings) if side == Side.LEFT)
        assert position == index



def test_padding_copy_is_not_a_leaf():
    a, b, c = leaves(3)
    root = merkle_root([a, b, c])
    assert leaf_position(build_proof([a, b, c], 2)) == 2
    padded = MerkleProof(c, [(Side.LEFT, c), (Side.LEFT, h(a + b))])
    assert padded.verify(root)
    with pytest.raises(ValueError):
        leaf_position(padded)

def test_proof_out_of_range():
    with pytest.raises(IndexError):
        build_proof(leaves(3), 3)
    with pytest.raises(IndexError):
        build_proof([], 0)


def test_receipts_root():
    receipts = [Receipt(bytes([i]) * 32, TxStatus.SUCCESS) for i in range(3)]
    assert receipts_root([]) == EMPTY_ROOT
    assert receipts_root(receipts) == merkle_root([receipt_leaf(r) for r in receipts])
    changed = [receipts[0], Receipt(bytes([1]) * 32, TxStatus.FAILURE), receipts[2]]
    assert receipts_root(changed) != receipts_root(receipts)
