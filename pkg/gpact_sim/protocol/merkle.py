"""Binary Merkle trees over block receipts.

Odd levels duplicate their last node. The root of an empty receipt list is
the digest of the empty string and a single leaf is its own root.
"""

from __future__ import annotations
from typing import Sequence
from gpact_sim.io.codec import digest, encode_receipt
from gpact_sim.model.attestation import MerkleProof, Side
from gpact_sim.model.chain import Receipt

EMPTY_ROOT = digest(b"")


def receipt_leaf(receipt: Receipt) -> bytes:
    """Leaf digest of a receipt."""
    return digest(encode_receipt(receipt))


def build_levels(leaves: Sequence[bytes]) -> list[list[bytes]]:
    """Build all tree levels; `levels[0]` are the leaves, `levels[-1]` the root."""
    if not leaves:
        return [[EMPTY_ROOT]]
    levels = [list(leaves)]
    while len(levels[-1]) > 1:
        level = levels[-1]
        if len(level) % 2 == 1:
            level = level + [level[-1]]
        levels.append(
            [digest(level[i] + level[i + 1]) for i in range(0, len(level), 2)]
        )
    return levels


def merkle_root(leaves: Sequence[bytes]) -> bytes:
    """Root over leaf digests."""
    return build_levels(leaves)[-1][0]


def build_proof(leaves: Sequence[bytes], index: int) -> MerkleProof:
    """Inclusion proof of `leaves[index]`."""
    if not 0 <= index < len(leaves):
        raise IndexError(f"Leaf index {index} out of range for {len(leaves)} leaves.")
    levels = build_levels(leaves)
    siblings = []
    position = index
    for level in levels[:-1]:
        if len(level) % 2 == 1:
            level = level + [level[-1]]
        sibling = position ^ 1
        side = Side.LEFT if sibling < position else Side.RIGHT
        siblings.append((side, level[sibling]))
        position //= 2
    return MerkleProof(leaf_digest=leaves[index], siblings=siblings)


def leaf_position(proof: MerkleProof) -> int:
    """Index of the proven leaf, read off the sibling sides.

    Raises:
        ValueError: If the path climbs through the copy that pads an odd
            level. Such a proof folds to the right root but names a leaf
            that does not exist.
    """
    node = proof.leaf_digest
    position = 0
    for level, (side, sibling) in enumerate(proof.siblings):
        if side == Side.LEFT:
            if sibling == node:
                raise ValueError(f"Proof passes through padding at level {level}.")
            position |= 1 << level
            node = digest(sibling + node)
        else:
            node = digest(node + sibling)
    return position


def receipts_root(receipts: Sequence[Receipt]) -> bytes:
    """Receipt root committed to by a block header."""
    return merkle_root([receipt_leaf(r) for r in receipts])
