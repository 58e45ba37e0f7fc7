"""Tests for the gpact_sim.protocol.registrar file."""
import attrs
import numpy as np
import pytest
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
from gpact_sim.io.codec import make_log_event
from gpact_sim.model.attestation import AttestedEvent, MerkleProof, Side, SignerSet, ThresholdSignatures
from gpact_sim.model.chain import Transaction, TxStatus, make_address
from gpact_sim.model.events import Decision, EventKind, RootEvent, StartEvent
from gpact_sim.protocol.engine import COORDINATOR, RELAYER
from gpact_sim.protocol.registrar import (
    attest,
    missing_headers,
    register_signer_set,
    relay_header,
    sign_event,
    sign_header,
    verify_attested_event,
)


def start_transactions(sim, tree, count=3):
    """Start `count` transactions on chain 1 in one block; return their events."""
    control = sim.chain(1).control
    for tx_id in range(1, count + 1):
        tx = Transaction(COORDINATOR, control.address, "start", (tx_id, 10, tree))
        sim.submit_transaction(1, tx)
    sim.advance_period()
    return [located for located, _ in sim.events(1, EventKind.START)]


def threshold_only(att, threshold=2):
    signatures = att.proof.signatures[:threshold]
    return attrs.evolve(att, proof=ThresholdSignatures(signatures))


def flip(data, bit):
    data = bytearray(data)
    data[bit // 8] ^= 1 << (bit % 8)
    return bytes(data)


def test_direct_attestation(direct_sim, small_tree):
    located = start_transactions(direct_sim, small_tree)
    assert len(located) == 3
    event = verify_attested_event(direct_sim, 2, attest(direct_sim, located[0]))
    assert isinstance(event, StartEvent)
    assert event.tx_id == 1
    assert event.tree == small_tree
    assert verify_attested_event(direct_sim, 1, attest(direct_sim, located[1])).tx_id == 2


def test_direct_attestation_rejections(direct_sim, small_tree):
    located = start_transactions(direct_sim, small_tree, count=1)[0]
    att = attest(direct_sim, located)

    one = attrs.evolve(att, proof=ThresholdSignatures(att.proof.signatures[:1]))
    with pytest.raises(ThresholdNotMetError):
        verify_attested_event(direct_sim, 2, one)

    repeated = attrs.evolve(att, proof=ThresholdSignatures(att.proof.signatures[:1] * 2))
    with pytest.raises(ThresholdNotMetError):
        verify_attested_event(direct_sim, 2, repeated)

    with pytest.raises(UnknownSourceChainError):
        verify_attested_event(direct_sim, 2, attrs.evolve(att, source_chain=9))

    forged = make_log_event(make_address("impostor"), RootEvent(1, 1, Decision.COMMIT))
    with pytest.raises(WrongEmitterError):
        verify_attested_event(direct_sim, 2, sign_event(forged, 1, direct_sim.signers[1]))


def test_signer_sets_are_immutable(direct_sim):
    signer_set = direct_sim.signer_sets[1]
    with pytest.raises(RegistrationError):
        register_signer_set(direct_sim, 2, 1, SignerSet(1, [b"x", b"y"], 1))
    with pytest.raises(RegistrationError):
        register_signer_set(direct_sim, 2, 1, signer_set)
    assert direct_sim.chain(2).registrar.state.signer_sets[1] is signer_set


def test_direct_bit_flips(direct_sim, small_tree):
    located = start_transactions(direct_sim, small_tree)
    atts = [threshold_only(attest(direct_sim, loc)) for loc in located]
    rng = np.random.default_rng(5)
    for _ in range(5_000):
        att = atts[int(rng.integers(len(atts)))]
        if rng.integers(2):
            payload = att.event.payload
            event = attrs.evolve(att.event, payload=flip(payload, int(rng.integers(8 * len(payload)))))
            mutated = attrs.evolve(att, event=event)
        else:
            signatures = list(att.proof.signatures)
            i = int(rng.integers(len(signatures)))
            identity, signature = signatures[i]
            signatures[i] = (identity, flip(signature, int(rng.integers(8 * len(signature)))))
            mutated = attrs.evolve(att, proof=ThresholdSignatures(signatures))
        with pytest.raises(AttestationError):
            verify_attested_event(direct_sim, 2, mutated)


def relay(sim, dest, header, signers=None):
    signatures = sign_header(signers if signers is not None else sim.signers[header.chain], header)
    handle = relay_header(sim, dest, header, signatures, RELAYER)
    sim.advance_period()
    return sim.receipt(handle)


def test_header_attestation(header_sim, small_tree):
    located = start_transactions(header_sim, small_tree)
    att = attest(header_sim, located[2])
    assert verify_attested_event(header_sim, 1, att).tx_id == 3
    with pytest.raises(NoRelayedHeaderError):
        verify_attested_event(header_sim, 2, att)

    headers = missing_headers(header_sim, 2, located)
    assert [(h.chain, h.height) for h in headers] == [(1, 1)]
    assert missing_headers(header_sim, 1, located) == []
    assert relay(header_sim, 2, headers[0]).succeeded
    assert verify_attested_event(header_sim, 2, att).tx_id == 3
    assert missing_headers(header_sim, 2, located) == []
    assert relay(header_sim, 2, headers[0]).succeeded


def test_header_relay_rejections(header_sim, small_tree):
    start_transactions(header_sim, small_tree, count=1)
    header = header_sim.chain(1).headers[1]
    receipt = relay(header_sim, 2, header, header_sim.signers[1][:1])
    assert receipt.status == TxStatus.FAILURE
    assert "signatures" in receipt.error

    assert relay(header_sim, 2, header).succeeded
    forged = attrs.evolve(header, timestamp=header.timestamp + 1)
    receipt = relay(header_sim, 2, forged)
    assert receipt.status == TxStatus.FAILURE
    assert header_sim.chain(2).registrar.header(1, 1) == header


def test_conflicting_header_error(header_sim):
    registrar = header_sim.chain(2).registrar
    header = header_sim.chain(1).headers[0]
    registrar.state.relayed_headers[(1, 0)] = attrs.evolve(header, timestamp=5)
    signatures = sign_header(header_sim.signers[1], header)
    with pytest.raises(ConflictingHeaderError):
        registrar.relay_header(None, header, signatures)


def test_mode_mismatch(direct_sim, header_sim, small_tree):
    direct_att = attest(direct_sim, start_transactions(direct_sim, small_tree, count=1)[0])
    header_att = attest(header_sim, start_transactions(header_sim, small_tree, count=1)[0])
    with pytest.raises(ModeMismatchError):
        verify_attested_event(header_sim, 1, direct_att)
    with pytest.raises(ModeMismatchError):
        verify_attested_event(direct_sim, 1, header_att)
    receipt = relay(direct_sim, 2, direct_sim.chain(1).headers[1])
    assert receipt.status == TxStatus.FAILURE


def test_header_proof_rejections(header_sim, small_tree):
    located = start_transactions(header_sim, small_tree)
    att = attest(header_sim, located[1])
    proof = att.proof

    failed = attrs.evolve(proof.receipt, status=TxStatus.FAILURE)
    with pytest.raises(ProofMismatchError):
        verify_attested_event(header_sim, 1, attrs.evolve(att, proof=attrs.evolve(proof, receipt=failed)))
    with pytest.raises(ProofMismatchError):
        verify_attested_event(header_sim, 1, attrs.evolve(att, proof=attrs.evolve(proof, receipt_index=0)))
    with pytest.raises(ProofMismatchError):
        verify_attested_event(header_sim, 1, attrs.evolve(att, proof=attrs.evolve(proof, event_index=1)))
    other = attest(header_sim, located[0])
    with pytest.raises(ProofMismatchError):
        verify_attested_event(header_sim, 1, attrs.evolve(att, event=other.event))



def test_header_proof_through_padding(header_sim, small_tree):
    located = start_transactions(header_sim, small_tree)
    att = attest(header_sim, located[2])
    proof = att.proof
    assert proof.receipt_index == 2
    (_, own_copy), upper = proof.merkle.siblings
    merkle = MerkleProof(proof.merkle.leaf_digest, [(Side.LEFT, own_copy), upper])
    forged = attrs.evolve(att, proof=attrs.evolve(proof, receipt_index=3, merkle=merkle))
    with pytest.raises(ProofMismatchError, match="padding"):
        verify_attested_event(header_sim, 1, forged)
    assert verify_attested_event(header_sim, 1, att).tx_id == 3

def test_header_bit_flips(header_sim, small_tree):
    located = start_transactions(header_sim, small_tree)
    atts = [attest(header_sim, loc) for loc in located]
    for att in atts:
        assert att.proof.merkle.siblings
    rng = np.random.default_rng(6)
    for _ in range(5_000):
        att = atts[int(rng.integers(len(atts)))]
        proof = att.proof
        target = int(rng.integers(4))
        if target == 0:
            payload = att.event.payload
            event = attrs.evolve(att.event, payload=flip(payload, int(rng.integers(8 * len(payload)))))
            mutated = attrs.evolve(att, event=event)
        elif target == 1:
            siblings = list(proof.merkle.siblings)
            i = int(rng.integers(len(siblings)))
            side, digest = siblings[i]
            siblings[i] = (side, flip(digest, int(rng.integers(256))))
            merkle = attrs.evolve(proof.merkle, siblings=siblings)
            mutated = attrs.evolve(att, proof=attrs.evolve(proof, merkle=merkle))
        elif target == 2:
            merkle = attrs.evolve(proof.merkle, leaf_digest=flip(proof.merkle.leaf_digest, int(rng.integers(256))))
            mutated = attrs.evolve(att, proof=attrs.evolve(proof, merkle=merkle))
        else:
            receipt = attrs.evolve(proof.receipt, tx_digest=flip(proof.receipt.tx_digest, int(rng.integers(256))))
            mutated = attrs.evolve(att, proof=attrs.evolve(proof, receipt=receipt))
        with pytest.raises(AttestationError):
            verify_attested_event(header_sim, 1, mutated)
