"""Tests for the gpact_sim.protocol.signing file."""
import pytest
from gpact_sim.model.config import SignatureSchemeName
from gpact_sim.protocol.signing import (
    Ed25519Scheme,
    KeyedTagScheme,
    SignerBehaviour,
    collect_signatures,
    make_scheme,
    make_signers,
)


@pytest.mark.parametrize("name", list(SignatureSchemeName))
def test_sign_and_verify(name):
    scheme = make_scheme(name)
    secret, identity = scheme.keygen(b"seed")
    signature = scheme.sign(secret, b"message")
    assert scheme.verify(identity, b"message", signature)
    assert not scheme.verify(identity, b"other", signature)
    flipped = bytes([signature[0] ^ 1]) + signature[1:]
    assert not scheme.verify(identity, b"message", flipped)
    assert not scheme.verify(identity, b"message", b"")


def test_schemes_are_deterministic():
    assert isinstance(make_scheme(SignatureSchemeName.ED25519), Ed25519Scheme)
    assert isinstance(make_scheme(SignatureSchemeName.KEYED_TAG), KeyedTagScheme)
    for scheme in (KeyedTagScheme(), Ed25519Scheme()):
        assert scheme.keygen(b"x")[1] == scheme.keygen(b"x")[1]
        assert scheme.keygen(b"x")[1] != scheme.keygen(b"y")[1]


def test_keyed_tag_unknown_identity():
    scheme = KeyedTagScheme()
    secret, _ = scheme.keygen(b"seed")
    assert not scheme.verify(b"nobody", b"m", scheme.sign(secret, b"m"))


def test_byzantine_signers():
    scheme = KeyedTagScheme()
    signers = make_signers(scheme, seed=0, chain=1, count=4, byzantine=3)
    assert [s.behaviour for s in signers] == [
        SignerBehaviour.REFUSE,
        SignerBehaviour.GARBAGE,
        SignerBehaviour.REFUSE,
        SignerBehaviour.HONEST,
    ]
    signatures = collect_signatures(signers, b"m")
    assert [identity for identity, _ in signatures] == [signers[1].identity, signers[3].identity]
    valid = [scheme.verify(i, b"m", s) for i, s in signatures]
    assert valid == [False, True]


def test_signers_differ_per_chain():
    scheme = KeyedTagScheme()
    one = make_signers(scheme, 0, 1, 3)
    two = make_signers(scheme, 0, 2, 3)
    assert {s.identity for s in one}.isdisjoint({s.identity for s in two})
    assert [s.identity for s in make_signers(scheme, 0, 1, 3)] == [s.identity for s in one]
