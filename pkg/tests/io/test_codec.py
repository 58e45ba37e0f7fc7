"""Tests for the gpact_sim.io.codec file.

Expected bytes are assembled by hand from the layouts in docs/encoding.md.
"""
import hashlib
import pytest
from gpact_sim.io.codec import (
    Decoder,
    Encoder,
    decode_args,
    decode_event,
    decode_header,
    decode_log_event,
    decode_receipt,
    decode_return,
    decode_tree,
    encode_args,
    encode_call_spec,
    encode_event,
    encode_header,
    encode_path,
    encode_receipt,
    encode_return,
    encode_tree,
    event_message,
    header_message,
    make_log_event,
    transaction_digest,
)
from gpact_sim.model.calltree import CallExecutionTree, CallPath, FunctionCallSpec
from gpact_sim.model.chain import BlockHeader, LogEvent, Receipt, TxStatus
from gpact_sim.model.events import (
    Decision,
    EventKind,
    Outcome,
    RootEvent,
    SegmentEvent,
    SignallingEvent,
    StartEvent,
)

A = bytes(range(20))
B = bytes(range(20, 40))


def u(value, width):
    return value.to_bytes(width, "big")


def test_encoder_widths():
    enc = Encoder().u8(1).u32(2).u64(3).u256(4)
    assert enc.getvalue() == b"\x01" + u(2, 4) + u(3, 8) + u(4, 32)
    assert Encoder().bytes(b"ab").text("c").getvalue() == u(2, 4) + b"ab" + u(1, 4) + b"c"
    with pytest.raises(ValueError):
        Encoder().u8(256)
    with pytest.raises(ValueError):
        Encoder().u64(-1)
    with pytest.raises(ValueError):
        Encoder().address(b"short")


def test_decoder_errors():
    with pytest.raises(ValueError):
        Decoder(b"\x00\x00").u32()
    dec = Decoder(b"\x01\x02")
    assert dec.u8() == 1
    with pytest.raises(ValueError):
        dec.finish()


def test_args_golden():
    expected = u(2, 4) + b"\x00" + u(5, 32) + b"\x01" + u(2, 4) + b"ab"
    assert encode_args([5, b"ab"]) == expected
    assert decode_args(expected) == [5, b"ab"]
    assert encode_args([]) == u(0, 4)
    with pytest.raises(TypeError):
        encode_args(["text"])
    with pytest.raises(ValueError):
        decode_args(u(1, 4) + b"\x07")


def test_return_values():
    assert encode_return(None) == b""
    assert decode_return(b"") is None
    assert encode_return(9) == b"\x00" + u(9, 32)
    assert decode_return(encode_return(b"xy")) == b"xy"


def test_tree_golden():
    leaf = FunctionCallSpec(2, B, "g", b"")
    tree = CallExecutionTree(FunctionCallSpec(1, A, "f", b"\x09"), [CallExecutionTree(leaf)])
    root_bytes = u(1, 8) + A + u(1, 4) + b"f" + u(1, 4) + b"\x09"
    leaf_bytes = u(2, 8) + B + u(1, 4) + b"g" + u(0, 4)
    assert encode_call_spec(leaf) == leaf_bytes
    expected = root_bytes + u(1, 4) + leaf_bytes + u(0, 4)
    assert encode_tree(tree) == expected
    assert decode_tree(expected) == tree
    assert encode_path(CallPath.parse("1.3")) == u(2, 4) + u(1, 4) + u(3, 4)
    assert encode_path(CallPath.root()) == u(0, 4)


def test_event_golden():
    prefix = u(7, 32) + u(1, 8)
    tree = CallExecutionTree(FunctionCallSpec(1, A, "f"))
    start = StartEvent(7, 1, B, 21, tree)
    assert encode_event(start) == prefix + B + u(21, 8) + encode_tree(tree)

    segment = SegmentEvent(7, 1, CallPath((1,)), Outcome.SUCCESS, b"\x05", [A])
    assert encode_event(segment) == (
        prefix + u(1, 4) + u(1, 4) + b"\x01" + u(1, 4) + b"\x05" + u(1, 4) + A
    )
    assert encode_event(RootEvent(7, 1, Decision.COMMIT)) == prefix + b"\x01"
    assert encode_event(SignallingEvent(7, 1, [A, B])) == prefix + u(2, 4) + A + B

    for event in (start, segment, RootEvent(7, 1, Decision.ABORT), SignallingEvent(7, 1)):
        assert decode_event(event.kind, encode_event(event)) == event


def test_log_events():
    event = RootEvent(3, 2, Decision.ABORT)
    log = make_log_event(A, event)
    assert log.emitter == A
    assert log.topic == EventKind.ROOT.topic
    assert decode_log_event(log) == event
    assert decode_log_event(LogEvent(A, bytes(32), b"")) is None


def test_receipt_golden():
    log = LogEvent(A, b"\x11" * 32, b"pay")
    receipt = Receipt(b"\x22" * 32, TxStatus.SUCCESS, [log], error="ignored")
    expected = b"\x22" * 32 + b"\x01" + u(1, 4) + A + b"\x11" * 32 + u(3, 4) + b"pay"
    assert encode_receipt(receipt) == expected
    assert decode_receipt(expected) == receipt
    failed = Receipt(b"\x22" * 32, TxStatus.FAILURE)
    assert encode_receipt(failed) == b"\x22" * 32 + b"\x00" + u(0, 4)


def test_header_golden():
    header = BlockHeader(2, 3, 4, b"\x0a" * 32, b"\x0b" * 32)
    expected = u(2, 8) + u(3, 8) + u(4, 8) + b"\x0a" * 32 + b"\x0b" * 32
    assert encode_header(header) == expected
    assert decode_header(expected) == header
    assert header_message(header) == b"\x02" + expected


def test_messages_and_digests():
    log = LogEvent(A, b"\x11" * 32, b"")
    assert event_message(9, log) == b"\x01" + u(9, 8) + A + b"\x11" * 32 + u(0, 4)
    expected = hashlib.sha256(u(1, 8) + u(0, 8) + A + B + u(5, 4) + b"start").digest()
    assert transaction_digest(1, 0, A, B, "start") == expected
    assert transaction_digest(1, 1, A, B, "start") != expected
