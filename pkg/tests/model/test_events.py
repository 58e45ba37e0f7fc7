"""Tests for the gpact_sim.model.events file."""
import pytest
from gpact_sim.model.calltree import CallPath
from gpact_sim.model.chain import make_address
from gpact_sim.model.events import (
    CrosschainTxRecord,
    Decision,
    EventKind,
    Outcome,
    Role,
    RootDecision,
    SegmentEvent,
)


def test_event_topics():
    topics = {kind.topic for kind in EventKind}
    assert len(topics) == 4
    for kind in EventKind:
        assert len(kind.topic) == 32
        assert EventKind.from_topic(kind.topic) == kind
    assert EventKind.from_topic(bytes(32)) is None


def test_failed_segment_holds_no_locks():
    path = CallPath((1,))
    event = SegmentEvent(1, 1, path, Outcome.ERROR)
    assert not event.succeeded
    assert SegmentEvent(1, 1, path, Outcome.SUCCESS, b"", [make_address("x")]).succeeded
    with pytest.raises(ValueError):
        SegmentEvent(1, 1, path, Outcome.ERROR, b"", [make_address("x")])


def test_record_phase_guard():
    record = CrosschainTxRecord(tx_id=5, root_chain=1)
    path = CallPath.parse("1.1")
    assert not record.consumed(Role.SEGMENT, path)
    record.consume(Role.SEGMENT, path)
    assert record.consumed(Role.SEGMENT, path)
    assert not record.consumed(Role.SEGMENT, CallPath.parse("1.2"))
    assert not record.consumed(Role.ROOT, path)


def test_record_decides_once():
    record = CrosschainTxRecord(tx_id=5, root_chain=1)
    assert record.root_decision == RootDecision.PENDING
    record.decide(Decision.ABORT)
    assert record.root_decision == RootDecision.ABORT
    with pytest.raises(ValueError):
        record.decide(Decision.COMMIT)
