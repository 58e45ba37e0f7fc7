"""Canonical byte encoding of everything that is hashed, signed or compared.

Fields are concatenated in declaration order. Integers are big-endian and
fixed width (`u8`, `u32`, `u64`, `u256`), addresses are 20 raw bytes, digests
32 raw bytes, variable-length byte strings are prefixed by a `u32` length and
lists by a `u32` item count. See `docs/encoding.md` for the frozen layouts.
"""

from __future__ import annotations
from typing import Callable, Iterable, Optional, TypeVar, Union
from gpact_sim.model.calltree import CallExecutionTree, CallPath, FunctionCallSpec
from gpact_sim.model.chain import (
    ADDRESS_SIZE,
    DIGEST_SIZE,
    Address,
    BlockHeader,
    ChainId,
    LogEvent,
    Receipt,
    TxStatus,
)
from gpact_sim.model.events import (
    Decision,
    EventKind,
    Outcome,
    ProtocolEvent,
    RootEvent,
    SegmentEvent,
    SignallingEvent,
    StartEvent,
)
import hashlib

T = TypeVar("T")
Value = Union[int, bytes]

VALUE_UINT = 0
VALUE_BYTES = 1

EVENT_MESSAGE = 1
HEADER_MESSAGE = 2


def digest(data: bytes) -> bytes:
    """SHA-256 digest used throughout the simulator."""
    return hashlib.sha256(data).digest()


class Encoder:
    """Accumulates canonical fields. Methods return `self` for chaining."""

    def __init__(self):
        self._parts: list[bytes] = []

    def uint(self, value: int, width: int) -> Encoder:
        if value < 0 or value >= 1 << (8 * width):
            raise ValueError(f"{value} does not fit in {width} bytes.")
        self._parts.append(value.to_bytes(width, "big"))
        return self

    def u8(self, value: int) -> Encoder:
        return self.uint(value, 1)

    def u32(self, value: int) -> Encoder:
        return self.uint(value, 4)

    def u64(self, value: int) -> Encoder:
        return self.uint(value, 8)

    def u256(self, value: int) -> Encoder:
        return self.uint(value, 32)

    def fixed(self, data: bytes, size: int) -> Encoder:
        if len(data) != size:
            raise ValueError(f"Expected {size} bytes, got {len(data)}.")
        self._parts.append(bytes(data))
        return self

    def address(self, data: Address) -> Encoder:
        return self.fixed(data, ADDRESS_SIZE)

    def digest(self, data: bytes) -> Encoder:
        return self.fixed(data, DIGEST_SIZE)

    def bytes(self, data: bytes) -> Encoder:
        self.u32(len(data))
        self._parts.append(bytes(data))
        return self

    def text(self, value: str) -> Encoder:
        return self.bytes(value.encode("utf-8"))

    def sequence(self, items: Iterable[T], write: Callable[[Encoder, T], object]) -> Encoder:
        items = list(items)
        self.u32(len(items))
        for item in items:
            write(self, item)
        return self

    def getvalue(self) -> bytes:
        return b"".join(self._parts)


class Decoder:
    """Reads canonical fields back from a byte string."""

    def __init__(self, data: bytes):
        self._data = bytes(data)
        self._offset = 0

    def _take(self, size: int) -> bytes:
        end = self._offset + size
        if end > len(self._data):
            raise ValueError("Truncated canonical encoding.")
        chunk = self._data[self._offset : end]
        self._offset = end
        return chunk

    def uint(self, width: int) -> int:
        return int.from_bytes(self._take(width), "big")

    def u8(self) -> int:
        return self.uint(1)

    def u32(self) -> int:
        return self.uint(4)

    def u64(self) -> int:
        return self.uint(8)

    def u256(self) -> int:
        return self.uint(32)

    def fixed(self, size: int) -> bytes:
        return self._take(size)

    def address(self) -> Address:
        return self._take(ADDRESS_SIZE)

    def digest(self) -> bytes:
        return self._take(DIGEST_SIZE)

    def bytes(self) -> bytes:
        return self._take(self.u32())

    def text(self) -> str:
        return self.bytes().decode("utf-8")

    def sequence(self, read: Callable[[Decoder], T]) -> list[T]:
        return [read(self) for _ in range(self.u32())]

    def finish(self):
        """Raise if unread bytes remain."""
        if self._offset != len(self._data):
            raise ValueError("Trailing bytes after canonical encoding.")


# Argument values


def _write_value(enc: Encoder, value: Value):
    if isinstance(value, (bytes, bytearray)):
        enc.u8(VALUE_BYTES).bytes(bytes(value))
    elif isinstance(value, int):
        enc.u8(VALUE_UINT).u256(value)
    else:
        raise TypeError(f"Cannot encode argument of type {type(value).__name__}.")


def _read_value(dec: Decoder) -> Value:
    tag = dec.u8()
    if tag == VALUE_UINT:
        return dec.u256()
    if tag == VALUE_BYTES:
        return dec.bytes()
    raise ValueError(f"Unknown value tag {tag}.")


def encode_args(values: Iterable[Value]) -> bytes:
    """Encode a function argument list."""
    return Encoder().sequence(values, _write_value).getvalue()


def decode_args(data: bytes) -> list[Value]:
    """Decode a function argument list."""
    dec = Decoder(data)
    values = dec.sequence(_read_value)
    dec.finish()
    return values


def encode_return(value: Optional[Value]) -> bytes:
    """Encode a return value; `None` encodes to the empty string."""
    if value is None:
        return b""
    enc = Encoder()
    _write_value(enc, value)
    return enc.getvalue()


def decode_return(data: bytes) -> Optional[Value]:
    """Decode a return value produced by `encode_return`."""
    if not data:
        return None
    dec = Decoder(data)
    value = _read_value(dec)
    dec.finish()
    return value


# Call trees


def _write_spec(enc: Encoder, spec: FunctionCallSpec):
    enc.u64(spec.chain).address(spec.contract).text(spec.function)
    enc.bytes(spec.expected_args)


def _read_spec(dec: Decoder) -> FunctionCallSpec:
    return FunctionCallSpec(
        chain=dec.u64(),
        contract=dec.address(),
        function=dec.text(),
        expected_args=dec.bytes(),
    )


def _write_tree(enc: Encoder, tree: CallExecutionTree):
    _write_spec(enc, tree.node)
    enc.sequence(tree.children, _write_tree)


def _read_tree(dec: Decoder) -> CallExecutionTree:
    node = _read_spec(dec)
    return CallExecutionTree(node=node, children=dec.sequence(_read_tree))


def _write_path(enc: Encoder, path: CallPath):
    enc.sequence(path.indices, Encoder.u32)


def _read_path(dec: Decoder) -> CallPath:
    return CallPath(dec.sequence(Decoder.u32))


def encode_call_spec(spec: FunctionCallSpec) -> bytes:
    """Encode a single call spec."""
    enc = Encoder()
    _write_spec(enc, spec)
    return enc.getvalue()


def encode_tree(tree: CallExecutionTree) -> bytes:
    """Encode a call execution tree."""
    enc = Encoder()
    _write_tree(enc, tree)
    return enc.getvalue()


def decode_tree(data: bytes) -> CallExecutionTree:
    """Decode a call execution tree."""
    dec = Decoder(data)
    tree = _read_tree(dec)
    dec.finish()
    return tree


def encode_path(path: CallPath) -> bytes:
    """Encode a call path."""
    enc = Encoder()
    _write_path(enc, path)
    return enc.getvalue()


# Protocol events


def encode_event(event: ProtocolEvent) -> bytes:
    """Encode the payload of a protocol event."""
    enc = Encoder().u256(event.tx_id).u64(event.root_chain)
    if isinstance(event, StartEvent):
        enc.address(event.coordinator).u64(event.timeout)
        _write_tree(enc, event.tree)
    elif isinstance(event, SegmentEvent):
        _write_path(enc, event.path)
        enc.u8(int(event.outcome)).bytes(event.return_value)
        enc.sequence(event.locked_contracts, Encoder.address)
    elif isinstance(event, RootEvent):
        enc.u8(int(event.decision))
    elif isinstance(event, SignallingEvent):
        enc.sequence(event.unlocked_contracts, Encoder.address)
    else:
        raise TypeError(f"Not a protocol event: {event!r}.")
    return enc.getvalue()


def decode_event(kind: EventKind, payload: bytes) -> ProtocolEvent:
    """Decode the payload of a protocol event of the given kind."""
    dec = Decoder(payload)
    tx_id, root_chain = dec.u256(), dec.u64()
    event: ProtocolEvent
    if kind == EventKind.START:
        coordinator, timeout = dec.address(), dec.u64()
        event = StartEvent(tx_id, root_chain, coordinator, timeout, _read_tree(dec))
    elif kind == EventKind.SEGMENT:
        path = _read_path(dec)
        outcome = Outcome(dec.u8())
        return_value = dec.bytes()
        locked = dec.sequence(Decoder.address)
        event = SegmentEvent(tx_id, root_chain, path, outcome, return_value, locked)
    elif kind == EventKind.ROOT:
        event = RootEvent(tx_id, root_chain, Decision(dec.u8()))
    else:
        event = SignallingEvent(tx_id, root_chain, dec.sequence(Decoder.address))
    dec.finish()
    return event


def make_log_event(emitter: Address, event: ProtocolEvent) -> LogEvent:
    """Wrap a protocol event into a log entry emitted by `emitter`."""
    return LogEvent(emitter=emitter, topic=event.kind.topic, payload=encode_event(event))


def decode_log_event(log: LogEvent) -> Optional[ProtocolEvent]:
    """Decode a log entry, returning `None` for non-protocol topics."""
    kind = EventKind.from_topic(log.topic)
    if kind is None:
        return None
    return decode_event(kind, log.payload)


# Chain data


def _write_log(enc: Encoder, log: LogEvent):
    enc.address(log.emitter).digest(log.topic).bytes(log.payload)


def _read_log(dec: Decoder) -> LogEvent:
    return LogEvent(emitter=dec.address(), topic=dec.digest(), payload=dec.bytes())


def encode_receipt(receipt: Receipt) -> bytes:
    """Encode a receipt. The diagnostic error text is not encoded."""
    enc = Encoder().digest(receipt.tx_digest).u8(int(receipt.status))
    enc.sequence(receipt.events, _write_log)
    return enc.getvalue()


def decode_receipt(data: bytes) -> Receipt:
    """Decode a receipt."""
    dec = Decoder(data)
    tx_digest, status = dec.digest(), TxStatus(dec.u8())
    receipt = Receipt(tx_digest, status, dec.sequence(_read_log))
    dec.finish()
    return receipt


def encode_header(header: BlockHeader) -> bytes:
    """Encode a block header."""
    enc = Encoder().u64(header.chain).u64(header.height).u64(header.timestamp)
    return enc.digest(header.receipt_root).digest(header.parent_digest).getvalue()


def decode_header(data: bytes) -> BlockHeader:
    """Decode a block header."""
    dec = Decoder(data)
    header = BlockHeader(
        chain=dec.u64(),
        height=dec.u64(),
        timestamp=dec.u64(),
        receipt_root=dec.digest(),
        parent_digest=dec.digest(),
    )
    dec.finish()
    return header


def header_digest(header: BlockHeader) -> bytes:
    """Digest linking a header to its successor."""
    return digest(encode_header(header))


def transaction_digest(
    chain: ChainId, sequence: int, sender: Address, to: Address, function: str
) -> bytes:
    """Digest identifying a submitted transaction."""
    enc = Encoder().u64(chain).u64(sequence).address(sender).address(to)
    return digest(enc.text(function).getvalue())


def event_message(source_chain: ChainId, log: LogEvent) -> bytes:
    """Message signed by direct-signing attestors."""
    enc = Encoder().u8(EVENT_MESSAGE).u64(source_chain)
    _write_log(enc, log)
    return enc.getvalue()


def header_message(header: BlockHeader) -> bytes:
    """Message signed by header relayers."""
    return Encoder().u8(HEADER_MESSAGE).getvalue() + encode_header(header)
