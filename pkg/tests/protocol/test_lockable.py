"""Tests for the gpact_sim.protocol.lockable file."""
import numpy as np
import pytest
from gpact_sim.errors import ContractLockedError
from gpact_sim.model.chain import make_address
from gpact_sim.model.events import Decision
from gpact_sim.model.storage import LockableContractState, LockHolder
from gpact_sim.protocol import lockable
from gpact_sim.protocol.lockable import CrosschainContext

KEYS = [b"k0", b"k1", b"k2"]
HOLDERS = [(1, 10), (1, 11), (2, 10)]


@pytest.fixture
def state():
    return LockableContractState(make_address("contract", 1))


def test_plain_access(state):
    assert lockable.read(state, b"k") == b""
    lockable.write(state, b"k", b"v")
    assert lockable.read(state, b"k") == b"v"
    assert not state.is_locked


def test_crosschain_write_locks(state):
    locked = []
    ctx = CrosschainContext(1, 10, on_lock=locked.append)
    lockable.write(state, b"k", b"v", ctx)
    assert state.lock == LockHolder(1, 10)
    assert locked == [state.address]
    assert state.normal == {}
    assert lockable.read_in_crosschain(state, b"k", ctx) == b"v"

    with pytest.raises(ContractLockedError):
        lockable.read(state, b"k")
    with pytest.raises(ContractLockedError):
        lockable.write(state, b"k", b"w")
    other = CrosschainContext(2, 10)
    with pytest.raises(ContractLockedError):
        lockable.read_in_crosschain(state, b"k", other)
    with pytest.raises(ContractLockedError):
        lockable.write(state, b"k", b"w", other)


@pytest.mark.parametrize("decision, expected", [(Decision.COMMIT, b"v"), (Decision.ABORT, b"")])
def test_signal(state, decision, expected):
    ctx = CrosschainContext(1, 10)
    lockable.write(state, b"k", b"v", ctx)
    with pytest.raises(ContractLockedError):
        lockable.signal(state, decision, 11, 1)
    lockable.signal(state, decision, 10, 1)
    assert not state.is_locked
    assert state.provisional == {}
    assert lockable.read(state, b"k") == expected
    with pytest.raises(ContractLockedError):
        lockable.signal(state, decision, 10, 1)


def test_copy_is_independent(state):
    lockable.write(state, b"k", b"v")
    copy = state.copy()
    lockable.write(copy, b"k", b"w")
    assert lockable.read(state, b"k") == b"v"


class EpisodeModel:
    """Reference model: one open episode of buffered writes, applied at commit."""

    def __init__(self):
        self.committed = {}
        self.episode = None
        self.writes = []

    def _blocked(self, holder=None):
        return self.episode is not None and self.episode != holder

    def read(self, key):
        if self.episode is not None:
            return "locked"
        return self.committed.get(key, b"")

    def write(self, key, value):
        if self.episode is not None:
            return "locked"
        self.committed[key] = value

    def xread(self, holder, key):
        if self._blocked(holder):
            return "locked"
        for k, v in reversed(self.writes if self.episode == holder else []):
            if k == key:
                return v
        return self.committed.get(key, b"")

    def xwrite(self, holder, key, value):
        if self._blocked(holder):
            return "locked"
        self.episode = holder
        self.writes.append((key, value))

    def signal(self, holder, decision):
        if self.episode != holder:
            return "locked"
        if decision == Decision.COMMIT:
            for key, value in self.writes:
                self.committed[key] = value
        self.episode, self.writes = None, []


def apply(state, op, *args):
    try:
        if op == "read":
            return lockable.read(state, *args)
        if op == "write":
            return lockable.write(state, *args)
        if op == "xread":
            holder, key = args
            return lockable.read_in_crosschain(state, key, CrosschainContext(*holder))
        if op == "xwrite":
            holder, key, value = args
            return lockable.write(state, key, value, CrosschainContext(*holder))
        holder, decision = args
        return lockable.signal(state, decision, holder[1], holder[0])
    except ContractLockedError:
        return "locked"


def test_matches_episode_model():
    rng = np.random.default_rng(2023)
    ops = ["read", "write", "xread", "xwrite", "signal"]
    for _ in range(10_000):
        state = LockableContractState(make_address("oracle"))
        model = EpisodeModel()
        for _ in range(int(rng.integers(1, 25))):
            op = ops[int(rng.integers(len(ops)))]
            key = KEYS[int(rng.integers(len(KEYS)))]
            value = bytes([int(rng.integers(256))])
            holder = HOLDERS[int(rng.integers(len(HOLDERS)))]
            if op == "read":
                args = (key,)
            elif op == "write":
                args = (key, value)
            elif op == "xread":
                args = (holder, key)
            elif op == "xwrite":
                args = (holder, key, value)
            else:
                args = (holder, Decision(int(rng.integers(2))))
            expected = getattr(model, op)(*args)
            assert apply(state, op, *args) == expected, (op, args)
        assert state.normal == model.committed
        assert state.is_locked == (model.episode is not None)
