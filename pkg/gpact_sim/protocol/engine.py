"""The off-chain coordinator.

`simulate_tree` executes business logic against a read-only view of the
chains to build the call execution tree. `plan_execution` turns the tree into
a schedule for the serial or parallel engine. `execute` then drives Start,
Segments, Root and Signalling through a `Lockstep` scheduler, in which every
participant is a generator yielding the transactions it submits in the
current period. Headers are relayed just in time before each step that needs
them.
"""

from __future__ import annotations
from attrs import define, field
from collections import Counter
from typing import Generator, Optional, Sequence
from gpact_sim.errors import (
    ApplicationError,
    ConfigError,
    NondeterministicTreeError,
    SimulationError,
    TreeSimulationError,
)
from gpact_sim.io.codec import Value, decode_return, encode_args, encode_return
from gpact_sim.model.attestation import AttestationMode
from gpact_sim.model.calltree import CallExecutionTree, CallPath, FunctionCallSpec
from gpact_sim.model.chain import Address, ChainId, LocatedEvent, Transaction, TxHandle, make_address
from gpact_sim.model.config import CrashPhase, EngineOrder
from gpact_sim.model.events import (
    Decision,
    EventKind,
    Role,
    RootEvent,
    StartEvent,
)
from gpact_sim.model.report import EnginePlan, RunReport, Step, TraceEntry
from gpact_sim.protocol.chain_sim import Simulation
from gpact_sim.protocol.contracts import BusinessContract, CallContext, business_contract
from gpact_sim.protocol.registrar import (
    RELAY_FUNCTION,
    attest,
    missing_headers,
    sign_header,
)
import logging

logger = logging.getLogger(__name__)

COORDINATOR = make_address("coordinator")
STRANGER = make_address("stranger")
RELAYER = make_address("relayer")


class TreeSimulation(CallContext):
    """Executes business logic against live state without changing it.

    Writes land in an overlay shared by the whole simulated call. Crosschain
    calls execute directly on the target chain and are recorded as children.
    """

    def __init__(
        self,
        sim: Simulation,
        chain: ChainId,
        caller: Address,
        overlay: dict[tuple[ChainId, Address], dict[bytes, bytes]],
    ):
        self.sim = sim
        self.chain = chain
        self.caller = caller
        self.overlay = overlay
        self.children: list[CallExecutionTree] = []

    @property
    def block_timestamp(self) -> int:
        raise NondeterministicTreeError(
            "Call tree depends on the block timestamp and cannot be simulated."
        )

    def contract(self, address: Address) -> BusinessContract:
        return business_contract(self.sim.chain(self.chain), address)

    def _check_unlocked(self, contract: BusinessContract):
        if contract.state.is_locked:
            raise TreeSimulationError(
                f"Simulation touches locked contract {contract.label} on chain "
                f"{contract.chain}."
            )

    def read(self, contract: BusinessContract, key: bytes) -> bytes:
        self._check_unlocked(contract)
        writes = self.overlay.get((contract.chain, contract.address), {})
        if key in writes:
            return writes[key]
        return contract.state.normal.get(key, b"")

    def write(self, contract: BusinessContract, key: bytes, value: bytes):
        self._check_unlocked(contract)
        self.overlay.setdefault((contract.chain, contract.address), {})[key] = value

    def cross_call(
        self, chain: ChainId, address: Address, function: str, *args: Value
    ) -> Optional[Value]:
        spec = FunctionCallSpec(chain, address, function, encode_args(args))
        callee = TreeSimulation(self.sim, chain, self.caller, self.overlay)
        value = callee.contract(address).function(function)(callee, *args)
        self.children.append(CallExecutionTree(spec, callee.children))
        return decode_return(encode_return(value))


def simulate_tree(
    sim: Simulation,
    chain: ChainId,
    address: Address,
    function: str,
    args: Sequence[Value] = (),
    caller: Address = COORDINATOR,
) -> CallExecutionTree:
    """Build the call execution tree of an entry-point call.

    Args:
        sim: Simulation providing the live state.
        chain: Root chain.
        address: Entry-point contract.
        function: Entry-point function.
        args: Entry-point arguments.
        caller: Account the call is simulated for.

    Returns:
        The tree with the expected arguments of every crosschain call.

    Raises:
        TreeSimulationError: If the call reverts, touches a locked contract or
            depends on the block timestamp.
    """
    ctx = TreeSimulation(sim, chain, caller, {})
    try:
        ctx.contract(address).function(function)(ctx, *args)
    except (ApplicationError, SimulationError) as exc:
        raise TreeSimulationError(f"Simulated call reverted: {exc}") from exc
    root = FunctionCallSpec(chain, address, function, encode_args(args))
    return CallExecutionTree(root, ctx.children)


def plan_execution(
    tree: CallExecutionTree,
    order: EngineOrder,
    mode: AttestationMode,
    conflicts: bool = False,
) -> EnginePlan:
    """Schedule the protocol steps for `tree`.

    The serial engine runs one segment per step in depth-first call order. The
    parallel engine runs all segments of one depth per step, deepest first.

    Raises:
        ConfigError: If the parallel engine is asked to run a tree whose
            same-depth segments conflict.
    """
    if order == EngineOrder.PARALLEL and conflicts:
        raise ConfigError("The parallel engine cannot run conflicting segments.")
    relay = mode == AttestationMode.HEADER
    steps = [Step(Role.START)]
    if order == EngineOrder.SERIAL:
        steps += [Step(Role.SEGMENT, (p,), relay) for p in tree.post_order()[:-1]]
    else:
        levels = tree.levels()
        steps += [
            Step(Role.SEGMENT, levels[depth], relay)
            for depth in sorted(levels, reverse=True)
            if depth > 0
        ]
    steps += [Step(Role.ROOT, relay=relay), Step(Role.SIGNALLING, relay=relay)]
    return EnginePlan(tree, order, mode, steps)


@define(frozen=True, eq=False)
class Submission:
    """A transaction a driver submits in the current period."""

    chain: ChainId
    tx: Transaction
    role: Optional[Role] = None
    path: Optional[CallPath] = None


Driver = Generator[list[Submission], Optional[list[TxHandle]], None]


class Lockstep:
    """Runs drivers period by period until all of them are exhausted.

    In each period every driver yields the submissions it wants included in
    that period. After the period's blocks are sealed each driver receives the
    handles of its own submissions.
    """

    def __init__(self, sim: Simulation, max_periods: int = 10_000):
        self.sim = sim
        self.max_periods = max_periods
        self._drivers: list[Driver] = []
        self._spawned: list[Driver] = []

    def spawn(self, driver: Driver):
        """Start `driver`. A driver spawned while a period is being assembled joins that period."""
        self._spawned.append(driver)

    def _step(self, drivers: list[Driver], replies: dict[int, list[TxHandle]]) -> list[tuple[Driver, list[Submission]]]:
        batch = []
        for driver in drivers:
            try:
                submissions = driver.send(replies.pop(id(driver), None))
            except StopIteration:
                self._drivers.remove(driver)
                continue
            batch.append((driver, submissions))
        return batch

    def run(self) -> int:
        """Run to completion, returning the number of periods advanced."""
        replies: dict[int, list[TxHandle]] = {}
        periods = 0
        while True:
            batch = self._step(list(self._drivers), replies)
            while self._spawned:
                spawned, self._spawned = self._spawned, []
                self._drivers.extend(spawned)
                batch += self._step(spawned, replies)
            if not batch:
                return periods
            for driver, submissions in batch:
                replies[id(driver)] = [
                    self.sim.submit_transaction(s.chain, s.tx) for s in submissions
                ]
            self.sim.advance_period()
            periods += 1
            if periods > self.max_periods:
                raise SimulationError(f"No termination after {self.max_periods} periods.")


@define(frozen=True)
class LoggedTx:
    """A protocol transaction submitted for a crosschain transaction."""

    handle: TxHandle
    role: Role
    path: Optional[CallPath]
    actor: str


@define
class CrosschainRun:
    """Shared bookkeeping of everyone driving one crosschain transaction.

    Attributes:
        sim: The simulation.
        plan: Engine plan of the transaction.
        tx_id: Transaction id.
        timeout_periods: Timeout relative to the Start period.
        coordinator: Coordinator account.
        log: Protocol transactions submitted so far.
    """

    sim: Simulation
    plan: EnginePlan
    tx_id: int
    timeout_periods: int
    coordinator: Address = COORDINATOR
    log: list[LoggedTx] = field(factory=list)

    @property
    def tree(self) -> CallExecutionTree:
        return self.plan.tree

    @property
    def root_chain(self) -> ChainId:
        return self.plan.tree.node.chain

    def _find(self, chain: ChainId, kind: EventKind):
        for located, event in self.sim.events(chain, kind):
            if event.tx_id == self.tx_id and event.root_chain == self.root_chain:
                yield located, event

    def start_event(self) -> Optional[tuple[LocatedEvent, StartEvent]]:
        """The finalized Start Event, if any."""
        return next(self._find(self.root_chain, EventKind.START), None)

    def root_event(self) -> Optional[tuple[LocatedEvent, RootEvent]]:
        """The finalized Root Event, if any."""
        return next(self._find(self.root_chain, EventKind.ROOT), None)

    def pending_signalling(self) -> dict[ChainId, list[LocatedEvent]]:
        """Chains still holding locks, with the Segment Events that took them."""
        pending: dict[ChainId, list[LocatedEvent]] = {}
        for chain in sorted(self.sim.chains):
            if chain == self.root_chain:
                continue
            if next(self._find(chain, EventKind.SIGNALLING), None) is not None:
                continue
            for located, event in self._find(chain, EventKind.SEGMENT):
                if event.locked_contracts:
                    pending.setdefault(chain, []).append(located)
        return pending


@define
class RunOptions:
    """Faults and helpers applied while executing a plan.

    Attributes:
        crash: Phase after which the coordinator stops.
        duplicates: Roles whose first transaction is submitted again, with the
            delay in periods.
        delay_root: Hold the root transaction until after the timeout.
        agents: Spawn the timeout agent when the coordinator crashes.
        setup: Extra transactions submitted with the Start transaction.
    """

    crash: Optional[CrashPhase] = None
    duplicates: dict[Role, int] = field(factory=dict)
    delay_root: bool = False
    agents: bool = True
    setup: list[Submission] = field(factory=list)


class _Participant:
    """Shared helpers of the coordinator and the timeout agent."""

    actor = "coordinator"

    def __init__(self, run: CrosschainRun, sender: Address):
        self.run = run
        self.sim = run.sim
        self.sender = sender

    @property
    def timeout(self) -> int:
        start = self.run.start_event()
        assert start is not None
        return start[1].timeout

    def _log(self, submissions: Sequence[Submission], handles: Sequence[TxHandle], actor: str):
        for submission, handle in zip(submissions, handles):
            if submission.role is not None:
                self.run.log.append(LoggedTx(handle, submission.role, submission.path, actor))

    def _submit(self, submissions: list[Submission]):
        handles = yield submissions
        self._log(submissions, handles, self.actor)
        return handles

    def _wait(self):
        yield []

    def _tx(self, chain: ChainId, function: str, *args) -> Transaction:
        control = self.sim.chain(chain).control
        return Transaction(self.sender, control.address, function, args)

    def _relays(self, needs: dict[ChainId, list[LocatedEvent]]) -> list[Submission]:
        submissions = []
        for dest in sorted(needs):
            registrar = self.sim.chain(dest).registrar
            for header in missing_headers(self.sim, dest, needs[dest]):
                signatures = sign_header(self.sim.signers[header.chain], header)
                tx = Transaction(RELAYER, registrar.address, RELAY_FUNCTION, (header, signatures))
                submissions.append(Submission(dest, tx, Role.RELAY))
        return submissions

    def _relay(self, needs: dict[ChainId, list[LocatedEvent]]):
        """Relay missing headers in one period. Returns `False` if a relay failed."""
        relays = self._relays(needs)
        if not relays:
            return True
        handles = yield from self._submit(relays)
        return all(self.sim.receipt(h).succeeded for h in handles)

    def _included(self, handle: TxHandle) -> Optional[LocatedEvent]:
        location = self.sim.locate(handle)
        if location is None or not location.receipt.succeeded:
            return None
        return LocatedEvent(location, 0)

    def _timeout_root(self):
        """Submit a root transaction after the timeout. Returns the Root Event."""
        while self.sim.period <= self.timeout:
            yield from self._wait()
        start = self.run.start_event()
        assert start is not None
        att = attest(self.sim, start[0])
        submission = Submission(self.run.root_chain, self._tx(self.run.root_chain, "root", att, ()), Role.ROOT)
        handles = yield from self._submit([submission])
        return self._included(handles[0])

    def _signal(self, root: LocatedEvent):
        """Signal every chain still holding locks. Returns `False` on failure."""
        pending = self.run.pending_signalling()
        if not pending:
            return True
        needs = {chain: [root] + events for chain, events in pending.items()}
        if not (yield from self._relay(needs)):
            return False
        root_att = attest(self.sim, root)
        submissions = [
            Submission(
                chain,
                self._tx(chain, "signalling", root_att, tuple(attest(self.sim, e) for e in events)),
                Role.SIGNALLING,
            )
            for chain, events in pending.items()
        ]
        handles = yield from self._submit(submissions)
        return all(self.sim.receipt(h).succeeded for h in handles)


class TimeoutAgent(_Participant):
    """Aborts a transaction abandoned by its coordinator.

    Once the timeout has passed the agent submits a root transaction (which
    aborts) if no Root Event exists yet, then signals every chain still
    holding locks.
    """

    actor = "agent"

    def __init__(self, run: CrosschainRun):
        super().__init__(run, STRANGER)

    def drive(self) -> Driver:
        if self.run.start_event() is None:
            logger.info("Timeout agent: %#x was never started.", self.run.tx_id)
            return
        root = self.run.root_event()
        if root is None:
            located = yield from self._timeout_root()
            if located is None:
                logger.warning("Timeout agent: root of %#x failed.", self.run.tx_id)
                return
        else:
            located = root[0]
        yield from self._signal(located)


class Coordinator(_Participant):
    """Drives a crosschain transaction from Start to Signalling."""

    def __init__(self, run: CrosschainRun, scheduler: Lockstep, options: RunOptions):
        super().__init__(run, run.coordinator)
        self.scheduler = scheduler
        self.options = options
        self._duplicated: set[Role] = set()

    def _submit(self, submissions: list[Submission]):
        batch = list(submissions)
        for submission in submissions:
            role = submission.role
            if role in self.options.duplicates and role not in self._duplicated:
                self._duplicated.add(role)
                delay = self.options.duplicates[role]
                logger.warning("Duplicating %s transaction after %d periods.", role.value, delay)
                if delay == 0:
                    batch.append(submission)
                else:
                    self.scheduler.spawn(self._replay(submission, delay))
        handles = yield batch
        count = len(submissions)
        self._log(batch[:count], handles[:count], self.actor)
        self._log(batch[count:], handles[count:], "replay")
        return handles[:count]

    def _replay(self, submission: Submission, delay: int) -> Driver:
        for _ in range(delay):
            yield []
        handles = yield [submission]
        self._log([submission], handles, "replay")

    def _crash(self, phase: CrashPhase) -> bool:
        if self.options.crash != phase:
            return False
        logger.warning("Coordinator of %#x crashed after %s.", self.run.tx_id, phase.value)
        if self.options.agents:
            self.scheduler.spawn(TimeoutAgent(self.run).drive())
        return True

    def _segment_step(self, step: Step, segments: dict[CallPath, LocatedEvent], start: LocatedEvent):
        """Run one segment step. Returns `False` if the transaction must abort."""
        tree = self.run.tree
        needs: dict[ChainId, list[LocatedEvent]] = {}
        calls = []
        for path in step.paths:
            subtree = tree.resolve(path)
            children = [segments[path.child(i)] for i in range(1, len(subtree.children) + 1)]
            needs.setdefault(subtree.node.chain, []).extend([start] + children)
            calls.append((path, subtree.node.chain, children))
        relays = self._relays(needs)
        if self.sim.period + (1 if relays else 0) > self.timeout:
            return False
        if not (yield from self._relay(needs)):
            return False
        start_att = attest(self.sim, start)
        submissions = [
            Submission(
                chain,
                self._tx(chain, "segment", start_att, path, tuple(attest(self.sim, c) for c in children)),
                Role.SEGMENT,
                path,
            )
            for path, chain, children in calls
        ]
        handles = yield from self._submit(submissions)
        ok = True
        for path, handle in zip(step.paths, handles):
            located = self._included(handle)
            if located is None:
                ok = False
            else:
                segments[path] = located
        return ok

    def _root(self, segments: dict[CallPath, LocatedEvent], start: LocatedEvent):
        """Submit the root transaction before the timeout. Returns the Root Event."""
        tree = self.run.tree
        children = [segments[CallPath((i,))] for i in range(1, len(tree.children) + 1)]
        needs = {self.run.root_chain: [start] + children}
        relays = self._relays(needs)
        if self.sim.period + (1 if relays else 0) > self.timeout:
            return None
        if not (yield from self._relay(needs)):
            return None
        child_atts = tuple(attest(self.sim, c) for c in children)
        tx = self._tx(self.run.root_chain, "root", attest(self.sim, start), child_atts)
        handles = yield from self._submit([Submission(self.run.root_chain, tx, Role.ROOT)])
        return self._included(handles[0])

    def drive(self) -> Driver:
        run = self.run
        if self._crash(CrashPhase.BEFORE_START):
            return
        start_tx = self._tx(run.root_chain, "start", run.tx_id, run.timeout_periods, run.tree)
        submissions = [Submission(run.root_chain, start_tx, Role.START)]
        handles = yield from self._submit(submissions + self.options.setup)
        if self._included(handles[0]) is None:
            logger.warning("Start of %#x was rejected.", run.tx_id)
            return
        start = run.start_event()
        assert start is not None
        start_located = start[0]
        if self._crash(CrashPhase.START):
            return

        segments: dict[CallPath, LocatedEvent] = {}
        ok = True
        for n, step in enumerate(run.plan.segment_steps):
            ok = yield from self._segment_step(step, segments, start_located)
            if not ok:
                break
            if n == 0 and self._crash(CrashPhase.SEGMENT):
                return
        if ok and not run.plan.segment_steps and self._crash(CrashPhase.SEGMENT):
            return
        if ok and self._crash(CrashPhase.SEGMENTS):
            return

        root = None
        if ok and not self.options.delay_root:
            root = yield from self._root(segments, start_located)
        if root is None:
            root = yield from self._timeout_root()
        if root is None:
            logger.warning("Root of %#x was rejected; giving up.", run.tx_id)
            return
        if self._crash(CrashPhase.ROOT):
            return
        yield from self._signal(root)


def build_report(sim: Simulation, run: CrosschainRun, scenario: str = "") -> RunReport:
    """Summarize a finished run."""
    trace = []
    for logged in run.log:
        location = sim.locate(logged.handle)
        if location is None:
            continue
        trace.append(
            TraceEntry(
                period=location.timestamp,
                chain=location.chain,
                role=logged.role,
                status=location.receipt.status,
                path=logged.path,
                actor=logged.actor,
            )
        )
    trace.sort(key=lambda e: (e.period, e.chain))
    protocol = [e for e in trace if not e.replay]
    starts = [e.period for e in protocol if e.role == Role.START]
    start_period = starts[0] if starts else 0
    periods = max(e.period for e in protocol) - start_period + 1 if protocol else 0
    counts = Counter(e.role.value for e in protocol)
    replays = sum(1 for e in trace if e.replay)
    if replays:
        counts["replay"] = replays
    root = run.root_event()
    outcome = root[1].decision if root is not None else Decision.ABORT
    return RunReport(
        scenario=scenario,
        mode=run.plan.attestation_mode,
        engine=run.plan.order,
        periods_elapsed=periods,
        tx_counts=dict(sorted(counts.items())),
        outcome=outcome,
        lock_residue=sim.lock_residue(),
        tx_id=run.tx_id,
        start_period=start_period,
        stalled=root is None and bool(starts),
        depth=run.tree.depth,
        trace=trace,
    )


def execute(
    sim: Simulation,
    plan: EnginePlan,
    tx_id: int,
    timeout_periods: int,
    options: Optional[RunOptions] = None,
    scenario: str = "",
) -> RunReport:
    """Drive one crosschain transaction to termination and report on it."""
    scheduler = Lockstep(sim)
    run = CrosschainRun(sim, plan, tx_id, timeout_periods)
    scheduler.spawn(Coordinator(run, scheduler, options or RunOptions()).drive())
    scheduler.run()
    return build_report(sim, run, scenario)


def execute_concurrently(
    sim: Simulation,
    runs: Sequence[tuple[EnginePlan, int, int]],
    options: Optional[RunOptions] = None,
    scenario: str = "",
) -> list[RunReport]:
    """Drive several crosschain transactions in the same periods.

    Args:
        sim: The simulation.
        runs: `(plan, tx_id, timeout_periods)` for every transaction.
        options: Faults applied to every coordinator.
        scenario: Scenario name for the reports.

    Returns:
        One report per transaction, in input order.
    """
    scheduler = Lockstep(sim)
    active = []
    for plan, tx_id, timeout_periods in runs:
        run = CrosschainRun(sim, plan, tx_id, timeout_periods)
        scheduler.spawn(Coordinator(run, scheduler, options or RunOptions()).drive())
        active.append(run)
    scheduler.run()
    return [build_report(sim, run, scenario) for run in active]
