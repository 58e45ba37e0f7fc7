"""Engine plans and run reports."""

from __future__ import annotations
from attrs import define, field
from typing import Optional
from gpact_sim.model.attestation import AttestationMode
from gpact_sim.model.calltree import CallExecutionTree, CallPath
from gpact_sim.model.chain import Address, ChainId, TxStatus
from gpact_sim.model.config import EngineOrder
from gpact_sim.model.events import Decision, Role


@define(frozen=True)
class Step:
    """One period-grouped action of an engine plan.

    Attributes:
        role: Protocol role of the transactions in this step.
        paths: Tree nodes executed by the step. Signalling steps list none.
        relay: Whether headers needed by the step are relayed in a dedicated
            period first.
    """

    role: Role
    paths: tuple[CallPath, ...] = field(factory=tuple, converter=tuple)
    relay: bool = False


@define
class EnginePlan:
    """Schedule of protocol steps for one crosschain transaction.

    Attributes:
        tree: The call execution tree.
        order: Serial or parallel segment execution.
        attestation_mode: Direct signing or header transfer.
        steps: Ordered steps from Start to Signalling.
    """

    tree: CallExecutionTree
    order: EngineOrder
    attestation_mode: AttestationMode
    steps: list[Step] = field(factory=list)

    @property
    def segment_steps(self) -> list[Step]:
        """Steps executing non-root nodes."""
        return [step for step in self.steps if step.role == Role.SEGMENT]

    def schedule(self) -> list[str]:
        """Return the planned periods as labels, relays included."""
        labels = []
        for step in self.steps:
            if step.relay:
                labels.append("relay")
            if step.paths and step.role == Role.SEGMENT:
                paths = ",".join(str(p) for p in step.paths)
                labels.append(f"{step.role.value}[{paths}]")
            else:
                labels.append(step.role.value)
        return labels


@define(frozen=True)
class TraceEntry:
    """A protocol transaction as it was included on a chain.

    Attributes:
        period: Period of the including block.
        chain: Chain the transaction ran on.
        role: Protocol role.
        status: Receipt status.
        path: Tree node for segment transactions.
        actor: Who submitted it (`coordinator`, `agent` or `replay`).
    """

    period: int
    chain: ChainId
    role: Role
    status: TxStatus
    path: Optional[CallPath] = None
    actor: str = "coordinator"

    @property
    def replay(self) -> bool:
        """Return `True` for duplicated submissions."""
        return self.actor == "replay"


@define
class RunReport:
    """Result of running one scenario.

    Attributes:
        scenario: Scenario name.
        mode: Attestation mode.
        engine: Engine order.
        periods_elapsed: Periods from the Start transaction through the last
            protocol transaction, inclusive.
        tx_counts: Protocol transactions by role, relays included.
        outcome: Commit or abort.
        lock_residue: `(chain, contract)` pairs still locked at the end.
        tx_id: Transaction id (of the last round for multi-round runs).
        start_period: Period of the Start transaction.
        stalled: The run ended without a root decision.
        depth: Depth of the call execution tree.
        round_outcomes: Outcome of every round of a multi-round run.
        trace: Included protocol transactions in period order.
    """

    scenario: str
    mode: AttestationMode
    engine: EngineOrder
    periods_elapsed: int
    tx_counts: dict[str, int] = field(factory=dict)
    outcome: Decision = Decision.ABORT
    lock_residue: list[tuple[ChainId, Address]] = field(factory=list)
    tx_id: int = 0
    start_period: int = 0
    stalled: bool = False
    depth: int = 0
    round_outcomes: list[Decision] = field(factory=list)
    trace: list[TraceEntry] = field(factory=list, eq=False, repr=False)

    @property
    def committed(self) -> bool:
        """Return `True` if the transaction committed."""
        return self.outcome == Decision.COMMIT
