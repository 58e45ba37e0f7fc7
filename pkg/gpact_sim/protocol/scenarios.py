"""Business contracts and the workloads built from them.

* `read`: a reader on chain A fetches a value from chain B and stores it.
* `write`: a writer on chain A sets a value on chain B.
* `trade`: a trade executed from a wallet chain; terms logic fetches a price,
  moves payment and moves stock on three further chains.
* `livelock`: two transactions rooted on different chains, each locking the
  other's root contract.
* `timestamped`: a call tree that depends on the block timestamp, which the
  coordinator refuses to simulate.
"""

from __future__ import annotations
from attrs import define, field
from collections import Counter
from typing import Any, Callable, Optional, Sequence
from gpact_sim.errors import ConfigError, PostStateError, RevertError
from gpact_sim.model.calltree import CallExecutionTree, CallPath
from gpact_sim.model.chain import Address, ChainId, Transaction, TxStatus, make_address
from gpact_sim.model.config import ChainConfig, EngineOrder, ScenarioConfig, SimulationConfig
from gpact_sim.model.events import Decision
from gpact_sim.model.attestation import AttestationMode
from gpact_sim.model.report import RunReport
from gpact_sim.protocol.chain_sim import Simulation
from gpact_sim.protocol.contracts import BusinessContract, CallContext, exported, uint_bytes
from gpact_sim.protocol.engine import (
    COORDINATOR,
    RunOptions,
    Submission,
    execute,
    execute_concurrently,
    plan_execution,
    simulate_tree,
)
import hashlib
import logging

logger = logging.getLogger(__name__)

ADMIN = make_address("admin")
BUYER = make_address("buyer")
SELLER = make_address("seller")

VALUE = b"value"
TRADES = b"trades"


def balance_key(account: Address) -> bytes:
    return b"balance:" + account


def stock_key(account: Address) -> bytes:
    return b"stock:" + account


class ValueStore(BusinessContract):
    """Holds a single value."""

    @exported("getValue")
    def get_value(self, ctx: CallContext) -> int:
        self.require_active(ctx)
        return ctx.read_uint(self, VALUE)

    @exported("setValue")
    def set_value(self, ctx: CallContext, value: int):
        self.require_active(ctx)
        ctx.write_uint(self, VALUE, value)


class ValueReader(BusinessContract):
    """Copies a value from a remote `ValueStore` into its own storage."""

    def __init__(self, label: str, chain: ChainId, source: ValueStore):
        super().__init__(label, chain)
        self.source = (source.chain, source.address)

    @exported("readRemote")
    def read_remote(self, ctx: CallContext) -> int:
        self.require_active(ctx)
        value = ctx.cross_call(*self.source, "getValue")
        ctx.write_uint(self, VALUE, value)
        return value


class ValueWriter(BusinessContract):
    """Sets the value of a remote `ValueStore`."""

    def __init__(self, label: str, chain: ChainId, sink: ValueStore):
        super().__init__(label, chain)
        self.sink = (sink.chain, sink.address)

    @exported("writeRemote")
    def write_remote(self, ctx: CallContext, value: int):
        self.require_active(ctx)
        ctx.cross_call(*self.sink, "setValue", value)


class TimedOffer(BusinessContract):
    """Forwards the block timestamp to a remote `ValueStore`."""

    def __init__(self, label: str, chain: ChainId, sink: ValueStore):
        super().__init__(label, chain)
        self.sink = (sink.chain, sink.address)

    @exported("offer")
    def offer(self, ctx: CallContext):
        ctx.cross_call(*self.sink, "setValue", ctx.block_timestamp)


class PriceOracle(BusinessContract):
    @exported("getPrice")
    def get_price(self, ctx: CallContext) -> int:
        self.require_active(ctx)
        return ctx.read_uint(self, VALUE)

    @exported("setPrice")
    def set_price(self, ctx: CallContext, price: int):
        ctx.write_uint(self, VALUE, price)


class Balances(BusinessContract):
    @exported("transfer")
    def transfer(self, ctx: CallContext, sender: bytes, recipient: bytes, amount: int):
        self.require_active(ctx)
        available = ctx.read_uint(self, balance_key(sender))
        if available < amount:
            raise RevertError(f"Insufficient balance: {available} < {amount}.")
        ctx.write_uint(self, balance_key(sender), available - amount)
        received = ctx.read_uint(self, balance_key(recipient))
        ctx.write_uint(self, balance_key(recipient), received + amount)


class Stock(BusinessContract):
    @exported("delivery")
    def delivery(self, ctx: CallContext, sender: bytes, recipient: bytes, quantity: int):
        self.require_active(ctx)
        held = ctx.read_uint(self, stock_key(sender))
        if held < quantity:
            raise RevertError(f"Insufficient stock: {held} < {quantity}.")
        ctx.write_uint(self, stock_key(sender), held - quantity)
        ctx.write_uint(self, stock_key(recipient), ctx.read_uint(self, stock_key(recipient)) + quantity)


class TermsLogic(BusinessContract):
    """Settles a shipment: price lookup, payment and delivery."""

    def __init__(self, label: str, chain: ChainId, oracle: PriceOracle, balances: Balances, stock: Stock):
        super().__init__(label, chain)
        self.oracle = (oracle.chain, oracle.address)
        self.balances = (balances.chain, balances.address)
        self.stock = (stock.chain, stock.address)

    @exported("shipment")
    def shipment(self, ctx: CallContext, buyer: bytes, seller: bytes, quantity: int):
        self.require_active(ctx)
        price = ctx.cross_call(*self.oracle, "getPrice")
        ctx.cross_call(*self.balances, "transfer", buyer, seller, price * quantity)
        ctx.cross_call(*self.stock, "delivery", seller, buyer, quantity)


class TradeWallet(BusinessContract):
    """Entry point of a trade; only the authorized account may trade."""

    def __init__(self, label: str, chain: ChainId, logic: TermsLogic, authorized: Address):
        super().__init__(label, chain)
        self.logic = (logic.chain, logic.address)
        self.authorized = authorized

    @exported("executeTrade")
    def execute_trade(self, ctx: CallContext, buyer: bytes, seller: bytes, quantity: int):
        self.require_active(ctx)
        if ctx.caller != self.authorized:
            raise RevertError("Caller is not authorized to trade.")
        ctx.cross_call(*self.logic, "shipment", buyer, seller, quantity)
        ctx.write_uint(self, TRADES, ctx.read_uint(self, TRADES) + 1)


class LinkedValue(BusinessContract):
    """Sets its own value and the value of a peer on another chain."""

    peer: tuple[ChainId, Address]

    @exported("updateBoth")
    def update_both(self, ctx: CallContext, value: int):
        self.require_active(ctx)
        ctx.write_uint(self, VALUE, value)
        ctx.cross_call(*self.peer, "setValue", value)

    @exported("setValue")
    def set_value(self, ctx: CallContext, value: int):
        self.require_active(ctx)
        ctx.write_uint(self, VALUE, value)


@define
class Deployment:
    """Contracts deployed for a scenario and the storage they must end with.

    Attributes:
        scenario: Scenario name.
        contracts: Deployed business contracts by role.
        entry: `(role, function, args)` of the entry-point call.
        initial: Watched `(role, key)` slots and their values after deployment.
        committed: Expected values of the watched slots after a commit.
    """

    scenario: str
    contracts: dict[str, BusinessContract] = field(factory=dict)
    entry: tuple[str, str, tuple] = ("", "", ())
    initial: dict[tuple[str, bytes], int] = field(factory=dict)
    committed: dict[tuple[str, bytes], int] = field(factory=dict)

    def entry_call(self) -> tuple[ChainId, Address, str, tuple]:
        """`(chain, address, function, args)` of the entry-point call."""
        role, function, args = self.entry
        contract = self.contracts[role]
        return contract.chain, contract.address, function, args

    def values(self) -> dict[tuple[str, bytes], int]:
        """Current committed values of the watched slots."""
        return {(role, key): self.contracts[role].value(key) for role, key in self.initial}

    def verify(self, outcome: Decision):
        """Check watched storage against the expected post-state.

        Raises:
            PostStateError: If any watched slot holds an unexpected value.
        """
        expected = self.committed if outcome == Decision.COMMIT else self.initial
        actual = self.values()
        wrong = {slot: value for slot, value in actual.items() if expected[slot] != value}
        if wrong:
            raise PostStateError(
                f"{self.scenario}: unexpected storage after {outcome.name.lower()}: "
                + ", ".join(f"{role}[{key!r}]={value}" for (role, key), value in wrong.items())
            )


def _watch(deployment: Deployment, role: str, key: bytes, committed: Optional[int] = None):
    value = deployment.contracts[role].value(key)
    deployment.initial[(role, key)] = value
    deployment.committed[(role, key)] = value if committed is None else committed


def _seed_storage(contract: BusinessContract, values: dict[bytes, int]):
    for key, value in values.items():
        contract.state.normal[key] = uint_bytes(value)


def _chain_ids(roles: Sequence[str], chains: Optional[dict[str, ChainId]]) -> dict[str, ChainId]:
    if chains is None:
        return {role: i for i, role in enumerate(roles, start=1)}
    return chains


READ_CHAINS = ("A", "B")
TRADE_CHAINS = ("Wallet", "Terms", "PriceOracle", "Finance", "Logistics")
LIVELOCK_CHAINS = ("B1", "B2")


def deploy_read(sim: Simulation, params: dict[str, Any], chains: Optional[dict[str, ChainId]] = None) -> Deployment:
    """Deploy a value store on chain B and a reader on chain A."""
    ids = _chain_ids(READ_CHAINS, chains)
    source = ValueStore("value-source", ids["B"])
    reader = ValueReader("value-reader", ids["A"], source)
    sim.deploy(source)
    sim.deploy(reader)
    _seed_storage(source, {VALUE: int(params.get("value", 42))})
    deployment = Deployment("read", {"source": source, "reader": reader}, ("reader", "readRemote", ()))
    _watch(deployment, "source", VALUE)
    _watch(deployment, "reader", VALUE, committed=source.value(VALUE))
    return deployment


def deploy_write(sim: Simulation, params: dict[str, Any], chains: Optional[dict[str, ChainId]] = None) -> Deployment:
    """Deploy a writer on chain A and a value store on chain B."""
    ids = _chain_ids(READ_CHAINS, chains)
    sink = ValueStore("value-sink", ids["B"])
    writer = ValueWriter("value-writer", ids["A"], sink)
    sim.deploy(sink)
    sim.deploy(writer)
    _seed_storage(sink, {VALUE: int(params.get("initial", 0))})
    value = int(params.get("value", 42))
    deployment = Deployment("write", {"sink": sink, "writer": writer}, ("writer", "writeRemote", (value,)))
    _watch(deployment, "sink", VALUE, committed=value)
    return deployment


def deploy_timestamped(
    sim: Simulation, params: dict[str, Any], chains: Optional[dict[str, ChainId]] = None
) -> Deployment:
    """Deploy an offer contract on chain A forwarding timestamps to chain B."""
    ids = _chain_ids(READ_CHAINS, chains)
    sink = ValueStore("offer-sink", ids["B"])
    offer = TimedOffer("timed-offer", ids["A"], sink)
    sim.deploy(sink)
    sim.deploy(offer)
    deployment = Deployment("timestamped", {"sink": sink, "offer": offer}, ("offer", "offer", ()))
    _watch(deployment, "sink", VALUE)
    return deployment


def deploy_trade(sim: Simulation, params: dict[str, Any], chains: Optional[dict[str, ChainId]] = None) -> Deployment:
    """Deploy the five trade contracts on five chains.

    Params (with defaults): `price` (7), `quantity` (10), `buyer_balance`
    (1000), `seller_balance` (500), `seller_stock` (100), `buyer_stock` (0).
    """
    ids = _chain_ids(TRADE_CHAINS, chains)
    price = int(params.get("price", 7))
    quantity = int(params.get("quantity", 10))
    buyer_balance = int(params.get("buyer_balance", 1000))
    seller_balance = int(params.get("seller_balance", 500))
    seller_stock = int(params.get("seller_stock", 100))
    buyer_stock = int(params.get("buyer_stock", 0))

    oracle = PriceOracle("price-oracle", ids["PriceOracle"])
    balances = Balances("balances", ids["Finance"])
    stock = Stock("stock", ids["Logistics"])
    logic = TermsLogic("terms-logic", ids["Terms"], oracle, balances, stock)
    wallet = TradeWallet("trade-wallet", ids["Wallet"], logic, COORDINATOR)
    for contract in (wallet, logic, oracle, balances, stock):
        sim.deploy(contract)
    _seed_storage(oracle, {VALUE: price})
    _seed_storage(balances, {balance_key(BUYER): buyer_balance, balance_key(SELLER): seller_balance})
    _seed_storage(stock, {stock_key(SELLER): seller_stock, stock_key(BUYER): buyer_stock})

    amount = price * quantity
    deployment = Deployment(
        "trade",
        {"wallet": wallet, "logic": logic, "oracle": oracle, "balances": balances, "stock": stock},
        ("wallet", "executeTrade", (BUYER, SELLER, quantity)),
    )
    _watch(deployment, "balances", balance_key(BUYER), buyer_balance - amount)
    _watch(deployment, "balances", balance_key(SELLER), seller_balance + amount)
    _watch(deployment, "stock", stock_key(SELLER), seller_stock - quantity)
    _watch(deployment, "stock", stock_key(BUYER), buyer_stock + quantity)
    _watch(deployment, "wallet", TRADES, 1)
    _watch(deployment, "oracle", VALUE)
    return deployment


def deploy_livelock(sim: Simulation, params: dict[str, Any], chains: Optional[dict[str, ChainId]] = None) -> Deployment:
    """Deploy two linked contracts, C1 on B1 and C2 on B2."""
    ids = _chain_ids(LIVELOCK_CHAINS, chains)
    c1 = LinkedValue("linked-1", ids["B1"])
    c2 = LinkedValue("linked-2", ids["B2"])
    c1.peer = (c2.chain, c2.address)
    c2.peer = (c1.chain, c1.address)
    sim.deploy(c1)
    sim.deploy(c2)
    _seed_storage(c1, {VALUE: int(params.get("initial", 0))})
    _seed_storage(c2, {VALUE: int(params.get("initial", 0))})
    deployment = Deployment("livelock", {"c1": c1, "c2": c2}, ("c1", "updateBoth", (1,)))
    _watch(deployment, "c1", VALUE)
    _watch(deployment, "c2", VALUE)
    return deployment


DEPLOYERS: dict[str, Callable[..., Deployment]] = {
    "read": deploy_read,
    "write": deploy_write,
    "trade": deploy_trade,
    "livelock": deploy_livelock,
    "timestamped": deploy_timestamped,
}
SCENARIO_CHAINS = {
    "read": READ_CHAINS,
    "write": READ_CHAINS,
    "timestamped": READ_CHAINS,
    "trade": TRADE_CHAINS,
    "livelock": LIVELOCK_CHAINS,
}


def make_tx_id(seed: int, scenario: str, index: int) -> int:
    """Deterministic 256-bit transaction id."""
    return int.from_bytes(hashlib.sha256(f"{seed}:{scenario}:{index}".encode()).digest(), "big")


def build_simulation(config: ScenarioConfig, sim_config: Optional[SimulationConfig] = None) -> Simulation:
    """Create the chains a scenario runs on.

    Raises:
        ConfigError: If more signers are faulty than a chain has.
    """
    sim_config = sim_config if sim_config is not None else SimulationConfig()
    chains = [
        sim_config.chain_config(i, name)
        for i, name in enumerate(SCENARIO_CHAINS[config.name], start=1)
    ]
    byzantine = config.byzantine_signers
    for chain in chains:
        if byzantine > chain.signers:
            raise ConfigError(
                f"byzantine_signers={byzantine} exceeds the {chain.signers} signers "
                f"of chain {chain.id}."
            )
        if byzantine > chain.signers - chain.threshold:
            logger.warning(
                "Chain %d cannot reach its threshold with %d faulty signers; "
                "attestations will fail.",
                chain.id,
                byzantine,
            )
    return Simulation(chains, config.attestation_mode, sim_config, byzantine)


def pause_submissions(tree: CallExecutionTree, paths: Sequence[CallPath]) -> list[Submission]:
    """Admin transactions pausing the contracts at `paths`."""
    submissions = []
    for path in paths:
        node = tree.resolve(path).node
        tx = Transaction(ADMIN, node.contract, "setPaused", (1,))
        submissions.append(Submission(node.chain, tx))
        logger.warning("Injecting failure at %s on chain %d.", path, node.chain)
    return submissions


def run_options(config: ScenarioConfig, tree: CallExecutionTree) -> RunOptions:
    """Translate a scenario's faults into engine options."""
    return RunOptions(
        crash=config.crash_phase,
        duplicates=config.duplicates,
        delay_root=config.delay_root,
        agents=config.agents,
        setup=pause_submissions(tree, config.failing_paths),
    )


def run_scenario(
    config: ScenarioConfig,
    sim_config: Optional[SimulationConfig] = None,
    sim: Optional[Simulation] = None,
) -> RunReport:
    """Deploy, simulate, execute and verify one scenario.

    Args:
        config: The scenario.
        sim_config: Chain-level settings.
        sim: A fresh simulation from `build_simulation`, for callers that
            want to inspect the chains afterwards.

    Raises:
        TreeSimulationError: If the call tree cannot be simulated.
        PostStateError: If storage does not match the outcome.
    """
    if config.name == "livelock":
        return run_livelock(config, sim_config, sim)
    seed = sim_config.seed if sim_config is not None else 0
    sim = sim if sim is not None else build_simulation(config, sim_config)
    deployment = DEPLOYERS[config.name](sim, config.params)
    chain, address, function, args = deployment.entry_call()
    tree = simulate_tree(sim, chain, address, function, args, caller=COORDINATOR)
    plan = plan_execution(tree, config.engine, config.attestation_mode, config.conflicts)
    report = execute(
        sim,
        plan,
        make_tx_id(seed, config.name, 0),
        config.timeout_periods,
        run_options(config, tree),
        scenario=config.name,
    )
    deployment.verify(report.outcome)
    logger.info(
        "%s/%s/%s: %s after %d periods.",
        config.name,
        config.attestation_mode.value,
        config.engine.value,
        report.outcome.name.lower(),
        report.periods_elapsed,
    )
    return report


def run_livelock(
    config: ScenarioConfig,
    sim_config: Optional[SimulationConfig] = None,
    sim: Optional[Simulation] = None,
) -> RunReport:
    """Run the cross-locking pair of transactions for `config.retries` rounds.

    In every round T1 (rooted at C1) and T2 (rooted at C2) are started in the
    same period, so each one's segment locks the other's root contract.
    """
    seed = sim_config.seed if sim_config is not None else 0
    sim = sim if sim is not None else build_simulation(config, sim_config)
    deployment = deploy_livelock(sim, config.params)
    c1, c2 = deployment.contracts["c1"], deployment.contracts["c2"]
    outcomes: list[Decision] = []
    counts: Counter = Counter()
    periods = 0
    rounds: list[RunReport] = []
    for round_index in range(config.retries):
        runs = []
        for n, (contract, value) in enumerate(((c1, 1), (c2, 2))):
            tree = simulate_tree(sim, contract.chain, contract.address, "updateBoth", (value,))
            plan = plan_execution(tree, config.engine, config.attestation_mode, config.conflicts)
            runs.append((plan, make_tx_id(seed, "livelock", 2 * round_index + n), config.timeout_periods))
        reports = execute_concurrently(sim, runs, RunOptions(agents=config.agents), "livelock")
        decisions = [r.outcome for r in reports]
        outcomes.extend(decisions)
        for report in reports:
            counts.update(report.tx_counts)
        periods += max(r.periods_elapsed for r in reports)
        if all(d == Decision.ABORT for d in decisions):
            deployment.verify(Decision.ABORT)
        logger.info(
            "Livelock round %d: %s.",
            round_index + 1,
            ", ".join(d.name.lower() for d in decisions),
        )
        rounds.extend(reports)
    last = rounds[-1]
    return RunReport(
        scenario="livelock",
        mode=config.attestation_mode,
        engine=config.engine,
        periods_elapsed=periods,
        tx_counts=dict(sorted(counts.items())),
        outcome=Decision.COMMIT if all(d == Decision.COMMIT for d in outcomes) else Decision.ABORT,
        lock_residue=sim.lock_residue(),
        tx_id=last.tx_id,
        start_period=min(r.start_period for r in rounds[:2]),
        stalled=any(r.stalled for r in rounds),
        depth=last.depth,
        round_outcomes=outcomes,
        trace=sorted((entry for r in rounds for entry in r.trace), key=lambda e: (e.period, e.chain)),
    )


def run_single_chain(name: str, params: Optional[dict[str, Any]] = None) -> RunReport:
    """Run a scenario's business logic as one plain transaction on one chain.

    All contracts are deployed on chain 1, so crosschain calls become local
    calls. Used to compare transaction counts with the crosschain runs.
    """
    if name not in ("read", "write", "trade"):
        raise ConfigError(f"No single-chain variant of {name!r}.")
    params = params or {}
    sim = Simulation([ChainConfig(1, "single")])
    deployment = DEPLOYERS[name](sim, params, {role: 1 for role in SCENARIO_CHAINS[name]})
    chain, address, function, args = deployment.entry_call()
    handle = sim.submit_transaction(chain, Transaction(COORDINATOR, address, function, args))
    sim.advance_period()
    receipt = sim.receipt(handle)
    outcome = Decision.COMMIT if receipt.status == TxStatus.SUCCESS else Decision.ABORT
    deployment.verify(outcome)
    return RunReport(
        scenario=name,
        mode=AttestationMode.DIRECT,
        engine=EngineOrder.SERIAL,
        periods_elapsed=1,
        tx_counts={"single": 1},
        outcome=outcome,
        lock_residue=sim.lock_residue(),
    )


LATENCY_SCENARIOS = ("read", "write", "trade")


def latency_configs() -> list[ScenarioConfig]:
    """Fault-free runs of every latency scenario, engine and attestation mode."""
    return [
        ScenarioConfig(name, attestation_mode=mode, engine=engine)
        for name in LATENCY_SCENARIOS
        for engine in EngineOrder
        for mode in AttestationMode
    ]


def run_latency_table(sim_config: Optional[SimulationConfig] = None) -> list[RunReport]:
    """Run every configuration of `latency_configs`."""
    return [run_scenario(config, sim_config) for config in latency_configs()]
