"""This module exposes all high level APIs for gpact-sim."""

# Define package version.
# This is read dynamically by setuptools in setup.cfg to determine the release version.
__version__ = "0.1.0"

from gpact_sim.errors import (
    GpactError,
    ConfigError,
    SimulationError,
    ProtocolError,
    AttestationError,
    ApplicationError,
    TreeSimulationError,
    NondeterministicTreeError,
    PostStateError,
)
from gpact_sim.model.chain import BlockHeader, Receipt, LogEvent, Transaction
from gpact_sim.model.calltree import FunctionCallSpec, CallPath, CallExecutionTree
from gpact_sim.model.events import (
    StartEvent,
    SegmentEvent,
    RootEvent,
    SignallingEvent,
    Decision,
    Outcome,
)
from gpact_sim.model.attestation import AttestationMode, SignerSet, AttestedEvent
from gpact_sim.model.config import (
    ChainConfig,
    SimulationConfig,
    FaultSpec,
    ScenarioConfig,
    EngineOrder,
    CrashPhase,
)
from gpact_sim.model.report import RunReport
from gpact_sim.protocol.chain_sim import Simulation
from gpact_sim.protocol.engine import simulate_tree, plan_execution, execute
from gpact_sim.protocol.scenarios import run_scenario, run_single_chain
from gpact_sim.protocol.explore import explore_write
from gpact_sim.io.config import load_config, parse_fault
from gpact_sim.io.report import machine_line, render_text, latency_dataframe, latency_passed
from gpact_sim.io.main import run_config, load_archive
