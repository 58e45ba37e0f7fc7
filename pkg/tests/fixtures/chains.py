"""Fixtures that return simulations and deployed scenarios."""
import pytest
from gpact_sim.model.attestation import AttestationMode
from gpact_sim.model.calltree import CallExecutionTree, FunctionCallSpec
from gpact_sim.model.chain import make_address
from gpact_sim.model.config import ChainConfig
from gpact_sim.protocol.chain_sim import Simulation


@pytest.fixture
def direct_sim():
    """Two chains (1 and 2) attesting by direct signing."""
    return Simulation([ChainConfig(1, "A"), ChainConfig(2, "B")], AttestationMode.DIRECT)


@pytest.fixture
def header_sim():
    """Two chains (1 and 2) attesting by block header transfer."""
    return Simulation([ChainConfig(1, "A"), ChainConfig(2, "B")], AttestationMode.HEADER)


@pytest.fixture
def small_tree():
    """A root on chain 1 with a single child on chain 2."""
    return CallExecutionTree(
        FunctionCallSpec(1, make_address("root-contract", 1), "entry"),
        [CallExecutionTree(FunctionCallSpec(2, make_address("leaf-contract", 2), "leaf"))],
    )
