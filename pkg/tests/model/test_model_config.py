"""Tests for the gpact_sim.model.config file."""
import pytest
from gpact_sim.errors import ConfigError
from gpact_sim.model.calltree import CallPath
from gpact_sim.model.config import (
    ChainConfig,
    CrashPhase,
    FaultSpec,
    ScenarioConfig,
    SimulationConfig,
)
from gpact_sim.model.events import Role


def test_chain_config():
    chain = ChainConfig(3, "C", signers=4, threshold=3)
    assert chain.threshold == 3
    with pytest.raises(ConfigError):
        ChainConfig(1, signers=2, threshold=3)
    with pytest.raises(ConfigError):
        ChainConfig(1, signers=0)


def test_simulation_config_defaults():
    config = SimulationConfig(chains=[ChainConfig(2, "B", signers=5, threshold=4)])
    assert config.chain_config(2).signers == 5
    fallback = config.chain_config(1, "A")
    assert (fallback.signers, fallback.threshold, fallback.name) == (3, 2, "A")
    with pytest.raises(ConfigError):
        SimulationConfig(chains=[ChainConfig(1), ChainConfig(1)])
    with pytest.raises(ConfigError):
        SimulationConfig(signers=1, threshold=2)


def test_fault_spec():
    assert str(FaultSpec(crash_coordinator_after=CrashPhase.BEFORE_START)) == "crash:before-start"
    assert str(FaultSpec(fail_segment_at=CallPath.parse("1.2"))) == "fail:1.2"
    assert str(FaultSpec(fail_segment_at=CallPath.root())) == "fail:root"
    assert str(FaultSpec(byzantine_signers=1)) == "byzantine:1"
    assert str(FaultSpec(duplicate=Role.ROOT, duplicate_delay=2)) == "duplicate:root@2"
    assert str(FaultSpec(delay_root=True)) == "delay-root"

    with pytest.raises(ConfigError):
        FaultSpec()
    with pytest.raises(ConfigError):
        FaultSpec(delay_root=True, byzantine_signers=1)
    with pytest.raises(ConfigError):
        FaultSpec(duplicate=Role.RELAY)


def test_scenario_config_properties():
    config = ScenarioConfig(
        "write",
        faults=[
            FaultSpec(crash_coordinator_after=CrashPhase.ROOT),
            FaultSpec(fail_segment_at=CallPath.parse("1")),
            FaultSpec(duplicate=Role.SEGMENT, duplicate_delay=1),
            FaultSpec(delay_root=True),
        ],
    )
    assert config.crash_phase == CrashPhase.ROOT
    assert config.failing_paths == [CallPath((1,))]
    assert config.duplicates == {Role.SEGMENT: 1}
    assert config.delay_root
    assert config.byzantine_signers == 0

    plain = ScenarioConfig("read")
    assert plain.crash_phase is None
    assert plain.failing_paths == []
    assert plain.duplicates == {}
    assert not plain.delay_root


def test_scenario_config_validation():
    with pytest.raises(ValueError):
        ScenarioConfig("unknown")
    with pytest.raises(ConfigError):
        ScenarioConfig("read", timeout_periods=0)
    with pytest.raises(ConfigError):
        ScenarioConfig(
            "read",
            faults=[
                FaultSpec(crash_coordinator_after=CrashPhase.START),
                FaultSpec(crash_coordinator_after=CrashPhase.ROOT),
            ],
        )
