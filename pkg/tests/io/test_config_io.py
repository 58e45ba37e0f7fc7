"""Tests for the gpact_sim.io.config file."""
import pytest
from gpact_sim.errors import ConfigError
from gpact_sim.io.config import (
    config_from_dict,
    dump_config,
    fault_from_mapping,
    load_config,
    parse_fault,
    scenario_from_dict,
    simulation_from_dict,
)
from gpact_sim.model.attestation import AttestationMode
from gpact_sim.model.calltree import CallPath
from gpact_sim.model.config import CrashPhase, EngineOrder, FaultSpec, SignatureSchemeName
from gpact_sim.model.events import Role
import yaml


def test_load_config(config_file):
    sim_config, scenario = load_config(config_file)
    assert sim_config.seed == 7
    assert sim_config.signature_scheme == SignatureSchemeName.KEYED_TAG
    assert (sim_config.signers, sim_config.threshold) == (4, 3)
    wallet = sim_config.chain_config(1)
    assert (wallet.name, wallet.signers, wallet.threshold) == ("Wallet", 5, 3)
    other = sim_config.chain_config(2, "Terms")
    assert (other.name, other.signers, other.threshold) == ("Terms", 4, 3)

    assert scenario.name == "trade"
    assert scenario.attestation_mode == AttestationMode.HEADER
    assert scenario.engine == EngineOrder.PARALLEL
    assert scenario.timeout_periods == 30
    assert scenario.crash_phase == CrashPhase.SEGMENTS
    assert scenario.duplicates == {Role.ROOT: 2}
    assert scenario.params == {"price": 3, "quantity": 4}


def test_load_minimal_config(write_config_file):
    sim_config, scenario = load_config(write_config_file)
    assert sim_config.seed == 0
    assert sim_config.chains == []
    assert scenario.name == "write"
    assert scenario.attestation_mode == AttestationMode.DIRECT
    assert scenario.engine == EngineOrder.SERIAL
    assert scenario.faults == []
    assert scenario.timeout_periods == 20


def test_dump_config_round_trip(config_file):
    sim_config, scenario = load_config(config_file)
    again = config_from_dict(yaml.safe_load(dump_config(sim_config, scenario)))
    assert again == (sim_config, scenario)


@pytest.mark.parametrize(
    "text,expected",
    [
        ("delay-root", FaultSpec(delay_root=True)),
        ("crash:root", FaultSpec(crash_coordinator_after=CrashPhase.ROOT)),
        ("crash:before-start", FaultSpec(crash_coordinator_after=CrashPhase.BEFORE_START)),
        ("fail:1.2", FaultSpec(fail_segment_at=CallPath((1, 2)))),
        ("fail:root", FaultSpec(fail_segment_at=CallPath.root())),
        ("byzantine:2", FaultSpec(byzantine_signers=2)),
        ("duplicate:segment", FaultSpec(duplicate=Role.SEGMENT)),
        ("duplicate:signalling@2", FaultSpec(duplicate=Role.SIGNALLING, duplicate_delay=2)),
    ],
)
def test_parse_fault(text, expected):
    fault = parse_fault(text)
    assert fault == expected
    assert parse_fault(str(fault)) == fault


@pytest.mark.parametrize(
    "text",
    [
        "",
        "crash",
        "crash:later",
        "fail:1.x",
        "byzantine:-1",
        "byzantine:0",
        "duplicate:relay",
        "duplicate:root@soon",
        "explode:now",
    ],
)
def test_parse_fault_errors(text):
    with pytest.raises(ConfigError):
        parse_fault(text)


def test_fault_from_mapping():
    assert fault_from_mapping({"fail_segment_at": "1.3"}) == FaultSpec(fail_segment_at=CallPath((1, 3)))
    assert fault_from_mapping("crash:start") == FaultSpec(crash_coordinator_after=CrashPhase.START)
    with pytest.raises(ConfigError, match="unknown keys"):
        fault_from_mapping({"explode": True})
    with pytest.raises(ConfigError):
        fault_from_mapping({"byzantine_signers": "two"})
    with pytest.raises(ConfigError):
        fault_from_mapping({"delay_root": True, "byzantine_signers": 1})


@pytest.mark.parametrize(
    "section",
    [
        {"seed": "x"},
        {"signers": 2, "threshold": 3},
        {"chains": [{"name": "A"}]},
        {"chains": [{"id": 1}, {"id": 1}]},
        {"signature_scheme": "rsa"},
        {"unknown": 1},
    ],
)
def test_simulation_errors(section):
    with pytest.raises(ConfigError):
        simulation_from_dict(section)


@pytest.mark.parametrize(
    "section",
    [
        {},
        {"name": "bridge"},
        {"name": "write", "engine": "eager"},
        {"name": "write", "timeout_periods": 0},
        {"name": "write", "faults": "crash:root"},
        {"name": "write", "faults": ["crash:root", "crash:start"]},
        {"name": "write", "agents": "yes"},
    ],
)
def test_scenario_errors(section):
    with pytest.raises(ConfigError):
        scenario_from_dict(section)


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="missing scenario"):
        config_from_dict({"simulation": {}})
    with pytest.raises(ConfigError):
        config_from_dict(["scenario"])
    path = tmp_path / "broken.yaml"
    path.write_text("scenario: [unclosed\n")
    with pytest.raises(ConfigError, match="invalid YAML"):
        load_config(path)
