"""Read simulation and scenario configuration from YAML.

A configuration file has two top-level sections, `simulation` and `scenario`.
See `docs/config.md` for the full format. Faults can be given either as
mappings or in the compact string form used on the command line:

* `crash:<phase>` with phase one of `before-start`, `start`, `segment`,
  `segments`, `root`
* `fail:<path>` with a dotted call path or `root`
* `byzantine:<k>`
* `duplicate:<role>[@<delay>]`
* `delay-root`
"""

from __future__ import annotations
from enum import Enum
from pathlib import Path
from typing import Any, Optional, Type, TypeVar, Union
from gpact_sim.errors import ConfigError
from gpact_sim.model.attestation import AttestationMode
from gpact_sim.model.calltree import CallPath
from gpact_sim.model.config import (
    ChainConfig,
    CrashPhase,
    EngineOrder,
    FaultSpec,
    ScenarioConfig,
    SignatureSchemeName,
    SimulationConfig,
)
from gpact_sim.model.events import Role
import yaml

E = TypeVar("E", bound=Enum)

SIMULATION_KEYS = {
    "seed",
    "signature_scheme",
    "coordinator_only_segments",
    "signers",
    "threshold",
    "chains",
}
SCENARIO_KEYS = {
    "name",
    "attestation_mode",
    "engine",
    "timeout_periods",
    "faults",
    "retries",
    "conflicts",
    "agents",
    "params",
}


def _enum(cls: Type[E], value: Any, key: str) -> E:
    if isinstance(value, cls):
        return value
    try:
        return cls(value)
    except ValueError:
        choices = ", ".join(str(member.value) for member in cls)
        raise ConfigError(f"{key}: {value!r} is not one of {choices}.") from None


def _int(value: Any, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}: expected an integer, got {value!r}.")
    return value


def _bool(value: Any, key: str) -> bool:
    if not isinstance(value, bool):
        raise ConfigError(f"{key}: expected true or false, got {value!r}.")
    return value


def _mapping(value: Any, key: str) -> dict[str, Any]:
    if value is None:
        return {}
    if not isinstance(value, dict):
        raise ConfigError(f"{key}: expected a mapping, got {type(value).__name__}.")
    return value


def _check_keys(section: dict[str, Any], allowed: set[str], key: str):
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"{key}: unknown keys {', '.join(unknown)}.")


def _path(text: Any, key: str) -> CallPath:
    try:
        return CallPath.parse(str(text))
    except ValueError as exc:
        raise ConfigError(f"{key}: {exc}") from None


def parse_fault(text: str) -> FaultSpec:
    """Parse a fault in its compact string form.

    Raises:
        ConfigError: If the string is not a valid fault.
    """
    text = text.strip()
    if text == "delay-root":
        return FaultSpec(delay_root=True)
    kind, sep, arg = text.partition(":")
    if not sep or not arg:
        raise ConfigError(f"fault: cannot parse {text!r}.")
    if kind == "crash":
        return FaultSpec(crash_coordinator_after=_enum(CrashPhase, arg, "fault.crash"))
    if kind == "fail":
        return FaultSpec(fail_segment_at=_path(arg, "fault.fail"))
    if kind == "byzantine":
        if not arg.isdigit():
            raise ConfigError(f"fault.byzantine: {arg!r} is not a count.")
        return FaultSpec(byzantine_signers=int(arg))
    if kind == "duplicate":
        role, _, delay = arg.partition("@")
        if delay and not delay.isdigit():
            raise ConfigError(f"fault.duplicate: {delay!r} is not a delay.")
        return FaultSpec(
            duplicate=_enum(Role, role, "fault.duplicate"),
            duplicate_delay=int(delay) if delay else 0,
        )
    raise ConfigError(f"fault: unknown kind {kind!r}.")


def fault_from_mapping(data: Union[str, dict[str, Any]], key: str = "faults") -> FaultSpec:
    """Build a `FaultSpec` from a YAML entry (mapping or compact string)."""
    if isinstance(data, str):
        return parse_fault(data)
    data = _mapping(data, key)
    _check_keys(
        data,
        {
            "crash_coordinator_after",
            "fail_segment_at",
            "byzantine_signers",
            "duplicate",
            "duplicate_delay",
            "delay_root",
        },
        key,
    )
    kwargs: dict[str, Any] = {}
    if "crash_coordinator_after" in data:
        kwargs["crash_coordinator_after"] = _enum(
            CrashPhase, data["crash_coordinator_after"], f"{key}.crash_coordinator_after"
        )
    if "fail_segment_at" in data:
        kwargs["fail_segment_at"] = _path(data["fail_segment_at"], f"{key}.fail_segment_at")
    if "byzantine_signers" in data:
        kwargs["byzantine_signers"] = _int(data["byzantine_signers"], f"{key}.byzantine_signers")
    if "duplicate" in data:
        kwargs["duplicate"] = _enum(Role, data["duplicate"], f"{key}.duplicate")
    if "duplicate_delay" in data:
        kwargs["duplicate_delay"] = _int(data["duplicate_delay"], f"{key}.duplicate_delay")
    if "delay_root" in data:
        kwargs["delay_root"] = _bool(data["delay_root"], f"{key}.delay_root")
    return FaultSpec(**kwargs)


def simulation_from_dict(data: dict[str, Any]) -> SimulationConfig:
    """Build a `SimulationConfig` from the `simulation` section."""
    data = _mapping(data, "simulation")
    _check_keys(data, SIMULATION_KEYS, "simulation")
    chains = []
    for i, chain in enumerate(data.get("chains") or []):
        key = f"simulation.chains[{i}]"
        chain = _mapping(chain, key)
        _check_keys(chain, {"id", "name", "signers", "threshold"}, key)
        if "id" not in chain:
            raise ConfigError(f"{key}: missing id.")
        chains.append(
            ChainConfig(
                id=_int(chain["id"], f"{key}.id"),
                name=str(chain.get("name", "")),
                signers=_int(chain.get("signers", data.get("signers", 3)), f"{key}.signers"),
                threshold=_int(
                    chain.get("threshold", data.get("threshold", 2)), f"{key}.threshold"
                ),
            )
        )
    return SimulationConfig(
        chains=chains,
        signature_scheme=_enum(
            SignatureSchemeName,
            data.get("signature_scheme", SignatureSchemeName.KEYED_TAG.value),
            "simulation.signature_scheme",
        ),
        seed=_int(data.get("seed", 0), "simulation.seed"),
        coordinator_only_segments=_bool(
            data.get("coordinator_only_segments", True),
            "simulation.coordinator_only_segments",
        ),
        signers=_int(data.get("signers", 3), "simulation.signers"),
        threshold=_int(data.get("threshold", 2), "simulation.threshold"),
    )


def scenario_from_dict(data: dict[str, Any]) -> ScenarioConfig:
    """Build a `ScenarioConfig` from the `scenario` section."""
    data = _mapping(data, "scenario")
    _check_keys(data, SCENARIO_KEYS, "scenario")
    if "name" not in data:
        raise ConfigError("scenario: missing name.")
    faults = data.get("faults") or []
    if not isinstance(faults, list):
        raise ConfigError("scenario.faults: expected a list.")
    try:
        return ScenarioConfig(
            name=str(data["name"]),
            attestation_mode=_enum(
                AttestationMode,
                data.get("attestation_mode", AttestationMode.DIRECT.value),
                "scenario.attestation_mode",
            ),
            engine=_enum(
                EngineOrder, data.get("engine", EngineOrder.SERIAL.value), "scenario.engine"
            ),
            faults=[
                fault_from_mapping(fault, f"scenario.faults[{i}]")
                for i, fault in enumerate(faults)
            ],
            timeout_periods=_int(data.get("timeout_periods", 20), "scenario.timeout_periods"),
            retries=_int(data.get("retries", 1), "scenario.retries"),
            conflicts=_bool(data.get("conflicts", False), "scenario.conflicts"),
            agents=_bool(data.get("agents", True), "scenario.agents"),
            params=_mapping(data.get("params"), "scenario.params"),
        )
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(f"scenario: {exc}") from None


def config_from_dict(data: Optional[dict[str, Any]]) -> tuple[SimulationConfig, ScenarioConfig]:
    """Build both configuration objects from a parsed YAML document."""
    data = _mapping(data, "config")
    _check_keys(data, {"simulation", "scenario"}, "config")
    if "scenario" not in data:
        raise ConfigError("config: missing scenario section.")
    return simulation_from_dict(data.get("simulation") or {}), scenario_from_dict(data["scenario"])


def load_config(path: Union[str, Path]) -> tuple[SimulationConfig, ScenarioConfig]:
    """Load a YAML configuration file.

    Args:
        path: Path to the file.

    Returns:
        The simulation and scenario configurations.

    Raises:
        ConfigError: If the file is not valid YAML or contains invalid values.
    """
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from None
    return config_from_dict(data)


def dump_config(sim_config: SimulationConfig, scenario: ScenarioConfig) -> str:
    """Render configuration back to YAML, with faults in their compact form."""
    data = {
        "simulation": {
            "seed": sim_config.seed,
            "signature_scheme": sim_config.signature_scheme.value,
            "coordinator_only_segments": sim_config.coordinator_only_segments,
            "signers": sim_config.signers,
            "threshold": sim_config.threshold,
            "chains": [
                {"id": c.id, "name": c.name, "signers": c.signers, "threshold": c.threshold}
                for c in sim_config.chains
            ],
        },
        "scenario": {
            "name": scenario.name,
            "attestation_mode": scenario.attestation_mode.value,
            "engine": scenario.engine.value,
            "timeout_periods": scenario.timeout_periods,
            "faults": [str(f) for f in scenario.faults],
            "retries": scenario.retries,
            "conflicts": scenario.conflicts,
            "agents": scenario.agents,
            "params": dict(scenario.params),
        },
    }
    return yaml.safe_dump(data, sort_keys=False)
