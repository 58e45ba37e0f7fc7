"""Command line interface: `gpact run`, `gpact latency`, `gpact check`, `gpact batch`."""

from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from typing import Optional
from gpact_sim import __version__
from gpact_sim.errors import GpactError
from gpact_sim.io.archive import write_archive
from gpact_sim.io.config import load_config, parse_fault
from gpact_sim.io.report import latency_dataframe, latency_passed, machine_line, render_text
from gpact_sim.model.attestation import AttestationMode
from gpact_sim.model.config import (
    SCENARIO_NAMES,
    EngineOrder,
    ScenarioConfig,
    SimulationConfig,
)
from gpact_sim.protocol.explore import MIN_INTERLEAVINGS, explore_write, random_scenario, run_checked
from gpact_sim.protocol.scenarios import build_simulation, run_latency_table, run_scenario
import attrs
import click
import logging
import numpy as np


def _configure_logging(verbose: int):
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")


@click.group()
@click.version_option(__version__, prog_name="gpact")
@click.option("-v", "--verbose", count=True, help="Log INFO (-v) or DEBUG (-vv) messages.")
def cli(verbose: int):
    """Simulate atomic crosschain transactions."""
    _configure_logging(verbose)


@cli.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--scenario", type=click.Choice(SCENARIO_NAMES))
@click.option("--mode", type=click.Choice([m.value for m in AttestationMode]))
@click.option("--engine", type=click.Choice([e.value for e in EngineOrder]))
@click.option("--fault", "faults", multiple=True, help="Fault such as crash:root or fail:1.")
@click.option("--timeout", type=int, help="Timeout in periods after Start.")
@click.option("--seed", type=int)
@click.option("--report", "report_format", type=click.Choice(["text", "machine"]), default="text")
@click.option("--trace", is_flag=True, help="Include the transaction trace in text reports.")
@click.option("--archive", type=click.Path(dir_okay=False), help="Write an HDF5 archive.")
def run(
    config_path: Optional[str],
    scenario: Optional[str],
    mode: Optional[str],
    engine: Optional[str],
    faults: tuple[str, ...],
    timeout: Optional[int],
    seed: Optional[int],
    report_format: str,
    trace: bool,
    archive: Optional[str],
):
    """Run one scenario. Command line options override the config file."""
    try:
        if config_path is not None:
            sim_config, config = load_config(config_path)
        else:
            if scenario is None:
                raise click.UsageError("Give --scenario or --config.")
            sim_config, config = SimulationConfig(), ScenarioConfig(scenario)
        overrides: dict[str, object] = {}
        if scenario is not None:
            overrides["name"] = scenario
        if mode is not None:
            overrides["attestation_mode"] = AttestationMode(mode)
        if engine is not None:
            overrides["engine"] = EngineOrder(engine)
        if faults:
            overrides["faults"] = [parse_fault(f) for f in faults]
        if timeout is not None:
            overrides["timeout_periods"] = timeout
        config = attrs.evolve(config, **overrides)
        if seed is not None:
            sim_config = attrs.evolve(sim_config, seed=seed)
        sim = build_simulation(config, sim_config)
        report = run_scenario(config, sim_config, sim)
    except GpactError as exc:
        raise click.ClickException(str(exc))
    if archive is not None:
        write_archive(archive, sim, [report], sim_config, config)
    if report_format == "machine":
        click.echo(machine_line(report))
    else:
        click.echo(render_text(report, trace=trace))


@cli.command()
@click.option("--seed", type=int, default=0)
def latency(seed: int):
    """Measure latency in periods for every scenario, engine and mode."""
    table = latency_dataframe(run_latency_table(SimulationConfig(seed=seed)))
    click.echo(table.to_string())
    if not latency_passed(table):
        raise click.ClickException("Measured periods differ from the expected values.")


@cli.command()
@click.option("--timeout", type=int, default=8, help="Timeout in periods after Start.")
def check(timeout: int):
    """Run the write scenario under every fault combination."""
    result = explore_write(timeout_periods=timeout)
    for violation in result.violations:
        click.echo(f"VIOLATION {violation}", err=True)
    click.echo(f"{result.runs} runs, {result.distinct} distinct interleavings")
    if not result.ok:
        raise click.ClickException(f"{len(result.violations)} violations.")
    if result.distinct < MIN_INTERLEAVINGS:
        raise click.ClickException(f"Only {result.distinct} distinct interleavings, expected {MIN_INTERLEAVINGS}.")


@cli.command()
@click.option("--runs", type=int, default=1000)
@click.option("--seed", type=int, default=0)
@click.option("--workers", type=int, default=4)
def batch(runs: int, seed: int, workers: int):
    """Randomized fault-injected liveness runs."""
    rng = np.random.default_rng(seed)
    sim_config = SimulationConfig(seed=seed)
    configs = [random_scenario(rng, sim_config) for _ in range(runs)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        results = list(pool.map(lambda c: run_checked(c, sim_config), configs))
    violations = [v for result in results for v in result]
    for violation in violations:
        click.echo(f"VIOLATION {violation}", err=True)
    click.echo(f"{runs} runs, {len(violations)} violations")
    if violations:
        raise click.ClickException(f"{len(violations)} violations.")


if __name__ == "__main__":
    cli()
