"""Render run reports as text, machine lines and pandas tables."""

from __future__ import annotations
from typing import Iterable, Sequence
from gpact_sim.model.attestation import AttestationMode
from gpact_sim.model.config import EngineOrder
from gpact_sim.model.report import RunReport
import pandas as pd

# Finalised block periods per scenario for (serial, direct), (serial, header),
# (parallel, direct) and (parallel, header).
EXPECTED_PERIODS: dict[str, tuple[int, int, int, int]] = {
    "read": (3, 5, 3, 5),
    "write": (4, 7, 4, 7),
    "trade": (7, 13, 5, 9),
}
CELL_ORDER = (
    (EngineOrder.SERIAL, AttestationMode.DIRECT),
    (EngineOrder.SERIAL, AttestationMode.HEADER),
    (EngineOrder.PARALLEL, AttestationMode.DIRECT),
    (EngineOrder.PARALLEL, AttestationMode.HEADER),
)


def format_tx_counts(counts: dict[str, int]) -> str:
    """`role=count` pairs sorted by role and joined with `;`."""
    return ";".join(f"{role}={counts[role]}" for role in sorted(counts))


def machine_line(report: RunReport) -> str:
    """One CSV line: `scenario,mode,engine,periods,outcome,txCounts`."""
    return ",".join(
        [
            report.scenario,
            report.mode.value,
            report.engine.value,
            str(report.periods_elapsed),
            report.outcome.name.lower(),
            format_tx_counts(report.tx_counts),
        ]
    )


def render_text(report: RunReport, trace: bool = False) -> str:
    """Human-readable summary of a run, optionally with the full trace."""
    lines = [
        f"scenario:  {report.scenario}",
        f"mode:      {report.mode.value}",
        f"engine:    {report.engine.value}",
        f"outcome:   {report.outcome.name.lower()}",
        f"periods:   {report.periods_elapsed}",
        f"txs:       {format_tx_counts(report.tx_counts) or '-'}",
    ]
    if report.round_outcomes:
        rounds = ", ".join(d.name.lower() for d in report.round_outcomes)
        lines.append(f"rounds:    {rounds}")
    if report.stalled:
        lines.append("stalled:   no root decision")
    if report.lock_residue:
        locked = ", ".join(f"{chain}:{address.hex()[:8]}" for chain, address in report.lock_residue)
        lines.append(f"locked:    {locked}")
    if trace:
        lines.append("trace:")
        for entry in report.trace:
            path = f" {entry.path}" if entry.path is not None else ""
            lines.append(
                f"  period {entry.period:>3}  chain {entry.chain}  "
                f"{entry.role.value}{path}  {entry.status.name.lower()}  ({entry.actor})"
            )
    return "\n".join(lines)


def reports_to_dataframe(reports: Iterable[RunReport]) -> pd.DataFrame:
    """One row per report with tx counts spread into `tx_<role>` columns."""
    rows = []
    for report in reports:
        row = dict(
            scenario=report.scenario,
            mode=report.mode.value,
            engine=report.engine.value,
            periods=report.periods_elapsed,
            outcome=report.outcome.name.lower(),
            depth=report.depth,
            stalled=report.stalled,
            locked=len(report.lock_residue),
        )
        row.update({f"tx_{role}": count for role, count in report.tx_counts.items()})
        rows.append(row)
    df = pd.DataFrame(rows)
    tx_columns = sorted(c for c in df.columns if c.startswith("tx_"))
    if tx_columns:
        df[tx_columns] = df[tx_columns].fillna(0).astype(int)
    return df


def latency_dataframe(reports: Sequence[RunReport]) -> pd.DataFrame:
    """Compare measured periods against `EXPECTED_PERIODS`.

    Returns:
        A frame indexed by scenario with a `(engine-mode, expected|measured|result)`
        column hierarchy. `result` is `PASS` or `FAIL`.
    """
    measured = {(r.scenario, r.engine, r.mode): r.periods_elapsed for r in reports}
    rows = []
    for scenario, expected in EXPECTED_PERIODS.items():
        for (engine, mode), value in zip(CELL_ORDER, expected):
            got = measured.get((scenario, engine, mode))
            rows.append(
                dict(
                    scenario=scenario,
                    cell=f"{engine.value}-{mode.value}",
                    expected=value,
                    measured=got,
                    result="PASS" if got == value else "FAIL",
                )
            )
    df = pd.DataFrame(rows)
    return (
        df.set_index(["scenario", "cell"])
        .unstack(level="cell")
        .swaplevel(0, 1, axis=1)
        .sort_index(axis=1)
        .reindex(list(EXPECTED_PERIODS))
    )


def latency_passed(table: pd.DataFrame) -> bool:
    """Return `True` if every cell of a `latency_dataframe` passed."""
    return bool((table.xs("result", axis=1, level=1) == "PASS").all().all())
