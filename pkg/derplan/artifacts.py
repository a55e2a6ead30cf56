import logging
from pathlib import Path
from typing import Iterable, Type, TypeVar

import numpy as np
import pandas as pd
from pydantic import BaseModel

from .models import (
    BaselineLedger,
    CandidateRecord,
    EvaluationReport,
    IterationEntry,
    SplitResult,
    key_name,
)

logger = logging.getLogger(__name__)

RESULT_FILE = "result.json"
EVALUATION_FILE = "evaluation.json"
ITERATIONS_FILE = "iterations.jsonl"
BASELINES_FILE = "baselines.csv"
MODELS_FILE = "models.json"
SPLIT_FILE = "split.json"
REPORT_FILE = "report.txt"

Model = TypeVar("Model", bound=BaseModel)


def ensure_dir(output_dir: Path) -> Path:
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    return output_dir


def write_json(model: BaseModel, path: Path) -> Path:
    """
    Write a pydantic model as indented JSON.

    Args:
        model (BaseModel): Record to write.
        path (Path): Destination file.

    Returns:
        Path: The written path.
    """
    path = Path(path)
    path.write_text(model.model_dump_json(indent=2) + "\n", encoding="utf-8")
    logger.debug("Wrote %s", path)
    return path


def read_json(path: Path, model: Type[Model]) -> Model:
    return model.model_validate_json(Path(path).read_text(encoding="utf-8"))


def write_iterations(entries: Iterable[IterationEntry], path: Path) -> Path:
    """One JSON object per line, in iteration order."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for entry in entries:
            handle.write(entry.model_dump_json() + "\n")
    return path


def read_iterations(path: Path) -> list[IterationEntry]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    return [IterationEntry.model_validate_json(line) for line in lines if line.strip()]


def split_frame(split: SplitResult, interval_hours: float) -> pd.DataFrame:
    """Per-slot table of one split; the trace column holds E after each slot."""
    return pd.DataFrame(
        {
            "slot": np.arange(len(split.net_mw)),
            "hour": np.arange(len(split.net_mw)) * interval_hours,
            "net_mw": split.net_mw,
            "chp_mw": split.chp_mw,
            "bess_mw": split.bess_mw,
            "energy_trace_mwh": split.energy_trace_mwh[1:],
        }
    )


def split_filename(split: SplitResult, label: str | None = None) -> str:
    label = label or key_name(split.season, split.day_type)
    return f"split_{label.replace('/', '_')}.csv"


def write_split_csvs(
    splits: Iterable[SplitResult],
    interval_hours: float,
    output_dir: Path,
    labels: Iterable[str] | None = None,
) -> list[Path]:
    """One CSV per split, named by key or by the matching label."""
    output_dir = ensure_dir(output_dir)
    splits = list(splits)
    labels = list(labels) if labels is not None else [None] * len(splits)
    paths = []
    for split, label in zip(splits, labels):
        path = output_dir / split_filename(split, label)
        split_frame(split, interval_hours).to_csv(path, index=False, float_format="%.10g")
        paths.append(path)
    return paths


def baselines_frame(baselines: Iterable[BaselineLedger], candidate: CandidateRecord | None = None) -> pd.DataFrame:
    rows = [
        {
            "component": ledger.name,
            "capital": ledger.cost.capital_usd,
            "om": ledger.cost.om_usd,
            "fuel": ledger.cost.fuel_usd,
            "credit": ledger.cost.tax_credit_usd,
            "total": ledger.cost.total_usd,
        }
        for ledger in baselines
    ]
    if candidate is not None:
        cost = candidate.cost
        rows.append(
            {
                "component": "co_optimized",
                "capital": cost.capital_usd,
                "om": cost.om_usd,
                "fuel": cost.fuel_usd,
                "credit": cost.tax_credit_usd,
                "total": cost.total_usd,
            }
        )
    return pd.DataFrame(rows, columns=["component", "capital", "om", "fuel", "credit", "total"])


def write_baselines(
    baselines: Iterable[BaselineLedger], path: Path, candidate: CandidateRecord | None = None
) -> Path:
    baselines_frame(baselines, candidate).to_csv(path, index=False, float_format="%.10g")
    return Path(path)


def _percent(value: float) -> str:
    return f"{100.0 * value:.2f}%"


def _mark(ok: bool) -> str:
    return "yes" if ok else "NO"


def render_report(report: EvaluationReport) -> str:
    """
    Text tables of the system evaluation and the economic comparison.

    Args:
        report (EvaluationReport): Compiled evaluation.

    Returns:
        str: Report text ending in a newline.
    """
    checks = report.checks
    rows = [
        ("Fuel savings (MMBtu/yr)", f"{report.fuel_savings_mmbtu:.1f}", ""),
        ("CO2 reduction", _percent(report.co2_reduction), _mark(checks.get("co2_reduction", False))),
        (
            "System energy efficiency increase",
            _percent(report.energy_efficiency_increase),
            _mark(checks.get("efficiency_increase", False)),
        ),
        ("Renewable share", _percent(report.renewable_share), _mark(checks.get("renewable_share", False))),
        ("PV share", _percent(report.pv_share), _mark(checks.get("pv_share", False))),
        ("Utilization of renewable energy", _percent(report.ure), ""),
        ("Utilization (1 - NG/load)", _percent(report.ure_from_ng), ""),
    ]
    width = max(len(label) for label, _, _ in rows)
    lines = ["System evaluation", "-" * (width + 22)]
    lines += [f"{label:<{width}}  {value:>12}  {mark}".rstrip() for label, value, mark in rows]
    lines.append(f"{'DOE requirements met':<{width}}  {_mark(report.doe_pass):>12}")
    lines.append(f"{'Mandates met':<{width}}  {_mark(report.mandate_pass):>12}")
    if report.binding_caps:
        lines.append(f"Binding caps: {', '.join(report.binding_caps)}")

    ledgers = [("co_optimized", report.cost)] + [(ledger.name, ledger.cost) for ledger in report.baselines]
    lines += ["", "Economic comparison (USD/yr)", "-" * 82]
    lines.append(f"{'plan':<14}{'capital':>14}{'O&M':>14}{'fuel':>14}{'credit':>14}{'total':>12}")
    for name, cost in ledgers:
        lines.append(
            f"{name:<14}{cost.capital_usd:>14.0f}{cost.om_usd:>14.0f}{cost.fuel_usd:>14.0f}"
            f"{cost.tax_credit_usd:>14.0f}{cost.total_usd:>12.0f}"
        )
    per_mw = [(name, cost.per_mw_load) for name, cost in ledgers if cost.per_mw_load]
    if per_mw:
        lines += ["", "Per MW of peak critical load (USD/MW-yr)", "-" * 82]
        for name, values in per_mw:
            lines.append(
                f"{name:<14}{values['capital']:>14.0f}{values['om']:>14.0f}{values['fuel']:>14.0f}"
                f"{values['credit']:>14.0f}{values['total']:>12.0f}"
            )
    return "\n".join(lines) + "\n"


def write_report(report: EvaluationReport, path: Path) -> Path:
    Path(path).write_text(render_report(report), encoding="utf-8")
    return Path(path)
