import logging
from dataclasses import replace
from pathlib import Path
from typing import NamedTuple, Optional

import numpy as np

from . import artifacts
from .cost_model import annual_energy_mwh, representative_day_weights
from .evaluation import build_baselines, compile_report
from .models import (
    ALL_KEYS,
    DayProfile,
    RenewableSizingSolution,
    RunResult,
    SplitReport,
    StochasticModelSet,
)
from .optimizer import Key, ScenarioBundle, build_bundle, co_optimize, evaluate_cutoff
from .profiles import fit_models, ingest_series, sample_day
from .renewable_lp import (
    build_lp,
    emissions_reduction,
    fuel_savings,
    size_renewables,
    system_energy_savings,
)
from .schemas import DemandContext, InputsConfig, RegulatoryParams, ScenarioConfig, SizingParams
from .spectral_sizing import split_day

logger = logging.getLogger(__name__)

HOURS_PER_YEAR = 8760.0


class Histories(NamedTuple):
    load: list[DayProfile]
    pv_ratio: list[DayProfile]
    wind_speed: list[DayProfile]


class RepresentativeDays(NamedTuple):
    load: dict[Key, DayProfile]
    pv_unit: dict[Key, DayProfile]
    wind_unit: dict[Key, DayProfile]


def load_histories(inputs: InputsConfig) -> Histories:
    """
    Ingest the three history CSVs.

    Irradiance in W/m2 is divided by the reference irradiance, then every
    irradiance sample is clipped into [0, 1] as a PV output ratio.
    """
    interval = inputs.interval_hours
    load = ingest_series(inputs.load_csv, interval, non_negative=True)
    irradiance = ingest_series(inputs.irradiance_csv, interval)
    wind = ingest_series(inputs.wind_csv, interval, non_negative=True)
    scale = 1.0
    if inputs.irradiance_units == "w_per_m2":
        scale = 1.0 / inputs.irradiance_reference_w_per_m2
    pv_ratio = [day.with_samples(np.clip(day.values * scale, 0.0, 1.0)) for day in irradiance]
    logger.info("Ingested %d load, %d irradiance and %d wind days", len(load), len(pv_ratio), len(wind))
    return Histories(load, pv_ratio, wind)


def fit_stage(config: ScenarioConfig) -> StochasticModelSet:
    histories = load_histories(config.inputs)
    return fit_models(
        histories.load,
        histories.pv_ratio,
        histories.wind_speed,
        pv_max_mw=config.inputs.pv_max_mw,
        turbine=config.inputs.turbine,
    )


def representative_days(models: StochasticModelSet, seed: int) -> RepresentativeDays:
    """
    Sample one day per key; key i uses seed + i.

    PV and wind days are returned per MW installed.
    """
    load, pv_unit, wind_unit = {}, {}, {}
    pv_max = models.get(*ALL_KEYS[0]).pv.p_max_mw
    rated = models.get(*ALL_KEYS[0]).wind.turbine.rated_power_mw
    for index, key in enumerate(ALL_KEYS):
        load_day, pv_day, wind_day = sample_day(models, key, seed + index)
        load[key] = load_day
        pv_unit[key] = pv_day.with_samples(pv_day.values / pv_max if pv_max > 0 else pv_day.values * 0.0)
        wind_unit[key] = wind_day.with_samples(wind_day.values / rated)
    return RepresentativeDays(load, pv_unit, wind_unit)


def derive_context(ctx: DemandContext, load_days: dict[Key, DayProfile]) -> DemandContext:
    """Fill annual load energy, average load and peak load from the representative days."""
    weights = representative_day_weights()
    interval = next(iter(load_days.values())).interval_hours
    energy = annual_energy_mwh([(weights[key], load_days[key].values) for key in ALL_KEYS], interval)
    updates = {}
    if ctx.annual_load_mwh is None:
        updates["annual_load_mwh"] = energy
    if ctx.average_load_mw is None:
        updates["average_load_mw"] = energy / HOURS_PER_YEAR
    if ctx.peak_load_mw is None:
        updates["peak_load_mw"] = max(max(day.samples) for day in load_days.values())
    if updates:
        logger.info("Derived demand context: %s", {k: round(v, 4) for k, v in updates.items()})
    return ctx.model_copy(update=updates)


def cost_only_renewables(ctx: DemandContext, config: ScenarioConfig) -> RenewableSizingSolution:
    """
    Step 1 stand-in when mandates are ignored: no PV or wind, biomass at its
    cap and no NG threshold.
    """
    coeff = config.savings_coefficients
    capacities = [0.0, 0.0, ctx.biomass_cap_mw, 0.0]
    return RenewableSizingSolution(
        pv_mw=0.0,
        wind_mw=0.0,
        biomass_chp_mw=ctx.biomass_cap_mw,
        natural_gas_threshold_mw=0.0,
        fuel_savings_mmbtu=fuel_savings(capacities, coeff),
        emissions_reduction_tons=emissions_reduction(capacities, coeff),
        system_energy_savings_mwh=system_energy_savings(capacities, coeff),
    )


def step_one(config: ScenarioConfig, ctx: DemandContext) -> RenewableSizingSolution:
    if config.run.mode == "cost-only":
        return cost_only_renewables(ctx, config)
    return size_renewables(config.regulatory_params, config.savings_coefficients, ctx)


class Prepared(NamedTuple):
    models: StochasticModelSet
    days: RepresentativeDays
    context: DemandContext
    renewables: RenewableSizingSolution


def preflight(config: ScenarioConfig) -> DemandContext:
    """
    Ingest, fit and sample as a run does, then formulate Step 1 once.

    Raises:
        PlanningError: Whatever would stop a run before the search starts.
    """
    models = fit_stage(config)
    days = representative_days(models, config.run.seed)
    ctx = derive_context(config.demand_context, days.load)
    build_lp(config.regulatory_params, config.savings_coefficients, ctx)
    return ctx


def prepare(config: ScenarioConfig) -> Prepared:
    """Ingest, fit, sample representative days and solve Step 1."""
    models = fit_stage(config)
    days = representative_days(models, config.run.seed)
    ctx = derive_context(config.demand_context, days.load)
    return Prepared(models, days, ctx, step_one(config, ctx))


def scenario_bundle(config: ScenarioConfig, prepared: Prepared) -> ScenarioBundle:
    regulatory = config.regulatory_params
    if config.run.mode == "cost-only":
        regulatory = RegulatoryParams()
    return build_bundle(
        prepared.days.load,
        prepared.days.pv_unit,
        prepared.days.wind_unit,
        prepared.renewables,
        regulatory,
        config.savings_coefficients,
        prepared.context,
        config.cost_book,
        config.sizing_params,
        config.pso_config,
        seed=config.run.seed,
        mode=config.run.mode,
    )


def run_pipeline(config: ScenarioConfig, output_dir: Optional[Path] = None) -> RunResult:
    """
    Run the stages selected by `config.run.mode` and write their artifacts.

    Args:
        config (ScenarioConfig): Validated scenario.
        output_dir (Path): Overrides `config.run.output_dir`.

    Returns:
        RunResult: The record written to `result.json`.

    Raises:
        PlanningError: Any stage failure; infeasibility subclasses carry
            their certificate or best candidate.
    """
    mode = config.run.mode
    output_dir = artifacts.ensure_dir(output_dir or config.run.output_dir)
    prepared = prepare(config)
    artifacts.write_json(prepared.models, output_dir / artifacts.MODELS_FILE)

    if mode == "step1-only":
        result = RunResult(status="ok", mode=mode, renewables=prepared.renewables)
        artifacts.write_json(result, output_dir / artifacts.RESULT_FILE)
        return result

    bundle = scenario_bundle(config, prepared)
    if mode == "split-only":
        candidate = evaluate_cutoff(config.run.cutoff_hz, bundle)
        artifacts.write_split_csvs(candidate.splits, bundle.interval_hours, output_dir)
        result = RunResult(status="ok", mode=mode, renewables=prepared.renewables, candidate=candidate)
        artifacts.write_json(result, output_dir / artifacts.RESULT_FILE)
        return result

    outcome = co_optimize(bundle)
    evaluated = replace(bundle, regulatory=config.regulatory_params)
    baselines = build_baselines(evaluated, config.baselines.storage_cutoff_hz)
    report = compile_report(outcome, evaluated, baselines)

    result = RunResult(
        status="ok", mode=mode, renewables=prepared.renewables, co_optimization=outcome
    )
    artifacts.write_json(result, output_dir / artifacts.RESULT_FILE)
    artifacts.write_json(report, output_dir / artifacts.EVALUATION_FILE)
    artifacts.write_iterations(outcome.iteration_log, output_dir / artifacts.ITERATIONS_FILE)
    artifacts.write_split_csvs(outcome.final.splits, bundle.interval_hours, output_dir)
    artifacts.write_baselines(baselines, output_dir / artifacts.BASELINES_FILE, outcome.final)
    artifacts.write_report(report, output_dir / artifacts.REPORT_FILE)
    logger.info("Wrote artifacts to %s", output_dir)
    return result


def split_net_load(
    net_csv: Path,
    cutoff_hz: float,
    interval_hours: float,
    sizing: Optional[SizingParams] = None,
    output_dir: Path = Path("out"),
) -> SplitReport:
    """
    Split every day of a net-load CSV at one cut-off and write the results.

    Returns:
        SplitReport: Written to `split.json` next to one CSV per day.
    """
    sizing = sizing or SizingParams()
    days = ingest_series(net_csv, interval_hours)
    splits = [split_day(day, cutoff_hz, sizing) for day in days]
    labels = [day.day.isoformat() if day.day else f"day{index}" for index, day in enumerate(days)]
    report = SplitReport(
        cutoff_hz=cutoff_hz, interval_hours=interval_hours, labels=labels, splits=splits
    )
    output_dir = artifacts.ensure_dir(output_dir)
    artifacts.write_split_csvs(splits, interval_hours, output_dir, labels=labels)
    artifacts.write_json(report, output_dir / artifacts.SPLIT_FILE)
    return report
