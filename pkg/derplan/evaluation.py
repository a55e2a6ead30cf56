import logging
from typing import Optional, Sequence

import numpy as np

from .cost_model import (
    Dispatch,
    annual_energy_mwh,
    capital_recovery_factor,
    total_annualized_cost,
)
from .errors import ConfigError, DomainError
from .models import (
    ALL_KEYS,
    AnnualCostReport,
    AnnualEnergy,
    BaselineLedger,
    CoOptimizationResult,
    EvaluationReport,
    RenewableSizingSolution,
)
from .optimizer import (
    CAPACITY_TOLERANCE,
    CutoffSearch,
    ScenarioBundle,
    dispatch_series,
    evaluate_cutoff,
    with_renewables,
)
from .renewable_lp import emissions_reduction, fuel_savings, size_renewables, system_energy_savings
from .schemas import DER_CLASSES, DemandContext, RegulatoryParams, SavingsCoefficients

logger = logging.getLogger(__name__)

COMPLIANCE_TOLERANCE = 1e-12


def renewable_utilization(natural_gas_mwh: float, load_mwh: float) -> float:
    """
    Utilization of renewable energy, 1 - E_NG / E_load.

    Raises:
        DomainError: If the load energy is not positive.
    """
    if load_mwh <= 0.0:
        raise DomainError("renewable utilization needs positive load energy")
    return 1.0 - natural_gas_mwh / load_mwh


def system_indices(
    capacities: Sequence[float],
    reg: RegulatoryParams,
    coeff: SavingsCoefficients,
    ctx: DemandContext,
) -> dict[str, float]:
    """Savings and share indices for capacities ordered pv, wind, biomass, NG."""
    pv, wind, biomass, natural_gas = (float(value) for value in capacities)
    emissions_base = ctx.base_emissions_tons_per_mw * (ctx.average_load_mw or 0.0)
    energy_base = (ctx.annual_load_mwh or 0.0) + ctx.annual_thermal_load_mwh
    renewable = pv + wind + biomass
    pv_denominator = pv + wind + (biomass if reg.pv_share_includes_biomass else 0.0)

    def ratio(numerator: float, denominator: float) -> float:
        return numerator / denominator if denominator > 0.0 else 0.0

    return {
        "fuel_savings_mmbtu": fuel_savings(capacities, coeff),
        "co2_reduction": ratio(emissions_reduction(capacities, coeff), emissions_base),
        "energy_efficiency_increase": ratio(system_energy_savings(capacities, coeff), energy_base),
        "renewable_share": ratio(renewable, renewable + natural_gas),
        "pv_share": ratio(pv, pv_denominator),
    }


def _meets(value: float, floor: float) -> bool:
    return bool(value >= floor - COMPLIANCE_TOLERANCE)


def doe_compliance(co2_reduction: float, efficiency_increase: float, reg: RegulatoryParams) -> bool:
    """True when both the CO2 reduction and the efficiency increase reach their floors."""
    return _meets(co2_reduction, reg.co2_reduction_floor) and _meets(
        efficiency_increase, reg.efficiency_increase_floor
    )


def mandate_compliance(renewable_share: float, pv_share: float, reg: RegulatoryParams) -> bool:
    return _meets(renewable_share, reg.renewable_share_floor) and _meets(
        pv_share, reg.pv_share_floor
    )


def _load_series(bundle: ScenarioBundle):
    return [(bundle.weights[key], bundle.load_days[key].values) for key in ALL_KEYS]


def _zero_ledger(name: str) -> BaselineLedger:
    return BaselineLedger(name=name, capacities={}, cost=AnnualCostReport())


def storage_baseline_renewables(bundle: ScenarioBundle) -> RenewableSizingSolution:
    """
    Cheapest mandate-satisfying capacity mix, sized without fuel-savings maximization.

    Raises:
        ConfigError: If a capped DER class has no cost row.
    """
    book = bundle.book
    crf = capital_recovery_factor(book.discount_rate, book.lifetime_years)
    caps = dict(zip(DER_CLASSES, bundle.context.caps()))
    annual_cost = []
    for name in DER_CLASSES:
        row = book.ders.get(name)
        if row is None:
            if caps[name] > 0.0:
                raise ConfigError(f"cost book has no row for {name}", path=f"cost_book.ders.{name}")
            annual_cost.append(0.0)
        else:
            annual_cost.append(crf * row.capital_cost_usd_per_mw + row.om_cost_usd_per_mw_yr)
    return size_renewables(
        bundle.regulatory,
        bundle.coefficients,
        bundle.context,
        objective=[-value for value in annual_cost],
    )


def build_baselines(
    bundle: ScenarioBundle, storage_cutoff_hz: Optional[float] = None
) -> list[BaselineLedger]:
    """
    Price the two comparator plans.

    Baseline I runs natural gas CHP alone, sized to peak load plus reserve.
    Baseline II installs the cheapest mandate-satisfying capacity mix and
    splits its net load at the cost-optimal cut-off, or at
    `storage_cutoff_hz` when one is given.

    Args:
        bundle (ScenarioBundle): Scenario data; its Step 1 capacities are ignored.
        storage_cutoff_hz (Optional[float]): Fixed cut-off for Baseline II.

    Returns:
        list[BaselineLedger]: Baseline I and Baseline II.
    """
    peak = bundle.peak_load_mw
    load_series = _load_series(bundle)
    if peak <= 0.0 or annual_energy_mwh(load_series, bundle.interval_hours) <= 0.0:
        return [_zero_ledger("baseline_1"), _zero_ledger("baseline_2")]

    capacity = peak * (1.0 + bundle.sizing.reserve_margin)
    baseline_one = BaselineLedger(
        name="baseline_1",
        capacities={"natural_gas_chp": capacity},
        cost=total_annualized_cost(
            {"natural_gas_chp": capacity},
            Dispatch(interval_hours=bundle.interval_hours, natural_gas=load_series),
            bundle.book,
            peak_load_mw=peak,
        ),
    )

    storage_bundle = with_renewables(bundle, storage_baseline_renewables(bundle))
    if storage_cutoff_hz is None:
        candidate, _ = CutoffSearch(storage_bundle).run()
    else:
        candidate = evaluate_cutoff(storage_cutoff_hz, storage_bundle)
    baseline_two = BaselineLedger(
        name="baseline_2",
        capacities=candidate.capacities,
        bess_power_mw=candidate.bess_power_mw,
        bess_energy_mwh=candidate.bess_energy_mwh,
        cutoff_hz=candidate.cutoff_hz,
        cost=candidate.cost,
    )
    logger.info(
        "Baselines: I total %.2f, II total %.2f",
        baseline_one.cost.total_usd,
        baseline_two.cost.total_usd,
    )
    return [baseline_one, baseline_two]


def annual_energy(result: CoOptimizationResult, bundle: ScenarioBundle) -> AnnualEnergy:
    """Annual energy by source for the accepted plan."""
    chp = {(split.season, split.day_type): np.asarray(split.chp_mw) for split in result.final.splits}
    dispatch = dispatch_series(bundle, chp)
    interval = bundle.interval_hours
    return AnnualEnergy(
        load_mwh=annual_energy_mwh(_load_series(bundle), interval),
        natural_gas_mwh=annual_energy_mwh(dispatch.natural_gas, interval),
        pv_mwh=annual_energy_mwh(dispatch.generation["pv"], interval),
        wind_mwh=annual_energy_mwh(dispatch.generation["wind"], interval),
        biomass_mwh=result.renewables.biomass_chp_mw
        * bundle.coefficients.biomass_chp.beta_mwh_per_mw,
    )


def compile_report(
    result: CoOptimizationResult,
    bundle: ScenarioBundle,
    baselines: Optional[list[BaselineLedger]] = None,
) -> EvaluationReport:
    """
    Recompute every index from the accepted capacities and assemble the report.

    Compliance flags are derived from the recomputed indices, never copied
    from optimizer state. URe is reported in both forms: the renewable
    source form and 1 - E_NG / E_load.

    Args:
        result (CoOptimizationResult): Accepted plan.
        bundle (ScenarioBundle): Scenario the plan was optimized on.
        baselines: Comparator ledgers to attach.

    Returns:
        EvaluationReport: Indices, compliance, energies and costs.
    """
    capacities = [result.final.capacities.get(name, 0.0) for name in DER_CLASSES]
    reg = bundle.regulatory
    indices = system_indices(capacities, reg, bundle.coefficients, bundle.context)
    energy = annual_energy(result, bundle)

    if energy.load_mwh > 0.0:
        ure = (energy.pv_mwh + energy.wind_mwh + energy.biomass_mwh) / energy.load_mwh
        ure_from_ng = renewable_utilization(energy.natural_gas_mwh, energy.load_mwh)
    else:
        ure = ure_from_ng = 0.0

    doe_pass = doe_compliance(indices["co2_reduction"], indices["energy_efficiency_increase"], reg)
    mandate_pass = mandate_compliance(indices["renewable_share"], indices["pv_share"], reg)
    threshold = result.renewables.natural_gas_threshold_mw
    checks = {
        "co2_reduction": _meets(indices["co2_reduction"], reg.co2_reduction_floor),
        "efficiency_increase": _meets(
            indices["energy_efficiency_increase"], reg.efficiency_increase_floor
        ),
        "renewable_share": _meets(indices["renewable_share"], reg.renewable_share_floor),
        "pv_share": _meets(indices["pv_share"], reg.pv_share_floor),
        "ng_threshold": bool(
            result.final.natural_gas_capacity_mw >= threshold - CAPACITY_TOLERANCE * max(1.0, threshold)
        ),
    }
    return EvaluationReport(
        fuel_savings_mmbtu=indices["fuel_savings_mmbtu"],
        energy_efficiency_increase=indices["energy_efficiency_increase"],
        co2_reduction=indices["co2_reduction"],
        renewable_share=indices["renewable_share"],
        pv_share=indices["pv_share"],
        ure=ure,
        ure_from_ng=ure_from_ng,
        ure_discrepancy=abs(ure - ure_from_ng),
        doe_pass=doe_pass,
        mandate_pass=mandate_pass,
        checks=checks,
        annual_energy=energy,
        cost=result.final.cost,
        baselines=baselines or [],
        binding_caps=result.renewables.binding_caps,
    )
