import logging
import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, DegenerateParams, DomainError
from .models import ALL_KEYS, AnnualCostReport, CostLine, DayType, Season
from .schemas import RENEWABLE_CLASSES, CostBook

logger = logging.getLogger(__name__)

DAYS_PER_SEASON = 91.25
WEEKDAY_FRACTION = 5.0 / 7.0

# (days per year the series stands for, MW per slot)
WeightedSeries = tuple[float, np.ndarray]


def representative_day_weights() -> dict[tuple[Season, DayType], float]:
    """Days per year represented by each (season, day type) profile."""
    return {
        (season, day_type): DAYS_PER_SEASON
        * (WEEKDAY_FRACTION if day_type is DayType.WEEKDAY else 1.0 - WEEKDAY_FRACTION)
        for season, day_type in ALL_KEYS
    }


def capital_recovery_factor(rate: float, years: float) -> float:
    """
    Capital recovery factor r(1+r)^y / ((1+r)^y - 1).

    Args:
        rate (float): Discount rate r per year; 0 gives the limit 1 / y.
        years (float): Lifetime y, at least one year.

    Returns:
        float: Annual payment per unit of capital.
    """
    if years < 1:
        raise DomainError("lifetime must be at least one year")
    if rate < 0:
        raise DomainError("discount rate must be non-negative")
    if rate == 0.0:
        return 1.0 / years
    growth = math.expm1(years * math.log1p(rate))
    return rate * (growth + 1.0) / growth


def annual_energy_mwh(series: Sequence[WeightedSeries], interval_hours: float) -> float:
    """Energy of representative-day series scaled to a year."""
    return float(
        sum(days * float(np.sum(values)) * interval_hours for days, values in series)
    )


def _check_non_negative(series: Sequence[WeightedSeries], label: str) -> None:
    for _, values in series:
        if np.any(np.asarray(values) < 0.0):
            raise DomainError(f"{label} series must be non-negative")


def ng_fuel_cost(
    series: Sequence[WeightedSeries],
    efficiency: float,
    fuel_price_usd_per_mwh: float,
    interval_hours: float,
    units: int = 1,
) -> float:
    """
    Annual natural gas fuel cost.

    The NG output is shared evenly by `units` identical units, each at
    efficiency `efficiency`.

    Raises:
        DegenerateParams: If the efficiency is not positive.
    """
    if efficiency <= 0.0:
        raise DegenerateParams("natural gas efficiency must be positive")
    _check_non_negative(series, "natural gas")
    per_unit = annual_energy_mwh(series, interval_hours) / max(units, 1)
    return float(max(units, 1) * fuel_price_usd_per_mwh * per_unit / efficiency)


def tax_credit_payback(
    series: Sequence[WeightedSeries], credit_usd_per_mwh: float, interval_hours: float
) -> float:
    """Credit rate times annual renewable energy."""
    _check_non_negative(series, "renewable")
    return float(credit_usd_per_mwh * annual_energy_mwh(series, interval_hours))


@dataclass(frozen=True)
class Dispatch:
    """
    Annualizable operating series for one plan.

    Attributes:
        interval_hours: Slot length T.
        natural_gas: NG-CHP output series.
        generation: Renewable output series keyed by DER class.
    """

    interval_hours: float
    natural_gas: list[WeightedSeries] = field(default_factory=list)
    generation: dict[str, list[WeightedSeries]] = field(default_factory=dict)


def total_annualized_cost(
    capacities: Mapping[str, float],
    dispatch: Dispatch,
    book: CostBook,
    bess_power_mw: float = 0.0,
    bess_energy_mwh: float = 0.0,
    peak_load_mw: float = 0.0,
    natural_gas_units: int = 1,
) -> AnnualCostReport:
    """
    Price a plan: capital, O&M, fuel and tax credit per DER class plus the battery.

    Args:
        capacities: Installed MW keyed by DER class.
        dispatch (Dispatch): NG and renewable output series.
        book (CostBook): Cost rates.
        bess_power_mw (float): Battery power capacity.
        bess_energy_mwh (float): Battery energy capacity.
        peak_load_mw (float): Normalizer for the per-MW-load view.
        natural_gas_units (int): Units sharing the NG output.

    Returns:
        AnnualCostReport: Per-class lines and totals.

    Raises:
        ConfigError: If a class with capacity or output has no cost row.
    """
    crf = capital_recovery_factor(book.discount_rate, book.lifetime_years)
    lines = []
    names = list(capacities)
    extra = [*dispatch.generation, *(["natural_gas_chp"] if dispatch.natural_gas else [])]
    names += [name for name in dict.fromkeys(extra) if name not in capacities]
    for name in names:
        capacity = float(capacities.get(name, 0.0))
        output = dispatch.generation.get(name, [])
        if name == "natural_gas_chp":
            output = dispatch.natural_gas
        has_output = any(np.any(np.asarray(values) > 0) for _, values in output)
        if capacity <= 0.0 and not has_output:
            continue
        row = book.ders.get(name)
        if row is None:
            raise ConfigError(f"cost book has no row for {name}", path=f"cost_book.ders.{name}")
        capital = crf * row.capital_cost_usd_per_mw * capacity
        om = row.om_cost_usd_per_mw_yr * capacity
        fuel = 0.0
        if name == "natural_gas_chp":
            fuel = ng_fuel_cost(
                dispatch.natural_gas,
                book.natural_gas_efficiency,
                row.fuel_price_usd_per_mwh,
                dispatch.interval_hours,
                units=natural_gas_units,
            )
        credit = 0.0
        if name in RENEWABLE_CLASSES:
            credit = tax_credit_payback(output, row.tax_credit_usd_per_mwh, dispatch.interval_hours)
        lines.append(
            CostLine(
                component=name,
                capacity_mw=capacity,
                capital_usd=capital,
                om_usd=om,
                fuel_usd=fuel,
                credit_usd=credit,
                total_usd=capital + om + fuel - credit,
            )
        )

    if bess_power_mw > 0.0 or bess_energy_mwh > 0.0:
        capital = (
            book.bess.power_rate_usd_per_mw_yr * bess_power_mw
            + book.bess.energy_rate_usd_per_mwh * bess_energy_mwh
        )
        om = book.bess.om_cost_usd_per_mw_yr * bess_power_mw
        lines.append(
            CostLine(
                component="bess",
                capacity_mw=bess_power_mw,
                capital_usd=capital,
                om_usd=om,
                fuel_usd=0.0,
                credit_usd=0.0,
                total_usd=capital + om,
            )
        )

    capital = sum(line.capital_usd for line in lines)
    om = sum(line.om_usd for line in lines)
    fuel = sum(line.fuel_usd for line in lines)
    credit = sum(line.credit_usd for line in lines)
    total = capital + om + fuel - credit
    per_mw = None
    if peak_load_mw > 0.0:
        per_mw = {
            "capital": capital / peak_load_mw,
            "om": om / peak_load_mw,
            "fuel": fuel / peak_load_mw,
            "credit": credit / peak_load_mw,
            "total": total / peak_load_mw,
        }
    return AnnualCostReport(
        lines=lines,
        capital_usd=capital,
        om_usd=om,
        fuel_usd=fuel,
        tax_credit_usd=credit,
        total_usd=total,
        peak_load_mw=peak_load_mw,
        per_mw_load=per_mw,
    )
