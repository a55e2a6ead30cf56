import numpy as np
import pytest

from derplan.cost_model import (
    Dispatch,
    annual_energy_mwh,
    capital_recovery_factor,
    ng_fuel_cost,
    representative_day_weights,
    tax_credit_payback,
    total_annualized_cost,
)
from derplan.errors import ConfigError, DegenerateParams, DomainError
from derplan.models import DayType, Season


def full_year(mw: float) -> list:
    """Constant output on every representative day, weighted to a full year."""
    return [(days, np.full(96, mw)) for days in representative_day_weights().values()]


def test_day_weights_cover_a_year():
    """
    Test that the eight representative days stand for 365 days.
    """
    weights = representative_day_weights()
    assert len(weights) == 8
    assert sum(weights.values()) == pytest.approx(365.0)
    assert weights[(Season.SUMMER, DayType.WEEKDAY)] == pytest.approx(91.25 * 5 / 7)


def test_capital_recovery_factor():
    """
    Test the capital recovery factor and the annualized PV capital.
    """
    crf = capital_recovery_factor(0.05, 20)
    assert crf == pytest.approx(0.0802426, abs=1e-7)
    assert crf * 2_800_000 == pytest.approx(224679.3, abs=1.0)


def test_capital_recovery_factor_zero_rate():
    """
    Test the zero-rate limit and its continuity.
    """
    assert capital_recovery_factor(0.0, 20) == pytest.approx(1 / 20)
    assert capital_recovery_factor(1e-9, 20) == pytest.approx(1 / 20, rel=1e-6)


def test_capital_recovery_factor_domain():
    """
    Test that lifetimes under a year and negative rates are rejected.
    """
    with pytest.raises(DomainError):
        capital_recovery_factor(0.05, 0.5)
    with pytest.raises(DomainError):
        capital_recovery_factor(-0.01, 20)


def test_annual_energy():
    """
    Test that 1 MW on every representative day gives 8760 MWh.
    """
    assert annual_energy_mwh(full_year(1.0), 0.25) == pytest.approx(8760.0)


def test_ng_fuel_cost():
    """
    Test fuel cost for 0.5 and 1 MW of year-round NG output.
    """
    assert ng_fuel_cost(full_year(0.5), 0.4, 8.0, 0.25) == pytest.approx(87600.0)
    assert ng_fuel_cost(full_year(1.0), 0.4, 8.0, 0.25) == pytest.approx(175200.0)
    assert ng_fuel_cost(full_year(1.0), 0.4, 8.0, 0.25, units=3) == pytest.approx(175200.0)


def test_ng_fuel_cost_errors():
    """
    Test the degenerate efficiency and negative output errors.
    """
    with pytest.raises(DegenerateParams):
        ng_fuel_cost(full_year(1.0), 0.0, 8.0, 0.25)
    with pytest.raises(DomainError):
        ng_fuel_cost(full_year(-0.1), 0.4, 8.0, 0.25)


def test_tax_credit_payback():
    """
    Test credits for 1 MW wind at 23 $/MWh and 0.5 MW biomass at 12 $/MWh.
    """
    assert tax_credit_payback(full_year(1.0), 23.0, 0.25) == pytest.approx(201480.0)
    assert tax_credit_payback(full_year(0.5), 12.0, 0.25) == pytest.approx(52560.0)


def test_zero_system_costs_nothing(ohio_book):
    """
    Test that a plan with nothing installed costs zero.
    """
    report = total_annualized_cost({name: 0.0 for name in ohio_book.ders}, Dispatch(0.25), ohio_book)
    assert report.total_usd == 0.0
    assert report.lines == []


def test_ledger_components(ohio_book):
    """
    Test the ledger of a small plan line by line.
    """
    dispatch = Dispatch(
        interval_hours=0.25,
        natural_gas=full_year(0.5),
        generation={"wind": full_year(1.0)},
    )
    report = total_annualized_cost(
        {"wind": 1.0, "natural_gas_chp": 1.0},
        dispatch,
        ohio_book,
        bess_power_mw=1.0,
        bess_energy_mwh=2.0,
        peak_load_mw=4.0,
    )
    lines = {line.component: line for line in report.lines}
    crf = capital_recovery_factor(0.05, 20)
    assert lines["wind"].capital_usd == pytest.approx(crf * 1_710_000)
    assert lines["wind"].credit_usd == pytest.approx(201480.0)
    assert lines["natural_gas_chp"].fuel_usd == pytest.approx(0.5 * 8760 * 10 / 0.4)
    assert lines["natural_gas_chp"].credit_usd == 0.0
    assert lines["bess"].total_usd == pytest.approx(280_000 + 2 * 24_000 + 3000)
    assert report.total_usd == pytest.approx(
        report.capital_usd + report.om_usd + report.fuel_usd - report.tax_credit_usd
    )
    assert report.per_mw_load["total"] == pytest.approx(report.total_usd / 4.0)


def test_cost_is_homogeneous(ohio_book):
    """
    Test that scaling every capacity and series scales the total.
    """
    def dispatch(scale: float) -> Dispatch:
        return Dispatch(
            interval_hours=0.25,
            natural_gas=full_year(0.7 * scale),
            generation={"pv": full_year(0.2 * scale), "biomass_chp": full_year(0.5 * scale)},
        )

    capacities = {"pv": 1.0, "biomass_chp": 0.5, "natural_gas_chp": 1.2}
    base = total_annualized_cost(capacities, dispatch(1.0), ohio_book, 0.8, 3.0)
    doubled = total_annualized_cost(
        {name: 2 * value for name, value in capacities.items()}, dispatch(2.0), ohio_book, 1.6, 6.0
    )
    assert doubled.total_usd == pytest.approx(2 * base.total_usd)


def test_missing_cost_row(ohio_book):
    """
    Test that an installed class without a cost row is a configuration error.
    """
    book = ohio_book.model_copy(update={"ders": {"pv": ohio_book.ders["pv"]}})
    with pytest.raises(ConfigError) as info:
        total_annualized_cost({"wind": 1.0}, Dispatch(0.25), book)
    assert info.value.context["path"] == "cost_book.ders.wind"
