from pathlib import Path

import numpy as np
import pytest
from click.testing import CliRunner

from derplan.config import load_scenario
from derplan.models import ALL_KEYS, DayProfile, DayType, RenewableSizingSolution, Season
from derplan.optimizer import build_bundle
from derplan.schemas import (
    BessCostRow,
    CostBook,
    DemandContext,
    DerCoefficients,
    DerCostRow,
    PsoConfig,
    RegulatoryParams,
    SavingsCoefficients,
    SizingParams,
)

FIXTURE_DIR = Path(__file__).resolve().parents[1] / "ohio_fixture"

SLOTS = 96
INTERVAL = 0.25


def day_profile(values, season=Season.SUMMER, day_type=DayType.WEEKDAY, interval=INTERVAL):
    return DayProfile(
        season=season,
        day_type=day_type,
        interval_hours=interval,
        samples=[float(value) for value in values],
    )


@pytest.fixture
def make_day():
    return day_profile


@pytest.fixture(scope="module")
def ohio_config_path() -> Path:
    return FIXTURE_DIR / "scenario.toml"


@pytest.fixture(scope="module")
def ohio_config(ohio_config_path):
    return load_scenario(ohio_config_path)


@pytest.fixture
def ohio_coefficients() -> SavingsCoefficients:
    return SavingsCoefficients(
        pv=DerCoefficients(alpha_tons_per_mw=1479.7, beta_mwh_per_mw=1594.3, gamma_mmbtu_per_mw=23458.1),
        wind=DerCoefficients(alpha_tons_per_mw=1967.6, beta_mwh_per_mw=2119.9, gamma_mmbtu_per_mw=31191.7),
        biomass_chp=DerCoefficients(
            alpha_tons_per_mw=6437.0,
            beta_mwh_per_mw=7008.0,
            beta_thermal_mwh_per_mw=9877.66,
            gamma_mmbtu_per_mw=103114.0,
        ),
        natural_gas_chp=DerCoefficients(
            alpha_tons_per_mw=6345.0,
            beta_mwh_per_mw=7008.0,
            beta_thermal_mwh_per_mw=9877.66,
            gamma_mmbtu_per_mw=23340.0,
        ),
    )


@pytest.fixture
def ohio_regulatory() -> RegulatoryParams:
    return RegulatoryParams(
        co2_reduction_floor=0.20,
        efficiency_increase_floor=0.20,
        renewable_share_floor=0.125,
        pv_share_floor=0.005,
    )


@pytest.fixture
def ohio_context() -> DemandContext:
    return DemandContext(
        annual_load_mwh=23652.0,
        annual_thermal_load_mwh=12000.0,
        base_emissions_tons_per_mw=6330.55,
        average_load_mw=2.7,
        peak_load_mw=4.5,
        pv_cap_mw=1.0,
        wind_cap_mw=2.0,
        biomass_cap_mw=0.5,
        natural_gas_threshold_cap_mw=1.0,
    )


@pytest.fixture
def ohio_book() -> CostBook:
    return CostBook(
        ders={
            "pv": DerCostRow(
                capital_cost_usd_per_mw=2_800_000, om_cost_usd_per_mw_yr=19_000,
                tax_credit_usd_per_mwh=23,
            ),
            "wind": DerCostRow(
                capital_cost_usd_per_mw=1_710_000, om_cost_usd_per_mw_yr=29_000,
                tax_credit_usd_per_mwh=23,
            ),
            "biomass_chp": DerCostRow(
                capital_cost_usd_per_mw=1_000_000, om_cost_usd_per_mw_yr=91_000,
                tax_credit_usd_per_mwh=12,
            ),
            "natural_gas_chp": DerCostRow(
                capital_cost_usd_per_mw=1_000_000, om_cost_usd_per_mw_yr=91_000,
                fuel_price_usd_per_mwh=10,
            ),
        },
        bess=BessCostRow(
            power_rate_usd_per_mw_yr=280_000, energy_rate_usd_per_mwh=24_000, om_cost_usd_per_mw_yr=3000
        ),
    )


def renewables_solution(pv=0.0, wind=0.0, biomass=0.0, threshold=0.0) -> RenewableSizingSolution:
    return RenewableSizingSolution(
        pv_mw=pv,
        wind_mw=wind,
        biomass_chp_mw=biomass,
        natural_gas_threshold_mw=threshold,
        fuel_savings_mmbtu=0.0,
        emissions_reduction_tons=0.0,
        system_energy_savings_mwh=0.0,
    )


def synthetic_days(peak_scale=1.0):
    """Weekday load with a midday hump; weekends and renewables are gentler."""
    hours = np.arange(SLOTS) * INTERVAL
    hump = np.where(hours >= 4, 0.5 * (1 - np.cos(2 * np.pi * (hours - 4) / 20)), 0.0)
    sun = np.clip(np.sin(np.pi * (hours - 6) / 14), 0.0, None) * (hours < 20)
    load, pv, wind = {}, {}, {}
    for index, (season, day_type) in enumerate(ALL_KEYS):
        amplitude = (1.2 + 0.1 * index) * peak_scale * (1.0 if day_type is DayType.WEEKDAY else 0.4)
        load[(season, day_type)] = day_profile(2.0 + amplitude * hump, season, day_type)
        pv[(season, day_type)] = day_profile(0.8 * sun, season, day_type)
        wind[(season, day_type)] = day_profile(0.3 + 0.1 * np.cos(2 * np.pi * hours / 24), season, day_type)
    return load, pv, wind


@pytest.fixture
def synthetic_bundle(ohio_coefficients, ohio_context, ohio_book):
    """Mandate-free bundle with 1 MW PV, 1 MW wind and 0.5 MW biomass."""
    load, pv, wind = synthetic_days()
    return build_bundle(
        load,
        pv,
        wind,
        renewables_solution(pv=1.0, wind=1.0, biomass=0.5),
        RegulatoryParams(),
        ohio_coefficients,
        ohio_context,
        ohio_book,
        SizingParams(),
        PsoConfig(seed=3),
    )


@pytest.fixture(scope="module")
def runner() -> CliRunner:
    return CliRunner()
