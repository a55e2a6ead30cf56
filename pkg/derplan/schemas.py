from pathlib import Path
from typing import Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

DER_CLASSES = ("pv", "wind", "biomass_chp", "natural_gas_chp")
RENEWABLE_CLASSES = ("pv", "wind", "biomass_chp")


class TurbineCurve(BaseModel):
    """
    Piecewise-linear wind turbine power curve.

    Attributes:
        cut_in_m_s (float): Cut-in wind speed.
        rated_m_s (float): Speed at which rated power is reached.
        cut_out_m_s (float): Cut-out wind speed.
        rated_power_mw (float): Rated output; 1.0 for per-unit profiles.
    """

    cut_in_m_s: float = Field(3.0, ge=0, title="Cut-in Speed", description="V_in in m/s.")
    rated_m_s: float = Field(12.0, gt=0, title="Rated Speed", description="V_R in m/s.")
    cut_out_m_s: float = Field(25.0, gt=0, title="Cut-out Speed", description="V_out in m/s.")
    rated_power_mw: float = Field(
        1.0, gt=0, title="Rated Power", description="P_R in MW per installed unit."
    )

    @model_validator(mode="after")
    def check_speed_order(self) -> "TurbineCurve":
        if not self.cut_in_m_s < self.rated_m_s <= self.cut_out_m_s:
            raise ValueError("turbine speeds must satisfy cut_in < rated <= cut_out")
        return self


class InputsConfig(BaseModel):
    """
    Historical series consumed by the profiles stage.

    Attributes:
        load_csv (Path): Critical load history in MW.
        irradiance_csv (Path): Irradiance history, normalized or W/m2.
        wind_csv (Path): Wind speed history in m/s.
        interval_hours (float): Sample spacing shared by all three series.
    """

    load_csv: Path = Field(..., title="Load CSV", description="timestamp,value rows in MW.")
    irradiance_csv: Path = Field(
        ..., title="Irradiance CSV", description="timestamp,value rows of irradiance."
    )
    wind_csv: Path = Field(..., title="Wind CSV", description="timestamp,value rows in m/s.")
    interval_hours: float = Field(
        0.25, gt=0, le=24, title="Interval", description="Sample spacing T in hours."
    )
    irradiance_units: Literal["normalized", "w_per_m2"] = Field(
        "normalized",
        title="Irradiance Units",
        description="Declared units of the irradiance history.",
    )
    irradiance_reference_w_per_m2: float = Field(
        1000.0,
        gt=0,
        title="Reference Irradiance",
        description="Irradiance mapped to full PV output when units are W/m2.",
    )
    pv_max_mw: float = Field(
        1.0, ge=0, title="PV Maximum", description="Per-unit PV output at full irradiance."
    )
    turbine: TurbineCurve = Field(default_factory=TurbineCurve)


class RegulatoryParams(BaseModel):
    """
    Regulatory mandate floors.

    Attributes:
        co2_reduction_floor (float): omega, minimum CO2 reduction fraction.
        efficiency_increase_floor (float): delta, minimum energy-efficiency increase.
        renewable_share_floor (float): rho, minimum renewable capacity share.
        pv_share_floor (float): theta, minimum PV share among renewables.
        pv_share_includes_biomass (bool): Put biomass in the PV-share denominator.
    """

    co2_reduction_floor: float = Field(0.0, ge=0, le=1, title="omega")
    efficiency_increase_floor: float = Field(0.0, ge=0, le=1, title="delta")
    renewable_share_floor: float = Field(0.0, ge=0, le=1, title="rho")
    pv_share_floor: float = Field(0.0, ge=0, le=1, title="theta")
    pv_share_includes_biomass: bool = Field(
        False,
        title="PV Share Variant",
        description="Include biomass CHP in the PV-share denominator.",
    )


class DerCoefficients(BaseModel):
    """Savings coefficients of one DER class, per MW installed."""

    alpha_tons_per_mw: float = Field(..., ge=0, description="CO2 reduction per MW.")
    beta_mwh_per_mw: float = Field(..., ge=0, description="Electric energy savings per MW.")
    beta_thermal_mwh_per_mw: float = Field(
        0.0, ge=0, description="Thermal energy savings per MW (CHP only)."
    )
    gamma_mmbtu_per_mw: float = Field(..., ge=0, description="Fuel savings per MW.")

    @property
    def beta_total(self) -> float:
        return self.beta_mwh_per_mw + self.beta_thermal_mwh_per_mw


class SavingsCoefficients(BaseModel):
    pv: DerCoefficients
    wind: DerCoefficients
    biomass_chp: DerCoefficients
    natural_gas_chp: DerCoefficients

    def by_class(self) -> list[DerCoefficients]:
        return [getattr(self, name) for name in DER_CLASSES]


class DemandContext(BaseModel):
    """
    Demand-side constants of the mandate denominators plus capacity caps.

    Annual load energy, average load and peak load may be left out; they
    are then derived from the representative load days.
    """

    annual_load_mwh: Optional[float] = Field(None, ge=0, title="E_l")
    annual_thermal_load_mwh: float = Field(0.0, ge=0, title="E_th")
    base_emissions_tons_per_mw: float = Field(..., ge=0, title="E_CO2")
    average_load_mw: Optional[float] = Field(None, ge=0, title="L")
    peak_load_mw: Optional[float] = Field(None, ge=0, title="Peak Critical Load")
    pv_cap_mw: float = Field(..., ge=0, title="PV Cap")
    wind_cap_mw: float = Field(..., ge=0, title="Wind Cap")
    biomass_cap_mw: float = Field(0.5, ge=0, le=0.5, title="Biomass Cap")
    natural_gas_threshold_cap_mw: float = Field(..., ge=0, title="NG Threshold Cap")

    def caps(self) -> list[float]:
        return [
            self.pv_cap_mw,
            self.wind_cap_mw,
            self.biomass_cap_mw,
            self.natural_gas_threshold_cap_mw,
        ]


class DerCostRow(BaseModel):
    capital_cost_usd_per_mw: float = Field(..., ge=0)
    om_cost_usd_per_mw_yr: float = Field(..., ge=0)
    fuel_price_usd_per_mwh: float = Field(0.0, ge=0)
    tax_credit_usd_per_mwh: float = Field(0.0, ge=0)


class BessCostRow(BaseModel):
    power_rate_usd_per_mw_yr: float = Field(
        ..., ge=0, description="Annualized capital per MW of power capacity."
    )
    energy_rate_usd_per_mwh: float = Field(
        ..., ge=0, description="Annualized capital per MWh of energy capacity."
    )
    om_cost_usd_per_mw_yr: float = Field(..., ge=0)


class CostBook(BaseModel):
    """
    Cost parameters per DER class and for the battery.

    Attributes:
        ders (dict): Cost rows keyed by DER class name.
        bess (BessCostRow): Annualized battery rates.
        discount_rate (float): r, per year.
        lifetime_years (float): y.
        natural_gas_efficiency (float): eta_NG shared by all NG units.
    """

    ders: dict[str, DerCostRow] = Field(default_factory=dict)
    bess: BessCostRow
    discount_rate: float = Field(0.05, ge=0)
    lifetime_years: float = Field(20.0, ge=1)
    natural_gas_efficiency: float = Field(0.4, gt=0, le=1)


class SizingParams(BaseModel):
    reserve_margin: float = Field(0.1, ge=0, le=1, title="R")
    bess_efficiency: float = Field(0.85, gt=0, le=1, title="eta_BESS")
    soc_min: float = Field(0.5, ge=0, le=1)
    soc_max: float = Field(1.0, ge=0, le=1)

    @model_validator(mode="after")
    def check_soc_window(self) -> "SizingParams":
        if self.soc_min >= self.soc_max:
            raise ValueError("soc_min must be below soc_max")
        return self


class PsoConfig(BaseModel):
    """
    Particle swarm settings for the cut-off search.

    Bounds left unset default to [0, Nyquist]; seed left unset falls back
    to the run seed.
    """

    swarm_size: int = Field(30, ge=2)
    iterations: int = Field(60, ge=1)
    inertia: float = Field(0.72, ge=0)
    cognitive: float = Field(1.49, ge=0)
    social: float = Field(1.49, ge=0)
    lower_hz: Optional[float] = Field(None, ge=0)
    upper_hz: Optional[float] = Field(None, ge=0)
    seed: Optional[int] = None
    tolerance: float = Field(1e-9, ge=0, description="Minimum best-cost improvement.")
    stagnation_iterations: int = Field(20, ge=1)
    restarts: int = Field(1, ge=0)
    workers: int = Field(1, ge=1, description="Threads evaluating particles.")
    exhaustive_bins_max: int = Field(
        64, ge=0, description="Sweep every bin on parity failure up to this many bins."
    )

    @model_validator(mode="after")
    def check_bounds(self) -> "PsoConfig":
        if (
            self.lower_hz is not None
            and self.upper_hz is not None
            and self.lower_hz > self.upper_hz
        ):
            raise ValueError("lower_hz must not exceed upper_hz")
        return self


class BaselinesConfig(BaseModel):
    storage_cutoff_hz: Optional[float] = Field(
        None,
        ge=0,
        description="Fixed cut-off for the storage baseline; unset searches the cost optimum.",
    )


class RunConfig(BaseModel):
    mode: Literal["full", "cost-only", "step1-only", "split-only"] = "full"
    output_dir: Path = Path("out")
    seed: int = 0
    cutoff_hz: float = Field(0.0, ge=0, description="Cut-off used by split-only runs.")


class ScenarioConfig(BaseModel):
    """Complete scenario: inputs, Step 1 parameters, costs and search settings."""

    model_config = ConfigDict(extra="forbid")

    inputs: InputsConfig
    savings_coefficients: SavingsCoefficients
    regulatory_params: RegulatoryParams = Field(default_factory=RegulatoryParams)
    demand_context: DemandContext
    cost_book: CostBook
    sizing_params: SizingParams = Field(default_factory=SizingParams)
    pso_config: PsoConfig = Field(default_factory=PsoConfig)
    baselines: BaselinesConfig = Field(default_factory=BaselinesConfig)
    run: RunConfig = Field(default_factory=RunConfig)

    def present_classes(self) -> list[str]:
        """DER classes that can receive capacity; natural gas CHP is always present."""
        caps = dict(zip(DER_CLASSES, self.demand_context.caps()))
        return [name for name in DER_CLASSES if caps[name] > 0 or name == "natural_gas_chp"]
