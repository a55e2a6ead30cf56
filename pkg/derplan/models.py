import math
from datetime import date
from enum import Enum
from typing import Any, NamedTuple, Optional

import numpy as np
from pydantic import BaseModel, Field, field_validator, model_validator

from .schemas import TurbineCurve


class Season(str, Enum):
    SPRING = "spring"
    SUMMER = "summer"
    AUTUMN = "autumn"
    WINTER = "winter"


class DayType(str, Enum):
    WEEKDAY = "weekday"
    WEEKEND = "weekend"


ALL_KEYS = [(season, day_type) for season in Season for day_type in DayType]


def key_name(season: Season, day_type: DayType) -> str:
    return f"{Season(season).value}/{DayType(day_type).value}"


class DayProfile(BaseModel):
    """
    One day of power (or speed) samples at a fixed interval.

    Attributes:
        season (Season): Season the day belongs to.
        day_type (DayType): Weekday or weekend.
        interval_hours (float): Sample spacing T.
        samples (list[float]): N_S values; N_S * T equals 24 hours.
        day (Optional[date]): Calendar date for ingested history.
    """

    season: Season
    day_type: DayType
    interval_hours: float = Field(..., gt=0)
    samples: list[float]
    day: Optional[date] = None

    @model_validator(mode="after")
    def check_one_day(self) -> "DayProfile":
        if not math.isclose(len(self.samples) * self.interval_hours, 24.0, abs_tol=1e-9):
            raise ValueError(
                f"{len(self.samples)} samples at {self.interval_hours} h do not span one day"
            )
        if not all(math.isfinite(value) for value in self.samples):
            raise ValueError("samples must be finite")
        return self

    @property
    def key(self) -> tuple[Season, DayType]:
        return self.season, self.day_type

    @property
    def values(self) -> np.ndarray:
        return np.asarray(self.samples, dtype=float)

    def with_samples(self, samples: np.ndarray) -> "DayProfile":
        return DayProfile(
            season=self.season,
            day_type=self.day_type,
            interval_hours=self.interval_hours,
            samples=[float(value) for value in samples],
            day=self.day,
        )


class NormalSlot(NamedTuple):
    mean: float
    variance: float


class BetaSlot(NamedTuple):
    a: float
    b: float
    p_max: float


class WeibullSlot(NamedTuple):
    scale: float
    shape: float
    turbine: TurbineCurve


class NormalLoadModel(BaseModel):
    """
    Per-slot Normal model of the critical load.

    Attributes:
        mean_mw (list[float]): Slot means.
        variance_mw2 (list[float]): Slot variances; zero keeps the slot deterministic.
    """

    mean_mw: list[float]
    variance_mw2: list[float]

    @field_validator("variance_mw2")
    @classmethod
    def check_variance(cls, value: list[float]) -> list[float]:
        if any(item < 0 for item in value):
            raise ValueError("variance must be non-negative")
        return value

    def slot(self, index: int) -> NormalSlot:
        return NormalSlot(self.mean_mw[index], self.variance_mw2[index])


class BetaPvModel(BaseModel):
    """
    Per-slot Beta model of the PV output ratio P/P_max.

    Slots with a zero-variance history keep a deterministic ratio in
    `fixed_ratios`; their shape entries are placeholders.
    """

    a: list[float]
    b: list[float]
    p_max_mw: float = Field(..., ge=0)
    fixed_ratios: list[Optional[float]]

    @field_validator("a", "b")
    @classmethod
    def check_shapes(cls, value: list[float]) -> list[float]:
        if any(item <= 0 for item in value):
            raise ValueError("Beta shape parameters must be positive")
        return value

    def slot(self, index: int) -> BetaSlot:
        return BetaSlot(self.a[index], self.b[index], self.p_max_mw)


class WeibullWindModel(BaseModel):
    """
    Per-slot Weibull model of the hub-height wind speed.

    Attributes:
        scale_m_s (list[float]): Weibull scale per slot.
        shape (list[float]): Weibull shape per slot.
        turbine (TurbineCurve): Power curve that maps speed to output.
        fixed_speeds (list[Optional[float]]): Deterministic speed for zero-variance slots.
    """

    scale_m_s: list[float]
    shape: list[float]
    turbine: TurbineCurve
    fixed_speeds: list[Optional[float]]

    @field_validator("scale_m_s", "shape")
    @classmethod
    def check_positive(cls, value: list[float]) -> list[float]:
        if any(item <= 0 for item in value):
            raise ValueError("Weibull parameters must be positive")
        return value

    def slot(self, index: int) -> WeibullSlot:
        return WeibullSlot(self.scale_m_s[index], self.shape[index], self.turbine)


class SlotModels(BaseModel):
    """Load, PV and wind models of one (season, day type) key."""

    load: NormalLoadModel
    pv: BetaPvModel
    wind: WeibullWindModel


class StochasticModelSet(BaseModel):
    """Fitted models for all eight (season, day type) keys, keyed as 'season/day_type'."""

    interval_hours: float = Field(..., gt=0)
    models: dict[str, SlotModels]

    @model_validator(mode="after")
    def check_all_keys(self) -> "StochasticModelSet":
        missing = [key_name(*key) for key in ALL_KEYS if key_name(*key) not in self.models]
        if missing:
            raise ValueError(f"missing model keys: {', '.join(missing)}")
        return self

    def get(self, season: Season, day_type: DayType) -> SlotModels:
        return self.models[key_name(season, day_type)]


class LinearProgram(BaseModel):
    """
    Dense LP: maximize objective . x subject to a_ub x <= b_ub and x >= 0.

    When `tie_break_index` is set, ties among optimal vertices are broken by
    minimizing that variable.
    """

    variable_names: list[str]
    objective: list[float]
    a_ub: list[list[float]]
    b_ub: list[float]
    row_labels: list[str]
    tie_break_index: Optional[int] = None

    @model_validator(mode="after")
    def check_dimensions(self) -> "LinearProgram":
        n = len(self.variable_names)
        if len(self.objective) != n or any(len(row) != n for row in self.a_ub):
            raise ValueError("objective and constraint rows must match the variable count")
        if not len(self.a_ub) == len(self.b_ub) == len(self.row_labels):
            raise ValueError("a_ub, b_ub and row_labels must have equal length")
        return self


class LpSolution(BaseModel):
    """
    Optimal vertex of a LinearProgram.

    Attributes:
        x (list[float]): Optimal capacities.
        objective_value (float): Objective at `x`.
        row_multipliers (list[float]): One dual multiplier per constraint row.
        bound_multipliers (list[float]): Multipliers of the x >= 0 bounds.
    """

    x: list[float]
    objective_value: float
    row_multipliers: list[float]
    bound_multipliers: list[float]


class KktReport(BaseModel):
    """
    Residuals of the optimality conditions at a solution.

    Attributes:
        stationarity (float): Largest gradient mismatch.
        primal_feasibility (float): Largest constraint or bound violation.
        dual_feasibility (float): Largest negative multiplier.
        complementary_slackness (float): Largest multiplier-slack product.
        passed (bool): Every residual within `tolerance`.
    """

    stationarity: float
    primal_feasibility: float
    dual_feasibility: float
    complementary_slackness: float
    tolerance: float = 1e-7
    passed: bool

    @property
    def residual_norm(self) -> float:
        return max(
            self.stationarity,
            self.primal_feasibility,
            self.dual_feasibility,
            self.complementary_slackness,
        )


class RenewableSizingSolution(BaseModel):
    """
    Step 1 result: nominal renewable capacities and the NG-CHP threshold.

    `binding_caps` lists the capacity caps active at the optimum; the caps
    are siting limits supplied by configuration.
    """

    pv_mw: float = Field(..., ge=0)
    wind_mw: float = Field(..., ge=0)
    biomass_chp_mw: float = Field(..., ge=0)
    natural_gas_threshold_mw: float = Field(..., ge=0)
    fuel_savings_mmbtu: float
    emissions_reduction_tons: float
    system_energy_savings_mwh: float
    kkt_residual: Optional[float] = None
    kkt: Optional[KktReport] = None
    row_labels: list[str] = Field(default_factory=list)
    row_multipliers: list[float] = Field(default_factory=list)
    bound_multipliers: list[float] = Field(default_factory=list)
    binding_caps: list[str] = Field(default_factory=list)

    @property
    def capacities(self) -> list[float]:
        return [self.pv_mw, self.wind_mw, self.biomass_chp_mw, self.natural_gas_threshold_mw]


class SplitResult(BaseModel):
    """
    One day split between CHP and the battery at a cut-off.

    Attributes:
        chp_mw (list[float]): Clamped CHP share, never negative.
        bess_mw (list[float]): Battery share; positive values discharge.
        energy_trace_mwh (list[float]): Stored energy after each slot, starting at zero.
        daily_energy_imbalance_mwh (float): Stored energy left at the end of the day.
    """

    season: Season
    day_type: DayType
    cutoff_hz: float
    net_mw: list[float]
    chp_mw: list[float]
    bess_mw: list[float]
    chp_capacity_mw: float
    bess_power_mw: float
    bess_energy_mwh: float
    energy_trace_mwh: list[float]
    daily_energy_imbalance_mwh: float


class CostLine(BaseModel):
    """
    Annualized cost of one component.

    Attributes:
        component (str): DER class name or "bess".
        capacity_mw (float): Installed capacity.
        total_usd (float): capital + O&M + fuel - credit.
    """

    component: str
    capacity_mw: float
    capital_usd: float
    om_usd: float
    fuel_usd: float
    credit_usd: float
    total_usd: float


class AnnualCostReport(BaseModel):
    """
    Annualized cost ledger.

    Attributes:
        lines (list[CostLine]): One line per DER class and the battery.
        total_usd (float): capital + O&M + fuel - tax credit payback.
        per_mw_load (Optional[dict]): Components divided by the peak load.
    """

    lines: list[CostLine] = Field(default_factory=list)
    capital_usd: float = 0.0
    om_usd: float = 0.0
    fuel_usd: float = 0.0
    tax_credit_usd: float = 0.0
    total_usd: float = 0.0
    peak_load_mw: float = 0.0
    per_mw_load: Optional[dict[str, float]] = None


class ParityStatus(str, Enum):
    PASS = "pass"
    NEED_MORE_CHP = "need_more_chp"
    NEED_LESS_CHP = "need_less_chp"


class CandidateRecord(BaseModel):
    """
    A cut-off evaluated end to end.

    Attributes:
        cutoff_hz (float): Canonical cut-off of the bin.
        bin_index (int): DFT bin the cut-off falls in.
        splits (list[SplitResult]): Splits for all eight keys.
        chp_capacity_by_season (dict[str, float]): Weekday CHP requirement per season.
        governing_season (Season): Season with the largest requirement.
        natural_gas_capacity_mw (float): CHP capacity less biomass.
        capacities (dict[str, float]): Installed capacity per DER class.
        cost (AnnualCostReport): Ledger of the plan.
        mandate_checks (dict[str, bool]): Step 1 constraints and the NG threshold.
        weekend_covered (bool): Weekend splits fit inside the weekday capacities.
    """

    cutoff_hz: float
    bin_index: int
    total_cost_usd: float
    splits: list[SplitResult]
    chp_capacity_by_season: dict[str, float]
    governing_season: Season
    chp_capacity_mw: float
    natural_gas_capacity_mw: float
    bess_power_mw: float
    bess_energy_mwh: float
    capacities: dict[str, float]
    cost: AnnualCostReport
    mandate_checks: dict[str, bool]
    weekend_covered: bool

    @model_validator(mode="after")
    def check_cost_finite(self) -> "CandidateRecord":
        if not math.isfinite(self.total_cost_usd):
            raise ValueError("candidate cost must be finite")
        return self


class IterationEntry(BaseModel):
    """One evaluated cut-off in `iterations.jsonl`."""

    stage: str
    cutoff_hz: float
    bin_index: int
    total_cost_usd: float
    natural_gas_capacity_mw: float
    parity: ParityStatus


class CoOptimizationResult(BaseModel):
    """
    Accepted plan and the search that produced it.

    Attributes:
        final (CandidateRecord): Cheapest candidate that passed parity.
        pso_best_bin (int): Swarm optimum before parity repair.
        outer_iterations (int): Parity checks performed.
        iteration_log (list[IterationEntry]): Every candidate in evaluation order.
    """

    mode: str
    renewables: RenewableSizingSolution
    final: CandidateRecord
    chp_capacity_by_season: dict[str, float]
    governing_season: Season
    bess_power_mw: float
    bess_energy_mwh: float
    pso_best_bin: int
    pso_best_cost_usd: float
    outer_iterations: int
    iteration_log: list[IterationEntry]


class AnnualEnergy(BaseModel):
    """Annual energy by source, in MWh."""

    load_mwh: float
    natural_gas_mwh: float
    pv_mwh: float
    wind_mwh: float
    biomass_mwh: float


class BaselineLedger(BaseModel):
    """
    Cost ledger of a comparator plan.

    Attributes:
        name (str): "baseline_1" or "baseline_2".
        capacities (dict[str, float]): Installed capacity per DER class.
        cutoff_hz (Optional[float]): Split cut-off, for plans with storage.
        cost (AnnualCostReport): Annualized cost.
    """

    name: str
    capacities: dict[str, float]
    bess_power_mw: float = 0.0
    bess_energy_mwh: float = 0.0
    cutoff_hz: Optional[float] = None
    cost: AnnualCostReport


class EvaluationReport(BaseModel):
    """
    Content of `evaluation.json`.

    Attributes:
        ure (float): Renewable utilization from renewable output.
        ure_from_ng (float): 1 - E_NG / E_load.
        ure_discrepancy (float): Gap between the two forms.
        doe_pass (bool): CO2 and efficiency floors met.
        mandate_pass (bool): Renewable-share and PV-share floors met.
        checks (dict[str, bool]): Individual compliance flags.
        baselines (list[BaselineLedger]): Comparator plans.
        binding_caps (list[str]): Capacity caps active in Step 1.
    """

    fuel_savings_mmbtu: float
    energy_efficiency_increase: float
    co2_reduction: float
    renewable_share: float
    pv_share: float
    ure: float
    ure_from_ng: float
    ure_discrepancy: float
    doe_pass: bool
    mandate_pass: bool
    checks: dict[str, bool]
    annual_energy: AnnualEnergy
    cost: AnnualCostReport
    baselines: list[BaselineLedger] = Field(default_factory=list)
    binding_caps: list[str] = Field(default_factory=list)


class RunResult(BaseModel):
    """Content of `result.json`; which blocks are filled depends on the run mode."""

    status: str
    mode: str
    reason: Optional[str] = None
    detail: Optional[str] = None
    context: dict[str, Any] = Field(default_factory=dict)
    renewables: Optional[RenewableSizingSolution] = None
    co_optimization: Optional[CoOptimizationResult] = None
    candidate: Optional[CandidateRecord] = None


class SplitReport(BaseModel):
    """Content of `split.json`: one split per net-load day at a fixed cut-off."""

    cutoff_hz: float
    interval_hours: float
    labels: list[str]
    splits: list[SplitResult]
