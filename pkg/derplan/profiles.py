import logging
import math
from collections import defaultdict
from os import PathLike
from typing import IO, NamedTuple, Optional, Sequence, Union

import numpy as np
import pandas as pd
from scipy import optimize, special, stats

from .errors import (
    DegenerateDistribution,
    DomainError,
    InsufficientHistory,
    MalformedSeries,
    ShapeError,
)
from .models import (
    ALL_KEYS,
    BetaPvModel,
    BetaSlot,
    DayProfile,
    DayType,
    NormalLoadModel,
    NormalSlot,
    Season,
    SlotModels,
    StochasticModelSet,
    WeibullSlot,
    WeibullWindModel,
    key_name,
)
from .schemas import TurbineCurve

logger = logging.getLogger(__name__)

SEASON_BY_MONTH = {
    3: Season.SPRING, 4: Season.SPRING, 5: Season.SPRING,
    6: Season.SUMMER, 7: Season.SUMMER, 8: Season.SUMMER,
    9: Season.AUTUMN, 10: Season.AUTUMN, 11: Season.AUTUMN,
    12: Season.WINTER, 1: Season.WINTER, 2: Season.WINTER,
}

MIN_HISTORY_DAYS = 2
BETA_SHAPE_FLOOR = 1e-3
WEIBULL_SHAPE_BRACKET = (0.1, 20.0)
ZERO_VARIANCE = 1e-12
LOAD_RESAMPLE_ATTEMPTS = 100

CsvSource = Union[str, PathLike, IO[str]]


def slots_per_day(interval_hours: float) -> int:
    """
    Number of samples in one day for the given interval.

    Raises:
        ShapeError: If 24 hours is not a whole number of intervals.
    """
    slots = 24.0 / interval_hours
    if not math.isclose(slots, round(slots), abs_tol=1e-9):
        raise ShapeError(f"interval of {interval_hours} h does not divide a day")
    return int(round(slots))


def ingest_series(
    csv_source: CsvSource, interval_hours: float, non_negative: bool = False
) -> list[DayProfile]:
    """
    Read a `timestamp,value` CSV into one DayProfile per calendar day.

    Consecutive days need not be contiguous, but every day present must hold
    exactly one sample per slot starting at midnight.

    Args:
        csv_source: Path or text buffer of the CSV.
        interval_hours (float): Expected spacing T between samples.
        non_negative (bool): Reject negative values (load histories).

    Returns:
        list[DayProfile]: Days in chronological order.

    Raises:
        MalformedSeries: On unparseable, missing or non-finite values, on
            non-uniform spacing and on incomplete days.
    """
    n_slots = slots_per_day(interval_hours)
    try:
        frame = pd.read_csv(csv_source, dtype=str, keep_default_na=False)
    except (pd.errors.EmptyDataError, pd.errors.ParserError) as exc:
        raise MalformedSeries(f"unreadable CSV: {exc}") from exc
    if list(frame.columns[:2]) != ["timestamp", "value"]:
        raise MalformedSeries("header must be 'timestamp,value'")
    if frame.empty:
        raise MalformedSeries("series has no rows")

    stamps = pd.to_datetime(frame["timestamp"], errors="coerce", format="ISO8601")
    values = pd.to_numeric(frame["value"], errors="coerce").to_numpy(dtype=float)

    bad_stamp = np.flatnonzero(stamps.isna().to_numpy())
    if bad_stamp.size:
        row = int(bad_stamp[0])
        raise MalformedSeries(f"unparseable timestamp at row {row}", row=row)
    bad_value = np.flatnonzero(~np.isfinite(values))
    if bad_value.size:
        row = int(bad_value[0])
        raise MalformedSeries(f"missing or non-finite value at row {row}", row=row)
    if non_negative:
        negative = np.flatnonzero(values < 0)
        if negative.size:
            row = int(negative[0])
            raise MalformedSeries(f"negative value at row {row}", row=row)

    step_seconds = interval_hours * 3600.0
    offsets = (stamps - stamps.dt.normalize()).dt.total_seconds().to_numpy() / step_seconds
    slot_index = np.rint(offsets).astype(int)
    off_grid = np.flatnonzero(np.abs(offsets - slot_index) > 1e-6)
    if off_grid.size:
        row = int(off_grid[0])
        raise MalformedSeries(f"timestamp off the {interval_hours} h grid at row {row}", row=row)

    dates = stamps.dt.date.to_numpy()
    ordering = stamps.diff().dt.total_seconds().to_numpy()[1:]
    backwards = np.flatnonzero(ordering <= 0)
    if backwards.size:
        row = int(backwards[0]) + 1
        raise MalformedSeries(f"timestamps not strictly increasing at row {row}", row=row)

    days = []
    start = 0
    total = len(frame)
    while start < total:
        stop = start
        while stop < total and dates[stop] == dates[start]:
            stop += 1
        expected = np.arange(stop - start)
        jumps = np.flatnonzero(slot_index[start:stop] != expected)
        if jumps.size:
            row = start + int(jumps[0])
            raise MalformedSeries(f"non-uniform spacing at row {row}", row=row)
        if stop - start != n_slots:
            raise MalformedSeries(
                f"day {dates[start]} has {stop - start} of {n_slots} samples", row=stop - 1
            )
        stamp = stamps.iloc[start]
        days.append(
            DayProfile(
                season=SEASON_BY_MONTH[stamp.month],
                day_type=DayType.WEEKDAY if stamp.dayofweek < 5 else DayType.WEEKEND,
                interval_hours=interval_hours,
                samples=values[start:stop].tolist(),
                day=dates[start],
            )
        )
        start = stop
    logger.debug("Ingested %d days at %s h", len(days), interval_hours)
    return days


def _group(days: Sequence[DayProfile], source: str) -> dict[tuple[Season, DayType], np.ndarray]:
    grouped: dict[tuple[Season, DayType], list[list[float]]] = defaultdict(list)
    for day in days:
        grouped[day.key].append(day.samples)
    stacks = {}
    for key in ALL_KEYS:
        if len(grouped[key]) < MIN_HISTORY_DAYS:
            raise InsufficientHistory(
                f"{source} history has {len(grouped[key])} day(s) for {key_name(*key)}; "
                f"need at least {MIN_HISTORY_DAYS}",
                source=source,
                key=key_name(*key),
            )
        stacks[key] = np.asarray(grouped[key], dtype=float)
    return stacks


def fit_beta_ratio(mean: float, variance: float) -> tuple[float, float, Optional[float]]:
    """
    Moment-match a Beta distribution to a ratio in [0, 1].

    Returns:
        tuple: (a, b, fixed_ratio). `fixed_ratio` is set and the shapes are
        placeholders when the slot is deterministic.
    """
    if variance <= ZERO_VARIANCE or mean <= 0.0 or mean >= 1.0:
        return 1.0, 1.0, float(min(max(mean, 0.0), 1.0))
    common = mean * (1.0 - mean) / variance - 1.0
    a = mean * common
    b = (1.0 - mean) * common
    if a < BETA_SHAPE_FLOOR or b < BETA_SHAPE_FLOOR:
        logger.warning(
            "Beta fit clamped (mean=%.4g, variance=%.4g): variance exceeds mean*(1-mean)",
            mean,
            variance,
        )
    return max(a, BETA_SHAPE_FLOOR), max(b, BETA_SHAPE_FLOOR), None


def _weibull_moment_gap(shape: float, cv_squared: float) -> float:
    return (
        special.gammaln(1.0 + 2.0 / shape)
        - 2.0 * special.gammaln(1.0 + 1.0 / shape)
        - math.log1p(cv_squared)
    )


def _weibull_moment_gap_prime(shape: float, cv_squared: float) -> float:
    return (
        2.0 * special.digamma(1.0 + 1.0 / shape) - 2.0 * special.digamma(1.0 + 2.0 / shape)
    ) / shape**2


def fit_weibull_speed(mean: float, variance: float) -> tuple[float, float, Optional[float]]:
    """
    Moment-match a Weibull distribution to wind speed mean and variance.

    The shape solves the coefficient-of-variation equation by Newton
    iteration (tolerance 1e-9) with a bracketed fallback on [0.1, 20].

    Returns:
        tuple: (scale, shape, fixed_speed).
    """
    if variance <= ZERO_VARIANCE or mean <= 0.0:
        return 1.0, 1.0, float(max(mean, 0.0))
    cv_squared = variance / mean**2
    low, high = WEIBULL_SHAPE_BRACKET
    shape = None
    try:
        guess = min(max(math.sqrt(cv_squared) ** -1.086, low), high)
        candidate = optimize.newton(
            _weibull_moment_gap,
            guess,
            fprime=_weibull_moment_gap_prime,
            args=(cv_squared,),
            tol=1e-9,
            maxiter=100,
        )
        if math.isfinite(candidate) and low <= candidate <= high:
            shape = float(candidate)
    except (RuntimeError, ZeroDivisionError, OverflowError):
        shape = None
    if shape is None:
        gap_low = _weibull_moment_gap(low, cv_squared)
        gap_high = _weibull_moment_gap(high, cv_squared)
        if gap_low <= 0.0:
            shape = low
        elif gap_high >= 0.0:
            shape = high
        else:
            shape = float(
                optimize.brentq(_weibull_moment_gap, low, high, args=(cv_squared,), xtol=1e-12)
            )
    scale = mean / math.exp(special.gammaln(1.0 + 1.0 / shape))
    return scale, shape, None


def fit_models(
    load_history: Sequence[DayProfile],
    pv_history: Sequence[DayProfile],
    wind_history: Sequence[DayProfile],
    pv_max_mw: float = 1.0,
    turbine: Optional[TurbineCurve] = None,
) -> StochasticModelSet:
    """
    Fit per-slot Normal, Beta and Weibull models for every (season, day type).

    Args:
        load_history: Load days in MW.
        pv_history: PV output ratio days in [0, 1].
        wind_history: Wind speed days in m/s.
        pv_max_mw (float): PV output at ratio 1.
        turbine (TurbineCurve): Power curve attached to the wind models.

    Returns:
        StochasticModelSet: Models for all eight keys.

    Raises:
        InsufficientHistory: When a key has fewer than two days for a source.
    """
    turbine = turbine or TurbineCurve()
    intervals = {day.interval_hours for day in (*load_history, *pv_history, *wind_history)}
    if len(intervals) != 1:
        raise ShapeError("histories must share one sampling interval")
    interval_hours = intervals.pop()

    loads = _group(load_history, "load")
    pvs = _group(pv_history, "pv")
    winds = _group(wind_history, "wind")

    fitted = {}
    for key in ALL_KEYS:
        load = loads[key]
        pv = np.clip(pvs[key], 0.0, 1.0)
        wind = winds[key]

        beta = [fit_beta_ratio(m, v) for m, v in zip(pv.mean(axis=0), pv.var(axis=0))]
        weibull = [fit_weibull_speed(m, v) for m, v in zip(wind.mean(axis=0), wind.var(axis=0))]

        fitted[key_name(*key)] = SlotModels(
            load=NormalLoadModel(
                mean_mw=load.mean(axis=0).tolist(),
                variance_mw2=load.var(axis=0).tolist(),
            ),
            pv=BetaPvModel(
                a=[item[0] for item in beta],
                b=[item[1] for item in beta],
                p_max_mw=pv_max_mw,
                fixed_ratios=[item[2] for item in beta],
            ),
            wind=WeibullWindModel(
                scale_m_s=[item[0] for item in weibull],
                shape=[item[1] for item in weibull],
                turbine=turbine,
                fixed_speeds=[item[2] for item in weibull],
            ),
        )
    logger.info("Fitted stochastic models for %d keys", len(fitted))
    return StochasticModelSet(interval_hours=interval_hours, models=fitted)


def normal_pdf(x, slot: NormalSlot):
    """Normal load density per MW."""
    if slot.variance <= 0.0:
        raise DegenerateDistribution("normal density needs a positive variance")
    return stats.norm.pdf(x, loc=slot.mean, scale=math.sqrt(slot.variance))


def pv_power_pdf(p, slot: BetaSlot):
    """
    PV power density per MW: the Beta density of p / P_max scaled by 1 / P_max.

    Raises:
        DegenerateDistribution: If P_max is zero.
        DomainError: If p lies outside [0, P_max].
    """
    if slot.p_max <= 0.0:
        raise DegenerateDistribution("PV density needs a positive P_max")
    power = np.asarray(p, dtype=float)
    if np.any(power < 0.0) or np.any(power > slot.p_max):
        raise DomainError(f"PV power must lie in [0, {slot.p_max}] MW")
    return stats.beta.pdf(power / slot.p_max, slot.a, slot.b) / slot.p_max


def wind_power_curve(v, turbine: TurbineCurve):
    """
    Turbine output for wind speed `v`.

    Zero below cut-in and above cut-out, linear between cut-in and rated
    speed, rated power from rated speed through cut-out inclusive.

    Raises:
        DomainError: On negative wind speed.
    """
    speed = np.asarray(v, dtype=float)
    if np.any(speed < 0.0):
        raise DomainError("wind speed must be non-negative")
    ramp = (speed - turbine.cut_in_m_s) / (turbine.rated_m_s - turbine.cut_in_m_s)
    power = np.where(
        speed < turbine.cut_in_m_s,
        0.0,
        np.where(speed < turbine.rated_m_s, ramp, 1.0),
    )
    power = np.where(speed > turbine.cut_out_m_s, 0.0, power) * turbine.rated_power_mw
    return power if power.ndim else float(power)


class WindPowerDensity(NamedTuple):
    density: float
    atom_zero: float
    atom_rated: float


def wind_power_pdf(p, slot: WeibullSlot) -> WindPowerDensity:
    """
    Mixed distribution of turbine output.

    Returns:
        WindPowerDensity: continuous density per MW at `p` (meaningful for
        0 < p < P_R) plus the probability atoms at 0 and at P_R.

    Raises:
        DomainError: If p lies outside [0, P_R].
    """
    turbine = slot.turbine
    power = np.asarray(p, dtype=float)
    if np.any(power < 0.0) or np.any(power > turbine.rated_power_mw):
        raise DomainError(f"wind power must lie in [0, {turbine.rated_power_mw}] MW")
    speeds = stats.weibull_min(c=slot.shape, scale=slot.scale)
    span = turbine.rated_m_s - turbine.cut_in_m_s
    speed = turbine.cut_in_m_s + power * span / turbine.rated_power_mw
    density = speeds.pdf(speed) * span / turbine.rated_power_mw
    cdf_in, cdf_rated, cdf_out = speeds.cdf(
        [turbine.cut_in_m_s, turbine.rated_m_s, turbine.cut_out_m_s]
    )
    return WindPowerDensity(
        density=density if np.ndim(density) else float(density),
        atom_zero=float(1.0 - (cdf_out - cdf_in)),
        atom_rated=float(cdf_out - cdf_rated),
    )


def sample_load(model: NormalLoadModel, rng: np.random.Generator, n_days: int = 1) -> np.ndarray:
    """Draw `n_days` load days; negative draws are resampled, then clamped at zero."""
    mean = np.broadcast_to(np.asarray(model.mean_mw), (n_days, len(model.mean_mw)))
    std = np.broadcast_to(np.sqrt(np.asarray(model.variance_mw2)), mean.shape)
    draws = rng.normal(mean, std)
    for _ in range(LOAD_RESAMPLE_ATTEMPTS):
        negative = draws < 0.0
        if not negative.any():
            break
        draws[negative] = rng.normal(mean[negative], std[negative])
    return np.maximum(draws, 0.0)


def sample_pv(model: BetaPvModel, rng: np.random.Generator, n_days: int = 1) -> np.ndarray:
    """Draw `n_days` PV output days in MW."""
    ratios = rng.beta(model.a, model.b, size=(n_days, len(model.a)))
    fixed = np.array([value is not None for value in model.fixed_ratios])
    if fixed.any():
        ratios[:, fixed] = [value for value in model.fixed_ratios if value is not None]
    return ratios * model.p_max_mw


def sample_wind_speed(
    model: WeibullWindModel, rng: np.random.Generator, n_days: int = 1
) -> np.ndarray:
    """Draw `n_days` wind speed days in m/s."""
    speeds = np.asarray(model.scale_m_s) * rng.weibull(model.shape, size=(n_days, len(model.shape)))
    fixed = np.array([value is not None for value in model.fixed_speeds])
    if fixed.any():
        speeds[:, fixed] = [value for value in model.fixed_speeds if value is not None]
    return speeds


def sample_day(
    models: StochasticModelSet, key: tuple[Season, DayType], seed: int
) -> tuple[DayProfile, DayProfile, DayProfile]:
    """
    Draw one representative day for `key`.

    Slots and sources are drawn independently; the same seed always yields
    the same three profiles.

    Returns:
        tuple: (load MW, PV MW, wind MW) DayProfiles.
    """
    season, day_type = key
    slot_models = models.get(season, day_type)
    rng = np.random.default_rng(seed)
    load = sample_load(slot_models.load, rng)[0]
    pv = sample_pv(slot_models.pv, rng)[0]
    wind = wind_power_curve(sample_wind_speed(slot_models.wind, rng)[0], slot_models.wind.turbine)

    def profile(values: np.ndarray) -> DayProfile:
        return DayProfile(
            season=season,
            day_type=day_type,
            interval_hours=models.interval_hours,
            samples=np.asarray(values, dtype=float).tolist(),
        )

    return profile(load), profile(pv), profile(wind)


def net_load(
    load: DayProfile,
    renewables: Sequence[DayProfile],
    capacities: Optional[Sequence[float]] = None,
) -> DayProfile:
    """
    Load minus renewable output, slot by slot. Negative values are kept.

    Args:
        load (DayProfile): Load day in MW.
        renewables: Renewable output days; per-unit when `capacities` is given.
        capacities: Optional nominal capacities scaling each renewable day.

    Raises:
        ShapeError: On mismatched interval, length or capacity count.
    """
    if capacities is not None and len(capacities) != len(renewables):
        raise ShapeError("one capacity is needed per renewable profile")
    net = load.values.copy()
    for index, profile in enumerate(renewables):
        if profile.interval_hours != load.interval_hours or len(profile.samples) != len(net):
            raise ShapeError("renewable profile does not match the load profile shape")
        scale = 1.0 if capacities is None else capacities[index]
        net -= scale * profile.values
    return load.with_samples(net)
