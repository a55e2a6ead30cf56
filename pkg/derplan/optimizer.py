import logging
import math
from dataclasses import dataclass, field
from threading import Lock
from typing import Callable, Mapping, Optional

import numpy as np

from .cost_model import Dispatch, representative_day_weights, total_annualized_cost
from .errors import DomainError, NoFeasibleCutoff, ShapeError, SolverError
from .models import (
    ALL_KEYS,
    CandidateRecord,
    CoOptimizationResult,
    DayProfile,
    DayType,
    IterationEntry,
    ParityStatus,
    RenewableSizingSolution,
    Season,
)
from .profiles import net_load
from .pso import PsoResult, pso_minimize
from .renewable_lp import mandate_residuals, mandates_hold
from .schemas import (
    CostBook,
    DemandContext,
    PsoConfig,
    RegulatoryParams,
    SavingsCoefficients,
    SizingParams,
)
from .spectral_sizing import Spectrum, forward_transform, split_day

logger = logging.getLogger(__name__)

Key = tuple[Season, DayType]
HOURS_PER_YEAR = 8760.0
CAPACITY_TOLERANCE = 1e-9


@dataclass(frozen=True)
class ScenarioBundle:
    """
    Everything Step 2 needs: representative days, Step 1 capacities and rates.

    Renewable days are per-unit (MW per MW installed); `net_days` and
    `spectra` hold the net load at the Step 1 capacities.
    """

    load_days: Mapping[Key, DayProfile]
    pv_unit_days: Mapping[Key, DayProfile]
    wind_unit_days: Mapping[Key, DayProfile]
    renewables: RenewableSizingSolution
    regulatory: RegulatoryParams
    coefficients: SavingsCoefficients
    context: DemandContext
    book: CostBook
    sizing: SizingParams
    pso: PsoConfig
    seed: int = 0
    mode: str = "full"
    net_days: Mapping[Key, DayProfile] = field(default_factory=dict)
    spectra: Mapping[Key, Spectrum] = field(default_factory=dict)
    weights: Mapping[Key, float] = field(default_factory=dict)

    @property
    def interval_hours(self) -> float:
        return next(iter(self.load_days.values())).interval_hours

    @property
    def reference_spectrum(self) -> Spectrum:
        return self.spectra[ALL_KEYS[0]]

    @property
    def n_bins(self) -> int:
        return self.reference_spectrum.n_bins

    @property
    def peak_load_mw(self) -> float:
        if self.context.peak_load_mw is not None:
            return self.context.peak_load_mw
        return max(max(day.samples) for day in self.load_days.values())

    @property
    def biomass_output_mw(self) -> float:
        """Biomass base-load output implied by its electric savings coefficient."""
        biomass = self.renewables.biomass_chp_mw
        factor = self.coefficients.biomass_chp.beta_mwh_per_mw / HOURS_PER_YEAR
        return biomass * min(factor, 1.0)

    def bin_cutoff(self, bin_index: int) -> float:
        spectrum = self.reference_spectrum
        return min(bin_index * spectrum.bin_step_hz, spectrum.nyquist_hz)

    def cutoff_bin(self, cutoff_hz: float) -> int:
        spectrum = self.reference_spectrum
        return min(int(math.floor(cutoff_hz / spectrum.bin_step_hz + 1e-9)), self.n_bins - 1)


def build_bundle(
    load_days: Mapping[Key, DayProfile],
    pv_unit_days: Mapping[Key, DayProfile],
    wind_unit_days: Mapping[Key, DayProfile],
    renewables: RenewableSizingSolution,
    regulatory: RegulatoryParams,
    coefficients: SavingsCoefficients,
    context: DemandContext,
    book: CostBook,
    sizing: SizingParams,
    pso: PsoConfig,
    seed: int = 0,
    mode: str = "full",
) -> ScenarioBundle:
    """
    Assemble a scenario bundle and precompute net loads and their spectra.

    Raises:
        ShapeError: If a key is missing or days disagree in shape.
    """
    for days in (load_days, pv_unit_days, wind_unit_days):
        missing = [key for key in ALL_KEYS if key not in days]
        if missing:
            raise ShapeError(f"representative days missing for {len(missing)} key(s)")
    net_days = {
        key: net_load(
            load_days[key],
            [pv_unit_days[key], wind_unit_days[key]],
            capacities=[renewables.pv_mw, renewables.wind_mw],
        )
        for key in ALL_KEYS
    }
    return ScenarioBundle(
        load_days=dict(load_days),
        pv_unit_days=dict(pv_unit_days),
        wind_unit_days=dict(wind_unit_days),
        renewables=renewables,
        regulatory=regulatory,
        coefficients=coefficients,
        context=context,
        book=book,
        sizing=sizing,
        pso=pso,
        seed=seed,
        mode=mode,
        net_days=net_days,
        spectra={key: forward_transform(day) for key, day in net_days.items()},
        weights=representative_day_weights(),
    )


def with_renewables(bundle: ScenarioBundle, renewables: RenewableSizingSolution) -> ScenarioBundle:
    """Same scenario with different Step 1 capacities."""
    return build_bundle(
        bundle.load_days,
        bundle.pv_unit_days,
        bundle.wind_unit_days,
        renewables,
        bundle.regulatory,
        bundle.coefficients,
        bundle.context,
        bundle.book,
        bundle.sizing,
        bundle.pso,
        seed=bundle.seed,
        mode=bundle.mode,
    )


def dispatch_series(bundle: ScenarioBundle, chp_by_key: Mapping[Key, np.ndarray]) -> Dispatch:
    """
    Annual dispatch for given CHP series: biomass runs as base load inside
    the CHP share and natural gas covers the rest.
    """
    renewables = bundle.renewables
    biomass_output = bundle.biomass_output_mw
    natural_gas, pv, wind, biomass = [], [], [], []
    for key in ALL_KEYS:
        days = bundle.weights[key]
        chp = np.asarray(chp_by_key[key], dtype=float)
        biomass_series = np.minimum(chp, biomass_output)
        natural_gas.append((days, chp - biomass_series))
        biomass.append((days, biomass_series))
        pv.append((days, renewables.pv_mw * bundle.pv_unit_days[key].values))
        wind.append((days, renewables.wind_mw * bundle.wind_unit_days[key].values))
    return Dispatch(
        interval_hours=bundle.interval_hours,
        natural_gas=natural_gas,
        generation={"pv": pv, "wind": wind, "biomass_chp": biomass},
    )


def evaluate_cutoff(cutoff_hz: float, bundle: ScenarioBundle) -> CandidateRecord:
    """
    Size and price the plan implied by one cut-off frequency.

    The cut-off is snapped to its bin, every representative day is split,
    weekday seasons govern the CHP and battery capacities, and weekend days
    are only checked for coverage.

    Args:
        cutoff_hz (float): Cut-off in [0, Nyquist].
        bundle (ScenarioBundle): Scenario data.

    Returns:
        CandidateRecord: Deterministic in the bin of `cutoff_hz`.
    """
    spectrum = bundle.reference_spectrum
    if cutoff_hz < 0.0 or cutoff_hz > spectrum.nyquist_hz * (1.0 + 1e-12):
        raise DomainError(f"cut-off {cutoff_hz} Hz outside [0, {spectrum.nyquist_hz}] Hz")
    bin_index = bundle.cutoff_bin(cutoff_hz)
    canonical = bundle.bin_cutoff(bin_index)

    splits = {
        key: split_day(bundle.net_days[key], canonical, bundle.sizing, spectrum=bundle.spectra[key])
        for key in ALL_KEYS
    }
    weekday = {season: splits[(season, DayType.WEEKDAY)] for season in Season}
    chp_by_season = {season.value: weekday[season].chp_capacity_mw for season in Season}
    governing = max(Season, key=lambda season: chp_by_season[season.value])
    chp_capacity = chp_by_season[governing.value]
    bess_power = max(split.bess_power_mw for split in weekday.values())
    bess_energy = max(split.bess_energy_mwh for split in weekday.values())

    def covered(value: float, limit: float) -> bool:
        return bool(value <= limit * (1.0 + CAPACITY_TOLERANCE) + CAPACITY_TOLERANCE)

    weekend_covered = all(
        covered(split.chp_capacity_mw, chp_capacity)
        and covered(split.bess_power_mw, bess_power)
        and covered(split.bess_energy_mwh, bess_energy)
        for key, split in splits.items()
        if key[1] is DayType.WEEKEND
    )

    renewables = bundle.renewables
    natural_gas_capacity = max(chp_capacity - renewables.biomass_chp_mw, 0.0)
    capacities = {
        "pv": renewables.pv_mw,
        "wind": renewables.wind_mw,
        "biomass_chp": renewables.biomass_chp_mw,
        "natural_gas_chp": natural_gas_capacity,
    }
    cost = total_annualized_cost(
        capacities,
        dispatch_series(bundle, {key: np.asarray(split.chp_mw) for key, split in splits.items()}),
        bundle.book,
        bess_power_mw=bess_power,
        bess_energy_mwh=bess_energy,
        peak_load_mw=bundle.peak_load_mw,
    )
    checks = mandates_hold(
        mandate_residuals(list(capacities.values()), bundle.regulatory, bundle.coefficients,
                          bundle.context)
    )
    checks["ng_threshold"] = bool(
        natural_gas_capacity >= _threshold_floor(renewables.natural_gas_threshold_mw)
    )
    return CandidateRecord(
        cutoff_hz=canonical,
        bin_index=bin_index,
        total_cost_usd=cost.total_usd,
        splits=[splits[key] for key in ALL_KEYS],
        chp_capacity_by_season=chp_by_season,
        governing_season=governing,
        chp_capacity_mw=chp_capacity,
        natural_gas_capacity_mw=natural_gas_capacity,
        bess_power_mw=bess_power,
        bess_energy_mwh=bess_energy,
        capacities=capacities,
        cost=cost,
        mandate_checks=checks,
        weekend_covered=weekend_covered,
    )


def _threshold_floor(threshold_mw: float) -> float:
    return threshold_mw - CAPACITY_TOLERANCE * max(1.0, threshold_mw)


def parity_check(
    candidate: CandidateRecord, threshold_mw: float, reg: RegulatoryParams
) -> ParityStatus:
    """
    Check a candidate against Step 1's threshold and mandates.

    NG capacity below the threshold, or a failed CO2 or efficiency check,
    needs more CHP. Renewable-share or PV-share mandates failing with the
    actual NG capacity need less. Otherwise the candidate passes.
    """
    natural_gas = candidate.natural_gas_capacity_mw
    checks = candidate.mandate_checks
    if (
        natural_gas < _threshold_floor(threshold_mw)
        or not checks.get("co2_reduction", True)
        or not checks.get("efficiency_increase", True)
    ):
        return ParityStatus.NEED_MORE_CHP

    pv = candidate.capacities.get("pv", 0.0)
    wind = candidate.capacities.get("wind", 0.0)
    biomass = candidate.capacities.get("biomass_chp", 0.0)
    renewable = pv + wind + biomass
    pv_denominator = pv + wind + (biomass if reg.pv_share_includes_biomass else 0.0)
    renewable_ok = renewable >= reg.renewable_share_floor * (renewable + natural_gas) - CAPACITY_TOLERANCE
    pv_ok = pv >= reg.pv_share_floor * pv_denominator - CAPACITY_TOLERANCE
    if not (renewable_ok and pv_ok):
        return ParityStatus.NEED_LESS_CHP
    return ParityStatus.PASS


def _summary(candidate: CandidateRecord) -> dict:
    return {
        "cutoff_hz": candidate.cutoff_hz,
        "bin_index": candidate.bin_index,
        "total_cost_usd": candidate.total_cost_usd,
        "natural_gas_capacity_mw": candidate.natural_gas_capacity_mw,
        "failed_checks": sorted(name for name, ok in candidate.mandate_checks.items() if not ok),
    }


def reselect_suboptimal(
    evaluated: Mapping[int, CandidateRecord],
    failing: CandidateRecord,
    direction: ParityStatus,
    window: tuple[float, float] = (-math.inf, math.inf),
    visited: frozenset = frozenset(),
    evaluate: Optional[Callable[[int], CandidateRecord]] = None,
    bin_range: Optional[tuple[int, int]] = None,
) -> CandidateRecord:
    """
    Pick the next cut-off after a parity failure.

    Candidates qualify when their NG capacity moves strictly in `direction`
    relative to `failing` and lies inside the open `window` left by earlier
    failures. The cheapest qualifying candidate wins; ties go to the
    smallest change of bin. With none qualifying, bins are stepped one at
    a time from the failing one in the cut-off direction (up for more CHP).

    Args:
        evaluated: Candidates keyed by bin index.
        failing (CandidateRecord): Candidate that failed parity.
        direction (ParityStatus): NEED_MORE_CHP or NEED_LESS_CHP.
        window (tuple): Open NG-capacity interval still admissible.
        visited: Bins already rejected by the parity check.
        evaluate: Evaluates a bin not yet in `evaluated`.
        bin_range (tuple): Inclusive bin bounds for stepping.

    Returns:
        CandidateRecord: The reselected candidate; its cutoff_hz is the new cut-off.

    Raises:
        NoFeasibleCutoff: When no qualifying candidate exists within bounds.
    """
    more = direction is ParityStatus.NEED_MORE_CHP
    low, high = window

    def qualifies(candidate: CandidateRecord) -> bool:
        natural_gas = candidate.natural_gas_capacity_mw
        moves = natural_gas > failing.natural_gas_capacity_mw if more else (
            natural_gas < failing.natural_gas_capacity_mw
        )
        return candidate.bin_index not in visited and moves and low < natural_gas < high

    pool = [candidate for candidate in evaluated.values() if qualifies(candidate)]
    if pool:
        return min(
            pool,
            key=lambda c: (c.total_cost_usd, abs(c.bin_index - failing.bin_index), c.bin_index),
        )

    if evaluate is not None and bin_range is not None:
        step = 1 if more else -1
        bin_index = failing.bin_index + step
        while bin_range[0] <= bin_index <= bin_range[1]:
            candidate = evaluate(bin_index)
            if qualifies(candidate):
                return candidate
            bin_index += step

    cheapest = min([failing, *evaluated.values()], key=lambda c: c.total_cost_usd)
    raise NoFeasibleCutoff(
        f"no cut-off moves CHP capacity toward {direction.value} within bounds",
        best_candidate=_summary(cheapest),
        blocking="ng_threshold" if more else "renewable_share",
        direction=direction.value,
    )


class CandidateCache:
    """Memo of evaluated bins; concurrent writers of one bin store equal records."""

    def __init__(self, bundle: ScenarioBundle):
        self._bundle = bundle
        self._records: dict[int, CandidateRecord] = {}
        self._lock = Lock()

    def get(self, bin_index: int) -> CandidateRecord:
        with self._lock:
            record = self._records.get(bin_index)
        if record is None:
            record = evaluate_cutoff(self._bundle.bin_cutoff(bin_index), self._bundle)
            with self._lock:
                record = self._records.setdefault(bin_index, record)
        return record

    def snapshot(self) -> dict[int, CandidateRecord]:
        with self._lock:
            return dict(self._records)


def search_bins(bundle: ScenarioBundle) -> tuple[int, int]:
    """Inclusive bin range covered by the configured search bounds."""
    spectrum = bundle.reference_spectrum
    lower = bundle.pso.lower_hz or 0.0
    upper = spectrum.nyquist_hz if bundle.pso.upper_hz is None else bundle.pso.upper_hz
    upper = min(upper, spectrum.nyquist_hz)
    first = min(int(math.ceil(lower / spectrum.bin_step_hz - 1e-9)), bundle.n_bins - 1)
    last = max(bundle.cutoff_bin(upper), first)
    return first, last


def _entry(stage: str, candidate: CandidateRecord, status: ParityStatus) -> IterationEntry:
    return IterationEntry(
        stage=stage,
        cutoff_hz=candidate.cutoff_hz,
        bin_index=candidate.bin_index,
        total_cost_usd=candidate.total_cost_usd,
        natural_gas_capacity_mw=candidate.natural_gas_capacity_mw,
        parity=status,
    )


def revalidate(candidate: CandidateRecord, bundle: ScenarioBundle) -> None:
    """
    Independent final check of a candidate before it is emitted.

    Raises:
        SolverError: If any mandate or the NG threshold fails.
    """
    residuals = mandate_residuals(
        [candidate.capacities[name] for name in ("pv", "wind", "biomass_chp", "natural_gas_chp")],
        bundle.regulatory,
        bundle.coefficients,
        bundle.context,
    )
    failed = [name for name, ok in mandates_hold(residuals).items() if not ok]
    if candidate.natural_gas_capacity_mw < _threshold_floor(
        bundle.renewables.natural_gas_threshold_mw
    ):
        failed.append("ng_threshold")
    if failed:
        raise SolverError(f"accepted cut-off fails {', '.join(failed)}", failed=failed)


class CutoffSearch:
    """
    PSO over the cut-off, one equal-width cell of the search range per bin.

    Attributes:
        cache (CandidateCache): Every bin evaluated so far.
        first (int): Lowest searchable bin.
        last (int): Highest searchable bin.
    """

    def __init__(self, bundle: ScenarioBundle):
        self.bundle = bundle
        self.cache = CandidateCache(bundle)
        self.first, self.last = search_bins(bundle)
        self.lo = bundle.bin_cutoff(self.first)
        self.hi = bundle.bin_cutoff(self.last)

    @property
    def n_cells(self) -> int:
        return self.last - self.first + 1

    def position_bin(self, position: float) -> int:
        if self.hi <= self.lo:
            return self.first
        cell = int((position - self.lo) / (self.hi - self.lo) * self.n_cells)
        return self.first + min(max(cell, 0), self.n_cells - 1)

    def run(self) -> tuple[CandidateRecord, PsoResult]:
        result = pso_minimize(
            lambda position: self.cache.get(self.position_bin(position)).total_cost_usd,
            self.lo,
            self.hi,
            self.bundle.pso,
            seed=self.bundle.seed,
        )
        best = self.cache.get(self.position_bin(result.position))
        logger.info(
            "PSO best bin %d (%.6g Hz), cost %.2f", best.bin_index, best.cutoff_hz,
            best.total_cost_usd,
        )
        return best, result


def co_optimize(bundle: ScenarioBundle) -> CoOptimizationResult:
    """
    Search the cut-off by PSO, then repair parity failures.

    Args:
        bundle (ScenarioBundle): Scenario with Step 1 already solved.

    Returns:
        CoOptimizationResult: Final candidate, governing capacities and the
        iteration log.

    Raises:
        NoFeasibleCutoff: When no bin satisfies the threshold and mandates.
    """
    search = CutoffSearch(bundle)
    cache = search.cache
    first, last, n_cells = search.first, search.last, search.n_cells

    threshold = bundle.renewables.natural_gas_threshold_mw
    reg = bundle.regulatory
    log: list[IterationEntry] = []
    seen: set[int] = set()

    def record_new(stage: str, bins) -> None:
        for bin_index in bins:
            if bin_index not in seen:
                seen.add(bin_index)
                candidate = cache.get(bin_index)
                log.append(_entry(stage, candidate, parity_check(candidate, threshold, reg)))

    best, result = search.run()
    record_new("pso", [search.position_bin(position) for position, _ in result.evaluations])

    current = best
    window = [-math.inf, math.inf]
    visited: set[int] = set()
    swept = False
    outer = 0
    while True:
        outer += 1
        status = parity_check(current, threshold, reg)
        log.append(_entry("parity", current, status))
        if status is ParityStatus.PASS:
            break
        logger.info("Parity check at bin %d: %s", current.bin_index, status.value)
        if outer >= n_cells:
            raise NoFeasibleCutoff(
                "parity loop visited every bin",
                best_candidate=_summary(current),
                blocking=status.value,
            )
        visited.add(current.bin_index)
        if status is ParityStatus.NEED_MORE_CHP:
            window[0] = max(window[0], current.natural_gas_capacity_mw)
        else:
            window[1] = min(window[1], current.natural_gas_capacity_mw)
        if not swept and n_cells <= bundle.pso.exhaustive_bins_max:
            record_new("sweep", range(first, last + 1))
            swept = True
        current = reselect_suboptimal(
            cache.snapshot(),
            current,
            status,
            window=(window[0], window[1]),
            visited=frozenset(visited),
            evaluate=cache.get,
            bin_range=(first, last),
        )
        record_new("reselect", sorted(set(cache.snapshot()) - seen))

    revalidate(current, bundle)
    if not current.weekend_covered:
        logger.warning("Weekend days exceed the weekday-governed capacities at bin %d",
                       current.bin_index)
    return CoOptimizationResult(
        mode=bundle.mode,
        renewables=bundle.renewables,
        final=current,
        chp_capacity_by_season=current.chp_capacity_by_season,
        governing_season=current.governing_season,
        bess_power_mw=current.bess_power_mw,
        bess_energy_mwh=current.bess_energy_mwh,
        pso_best_bin=best.bin_index,
        pso_best_cost_usd=best.total_cost_usd,
        outer_iterations=outer,
        iteration_log=log,
    )
