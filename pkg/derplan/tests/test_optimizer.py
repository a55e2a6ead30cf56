import math
from dataclasses import replace

import numpy as np
import pytest

from derplan.errors import NoFeasibleCutoff
from derplan.models import ALL_KEYS, ParityStatus
from derplan.optimizer import (
    CutoffSearch,
    build_bundle,
    co_optimize,
    evaluate_cutoff,
    parity_check,
    reselect_suboptimal,
    with_renewables,
)
from derplan.schemas import PsoConfig, RegulatoryParams, SizingParams

from .conftest import day_profile, renewables_solution


def constant_days(value: float) -> dict:
    return {(season, day_type): day_profile([value] * 96, season, day_type) for season, day_type in ALL_KEYS}


@pytest.fixture
def constant_bundle(ohio_coefficients, ohio_context, ohio_book):
    """2 MW flat load, no renewables."""
    return build_bundle(
        constant_days(2.0),
        constant_days(0.0),
        constant_days(0.0),
        renewables_solution(),
        RegulatoryParams(),
        ohio_coefficients,
        ohio_context,
        ohio_book,
        SizingParams(),
        PsoConfig(swarm_size=6, iterations=5),
    )


def enumerate_bins(bundle) -> list:
    return [evaluate_cutoff(bundle.bin_cutoff(index), bundle) for index in range(bundle.n_bins)]


def shaped(candidate, bin_index, natural_gas, cost):
    return candidate.model_copy(
        update={"bin_index": bin_index, "natural_gas_capacity_mw": natural_gas, "total_cost_usd": cost}
    )


def test_constant_net_load_goes_to_chp(constant_bundle):
    """
    Test that a flat net load is served by CHP alone at any cut-off.
    """
    for cutoff in (0.0, constant_bundle.bin_cutoff(10), constant_bundle.reference_spectrum.nyquist_hz):
        candidate = evaluate_cutoff(cutoff, constant_bundle)
        assert candidate.chp_capacity_mw == pytest.approx(2.2)
        assert candidate.natural_gas_capacity_mw == pytest.approx(2.2)
        assert candidate.bess_power_mw == pytest.approx(0.0, abs=1e-9)
        assert candidate.bess_energy_mwh == pytest.approx(0.0, abs=1e-9)
        assert candidate.weekend_covered


def test_same_bin_same_record(synthetic_bundle):
    """
    Test that cut-offs inside one bin evaluate to identical records.
    """
    step = synthetic_bundle.reference_spectrum.bin_step_hz
    first = evaluate_cutoff(5 * step, synthetic_bundle)
    second = evaluate_cutoff(5.4 * step, synthetic_bundle)
    assert first.bin_index == second.bin_index == 5
    assert first.model_dump() == second.model_dump()


def test_weekday_governs_capacities(synthetic_bundle):
    """
    Test that the CHP capacity is the largest weekday requirement.
    """
    candidate = evaluate_cutoff(synthetic_bundle.bin_cutoff(12), synthetic_bundle)
    assert candidate.chp_capacity_mw == max(candidate.chp_capacity_by_season.values())
    assert candidate.chp_capacity_by_season[candidate.governing_season.value] == candidate.chp_capacity_mw
    assert candidate.natural_gas_capacity_mw == pytest.approx(candidate.chp_capacity_mw - 0.5)


def test_parity_examples(synthetic_bundle):
    """
    Test the three parity outcomes.
    """
    candidate = evaluate_cutoff(0.0, synthetic_bundle)
    assert parity_check(candidate.model_copy(update={"natural_gas_capacity_mw": 0.5}), 1.0, RegulatoryParams()) \
        is ParityStatus.NEED_MORE_CHP
    assert parity_check(
        candidate.model_copy(update={"natural_gas_capacity_mw": 3.0}),
        1.0,
        RegulatoryParams(renewable_share_floor=0.9),
    ) is ParityStatus.NEED_LESS_CHP
    assert parity_check(candidate.model_copy(update={"natural_gas_capacity_mw": 3.0}), 1.0, RegulatoryParams()) \
        is ParityStatus.PASS
    failing_co2 = candidate.model_copy(
        update={"mandate_checks": {**candidate.mandate_checks, "co2_reduction": False}}
    )
    assert parity_check(failing_co2, 0.0, RegulatoryParams()) is ParityStatus.NEED_MORE_CHP


def test_reselect_direction_and_ties(synthetic_bundle):
    """
    Test that reselection moves NG capacity the right way and breaks ties by bin distance.
    """
    base = evaluate_cutoff(0.0, synthetic_bundle)
    failing = shaped(base, 5, 2.0, 90.0)
    evaluated = {
        3: shaped(base, 3, 1.5, 100.0),
        5: failing,
        7: shaped(base, 7, 2.5, 120.0),
        8: shaped(base, 8, 3.0, 110.0),
        9: shaped(base, 9, 3.2, 110.0),
    }
    assert reselect_suboptimal(evaluated, failing, ParityStatus.NEED_MORE_CHP).bin_index == 8
    assert reselect_suboptimal(evaluated, failing, ParityStatus.NEED_LESS_CHP).bin_index == 3
    assert reselect_suboptimal(
        evaluated, failing, ParityStatus.NEED_MORE_CHP, window=(-math.inf, 2.9)
    ).bin_index == 7
    assert reselect_suboptimal(
        evaluated, failing, ParityStatus.NEED_MORE_CHP, visited=frozenset({8})
    ).bin_index == 9


def test_reselect_without_candidates(synthetic_bundle):
    """
    Test that reselection fails when nothing moves in the required direction.
    """
    base = evaluate_cutoff(0.0, synthetic_bundle)
    failing = shaped(base, 5, 2.0, 90.0)
    with pytest.raises(NoFeasibleCutoff) as info:
        reselect_suboptimal({5: failing, 4: shaped(base, 4, 1.0, 80.0)}, failing, ParityStatus.NEED_MORE_CHP)
    assert info.value.context["direction"] == "need_more_chp"
    assert info.value.exit_code == 1


def test_pso_matches_enumeration(synthetic_bundle):
    """
    Test that the swarm finds the cheapest bin for ten seeds.
    """
    cheapest = min(candidate.total_cost_usd for candidate in enumerate_bins(synthetic_bundle))
    for seed in range(10):
        best, _ = CutoffSearch(replace(synthetic_bundle, pso=PsoConfig(seed=seed))).run()
        assert best.total_cost_usd == pytest.approx(cheapest, rel=1e-12)


def test_co_optimize_passes_parity(synthetic_bundle):
    """
    Test a mandate-free co-optimization end to end.
    """
    result = co_optimize(synthetic_bundle)
    assert result.iteration_log[-1].parity is ParityStatus.PASS
    assert result.final.total_cost_usd == pytest.approx(result.final.cost.total_usd)
    assert result.governing_season == result.final.governing_season
    assert result.bess_power_mw == result.final.bess_power_mw


def test_mandate_checks_are_plain_bools(synthetic_bundle):
    """
    Test that compliance flags are Python bools, not numpy bools.
    """
    candidate = evaluate_cutoff(synthetic_bundle.bin_cutoff(3), synthetic_bundle)
    assert candidate.mandate_checks
    assert all(type(value) is bool for value in candidate.mandate_checks.values())
    assert type(candidate.weekend_covered) is bool


def test_parity_failure_returns_cheapest_passing_bin(synthetic_bundle):
    """
    Test that when the cheapest bin fails parity the cheapest passing bin is returned.
    """
    candidates = enumerate_bins(synthetic_bundle)
    cheapest = min(candidates, key=lambda c: c.total_cost_usd)
    capacities = sorted({round(c.natural_gas_capacity_mw, 9) for c in candidates})
    above = [value for value in capacities if value > cheapest.natural_gas_capacity_mw + 1e-6]
    below = [value for value in capacities if value < cheapest.natural_gas_capacity_mw - 1e-6]

    if above:
        threshold = (cheapest.natural_gas_capacity_mw + above[0]) / 2
        bundle = with_renewables(synthetic_bundle, renewables_solution(pv=1.0, wind=1.0, biomass=0.5,
                                                                       threshold=threshold))
        passing = [c for c in candidates if c.natural_gas_capacity_mw >= threshold]
    else:
        limit = (cheapest.natural_gas_capacity_mw + below[-1]) / 2
        renewable = 2.5
        bundle = replace(
            synthetic_bundle,
            regulatory=RegulatoryParams(renewable_share_floor=renewable / (renewable + limit)),
        )
        passing = [c for c in candidates if c.natural_gas_capacity_mw <= limit]

    expected = min(c.total_cost_usd for c in passing)
    result = co_optimize(bundle)
    assert result.final.total_cost_usd == pytest.approx(expected, rel=1e-12)
    assert result.outer_iterations >= 2
    assert parity_check(result.final, bundle.renewables.natural_gas_threshold_mw, bundle.regulatory) \
        is ParityStatus.PASS


def test_unreachable_threshold(synthetic_bundle):
    """
    Test that a threshold above any achievable NG capacity has no feasible cut-off.
    """
    bundle = with_renewables(
        synthetic_bundle, renewables_solution(pv=1.0, wind=1.0, biomass=0.5, threshold=100.0)
    )
    with pytest.raises(NoFeasibleCutoff):
        co_optimize(bundle)


def test_zero_renewables(constant_bundle):
    """
    Test a plan with no renewable capacity at all.
    """
    result = co_optimize(constant_bundle)
    lines = {line.component for line in result.final.cost.lines}
    assert "pv" not in lines and "wind" not in lines
    assert result.final.capacities["natural_gas_chp"] == pytest.approx(2.2)
    assert np.isfinite(result.final.total_cost_usd)
