import numpy as np
import pytest

from derplan.errors import DegenerateParams, DomainError
from derplan.schemas import SizingParams
from derplan.spectral_sizing import (
    clamp_negative,
    forward_transform,
    inverse_transform,
    size_bess,
    size_chp,
    split_at_cutoff,
    split_day,
)

SLOTS = np.arange(96)


def square_wave() -> np.ndarray:
    return np.where(SLOTS < 48, 1.0, -1.0)


def test_constant_day_spectrum(make_day):
    """
    Test that a constant day has only a DC bin and the expected frequency grid.
    """
    spectrum = forward_transform(make_day([2.0] * 96))
    assert spectrum.coefficients[0] == pytest.approx(192.0)
    np.testing.assert_allclose(np.abs(spectrum.coefficients[1:]), 0.0, atol=1e-12)
    assert spectrum.bin_step_hz == pytest.approx(1 / 86400)
    assert spectrum.nyquist_hz == pytest.approx(1 / 1800)
    assert spectrum.n_bins == 49


def test_single_tone(make_day):
    """
    Test that one cosine tone lands in bins 3 and 93 and is split by the cut-off.
    """
    tone = np.cos(2 * np.pi * 3 * SLOTS / 96)
    spectrum = forward_transform(make_day(2.0 + tone))
    assert abs(spectrum.coefficients[3]) == pytest.approx(48.0)
    assert abs(spectrum.coefficients[93]) == pytest.approx(48.0)

    chp, bess = split_at_cutoff(spectrum, 2.5 * spectrum.bin_step_hz)
    np.testing.assert_allclose(chp, 2.0, atol=1e-12)
    np.testing.assert_allclose(bess, tone, atol=1e-12)

    chp, bess = split_at_cutoff(spectrum, 3 * spectrum.bin_step_hz)
    np.testing.assert_allclose(chp, 2.0 + tone, atol=1e-12)
    np.testing.assert_allclose(bess, 0.0, atol=1e-12)


def test_parseval_and_round_trip(make_day):
    """
    Test energy conservation of the transform and exact reconstruction on many random days.
    """
    rng = np.random.default_rng(4)
    for _ in range(1000):
        values = rng.normal(3.0, 1.0, 96)
        spectrum = forward_transform(make_day(values))
        energy = np.sum(values**2)
        assert abs(energy - np.sum(np.abs(spectrum.coefficients) ** 2) / 96) <= 1e-9 * energy
        np.testing.assert_allclose(inverse_transform(spectrum), values, rtol=0, atol=1e-12)


def test_battery_share_has_zero_mean(make_day):
    """
    Test that the raw battery series sums to zero at every cut-off, so the mean stays on CHP.
    """
    rng = np.random.default_rng(6)
    for _ in range(20):
        values = rng.uniform(-1.0, 4.0, 96)
        spectrum = forward_transform(make_day(values))
        for index in range(spectrum.n_bins):
            chp, bess = split_at_cutoff(spectrum, index * spectrum.bin_step_hz)
            assert abs(bess.sum()) <= 1e-9 * np.abs(values).sum()
            np.testing.assert_allclose(chp + bess, values, atol=1e-12)


def test_cutoff_extremes(make_day):
    """
    Test that cut-off 0 keeps only the mean on CHP and Nyquist keeps everything.
    """
    values = 3.0 + np.random.default_rng(5).normal(0.0, 0.5, 96)
    spectrum = forward_transform(make_day(values))

    chp, bess = split_at_cutoff(spectrum, 0.0)
    np.testing.assert_allclose(chp, values.mean(), atol=1e-12)
    np.testing.assert_allclose(bess, values - values.mean(), atol=1e-12)

    chp, bess = split_at_cutoff(spectrum, spectrum.nyquist_hz)
    np.testing.assert_allclose(chp, values, atol=1e-12)
    np.testing.assert_allclose(bess, 0.0, atol=1e-12)


def test_cutoff_out_of_range(make_day):
    """
    Test that negative cut-offs and cut-offs above Nyquist are rejected.
    """
    spectrum = forward_transform(make_day([1.0] * 96))
    with pytest.raises(DomainError):
        split_at_cutoff(spectrum, -1e-9)
    with pytest.raises(DomainError):
        split_at_cutoff(spectrum, spectrum.nyquist_hz * 1.01)


def test_clamp_negative():
    """
    Test that negative CHP power moves onto the battery.
    """
    chp, bess = clamp_negative(np.array([-0.5, 1.0]), np.array([1.0, 0.5]))
    np.testing.assert_allclose(chp, [0.0, 1.0])
    np.testing.assert_allclose(bess, [0.5, 0.5])
    chp, bess = clamp_negative(np.array([0.2, 0.3]), np.array([0.1, -0.1]))
    np.testing.assert_allclose(chp, [0.2, 0.3])
    np.testing.assert_allclose(bess, [0.1, -0.1])


def test_size_chp():
    """
    Test the CHP capacity with reserve margin.
    """
    assert size_chp(np.array([1.0, 3.0, 2.0]), 0.1) == pytest.approx(3.3)
    assert size_chp(np.array([0.0, 0.0]), 0.1) == 0.0


def test_square_wave_lossless():
    """
    Test battery sizing for a +1/-1 MW square wave with a lossless battery.
    """
    params = SizingParams(bess_efficiency=1.0, soc_min=0.5, soc_max=1.0)
    sizing = size_bess(square_wave(), params, 0.25)
    assert sizing.power_mw == pytest.approx(1.0)
    assert sizing.energy_mwh == pytest.approx(24.0)
    assert sizing.trace_mwh.size == 97
    assert sizing.trace_mwh[0] == 0.0
    assert sizing.trace_mwh[-1] == pytest.approx(0.0, abs=1e-12)


def test_square_wave_with_losses():
    """
    Test that battery losses raise the terminal power and the energy capacity.
    """
    params = SizingParams(bess_efficiency=0.85, soc_min=0.5, soc_max=1.0)
    sizing = size_bess(square_wave(), params, 0.25)
    assert sizing.power_mw == pytest.approx(1 / 0.85)
    assert sizing.energy_mwh == pytest.approx(12 / 0.85 / 0.5)


def test_empty_soc_window():
    """
    Test that an empty SOC window cannot size a battery.
    """
    params = SizingParams.model_construct(reserve_margin=0.1, bess_efficiency=0.85, soc_min=0.6, soc_max=0.6)
    with pytest.raises(DegenerateParams):
        size_bess(square_wave(), params, 0.25)


@pytest.mark.parametrize("cutoff_bins", [0, 1, 2.5, 7, 20, 48])
def test_split_day_identity(make_day, cutoff_bins):
    """
    Test that CHP and battery add up to the net load with non-negative CHP.
    """
    rng = np.random.default_rng(int(cutoff_bins * 10))
    slots = np.arange(96)
    values = 1.0 + np.sin(2 * np.pi * slots / 96) + rng.normal(0.0, 0.6, 96)
    day = make_day(values)
    result = split_day(day, cutoff_bins / 86400, SizingParams())
    chp = np.asarray(result.chp_mw)
    bess = np.asarray(result.bess_mw)
    np.testing.assert_allclose(chp + bess, values, atol=1e-12)
    assert chp.min() >= 0.0
    assert result.chp_capacity_mw == pytest.approx(chp.max() * 1.1)
    assert len(result.energy_trace_mwh) == 97


def test_split_day_constant(make_day):
    """
    Test that a constant net load goes entirely to CHP.
    """
    result = split_day(make_day([2.0] * 96), 0.0, SizingParams())
    np.testing.assert_allclose(result.chp_mw, 2.0)
    np.testing.assert_allclose(result.bess_mw, 0.0, atol=1e-12)
    assert result.chp_capacity_mw == pytest.approx(2.2)
    assert result.bess_power_mw == pytest.approx(0.0, abs=1e-12)
    assert result.bess_energy_mwh == pytest.approx(0.0, abs=1e-10)
