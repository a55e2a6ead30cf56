import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import DegenerateParams, DomainError, ShapeError
from .models import DayProfile, SplitResult
from .schemas import SizingParams

logger = logging.getLogger(__name__)

SECONDS_PER_HOUR = 3600.0
BIN_EDGE_TOLERANCE = 1e-9


@dataclass(frozen=True)
class Spectrum:
    """
    Unnormalized DFT of one day.

    Attributes:
        coefficients: Complex bins X[m], m = 0..N_S-1.
        frequencies: Signed bin frequencies in Hz.
        bin_step_hz: 1 / (N_S * T).
        nyquist_hz: 1 / (2 * T).
    """

    coefficients: np.ndarray
    frequencies: np.ndarray
    bin_step_hz: float
    nyquist_hz: float
    interval_hours: float

    @property
    def n_samples(self) -> int:
        return self.coefficients.size

    @property
    def n_bins(self) -> int:
        """Distinct non-negative cut-off bins, DC through Nyquist."""
        return self.n_samples // 2 + 1


class BessSizing(NamedTuple):
    power_mw: float
    energy_mwh: float
    trace_mwh: np.ndarray


def forward_transform(day: DayProfile) -> Spectrum:
    """DFT of a day profile; bin frequencies come from the sample spacing."""
    values = day.values
    if values.size < 2:
        raise ShapeError("a spectrum needs at least two samples")
    spacing = day.interval_hours * SECONDS_PER_HOUR
    return Spectrum(
        coefficients=np.fft.fft(values),
        frequencies=np.fft.fftfreq(values.size, d=spacing),
        bin_step_hz=1.0 / (values.size * spacing),
        nyquist_hz=1.0 / (2.0 * spacing),
        interval_hours=day.interval_hours,
    )


def inverse_transform(spectrum: Spectrum) -> np.ndarray:
    return np.fft.ifft(spectrum.coefficients).real


def split_at_cutoff(spectrum: Spectrum, cutoff_hz: float) -> tuple[np.ndarray, np.ndarray]:
    """
    Split a day into its low- and high-frequency parts.

    Bins with |f| <= cutoff go to CHP; DC always does. The rest goes to
    the battery.

    Returns:
        tuple: (raw_chp, raw_bess) real series in MW.

    Raises:
        DomainError: If the cut-off lies outside [0, Nyquist].
    """
    if cutoff_hz < 0.0 or cutoff_hz > spectrum.nyquist_hz * (1.0 + 1e-12):
        raise DomainError(f"cut-off {cutoff_hz} Hz outside [0, {spectrum.nyquist_hz}] Hz")
    low = np.abs(spectrum.frequencies) <= cutoff_hz + BIN_EDGE_TOLERANCE * spectrum.bin_step_hz
    low[0] = True
    raw_chp = np.fft.ifft(np.where(low, spectrum.coefficients, 0.0)).real
    raw_bess = np.fft.ifft(np.where(low, 0.0, spectrum.coefficients)).real
    return raw_chp, raw_bess


def clamp_negative(
    raw_chp: np.ndarray, raw_bess: np.ndarray, net: Optional[np.ndarray] = None
) -> tuple[np.ndarray, np.ndarray]:
    """
    Shift negative CHP power onto the battery.

    Args:
        raw_chp: Low-frequency series.
        raw_bess: High-frequency series.
        net: Net load the pair must add up to; defaults to their sum.

    Returns:
        tuple: (chp >= 0, bess = net - chp).
    """
    raw_chp = np.asarray(raw_chp, dtype=float)
    if net is None:
        net = raw_chp + np.asarray(raw_bess, dtype=float)
    chp = np.maximum(raw_chp, 0.0)
    return chp, np.asarray(net, dtype=float) - chp


def size_chp(chp_series: np.ndarray, reserve_margin: float) -> float:
    series = np.asarray(chp_series, dtype=float)
    if series.size == 0:
        return 0.0
    return max(float(series.max()), 0.0) * (1.0 + reserve_margin)


def size_bess(bess_series: np.ndarray, params: SizingParams, interval_hours: float) -> BessSizing:
    """
    Size battery power and energy from its dispatch series.

    Terminal power divides discharge (+) by the efficiency and multiplies
    charge (-) by it. The energy trace starts at zero and discharge lowers
    it; energy capacity is the trace spread over the usable SOC window.

    Args:
        bess_series: Battery dispatch in MW, + discharging.
        params (SizingParams): Efficiency and SOC window.
        interval_hours (float): Slot length T.

    Returns:
        BessSizing: power MW, energy MWh and the N_S + 1 point trace.

    Raises:
        DegenerateParams: If the SOC window is empty.
    """
    window = params.soc_max - params.soc_min
    if window <= 0.0:
        raise DegenerateParams("SOC_max must exceed SOC_min", section="sizing_params")
    series = np.asarray(bess_series, dtype=float)
    terminal = np.where(
        series >= 0.0, series / params.bess_efficiency, series * params.bess_efficiency
    )
    trace = np.concatenate([[0.0], -np.cumsum(terminal * interval_hours)])
    power = float(np.abs(terminal).max(initial=0.0))
    energy = float(trace.max() - trace.min()) / window
    return BessSizing(power, energy, trace)


def split_day(net_day: DayProfile, cutoff_hz: float, params: SizingParams,
              spectrum: Optional[Spectrum] = None) -> SplitResult:
    """
    Split one net-load day at `cutoff_hz` and size CHP and battery for it.

    Args:
        net_day (DayProfile): Net load in MW.
        cutoff_hz (float): Cut-off frequency.
        params (SizingParams): Reserve, efficiency and SOC window.
        spectrum (Optional[Spectrum]): Precomputed transform of `net_day`.

    Returns:
        SplitResult: Series, capacities and the daily energy imbalance.
    """
    spectrum = spectrum or forward_transform(net_day)
    net = net_day.values
    raw_chp, raw_bess = split_at_cutoff(spectrum, cutoff_hz)
    chp, bess = clamp_negative(raw_chp, raw_bess, net=net)
    sizing = size_bess(bess, params, net_day.interval_hours)
    imbalance = float(bess.sum() * net_day.interval_hours)
    if abs(imbalance) > 1e-9 * max(1.0, float(np.abs(net).sum())):
        logger.debug(
            "%s/%s at %.3g Hz: battery daily imbalance %.4g MWh after clamping",
            net_day.season.value,
            net_day.day_type.value,
            cutoff_hz,
            imbalance,
        )
    return SplitResult(
        season=net_day.season,
        day_type=net_day.day_type,
        cutoff_hz=cutoff_hz,
        net_mw=net.tolist(),
        chp_mw=chp.tolist(),
        bess_mw=bess.tolist(),
        chp_capacity_mw=size_chp(chp, params.reserve_margin),
        bess_power_mw=sizing.power_mw,
        bess_energy_mwh=sizing.energy_mwh,
        energy_trace_mwh=sizing.trace_mwh.tolist(),
        daily_energy_imbalance_mwh=imbalance,
    )
