"""Averages, decay rates, oscillation counts and frequency scans."""

from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Iterator, NamedTuple

import numpy as np
from scipy.integrate import cumulative_trapezoid, trapezoid
from scipy.signal import find_peaks

from photoemit.common import LOGGER, HARTREE_EV
from photoemit.config import PhysicalConfig, SolverSettings, thresholds
from photoemit.exceptions import AccuracyError, DomainError, SolverError
from photoemit.exceptions import ValidationError
from photoemit.volterra import BoundaryTrace, solve
from photoemit.wavefield import sample_grid


__all__ = [
    "CurrentSeries",
    "DecayFit",
    "Extrapolation",
    "PeriodExtrema",
    "ScanPoint",
    "count_maxima_per_period",
    "decay_fit",
    "double_average",
    "extrapolate_average",
    "omega_scan",
    "period_extrema",
    "running_average",
]


SAMPLES_PER_PERIOD = 1024
NOISE_FLOOR = 1e-6


class CurrentSeries(NamedTuple):
    """Current j(x,t) on a uniform time grid."""

    x: float
    times: np.ndarray
    values: np.ndarray
    period: float

    @classmethod
    def from_trace(cls, trace: BoundaryTrace, final_time: float, *,
                   x: float = 0.0, samples: int = SAMPLES_PER_PERIOD,
                   threads: int | None = None) -> CurrentSeries:
        """Sample the current of a solved trace every τ/samples."""
        step = trace.period / samples
        times = np.arange(round(final_time / step) + 1) * step

        if x == 0:
            values = np.asarray(trace.current(times), dtype=float)
        else:
            values = np.array([item.j for item in sample_grid(
                trace, [x], times, threads=threads)])

        return cls(x, times, values, trace.period)

    @property
    def step(self) -> float:
        """Sampling step."""
        return float(self.times[1] - self.times[0])

    def samples_per(self, span: float) -> int:
        """Number of steps covering span, which must be a multiple."""
        count = round(span / self.step)

        if count < 1 or abs(count * self.step - span) > 1e-9 * span:
            raise DomainError(f"span {span} is not a multiple of the step")

        return count

    def normalized(self, k: float) -> CurrentSeries:
        """Return j/k."""
        return self._replace(values=self.values / k)

    def rows(self) -> Iterator[list[float]]:
        """Yield CSV rows t, t/τ, j."""
        for time, value in zip(self.times, self.values):
            yield [time, time / self.period, value]


def running_average(series: CurrentSeries,
                    span: float | None = None) -> CurrentSeries:
    """⟨j⟩_t = (1/τ)∫_{t−τ}^{t} j ds on [τ, T], by the trapezoidal rule."""

    span = series.period if span is None else span
    count = series.samples_per(span)

    if len(series.times) <= count:
        raise DomainError("series shorter than the averaging span")

    integral = cumulative_trapezoid(series.values, series.times, initial=0)
    return series._replace(times=series.times[count:],
                           values=(integral[count:] - integral[:-count]) / span)


def double_average(series: CurrentSeries, final_time: float | None = None,
                   span: float | None = None) -> float:
    """⟨⟨j⟩⟩ = (1/τ)∫_{T−τ}^{T} ⟨j⟩_t dt."""

    span = series.period if span is None else span
    final_time = series.times[-1] if final_time is None else final_time

    if final_time < 2 * span * (1 - 1e-12):
        raise DomainError("double average needs T ≥ 2τ")

    averaged = running_average(series, span)
    mask = (averaged.times >= final_time - span - averaged.step / 2) & (
        averaged.times <= final_time + averaged.step / 2)
    return float(trapezoid(averaged.values[mask], averaged.times[mask])
                 / span)


class PeriodExtrema(NamedTuple):
    """Max M_n and min μ_n of ⟨j⟩_t on each period (t_n − τ, t_n]."""

    ends: np.ndarray
    high_times: np.ndarray
    highs: np.ndarray
    low_times: np.ndarray
    lows: np.ndarray

    @property
    def spreads(self) -> np.ndarray:
        """M_n − μ_n."""
        return self.highs - self.lows

    @property
    def centres(self) -> np.ndarray:
        """Midpoint between the times of M_n and μ_n."""
        return (self.high_times + self.low_times) / 2


def period_extrema(averaged: CurrentSeries) -> PeriodExtrema:
    """Locate the extrema of ⟨j⟩_t on every complete period."""

    count = averaged.samples_per(averaged.period)
    periods = (len(averaged.times) - 1) // count
    ends, high_times, highs, low_times, lows = [], [], [], [], []

    for index in range(periods):
        window = slice(index * count + 1, (index + 1) * count + 1)
        times, chunk = averaged.times[window], averaged.values[window]
        ends.append(times[-1])
        high_times.append(times[np.argmax(chunk)])
        highs.append(chunk.max())
        low_times.append(times[np.argmin(chunk)])
        lows.append(chunk.min())

    return PeriodExtrema(*map(np.array, (ends, high_times, highs, low_times,
                                         lows)))


class DecayFit(NamedTuple):
    """Power law M_n − μ_n ≈ prefactor · (t_n ω/2π)^slope."""

    slope: float
    prefactor: float
    excluded: int
    points: int


def decay_fit(averaged: CurrentSeries, *, skip: int = 0) -> DecayFit:
    """Fit the per-period spread of the running average on log-log axes.

    Each spread is placed at the midpoint between the times of its two
    extrema.
    """

    extrema = period_extrema(averaged)
    centres, spread = extrema.centres[skip:], extrema.spreads[skip:]

    if len(spread) < 8:
        raise DomainError(f"decay fit needs 8 periods, got {len(spread)}")

    positive = spread > 0

    if (excluded := int(np.count_nonzero(~positive))):
        LOGGER.debug("Decay fit excludes %i non-positive spreads.", excluded)

    phase = centres[positive] / averaged.period
    slope, intercept = np.polyfit(np.log(phase), np.log(spread[positive]), 1)
    return DecayFit(float(slope), float(np.exp(intercept)), excluded,
                    int(np.count_nonzero(positive)))


def count_maxima_per_period(series: CurrentSeries, index: int,
                            floor: float = NOISE_FLOOR) -> int:
    """Count strict local maxima within period index."""

    count = series.samples_per(series.period)
    start, stop = index * count, (index + 1) * count

    if stop > len(series.values):
        raise DomainError(f"series does not contain period {index}")

    peaks, _ = find_peaks(series.values,
                          prominence=floor * np.max(np.abs(series.values)))
    return int(np.count_nonzero((peaks >= start) & (peaks < stop)))


class Extrapolation(NamedTuple):
    """Limit of ⟨j⟩_t from per-period means fitted to j∞ + c t^(-3/2)."""

    limit: float
    coefficient: float


def extrapolate_average(averaged: CurrentSeries, *,
                        skip: int = 2) -> Extrapolation:
    """Extrapolate the running average to t → ∞."""

    count = averaged.samples_per(averaged.period)
    periods = (len(averaged.times) - 1) // count

    if periods - skip < 3:
        raise DomainError("extrapolation needs at least three periods")

    centres, means = [], []

    for index in range(skip, periods):
        window = slice(index * count, (index + 1) * count + 1)
        means.append(trapezoid(averaged.values[window],
                               averaged.times[window]) / averaged.period)
        centres.append(averaged.times[index * count] + averaged.period / 2)

    design = np.column_stack([np.ones(len(centres)),
                              np.array(centres) ** -1.5])
    (limit, coefficient), *_ = np.linalg.lstsq(design, np.array(means),
                                               rcond=None)
    return Extrapolation(float(limit), float(coefficient))


class ScanPoint(NamedTuple):
    """One photon energy of a threshold scan."""

    photon_energy: float  # eV
    detuning: float  # ω − ω_c in eV
    double_average: float
    normalized: float  # ⟨⟨j⟩⟩/ε² with ε the field in a.u.
    error: str | None = None

    def to_row(self) -> list:
        """Return a CSV row."""
        return [self.photon_energy, self.detuning, self.double_average,
                self.normalized, self.error or ""]


def _scan_point(config: PhysicalConfig, periods: int,
                settings: SolverSettings) -> ScanPoint:
    """Solve one scan point, recording failures instead of raising."""

    detuning = (config.omega_au - thresholds(config).omega_c) * HARTREE_EV

    try:
        final_time = periods * config.period_au
        trace = solve(config, final_time, settings)
        series = CurrentSeries.from_trace(trace, final_time)
        value = double_average(series)
    except (AccuracyError, SolverError, ValidationError) as error:
        LOGGER.warning("Scan point ω=%.4f eV failed: %s",
                       config.photon_energy, error)
        return ScanPoint(config.photon_energy, detuning, float("nan"),
                         float("nan"), str(error))

    normalized = value / config.E_au**2 if config.E_au else float("nan")
    return ScanPoint(config.photon_energy, detuning, value, normalized)


def omega_scan(template: PhysicalConfig, photon_energies: Iterable[float],
               *, periods: int = 12,
               settings: SolverSettings = SolverSettings(),
               threads: int | None = None) -> list[ScanPoint]:
    """Double average after a number of periods for each photon energy."""

    configs = [template.with_photon_energy(energy)
               for energy in photon_energies]

    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(
            lambda config: _scan_point(config, periods, settings), configs))
