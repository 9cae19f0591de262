"""Registry of the published parameter sets and their data tables.

Every entry reproduces one figure caption: the metal is E_F = 4.5 eV,
W = 5.5 eV throughout, and only field, photon energy, positions and run
length vary. Builders return rows ready for CSV output; plotting is left
to external scripts.
"""

from __future__ import annotations
from typing import Any, Callable, NamedTuple

import numpy as np
from scipy.fft import irfft, rfft
from scipy.optimize import brentq

from photoemit.common import BOHR_NM, LOGGER
from photoemit.config import PhysicalConfig, SolverSettings, build_config
from photoemit.config import hartree_to_ev, keldysh, thresholds
from photoemit.exceptions import DomainError
from photoemit.observables import CurrentSeries, count_maxima_per_period
from photoemit.observables import decay_fit, extrapolate_average, omega_scan
from photoemit.observables import period_extrema
from photoemit.observables import running_average
from photoemit.reference_cn import CNGrid, cn_evolve
from photoemit.volterra import BoundaryTrace, solve


__all__ = [
    "FIGURES",
    "Figure",
    "FigureOptions",
    "FigureResult",
    "compare_cn",
    "decay_table",
    "published_config",
    "photon_energy_for_detuning",
    "reproduce",
]


FERMI_ENERGY = 4.5  # eV
WORK_FUNCTION = 5.5  # eV
SAMPLES_PER_PERIOD = 1024
OFFSET_SAMPLES = 128
DECAY_PREFACTOR = 0.0030
SCAN_DETUNINGS = np.linspace(-0.6, 0.6, 13)
SLOW_HARMONICS = 2


class FigureOptions(NamedTuple):
    """Run options shared by all builders."""

    periods: int | None = None
    settings: SolverSettings = SolverSettings()
    grid: CNGrid = CNGrid()
    threads: int | None = None


class FigureResult(NamedTuple):
    """Data table of one figure."""

    name: str
    header: list[str]
    rows: list[list]
    parameters: dict[str, Any]
    diagnostics: dict[str, Any]


class Figure(NamedTuple):
    """A registered figure."""

    name: str
    caption: str
    periods: int
    builder: Callable[[Figure, FigureOptions], FigureResult]

    def periods_for(self, options: FigureOptions) -> int:
        """Return the requested or the default number of periods."""
        return self.periods if options.periods is None else options.periods


def published_config(field_strength: float,
                 photon_energy: float) -> PhysicalConfig:
    """Configuration of the published metal."""

    return build_config(FERMI_ENERGY, WORK_FUNCTION, field_strength,
                        photon_energy)


def photon_energy_for_detuning(field_strength: float,
                               detuning: float) -> float:
    """Photon energy in eV at which ω − ω_c(ω) equals the detuning in eV."""

    def excess(photon_energy):
        config = published_config(field_strength, photon_energy)
        return hartree_to_ev(config.omega_au - thresholds(config).omega_c) \
            - detuning

    lo, hi = 0.5 * WORK_FUNCTION, 4.0 * WORK_FUNCTION

    if excess(lo) > 0 or excess(hi) < 0:
        raise DomainError(f"detuning {detuning} eV out of range at "
                          f"E = {field_strength} V/nm")

    return brentq(excess, lo, hi, xtol=1e-13)


def _solve(config: PhysicalConfig, periods: int,
           options: FigureOptions) -> tuple[BoundaryTrace, float]:
    """Solve over a number of periods."""

    final_time = periods * config.period_au
    return solve(config, final_time, options.settings), final_time


def _density(figure: Figure, options: FigureOptions) -> FigureResult:
    config = published_config(15, 1.55)
    trace, final_time = _solve(config, figure.periods_for(options), options)
    step = config.period_au / SAMPLES_PER_PERIOD
    times = np.arange(round(final_time / step) + 1) * step
    density = trace.density(times)
    rows = [[t, t / config.period_au, value, np.cos(config.omega_au * t)]
            for t, value in zip(times, density)]
    return FigureResult(figure.name, ["t", "t_over_tau", "density", "cos_wt"],
                        rows, config.to_json(),
                        {"initial_density": float(density[0])})


def _interface_currents(figure: Figure, options: FigureOptions,
                        cases: list[tuple[str, float, float]]
                        ) -> FigureResult:
    """Normalized j(0,t)/k for each labelled (E, ħω) pair."""

    rows, parameters, diagnostics = [], {}, {}
    periods = figure.periods_for(options)

    for label, field_strength, photon_energy in cases:
        config = published_config(field_strength, photon_energy)
        trace, final_time = _solve(config, periods, options)
        series = CurrentSeries.from_trace(trace, final_time).normalized(
            config.k)
        rows.extend(
            [label, field_strength, photon_energy, t, t / config.period_au,
             value, np.cos(config.omega_au * t)]
            for t, value in zip(series.times, series.values))
        parameters[label] = config.to_json()
        diagnostics[label] = {
            "keldysh": keldysh(config) if field_strength else None,
            "maxima_last_period": count_maxima_per_period(
                series, periods - 1),
        }

    header = ["case", "field_v_per_nm", "photon_energy_ev", "t",
              "t_over_tau", "j_over_k", "cos_wt"]
    return FigureResult(figure.name, header, rows, parameters, diagnostics)


def _field_scan(figure: Figure, options: FigureOptions) -> FigureResult:
    return _interface_currents(figure, options, [
        ("E1", 1, 1.55), ("E15", 15, 1.55), ("E30", 30, 1.55)])


def _keldysh_pairs(figure: Figure, options: FigureOptions) -> FigureResult:
    return _interface_currents(figure, options, [
        ("a_blue", 30, 1.55), ("a_red", 15, 0.755),
        ("b_blue", 15, 1.55), ("b_red", 7.5, 0.755)])


def _fast_amplitude(values: np.ndarray) -> float:
    """Half the spread of one period above the second harmonic."""

    spectrum = rfft(values[:-1])
    spectrum[:SLOW_HARMONICS + 1] = 0
    fast = irfft(spectrum, len(values) - 1)
    return float(fast.max() - fast.min()) / 2


def _offset_currents(figure: Figure, options: FigureOptions) -> FigureResult:
    config = published_config(30, 1.55)
    periods = figure.periods_for(options)
    trace, final_time = _solve(config, periods, options)
    rows, diagnostics = [], {}

    for x_nm in (0.0, 0.12, 0.24, 0.37):
        series = CurrentSeries.from_trace(
            trace, final_time, x=x_nm / BOHR_NM, samples=OFFSET_SAMPLES,
            threads=options.threads).normalized(config.k)
        last = series.values[-OFFSET_SAMPLES - 1:]
        rows.extend([x_nm, t, t / config.period_au, value]
                    for t, value in zip(series.times, series.values))
        diagnostics[f"x_{x_nm}_nm"] = {
            "maxima_last_period": count_maxima_per_period(
                series, periods - 1),
            "spread_last_period": float(last.max() - last.min()),
            "fast_amplitude_last_period": _fast_amplitude(last),
        }

    return FigureResult(figure.name, ["x_nm", "t", "t_over_tau", "j_over_k"],
                        rows, config.to_json(), diagnostics)


def compare_cn(name: str, config: PhysicalConfig, periods: int,
               options: FigureOptions) -> FigureResult:
    """Interface current of the exact solver and the box reference."""

    trace, final_time = _solve(config, periods, options)
    reference = cn_evolve(config, options.grid, final_time)
    exact = trace.current(reference.times)
    late = (reference.times >= config.period_au / 2) & (
        reference.times <= config.period_au * (1 + 1e-12))
    early = reference.times / config.period_au < 5e-4
    deviation = np.max(np.abs(reference.current[late] - exact[late])) \
        / np.max(np.abs(exact[late]))
    rows = [[t, t / config.period_au, value / config.k, other / config.k]
            for t, value, other in zip(reference.times, exact,
                                       reference.current)]
    diagnostics = {
        "relative_deviation_late": float(deviation),
        "cn_min_early": float(reference.current[early].min() / config.k),
        "exact_min_early": float(exact[early].min() / config.k),
        "norm_drift": reference.norm_drift,
        "warnings": reference.warnings,
    }
    parameters = config.to_json() | {"grid": reference.grid._asdict()}
    return FigureResult(name, ["t", "t_over_tau", "j_over_k_exact",
                               "j_over_k_cn"], rows, parameters, diagnostics)


def _crank_nicolson(figure: Figure, options: FigureOptions) -> FigureResult:
    return compare_cn(figure.name, published_config(15, 1.55),
                      figure.periods_for(options), options)


def _averaged(trace: BoundaryTrace, final_time: float, options: FigureOptions,
              x: float = 0.0, samples: int = SAMPLES_PER_PERIOD
              ) -> CurrentSeries:
    """Running average ⟨j⟩_t/k of a solved trace."""

    series = CurrentSeries.from_trace(trace, final_time, x=x,
                                      samples=samples,
                                      threads=options.threads)
    return running_average(series.normalized(trace.config.k))


def _running_average(figure: Figure, options: FigureOptions) -> FigureResult:
    config = published_config(10, 6)
    trace, final_time = _solve(config, figure.periods_for(options), options)
    origin = _averaged(trace, final_time, options, samples=OFFSET_SAMPLES)
    offset = _averaged(trace, final_time, options, x=0.37 / BOHR_NM,
                       samples=OFFSET_SAMPLES)
    rows = [[t, t / config.period_au, value, other]
            for t, value, other in zip(origin.times, origin.values,
                                       offset.values)]
    diagnostics = {
        "keldysh": keldysh(config),
        "final_average_x0": float(origin.values[-1]),
        "final_average_x037": float(offset.values[-1]),
    }
    return FigureResult(figure.name, ["t", "t_over_tau", "avg_j_over_k_x0",
                                      "avg_j_over_k_x037nm"], rows,
                        config.to_json(), diagnostics)


def decay_table(name: str, config: PhysicalConfig, periods: int,
                options: FigureOptions) -> FigureResult:
    """Per-period spread M_n − μ_n of ⟨j⟩_t/k with its power-law fit."""

    trace, final_time = _solve(config, periods, options)
    averaged = _averaged(trace, final_time, options)
    fit = decay_fit(averaged)
    limit = extrapolate_average(averaged)
    extrema = period_extrema(averaged)
    rows = [[int(round(end)), n, spread, DECAY_PREFACTOR * n**-1.5,
             fit.prefactor * n**fit.slope]
            for end, n, spread in zip(extrema.ends / config.period_au,
                                      extrema.centres / config.period_au,
                                      extrema.spreads)]
    diagnostics = {
        "slope": fit.slope,
        "prefactor": fit.prefactor,
        "excluded": fit.excluded,
        "points": fit.points,
        "extrapolated_average": limit.limit,
    }
    return FigureResult(name, ["n", "t_over_tau", "spread", "reference_law",
                               "fitted_law"], rows, config.to_json(),
                        diagnostics)


def _decay(figure: Figure, options: FigureOptions) -> FigureResult:
    return decay_table(figure.name, published_config(10, 6),
                       figure.periods_for(options), options)


def _threshold(figure: Figure, options: FigureOptions) -> FigureResult:
    rows, parameters, diagnostics = [], {}, {}

    for field_strength in (3, 10, 30):
        energies = [photon_energy_for_detuning(field_strength, detuning)
                    for detuning in SCAN_DETUNINGS]
        template = published_config(field_strength, energies[0])
        points = omega_scan(template, energies,
                            periods=figure.periods_for(options),
                            settings=options.settings,
                            threads=options.threads)
        rows.extend([field_strength, *point.to_row()] for point in points)
        parameters[f"E{field_strength}"] = {
            "photon_energies_ev": energies,
            "detunings_ev": SCAN_DETUNINGS.tolist(),
        }
        below, above = (points[int(np.argmin(np.abs(SCAN_DETUNINGS - d)))]
                        for d in (-0.3, 0.3))
        diagnostics[f"E{field_strength}"] = {
            "jump": above.double_average / below.double_average
            if below.double_average else None,
            "failed": sum(point.error is not None for point in points),
        }

    header = ["field_v_per_nm", "photon_energy_ev", "detuning_ev",
              "double_average", "double_average_over_eps2", "error"]
    return FigureResult(figure.name, header, rows, parameters, diagnostics)


FIGURES = {
    figure.name: figure for figure in [
        Figure("fig1", "interface density |ψ₀|², E=15 V/nm, ħω=1.55 eV", 3,
               _density),
        Figure("fig2", "j(0,t)/k for E=1, 15, 30 V/nm at ħω=1.55 eV", 3,
               _field_scan),
        Figure("fig3", "j(0,t)/k for two Keldysh-equivalent pairs", 3,
               _keldysh_pairs),
        Figure("fig4", "j(x,t)/k at x=0.12, 0.24, 0.37 nm, E=30 V/nm", 3,
               _offset_currents),
        Figure("fig5", "exact versus Crank–Nicolson current, E=15 V/nm", 1,
               _crank_nicolson),
        Figure("fig6", "running average at x=0 and 0.37 nm, ħω=6 eV", 48,
               _running_average),
        Figure("fig7", "per-period spread of the running average", 48,
               _decay),
        Figure("fig8", "double average across the threshold", 12,
               _threshold),
    ]
}


def reproduce(name: str, options: FigureOptions = FigureOptions()
              ) -> FigureResult:
    """Build the data table of a registered figure."""

    try:
        figure = FIGURES[name]
    except KeyError:
        raise DomainError(f"no such figure: {name}") from None

    LOGGER.info("Reproducing %s: %s.", name, figure.caption)
    return figure.builder(figure, options)
