"""Windowed Chebyshev collocation for the boundary integral equation.

The equation ψ₀ = h + Lψ₀ is marched window by window. Both double
integrals are taken with the integration order exchanged, so the only
history needed at a time s is ψ₀(s) and the Abel transforms

    A(s) = ∫₀ˢ ψ₀(u)(s − u)^(-1/2) du,
    B(s) = ∫₀ˢ h₋(0,u)(s − u)^(-1/2) du,

whose combination D = A − 2B also yields ∂ₓψ₀ = √(2/iπ) D'.
"""

from __future__ import annotations
from cmath import sqrt as csqrt
from math import pi
from typing import Callable, Iterator, NamedTuple

import numpy as np
from numpy.linalg import LinAlgError

from photoemit.common import LOGGER
from photoemit.config import PhysicalConfig, SolverSettings
from photoemit.exceptions import DomainError, SolverError, ValidationError
from photoemit.kernels import KernelContext, evaluate, h_minus, h_plus
from photoemit.lock import Lock
from photoemit.specfun import ChebyshevSeries, abel_rule, chebyshev_nodes
from photoemit.specfun import interpolation_matrix, is_far, panel_rule


__all__ = [
    "BoundaryTrace",
    "CompanionTrace",
    "ConvergenceReport",
    "TraceWindow",
    "VolterraSolver",
    "apply_L",
    "convergence_study",
    "dx_psi0",
    "onset_slope",
    "residual",
    "solve",
    "source",
    "window_edges",
]


HALF_DERIVATIVE = csqrt(2 / (1j * pi))


def window_edges(period: float, settings: SolverSettings) -> Iterator[float]:
    """Yield window edges: 0, a doubling run from the first window, then
    uniform windows of the configured length."""

    step = period * settings.window_fraction
    edge = period * settings.first_window_fraction
    yield 0.0

    while edge < step * (1 - 1e-12):
        yield edge
        edge *= 2

    count = 1

    while True:
        yield step * count
        count += 1


class TraceWindow(NamedTuple):
    """Chebyshev representation of the trace on one window."""

    index: int
    psi: ChebyshevSeries
    abel: ChebyshevSeries
    abel_minus: ChebyshevSeries
    difference: ChebyshevSeries

    @property
    def lo(self) -> float:
        """Left edge."""
        return self.psi.lo

    @property
    def hi(self) -> float:
        """Right edge."""
        return self.psi.hi

    def dpsi(self, t):
        """Boundary derivative ∂ₓψ₀ on this window."""
        return HALF_DERIVATIVE * self.difference.time_derivative(t)

    def psi_continued(self, s):
        """ψ₀ continued to complex times near the window."""
        return self.psi.continuation(s)

    def dpsi_continued(self, s):
        """∂ₓψ₀ continued to complex times near the window."""
        slope = self.difference.derivative().continuation(s)

        if self.difference.sqrt_variable:
            slope = slope / (2 * np.sqrt(np.asarray(s, complex) - self.lo))

        return HALF_DERIVATIVE * slope


class FarPart(NamedTuple):
    """Cached history at the Gauss nodes of windows far from a time."""

    count: int
    nodes: np.ndarray
    weights: np.ndarray
    psi: np.ndarray
    h_minus: np.ndarray
    abel: np.ndarray
    abel_minus: np.ndarray

    @property
    def difference(self) -> np.ndarray:
        """D = A − 2B at the nodes."""
        return self.abel - 2 * self.abel_minus


class CompanionTrace(NamedTuple):
    """The boundary derivative ∂ₓψ₀ attached to a trace."""

    trace: BoundaryTrace

    def __call__(self, t):
        return self.trace.dpsi(t)


class BoundaryTrace:
    """Solved boundary values ψ₀(t) and ∂ₓψ₀(t) on [0, end]."""

    def __init__(self, context: KernelContext, settings: SolverSettings):
        self.context = context
        self.settings = settings
        self.windows: list[TraceWindow] = []
        self._edges = window_edges(context.config.period_au, settings)
        self.edges = [next(self._edges), next(self._edges)]
        self._far_nodes: list[np.ndarray] = []
        self._far_weights: list[np.ndarray] = []
        self._far_values: list[np.ndarray] = []
        self._far_offsets = [0]
        self._far_cache = None

    def __len__(self):
        return len(self.windows)

    @property
    def config(self) -> PhysicalConfig:
        """Physical parameters."""
        return self.context.config

    @property
    def end(self) -> float:
        """Last time covered by the trace."""
        return self.windows[-1].hi if self.windows else 0.0

    @property
    def period(self) -> float:
        """Laser period in atomic units."""
        return self.config.period_au

    @property
    def derivative(self) -> CompanionTrace:
        """Companion trace of ∂ₓψ₀."""
        return CompanionTrace(self)

    def window_bounds(self, index: int) -> tuple[float, float]:
        """Return the edges of window index, generating them as needed."""
        while len(self.edges) < index + 2:
            self.edges.append(next(self._edges))

        return self.edges[index], self.edges[index + 1]

    def window_index(self, t) -> np.ndarray:
        """Index of the window containing each time."""
        t = np.asarray(t, dtype=float)
        slack = 1e-12 * max(self.end, 1.0)

        if np.any(t < -slack) or np.any(t > self.end + slack):
            raise DomainError(f"trace covers [0, {self.end}] only")

        his = np.array([window.hi for window in self.windows])
        return np.minimum(np.searchsorted(his, t), len(self.windows) - 1)

    def _route(self, t, evaluator: Callable[[TraceWindow, np.ndarray],
                                            np.ndarray]):
        """Evaluate piecewise, sending every time to its own window."""
        scalar = np.ndim(t) == 0
        t = np.atleast_1d(np.asarray(t, dtype=float))
        indices = self.window_index(t)
        values = np.empty(t.shape, dtype=complex)

        for index in np.unique(indices):
            mask = indices == index
            values[mask] = evaluator(self.windows[index], t[mask])

        return values[0] if scalar else values

    def psi(self, t):
        """Boundary value ψ₀(t)."""
        return self._route(t, lambda window, t: window.psi(t))

    def dpsi(self, t):
        """Boundary derivative ∂ₓψ₀(t)."""
        return self._route(t, lambda window, t: window.dpsi(t))

    def psi_rate(self, t):
        """Time derivative ∂ₜψ₀(t)."""
        return self._route(t, lambda window, t: window.psi.time_derivative(t))

    def abel(self, t):
        """Abel transform of ψ₀."""
        return self._route(t, lambda window, t: window.abel(t))

    def abel_minus(self, t):
        """Abel transform of h₋(0,·)."""
        return self._route(t, lambda window, t: window.abel_minus(t))

    def density(self, t):
        """Interface density |ψ₀(t)|²."""
        return np.abs(self.psi(t)) ** 2

    def current(self, t):
        """Interface current Im(ψ₀* ∂ₓψ₀)."""
        return (np.conj(self.psi(t)) * self.dpsi(t)).imag

    def append(self, window: TraceWindow):
        """Add a solved window and cache its Gauss-node history."""
        rule = panel_rule(window.lo, window.hi,
                          self.settings.quadrature_order,
                          sqrt_variable=window.index == 0)
        nodes = rule.nodes
        self.windows.append(window)
        self._far_nodes.append(nodes)
        self._far_weights.append(rule.weights)
        self._far_values.append(np.stack([
            window.psi(nodes),
            h_minus(self.context, 0.0, nodes),
            window.abel(nodes),
            window.abel_minus(nodes),
        ]))
        self._far_offsets.append(self._far_offsets[-1] + len(nodes))
        self._far_cache = None

    def far_count(self, t: float) -> int:
        """Number of leading windows lying far from t."""
        count = 0

        for window in self.windows:
            if not is_far(window.lo, window.hi, t):
                break

            count += 1

        return count

    def far_part(self, t: float) -> FarPart:
        """History of the far windows with weights for (t − u)^(-1/2)."""
        if self._far_cache is None and self.windows:
            self._far_cache = (
                np.concatenate(self._far_nodes),
                np.concatenate(self._far_weights),
                np.concatenate(self._far_values, axis=1),
            )

        count = self.far_count(t)
        stop = self._far_offsets[count]

        if stop == 0:
            empty = np.empty(0)
            return FarPart(0, empty, empty, empty, empty, empty, empty)

        nodes, weights, values = self._far_cache
        nodes = nodes[:stop]
        return FarPart(
            count,
            nodes,
            weights[:stop] / np.sqrt(t - nodes),
            *values[:, :stop],
        )

    def panels(self, t: float, start: int, stop: int | None = None):
        """Near-field panels of the composite Abel rule for time t."""
        edges = self.edges if stop is None else self.edges[:stop + 2]
        return abel_rule(t, edges, self.settings.quadrature_order,
                         jacobi_order=self.settings.jacobi_order,
                         start=start)

    def rows(self, times) -> Iterator[list[float]]:
        """Yield CSV rows t, t/τ, Re ψ₀, Im ψ₀, Re ∂ₓψ₀, Im ∂ₓψ₀."""
        times = np.asarray(times, dtype=float)
        psi, dpsi = self.psi(times), self.dpsi(times)

        for time, value, derivative in zip(times, psi, dpsi):
            yield [time, time / self.period, value.real, value.imag,
                   derivative.real, derivative.imag]


class WindowSystem(NamedTuple):
    """Collocation operators of one window.

    At the nodes, A = a0 + a_matrix·v, B = b and
    Lψ₀ = l_history + drift·v + g_rows·(A − 2B)/2π.
    """

    times: np.ndarray
    a0: np.ndarray
    a_matrix: np.ndarray
    b: np.ndarray
    l_history: np.ndarray
    drift: np.ndarray
    g_rows: np.ndarray

    @property
    def l0(self) -> np.ndarray:
        """Part of Lψ₀ at the nodes independent of the window values."""
        return self.l_history + self.g_rows @ (self.a0 - 2 * self.b) / (2 * pi)

    @property
    def l_matrix(self) -> np.ndarray:
        """Part of Lψ₀ at the nodes linear in the window values."""
        return self.drift + self.g_rows @ self.a_matrix / (2 * pi)


class VolterraSolver:
    """Marches the boundary integral equation forward in time."""

    def __init__(self, config: PhysicalConfig,
                 settings: SolverSettings = SolverSettings()):
        self.context = KernelContext.from_config(config)
        self.settings = settings
        self.trace = BoundaryTrace(self.context, settings)
        self._lock = Lock(f"solver for {config.field_strength} V/nm, "
                          f"{config.photon_energy} eV")

    def solve(self, final_time: float) -> BoundaryTrace:
        """Solve on [0, final_time] and return the trace."""
        if final_time <= 0:
            raise ValidationError(f"final time must be positive: {final_time}")

        return self.extend(final_time)

    def extend(self, final_time: float) -> BoundaryTrace:
        """Continue the trace up to final_time, keeping earlier windows."""
        with self._lock:
            LOGGER.debug("Marching from %.6g to %.6g a.u.", self.trace.end,
                         final_time)

            while self.trace.end < final_time * (1 - 1e-14):
                self._advance()

        return self.trace

    def prescribe(self, function: Callable[[np.ndarray], np.ndarray],
                  final_time: float) -> BoundaryTrace:
        """Build a trace from a given ψ₀(t) instead of solving for it."""
        with self._lock:
            while self.trace.end < final_time * (1 - 1e-14):
                self._advance(function)

        return self.trace

    def _advance(self, function=None):
        """Solve or fill the next window."""
        index = len(self.trace)
        system = self._collocate(index)

        if function is None:
            values = self._solve_window(index, system)
        else:
            values = np.asarray(function(system.times), dtype=complex)

        lo, hi = self.trace.window_bounds(index)
        sqrt_variable = index == 0
        abel = system.a0 + system.a_matrix @ values
        window = TraceWindow(
            index,
            ChebyshevSeries.fit(values, lo, hi, sqrt_variable=sqrt_variable),
            ChebyshevSeries.fit(abel, lo, hi, sqrt_variable=sqrt_variable),
            ChebyshevSeries.fit(system.b, lo, hi,
                                sqrt_variable=sqrt_variable),
            ChebyshevSeries.fit(abel - 2 * system.b, lo, hi,
                                sqrt_variable=sqrt_variable),
        )

        if (tail := window.psi.tail()) > self.settings.tail_tolerance:
            LOGGER.warning("Window %i: Chebyshev tail %.2e above %.0e.",
                           index, tail, self.settings.tail_tolerance)

        self.trace.append(window)

        if function is None:
            self._check_nodes(index, system.times[1:], values)

        if index % 64 == 0:
            LOGGER.debug("Window %i done at t = %.6g a.u.", index, hi)

    def _collocate(self, index: int) -> WindowSystem:
        """Assemble the collocation operators of window index."""
        ctx, trace = self.context, self.trace
        degree = self.settings.degree
        lo, hi = trace.window_bounds(index)
        sqrt_variable = index == 0
        times = chebyshev_nodes(lo, hi, degree, sqrt_variable=sqrt_variable)
        size = degree + 1
        a0, b, l_history = (np.zeros(size, complex) for _ in range(3))
        a_matrix, drift, g_rows = (np.zeros((size, size), complex)
                                   for _ in range(3))

        for row, t in enumerate(times):
            if t == 0:
                continue

            far = trace.far_part(t)

            if far.count:
                values = evaluate(ctx, far.nodes, t)
                b[row] = far.weights @ far.h_minus
                a0[row] = far.weights @ far.psi
                l_history[row] = (
                    ctx.drift_coefficient * far.weights
                    @ (far.psi * values.alpha * values.phase)
                    + far.weights @ (values.g_regular * far.difference)
                    / (2 * pi)
                )

            for panel in trace.panels(t, far.count, index):
                nodes, weights = panel.rule.nodes, panel.rule.weights
                values = evaluate(ctx, nodes, t)
                b[row] += weights @ h_minus(ctx, 0.0, nodes)

                if panel.segment == index:
                    local = interpolation_matrix(
                        lo, hi, degree, nodes, sqrt_variable=sqrt_variable)
                    a_matrix[row] = weights @ local
                    drift[row] = ctx.drift_coefficient * (
                        weights * values.alpha * values.phase) @ local
                    g_rows[row] = (weights * values.g_regular) @ local
                    continue

                window = trace.windows[panel.segment]
                psi = window.psi(nodes)
                difference = window.abel(nodes) - 2 * window.abel_minus(nodes)
                a0[row] += weights @ psi
                l_history[row] += (
                    ctx.drift_coefficient * weights
                    @ (psi * values.alpha * values.phase)
                    + weights @ (values.g_regular * difference) / (2 * pi)
                )

        return WindowSystem(times, a0, a_matrix, b, l_history, drift, g_rows)

    def _solve_window(self, index: int, system: WindowSystem) -> np.ndarray:
        """Solve the dense collocation system with the first value fixed."""
        ctx = self.context

        if index == 0:
            first = ctx.transmission
        else:
            first = self.trace.windows[-1].psi(system.times[0])

        matrix = np.eye(len(system.times)) - system.l_matrix
        rhs = (h_plus(ctx, 0.0, system.times) + h_minus(ctx, 0.0, system.times)
               + system.l0)
        reduced = rhs[1:] - matrix[1:, 0] * first

        try:
            rest = np.linalg.solve(matrix[1:, 1:], reduced)
        except LinAlgError as error:
            raise SolverError(f"singular collocation system: {error}",
                              window=index) from None

        values = np.concatenate([[first], rest])

        if not np.all(np.isfinite(values)):
            raise SolverError("non-finite boundary values", window=index)

        return values

    def _check_nodes(self, index: int, times: np.ndarray,
                     values: np.ndarray):
        """Check the integral equation on the nodes of the appended window."""
        defect = residual(self.trace, times)
        scale = max(1.0, float(np.max(np.abs(values))))

        if defect > self.settings.residual_tolerance * scale:
            raise SolverError("integral equation not satisfied on the nodes",
                              window=index, residual=defect)


def _integrals(trace: BoundaryTrace, t: float) -> tuple[complex, ...]:
    """Return ∫ψ₀αe^{if}, ∫g̃A and ∫g̃B, each against (t − s)^(-1/2)."""

    ctx = trace.context
    drift = abel = abel_minus = 0j

    if t == 0:
        return drift, abel, abel_minus

    far = trace.far_part(t)

    if far.count:
        values = evaluate(ctx, far.nodes, t)
        drift += far.weights @ (far.psi * values.alpha * values.phase)
        abel += far.weights @ (values.g_regular * far.abel)
        abel_minus += far.weights @ (values.g_regular * far.abel_minus)

    for panel in trace.panels(t, far.count):
        nodes, weights = panel.rule.nodes, panel.rule.weights
        window = trace.windows[panel.segment]
        values = evaluate(ctx, nodes, t)
        drift += weights @ (window.psi(nodes) * values.alpha * values.phase)
        abel += weights @ (values.g_regular * window.abel(nodes))
        abel_minus += weights @ (values.g_regular * window.abel_minus(nodes))

    return drift, abel, abel_minus


def apply_L(trace: BoundaryTrace, t: float) -> complex:  # noqa: N802
    """Apply the integral operator L to the trace at time t."""

    if t < 0 or t > trace.end * (1 + 1e-12):
        raise DomainError(f"trace does not cover t = {t}")

    drift, abel, _ = _integrals(trace, t)
    return complex(trace.context.drift_coefficient * drift + abel / (2 * pi))


def source(trace: BoundaryTrace, t: float) -> complex:
    """Source h(t) using the Abel transform of h₋ stored on the trace."""

    ctx = trace.context

    if t == 0:
        return ctx.transmission

    _, _, abel_minus = _integrals(trace, t)
    return complex(h_plus(ctx, 0.0, t) + h_minus(ctx, 0.0, t)
                   - abel_minus / pi)


def residual(trace: BoundaryTrace, times) -> float:
    """Return max |ψ₀ − h − Lψ₀| over the sample times."""

    defects = [
        abs(trace.psi(t) - source(trace, t) - apply_L(trace, t))
        for t in np.atleast_1d(np.asarray(times, dtype=float))
    ]
    return float(max(defects))


def dx_psi0(trace: BoundaryTrace) -> CompanionTrace:
    """Return the companion trace of ∂ₓψ₀."""

    return trace.derivative


def solve(config: PhysicalConfig, final_time: float,
          settings: SolverSettings = SolverSettings()) -> BoundaryTrace:
    """Solve the boundary integral equation on [0, final_time]."""

    LOGGER.info("Solving boundary trace up to %.4g periods.",
                final_time / config.period_au)
    return VolterraSolver(config, settings).solve(final_time)


def onset_slope(trace: BoundaryTrace, lo: float = 1e-6,
                hi: float = 1e-4, samples: int = 16) -> float:
    """Log-log slope of the field-induced departure of ψ₀ for t/τ in [lo, hi].

    The departure is measured from the field-free evolution φ₀(0) e^{−ik²t/2}.
    """

    ctx = trace.context
    times = np.geomspace(lo, hi, samples) * trace.period
    deviation = np.abs(trace.psi(times) - ctx.transmission
                       * np.exp(-1j * ctx.energy * times))
    return float(np.polyfit(np.log(times), np.log(deviation), 1)[0])


class ConvergenceReport(NamedTuple):
    """Change of ψ₀ under doubled resolution."""

    change: float
    residual: float
    refined_residual: float


def convergence_study(config: PhysicalConfig, final_time: float,
                      settings: SolverSettings = SolverSettings(),
                      samples: int = 257) -> ConvergenceReport:
    """Solve at two resolutions and compare the traces."""

    coarse = solve(config, final_time, settings)
    fine = solve(config, final_time, settings.refined())
    times = np.linspace(0, final_time, samples)
    change = float(np.max(np.abs(coarse.psi(times) - fine.psi(times))))
    checkpoints = times[1::max(1, samples // 8)]
    LOGGER.info("Refinement changed ψ₀ by %.3e.", change)
    return ConvergenceReport(change, residual(coarse, checkpoints),
                             residual(fine, checkpoints))
