"""Reconstruction of ψ(x,t) on both half-lines from the boundary trace."""

from __future__ import annotations
from concurrent.futures import ThreadPoolExecutor
from math import ceil, pi, sqrt
from typing import Callable, Iterable, Iterator

import numpy as np

from photoemit.common import BOHR_NM, LOGGER
from photoemit.exceptions import AccuracyError, DomainError
from photoemit.kernels import dx_h_minus, dx_h_plus, dx_phi0, evaluate
from photoemit.kernels import h_minus, h_plus, phi0
from photoemit.specfun import QuadratureRule, concat, gauss_rule
from photoemit.specfun import graded_rule, is_far, panel_rule
from photoemit.types import WavefieldSample
from photoemit.volterra import BoundaryTrace


__all__ = [
    "current",
    "dpsi_dx",
    "gauge_current",
    "psi",
    "psi_minus",
    "psi_plus",
    "rows",
    "sample",
    "sample_grid",
    "x_grid",
]


LEFT = np.exp(0.25j * pi) / (2 * sqrt(2 * pi))
RIGHT = np.exp(0.75j * pi) / (2 * sqrt(2 * pi))
CONTOUR_ORDER = 32
SURFACE_LAYER = 1e-3
PHASE_ORDER = 12
Integrand = Callable[[np.ndarray, np.ndarray, np.ndarray, np.ndarray],
                     np.ndarray]


def _history_rule(trace: BoundaryTrace, top: float, t: float,
                  gap: float) -> QuadratureRule:
    """Rule for ∫ F(s) ds over [0, top] with F nearly singular at s = t.

    The graded panels keep at least gap between their last node and t.
    """

    order = trace.settings.quadrature_order
    rules = []

    for window in trace.windows:
        if window.lo >= top:
            break

        hi = min(window.hi, top)
        sqrt_variable = window.index == 0

        if is_far(window.lo, hi, t):
            rules.append(panel_rule(window.lo, hi, order,
                                    sqrt_variable=sqrt_variable))
        else:
            rules.append(graded_rule(window.lo, hi, max(t - hi, gap),
                                     order, sqrt_variable=sqrt_variable))

    return concat(rules)


def _oscillatory(trace: BoundaryTrace, t: float, a: float,
                 integrand: Integrand) -> np.ndarray:
    """Return ∫₀ᵗ Φ(s) e^{ia/(t−s)} ds for every row of Φ = integrand.

    Near s = t the phase is taken along the contour a/(t−s) = w₀ + ir,
    where the integrand decays like e^{−r}. In between, panels follow
    the phase in the variable w = a/(t−s); far from t the phase is slow
    and the trace windows set the panels.
    """

    window = trace.windows[int(trace.window_index(t))]
    near = min(0.05 * (window.hi - window.lo), a / 20, t)
    start = a / near
    contour = gauss_rule("laguerre", CONTOUR_ORDER)
    w = start + 1j * contour.nodes
    tau = a / w
    s = t - tau
    values = integrand(s, tau, window.psi_continued(s),
                       window.dpsi_continued(s))
    total = 1j * np.exp(1j * start) * (values * (a / w**2)) @ contour.weights
    stop = max(pi, a / t)

    if stop < start:
        count = ceil((start - stop) / pi)
        edges = np.linspace(stop, start, count + 1)
        rule = concat(gauss_rule("legendre", PHASE_ORDER).on(lo, hi)
                      for lo, hi in zip(edges[:-1], edges[1:]))
        w = rule.nodes
        tau = a / w
        s = t - tau
        values = integrand(s, tau, trace.psi(s), trace.dpsi(s))
        total = total + (values * (a / w**2 * np.exp(1j * w))) @ rule.weights

    if (top := t - a / stop) > 0:
        rule = _history_rule(trace, top, t, near)
        s = rule.nodes
        tau = t - s
        values = integrand(s, tau, trace.psi(s), trace.dpsi(s))
        total = total + (values * np.exp(1j * a / tau)) @ rule.weights

    return total


def _check_time(trace: BoundaryTrace, t: float):
    """Refuse times the trace does not cover."""

    if t < 0 or t > trace.end * (1 + 1e-12):
        raise DomainError(f"trace covers [0, {trace.end}], not t = {t}")


def _minus(x: float, t: float, trace: BoundaryTrace) -> tuple[complex, ...]:
    """Return ψ₋ and ∂ₓψ₋ at x < 0."""

    def integrand(_, tau, value, slope):
        root = tau ** -0.5
        return np.stack([
            (slope + 1j * value * x / tau) * root,
            ((1j * value + 1j * x * slope) / tau - value * x**2 / tau**2)
            * root,
        ])

    integral = _oscillatory(trace, t, x**2 / 2, integrand)
    ctx = trace.context
    return (complex(h_minus(ctx, x, t) + LEFT * integral[0]),
            complex(dx_h_minus(ctx, x, t) + LEFT * integral[1]))


def _plus(x: float, t: float, trace: BoundaryTrace) -> tuple[complex, ...]:
    """Return χ, ∂ₓχ and the gauge momentum, with ψ₊ = e^{i p x} χ."""

    ctx = trace.context

    def integrand(s, tau, value, slope):
        kernel = evaluate(ctx, s, t)
        beta = ctx.e_over_w2 * kernel.cos_ratio
        gamma = -1j * slope + (
            ctx.e_over_w * np.sin(ctx.omega * s) + beta + x / tau) * value
        weight = kernel.phase * np.exp(1j * x * beta) * tau ** -0.5
        return np.stack([
            gamma * weight,
            (value / tau + gamma * (1j * beta + 1j * x / tau)) * weight,
        ])

    integral = _oscillatory(trace, t, x**2 / 2, integrand)
    momentum = ctx.e_over_w * np.sin(ctx.omega * t)
    gauge = np.exp(-1j * momentum * x)
    bracket = complex(gauge * h_plus(ctx, x, t) - RIGHT * integral[0])
    slope = complex(gauge * (dx_h_plus(ctx, x, t) - 1j * momentum
                             * h_plus(ctx, x, t)) - RIGHT * integral[1])
    return bracket, slope, momentum


def _surface(x: float, t: float,
             trace: BoundaryTrace) -> tuple[complex, complex]:
    """Second-order expansion of ψ about x = 0 on the side of x.

    The curvature follows from the equation of motion at the surface,
    ψ'' = 2(Θ(x)U ψ₀ − i∂ₜψ₀); the field term vanishes at x = 0.
    """

    value, slope = complex(trace.psi(t)), complex(trace.dpsi(t))
    step = trace.context.U if x > 0 else 0.0
    curvature = 2 * (step * value - 1j * complex(trace.psi_rate(t)))
    return (value + x * slope + x**2 / 2 * curvature,
            slope + x * curvature)


def _evaluate(x: float, t: float,
              trace: BoundaryTrace) -> tuple[complex, complex]:
    """Return ψ and ∂ₓψ at (x, t)."""

    _check_time(trace, t)
    ctx = trace.context

    if t == 0:
        return complex(phi0(ctx, x)), complex(dx_phi0(ctx, x))

    if abs(x) < SURFACE_LAYER:
        return _surface(x, t, trace)

    if x < 0:
        value, slope = _minus(x, t, trace)
    else:
        bracket, bracket_slope, momentum = _plus(x, t, trace)
        gauge = np.exp(1j * momentum * x)
        value = complex(gauge * bracket)
        slope = complex(gauge * (1j * momentum * bracket + bracket_slope))

    if not (np.isfinite(value) and np.isfinite(slope)):
        raise AccuracyError(f"wave function at x={x}, t={t}", float("inf"),
                            1e-8)

    return value, slope


def psi_minus(x: float, t: float, trace: BoundaryTrace) -> complex:
    """Wave function inside the metal, x ≤ 0."""

    if x > 0:
        raise DomainError(f"ψ₋ needs x ≤ 0, got {x}")

    return _evaluate(x, t, trace)[0]


def psi_plus(x: float, t: float, trace: BoundaryTrace) -> complex:
    """Wave function outside the metal, x ≥ 0, including the gauge phase."""

    if x < 0:
        raise DomainError(f"ψ₊ needs x ≥ 0, got {x}")

    return _evaluate(x, t, trace)[0]


def psi(x: float, t: float, trace: BoundaryTrace) -> complex:
    """Wave function on either side."""

    return _evaluate(x, t, trace)[0]


def dpsi_dx(x: float, t: float, trace: BoundaryTrace) -> complex:
    """Spatial derivative ∂ₓψ, differentiated under the integral sign."""

    return _evaluate(x, t, trace)[1]


def sample(x: float, t: float, trace: BoundaryTrace) -> WavefieldSample:
    """Wave function, derivative and current at one point."""

    return WavefieldSample.from_values(x, t, *_evaluate(x, t, trace))


def current(x: float, t: float, trace: BoundaryTrace) -> float:
    """Probability current j = Im(ψ* ∂ₓψ)."""

    return sample(x, t, trace).j


def gauge_current(x: float, t: float, trace: BoundaryTrace) -> float:
    """Current of ψ₊ = e^{ipx} χ computed as p|χ|² + Im(χ* ∂ₓχ)."""

    if x <= 0:
        raise DomainError(f"gauge split needs x > 0, got {x}")

    _check_time(trace, t)
    bracket, slope, momentum = _plus(x, t, trace)
    return float(momentum * abs(bracket)**2
                 + (np.conj(bracket) * slope).imag)


def x_grid(lo_nm: float, hi_nm: float, points: int = 512) -> np.ndarray:
    """Positions in atomic units for a range given in nanometres."""

    return np.linspace(lo_nm, hi_nm, points) / BOHR_NM


def sample_grid(trace: BoundaryTrace, xs: Iterable[float],
                times: Iterable[float], *,
                threads: int | None = None) -> list[WavefieldSample]:
    """Sample every (x, t) pair, x varying slowest."""

    points = [(x, t) for x in xs for t in times]
    LOGGER.debug("Sampling %i wave field points.", len(points))

    with ThreadPoolExecutor(max_workers=threads) as executor:
        return list(executor.map(lambda point: sample(*point, trace),
                                 points))


def rows(samples: Iterable[WavefieldSample], period: float,
         k: float) -> Iterator[list[float]]:
    """Yield CSV rows x, x_nm, t, t/τ, Re ψ, Im ψ, j/k."""

    for item in samples:
        yield [item.x, item.x * BOHR_NM, item.t, item.t / period,
               item.psi.real, item.psi.imag, item.j / k]
