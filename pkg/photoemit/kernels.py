"""Closed-form kernels and sources of the boundary integral equation.

All functions accept numpy arrays and broadcast over s, t and x.
Removable singularities on the diagonal s = t are factored through
sinc functions so that no branch on t − s is needed.
"""

from __future__ import annotations
from cmath import sqrt as csqrt
from math import pi, sqrt
from typing import Callable, NamedTuple

import numpy as np

from photoemit.config import PhysicalConfig
from photoemit.exceptions import DomainError
from photoemit.specfun import Panel, abel_rule, erfc_complex
from photoemit.specfun import erfcx_complex, graded_edges


__all__ = [
    "KernelContext",
    "KernelValues",
    "abel_minus",
    "alpha",
    "capital_F",
    "ds_f_phase",
    "dx_h_minus",
    "dx_h_plus",
    "dx_phi0",
    "evaluate",
    "f_phase",
    "g_kernel",
    "g_regular",
    "gamma_plus",
    "h_minus",
    "h_plus",
    "h_source",
    "phi0",
]


SQRT_PI = sqrt(pi)
ROTATION = np.exp(-0.25j * pi)
DIAGONAL_SLACK = 1e-12


class KernelContext(NamedTuple):
    """Constants shared by the kernels, in atomic units."""

    config: PhysicalConfig
    E: float  # pylint: disable=invalid-name
    omega: float
    e_over_w: float
    e_over_w2: float
    ponderomotive: float
    sin2_coefficient: float
    shifted_step: float
    k: float
    kappa: float
    U: float  # pylint: disable=invalid-name
    transmission: complex
    reflection: complex
    drift_coefficient: complex

    @classmethod
    def from_config(cls, config: PhysicalConfig) -> KernelContext:
        """Precompute the constants for a configuration."""
        E, omega = config.E_au, config.omega_au  # pylint: disable=C0103
        ponderomotive = E**2 / (4 * omega**2)
        return cls(
            config,
            E,
            omega,
            E / omega,
            E / omega**2,
            ponderomotive,
            E**2 / (8 * omega**3),
            config.U + ponderomotive,
            config.k,
            config.kappa0,
            config.U,
            config.phi0_boundary,
            config.reflection0,
            E / (2 * omega * csqrt(2j * pi)),
        )

    @property
    def energy(self) -> float:
        """Kinetic energy ½k² of the incoming electron."""
        return self.k**2 / 2


class KernelValues(NamedTuple):
    """Kernel factors at a set of (s, t) pairs."""

    alpha: np.ndarray
    phase: np.ndarray
    g_regular: np.ndarray
    cos_ratio: np.ndarray


def _check(s, t, *, strict: bool = False):
    """Validate 0 ≤ s ≤ t, or s < t if strict."""

    s, t = np.asarray(s, dtype=float), np.asarray(t, dtype=float)
    slack = DIAGONAL_SLACK * np.maximum(np.abs(t), 1.0)

    if np.any(s > t + slack) or np.any(s < -slack):
        raise DomainError("kernel evaluated outside 0 ≤ s ≤ t")

    if strict and np.any(s >= t):
        raise DomainError("kernel evaluated on the diagonal s = t")

    return s, np.maximum(t, s)


def _sinc_terms(ctx: KernelContext, s, t):
    """Return t − s, ωm, sinc(ω(t−s)/2) and sinc(ω(t−s)) with m = (t+s)/2."""

    tau = t - s
    mid = ctx.omega * (t + s) / 2
    half = np.sinc(ctx.omega * tau / (2 * pi))
    full = np.sinc(ctx.omega * tau / pi)
    return tau, mid, half, full


def _phase_rate(ctx: KernelContext, mid, half, full):
    """Return f(s,t)/(t−s)."""

    return (
        ctx.E**2 / (2 * ctx.omega**2) * np.sin(mid)**2 * half**2
        - ctx.shifted_step
        + ctx.ponderomotive * np.cos(2 * mid) * full
    )


def _ds_phase(ctx: KernelContext, s, mid, half):
    """Return ∂f/∂s."""

    sin_s = np.sin(ctx.omega * s)
    sin_m = np.sin(mid)
    return (
        -ctx.E**2 / ctx.omega**2 * sin_m * half * sin_s
        + ctx.E**2 / (2 * ctx.omega**2) * sin_m**2 * half**2
        + ctx.shifted_step
        - ctx.ponderomotive * np.cos(2 * ctx.omega * s)
    )


def _g_regular(ctx: KernelContext, s, tau, mid, half, full):
    """Return g(s,t)·√(t−s), bounded on the diagonal."""

    rate = _phase_rate(ctx, mid, half, full)
    theta = tau * rate
    # expm1(iθ)/(2τ) = (−2 sin²(θ/2) + i sin θ)/(2τ)
    expm1_term = (
        -tau * rate**2 * np.sinc(theta / (2 * pi))**2 / 4
        + 0.5j * rate * np.sinc(theta / pi)
    )
    return expm1_term + 1j * _ds_phase(ctx, s, mid, half) * np.exp(1j * theta)


def evaluate(ctx: KernelContext, s, t) -> KernelValues:
    """Evaluate α, e^{if}, g·√(t−s) and (cos ωt − cos ωs)/(t−s) together.

    s may be complex for analytic continuation off the real axis.
    """

    tau, mid, half, full = _sinc_terms(ctx, s, t)
    sin_m = np.sin(mid)
    theta = tau * _phase_rate(ctx, mid, half, full)
    return KernelValues(
        np.sin(ctx.omega * s) - sin_m * half,
        np.exp(1j * theta),
        _g_regular(ctx, s, tau, mid, half, full),
        -ctx.omega * sin_m * half,
    )


def alpha(ctx: KernelContext, s, t):
    """α(s,t) = sin ωs + (cos ωt − cos ωs)/(ω(t − s))."""

    s, t = _check(s, t)
    _, mid, half, _ = _sinc_terms(ctx, s, t)
    return np.sin(ctx.omega * s) - np.sin(mid) * half


def f_phase(ctx: KernelContext, s, t):
    """Phase f(s,t) of the kernel, real and vanishing on the diagonal."""

    s, t = _check(s, t)
    tau, mid, half, full = _sinc_terms(ctx, s, t)
    return tau * _phase_rate(ctx, mid, half, full)


def ds_f_phase(ctx: KernelContext, s, t):
    """Partial derivative ∂f/∂s, equal to U on the diagonal."""

    s, t = _check(s, t)
    _, mid, half, _ = _sinc_terms(ctx, s, t)
    return _ds_phase(ctx, s, mid, half)


def g_regular(ctx: KernelContext, s, t):
    """Return g(s,t)·√(t − s), which equals iU/2 on the diagonal."""

    s, t = _check(s, t)
    tau, mid, half, full = _sinc_terms(ctx, s, t)
    return _g_regular(ctx, s, tau, mid, half, full)


def g_kernel(ctx: KernelContext, s, t):
    """g(s,t) = (e^{if} − 1)/(2(t−s)^{3/2}) + i ∂_s f e^{if}/√(t−s)."""

    s, t = _check(s, t, strict=True)
    return g_regular(ctx, s, t) / np.sqrt(t - s)


def capital_F(ctx: KernelContext, x, s, t):  # pylint: disable=invalid-name
    """F(x,s,t) = f + x(E/ω²)(cos ωt − cos ωs)/(t−s) + x²/(2(t−s))."""

    x = np.asarray(x, dtype=float)
    s, t = _check(s, t, strict=bool(np.any(x != 0)))
    tau, mid, half, full = _sinc_terms(ctx, s, t)
    cos_ratio = -ctx.omega * np.sin(mid) * half
    quadratic = np.divide(x**2, 2 * tau, out=np.zeros(np.broadcast(
        x, tau).shape), where=x != 0)
    return (tau * _phase_rate(ctx, mid, half, full)
            + x * ctx.e_over_w2 * cos_ratio + quadratic)


def gamma_plus(ctx: KernelContext, s, x, t, psi0, dpsi0):
    """Γ₊(s,x,t) built from the boundary values ψ₀(s) and ∂ₓψ₀(s)."""

    x = np.asarray(x, dtype=float)
    s, t = _check(s, t, strict=bool(np.any(x != 0)))
    tau, mid, half, _ = _sinc_terms(ctx, s, t)
    drift = np.divide(x, tau, out=np.zeros(np.broadcast(x, tau).shape),
                      where=x != 0)
    velocity = (ctx.e_over_w * np.sin(ctx.omega * s)
                - ctx.e_over_w2 * ctx.omega * np.sin(mid) * half + drift)
    return -1j * dpsi0 + velocity * psi0


def phi0(ctx: KernelContext, x):
    """Initial state: incoming plus reflected wave for x < 0, tail for x ≥ 0."""

    x = np.asarray(x, dtype=float)
    left = np.exp(1j * ctx.k * x) + ctx.reflection * np.exp(-1j * ctx.k * x)
    right = ctx.transmission * np.exp(-ctx.kappa * np.maximum(x, 0))
    return np.where(x < 0, left, right)


def dx_phi0(ctx: KernelContext, x):
    """Derivative of the initial state, taken from the right at x = 0."""

    x = np.asarray(x, dtype=float)
    left = 1j * ctx.k * (np.exp(1j * ctx.k * x)
                         - ctx.reflection * np.exp(-1j * ctx.k * x))
    right = -ctx.kappa * ctx.transmission * np.exp(
        -ctx.kappa * np.maximum(x, 0))
    return np.where(x < 0, left, right)


def _minus_arguments(ctx: KernelContext, x, t):
    """Arguments of the two error functions in h₋."""

    root = np.sqrt(t / 2) * ctx.k
    scaled = x / np.sqrt(2 * t)
    return ROTATION * (scaled - root), ROTATION * (scaled + root)


def h_minus(ctx: KernelContext, x, t):
    """Free evolution of the x < 0 part of the initial state, for x ≤ 0."""

    x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))

    if np.any(t < 0):
        raise DomainError("h₋ evaluated at negative time")

    safe = np.where(t > 0, t, 1.0)
    z1, z2 = _minus_arguments(ctx, x, safe)
    value = np.exp(-1j * ctx.energy * safe) / 2 * (
        np.exp(1j * ctx.k * x) * erfc_complex(z1)
        + ctx.reflection * np.exp(-1j * ctx.k * x) * erfc_complex(z2)
    )
    initial = np.where(x < 0, phi0(ctx, x), ctx.transmission / 2)
    return np.where(t > 0, value, initial)


def dx_h_minus(ctx: KernelContext, x, t):
    """x-derivative of h₋ for t > 0."""

    x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))

    if np.any(t <= 0):
        raise DomainError("∂ₓh₋ needs positive times")

    z1, z2 = _minus_arguments(ctx, x, t)
    dz = ROTATION / np.sqrt(2 * t)
    gauss = -2 / SQRT_PI * dz
    incoming = np.exp(1j * ctx.k * x)
    outgoing = ctx.reflection * np.exp(-1j * ctx.k * x)
    return np.exp(-1j * ctx.energy * t) / 2 * (
        incoming * (1j * ctx.k * erfc_complex(z1) + gauss * np.exp(-z1**2))
        + outgoing * (-1j * ctx.k * erfc_complex(z2)
                      + gauss * np.exp(-z2**2))
    )


def _plus_terms(ctx: KernelContext, x, t):
    """Return Θ, Θ − w² and w for h₋'s counterpart on x ≥ 0.

    h₊ = (T/2) e^Θ erfc(w) with Θ − w² purely imaginary.
    """

    shift = ctx.e_over_w2 * (1 - np.cos(ctx.omega * t))
    gauge = ctx.e_over_w * np.sin(ctx.omega * t)
    clock = (-(ctx.energy + ctx.ponderomotive) * t
             + ctx.sin2_coefficient * np.sin(2 * ctx.omega * t))
    w = ROTATION * (1j * np.sqrt(t / 2) * ctx.kappa
                    + (shift - x) / np.sqrt(2 * t))
    theta = 1j * gauge * x + ctx.kappa * (shift - x) + 1j * clock
    unimodular = 1j * (gauge * x + clock - t * ctx.kappa**2 / 2
                       + (shift - x)**2 / (2 * t))
    return theta, unimodular, w


def h_plus(ctx: KernelContext, x, t):
    """Volkov evolution of the x > 0 part of the initial state, for x ≥ 0."""

    x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))

    if np.any(t < 0):
        raise DomainError("h₊ evaluated at negative time")

    safe = np.where(t > 0, t, 1.0)
    theta, unimodular, w = _plus_terms(ctx, x, safe)
    forward = w.real >= 0
    scaled = erfcx_complex(np.where(forward, w, -w))

    with np.errstate(over="ignore", invalid="ignore"):
        backward = 2 * np.exp(theta) - np.exp(unimodular) * scaled

    value = ctx.transmission / 2 * np.where(
        forward, np.exp(unimodular) * scaled, backward)
    initial = np.where(x > 0, phi0(ctx, x), ctx.transmission / 2)
    return np.where(t > 0, value, initial)


def dx_h_plus(ctx: KernelContext, x, t):
    """x-derivative of h₊ for t > 0."""

    x, t = np.broadcast_arrays(np.asarray(x, float), np.asarray(t, float))

    if np.any(t <= 0):
        raise DomainError("∂ₓh₊ needs positive times")

    _, unimodular, _ = _plus_terms(ctx, x, t)
    dtheta = 1j * ctx.e_over_w * np.sin(ctx.omega * t) - ctx.kappa
    dw = -ROTATION / np.sqrt(2 * t)
    return (dtheta * h_plus(ctx, x, t)
            + ctx.transmission / 2 * np.exp(unimodular)
            * (-2 / SQRT_PI) * dw)


def abel_minus(ctx: KernelContext, t, n: int = 24):
    """Abel transform ∫₀ᵗ h₋(0,u)(t − u)^(-1/2) du."""

    values = []

    for time in np.atleast_1d(np.asarray(t, dtype=float)):
        if time == 0:
            values.append(0j)
            continue

        panels = abel_rule(time, graded_edges(time), n)
        values.append(sum(
            panel.rule.integrate(h_minus(ctx, 0.0, panel.rule.nodes))
            for panel in panels
        ))

    return np.asarray(values) if np.ndim(t) else values[0]


def h_source(ctx: KernelContext, t: float,
             abel: Callable[[np.ndarray], np.ndarray] | None = None,
             panels: list[Panel] | None = None, *, n: int = 24) -> complex:
    """Source term h(t) of the integral equation.

    The double integral over h₋(0,u) is taken with the order exchanged,
    as ∫₀ᵗ g(s,t) B(s) ds with B the Abel transform of h₋(0,·).
    """

    if t < 0:
        raise DomainError(f"negative time: {t}")

    if t == 0:
        return ctx.transmission

    if abel is None:
        abel = lambda s: abel_minus(ctx, s, n)  # noqa: E731

    if panels is None:
        panels = abel_rule(t, graded_edges(t), n)

    integral = 0j

    for panel in panels:
        nodes = panel.rule.nodes
        integral += panel.rule.integrate(
            g_regular(ctx, nodes, t) * abel(nodes))

    return complex(h_plus(ctx, 0.0, t) + h_minus(ctx, 0.0, t)
                   - integral / pi)
