"""The long-time periodic state: channels, matching and asymptotic current.

For x > 0 every channel m carries the exact time factor

    e^{−κ_m x} exp(κ_m X(t) + i(E²/8ω³) sin 2ωt),  X = (E/ω²)(1 − cos ωt),

which is written as e^{2κ_m E/ω²} P_m(t) with |P_m| ≤ 1 for closed
channels. The scale is absorbed into the amplitude T_m, so only the
Fourier coefficients g_q of P_m enter the matching system.

Across one period P_m sweeps through e^{−2κ_m E/ω²}, so the boundary
values are sums of amplitudes that cancel to that depth. The matching and
the channel sums for x ≥ 0 therefore run in a private mpmath context whose
precision covers the cancellation.
"""

from __future__ import annotations
from math import ceil, isfinite, log, log10
from typing import Iterator, NamedTuple

import numpy as np
from mpmath import MPContext
from scipy.fft import ifft

from photoemit.common import LOGGER
from photoemit.config import FloquetSettings, PhysicalConfig, thresholds
from photoemit.exceptions import ConditioningError, SolverError
from photoemit.exceptions import ValidationError


__all__ = [
    "FloquetSolution",
    "asymptotic_current",
    "asymptotic_derivative",
    "asymptotic_wave",
    "g_coeff",
    "g_series",
    "g_table",
    "kappa",
    "left_momentum",
    "match_amplitudes",
    "pde_residual",
    "solve",
]


AUTO_START = 8
AUTO_STEP = 4
AUTO_LIMIT = 64
AUTO_TOLERANCE = 1e-10
RESULT_DIGITS = 20
PRECISION_RETRIES = 3


def kappa(m: int, config: PhysicalConfig) -> complex:
    """Channel exponent κ_m = √(2(ω_c − mω)), outgoing when open."""

    gap = thresholds(config).omega_c - m * config.omega_au

    if gap > 0:
        return complex(np.sqrt(2 * gap))

    return -1j * np.sqrt(-2 * gap)


def left_momentum(m: int, config: PhysicalConfig) -> complex:
    """Reflected momentum √(k² + 2mω), decaying into the metal when closed."""

    square = config.k**2 + 2 * m * config.omega_au

    if square >= 0:
        return complex(np.sqrt(square))

    return 1j * np.sqrt(-square)


def _periodic_factor(kappas: np.ndarray, config: PhysicalConfig,
                     t: np.ndarray) -> np.ndarray:
    """P_m(t) = exp(−κ_m (E/ω²)(1 + cos ωt) + i(E²/8ω³) sin 2ωt)."""

    E, omega = config.E_au, config.omega_au  # pylint: disable=C0103
    shift = E / omega**2 * (1 + np.cos(omega * t))
    clock = E**2 / (8 * omega**3) * np.sin(2 * omega * t)
    return np.exp(-np.multiply.outer(kappas, shift) + 1j * clock)


def g_table(kappas, config: PhysicalConfig, samples: int) -> np.ndarray:
    """Fourier coefficients g_q of P for every κ, indexed [channel, q mod M].

    The series is P(t) = Σ_q g_q e^{−iqωt}, so g_q is the period mean of
    P(t) e^{iqωt}, which the inverse FFT returns at index q mod M.
    """

    kappas = np.atleast_1d(np.asarray(kappas, dtype=complex))
    t = np.arange(samples) * config.period_au / samples
    table = ifft(_periodic_factor(kappas, config, t), axis=-1)

    if not np.all(np.isfinite(table)):
        bad = np.flatnonzero(~np.all(np.isfinite(table), axis=-1))
        raise SolverError(f"g coefficients overflow for channels {bad}")

    return table


def g_coeff(q: int, kappa_m: complex, config: PhysicalConfig,
            samples: int = 256) -> complex:
    """Fourier coefficient g_q of the channel time factor."""

    if abs(q) >= samples // 2:
        raise ValidationError(f"harmonic {q} not resolved by {samples} samples")

    return complex(g_table([kappa_m], config, samples)[0, q % samples])


def _context(digits: int) -> MPContext:
    """Return a private mpmath context with the given precision."""

    ctx = MPContext()
    ctx.dps = digits
    return ctx


def _bessel_i(ctx: MPContext, top: int, z) -> list:
    """I_0(z) … I_top(z) by backward recurrence from the two highest."""

    if z == 0:
        return [ctx.one] + [ctx.zero] * top

    values = [ctx.zero] * (top + 2)
    values[top + 1] = ctx.besseli(top + 1, z)
    values[top] = ctx.besseli(top, z)

    for j in range(top, 0, -1):
        values[j - 1] = values[j + 1] + 2 * j / z * values[j]

    return values[:top + 1]


def _bessel_j(ctx: MPContext, config: PhysicalConfig) -> list:
    """J_l(E²/8ω³) for l = −L … L, with |J_L| below the working precision."""

    omega = ctx.mpf(config.omega_au)
    c = ctx.mpf(config.E_au)**2 / (8 * omega**3)
    values = [ctx.besselj(0, c)]

    while len(values) <= c or abs(values[-1]) > ctx.eps:
        values.append(ctx.besselj(len(values), c))

    # J_{−l} = (−1)^l J_l
    return [-values[l] if l % 2 else values[l]
            for l in range(len(values) - 1, 0, -1)] + values


def _series(ctx: MPContext, kappa_m, config: PhysicalConfig, order: int,
            bessel_j: list) -> list:
    """g_q for q = −order … order, list index q + order.

    With z = κE/ω² and c = E²/8ω³ the time factor factorizes into two
    generating functions, so

        g_q = e^{−z} Σ_{j + 2l = −q} (−1)^j I_j(z) J_l(c).
    """

    z = kappa_m * ctx.mpf(config.E_au) / ctx.mpf(config.omega_au)**2
    reach = len(bessel_j) // 2
    top = order + 2 * reach
    bessel_i = _bessel_i(ctx, top, z)
    signed_i = [-bessel_i[abs(j)] if j % 2 else bessel_i[abs(j)]
                for j in range(-top, top + 1)]
    scale = ctx.exp(-z)
    return [scale * ctx.fdot(
        (signed_i[top - q - 2 * l], bessel_j[l + reach])
        for l in range(-reach, reach + 1))
        for q in range(-order, order + 1)]


def g_series(q: int, kappa_m: complex, config: PhysicalConfig,
             digits: int = 30) -> complex:
    """Fourier coefficient g_q from the Bessel series at the given precision."""

    ctx = _context(digits)
    table = _series(ctx, ctx.mpc(kappa_m), config, abs(q),
                    _bessel_j(ctx, config))
    return complex(table[q + abs(q)])


def _exact_channels(ctx: MPContext, config: PhysicalConfig,
                    channels: np.ndarray) -> tuple[list, list]:
    """κ_m and the reflected momenta at working precision."""

    E, omega = ctx.mpf(config.E_au), ctx.mpf(config.omega_au)
    k, step = ctx.mpf(config.k), ctx.mpf(config.U)
    omega_c = step + E**2 / (4 * omega**2) - k**2 / 2
    kappas, momenta = [], []

    for m in channels:
        gap = omega_c - int(m) * omega
        kappas.append(ctx.mpc(ctx.sqrt(2 * gap)) if gap > 0
                      else ctx.mpc(0, -ctx.sqrt(-2 * gap)))
        square = k**2 + 2 * int(m) * omega
        momenta.append(ctx.mpc(ctx.sqrt(square)) if square >= 0
                       else ctx.mpc(0, ctx.sqrt(-square)))

    return kappas, momenta


class _Matching(NamedTuple):
    """Amplitudes of one extended-precision solve."""

    condition: float
    kappas: list
    momenta: list
    reflection: list
    transmission: list


def _match(ctx: MPContext, config: PhysicalConfig,
           channels: np.ndarray) -> _Matching:
    """Solve the matching with R eliminated, at the precision of ctx.

    Continuity of ψ̄ per harmonic gives R_n = Σ_m g_{n−m} T_m − δ_{n0};
    inserted into the derivative condition it leaves

        Σ_m [(ip_n − κ_m) g_{n−m} + (E/2ω)(g_{n−m+1} − g_{n−m−1})] T_m
            = 2ik δ_{n0}.
    """

    size = len(channels)
    order = size // 2
    span = 2 * order + 1
    half_field = ctx.mpf(config.E_au) / (2 * ctx.mpf(config.omega_au))
    kappas, momenta = _exact_channels(ctx, config, channels)
    bessel_j = _bessel_j(ctx, config)
    tables = [_series(ctx, kap, config, span, bessel_j) for kap in kappas]
    matrix = ctx.matrix(size, size)

    for col, (kap, table) in enumerate(zip(kappas, tables)):
        for row, momentum in enumerate(momenta):
            q = row - col + span
            matrix[row, col] = ((1j * momentum - kap) * table[q]
                                + half_field * (table[q + 1] - table[q - 1]))

    scale = [max(abs(matrix[row, col]) for row in range(size))
             for col in range(size)]

    for col in range(size):
        for row in range(size):
            matrix[row, col] /= scale[col]

    try:
        inverse = ctx.inverse(matrix)
    except ZeroDivisionError:
        raise ConditioningError(
            f"singular matching system with N={order}") from None

    condition = float(ctx.mnorm(matrix, 1) * ctx.mnorm(inverse, 1))
    incoming = 2j * ctx.mpf(config.k)
    transmission = [inverse[col, order] * incoming / scale[col]
                    for col in range(size)]
    reflection = [ctx.fsum(tables[col][row - col + span] * transmission[col]
                           for col in range(size)) - (row == order)
                  for row in range(size)]
    return _Matching(condition, kappas, momenta, reflection, transmission)


def _working_digits(kappas: np.ndarray, config: PhysicalConfig,
                    guard: int) -> int:
    """Digits that cover the cancellation e^{2 max Re κ E/ω²}."""

    depth = 2 * config.E_au / config.omega_au**2 * max(
        0.0, float(np.max(kappas.real)))
    return guard + ceil(depth / log(10))


class FloquetSolution(NamedTuple):
    """Matched amplitudes of the periodic state, channels m = −N..N.

    The double-precision arrays serve the tables and fluxes; the exact
    exponents and amplitudes feed the channel sums for x ≥ 0.
    """

    config: PhysicalConfig
    order: int
    channels: np.ndarray
    kappas: np.ndarray
    reflection: np.ndarray
    transmission: np.ndarray
    left_momenta: np.ndarray
    condition: float
    digits: int
    exact_kappas: tuple
    exact_transmission: tuple

    @property
    def omega_c(self) -> float:
        """One-photon threshold."""
        return thresholds(self.config).omega_c

    @property
    def open_right(self) -> np.ndarray:
        """Mask of propagating transmitted channels."""
        return self.kappas.real == 0

    @property
    def open_left(self) -> np.ndarray:
        """Mask of propagating reflected channels."""
        return self.left_momenta.imag == 0

    @property
    def right_momenta(self) -> np.ndarray:
        """Outgoing momenta p_m = iκ_m, real on open channels."""
        return np.where(self.open_right, (1j * self.kappas).real, 0.0)

    @property
    def channel_currents(self) -> np.ndarray:
        """Transmitted current per channel."""
        return self.right_momenta * np.abs(self.transmission) ** 2

    @property
    def reflected_currents(self) -> np.ndarray:
        """Reflected current per channel."""
        momenta = np.where(self.open_left, self.left_momenta.real, 0.0)
        return momenta * np.abs(self.reflection) ** 2

    @property
    def transmitted_flux(self) -> float:
        """Σ over open channels of p_m |T_m|²."""
        return float(np.sum(self.channel_currents))

    @property
    def reflected_flux(self) -> float:
        """Σ over open channels of p_m^L |R_m|²."""
        return float(np.sum(self.reflected_currents))

    @property
    def flux_defect(self) -> float:
        """|k − reflected flux − transmitted flux|."""
        return abs(self.config.k - self.reflected_flux
                   - self.transmitted_flux)

    @property
    def left_current(self) -> float:
        """Period-averaged current inside the metal, k − Σ p^L |R|²."""
        return self.config.k - self.reflected_flux

    def amplitude(self, m: int) -> tuple[complex, complex]:
        """Return (R_m, T_m)."""
        index = m + self.order
        return complex(self.reflection[index]), complex(
            self.transmission[index])

    def rows(self) -> Iterator[list]:
        """Yield CSV rows of the channel table."""
        for m, kap, refl, trans, is_open, current in zip(
                self.channels, self.kappas, self.reflection,
                self.transmission, self.open_right, self.channel_currents):
            yield [int(m), kap.real, kap.imag, refl.real, refl.imag,
                   trans.real, trans.imag, int(is_open), current]


def match_amplitudes(config: PhysicalConfig, order: int,
                     settings: FloquetSettings = FloquetSettings()
                     ) -> FloquetSolution:
    """Match ψ̄ and ∂ₓψ̄ per harmonic at x = 0 with channels −N..N.

    The precision starts from the cancellation depth and is raised until
    the balanced system leaves RESULT_DIGITS correct digits.
    """

    if order < 0:
        raise ValidationError(f"negative truncation order: {order}")

    channels = np.arange(-order, order + 1)
    digits = _working_digits(
        np.array([kappa(m, config) for m in channels]), config,
        settings.guard_digits)

    for _ in range(PRECISION_RETRIES):
        ctx = _context(digits)
        matching = _match(ctx, config, channels)

        if not isfinite(matching.condition) \
                or matching.condition > settings.condition_limit:
            raise ConditioningError(
                f"matching system with N={order} is ill-conditioned "
                f"({matching.condition:.2e}); try another truncation"
            )

        needed = ceil(log10(max(matching.condition, 1.0))) + RESULT_DIGITS

        if needed <= digits:
            break

        LOGGER.debug("Raising Floquet precision from %i to %i digits.",
                     digits, needed)
        digits = needed
    else:
        raise ConditioningError(
            f"matching system with N={order} needs more than {digits} "
            f"digits (condition {matching.condition:.2e})")

    return FloquetSolution(
        config, order, channels,
        np.array([complex(value) for value in matching.kappas]),
        np.array([complex(value) for value in matching.reflection]),
        np.array([complex(value) for value in matching.transmission]),
        np.array([complex(value) for value in matching.momenta]),
        matching.condition, digits, tuple(matching.kappas),
        tuple(matching.transmission))


def _relative_change(current: FloquetSolution,
                     previous: FloquetSolution) -> float:
    """Largest relative change of R₀ and T₀."""

    return max(abs(a - b) / max(abs(a), np.finfo(float).tiny)
               for a, b in zip(current.amplitude(0), previous.amplitude(0)))


def solve(config: PhysicalConfig,
          settings: FloquetSettings = FloquetSettings()) -> FloquetSolution:
    """Solve with the configured or an automatically converged truncation."""

    if settings.channels is not None:
        return match_amplitudes(config, settings.channels, settings)

    order = AUTO_START
    previous = match_amplitudes(config, order, settings)

    while order < AUTO_LIMIT:
        order = min(order + AUTO_STEP, AUTO_LIMIT)
        current = match_amplitudes(config, order, settings)
        change = _relative_change(current, previous)
        previous = current

        if change < AUTO_TOLERANCE:
            break
    else:
        LOGGER.warning("Floquet truncation capped at N=%i.", AUTO_LIMIT)

    LOGGER.debug("Floquet truncation N=%i, flux defect %.2e.", order,
                 previous.flux_defect)
    return previous


def _left_waves(x: float, t: np.ndarray, sol: FloquetSolution):
    """Incoming plus reflected channels inside the metal."""

    config = sol.config
    harmonics = np.exp(-1j * np.multiply.outer(sol.channels,
                                               config.omega_au * t))
    reflected = np.exp(-1j * sol.left_momenta * x)[:, np.newaxis]
    incoming = np.exp(1j * config.k * x)
    wave = incoming + np.sum(sol.reflection[:, None] * reflected
                             * harmonics, axis=0)
    slope = 1j * config.k * incoming + np.sum(
        (sol.reflection * -1j * sol.left_momenta)[:, None] * reflected
        * harmonics, axis=0)
    return wave, slope


def _right_waves(x: float, t: np.ndarray, sol: FloquetSolution):
    """Transmitted channels with the gauge phase, summed at working precision."""

    ctx = _context(sol.digits)
    E = ctx.mpf(sol.config.E_au)  # pylint: disable=C0103
    omega = ctx.mpf(sol.config.omega_au)
    reach, sweep = E / omega**2, E**2 / (8 * omega**3)
    x = ctx.mpf(x)
    kappas = [ctx.mpc(value) for value in sol.exact_kappas]
    amplitudes = [ctx.mpc(value) for value in sol.exact_transmission]
    waves, slopes = [], []

    for time in t:
        theta = omega * ctx.mpf(float(time))
        momentum = E / omega * ctx.sin(theta)
        shift = x + reach * (1 + ctx.cos(theta))
        clock = sweep * ctx.sin(2 * theta)
        wave = slope = ctx.zero

        for m, kap, amplitude in zip(sol.channels, kappas, amplitudes):
            term = amplitude * ctx.exp(-kap * shift
                                       + 1j * (clock - int(m) * theta))
            wave += term
            slope += (1j * momentum - kap) * term

        gauge = ctx.expj(momentum * x)
        waves.append(complex(gauge * wave))
        slopes.append(complex(gauge * slope))

    return np.array(waves), np.array(slopes)


def _channel_waves(x: float, t, sol: FloquetSolution):
    """Return the wave and its x-derivative without e^{−ik²t/2}."""

    t = np.atleast_1d(np.asarray(t, dtype=float))

    if x < 0:
        return _left_waves(x, t, sol)

    return _right_waves(x, t, sol)


def asymptotic_wave(x: float, t, sol: FloquetSolution):
    """Periodic-state wave function e^{−ik²t/2} ψ̄(x,t)."""

    wave, _ = _channel_waves(x, t, sol)
    wave = np.exp(-0.5j * sol.config.k**2 * np.atleast_1d(t)) * wave
    return wave[0] if np.ndim(t) == 0 else wave


def asymptotic_derivative(x: float, t, sol: FloquetSolution):
    """x-derivative of the periodic-state wave function."""

    _, slope = _channel_waves(x, t, sol)
    slope = np.exp(-0.5j * sol.config.k**2 * np.atleast_1d(t)) * slope
    return slope[0] if np.ndim(t) == 0 else slope


def asymptotic_current(sol: FloquetSolution) -> float:
    """Period-averaged transmitted current Σ_open p_m |T_m|²."""

    return sol.transmitted_flux


def pde_residual(sol: FloquetSolution, x: float, t: float,
                 step: float = 1e-2) -> float:
    """|i∂ₜψ − Hψ| at (x, t) with fourth-order central differences."""

    config = sol.config
    offsets = np.array([-2, -1, 1, 2]) * step
    first = np.array([1, -8, 8, -1]) / (12 * step)
    second = np.array([-1, 16, -30, 16, -1]) / (12 * step**2)
    in_time = np.array([asymptotic_wave(x, t + d, sol) for d in offsets])
    in_space = np.array([asymptotic_wave(x + d, t, sol)
                         for d in (-2 * step, -step, 0, step, 2 * step)])
    value = in_space[2]
    potential = (config.U - config.E_au * x
                 * np.cos(config.omega_au * t)) if x > 0 else 0.0
    return float(abs(1j * first @ in_time + 0.5 * second @ in_space
                     - potential * value))
