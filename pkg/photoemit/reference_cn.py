"""Crank–Nicolson reference solver on a truncated box, for cross-checks.

The run starts from the stationary state of the discretized Hamiltonian,
which tends to φ₀ at first order in dx. A default box is sized from the
final time and its step adjusted so that the left wall sits on a node of
that standing wave; without field the run is then stationary to rounding.
"""

from __future__ import annotations
from math import ceil, floor, pi
from typing import Iterable, Iterator, NamedTuple

import numpy as np
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from photoemit.common import LOGGER
from photoemit.config import PhysicalConfig
from photoemit.exceptions import ValidationError


__all__ = [
    "CNGrid",
    "CNResult",
    "FreeSpreading",
    "cn_evolve",
    "free_gaussian",
    "lattice_state",
    "required_half_width",
]


SAFETY_MARGIN = 10.0
WATCH_FRACTION = 0.9
WATCH_THRESHOLD = 1e-3


def required_half_width(config: PhysicalConfig, final_time: float) -> float:
    """Smallest admissible half-width, 2kT plus the safety margin."""

    return 2 * config.k * final_time + SAFETY_MARGIN


class _Lattice(NamedTuple):
    """Constants of the lattice stationary state at energy k²/2."""

    q: float
    ratio: float
    gamma: float


def _lattice(config: PhysicalConfig, dx: float) -> _Lattice:
    """Return q with 1 − cos q = E dx², λ < 1 with λ + 1/λ = 2 + 2(U − E)dx²
    and γ = atan2(sin q, 1/λ − cos q)."""

    energy = config.k**2 / 2
    q = float(np.arccos(1 - energy * dx**2))
    trace = 2 + 2 * (config.U - energy) * dx**2
    inverse = (trace + np.sqrt(trace**2 - 4)) / 2
    return _Lattice(q, 1 / inverse, float(np.arctan2(np.sin(q),
                                                     inverse - np.cos(q))))


def lattice_state(config: PhysicalConfig, dx: float,
                  n: np.ndarray) -> np.ndarray:
    """Stationary state of the discretized Hamiltonian at the nodes n·dx.

    Inside the metal ψ_n = e^{iqn} − e^{2iγ} e^{−iqn}, outside ψ_n = ψ₀ λⁿ;
    the difference equation at n = 0 fixes the reflection −e^{2iγ}.
    """

    lattice = _lattice(config, dx)
    n = np.asarray(n)
    reflection = -np.exp(2j * lattice.gamma)
    inside = np.exp(1j * lattice.q * np.minimum(n, 0)) \
        + reflection * np.exp(-1j * lattice.q * np.minimum(n, 0))
    outside = (1 + reflection) * lattice.ratio ** np.maximum(n, 0)
    return np.where(n < 0, inside, outside)


def _wall_phase(config: PhysicalConfig, dx: float, count: int) -> float:
    """qN + γ; the lattice state vanishes at n = −N when it is a multiple of π."""

    lattice = _lattice(config, dx)
    return lattice.q * count + lattice.gamma


class CNGrid(NamedTuple):
    """Uniform grid on [−a, a] with hard walls; a = None sizes the box."""

    a: float | None = None
    dx: float = 0.02
    dt: float = 2e-4
    boundary: str = "dirichlet"

    @classmethod
    def from_dict(cls, values: dict[str, float]) -> CNGrid:
        """Build a grid from configuration keys cn_half_width, cn_dx, cn_dt."""
        defaults = cls()
        return cls(values.get("cn_half_width", defaults.a),
                   values.get("cn_dx", defaults.dx),
                   values.get("cn_dt", defaults.dt))

    @property
    def half_points(self) -> int:
        """Number of intervals on each half-line."""
        return round(self.a / self.dx)

    @property
    def x(self) -> np.ndarray:
        """Grid points including both walls."""
        return np.arange(-self.half_points, self.half_points + 1) * self.dx

    def sized(self, config: PhysicalConfig, final_time: float) -> CNGrid:
        """Return the grid with the default box for a run up to final_time.

        The step shrinks by less than π/(ka) so that the left wall falls
        on a node of the lattice stationary state.
        """
        if self.a is not None:
            return self

        count = ceil((required_half_width(config, final_time)
                      + 2 * pi / config.k) / self.dx)
        phase = _wall_phase(config, self.dx, count)
        target = floor(phase / pi) * pi
        lower = self.dx * (1 - 2 * pi / (phase - _lattice(config, self.dx)
                                         .gamma))
        dx = brentq(lambda h: _wall_phase(config, h, count) - target,
                    lower, self.dx, xtol=1e-18, rtol=4 * np.finfo(float).eps)
        LOGGER.debug("Crank–Nicolson box a=%.3f with dx=%.6g.", count * dx,
                     dx)
        return self._replace(a=count * dx, dx=dx)

    def validate(self) -> CNGrid:
        """Check the grid invariants."""
        if self.a is None:
            raise ValidationError("grid half-width is not sized")

        if self.a <= 0 or self.dx <= 0 or self.dt <= 0:
            raise ValidationError(f"grid parameters must be positive: {self}")

        if abs(self.a / self.dx - self.half_points) > 1e-9 * self.half_points:
            raise ValidationError(f"a/dx is not an integer: {self.a / self.dx}")

        if self.boundary != "dirichlet":
            raise ValidationError(f"unsupported boundary: {self.boundary}")

        return self

    def refined(self) -> CNGrid:
        """Grid with halved space and time steps."""
        return self._replace(dx=self.dx / 2, dt=self.dt / 2)


class CNResult(NamedTuple):
    """Sampled output of a Crank–Nicolson run."""

    config: PhysicalConfig
    grid: CNGrid
    times: np.ndarray
    current: np.ndarray
    snapshots: dict[float, np.ndarray]
    norm_drift: float
    warnings: list[str]

    def rows(self) -> Iterator[list[float]]:
        """Yield CSV rows t, t/τ, j/k."""
        period, k = self.config.period_au, self.config.k

        for time, value in zip(self.times, self.current):
            yield [time, time / period, value / k]

    def snapshot_rows(self) -> Iterator[list[float]]:
        """Yield CSV rows t, x, Re ψ, Im ψ of the stored snapshots."""
        x = self.grid.x

        for time, values in sorted(self.snapshots.items()):
            for position, value in zip(x, values):
                yield [time, position, value.real, value.imag]


def _potential(x: np.ndarray, t: float, step: float, field: float,
               omega: float) -> np.ndarray:
    """Step potential with the oscillating field; x = 0 belongs to the right."""

    return np.where(x >= 0, step - field * x * np.cos(omega * t), 0.0)


class _Stepper:
    """Trapezoidal time stepping with a tridiagonal solve per step."""

    def __init__(self, grid: CNGrid, step: float, field: float,
                 omega: float):
        self.grid = grid
        self.x = grid.x[1:-1]
        self.step = step
        self.field = field
        self.omega = omega
        self.kinetic = 1 / grid.dx**2
        self.banded = np.empty((3, len(self.x)), dtype=complex)
        self.banded[0] = self.banded[2] = -0.25j * grid.dt * self.kinetic

    def __call__(self, psi: np.ndarray, t: float) -> np.ndarray:
        """Advance the interior values from t to t + dt."""
        dt = self.grid.dt
        diagonal = self.kinetic + _potential(
            self.x, t + dt / 2, self.step, self.field, self.omega)
        rhs = (1 - 0.5j * dt * diagonal) * psi
        rhs[1:] += 0.25j * dt * self.kinetic * psi[:-1]
        rhs[:-1] += 0.25j * dt * self.kinetic * psi[1:]
        self.banded[1] = 1 + 0.5j * dt * diagonal
        return solve_banded((1, 1), self.banded, rhs, overwrite_b=True,
                            check_finite=False)


def _norm(psi: np.ndarray, dx: float) -> float:
    return float(np.sqrt(np.sum(np.abs(psi)**2) * dx))


def cn_evolve(config: PhysicalConfig, grid: CNGrid, final_time: float, *,
              stride: int = 10,
              snapshot_times: Iterable[float] = ()) -> CNResult:
    """Evolve the initial state and record the current at x = 0."""

    grid = grid.sized(config, final_time).validate()

    if grid.a <= (needed := required_half_width(config, final_time)):
        raise ValidationError(
            f"box half-width {grid.a} too small for t = {final_time}; "
            f"need more than {needed:.1f}"
        )

    stepper = _Stepper(grid, config.U, config.E_au, config.omega_au)
    nodes = np.arange(1 - grid.half_points, grid.half_points)
    initial = lattice_state(config, grid.dx, nodes)
    psi = initial.copy()
    center = grid.half_points - 1
    watch = round(WATCH_FRACTION * grid.half_points)
    scale = float(np.max(np.abs(psi)))
    initial_norm = _norm(psi, grid.dx)
    steps = round(final_time / grid.dt)
    pending = sorted(snapshot_times)
    snapshots, times, current, warnings = {}, [], [], []
    LOGGER.info("Crank–Nicolson run: %i steps on %i points.", steps,
                len(psi))

    for index in range(steps + 1):
        t = index * grid.dt

        if index % stride == 0:
            slope = (psi[center + 1] - psi[center - 1]) / (2 * grid.dx)
            times.append(t)
            current.append(float((np.conj(psi[center]) * slope).imag))

        while pending and pending[0] <= t + grid.dt / 2:
            snapshots[pending.pop(0)] = np.concatenate([[0], psi, [0]])

        if index < steps:
            psi = stepper(psi, t)

    drift = abs(_norm(psi, grid.dx) - initial_norm) / initial_norm
    # exact trapezoidal phase of an eigenvector with energy k²/2
    energy = config.k**2 / 2
    phase = ((1 - 0.5j * grid.dt * energy)
             / (1 + 0.5j * grid.dt * energy)) ** steps

    if (deviation := abs(psi[center - watch]
                         - initial[center - watch] * phase)) \
            > WATCH_THRESHOLD * scale:
        warnings.append(f"wall reflection at x=-{watch * grid.dx:.1f}: "
                        f"{deviation:.2e}")

    if (outer := abs(psi[center + watch])) > WATCH_THRESHOLD * scale:
        warnings.append(f"signal at x={watch * grid.dx:.1f}: {outer:.2e}")

    for warning in warnings:
        LOGGER.warning("Crank–Nicolson: %s.", warning)

    if drift > 1e-10:
        LOGGER.warning("Crank–Nicolson norm drift %.2e.", drift)

    return CNResult(config, grid, np.array(times), np.array(current),
                    snapshots, drift, warnings)


class FreeSpreading(NamedTuple):
    """Measured and analytic widths of a free Gaussian packet."""

    times: np.ndarray
    measured: np.ndarray
    analytic: np.ndarray

    @property
    def max_relative_error(self) -> float:
        """Largest relative deviation from the analytic width."""
        return float(np.max(np.abs(self.measured / self.analytic - 1)))


def free_gaussian(grid: CNGrid, width: float, final_time: float,
                  samples: int = 8) -> FreeSpreading:
    """Evolve exp(−x²/4σ²) without potential and track its spreading."""

    grid.validate()
    stepper = _Stepper(grid, 0.0, 0.0, 1.0)
    x = stepper.x
    psi = np.exp(-x**2 / (4 * width**2)).astype(complex)
    steps = round(final_time / grid.dt)
    marks = set(np.linspace(0, steps, samples).round().astype(int))
    times, measured = [], []

    for index in range(steps + 1):
        if index in marks:
            density = np.abs(psi)**2
            density /= np.sum(density)
            mean = np.sum(x * density)
            times.append(index * grid.dt)
            measured.append(np.sqrt(np.sum((x - mean)**2 * density)))

        if index < steps:
            psi = stepper(psi, index * grid.dt)

    times = np.array(times)
    analytic = width * np.sqrt(1 + times**2 / (4 * width**4))
    return FreeSpreading(times, np.array(measured), analytic)
