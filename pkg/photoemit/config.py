"""Physical parameters, unit conversion and configuration files."""

from __future__ import annotations
from math import isfinite, pi, sqrt
from pathlib import Path
from typing import Any, NamedTuple

try:
    from tomllib import TOMLDecodeError, load
except ModuleNotFoundError:  # Python < 3.11
    from tomli import TOMLDecodeError, load

from photoemit.common import FIELD_V_PER_NM, HARTREE_EV, LOGGER, TIME_AS
from photoemit.exceptions import ConfigError, DomainError, ValidationError


__all__ = [
    "ConfigFile",
    "FloquetSettings",
    "PhysicalConfig",
    "SolverSettings",
    "Thresholds",
    "build_config",
    "ev_to_hartree",
    "field_to_au",
    "hartree_to_ev",
    "keldysh",
    "load_config",
    "thresholds",
]


PHYSICAL_KEYS = {
    "fermi_energy_ev",
    "work_function_ev",
    "field_v_per_nm",
    "photon_energy_ev",
}
GRID_KEYS = {"cn_half_width", "cn_dx", "cn_dt"}


def ev_to_hartree(energy: float) -> float:
    """Convert an energy from eV to hartree."""

    return energy / HARTREE_EV


def hartree_to_ev(energy: float) -> float:
    """Convert an energy from hartree to eV."""

    return energy * HARTREE_EV


def field_to_au(field: float) -> float:
    """Convert an electric field from V/nm to atomic units."""

    return field / FIELD_V_PER_NM


class PhysicalConfig(NamedTuple):
    """Model parameters in laboratory units with atomic-unit views."""

    fermi_energy: float  # eV
    work_function: float  # eV
    field_strength: float  # V/nm
    photon_energy: float  # eV
    k_override: float | None = None  # a.u.

    @property
    def fermi_au(self) -> float:
        """Fermi energy in hartree."""
        return ev_to_hartree(self.fermi_energy)

    @property
    def work_function_au(self) -> float:
        """Work function in hartree."""
        return ev_to_hartree(self.work_function)

    @property
    def k(self) -> float:
        """Incoming momentum, ½k² = E_F unless overridden."""
        if self.k_override is not None:
            return self.k_override

        return sqrt(2 * self.fermi_au)

    @property
    def U(self) -> float:  # pylint: disable=invalid-name
        """Height of the potential step U = E_F + W in hartree."""
        return self.fermi_au + self.work_function_au

    @property
    def E_au(self) -> float:  # pylint: disable=invalid-name
        """Field amplitude in atomic units."""
        return field_to_au(self.field_strength)

    @property
    def omega_au(self) -> float:
        """Angular frequency in atomic units."""
        return ev_to_hartree(self.photon_energy)

    @property
    def period_au(self) -> float:
        """Laser period τ = 2π/ω in atomic units."""
        return 2 * pi / self.omega_au

    @property
    def period_fs(self) -> float:
        """Laser period in femtoseconds."""
        return self.period_au * TIME_AS / 1000

    @property
    def kappa0(self) -> float:
        """Decay rate √(2U − k²) of the field-free evanescent tail."""
        return sqrt(2 * self.U - self.k**2)

    @property
    def phi0_boundary(self) -> complex:
        """Value φ₀(0) = 2ik / (ik − √(2U − k²)) of the initial state."""
        return 2j * self.k / (1j * self.k - self.kappa0)

    @property
    def reflection0(self) -> complex:
        """Field-free reflection amplitude (ik + √(2U−k²)) / (ik − √(2U−k²))."""
        return (1j * self.k + self.kappa0) / (1j * self.k - self.kappa0)

    def with_field(self, field_strength: float) -> PhysicalConfig:
        """Return a copy with another field strength in V/nm."""
        return build_config(self.fermi_energy, self.work_function,
                            field_strength, self.photon_energy,
                            k=self.k_override)

    def with_photon_energy(self, photon_energy: float) -> PhysicalConfig:
        """Return a copy with another photon energy in eV."""
        return build_config(self.fermi_energy, self.work_function,
                            self.field_strength, photon_energy,
                            k=self.k_override)

    def to_json(self) -> dict[str, Any]:
        """Return a JSON-ish dict including derived quantities."""
        return {
            "fermi_energy_ev": self.fermi_energy,
            "work_function_ev": self.work_function,
            "field_v_per_nm": self.field_strength,
            "photon_energy_ev": self.photon_energy,
            "k_au": self.k,
            "U_au": self.U,
            "E_au": self.E_au,
            "omega_au": self.omega_au,
            "period_au": self.period_au,
        }


def _check(name: str, value: float, *, zero_ok: bool = False) -> float:
    """Validate a single physical input."""

    try:
        value = float(value)
    except (TypeError, ValueError):
        raise ValidationError(f"{name} is not a number: {value!r}") from None

    if not isfinite(value):
        raise ValidationError(f"{name} is not finite: {value}")

    if value < 0 or (value == 0 and not zero_ok):
        raise ValidationError(f"{name} must be positive: {value}")

    return value


def build_config(fermi_energy: float, work_function: float,
                 field_strength: float, photon_energy: float, *,
                 k: float | None = None) -> PhysicalConfig:
    """Validate laboratory-unit inputs and build a configuration."""

    config = PhysicalConfig(
        _check("fermi_energy", fermi_energy),
        _check("work_function", work_function),
        _check("field_strength", field_strength, zero_ok=True),
        _check("photon_energy", photon_energy),
        None if k is None else _check("k", k),
    )

    if config.k**2 >= 2 * config.U:
        raise ValidationError(
            f"incoming energy {config.k**2 / 2} above the barrier {config.U}"
        )

    return config


def keldysh(config: PhysicalConfig) -> float:
    """Return the Keldysh parameter γ = ω√(2W)/E."""

    if config.E_au == 0:
        raise DomainError("undefined Keldysh parameter at zero field")

    return config.omega_au * sqrt(2 * config.work_function_au) / config.E_au


class Thresholds(NamedTuple):
    """Ponderomotive energy and one-photon threshold in hartree."""

    ponderomotive: float
    omega_c: float

    @property
    def ponderomotive_ev(self) -> float:
        """Ponderomotive energy in eV."""
        return hartree_to_ev(self.ponderomotive)

    @property
    def omega_c_ev(self) -> float:
        """One-photon threshold in eV."""
        return hartree_to_ev(self.omega_c)


def thresholds(config: PhysicalConfig) -> Thresholds:
    """Return U_p = E²/4ω² and ω_c = U + U_p − k²/2."""

    ponderomotive = config.E_au**2 / (4 * config.omega_au**2)
    omega_c = config.U + ponderomotive - config.k**2 / 2

    if config.k_override is None:
        # With ½k² = E_F both forms of the threshold coincide.
        assert abs(omega_c - (config.work_function_au + ponderomotive)) \
            <= 1e-14 * max(1.0, omega_c)

    return Thresholds(ponderomotive, omega_c)


class SolverSettings(NamedTuple):
    """Discretization of the boundary integral equation solver."""

    window_fraction: float = 1 / 16
    degree: int = 32
    first_window_fraction: float = 1 / 256
    quadrature_order: int = 24
    jacobi_order: int = 24
    tail_tolerance: float = 1e-10
    residual_tolerance: float = 1e-11

    def refined(self) -> SolverSettings:
        """Return settings with doubled resolution."""
        return self._replace(
            degree=2 * self.degree,
            quadrature_order=2 * self.quadrature_order,
            jacobi_order=2 * self.jacobi_order,
        )


class FloquetSettings(NamedTuple):
    """Truncation and precision of the Floquet matching problem."""

    channels: int | None = None
    guard_digits: int = 24
    condition_limit: float = 1e80


class ConfigFile(NamedTuple):
    """Parsed configuration file."""

    physical: PhysicalConfig
    solver: SolverSettings
    floquet: FloquetSettings
    grid: dict[str, float]


def load_config(path: Path | str) -> ConfigFile:
    """Read a flat TOML configuration file."""

    LOGGER.debug("Reading configuration from: %s", path)

    try:
        with open(path, "rb") as file:
            data = load(file)
    except FileNotFoundError:
        raise ConfigError(f"configuration not found: {path}") from None
    except TOMLDecodeError as error:
        raise ConfigError(f"configuration is not valid TOML: {error}") from None

    if missing := PHYSICAL_KEYS - data.keys():
        raise ConfigError(f"missing configuration keys: {sorted(missing)}")

    known = (PHYSICAL_KEYS | GRID_KEYS | {"k_au"}
             | set(SolverSettings._fields)
             | {f"floquet_{field}" for field in FloquetSettings._fields})

    if unknown := data.keys() - known:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")

    physical = build_config(
        data["fermi_energy_ev"],
        data["work_function_ev"],
        data["field_v_per_nm"],
        data["photon_energy_ev"],
        k=data.get("k_au"),
    )
    solver = SolverSettings(**{
        key: data[key] for key in SolverSettings._fields if key in data
    })
    floquet = FloquetSettings(**{
        field: data[f"floquet_{field}"]
        for field in FloquetSettings._fields if f"floquet_{field}" in data
    })
    grid = {key: float(data[key]) for key in GRID_KEYS if key in data}
    return ConfigFile(physical, solver, floquet, grid)
