"""Independent high-precision reference values.

Each oracle recomputes a quantity in 30-digit arithmetic from its defining
formula, using mpmath and the CODATA table shipped with scipy, and compares
it with the production routine. Failures are reported, not raised.
"""

from __future__ import annotations
from typing import Callable, Iterator

import mpmath as mp
from scipy.constants import physical_constants

from photoemit.common import BOHR_NM, FIELD_V_PER_NM, HARTREE_EV, TIME_AS
from photoemit.config import FloquetSettings, PhysicalConfig, build_config
from photoemit.config import keldysh, thresholds
from photoemit.floquet import g_coeff, g_series, kappa
from photoemit.floquet import solve as solve_floquet
from photoemit.kernels import KernelContext, alpha, ds_f_phase, f_phase
from photoemit.kernels import g_regular, h_minus, h_plus
from photoemit.specfun import erfc_complex, erfcx_complex, jacobi_end_rule
from photoemit.types import OracleReport


__all__ = ["run_oracles"]


DIGITS = 30
FERMI_ENERGY = mp.mpf("4.5")
WORK_FUNCTION = mp.mpf("5.5")
UNIT_TOLERANCE = 1e-8


def _codata(name: str) -> mp.mpf:
    return mp.mpf(physical_constants[name][0])


def _hartree() -> mp.mpf:
    return _codata("Hartree energy in eV")


def _model(config: PhysicalConfig) -> dict[str, mp.mpf]:
    """Atomic-unit inputs of a configuration at working precision."""

    step, k = mp.mpf(config.U), mp.mpf(config.k)
    return {
        "E": mp.mpf(config.E_au),
        "omega": mp.mpf(config.omega_au),
        "U": step,
        "k": k,
        "kappa": mp.sqrt(2 * step - k**2),
        "W": mp.mpf(config.work_function_au),
    }


def _converted(field_strength, photon_energy) -> dict[str, mp.mpf]:
    """Atomic-unit parameters converted with the CODATA table."""

    hartree = _hartree()
    field_au = _codata("atomic unit of electric field") / mp.mpf(10)**9
    return {
        "E": mp.mpf(field_strength) / field_au,
        "omega": mp.mpf(photon_energy) / hartree,
        "U": (FERMI_ENERGY + WORK_FUNCTION) / hartree,
        "k": mp.sqrt(2 * FERMI_ENERGY / hartree),
    }


def _phase(model, s, t):
    """f(s,t) from its unreduced closed form."""

    E, omega, U = model["E"], model["omega"], model["U"]  # noqa: N806
    ponderomotive = E**2 / (4 * omega**2)
    return (E**2 * (mp.cos(omega * s) - mp.cos(omega * t))**2
            / (2 * omega**4 * (t - s))
            - (U + ponderomotive) * (t - s)
            + ponderomotive * (mp.sin(2 * omega * t) - mp.sin(2 * omega * s))
            / (2 * omega))


def _alpha(model, s, t):
    omega = model["omega"]
    return mp.sin(omega * s) + (mp.cos(omega * t) - mp.cos(omega * s)) \
        / (omega * (t - s))


def _g_regular(model, s, t):
    """g(s,t)·√(t−s) with ∂_s f by high-precision differentiation."""

    phase = _phase(model, s, t)
    slope = mp.diff(lambda u: _phase(model, u, t), s)
    return (mp.expj(phase) - 1) / (2 * (t - s)) \
        + 1j * slope * mp.expj(phase)


def _propagated(integrand: Callable, x, t, direction: int):
    """(2πit)^(-1/2) ∫ e^{i(x−y)²/2t} φ(y) dy over one half-line.

    direction = −1 integrates y ∈ (−∞, 0], +1 integrates y ∈ [0, ∞). The
    path is turned onto the ray y = direction·r·e^{iπ/4}, along which the
    chirp becomes a decaying Gaussian.
    """

    turn = mp.expjpi(mp.mpf(1) / 4)

    def along_ray(r):
        y = direction * turn * r
        return mp.expj((x - y)**2 / (2 * t)) * integrand(y)

    return turn * mp.quad(along_ray, [0, 1, 4, mp.inf]) \
        / mp.sqrt(2j * mp.pi * t)


def _h_minus(model, x, t):
    k, kappa_0 = model["k"], model["kappa"]
    reflection = (1j * k + kappa_0) / (1j * k - kappa_0)
    return _propagated(
        lambda y: mp.expj(k * y) + reflection * mp.expj(-k * y), x, t, -1)


def _h_plus_free(model, x, t):
    """h₊ without field: free motion over the step of height U."""

    k, kappa_0, step = model["k"], model["kappa"], model["U"]
    transmission = 2j * k / (1j * k - kappa_0)
    return mp.expj(-step * t) * _propagated(
        lambda y: transmission * mp.exp(-kappa_0 * y), x, t, 1)


def _unit_reports() -> Iterator[OracleReport]:
    """Unit constants and converted model parameters."""

    for name, oracle, production in (
        ("hartree_ev", _hartree(), HARTREE_EV),
        ("field_v_per_nm",
         _codata("atomic unit of electric field") / mp.mpf(10)**9,
         FIELD_V_PER_NM),
        ("time_as", _codata("atomic unit of time") * mp.mpf(10)**18,
         TIME_AS),
        ("bohr_nm", _codata("Bohr radius") * mp.mpf(10)**9, BOHR_NM),
    ):
        yield OracleReport.compare(name, oracle, production, UNIT_TOLERANCE,
                                   relative=True)

    converted = _converted(15, "1.55")
    config = build_config(4.5, 5.5, 15, 1.55)

    for name in ("k", "U", "E"):
        production = config.E_au if name == "E" else getattr(config, name)
        yield OracleReport.compare(f"{name}_au", converted[name], production,
                                   UNIT_TOLERANCE, relative=True)

    yield OracleReport.compare(
        "E_au_1_v_per_nm", _converted(1, "1.55")["E"],
        build_config(4.5, 5.5, 1, 1.55).E_au, UNIT_TOLERANCE, relative=True)
    yield OracleReport.compare(
        "initial_density", 4 * FERMI_ENERGY / (FERMI_ENERGY + WORK_FUNCTION),
        abs(config.phi0_boundary)**2, 1e-10)

    for field_strength in (1, 15, 30):
        config = build_config(4.5, 5.5, field_strength, 1.55)
        model = _model(config)
        yield OracleReport.compare(
            f"keldysh_E{field_strength}",
            model["omega"] * mp.sqrt(2 * model["W"]) / model["E"],
            keldysh(config), 1e-12, relative=True)

    config = build_config(4.5, 5.5, 10, 6)
    model, levels = _model(config), thresholds(config)
    ponderomotive = model["E"]**2 / (4 * model["omega"]**2)
    yield OracleReport.compare("ponderomotive_E10_w6", ponderomotive,
                               levels.ponderomotive, 1e-12, relative=True)
    yield OracleReport.compare("omega_c_E10_w6", model["W"] + ponderomotive,
                               levels.omega_c, 1e-12, relative=True)


def _special_reports() -> Iterator[OracleReport]:
    """Error functions and the end-point Jacobi rule."""

    yield OracleReport.compare("erfc_1", mp.erfc(1), erfc_complex(1.0),
                               1e-12)

    for z in (0.5 - 2j, 3 + 3j, -1 + 0.5j):
        yield OracleReport.compare(
            f"erfc_{z}", mp.erfc(mp.mpc(z)), erfc_complex(z), 1e-12,
            relative=True)

    for z in (10 + 3j, 2 - 30j, 0.1 + 0.1j):
        yield OracleReport.compare(
            f"erfcx_{z}", mp.exp(mp.mpc(z)**2) * mp.erfc(mp.mpc(z)),
            erfcx_complex(z), 1e-12, relative=True)

    yield OracleReport.compare(
        "jacobi_end_weight", mp.quad(lambda u: (1 - u)**-0.5, [0, 1]),
        jacobi_end_rule(0.0, 1.0, 8).weights.sum(), 1e-13)


def _kernel_reports() -> Iterator[OracleReport]:
    """Kernel values near and away from the diagonal."""

    config = build_config(4.5, 5.5, 15, 1.55)
    ctx = KernelContext.from_config(config)
    model = _model(config)
    t = 7.0

    for gap in (3.0, 0.25, 1e-3, 1e-6):
        s = t - gap
        ms, mt = mp.mpf(s), mp.mpf(t)
        yield OracleReport.compare(f"alpha_gap_{gap}", _alpha(model, ms, mt),
                                   alpha(ctx, s, t), 1e-12)
        yield OracleReport.compare(f"f_gap_{gap}", _phase(model, ms, mt),
                                   f_phase(ctx, s, t), 1e-12)
        yield OracleReport.compare(
            f"ds_f_gap_{gap}",
            mp.diff(lambda u: _phase(model, u, mt), ms),
            ds_f_phase(ctx, s, t), 1e-10)
        yield OracleReport.compare(f"g_regular_gap_{gap}",
                                   _g_regular(model, ms, mt),
                                   g_regular(ctx, s, t), 1e-10)

    yield OracleReport.compare("ds_f_diagonal", model["U"],
                               ds_f_phase(ctx, t, t), 1e-12)
    yield OracleReport.compare("g_regular_diagonal", 1j * model["U"] / 2,
                               g_regular(ctx, t, t), 1e-12)


def _propagation_reports() -> Iterator[OracleReport]:
    """Half-line free propagation of the initial state."""

    config = build_config(4.5, 5.5, 15, 1.55)
    ctx = KernelContext.from_config(config)
    model = _model(config)

    for x, t in ((-1.0, 2.0), (0.0, 1.0), (-4.0, 0.5)):
        yield OracleReport.compare(
            f"h_minus_x{x}_t{t}", _h_minus(model, mp.mpf(x), mp.mpf(t)),
            h_minus(ctx, x, t), 1e-11)

    still = KernelContext.from_config(build_config(4.5, 5.5, 0, 1.55))
    model = _model(still.config)

    for x, t in ((0.5, 2.0), (0.0, 1.0), (3.0, 0.5)):
        yield OracleReport.compare(
            f"h_plus_zero_field_x{x}_t{t}",
            _h_plus_free(model, mp.mpf(x), mp.mpf(t)),
            h_plus(still, x, t), 1e-11)


def _floquet_reports() -> Iterator[OracleReport]:
    """Fourier coefficients of the channel factor and flux balance."""

    config = build_config(4.5, 5.5, 15, 1.55)
    model = _model(config)
    E, omega = model["E"], model["omega"]  # noqa: N806
    argument = E**2 / (8 * omega**3)

    # Σ_n J_n(b) e^{2inωt} = Σ_q g_q e^{−iqωt} puts J_n at q = −2n
    for q in (0, 2, -2, 4, 1):
        oracle = mp.besselj(-q // 2, argument) if q % 2 == 0 else 0
        yield OracleReport.compare(f"g_bessel_q{q}", oracle,
                                   g_coeff(q, 0.0, config), 1e-12)

    period = 2 * mp.pi / omega
    channel = kappa(-1, config)
    kap = mp.mpc(channel)

    for q in (0, 3):
        def periodic(t, q=q):
            return mp.exp(-kap * E / omega**2 * (1 + mp.cos(omega * t))
                          + 1j * argument * mp.sin(2 * omega * t)
                          + 1j * q * omega * t)

        oracle = mp.quad(periodic, mp.linspace(0, period, 9)) / period
        yield OracleReport.compare(f"g_quadrature_q{q}", oracle,
                                   g_coeff(q, channel, config), 1e-12)
        yield OracleReport.compare(f"g_series_q{q}", oracle,
                                   g_series(q, channel, config), 1e-14)

    solution = solve_floquet(config, FloquetSettings())
    yield OracleReport.compare("floquet_flux_defect", 0,
                               solution.flux_defect, 1e-8)


def run_oracles() -> list[OracleReport]:
    """Evaluate every reference check."""

    with mp.workdps(DIGITS):
        return [
            *_unit_reports(),
            *_special_reports(),
            *_kernel_reports(),
            *_propagation_reports(),
            *_floquet_reports(),
        ]
