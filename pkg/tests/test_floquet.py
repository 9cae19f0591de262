"""Tests the floquet.py module."""

from functools import cache
from unittest import TestCase

import numpy as np
from scipy.special import jv

from photoemit.config import FloquetSettings, build_config, thresholds
from photoemit.exceptions import ConditioningError, ValidationError
from photoemit.floquet import asymptotic_current, asymptotic_derivative
from photoemit.floquet import asymptotic_wave, g_coeff, g_series, kappa
from photoemit.floquet import left_momentum, match_amplitudes, pde_residual
from photoemit.floquet import solve


STILL = build_config(4.5, 5.5, 0, 1.55)
FIELD = build_config(4.5, 5.5, 15, 1.55)
STRONG = build_config(4.5, 5.5, 30, 1.55)
UV = build_config(4.5, 5.5, 10, 6)


@cache
def automatic(config):
    """Automatically truncated solution, shared between test classes."""

    return solve(config)


class TestChannels(TestCase):
    """Tests kappa() and left_momentum()."""

    def test_closed(self):
        """Tests a decaying channel below the threshold."""
        value = kappa(0, FIELD)
        self.assertEqual(value.imag, 0)
        self.assertGreater(value.real, 0)

    def test_open(self):
        """Tests an outgoing channel above the threshold."""
        m = int(np.ceil(thresholds(FIELD).omega_c / FIELD.omega_au))
        value = kappa(m, FIELD)
        self.assertEqual(value.real, 0)
        self.assertLess(value.imag, 0)
        self.assertAlmostEqual(
            value.imag**2 / 2,
            m * FIELD.omega_au - thresholds(FIELD).omega_c, places=14)

    def test_left(self):
        """Tests the reflected momenta."""
        self.assertEqual(left_momentum(0, FIELD), FIELD.k)
        value = left_momentum(-20, FIELD)
        self.assertEqual(value.real, 0)
        self.assertGreater(value.imag, 0)


class TestGCoeff(TestCase):
    """Tests the g_coeff() function."""

    def test_no_field(self):
        """Tests that the time factor is 1 without field."""
        self.assertAlmostEqual(g_coeff(0, kappa(0, STILL), STILL), 1,
                               places=14)
        self.assertAlmostEqual(g_coeff(3, kappa(0, STILL), STILL), 0,
                               places=14)

    def test_bessel(self):
        """Tests g_{−2n} = J_n(E²/8ω³) at κ = 0."""
        argument = FIELD.E_au**2 / (8 * FIELD.omega_au**3)

        for n in range(-3, 4):
            with self.subTest(n=n):
                self.assertAlmostEqual(g_coeff(-2 * n, 0, FIELD),
                                       jv(n, argument), places=12)
                self.assertAlmostEqual(g_coeff(2 * n + 1, 0, FIELD), 0,
                                       places=12)

    def test_unresolved(self):
        """Tests that harmonics beyond the sampling are refused."""
        with self.assertRaises(ValidationError):
            g_coeff(128, 0, FIELD, samples=256)


class TestGSeries(TestCase):
    """Tests the g_series() function."""

    def test_quadrature(self):
        """Tests the Bessel series against the trapezoidal rule."""
        for m in (-2, 0, 3, 6):
            for q in (-5, -2, 0, 1, 4):
                with self.subTest(m=m, q=q):
                    self.assertAlmostEqual(
                        g_series(q, kappa(m, FIELD), FIELD),
                        g_coeff(q, kappa(m, FIELD), FIELD), places=12)

    def test_no_field(self):
        """Tests g_q = δ_{q0} without field."""
        self.assertEqual(g_series(0, kappa(0, STILL), STILL), 1)
        self.assertEqual(g_series(2, kappa(0, STILL), STILL), 0)

    def test_bessel(self):
        """Tests g_{−2n} = J_n(E²/8ω³) at κ = 0."""
        argument = FIELD.E_au**2 / (8 * FIELD.omega_au**3)

        for n in (-2, 1, 3):
            with self.subTest(n=n):
                self.assertAlmostEqual(g_series(-2 * n, 0, FIELD),
                                       jv(n, argument), places=14)


class TestMatching(TestCase):
    """Tests match_amplitudes() and solve()."""

    def test_no_field(self):
        """Tests the stationary amplitudes without field."""
        solution = match_amplitudes(STILL, 4)
        reflection, transmission = solution.amplitude(0)
        self.assertAlmostEqual(reflection, STILL.reflection0, places=12)
        self.assertAlmostEqual(transmission, STILL.phi0_boundary, places=12)
        self.assertAlmostEqual(abs(solution.amplitude(1)[1]), 0, places=12)
        self.assertLess(solution.flux_defect, 1e-12)

    def test_ultraviolet(self):
        """Tests current conservation with twelve channels at ω = 6 eV."""
        solution = solve(UV, FloquetSettings(channels=12))
        self.assertEqual(solution.order, 12)
        self.assertLess(solution.flux_defect, 1e-8)
        self.assertGreater(asymptotic_current(solution), 0)
        refined = match_amplitudes(UV, 16)

        for old, new in zip(solution.amplitude(0), refined.amplitude(0)):
            self.assertAlmostEqual(old, new, delta=1e-8)

    def test_flux(self):
        """Tests current conservation at ω = 1.55 eV."""
        solution = automatic(FIELD)
        self.assertLess(solution.flux_defect, 1e-8)
        self.assertTrue(np.all(solution.channel_currents >= 0))
        self.assertGreater(asymptotic_current(solution), 0)
        self.assertAlmostEqual(solution.left_current,
                               solution.transmitted_flux, places=8)

    def test_deep_channels(self):
        """Tests that N = 28 no longer exhausts the working precision."""
        solution = match_amplitudes(FIELD, 28)
        self.assertGreater(solution.digits, 30)
        self.assertTrue(np.all(np.isfinite(solution.transmission)))

    def test_strong_field(self):
        """Tests current conservation at E = 30 V/nm."""
        solution = automatic(STRONG)
        self.assertLess(solution.flux_defect, 1e-8)
        self.assertGreater(asymptotic_current(solution), 0)

    def test_automatic(self):
        """Tests that the automatic truncation has converged."""
        solution = automatic(FIELD)
        refined = match_amplitudes(FIELD, solution.order + 4)

        for old, new in zip(solution.amplitude(0), refined.amplitude(0)):
            self.assertLess(abs(old - new), 1e-8 * abs(new))

    def test_condition_limit(self):
        """Tests that the condition limit is enforced."""
        with self.assertRaises(ConditioningError):
            match_amplitudes(FIELD, 8, FloquetSettings(condition_limit=1.0))

    def test_negative_order(self):
        """Tests that negative truncations are refused."""
        with self.assertRaises(ValidationError):
            match_amplitudes(FIELD, -1)

    def test_rows(self):
        """Tests the channel table."""
        rows = list(match_amplitudes(FIELD, 3).rows())
        self.assertEqual(len(rows), 7)
        self.assertEqual([row[0] for row in rows], list(range(-3, 4)))
        self.assertEqual(len(rows[0]), 9)


class TestAsymptoticWave(TestCase):
    """Tests the periodic-state wave function."""

    @classmethod
    def setUpClass(cls):
        cls.solution = automatic(FIELD)

    def test_equation(self):
        """Tests that ψ̄ solves the Schrödinger equation on both sides."""
        for x in (-2.0, -0.5, 0.5, 2.0):
            with self.subTest(x=x):
                self.assertLess(pde_residual(self.solution, x, 13.0), 1e-6)

    def test_matching(self):
        """Tests that ψ̄ and ∂ₓψ̄ are continuous at the surface."""
        times = np.linspace(0, FIELD.period_au, 7)
        np.testing.assert_allclose(asymptotic_wave(-1e-12, times,
                                                   self.solution),
                                   asymptotic_wave(0.0, times, self.solution),
                                   atol=1e-6)
        np.testing.assert_allclose(
            asymptotic_derivative(-1e-12, times, self.solution),
            asymptotic_derivative(0.0, times, self.solution), atol=1e-5)

    def test_x_independence(self):
        """Tests that the period-averaged current does not depend on x > 0."""
        times = np.arange(256) * FIELD.period_au / 256

        for x in (8.0, 16.0):
            with self.subTest(x=x):
                wave = asymptotic_wave(x, times, self.solution)
                slope = asymptotic_derivative(x, times, self.solution)
                self.assertAlmostEqual(
                    np.mean((np.conj(wave) * slope).imag),
                    asymptotic_current(self.solution), delta=1e-6)

    def test_no_field(self):
        """Tests the stationary state without field."""
        solution = match_amplitudes(STILL, 2)
        t = 5.0
        self.assertAlmostEqual(
            asymptotic_wave(1.0, t, solution),
            STILL.phi0_boundary * np.exp(-STILL.kappa0
                                         - 0.5j * STILL.k**2 * t),
            places=12)
