"""Tests the observables.py module."""

from math import isnan
from os import environ
from unittest import TestCase, skipUnless

import numpy as np

from photoemit.config import build_config
from photoemit.exceptions import DomainError
from photoemit.observables import CurrentSeries, ScanPoint
from photoemit.observables import count_maxima_per_period, decay_fit
from photoemit.observables import double_average, extrapolate_average
from photoemit.observables import omega_scan, period_extrema
from photoemit.observables import running_average
from photoemit.volterra import solve


SAMPLES = 64


def series(function, periods: float, start: float = 0.0) -> CurrentSeries:
    """Sample a function of time with unit period."""

    times = start + np.arange(round(periods * SAMPLES) + 1) / SAMPLES
    return CurrentSeries(0.0, times, function(times), 1.0)


class TestCurrentSeries(TestCase):
    """Tests the CurrentSeries class."""

    def test_step(self):
        """Tests the sampling step and span counts."""
        linear = series(lambda t: t, 2)
        self.assertEqual(linear.step, 1 / SAMPLES)
        self.assertEqual(linear.samples_per(1.0), SAMPLES)

        with self.assertRaises(DomainError):
            linear.samples_per(1.001)

    def test_normalized(self):
        """Tests j/k."""
        np.testing.assert_array_equal(
            series(np.ones_like, 1).normalized(2.0).values, 0.5)

    def test_rows(self):
        """Tests the CSV rows."""
        rows = list(series(lambda t: 2 * t, 1).rows())
        self.assertEqual(len(rows), SAMPLES + 1)
        self.assertEqual(rows[-1], [1.0, 1.0, 2.0])

    def test_from_trace(self):
        """Tests sampling the interface current of a solved trace."""
        config = build_config(4.5, 5.5, 0, 1.55)
        trace = solve(config, config.period_au / 8)
        current = CurrentSeries.from_trace(trace, config.period_au / 8,
                                           samples=256)
        self.assertEqual(len(current.times), 33)
        self.assertEqual(current.period, config.period_au)
        np.testing.assert_allclose(current.values, 0, atol=1e-6)


class TestRunningAverage(TestCase):
    """Tests the running_average() function."""

    def test_linear(self):
        """Tests ⟨s⟩_t = t − τ/2."""
        averaged = running_average(series(lambda t: t, 3))
        self.assertEqual(averaged.times[0], 1.0)
        np.testing.assert_allclose(averaged.values, averaged.times - 0.5,
                                   atol=1e-13)

    def test_periodic(self):
        """Tests that a pure oscillation averages to zero."""
        averaged = running_average(series(lambda t: np.cos(2 * np.pi * t), 3))
        np.testing.assert_allclose(averaged.values, 0, atol=1e-13)

    def test_short(self):
        """Tests that a series shorter than τ is refused."""
        with self.assertRaises(DomainError):
            running_average(series(lambda t: t, 0.5))


class TestDoubleAverage(TestCase):
    """Tests the double_average() function."""

    def test_constant(self):
        """Tests that a constant current is its own average."""
        self.assertAlmostEqual(double_average(series(lambda t: 0 * t + 3, 2)),
                               3.0, places=13)

    def test_linear(self):
        """Tests ⟨⟨s⟩⟩ = T − τ at T = 4."""
        self.assertAlmostEqual(double_average(series(lambda t: t, 4)), 3.0,
                               places=12)

    def test_oscillation(self):
        """Tests that the oscillation drops out of the double average."""
        self.assertAlmostEqual(double_average(series(
            lambda t: 0.25 + np.sin(2 * np.pi * t), 5)), 0.25, places=12)

    def test_short(self):
        """Tests that T < 2τ is refused."""
        with self.assertRaises(DomainError):
            double_average(series(lambda t: t, 1.5))


class TestDecay(TestCase):
    """Tests period_extrema() and decay_fit()."""

    @staticmethod
    def _planted(periods: int) -> CurrentSeries:
        return series(lambda t: 1 + t**-1.5 * np.cos(2 * np.pi * t),
                      periods, start=1.0)

    def test_extrema(self):
        """Tests the period ends and the extrema on each period."""
        extrema = period_extrema(self._planted(4))
        np.testing.assert_allclose(extrema.ends, [2.0, 3.0, 4.0, 5.0])
        np.testing.assert_allclose(extrema.highs,
                                   1 + extrema.high_times**-1.5, atol=1e-2)
        np.testing.assert_allclose(extrema.lows,
                                   1 - extrema.low_times**-1.5, atol=1e-2)
        np.testing.assert_allclose(extrema.low_times, extrema.ends - 0.5,
                                   atol=2 / SAMPLES)
        np.testing.assert_allclose(extrema.spreads,
                                   extrema.highs - extrema.lows)

    def test_power_law(self):
        """Tests that a t^(-3/2) envelope yields the slope −1.5."""
        fit = decay_fit(self._planted(100), skip=18)
        self.assertAlmostEqual(fit.slope, -1.5, delta=0.02)
        self.assertAlmostEqual(fit.prefactor, 2.0, delta=0.2)
        self.assertEqual(fit.excluded, 0)
        self.assertEqual(fit.points, 82)

    def test_two_decades(self):
        """Tests the slope over two decades from the very first period."""
        fit = decay_fit(self._planted(100))
        self.assertAlmostEqual(fit.slope, -1.5, delta=0.02)
        self.assertEqual(fit.points, 100)

    def test_shifted_phase(self):
        """Tests that the fit does not depend on where the extrema fall."""
        for phase in (0.3, 1.7, 2.9):
            with self.subTest(phase=phase):
                shifted = series(lambda t, phase=phase: 0.5 + 0.003 * t**-1.5
                                 * np.sin(2 * np.pi * t + phase), 60,
                                 start=1.0)
                fit = decay_fit(shifted, skip=4)
                self.assertAlmostEqual(fit.slope, -1.5, delta=0.02)
                self.assertAlmostEqual(fit.prefactor, 0.006, delta=0.0006)

    def test_converged(self):
        """Tests that flat periods are excluded and counted."""
        flat = series(lambda t: np.where(t < 20, 1 + t**-1.5
                                         * np.cos(2 * np.pi * t), 1.0),
                      30, start=1.0)
        fit = decay_fit(flat)
        self.assertEqual(fit.excluded, 11)
        self.assertEqual(fit.points, 19)

    def test_too_few(self):
        """Tests that fewer than eight periods are refused."""
        with self.assertRaises(DomainError):
            decay_fit(self._planted(6))


class TestCountMaxima(TestCase):
    """Tests the count_maxima_per_period() function."""

    def test_single(self):
        """Tests one maximum per period of a cosine."""
        cosine = series(lambda t: np.cos(2 * np.pi * t), 4)

        for index in (1, 2):
            with self.subTest(index=index):
                self.assertEqual(count_maxima_per_period(cosine, index), 1)

    def test_harmonic(self):
        """Tests two maxima per period of the second harmonic."""
        self.assertEqual(count_maxima_per_period(
            series(lambda t: np.cos(4 * np.pi * t + 0.3), 4), 1), 2)

    def test_floor(self):
        """Tests that ripples below the noise floor are not counted."""
        rippled = series(lambda t: np.cos(2 * np.pi * t)
                         + 1e-9 * np.cos(2 * np.pi * 16 * t), 4)
        self.assertEqual(count_maxima_per_period(rippled, 1), 1)

    def test_missing_period(self):
        """Tests that periods beyond the series are refused."""
        with self.assertRaises(DomainError):
            count_maxima_per_period(series(np.cos, 2), 3)


class TestExtrapolation(TestCase):
    """Tests the extrapolate_average() function."""

    def test_limit(self):
        """Tests recovery of the limit of 2 + 3t^(-3/2)."""
        fit = extrapolate_average(series(lambda t: 2 + 3 * t**-1.5, 30,
                                          start=1.0))
        self.assertAlmostEqual(fit.limit, 2.0, delta=1e-3)
        self.assertAlmostEqual(fit.coefficient, 3.0, delta=0.1)

    def test_too_short(self):
        """Tests that fewer than three usable periods are refused."""
        with self.assertRaises(DomainError):
            extrapolate_average(series(np.ones_like, 4, start=1.0))


class TestScanPoint(TestCase):
    """Tests the ScanPoint class."""

    def test_row(self):
        """Tests that missing errors become empty cells."""
        self.assertEqual(ScanPoint(5.5, 0.0, 1.0, 2.0).to_row(),
                         [5.5, 0.0, 1.0, 2.0, ""])

    def test_failed_point(self):
        """Tests that a failing point is recorded instead of raised."""
        template = build_config(4.5, 5.5, 0, 1.55)
        point, = omega_scan(template, [6.0], periods=1, threads=1)
        self.assertEqual(point.photon_energy, 6.0)
        self.assertTrue(isnan(point.double_average))
        self.assertIn("2τ", point.error)
        self.assertAlmostEqual(point.detuning, 0.5, places=12)


@skipUnless(environ.get("PHOTOEMIT_SLOW"), "set PHOTOEMIT_SLOW to run")
class TestOmegaScan(TestCase):
    """Tests the omega_scan() function."""

    def test_threshold(self):
        """Tests that the average rises across the one-photon threshold."""
        template = build_config(4.5, 5.5, 10, 6.0)
        below, above = omega_scan(template, [5.0, 6.2], periods=12,
                                  threads=2)
        self.assertIsNone(below.error)
        self.assertIsNone(above.error)
        self.assertLess(below.detuning, 0)
        self.assertGreater(above.detuning, 0)
        self.assertGreater(above.normalized, below.normalized)
