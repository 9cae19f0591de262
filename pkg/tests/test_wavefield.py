"""Tests the wavefield.py module."""

from unittest import TestCase

import numpy as np

from photoemit.common import BOHR_NM
from photoemit.config import build_config
from photoemit.exceptions import DomainError
from photoemit.kernels import KernelContext, dx_phi0, phi0
from photoemit.volterra import solve
from photoemit.wavefield import current, dpsi_dx, gauge_current, psi
from photoemit.wavefield import psi_minus, psi_plus, rows, sample
from photoemit.wavefield import sample_grid, x_grid


STILL = build_config(4.5, 5.5, 0, 1.55)
FIELD = build_config(4.5, 5.5, 15, 1.55)


class TestZeroField(TestCase):
    """Tests the reconstruction against the stationary state."""

    @classmethod
    def setUpClass(cls):
        cls.trace = solve(STILL, STILL.period_au / 4)
        cls.ctx = KernelContext.from_config(STILL)
        cls.t = STILL.period_au / 4

    def _exact(self, x):
        return complex(phi0(self.ctx, x)) * np.exp(
            -0.5j * STILL.k**2 * self.t)

    def test_inside(self):
        """Tests ψ₋ inside the metal."""
        for x in (-0.5, -2.0, -6.0):
            with self.subTest(x=x):
                self.assertAlmostEqual(psi_minus(x, self.t, self.trace),
                                       self._exact(x), delta=1e-6)

    def test_outside(self):
        """Tests ψ₊ on the evanescent side."""
        for x in (0.3, 1.0, 3.0):
            with self.subTest(x=x):
                self.assertAlmostEqual(psi_plus(x, self.t, self.trace),
                                       self._exact(x), delta=1e-6)

    def test_derivative(self):
        """Tests ∂ₓψ on both sides."""
        for x in (-1.0, 1.0):
            with self.subTest(x=x):
                h = 1e-4
                expected = (self._exact(x + h) - self._exact(x - h)) / (2 * h)
                self.assertAlmostEqual(dpsi_dx(x, self.t, self.trace),
                                       expected, delta=1e-5)

    def test_no_current(self):
        """Tests that the stationary state carries no current."""
        for x in (-1.0, 0.0, 1.0):
            with self.subTest(x=x):
                self.assertAlmostEqual(current(x, self.t, self.trace), 0,
                                       delta=1e-6)

    def _exact_slope(self, x):
        return complex(dx_phi0(self.ctx, x)) * np.exp(
            -0.5j * STILL.k**2 * self.t)

    def test_inside_derivative(self):
        """Tests ∂ₓψ₋ against the stationary derivative."""
        for x in (-0.2, -1.0, -3.0):
            with self.subTest(x=x):
                self.assertAlmostEqual(dpsi_dx(x, self.t, self.trace),
                                       self._exact_slope(x), delta=1e-6)
                self.assertAlmostEqual(current(x, self.t, self.trace), 0,
                                       delta=1e-6)

    def test_surface_layer(self):
        """Tests ψ and ∂ₓψ next to the surface on both sides."""
        for x in (-2e-3, -5e-4, -1e-6, -1e-7, 1e-7, 1e-6, 5e-4, 2e-3):
            with self.subTest(x=x):
                self.assertAlmostEqual(psi(x, self.t, self.trace),
                                       self._exact(x), delta=1e-6)
                self.assertAlmostEqual(dpsi_dx(x, self.t, self.trace),
                                       self._exact_slope(x), delta=1e-6)

    def test_initial(self):
        """Tests that t = 0 returns the initial state."""
        self.assertEqual(psi(-1.0, 0.0, self.trace),
                         complex(phi0(self.ctx, -1.0)))

    def test_sides(self):
        """Tests that each half refuses the other side."""
        with self.assertRaises(DomainError):
            psi_minus(1.0, self.t, self.trace)

        with self.assertRaises(DomainError):
            psi_plus(-1.0, self.t, self.trace)

        with self.assertRaises(DomainError):
            psi(0.0, 2 * self.t, self.trace)


class TestField(TestCase):
    """Tests the reconstruction in a strong field."""

    @classmethod
    def setUpClass(cls):
        cls.trace = solve(FIELD, FIELD.period_au / 4)
        cls.t = FIELD.period_au / 4

    def test_continuity(self):
        """Tests that ψ and ∂ₓψ are continuous across the surface."""
        surface = psi(0.0, self.t, self.trace)
        slope = dpsi_dx(0.0, self.t, self.trace)

        for x in (-1e-7, 1e-7):
            with self.subTest(x=x):
                self.assertAlmostEqual(psi(x, self.t, self.trace), surface,
                                       delta=1e-6)
                self.assertAlmostEqual(dpsi_dx(x, self.t, self.trace), slope,
                                       delta=1e-6)

    def test_surface_expansion(self):
        """Tests that the integrals meet the expansion about x = 0."""
        value = complex(self.trace.psi(self.t))
        slope = complex(self.trace.dpsi(self.t))
        rate = complex(self.trace.psi_rate(self.t))

        for x, step in ((-2e-3, 0.0), (2e-3, FIELD.U)):
            with self.subTest(x=x):
                curvature = 2 * (step * value - 1j * rate)
                self.assertAlmostEqual(
                    psi(x, self.t, self.trace),
                    value + x * slope + x**2 / 2 * curvature, delta=1e-7)

    def test_inside_derivative(self):
        """Tests ∂ₓψ₋ against fourth-order differences of ψ₋."""
        x, h = -0.3, 1e-2
        values = [psi(x + n * h, self.t, self.trace) for n in (-2, -1, 1, 2)]
        expected = (values[0] - 8 * values[1] + 8 * values[2]
                    - values[3]) / (12 * h)
        self.assertAlmostEqual(dpsi_dx(x, self.t, self.trace), expected,
                               delta=1e-6)

    def test_gauge_current(self):
        """Tests that the gauge split reproduces the current."""
        x = 0.5
        self.assertAlmostEqual(gauge_current(x, self.t, self.trace),
                               current(x, self.t, self.trace), places=10)

        with self.assertRaises(DomainError):
            gauge_current(0.0, self.t, self.trace)

    def test_sample_grid(self):
        """Tests threaded sampling keeps x varying slowest."""
        xs, times = [-0.5, 0.5], [self.t / 2, self.t]
        samples = sample_grid(self.trace, xs, times, threads=2)
        self.assertEqual([(item.x, item.t) for item in samples],
                         [(x, t) for x in xs for t in times])
        self.assertEqual(samples[3], sample(0.5, self.t, self.trace))

    def test_rows(self):
        """Tests the CSV rows of wave field samples."""
        table = list(rows([sample(0.5, self.t, self.trace)],
                          FIELD.period_au, FIELD.k))
        self.assertEqual(len(table[0]), 7)
        self.assertAlmostEqual(table[0][1], 0.5 * BOHR_NM, places=14)
        self.assertAlmostEqual(table[0][3], 0.25, places=12)


class TestGrid(TestCase):
    """Tests the x_grid() function."""

    def test_nanometres(self):
        """Tests the conversion of the end points."""
        grid = x_grid(-1.0, 1.0, 5)
        self.assertEqual(len(grid), 5)
        self.assertAlmostEqual(grid[-1] * BOHR_NM, 1.0, places=14)
        self.assertEqual(grid[2], 0.0)
