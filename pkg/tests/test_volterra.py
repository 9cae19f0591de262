"""Tests the volterra.py module."""

from os import environ
from unittest import TestCase, skipUnless

import numpy as np

from photoemit.config import SolverSettings, build_config
from photoemit.exceptions import DomainError, SolverError, ValidationError
from photoemit.kernels import KernelContext
from photoemit.specfun import chebyshev_nodes
from photoemit.volterra import VolterraSolver, apply_L, convergence_study
from photoemit.volterra import dx_psi0
from photoemit.volterra import onset_slope, residual, solve, source
from photoemit.volterra import window_edges


SLOW = bool(environ.get("PHOTOEMIT_SLOW"))
STILL = build_config(4.5, 5.5, 0, 1.55)


def stationary(t):
    """Exact boundary value without field: φ₀(0) e^{−ik²t/2}."""

    return STILL.phi0_boundary * np.exp(-0.5j * STILL.k**2 * np.asarray(t))


class PerturbedSolver(VolterraSolver):
    """Solver whose windows are shifted off the collocation solution."""

    def _solve_window(self, index, system):
        values = super()._solve_window(index, system)
        values[len(values) // 2] += 1e-6
        return values


class TestWindowEdges(TestCase):
    """Tests the window_edges() function."""

    def test_doubling(self):
        """Tests the geometric start and the uniform continuation."""
        edges = window_edges(1.0, SolverSettings())
        self.assertEqual([next(edges) for _ in range(8)],
                         [0.0, 1 / 256, 1 / 128, 1 / 64, 1 / 32,
                          1 / 16, 2 / 16, 3 / 16])


class TestZeroField(TestCase):
    """Tests the solver against the stationary state at E = 0."""

    @classmethod
    def setUpClass(cls):
        cls.final_time = STILL.period_au / 4
        cls.trace = solve(STILL, cls.final_time)
        cls.times = np.linspace(0, cls.final_time, 41)

    def test_boundary_value(self):
        """Tests ψ₀(t) = φ₀(0) e^{−ik²t/2}."""
        np.testing.assert_allclose(self.trace.psi(self.times),
                                   stationary(self.times), atol=1e-7)

    def test_boundary_derivative(self):
        """Tests ∂ₓψ₀(t) = −κ₀ ψ₀(t)."""
        times = self.times[1:]
        np.testing.assert_allclose(dx_psi0(self.trace)(times),
                                   -STILL.kappa0 * stationary(times),
                                   atol=1e-6)

    def test_current(self):
        """Tests that no current flows without field."""
        np.testing.assert_allclose(self.trace.current(self.times), 0,
                                   atol=1e-6)
        np.testing.assert_allclose(self.trace.density(self.times), 1.8,
                                   atol=1e-6)

    def test_residual(self):
        """Tests the residual of the integral equation."""
        self.assertLess(residual(self.trace, self.times[1::8]), 1e-7)

    def test_coverage(self):
        """Tests that the trace refuses times it does not cover."""
        self.assertAlmostEqual(self.trace.end, self.final_time, places=9)

        with self.assertRaises(DomainError):
            self.trace.psi(2 * self.final_time)

    def test_rows(self):
        """Tests the CSV rows of the trace."""
        rows = list(self.trace.rows([0.0, self.final_time]))
        self.assertEqual(len(rows), 2)
        self.assertEqual(len(rows[0]), 6)
        self.assertAlmostEqual(rows[1][1], 0.25, places=9)


class TestPrescribe(TestCase):
    """Tests VolterraSolver.prescribe()."""

    def test_exact_trace(self):
        """Tests that the stationary boundary value solves the equation."""
        trace = VolterraSolver(STILL).prescribe(stationary,
                                                STILL.period_au / 8)
        times = np.linspace(0, STILL.period_au / 8, 9)[1:]
        self.assertLess(residual(trace, times), 1e-7)

    def test_perturbed_trace(self):
        """Tests that a wrong boundary value has a visible residual."""
        trace = VolterraSolver(STILL).prescribe(
            lambda t: 1.01 * stationary(t), STILL.period_au / 8)
        self.assertGreater(residual(trace, [STILL.period_au / 8]), 1e-4)

    def test_apply_l(self):
        """Tests ψ₀ = h + Lψ₀ term by term on the stationary trace."""
        final_time = STILL.period_au / 8
        trace = VolterraSolver(STILL).prescribe(stationary, final_time)

        for t in np.linspace(0, final_time, 5)[1:]:
            with self.subTest(t=t):
                self.assertAlmostEqual(
                    apply_L(trace, t), stationary(t) - source(trace, t),
                    places=7)

        with self.assertRaises(DomainError):
            apply_L(trace, 2 * final_time)

    def test_onset(self):
        """Tests the slope fit on a planted t^(3/2) departure."""
        trace = VolterraSolver(STILL).prescribe(
            lambda t: stationary(t) + 0.1 * t**1.5, STILL.period_au / 256)
        self.assertAlmostEqual(onset_slope(trace), 1.5, places=5)


class TestSolver(TestCase):
    """Tests the VolterraSolver class."""

    def test_invalid_time(self):
        """Tests that non-positive final times are refused."""
        with self.assertRaises(ValidationError):
            VolterraSolver(STILL).solve(0.0)

    def test_extend(self):
        """Tests that extending keeps the earlier windows."""
        config = build_config(4.5, 5.5, 15, 1.55)
        solver = VolterraSolver(config)
        trace = solver.solve(config.period_au / 16)
        count = len(trace)
        early = trace.psi(config.period_au / 32)
        solver.extend(config.period_au / 8)
        self.assertGreater(len(trace), count)
        self.assertEqual(trace.psi(config.period_au / 32), early)

    def test_context(self):
        """Tests that the trace carries its configuration."""
        trace = solve(STILL, STILL.period_au / 32)
        self.assertEqual(trace.config, STILL)
        self.assertEqual(trace.context, KernelContext.from_config(STILL))
        self.assertEqual(trace.period, STILL.period_au)

    def test_field_residual(self):
        """Tests the residual in a strong field."""
        config = build_config(4.5, 5.5, 15, 1.55)
        trace = solve(config, config.period_au / 4)
        times = np.linspace(0, config.period_au / 4, 9)[1:]
        self.assertLess(residual(trace, times), 1e-7)
        self.assertTrue(np.all(np.isfinite(trace.current(times))))

    def test_node_residual(self):
        """Tests the integral equation on the nodes of the solved windows."""
        config = build_config(4.5, 5.5, 15, 1.55)
        settings = SolverSettings()
        trace = solve(config, config.period_au / 8, settings)

        for index in (0, 5, len(trace) - 1):
            lo, hi = trace.window_bounds(index)
            times = chebyshev_nodes(lo, hi, settings.degree,
                                    sqrt_variable=index == 0)[1:]
            self.assertLess(residual(trace, times), 1e-11)

    def test_perturbed_window(self):
        """Tests that a window off the integral equation is refused."""
        with self.assertRaises(SolverError) as context:
            PerturbedSolver(STILL).solve(STILL.period_au / 16)

        self.assertEqual(context.exception.window, 0)
        self.assertGreater(context.exception.residual, 1e-9)


@skipUnless(SLOW, "set PHOTOEMIT_SLOW to run")
class TestConvergence(TestCase):
    """Tests the convergence_study() function."""

    def test_one_period(self):
        """Tests that doubling the resolution changes ψ₀ by < 1e-6."""
        config = build_config(4.5, 5.5, 15, 1.55)
        report = convergence_study(config, config.period_au)
        self.assertLess(report.change, 1e-6)
        self.assertLess(report.residual, 1e-7)
        self.assertLess(report.refined_residual, 1e-7)


@skipUnless(SLOW, "set PHOTOEMIT_SLOW to run")
class TestOnset(TestCase):
    """Tests the short-time behaviour in a strong field."""

    def test_first_window(self):
        """Tests the t^(3/2) onset and the small early current."""
        config = build_config(4.5, 5.5, 15, 1.55)
        trace = solve(config, config.period_au / 256)
        self.assertAlmostEqual(onset_slope(trace), 1.5, delta=0.1)
        times = np.geomspace(1e-8, 1e-5, 7) * config.period_au
        self.assertLess(np.max(np.abs(trace.current(times))) / config.k,
                        1e-3)
