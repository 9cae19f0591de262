"""Tests the lock.py module."""

from unittest import TestCase

from photoemit.config import build_config
from photoemit.lock import Lock, Locked
from photoemit.volterra import VolterraSolver


class TestLock(TestCase):
    """Tests the Lock class."""

    def test_busy(self):
        """Tests that a held lock refuses a second entry."""
        lock = Lock("test solver")

        with lock:
            self.assertTrue(lock.busy)

            with self.assertRaises(Locked) as context:
                with lock:
                    pass

        self.assertFalse(lock.busy)
        self.assertEqual(str(context.exception), "test solver is busy")

    def test_release_on_error(self):
        """Tests that the lock is released when the body raises."""
        lock = Lock()

        with self.assertRaises(ValueError):
            with lock:
                raise ValueError()

        self.assertFalse(lock.busy)

    def test_reentrant_solver(self):
        """Tests that a solver refuses to march from inside its own march."""
        config = build_config(4.5, 5.5, 0, 1.55)
        solver = VolterraSolver(config)

        def prescribed(times):
            solver.extend(config.period_au)
            return times

        with self.assertRaises(Locked) as context:
            solver.prescribe(prescribed, config.period_au / 64)

        self.assertIn("0 V/nm", str(context.exception))
