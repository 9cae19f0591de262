"""Common constants and the package logger."""

from logging import getLogger


__all__ = [
    "BOHR_NM",
    "FIELD_V_PER_NM",
    "HARTREE_EV",
    "LOG_FORMAT",
    "LOGGER",
    "TIME_AS",
]


HARTREE_EV = 27.211386245988  # CODATA 2018
FIELD_V_PER_NM = 514.220674763  # CODATA 2018, 5.14220674763e11 V/m
TIME_AS = 24.188843265857  # CODATA 2018
BOHR_NM = 0.0529177210903  # CODATA 2018
LOG_FORMAT = "[%(levelname)s] %(name)s: %(message)s"
LOGGER = getLogger("photoemit")
