"""Custom types shared between modules."""

from __future__ import annotations
from typing import Any, NamedTuple

import numpy as np


__all__ = ["OracleReport", "RunManifest", "WavefieldSample"]


class WavefieldSample(NamedTuple):
    """Wave function, its derivative and the current at one point."""

    x: float
    t: float
    psi: complex
    dpsi: complex
    j: float

    @classmethod
    def from_values(cls, x: float, t: float, psi: complex,
                    dpsi: complex) -> WavefieldSample:
        """Create a sample, deriving the current from ψ and ∂ₓψ."""
        return cls(x, t, psi, dpsi, float((np.conj(psi) * dpsi).imag))


class OracleReport(NamedTuple):
    """Comparison of a production value against an oracle."""

    name: str
    oracle: complex
    production: complex
    abs_error: float
    rel_error: float
    tolerance: float
    passed: bool

    @classmethod
    def compare(cls, name: str, oracle: complex, production: complex,
                tolerance: float, *, relative: bool = False) -> OracleReport:
        """Compare the two values against the tolerance."""
        abs_error = float(abs(complex(production) - complex(oracle)))
        rel_error = abs_error / abs(complex(oracle)) if oracle else abs_error
        error = rel_error if relative else abs_error
        return cls(name, complex(oracle), complex(production), abs_error,
                   rel_error, tolerance, error <= tolerance)

    def to_row(self) -> list:
        """Return a CSV row."""
        return [
            self.name,
            self.oracle.real,
            self.oracle.imag,
            self.production.real,
            self.production.imag,
            self.abs_error,
            self.rel_error,
            self.tolerance,
            int(self.passed),
        ]


class RunManifest(NamedTuple):
    """Everything needed to reproduce a CLI run."""

    subcommand: str
    config: dict[str, Any]
    outputs: list[str]
    diagnostics: dict[str, Any]
    timing: dict[str, float] | None = None

    def to_json(self) -> dict[str, Any]:
        """Return a JSON-ish dict.

        Timings go under "nondeterministic" so that identical runs
        differ in that key only.
        """
        return {
            "subcommand": self.subcommand,
            "config": self.config,
            "outputs": self.outputs,
            "diagnostics": self.diagnostics,
            "nondeterministic": dict(self.timing or {}),
        }
