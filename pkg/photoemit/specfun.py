"""Special functions, Chebyshev series and Gauss quadratures."""

from __future__ import annotations
from functools import cache
from math import inf, sqrt
from typing import Iterable, NamedTuple

import numpy as np
from numpy.polynomial.chebyshev import chebder, chebval, chebvander
from scipy.fft import dct
from scipy.special import erfc, erfcx, roots_jacobi, roots_laguerre
from scipy.special import roots_legendre

from photoemit.exceptions import DomainError, ValidationError


__all__ = [
    "ChebyshevSeries",
    "Panel",
    "QuadratureRule",
    "abel_rule",
    "cheb_eval",
    "cheb_fit",
    "chebyshev_nodes",
    "concat",
    "erfc_complex",
    "erfcx_complex",
    "gauss_rule",
    "graded_edges",
    "graded_rule",
    "interpolation_matrix",
    "is_far",
    "jacobi_end_rule",
    "panel_rule",
]


JACOBI_EXPONENTS = {-0.5, 0.0, 0.5}
EXTRAPOLATION_SLACK = 1e-12


def _finite(z) -> np.ndarray:
    """Return z as a complex array, refusing non-finite entries."""

    z = np.asarray(z, dtype=complex)

    if not np.all(np.isfinite(z)):
        raise ValidationError("non-finite argument to the error function")

    return z


def erfc_complex(z):
    """Complementary error function of a complex argument."""

    return erfc(_finite(z))


def erfcx_complex(z):
    """Scaled complementary error function exp(z²)·erfc(z)."""

    return erfcx(_finite(z))


class QuadratureRule(NamedTuple):
    """Nodes and weights of a Gauss rule."""

    nodes: np.ndarray
    weights: np.ndarray
    kind: str = "legendre"
    alpha: float = 0.0
    beta: float = 0.0

    @property
    def order(self) -> int:
        """Number of nodes."""
        return len(self.nodes)

    def on(self, lo: float, hi: float) -> QuadratureRule:
        """Map a reference rule on [-1, 1] to [lo, hi].

        For Jacobi rules the weight becomes (hi − u)^α (u − lo)^β.
        """
        half = (hi - lo) / 2
        return self._replace(
            nodes=lo + half * (self.nodes + 1),
            weights=self.weights * half ** (1 + self.alpha + self.beta),
        )

    def scaled(self, factor) -> QuadratureRule:
        """Return the rule with weights multiplied by factor."""
        return self._replace(weights=self.weights * factor)

    def integrate(self, values) -> complex:
        """Apply the rule to sampled values."""
        return np.dot(self.weights, values)


def concat(rules: Iterable[QuadratureRule]) -> QuadratureRule:
    """Join several rules into one composite rule."""

    rules = list(rules)

    if not rules:
        return QuadratureRule(np.empty(0), np.empty(0))

    return rules[0]._replace(
        nodes=np.concatenate([rule.nodes for rule in rules]),
        weights=np.concatenate([rule.weights for rule in rules]),
    )


@cache
def gauss_rule(kind: str, n: int, alpha: float = 0.0,
               beta: float = 0.0) -> QuadratureRule:
    """Return a reference Gauss rule.

    Legendre and Jacobi rules live on [-1, 1], Laguerre on [0, ∞).
    """

    if n < 1:
        raise ValidationError(f"quadrature order must be positive: {n}")

    if kind == "legendre":
        nodes, weights = roots_legendre(n)
    elif kind == "jacobi":
        if alpha not in JACOBI_EXPONENTS or beta not in JACOBI_EXPONENTS:
            raise ValidationError(
                f"unsupported Jacobi exponents: ({alpha}, {beta})"
            )

        nodes, weights = roots_jacobi(n, alpha, beta)
    elif kind == "laguerre":
        nodes, weights = roots_laguerre(n)
    else:
        raise ValidationError(f"unknown quadrature kind: {kind}")

    nodes.flags.writeable = False
    weights.flags.writeable = False
    return QuadratureRule(nodes, weights, kind, float(alpha), float(beta))


def panel_rule(lo: float, hi: float, n: int, *,
               sqrt_variable: bool = False) -> QuadratureRule:
    """Gauss–Legendre rule for ∫ F(u) du over [lo, hi].

    With sqrt_variable the rule is built in σ = √(u − lo).
    """

    if not sqrt_variable:
        return gauss_rule("legendre", n).on(lo, hi)

    sigma = gauss_rule("legendre", n).on(0, sqrt(hi - lo))
    return QuadratureRule(lo + sigma.nodes**2,
                          2 * sigma.nodes * sigma.weights)


def graded_rule(lo: float, hi: float, gap: float, n: int, *,
                cap: float = inf,
                sqrt_variable: bool = False) -> QuadratureRule:
    """Rule for ∫ F(u) du over [lo, hi] with F nearly singular at hi + gap.

    Panels double in size away from hi, starting at gap and never
    exceeding cap, so every panel sits at least its own length away
    from the singularity.
    """

    if gap <= 0:
        raise DomainError(f"graded rule needs a positive gap: {gap}")

    if sqrt_variable:
        top = sqrt(hi - lo)
        size = sqrt(hi + gap - lo) - top
        bottom = 0.0
    else:
        top, size, bottom = hi, gap, lo

    rules = []
    edge = top

    while edge > bottom:
        start = max(bottom, edge - min(size, cap))

        if start - bottom < 1e-3 * (edge - start):
            start = bottom

        rules.append(gauss_rule("legendre", n).on(start, edge))
        edge = start
        size *= 2

    rule = concat(rules)

    if not sqrt_variable:
        return rule

    return QuadratureRule(lo + rule.nodes**2, 2 * rule.nodes * rule.weights)


def jacobi_end_rule(lo: float, hi: float, n: int, *,
                    sqrt_variable: bool = False) -> QuadratureRule:
    """Rule for ∫ F(u) (hi − u)^(-1/2) du over [lo, hi]."""

    reference = gauss_rule("jacobi", n, -0.5, 0.0)

    if not sqrt_variable:
        return reference.on(lo, hi)

    top = sqrt(hi - lo)
    sigma = reference.on(0, top)
    # (hi − u)^(-1/2) = (top − σ)^(-1/2) (top + σ)^(-1/2), du = 2σ dσ
    weights = sigma.weights * 2 * sigma.nodes / np.sqrt(top + sigma.nodes)
    return QuadratureRule(lo + sigma.nodes**2, weights, "legendre")


class Panel(NamedTuple):
    """Part of a composite rule that lies within one segment."""

    segment: int
    rule: QuadratureRule
    far: bool


def is_far(lo: float, hi: float, t: float) -> bool:
    """Check whether [lo, hi] lies at least its length away from t."""

    return t - hi >= hi - lo


def abel_rule(t: float, edges, n: int, *, jacobi_order: int | None = None,
              start: int = 0) -> list[Panel]:
    """Composite rule for ∫₀ᵗ F(u) (t − u)^(-1/2) du.

    The returned weights include the singular factor. The segments are
    [edges[i], edges[i+1]] with edges[0] = 0; the first one uses the
    variable √u. Segments before index start are skipped.
    """

    if t < 0 or t > edges[-1] * (1 + EXTRAPOLATION_SLACK):
        raise DomainError(f"time {t} outside [0, {edges[-1]}]")

    jacobi_order = jacobi_order or n
    panels = []

    for index in range(start, len(edges) - 1):
        lo, hi = edges[index], edges[index + 1]
        sqrt_variable = index == 0

        if lo >= t:
            break

        if t <= hi:
            rule = jacobi_end_rule(lo, t, jacobi_order,
                                   sqrt_variable=sqrt_variable)
            panels.append(Panel(index, rule, False))
            break

        if far := is_far(lo, hi, t):
            rule = panel_rule(lo, hi, n, sqrt_variable=sqrt_variable)
        else:
            rule = graded_rule(lo, hi, t - hi, n,
                               sqrt_variable=sqrt_variable)

        panels.append(Panel(index, rule.scaled((t - rule.nodes) ** -0.5),
                            far))

    return panels


def graded_edges(t: float, levels: int = 8) -> list[float]:
    """Segment edges 0, t/2^levels, ..., t/2, t."""

    return [0.0] + [t / 2**level for level in range(levels, -1, -1)]


def chebyshev_nodes(lo: float, hi: float, degree: int, *,
                    sqrt_variable: bool = False) -> np.ndarray:
    """Ascending Chebyshev–Lobatto points of [lo, hi]."""

    x = -np.cos(np.pi * np.arange(degree + 1) / degree)

    if not sqrt_variable:
        return lo + (hi - lo) * (x + 1) / 2

    return lo + (hi - lo) * ((x + 1) / 2) ** 2


@cache
def _fit_matrix(degree: int) -> np.ndarray:
    """Matrix mapping ascending Lobatto samples to coefficients."""

    # DCT-I expects descending nodes cos(πj/N)
    matrix = dct(np.eye(degree + 1)[::-1], type=1, axis=0) / degree
    matrix[0] /= 2
    matrix[-1] /= 2
    matrix.flags.writeable = False
    return matrix


class ChebyshevSeries(NamedTuple):
    """Chebyshev expansion on [lo, hi], optionally in the variable √(t − lo)."""

    lo: float
    hi: float
    coefficients: np.ndarray
    sqrt_variable: bool = False

    @classmethod
    def fit(cls, values, lo: float, hi: float, *,
            sqrt_variable: bool = False) -> ChebyshevSeries:
        """Interpolate samples taken at chebyshev_nodes(lo, hi, N)."""
        if hi <= lo:
            raise DomainError(f"empty interval [{lo}, {hi}]")

        values = np.asarray(values)
        coefficients = _fit_matrix(len(values) - 1) @ values
        return cls(lo, hi, coefficients, sqrt_variable)

    @property
    def degree(self) -> int:
        """Polynomial degree."""
        return len(self.coefficients) - 1

    @property
    def span(self) -> float:
        """Length of the interval in the expansion variable."""
        if self.sqrt_variable:
            return sqrt(self.hi - self.lo)

        return self.hi - self.lo

    def reference(self, t):
        """Map times to the reference interval [-1, 1]."""
        if self.sqrt_variable:
            return 2 * np.sqrt(t - self.lo) / self.span - 1

        return (2 * t - self.lo - self.hi) / (self.hi - self.lo)

    def contains(self, t) -> bool:
        """Check whether all times lie within the interval."""
        slack = EXTRAPOLATION_SLACK * max(abs(self.hi), 1.0)
        t = np.asarray(t)
        return bool(np.all((t >= self.lo - slack) & (t <= self.hi + slack)))

    def __call__(self, t):
        if not self.contains(t):
            raise DomainError(
                f"refusing to extrapolate outside [{self.lo}, {self.hi}]"
            )

        t = np.clip(t, self.lo, self.hi)
        return chebval(self.reference(t), self.coefficients)

    def continuation(self, t):
        """Evaluate at complex times near the interval."""
        return chebval(self.reference(np.asarray(t, dtype=complex)),
                       self.coefficients)

    def derivative(self) -> ChebyshevSeries:
        """Derivative with respect to the expansion variable."""
        return self._replace(
            coefficients=chebder(self.coefficients) * 2 / self.span
        )

    def time_derivative(self, t):
        """Derivative with respect to t.

        In the variable σ = √(t − lo) this is C'(σ)/(2σ), which tends
        to C''(0)/2 at the left end.
        """
        first = self.derivative()

        if not self.sqrt_variable:
            return first(t)

        sigma = np.sqrt(np.clip(np.asarray(t, dtype=float) - self.lo, 0,
                                None))
        safe = np.where(sigma > 0, sigma, 1.0)
        values = first(t) / (2 * safe)
        limit = first.derivative()(self.lo) / 2
        return np.where(sigma > 0, values, limit)

    def tail(self) -> float:
        """Size of the two highest coefficients relative to the largest."""
        scale = np.max(np.abs(self.coefficients))

        if scale == 0:
            return 0.0

        return float(np.max(np.abs(self.coefficients[-2:])) / scale)


def cheb_fit(samples, lo: float, hi: float, *,
             sqrt_variable: bool = False) -> ChebyshevSeries:
    """Fit a Chebyshev series to samples at the Lobatto points."""

    return ChebyshevSeries.fit(samples, lo, hi, sqrt_variable=sqrt_variable)


def cheb_eval(series: ChebyshevSeries, t):
    """Evaluate a series, refusing extrapolation."""

    return series(t)


def interpolation_matrix(lo: float, hi: float, degree: int, points, *,
                         sqrt_variable: bool = False) -> np.ndarray:
    """Matrix mapping Lobatto samples to values at the given points."""

    template = ChebyshevSeries(lo, hi, np.zeros(degree + 1), sqrt_variable)
    x = np.clip(template.reference(np.asarray(points, dtype=float)), -1, 1)
    return chebvander(x, degree) @ _fit_matrix(degree)
