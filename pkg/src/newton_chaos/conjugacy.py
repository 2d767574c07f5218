"""Affine conjugation of the iteration maps, verified pointwise.

Conjugating the function (f -> f o T for affine T) and conjugating the
dynamics commute: T o (step for f o T) o T^{-1} equals the step for f, for
both the single- and two-stage maps and any nonzero damping.  This module
builds conjugated functions (exactly, at the coefficient level, for
polynomials) and measures the identity on sample points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .functions import Interval, SmoothFunction, find_critical_points, make_closed_form, make_polynomial
from .iteration import DERIV_FLOOR, DerivativeBlowupError, step_newton, step_third_order

__all__ = [
    "AffineMap",
    "ScalingReport",
    "conjugate_function",
    "verify_scaling_newton",
    "verify_scaling_third_order",
    "scaling_samples",
]


@dataclass(frozen=True)
class AffineMap:
    """x -> a*x + b with a != 0."""

    a: float
    b: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.a) and math.isfinite(self.b)):
            raise ValueError("affine coefficients must be finite")
        if self.a == 0.0:
            raise ValueError("affine scale must be nonzero")

    def __call__(self, x):
        return self.a * x + self.b

    def inverse(self) -> "AffineMap":
        return AffineMap(1.0 / self.a, -self.b / self.a)

    def compose(self, other: "AffineMap") -> "AffineMap":
        return AffineMap(self.a * other.a, self.a * other.b + self.b)


def _compose_coeffs(coeffs: Sequence[float], a: float, b: float) -> tuple[float, ...]:
    # Horner in the polynomial ring: result(x) = f(a*x + b), exact up to
    # floating rounding of the coefficient arithmetic.
    acc = [coeffs[-1]]
    for c in reversed(coeffs[:-1]):
        nxt = [0.0] * (len(acc) + 1)
        for k, v in enumerate(acc):
            nxt[k] += b * v
            nxt[k + 1] += a * v
        nxt[0] += c
        acc = nxt
    return tuple(acc)


def conjugate_function(F: SmoothFunction, T: AffineMap) -> SmoothFunction:
    """Return f o T with chain-rule derivatives.

    Polynomial inputs stay polynomial (coefficients recomposed exactly);
    closed-form inputs are wrapped, with (f o T)' = a * f' o T and
    (f o T)'' = a^2 * f'' o T.  The window maps through T^{-1}.
    """
    inv = T.inverse()
    w_ends = sorted((inv(F.window.lo), inv(F.window.hi)))
    window = Interval(w_ends[0], w_ends[1])
    if F.kind == "polynomial" and F.coeffs is not None:
        return make_polynomial(_compose_coeffs(F.coeffs, T.a, T.b), window)
    a = T.a
    f, df, ddf = F.eval_f, F.eval_df, F.eval_ddf
    return make_closed_form(
        lambda x: f(T(x)),
        lambda x: a * df(T(x)),
        lambda x: (a * a) * ddf(T(x)),
        window,
    )


@dataclass(frozen=True)
class ScalingReport:
    map_label: str
    lam: float
    tol: float
    max_rel_err: float
    worst_x: float | None
    checked: int
    skipped: tuple[float, ...]

    @property
    def passed(self) -> bool:
        return self.checked > 0 and self.max_rel_err <= self.tol


def _verify(step_fn, F: SmoothFunction, T: AffineMap, samples: Sequence[float],
            lam: float, tol: float, label: str) -> ScalingReport:
    if lam == 0.0:
        raise ValueError("damping parameter must be nonzero")
    G = conjugate_function(F, T)
    inv = T.inverse()
    worst, worst_x = -1.0, None
    checked = 0
    skipped: list[float] = []
    for x in samples:
        x = float(x)
        if abs(float(F.eval_df(x))) <= DERIV_FLOOR:
            skipped.append(x)
            continue
        try:
            lhs = T(step_fn(G, inv(x), lam))
            rhs = step_fn(F, x, lam)
        except DerivativeBlowupError:
            skipped.append(x)
            continue
        rel = abs(lhs - rhs) / (1.0 + abs(rhs))
        checked += 1
        if rel > worst:
            worst, worst_x = rel, x
    return ScalingReport(label, lam, tol, max(worst, 0.0), worst_x, checked, tuple(skipped))


def verify_scaling_newton(F: SmoothFunction, T: AffineMap, samples: Sequence[float],
                          lam: float = 1.0, tol: float = 1e-9) -> ScalingReport:
    """Max relative mismatch of T o (single-stage for f o T) o T^{-1} against
    the single-stage map for f over the samples."""
    return _verify(step_newton, F, T, samples, lam, tol, "newton")


def verify_scaling_third_order(F: SmoothFunction, T: AffineMap, samples: Sequence[float],
                               lam: float = 1.0, tol: float = 1e-9) -> ScalingReport:
    """Same check for the two-stage map."""
    return _verify(step_third_order, F, T, samples, lam, tol, "m3")


def scaling_samples(F: SmoothFunction, T: AffineMap, n: int, rng: np.random.Generator,
                    exclusion: float = 1e-3, grid_n: int = 10001) -> list[float]:
    """Sample points in the window staying clear of critical points.

    Both sides of the identity blow up near critical points of f (one side
    in the conjugated coordinate, where distances scale by |a|), so points
    within ``exclusion`` of a critical point in either coordinate are
    rejected.
    """
    crits = find_critical_points(F, grid_n)
    gap = exclusion * max(1.0, abs(T.a))
    out: list[float] = []
    lo, hi = F.window.lo, F.window.hi
    attempts = 0
    while len(out) < n and attempts < 200 * n:
        attempts += 1
        x = float(rng.uniform(lo, hi))
        if any(abs(x - c) <= gap for c in crits):
            continue
        if abs(float(F.eval_df(x))) <= 1e-6:
            continue
        out.append(x)
    if len(out) < n:
        raise RuntimeError("could not draw enough samples away from critical points")
    return out
