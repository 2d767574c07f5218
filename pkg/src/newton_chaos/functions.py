"""Smooth scalar functions with explicit derivatives, and root isolation.

A :class:`SmoothFunction` bundles ``f``, ``f'`` and ``f''`` together with a
bounded window of numerical interest.  Polynomials carry their coefficient
array and differentiate formally; closed-form functions must supply their own
derivatives.  Root and critical-point isolation is done by a uniform grid
sign scan followed by bisection and a single Newton polish, which is robust
whenever the sought zeros are simple.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "Interval",
    "SmoothFunction",
    "CriticalStructure",
    "NewtonClassReport",
    "DEFAULT_WINDOW",
    "ROOT_TOL",
    "NF_TOL",
    "make_polynomial",
    "make_closed_form",
    "differentiate_coeffs",
    "find_roots",
    "find_critical_points",
    "verify_newton_class",
    "critical_structure",
]

DEFAULT_WINDOW = (-50.0, 50.0)
ROOT_TOL = 1e-12  # residual tolerance, scaled by 1 + |x|
NF_TOL = 1e-8     # derivative-magnitude threshold for class membership
DEFAULT_GRID = 10001


@dataclass(frozen=True)
class Interval:
    """Nonempty compact interval [lo, hi] with finite endpoints."""

    lo: float
    hi: float

    def __post_init__(self) -> None:
        lo, hi = float(self.lo), float(self.hi)
        if not (math.isfinite(lo) and math.isfinite(hi)):
            raise ValueError(f"interval endpoints must be finite, got [{self.lo}, {self.hi}]")
        if lo > hi:
            raise ValueError(f"interval endpoints out of order: [{self.lo}, {self.hi}]")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    def nondegenerate(self) -> bool:
        return self.lo < self.hi

    @property
    def width(self) -> float:
        return self.hi - self.lo

    @property
    def mid(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def contains(self, x: float, slack: float = 0.0) -> bool:
        return self.lo - slack <= x <= self.hi + slack

    def intersects(self, other: "Interval") -> bool:
        return self.lo <= other.hi and other.lo <= self.hi

    def sample(self, n: int) -> np.ndarray:
        return np.linspace(self.lo, self.hi, n)

    def __str__(self) -> str:
        return f"[{self.lo:.17g}, {self.hi:.17g}]"


@dataclass(frozen=True, eq=False)
class SmoothFunction:
    """A twice continuously differentiable function with explicit derivatives.

    The ``eval_*`` callables accept a float or a numpy array and evaluate
    elementwise.  ``coeffs`` is populated (ascending degree) for the
    polynomial kind only.
    """

    eval_f: Callable
    eval_df: Callable
    eval_ddf: Callable
    window: Interval
    kind: str  # "polynomial" | "closed-form"
    coeffs: tuple[float, ...] | None = None

    @property
    def degree(self) -> int | None:
        return None if self.coeffs is None else len(self.coeffs) - 1


@dataclass(frozen=True)
class CriticalStructure:
    """Roots of f and of f' on the window, with the Rolle interlacing verdict."""

    roots: tuple[float, ...]
    critical_points: tuple[float, ...]
    interlacing_ok: bool


@dataclass(frozen=True)
class NewtonClassReport:
    """Outcome of the simple-root / simple-critical-point membership checks.

    ``witnesses`` holds (condition, x, derivative value) triples for every
    violator found: condition "nf2" flags a root where ``f'`` vanishes,
    "nf3" a critical point where ``f''`` vanishes.
    """

    nf2_ok: bool
    nf3_ok: bool
    witnesses: tuple[tuple[str, float, float], ...]
    roots: tuple[float, ...]
    critical_points: tuple[float, ...]

    @property
    def ok(self) -> bool:
        return self.nf2_ok and self.nf3_ok


def differentiate_coeffs(coeffs: Sequence[float]) -> tuple[float, ...]:
    """Formal derivative of an ascending-degree coefficient array."""
    if len(coeffs) <= 1:
        return (0.0,)
    return tuple(i * c for i, c in enumerate(coeffs) if i > 0)


def _polyval(coeffs: Sequence[float], x):
    # Horner; works for floats and numpy arrays alike.
    acc = x * 0.0 + coeffs[-1]
    for c in reversed(coeffs[:-1]):
        acc = acc * x + c
    return acc


def make_polynomial(coeffs: Sequence[float], window: Interval | None = None) -> SmoothFunction:
    """Build a polynomial function from ascending-degree coefficients.

    Raises ``ValueError`` on an empty coefficient list or a zero leading
    coefficient; derivatives are formal, so they agree with the coefficient
    arrays up to floating rounding at every point.
    """
    c = tuple(float(v) for v in coeffs)
    if not c:
        raise ValueError("coefficient list must be nonempty")
    if c[-1] == 0.0:
        raise ValueError("leading coefficient must be nonzero")
    if window is None:
        window = Interval(*DEFAULT_WINDOW)
    d1 = differentiate_coeffs(c)
    d2 = differentiate_coeffs(d1)
    return SmoothFunction(
        eval_f=lambda x: _polyval(c, x),
        eval_df=lambda x: _polyval(d1, x),
        eval_ddf=lambda x: _polyval(d2, x),
        window=window,
        kind="polynomial",
        coeffs=c,
    )


def make_closed_form(
    f: Callable,
    df: Callable,
    ddf: Callable,
    window: Interval | None = None,
) -> SmoothFunction:
    """Wrap caller-supplied f, f', f'' callables (no automatic differentiation)."""
    if window is None:
        window = Interval(*DEFAULT_WINDOW)
    return SmoothFunction(eval_f=f, eval_df=df, eval_ddf=ddf, window=window, kind="closed-form")


def _grid_values(fun: Callable, xs: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(fun(xs), dtype=float)
        if vals.shape != xs.shape:
            raise TypeError
        return vals
    except (TypeError, ValueError):
        return np.array([float(fun(float(x))) for x in xs])


def _bisect(fun: Callable, a: float, b: float, fa: float, fb: float) -> float:
    """Bisection on a sign-change cell; refines until the cell is at rounding width."""
    if fa == 0.0:
        return a
    if fb == 0.0:
        return b
    for _ in range(200):
        m = 0.5 * (a + b)
        if m == a or m == b:
            break
        fm = float(fun(m))
        if fm == 0.0:
            return m
        if (fa < 0.0) == (fm < 0.0):
            a, fa = m, fm
        else:
            b, fb = m, fm
        if b - a <= 4.0 * np.finfo(float).eps * (1.0 + abs(m)):
            break
    return 0.5 * (a + b)


def _isolate_zeros(
    fun: Callable,
    dfun: Callable | None,
    window: Interval,
    grid_n: int,
    tol: float,
) -> list[float]:
    """Sign-scan ``fun`` on a uniform grid; bisect each bracket; polish once.

    Exact zeros at grid points are accepted directly and the scan continues
    past them.  Returns a strictly increasing, deduplicated list.
    """
    if grid_n < 2:
        raise ValueError("grid_n must be at least 2")
    if tol <= 0.0:
        raise ValueError("tol must be positive")
    xs = window.sample(grid_n)
    vals = _grid_values(fun, xs)

    hits: list[float] = []
    for i in range(grid_n - 1):
        if vals[i] == 0.0:
            hits.append(float(xs[i]))
            continue
        if vals[i + 1] == 0.0:
            continue  # recorded when the next cell starts there
        if (vals[i] < 0.0) != (vals[i + 1] < 0.0):
            hits.append(_bisect(fun, float(xs[i]), float(xs[i + 1]), float(vals[i]), float(vals[i + 1])))
    if vals[-1] == 0.0:
        hits.append(float(xs[-1]))

    if dfun is not None:
        polished = []
        for x in hits:
            d = float(dfun(x))
            if d != 0.0:
                x1 = x - float(fun(x)) / d
                # keep the polish only if it stays nearby and helps the residual
                if abs(x1 - x) <= 1e-6 * (1.0 + abs(x)) and abs(float(fun(x1))) <= abs(float(fun(x))):
                    x = x1
            polished.append(x)
        hits = polished

    hits.sort()
    out: list[float] = []
    for x in hits:
        if out and x - out[-1] <= 2.0 * tol * (1.0 + abs(x)):
            continue
        out.append(x)
    return out


def find_roots(F: SmoothFunction, grid_n: int = DEFAULT_GRID, tol: float = ROOT_TOL) -> list[float]:
    """Isolate the simple roots of f on the window.

    Every sign change on the grid is captured; each returned x satisfies
    ``|f(x)| <= tol * (1 + |x|)`` after polishing.  An empty list is a valid
    result.
    """
    return _isolate_zeros(F.eval_f, F.eval_df, F.window, grid_n, tol)


def find_critical_points(F: SmoothFunction, grid_n: int = DEFAULT_GRID, tol: float = ROOT_TOL) -> list[float]:
    """Isolate the simple roots of f' on the window (same contract as find_roots)."""
    return _isolate_zeros(F.eval_df, F.eval_ddf, F.window, grid_n, tol)


def verify_newton_class(
    F: SmoothFunction,
    tol: float = NF_TOL,
    grid_n: int = DEFAULT_GRID,
    root_tol: float = ROOT_TOL,
) -> NewtonClassReport:
    """Check that detected roots of f and of f' are simple.

    Sign-change scans miss even-order zeros, so two extra candidate sets are
    examined: critical points where f itself nearly vanishes (double roots of
    f, an "nf2" violation) and sign-change roots of f'' where f' nearly
    vanishes (flat critical points, an "nf3" violation).  Degenerate
    detections are reported as witnesses, never raised.
    """
    roots = find_roots(F, grid_n, root_tol)
    crits = find_critical_points(F, grid_n, root_tol)
    witnesses: list[tuple[str, float, float]] = []

    for r in roots:
        d = float(F.eval_df(r))
        if abs(d) <= tol:
            witnesses.append(("nf2", r, d))
    for c in crits:
        dd = float(F.eval_ddf(c))
        if abs(dd) <= tol:
            witnesses.append(("nf3", c, dd))

    # double roots of f sit at critical points with f ~ 0
    for c in crits:
        if abs(float(F.eval_f(c))) <= root_tol * (1.0 + abs(c)):
            if not any(abs(c - r) <= 1e-9 * (1.0 + abs(c)) for r in roots):
                witnesses.append(("nf2", c, float(F.eval_df(c))))

    # flat critical points of f (f' touching zero) show up as zeros of f''
    inflections = _isolate_zeros(F.eval_ddf, None, F.window, grid_n, root_tol)
    for z in inflections:
        if abs(float(F.eval_df(z))) <= tol:
            if not any(abs(z - c) <= 1e-9 * (1.0 + abs(z)) for c in crits):
                witnesses.append(("nf3", z, float(F.eval_ddf(z))))

    nf2_ok = not any(w[0] == "nf2" for w in witnesses)
    nf3_ok = not any(w[0] == "nf3" for w in witnesses)
    return NewtonClassReport(
        nf2_ok=nf2_ok,
        nf3_ok=nf3_ok,
        witnesses=tuple(witnesses),
        roots=tuple(roots),
        critical_points=tuple(crits),
    )


def critical_structure(F: SmoothFunction, grid_n: int = DEFAULT_GRID, tol: float = ROOT_TOL) -> CriticalStructure:
    """Roots and critical points together with the Rolle interlacing verdict."""
    roots = find_roots(F, grid_n, tol)
    crits = find_critical_points(F, grid_n, tol)
    interlacing = all(
        any(lo < c < hi for c in crits) for lo, hi in zip(roots, roots[1:])
    )
    return CriticalStructure(tuple(roots), tuple(crits), interlacing)
