"""The one- and two-stage Newton iteration maps, orbit iteration, order estimation.

The single-stage map is ``x - lam * f(x)/f'(x)``; the two-stage map applies a
second correction ``- lam * f(first stage)/f'(x)`` reusing the derivative at
the base point, which lifts the local convergence order from two to three at
simple roots without touching second derivatives.  ``lam`` is a damping
multiplier on both corrections; ``lam = 1`` is the undamped map (single code
path, so the agreement is exact).
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from .functions import SmoothFunction

__all__ = [
    "MapVariant",
    "MapKind",
    "DerivativeBlowupError",
    "LowDerivativeWarning",
    "EstimationError",
    "ConvergedToRoot",
    "PeriodicSuspect",
    "Escaped",
    "DerivativeBlowup",
    "MaxIter",
    "OrbitRecord",
    "step_newton",
    "step_third_order",
    "step",
    "map_callable",
    "iterate",
    "estimate_order",
    "DERIV_FLOOR",
    "DERIV_WARN",
    "DEFAULT_ESCAPE",
]

DERIV_FLOOR = 1e-300  # flush to blowup only at genuine underflow
DERIV_WARN = 1e-12
DEFAULT_ESCAPE = 1e8
REVISIT_RTOL = 1e-9


class MapVariant(Enum):
    NEWTON = "newton"
    THIRD_ORDER = "m3"


@dataclass(frozen=True)
class MapKind:
    """Which iteration map to run, and its damping parameter (1 = undamped)."""

    variant: MapVariant
    lam: float = 1.0

    def __post_init__(self) -> None:
        if not math.isfinite(self.lam) or self.lam == 0.0:
            raise ValueError(f"damping parameter must be finite and nonzero, got {self.lam}")


def newton_map(lam: float = 1.0) -> MapKind:
    return MapKind(MapVariant.NEWTON, lam)


def third_order_map(lam: float = 1.0) -> MapKind:
    return MapKind(MapVariant.THIRD_ORDER, lam)


class DerivativeBlowupError(ArithmeticError):
    """Raised by scalar steps when |f'(x)| is below the floor."""

    def __init__(self, x: float, deriv: float):
        super().__init__(f"derivative magnitude {abs(deriv):.3g} at x={x!r} below floor {DERIV_FLOOR:g}")
        self.x = x
        self.deriv = deriv


class LowDerivativeWarning(RuntimeWarning):
    pass


class EstimationError(RuntimeError):
    """Convergence-order estimation could not collect enough usable pairs."""


def _checked_deriv(F: SmoothFunction, x: float) -> float:
    d = float(F.eval_df(x))
    if abs(d) <= DERIV_FLOOR:
        raise DerivativeBlowupError(x, d)
    if abs(d) < DERIV_WARN:
        warnings.warn(f"|f'({x:.6g})| = {abs(d):.3g} is tiny; step is ill-conditioned",
                      LowDerivativeWarning, stacklevel=3)
    return d


def step_newton(F: SmoothFunction, x: float, lam: float = 1.0) -> float:
    """One damped single-stage step: x - lam * f(x)/f'(x)."""
    d = _checked_deriv(F, x)
    return x - lam * float(F.eval_f(x)) / d


def step_third_order(F: SmoothFunction, x: float, lam: float = 1.0) -> float:
    """One damped two-stage step; the second correction reuses f'(x)."""
    d = _checked_deriv(F, x)
    n = x - lam * float(F.eval_f(x)) / d
    return n - lam * float(F.eval_f(n)) / d


def step(F: SmoothFunction, kind: MapKind, x: float) -> float:
    if kind.variant is MapVariant.NEWTON:
        return step_newton(F, x, kind.lam)
    return step_third_order(F, x, kind.lam)


def map_callable(F: SmoothFunction, kind: MapKind) -> Callable:
    """Non-raising, vectorized form of the map for grid sampling.

    Accepts floats or numpy arrays; where f' vanishes the result is inf/nan
    instead of an exception, matching the map's pole structure.
    """
    lam = float(kind.lam)
    two_stage = kind.variant is MapVariant.THIRD_ORDER
    f, df = F.eval_f, F.eval_df

    def g(x):
        arr = np.asarray(x, dtype=float)
        with np.errstate(all="ignore"):
            d = df(arr)
            y = arr - lam * f(arr) / d
            if two_stage:
                y = y - lam * f(y) / d
        return y if arr.ndim else float(y)

    return g


# --- orbit classification -------------------------------------------------

@dataclass(frozen=True)
class ConvergedToRoot:
    root: float
    label = "converged"


@dataclass(frozen=True)
class PeriodicSuspect:
    period: int
    label = "periodic"


@dataclass(frozen=True)
class Escaped:
    label = "escaped"


@dataclass(frozen=True)
class DerivativeBlowup:
    at: float
    label = "blowup"


@dataclass(frozen=True)
class MaxIter:
    label = "maxiter"


Classification = ConvergedToRoot | PeriodicSuspect | Escaped | DerivativeBlowup | MaxIter


@dataclass(frozen=True)
class OrbitRecord:
    start: float
    iterates: tuple[float, ...]
    classification: Classification


def _polish_root(F: SmoothFunction, x: float) -> float:
    """A few undamped single-stage steps to pin down the nearby root."""
    for _ in range(8):
        d = float(F.eval_df(x))
        if abs(d) <= DERIV_FLOOR:
            break
        x1 = x - float(F.eval_f(x)) / d
        if not math.isfinite(x1):
            break
        if abs(x1 - x) <= 1e-16 * (1.0 + abs(x1)):
            return x1
        x = x1
    return x


def iterate(
    F: SmoothFunction,
    kind: MapKind,
    start: float,
    max_iter: int = 500,
    escape_radius: float = DEFAULT_ESCAPE,
    tol: float = 1e-9,
) -> OrbitRecord:
    """Iterate the map from ``start`` and classify the orbit.

    Stops at the first of: residual |f(x)| within ``tol`` of a polished root
    (ConvergedToRoot), |x| beyond ``escape_radius`` (Escaped), derivative
    floor hit (DerivativeBlowup), a revisit of an earlier iterate within
    ``1e-9 * (1 + |x|)`` (PeriodicSuspect with the revisit lag), or
    ``max_iter`` steps (MaxIter).
    """
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    if escape_radius <= 0.0:
        raise ValueError("escape_radius must be positive")

    buf = np.empty(max_iter + 1)
    buf[0] = start
    xs = [float(start)]
    cls: Classification | None = None

    n = 0
    while True:
        x = xs[-1]
        fx = abs(float(F.eval_f(x)))
        if fx <= tol:
            r = _polish_root(F, x)
            if abs(float(F.eval_f(r))) <= tol and abs(x - r) <= tol * (1.0 + abs(r)):
                cls = ConvergedToRoot(r)
                break
        if abs(x) > escape_radius:
            cls = Escaped()
            break
        # revisit scan; suppressed near roots so slow convergence tails are
        # not misread as period-1 orbits
        if n > 0 and fx > 100.0 * tol:
            close = np.nonzero(np.abs(buf[:n] - x) <= REVISIT_RTOL * (1.0 + abs(x)))[0]
            if close.size:
                cls = PeriodicSuspect(int(n - close.max()))
                break
        if n == max_iter:
            cls = MaxIter()
            break
        try:
            x_next = step(F, kind, x)
        except DerivativeBlowupError:
            cls = DerivativeBlowup(at=x)
            break
        n += 1
        buf[n] = x_next
        xs.append(float(x_next))

    return OrbitRecord(start=float(start), iterates=tuple(xs), classification=cls)


def estimate_order(
    F: SmoothFunction,
    kind: MapKind,
    root: float,
    seeds: Sequence[float],
    max_steps: int = 40,
) -> float:
    """Least-squares estimate of the local convergence order at a simple root.

    Pools (log e_n, log e_{n+1}) pairs over all seeds, keeping pairs with
    ``1e-12 < e_n < 1e-2``; pairs whose successor error sits at the
    double-precision floor are dropped, since the representable error near
    the root would otherwise bias the fit.  Raises EstimationError when
    fewer than 3 pairs survive.
    """
    floor = 1e-13 * (1.0 + abs(root))
    pairs: list[tuple[float, float]] = []
    for s in seeds:
        errs = [abs(s - root)]
        x = float(s)
        for _ in range(max_steps):
            try:
                x = step(F, kind, x)
            except DerivativeBlowupError:
                break
            if not math.isfinite(x):
                break
            errs.append(abs(x - root))
            if errs[-1] < floor:
                break
        for e0, e1 in zip(errs, errs[1:]):
            if 1e-12 < e0 < 1e-2 and e1 > floor:
                pairs.append((math.log(e0), math.log(e1)))
    if len(pairs) < 3:
        raise EstimationError(f"only {len(pairs)} usable iterate pairs (need >= 3)")
    a = np.array(pairs)
    slope = np.polyfit(a[:, 0], a[:, 1], 1)[0]
    return float(slope)
