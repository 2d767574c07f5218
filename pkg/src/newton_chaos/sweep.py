"""Parameter sweeps over damping or a polynomial coefficient, CSV output,
and the damping-robustness table (bands + periodic counts per damping value)."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from .bands import HypothesesError, build_bands, check_hypotheses
from .functions import SmoothFunction, make_polynomial
from .iteration import (
    ConvergedToRoot,
    DEFAULT_ESCAPE,
    DerivativeBlowup,
    Escaped,
    MapKind,
    MapVariant,
    OrbitRecord,
    PeriodicSuspect,
    iterate,
    map_callable,
)
from .symbolic import CertificationError, RefinementError, enumerate_prime_seeds, find_periodic

__all__ = [
    "SweepSpec",
    "SweepRow",
    "DampingRow",
    "run_sweep",
    "write_csv",
    "damping_robustness",
]


@dataclass(frozen=True)
class SweepSpec:
    """What to vary, over which grid, and how long to iterate per cell."""

    base: SmoothFunction
    vary: str  # "lambda" | "coeff"
    lo: float
    hi: float
    steps: int
    seeds: tuple[float, ...]
    coeff_index: int | None = None
    burn_in: int = 200
    tail: int = 100
    escape_radius: float = DEFAULT_ESCAPE

    def __post_init__(self) -> None:
        if self.vary not in ("lambda", "coeff"):
            raise ValueError(f"vary must be 'lambda' or 'coeff', got {self.vary!r}")
        if self.steps < 1:
            raise ValueError("steps must be at least 1")
        if self.burn_in < 0:
            raise ValueError("burn_in must be nonnegative")
        if self.tail < 1:
            raise ValueError("tail must be at least 1")
        if not self.seeds:
            raise ValueError("seed list must be nonempty")
        if self.vary == "coeff":
            if self.base.kind != "polynomial" or self.base.coeffs is None:
                raise ValueError("coefficient sweeps need a polynomial base function")
            deg = len(self.base.coeffs) - 1
            if self.coeff_index is None or not (0 <= self.coeff_index <= deg):
                raise ValueError(f"coeff_index must be in 0..{deg}")
            if self.coeff_index == deg and any(v == 0.0 for v in self.param_values()):
                raise ValueError("sweep would zero the leading coefficient")
        else:
            if any(v == 0.0 for v in self.param_values()):
                raise ValueError("damping sweep must not contain 0")

    def param_values(self) -> np.ndarray:
        return np.linspace(self.lo, self.hi, self.steps)


@dataclass(frozen=True)
class SweepRow:
    param: float
    seed: float
    record: OrbitRecord
    tail_values: tuple[float, ...]

    @property
    def label(self) -> str:
        c = self.record.classification
        if isinstance(c, ConvergedToRoot):
            return "converged:%.17g" % c.root
        if isinstance(c, PeriodicSuspect):
            return "periodic:%d" % c.period
        if isinstance(c, (Escaped, DerivativeBlowup)):
            return "escaped"  # blowups are recorded as escapes, not aborts
        return "maxiter"


def _tail_from(record: OrbitRecord, burn_in: int, tail: int) -> tuple[float, ...]:
    it = record.iterates
    cls = record.classification
    out: list[float] = []
    for idx in range(burn_in, burn_in + tail):
        if idx < len(it):
            out.append(it[idx])
        elif isinstance(cls, ConvergedToRoot):
            out.append(it[-1])
        elif isinstance(cls, PeriodicSuspect) and cls.period <= len(it):
            cyc = it[-cls.period:]
            out.append(cyc[(idx - (len(it) - cls.period)) % cls.period])
        else:
            out.append(math.copysign(math.inf, it[-1]))
    return tuple(out)


def _materialize(spec: SweepSpec, kind: MapKind, param: float) -> tuple[SmoothFunction, MapKind]:
    if spec.vary == "lambda":
        return spec.base, MapKind(kind.variant, float(param))
    coeffs = list(spec.base.coeffs)
    coeffs[spec.coeff_index] = float(param)
    return make_polynomial(coeffs, spec.base.window), kind


def run_sweep(spec: SweepSpec, kind: MapKind, tol: float = 1e-9) -> list[SweepRow]:
    """One row per (param, seed) cell, param-major, seed-minor; exactly
    steps * len(seeds) rows, blowups included as escaped rows."""
    rows: list[SweepRow] = []
    horizon = spec.burn_in + spec.tail - 1
    for param in spec.param_values():
        fn, eff = _materialize(spec, kind, float(param))
        for seed in spec.seeds:
            rec = iterate(fn, eff, float(seed), max_iter=max(1, horizon),
                          escape_radius=spec.escape_radius, tol=tol)
            rows.append(SweepRow(float(param), float(seed), rec,
                                 _tail_from(rec, spec.burn_in, spec.tail)))
    return rows


def _cell(v: float) -> str:
    if math.isinf(v):
        return "inf+" if v > 0 else "inf-"
    if math.isnan(v):
        return "nan"
    return "%.17g" % v


def write_csv(rows: Sequence[SweepRow], tail: int, out: IO[str]) -> None:
    header = "param,seed,class," + ",".join(f"tail_{i}" for i in range(tail))
    out.write(header + "\n")
    for r in rows:
        cells = ["%.17g" % r.param, "%.17g" % r.seed, r.label]
        cells.extend(_cell(v) for v in r.tail_values)
        out.write(",".join(cells) + "\n")


@dataclass(frozen=True)
class DampingRow:
    lam: float
    certified: bool
    epsilon: float | None
    counts: dict[int, int] = field(default_factory=dict)

    @property
    def min_count(self) -> int:
        return min(self.counts.values()) if self.counts else 0


def damping_robustness(
    F: SmoothFunction,
    lambdas: Sequence[float],
    periods: Sequence[int],
    eps_schedule=None,
    cert_tol: float = 1e-9,
) -> list[DampingRow]:
    """Rebuild bands and recount certified periodic points per damping value.

    Requires every damping value to be positive and the base function to
    satisfy the structural hypotheses; per-lambda certification failures are
    recorded in the table, not raised.
    """
    if any((not math.isfinite(l)) or l <= 0.0 for l in lambdas):
        raise ValueError("damping values must be positive")
    hyp = check_hypotheses(F)
    if not hyp.ok:
        raise HypothesesError(hyp)

    rows: list[DampingRow] = []
    for lam in lambdas:
        bands = build_bands(F, eps_schedule=eps_schedule, lam=float(lam))
        if not bands.certified:
            rows.append(DampingRow(float(lam), False, bands.epsilon))
            continue
        g = map_callable(F, MapKind(MapVariant.THIRD_ORDER, float(lam)))
        counts: dict[int, int] = {}
        for n in periods:
            points: list[float] = []
            for seed in enumerate_prime_seeds(2, n):
                try:
                    cert = find_periodic(g, bands, seed, cert_tol)
                except (RefinementError, CertificationError):
                    continue
                if all(abs(cert.point - q) > cert_tol for q in points):
                    points.append(cert.point)
            counts[int(n)] = len(points)
        rows.append(DampingRow(float(lam), True, bands.epsilon, counts))
    return rows
