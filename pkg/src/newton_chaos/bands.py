"""Band construction and numerically certified covering for the two-stage map.

Given a function with at least four consecutive roots, the two-stage map
blows up with opposite signs at the critical points flanking each
single-root band.  Truncating the two chosen bands by a small epsilon yields
disjoint compact intervals I1 and I2 on which the map's range covers
[c1, c3], hence covers I1 and I2 themselves.  That covering is what the
symbolic machinery consumes.

Certification here is sampling-based (dense grid plus local refinement at
the envelope extremes and the band edges), labelled "numerically certified";
it is not an interval-arithmetic proof.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .functions import (
    DEFAULT_GRID,
    Interval,
    NewtonClassReport,
    NF_TOL,
    ROOT_TOL,
    SmoothFunction,
    find_critical_points,
    find_roots,
    verify_newton_class,
)
from .iteration import MapKind, MapVariant, map_callable

__all__ = [
    "BandSystem",
    "HypothesesReport",
    "EdgeLimits",
    "HypothesesError",
    "BandError",
    "EPS_SCHEDULE",
    "check_hypotheses",
    "limits_at_band_edges",
    "build_bands",
]

EPS_SCHEDULE = (1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
DEFAULT_COVER_GRID = 65536


class HypothesesError(RuntimeError):
    """The function does not satisfy the structural hypotheses."""

    def __init__(self, report: "HypothesesReport"):
        super().__init__("; ".join(report.failures) or "hypotheses not satisfied")
        self.report = report


class BandError(RuntimeError):
    """Band selection or construction failed structurally."""


@dataclass(frozen=True)
class HypothesesReport:
    """Verdicts for the three structural hypotheses.

    (i) membership in the simple-root/simple-critical-point class,
    (ii) infinite limits of opposite signs at the two ends (exact odd-degree
    check for polynomials, endpoint-sign proxy otherwise),
    (iii) at least four real roots in the window.
    """

    newton_class: NewtonClassReport
    opposite_limits_ok: bool
    limits_basis: str  # "odd-degree" | "endpoint-signs"
    root_count: int
    roots: tuple[float, ...]
    critical_points: tuple[float, ...]

    @property
    def newton_class_ok(self) -> bool:
        return self.newton_class.ok

    @property
    def enough_roots(self) -> bool:
        return self.root_count >= 4

    @property
    def ok(self) -> bool:
        return self.newton_class_ok and self.opposite_limits_ok and self.enough_roots

    @property
    def failures(self) -> list[str]:
        out = []
        if not self.newton_class_ok:
            out.append("function class violation (nf2/nf3)")
        if not self.opposite_limits_ok:
            out.append("limits at +/-inf are not infinite of opposite signs")
        if not self.enough_roots:
            out.append(f"needs at least 4 real roots, found {self.root_count}")
        return out


@dataclass(frozen=True)
class EdgeLimits:
    """Divergence signs of the single-stage map at a band's two edges."""

    sign_left: int
    sign_right: int
    conclusive: bool
    reason: str | None = None


@dataclass(frozen=True)
class BandSystem:
    """Four consecutive roots, flanking critical points, and the two bands.

    ``roots`` = (r1, r2, r3, r4) strictly increasing; ``crits`` =
    (c1, c2, c2p, c3) with c2 == c2p allowed; ``i1`` = [c1+eps, c2-eps],
    ``i2`` = [c2p+eps, c3-eps]; ``cover_target`` = [c1, c3].  ``certified``
    means the sampled range of the (lam-damped) two-stage map over each band
    was observed to cover the target.
    """

    roots: tuple[float, float, float, float]
    crits: tuple[float, float, float, float]
    epsilon: float
    i1: Interval
    i2: Interval
    certified: bool
    lam: float = 1.0
    attempts: tuple[tuple[float, bool], ...] = ()

    @property
    def intervals(self) -> tuple[Interval, Interval]:
        return (self.i1, self.i2)

    @property
    def cover_target(self) -> Interval:
        return Interval(self.crits[0], self.crits[3])

    def band_index(self, x: float, slack: float = 0.0) -> int | None:
        if self.i1.contains(x, slack):
            return 1
        if self.i2.contains(x, slack):
            return 2
        return None


def check_hypotheses(
    F: SmoothFunction,
    grid_n: int = DEFAULT_GRID,
    nf_tol: float = NF_TOL,
    root_tol: float = ROOT_TOL,
) -> HypothesesReport:
    """Evaluate the three structural hypotheses; failures are report entries."""
    report = verify_newton_class(F, nf_tol, grid_n, root_tol)
    if F.kind == "polynomial":
        opposite = (F.degree % 2) == 1
        basis = "odd-degree"
    else:
        flo = float(F.eval_f(F.window.lo))
        fhi = float(F.eval_f(F.window.hi))
        opposite = flo * fhi < 0.0
        basis = "endpoint-signs"
    return HypothesesReport(
        newton_class=report,
        opposite_limits_ok=opposite,
        limits_basis=basis,
        root_count=len(report.roots),
        roots=report.roots,
        critical_points=report.critical_points,
    )


def limits_at_band_edges(
    F: SmoothFunction,
    c_left: float,
    c_right: float,
    probe_h: float = 1e-2,
    lam: float = 1.0,
    grid_n: int = DEFAULT_GRID,
) -> EdgeLimits:
    """Probe the single-stage map just inside a band's edges.

    Requires exactly one root of f and no critical point strictly inside
    (c_left, c_right); evaluates the map at shrinking offsets from each edge
    and reports the divergence signs, demanding monotone growth, a constant
    sign per side, and opposite signs across the two sides.  Anything else is
    an inconclusive verdict, not an error.
    """
    roots = [r for r in find_roots(F, grid_n) if c_left < r < c_right]
    crits = [c for c in find_critical_points(F, grid_n)
             if c_left < c < c_right and min(abs(c - c_left), abs(c - c_right)) > 1e-9 * (1.0 + abs(c))]
    if len(roots) != 1 or crits:
        return EdgeLimits(0, 0, False,
                          f"band must contain exactly one root and no critical point "
                          f"(found {len(roots)} roots, {len(crits)} critical points)")

    g = map_callable(F, MapKind(MapVariant.NEWTON, lam))
    hs = [probe_h, probe_h * 1e-2, probe_h * 1e-4]
    left = [g(c_left + h) for h in hs]
    right = [g(c_right - h) for h in hs]
    for vals in (left, right):
        if not all(math.isfinite(v) for v in vals):
            return EdgeLimits(0, 0, False, "probe hit a pole or overflow")
        if not (abs(vals[0]) < abs(vals[1]) < abs(vals[2])):
            return EdgeLimits(0, 0, False, "probe magnitudes do not grow monotonically")
        if len({math.copysign(1.0, v) for v in vals}) != 1:
            return EdgeLimits(0, 0, False, "probe signs flip on one side")
    sl = int(math.copysign(1.0, left[-1]))
    sr = int(math.copysign(1.0, right[-1]))
    if sl == sr:
        return EdgeLimits(sl, sr, False, "edge divergence signs are not opposite")
    return EdgeLimits(sl, sr, True)


def _select_tuple(
    roots: list[float], crits: list[float], window: Interval
) -> tuple[tuple[float, float, float, float], tuple[float, float, float, float]]:
    """Pick four consecutive roots nearest the window center, then the
    flanking critical points: the last one before r2, the first and last
    inside (r2, r3), and the first after r3."""
    if len(roots) < 4:
        raise BandError(f"need at least 4 roots, have {len(roots)}")
    center = window.mid
    best = min(range(len(roots) - 3),
               key=lambda i: (abs(sum(roots[i:i + 4]) / 4.0 - center), i))
    r = tuple(roots[best:best + 4])

    def crits_in(lo: float, hi: float) -> list[float]:
        return [c for c in crits if lo < c < hi]

    g1, g2, g3 = crits_in(r[0], r[1]), crits_in(r[1], r[2]), crits_in(r[2], r[3])
    if not (g1 and g2 and g3):
        raise BandError("a root gap contains no detected critical point")
    c1, c2, c2p, c3 = g1[-1], g2[0], g2[-1], g3[0]

    for lo, hi, root in ((c1, c2, r[1]), (c2p, c3, r[2])):
        inside = [x for x in roots if lo < x < hi]
        if inside != [root]:
            raise BandError(f"band ({lo:g}, {hi:g}) does not isolate exactly one root")
        if crits_in(lo, hi):
            raise BandError(f"band ({lo:g}, {hi:g}) contains a critical point")
    return r, (c1, c2, c2p, c3)


def _sampled_envelope(g, band: Interval, grid: int, refine: int = 3) -> tuple[float, float]:
    """Min/max of g over dense samples of the band, with local refinement
    around the current extremes and at both edges (where the map blows up)."""
    xs = band.sample(grid)
    with np.errstate(all="ignore"):
        vals = np.asarray(g(xs), dtype=float)
    lo = float(np.nanmin(vals))
    hi = float(np.nanmax(vals))
    cell = band.width / (grid - 1)
    for _ in range(refine):
        focus = [float(xs[int(np.nanargmin(vals))]), float(xs[int(np.nanargmax(vals))]),
                 band.lo + cell, band.hi - cell]
        for x0 in focus:
            a = max(band.lo, x0 - cell)
            b = min(band.hi, x0 + cell)
            sub = np.linspace(a, b, max(64, grid // 16))
            with np.errstate(all="ignore"):
                sv = np.asarray(g(sub), dtype=float)
            lo = min(lo, float(np.nanmin(sv)))
            hi = max(hi, float(np.nanmax(sv)))
        cell *= 0.25
    return lo, hi


def build_bands(
    F: SmoothFunction,
    eps_schedule=None,
    cover_grid: int = DEFAULT_COVER_GRID,
    lam: float = 1.0,
    grid_n: int = DEFAULT_GRID,
) -> BandSystem:
    """Build the two truncated bands and certify the covering by sampling.

    Walks the epsilon schedule (skipping values that degenerate a band) and
    returns at the first epsilon for which the sampled range of the map over
    each band covers [c1, c3].  If none certifies, the best attempt is
    returned with ``certified=False``.  Raises HypothesesError when the
    structural hypotheses fail.
    """
    hyp = check_hypotheses(F, grid_n)
    if not hyp.ok:
        raise HypothesesError(hyp)
    r, c = _select_tuple(list(hyp.roots), list(hyp.critical_points), F.window)
    c1, c2, c2p, c3 = c
    target = Interval(c1, c3)
    g = map_callable(F, MapKind(MapVariant.THIRD_ORDER, lam))

    schedule = tuple(eps_schedule) if eps_schedule is not None else EPS_SCHEDULE
    attempts: list[tuple[float, bool]] = []
    best: tuple[float, float, Interval, Interval] | None = None  # (score, eps, i1, i2)

    for eps in schedule:
        if eps <= 0.0 or c1 + eps >= c2 - eps or c2p + eps >= c3 - eps:
            continue  # this eps degenerates a band
        i1 = Interval(c1 + eps, c2 - eps)
        i2 = Interval(c2p + eps, c3 - eps)
        covered = []
        score = math.inf
        for band in (i1, i2):
            lo, hi = _sampled_envelope(g, band, cover_grid)
            covered.append(lo <= target.lo and hi >= target.hi)
            span = max(0.0, min(hi, target.hi) - max(lo, target.lo))
            score = min(score, span / target.width)
        ok = all(covered)
        attempts.append((eps, ok))
        if ok:
            return BandSystem(r, c, eps, i1, i2, True, lam, tuple(attempts))
        if best is None or score > best[0]:
            best = (score, eps, i1, i2)

    if best is None:
        raise BandError("no epsilon in the schedule yields nondegenerate bands")
    _, eps, i1, i2 = best
    return BandSystem(r, c, eps, i1, i2, False, lam, tuple(attempts))
