"""Interval pullback, itinerary refinement, periodic points, divergence witnesses.

The engine is the pullback step: for g continuous on J with g(J) covering K,
there is a compact L inside J with g(L) = K, found constructively from the
preimage sets of K's endpoints.  Applying the pullback stage by stage to
composites g^i yields a nested chain of intervals realizing any prescribed
band itinerary; a fixed point of g^n in the deepest interval is a periodic
point whose orbit shadows the itinerary, and a point of a deep non-constant
chain witnesses a non-converging orbit.

Composites are evaluated by re-iteration from scratch.  Each stage multiplies
conditioning: value-space residuals grow with the composite's steepness, and
below the double-precision floor they cannot be improved, only reported.
Chains therefore record their per-stage residuals, deep refinements may stop
early, and verified depths are reported honestly rather than assumed.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Sequence

import numpy as np

from .bands import BandSystem
from .functions import Interval

__all__ = [
    "ItineraryKind",
    "Itinerary",
    "RefinementChain",
    "PeriodicCertificate",
    "DivergenceWitness",
    "PullbackError",
    "RefinementError",
    "CertificationError",
    "pullback",
    "refine_itinerary",
    "find_periodic",
    "divergence_witness",
    "enumerate_prime_seeds",
    "alternating_pattern",
    "CERT_RTOL",
    "PULLBACK_GRID",
]

PULLBACK_GRID = 4096
MAX_DOUBLINGS = 3
CERT_RTOL = 1e-9
SCAN_GRID = 400_000
SCAN_DOUBLINGS = 3


class PullbackError(RuntimeError):
    """No valid preimage interval could be isolated on the sampling grid."""


class RefinementError(RuntimeError):
    def __init__(self, stage: int, symbol: int, cause: Exception):
        super().__init__(f"itinerary refinement failed at stage {stage} (symbol {symbol}): {cause}")
        self.stage = stage
        self.symbol = symbol


class CertificationError(RuntimeError):
    def __init__(self, message: str, chain: "RefinementChain | None" = None):
        super().__init__(message)
        self.chain = chain


class ItineraryKind(Enum):
    PERIODIC_SEED = "periodic-seed"
    FINITE_PREFIX = "finite-prefix"


@dataclass(frozen=True)
class Itinerary:
    """A finite symbol sequence over band indices 1..k."""

    symbols: tuple[int, ...]
    kind: ItineraryKind

    def __post_init__(self) -> None:
        if not self.symbols:
            raise ValueError("itinerary must be nonempty")
        if any((not isinstance(s, int)) or s < 1 for s in self.symbols):
            raise ValueError(f"symbols must be positive integers, got {self.symbols}")

    @classmethod
    def periodic(cls, symbols: Iterable[int]) -> "Itinerary":
        return cls(tuple(symbols), ItineraryKind.PERIODIC_SEED)

    @classmethod
    def prefix(cls, symbols: Iterable[int]) -> "Itinerary":
        return cls(tuple(symbols), ItineraryKind.FINITE_PREFIX)

    def __len__(self) -> int:
        return len(self.symbols)


@dataclass(frozen=True)
class RefinementChain:
    """Nested intervals realizing an itinerary: g^i(intervals[i-1]) = targets[i-1].

    ``residuals[i-1]`` records how far the stage-i endpoint images sit from
    the target's endpoints; it grows with the composite's steepness.
    """

    symbols: tuple[int, ...]
    intervals: tuple[Interval, ...]
    targets: tuple[Interval, ...]
    residuals: tuple[float, ...]

    @property
    def deepest(self) -> Interval:
        return self.intervals[-1]

    @property
    def stages(self) -> int:
        return len(self.intervals)


@dataclass(frozen=True)
class PeriodicCertificate:
    point: float
    period: int
    orbit: tuple[float, ...]
    residual: float
    prime: bool
    visited_bands: tuple[int, ...]


@dataclass(frozen=True)
class DivergenceWitness:
    point: float
    verified_prefix: int
    symbols: tuple[int, ...]


def _band_intervals(bands) -> tuple[Interval, ...]:
    # k-generic: a BandSystem contributes its two bands, but any sequence of
    # pairwise disjoint intervals is accepted.
    if isinstance(bands, BandSystem):
        return bands.intervals
    ivs = tuple(bands)
    if not ivs or not all(isinstance(v, Interval) for v in ivs):
        raise TypeError("bands must be a BandSystem or a sequence of Interval")
    return ivs


def _eval_many(g: Callable, xs: np.ndarray) -> np.ndarray:
    with np.errstate(all="ignore"):
        try:
            vals = np.asarray(g(xs), dtype=float)
            if vals.shape != xs.shape:
                raise TypeError
            return vals
        except (TypeError, ValueError):
            return np.array([float(g(float(x))) for x in xs])


def _solve_level(g: Callable, a: float, b: float, va: float, vb: float, y: float, tol: float) -> float:
    """Bisect g(x) = y on a bracketing cell, keeping the best-residual point."""
    best_x, best_r = a, abs(va - y)
    if abs(vb - y) < best_r:
        best_x, best_r = b, abs(vb - y)
    fa = va - y
    stop = 0.1 * tol * (1.0 + abs(y))
    for _ in range(200):
        m = 0.5 * (a + b)
        if m == a or m == b:
            break
        fm = float(g(m)) - y
        if abs(fm) < best_r:
            best_x, best_r = m, abs(fm)
        if best_r <= stop or fm == 0.0:
            break
        if (fa < 0.0) == (fm < 0.0):
            a, fa = m, fm
        else:
            b = m
    return best_x


def _preimages(g: Callable, xs: np.ndarray, vals: np.ndarray, y: float, tol: float) -> list[float]:
    """All grid-visible preimages of the level y, refined by bisection."""
    pts: list[float] = []
    d = vals - y
    for i in range(len(xs) - 1):
        if d[i] == 0.0:
            pts.append(float(xs[i]))
        elif np.isfinite(d[i]) and np.isfinite(d[i + 1]) and (d[i] < 0.0) != (d[i + 1] < 0.0):
            pts.append(_solve_level(g, float(xs[i]), float(xs[i + 1]),
                                    float(vals[i]), float(vals[i + 1]), y, tol))
    if d[-1] == 0.0:
        pts.append(float(xs[-1]))
    return pts


def _value_floor(g: Callable, x: float) -> float:
    """Value change of g across one representable step at x: the attainable
    residual floor of any double-precision endpoint at this steepness."""
    gx = float(g(x))
    up = float(g(float(np.nextafter(x, math.inf))))
    dn = float(g(float(np.nextafter(x, -math.inf))))
    vals = [abs(up - gx), abs(gx - dn)]
    return max(v for v in vals if math.isfinite(v)) if any(map(math.isfinite, vals)) else math.inf


def pullback(g: Callable, J: Interval, K: Interval, tol: float = CERT_RTOL,
             grid: int = PULLBACK_GRID, max_doublings: int = MAX_DOUBLINGS,
             branch: str = "greatest") -> Interval:
    """Find a compact L inside J with g(L) = K (endpoints onto endpoints).

    ``branch="greatest"`` mirrors the constructive existence argument: take
    the greatest preimage c of K.lo; if a preimage of K.hi lies at or beyond
    c take the least such d and return [c, d], otherwise mirror the search.
    ``branch="widest"`` instead returns the widest admissible preimage
    interval, which is the best-conditioned one; deep composite chains need
    it to survive double precision.

    Preimages are grid-bracketed then bisected, with the grid doubled up to
    ``max_doublings`` times before giving up.  Endpoint residuals are
    accepted when within ``tol`` or at the attainable steepness floor.
    """
    if branch not in ("greatest", "widest"):
        raise ValueError(f"unknown branch rule {branch!r}")
    n = grid
    last: Exception | None = None
    for _ in range(max_doublings + 1):
        xs = np.linspace(J.lo, J.hi, n + 1)
        if len(np.unique(xs)) < 8:
            raise PullbackError(f"interval {J} is too narrow to subdivide further")
        vals = _eval_many(g, xs)
        try:
            return _pullback_on_grid(g, xs, vals, K.lo, K.hi, tol, branch)
        except PullbackError as e:
            last = e
            n *= 2
    raise last  # type: ignore[misc]


def _pullback_on_grid(g: Callable, xs: np.ndarray, vals: np.ndarray,
                      a: float, b: float, tol: float, branch: str) -> Interval:
    pa = _preimages(g, xs, vals, a, tol)
    if not pa:
        raise PullbackError(
            f"target level {a:.6g} not attained over [{xs[0]:.6g}, {xs[-1]:.6g}] "
            f"on a {len(xs)}-point grid (coverage precondition may fail)")
    if a == b:
        c = max(pa)
        return Interval(c, c)
    pb = _preimages(g, xs, vals, b, tol)
    if not pb:
        raise PullbackError(
            f"target level {b:.6g} not attained over [{xs[0]:.6g}, {xs[-1]:.6g}] "
            f"on a {len(xs)}-point grid (coverage precondition may fail)")

    if branch == "greatest":
        c = max(pa)
        right = [p for p in pb if p >= c]
        if right:
            L, expect = Interval(c, min(right)), (a, b)
        else:
            cp = max(pb)
            after = [p for p in pa if p > cp]
            if not after:
                raise PullbackError("preimage ordering degenerate; grid too coarse")
            L, expect = Interval(cp, min(after)), (b, a)
    else:
        # minimal mixed pairs: consecutive preimages of different levels with
        # nothing between them map exactly onto [a, b]; take the widest
        events = sorted([(x, 0) for x in pa] + [(x, 1) for x in pb])
        pairs = [(x0, x1, lab0) for (x0, lab0), (x1, lab1) in zip(events, events[1:])
                 if lab0 != lab1 and x1 > x0]
        if not pairs:
            raise PullbackError("no admissible preimage pair; grid too coarse")
        x0, x1, lab0 = max(pairs, key=lambda p: (p[1] - p[0], -p[0]))
        L, expect = Interval(x0, x1), ((a, b) if lab0 == 0 else (b, a))

    res = max(abs(float(g(L.lo)) - expect[0]), abs(float(g(L.hi)) - expect[1]))
    floor = max(_value_floor(g, L.lo), _value_floor(g, L.hi))
    if res > max(tol * (1.0 + max(abs(a), abs(b))), 8.0 * floor):
        raise PullbackError(f"endpoint residual {res:.3g} exceeds tolerance and the "
                            f"double-precision floor {floor:.3g}")
    return L


def _compose(g: Callable, times: int) -> Callable:
    def gi(x):
        y = x
        for _ in range(times):
            y = g(y)
        return y
    return gi


def _refine_stages(g: Callable, ivs: Sequence[Interval], syms: tuple[int, ...],
                   tol: float, grid: int, max_doublings: int, branch: str):
    """Build the chain stage by stage; returns (chain, failure or None)."""
    current = ivs[syms[0] - 1]
    intervals: list[Interval] = []
    targets: list[Interval] = []
    residuals: list[float] = []
    failure: RefinementError | None = None
    for i in range(1, len(syms)):
        target = ivs[syms[i] - 1]
        gi = _compose(g, i)
        try:
            nxt = pullback(gi, current, target, tol, grid, max_doublings, branch)
        except PullbackError as e:
            failure = RefinementError(i, syms[i], e)
            break
        im_lo, im_hi = float(gi(nxt.lo)), float(gi(nxt.hi))
        res = max(
            min(abs(im_lo - target.lo), abs(im_lo - target.hi)),
            min(abs(im_hi - target.lo), abs(im_hi - target.hi)),
        )
        intervals.append(nxt)
        targets.append(target)
        residuals.append(res)
        current = nxt
    chain = RefinementChain(syms[:len(intervals) + 1], tuple(intervals),
                            tuple(targets), tuple(residuals))
    return chain, failure


def refine_itinerary(g: Callable, bands, itin: Itinerary, tol: float = CERT_RTOL,
                     grid: int = PULLBACK_GRID, max_doublings: int = MAX_DOUBLINGS,
                     branch: str = "greatest") -> RefinementChain:
    """Realize an itinerary as a nested chain of pullback intervals.

    For symbols (s1, ..., sm) the chain has m-1 stages; stage i produces
    A_i inside A_{i-1} (A_0 being band s1) with g^i(A_i) = band s_{i+1}.
    Never inverts g globally: each stage pulls the next band back under the
    composite map restricted to the previous stage's interval.  Any stage
    failure aborts with the failing stage index.
    """
    ivs = _band_intervals(bands)
    syms = itin.symbols
    if any(s > len(ivs) for s in syms):
        raise ValueError(f"itinerary symbols exceed band count {len(ivs)}")
    chain, failure = _refine_stages(g, ivs, syms, tol, grid, max_doublings, branch)
    if failure is not None:
        raise failure
    return chain


def _scan_fixed_points(g: Callable, times: int, J: Interval, grid: int) -> np.ndarray:
    """All grid-visible fixed points of g^times on J, via vectorized bisection."""
    gi = _compose(g, times)
    xs = np.linspace(J.lo, J.hi, grid + 1)
    with np.errstate(all="ignore"):
        h = _eval_many(gi, xs) - xs
    ok = np.isfinite(h[:-1]) & np.isfinite(h[1:])
    sign_change = ok & ((h[:-1] < 0.0) != (h[1:] < 0.0))
    idx = np.nonzero(sign_change)[0]
    exact = np.nonzero(h == 0.0)[0]
    if idx.size == 0:
        return xs[exact]
    lo, hi = xs[idx].copy(), xs[idx + 1].copy()
    flo = h[idx].copy()
    with np.errstate(all="ignore"):
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            fm = np.asarray(gi(mid), dtype=float) - mid
            left = (flo < 0.0) == (fm < 0.0)
            lo = np.where(left, mid, lo)
            flo = np.where(left, fm, flo)
            hi = np.where(left, hi, mid)
    pts = 0.5 * (lo + hi)
    return np.sort(np.concatenate([pts, xs[exact]]))


def _fixed_point_candidates(g: Callable, times: int, A: Interval, grid: int) -> list[float]:
    if A.width <= 0.0:
        return [A.lo]
    return [float(p) for p in _scan_fixed_points(g, times, A, grid)]


def _band_of(ivs: Sequence[Interval], x: float, slack: float) -> int | None:
    for idx, iv in enumerate(ivs, start=1):
        if iv.contains(x, slack):
            return idx
    return None


def _certify_candidate(g: Callable, ivs: Sequence[Interval], syms: tuple[int, ...],
                       p: float, cert_tol: float) -> PeriodicCertificate | None:
    n = len(syms)
    orbit = [p]
    for _ in range(n - 1):
        orbit.append(float(g(orbit[-1])))
    scale = 1.0 + abs(p)
    residual = abs(float(g(orbit[-1])) - p)
    if residual > cert_tol * scale:
        return None
    visited = tuple(_band_of(ivs, x, cert_tol * (1.0 + abs(x))) for x in orbit)
    if visited != syms:
        return None
    prime = all(abs(orbit[m] - p) > cert_tol * scale for m in range(1, n))
    if n > 1 and not prime:
        return None
    return PeriodicCertificate(p, n, tuple(orbit), residual, True if n == 1 else prime, visited)


def find_periodic(g: Callable, bands, itin: Itinerary, cert_tol: float = CERT_RTOL,
                  grid: int = PULLBACK_GRID, max_doublings: int = MAX_DOUBLINGS,
                  scan_grid: int = SCAN_GRID, scan_doublings: int = SCAN_DOUBLINGS) -> PeriodicCertificate:
    """Certify a periodic point of prime period len(itin) realizing the seed.

    The seed is closed with its first symbol and refined into a chain whose
    deepest interval contains a fixed point of g^n; its sign-change
    candidates are merged with a dense fixed-point scan of g^n over the
    seed's first band, since the chain's particular preimage branch may be
    too steep for its fixed point to meet ``cert_tol`` at double precision
    while better-conditioned realizers of the same itinerary exist.  Every
    candidate is screened for residual, band memberships matching the seed,
    and primeness; the smallest-residual survivor is certified.  The scan
    grid doubles up to ``scan_doublings`` times when nothing certifies,
    since realizers live on branches that narrow with the period.
    """
    ivs = _band_intervals(bands)
    if itin.kind is not ItineraryKind.PERIODIC_SEED:
        raise ValueError("find_periodic requires a periodic-seed itinerary")
    syms = itin.symbols
    n = len(syms)
    if any(s > len(ivs) for s in syms):
        raise ValueError(f"itinerary symbols exceed band count {len(ivs)}")
    if n >= 2 and any(s == syms[0] for s in syms[1:]):
        raise ValueError("prime-period seed must not repeat its first symbol")

    chain, failure = _refine_stages(g, ivs, syms + (syms[0],), cert_tol,
                                    grid, max_doublings, "greatest")
    chain_candidates: list[float] = []
    if failure is None:
        chain_candidates.extend(_fixed_point_candidates(g, n, chain.deepest, grid))

    total = 0
    sg = scan_grid
    for attempt in range(scan_doublings + 1):
        candidates = list(chain_candidates) if attempt == 0 else []
        candidates.extend(float(p) for p in _scan_fixed_points(g, n, ivs[syms[0] - 1], sg))
        seen: list[float] = []
        best: PeriodicCertificate | None = None
        for p in sorted(candidates):
            if seen and p - seen[-1] <= 1e-13 * (1.0 + abs(p)):
                continue
            seen.append(p)
            cert = _certify_candidate(g, ivs, syms, p, cert_tol)
            if cert is not None and (best is None or cert.residual < best.residual):
                best = cert
        if best is not None:
            return best
        total = max(total, len(seen))
        sg *= 2
    raise CertificationError(
        f"none of {total} fixed-point candidates of g^{n} certifies the seed "
        f"{syms} (residual/membership/primeness)", chain)


def divergence_witness(g: Callable, bands, prefix_len: int, pattern,
                       cert_tol: float = CERT_RTOL, grid: int = PULLBACK_GRID,
                       max_doublings: int = MAX_DOUBLINGS) -> DivergenceWitness:
    """Produce a point whose orbit follows a non-eventually-constant itinerary.

    ``pattern`` is a callable mapping the 1-based stage index to a band
    symbol, or an explicit symbol sequence.  The materialized prefix must not
    be constant over its tail half — a constant tail cannot witness
    non-convergence.  The chain refines as deep as double precision permits
    (widest-branch pullbacks, which condition best); the returned point is
    the midpoint of the deepest interval and ``verified_prefix`` counts the
    leading band memberships its computed orbit actually satisfies.
    """
    if prefix_len < 2:
        raise ValueError("prefix_len must be at least 2")
    if callable(pattern):
        syms = tuple(int(pattern(i)) for i in range(1, prefix_len + 1))
    else:
        syms = tuple(int(s) for s in pattern)[:prefix_len]
        if len(syms) < prefix_len:
            raise ValueError("explicit pattern shorter than prefix_len")
    tail = syms[prefix_len // 2:]
    if len(set(tail)) <= 1:
        raise ValueError("pattern is eventually constant over the requested prefix")

    ivs = _band_intervals(bands)
    if any(s > len(ivs) for s in syms):
        raise ValueError(f"itinerary symbols exceed band count {len(ivs)}")
    chain, failure = _refine_stages(g, ivs, syms, cert_tol, grid, max_doublings, "widest")
    if chain.stages < 1:
        assert failure is not None
        raise failure
    point = chain.deepest.mid

    verified = 0
    x = point
    for i, s in enumerate(syms, start=1):
        if _band_of(ivs, x, cert_tol * (1.0 + abs(x))) != s:
            break
        verified = i
        x = float(g(x))
    return DivergenceWitness(float(point), verified, syms)


def enumerate_prime_seeds(k: int, n: int) -> list[Itinerary]:
    """All k(k-1)^(n-1) seeds of length n whose first symbol never recurs,
    in lexicographic order."""
    if k < 2:
        raise ValueError("need at least two bands")
    if n < 1:
        raise ValueError("period must be at least 1")
    if n == 1:
        return [Itinerary.periodic((j,)) for j in range(1, k + 1)]
    seeds = []
    for j1 in range(1, k + 1):
        others = [j for j in range(1, k + 1) if j != j1]
        for rest in itertools.product(others, repeat=n - 1):
            seeds.append(Itinerary.periodic((j1,) + rest))
    return seeds


def alternating_pattern(first: int = 1, second: int = 2) -> Callable[[int], int]:
    """The canonical non-eventually-constant pattern: first, second, first, ..."""
    if first == second:
        raise ValueError("alternating pattern needs two distinct symbols")
    return lambda i: first if i % 2 == 1 else second
