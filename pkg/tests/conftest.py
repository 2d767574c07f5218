import numpy as np
import pytest

from newton_chaos import Interval, build_bands, make_polynomial
from newton_chaos.iteration import MapKind, MapVariant, map_callable


@pytest.fixture(scope="session")
def parab():
    return make_polynomial([-1, 0, 1], Interval(-10, 10))


@pytest.fixture(scope="session")
def cubic():
    return make_polynomial([0, -1, 0, 1], Interval(-10, 10))


@pytest.fixture(scope="session")
def quintic():
    return make_polynomial([0, 4, 0, -5, 0, 1])


@pytest.fixture(scope="session")
def bands_l1(quintic):
    bands = build_bands(quintic)
    assert bands.certified
    return bands


@pytest.fixture(scope="session")
def gmap_l1(quintic):
    return map_callable(quintic, MapKind(MapVariant.THIRD_ORDER, 1.0))


def dense_fixed_points(g, times, interval, grid=1_000_000):
    """Independent oracle: all transversal fixed points of g^times on the
    interval, from a dense grid scan plus vectorized bisection."""
    xs = np.linspace(interval.lo, interval.hi, grid)
    with np.errstate(all="ignore"):
        y = xs.copy()
        for _ in range(times):
            y = g(y)
        h = y - xs
    ok = np.isfinite(h[:-1]) & np.isfinite(h[1:])
    idx = np.nonzero(ok & ((h[:-1] < 0.0) != (h[1:] < 0.0)))[0]
    if idx.size == 0:
        return np.array([])
    lo, hi = xs[idx].copy(), xs[idx + 1].copy()
    flo = h[idx].copy()
    with np.errstate(all="ignore"):
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            fm = mid.copy()
            for _ in range(times):
                fm = g(fm)
            fm = fm - mid
            left = (flo < 0.0) == (fm < 0.0)
            lo = np.where(left, mid, lo)
            flo = np.where(left, fm, flo)
            hi = np.where(left, hi, mid)
    return 0.5 * (lo + hi)
