"""Acceptance suite: one test per criterion, each printing a PASS line.

Run with ``pytest tests/test_acceptance.py -v -s`` to see the per-criterion
lines and timings.
"""

import io
import json
import time

import numpy as np
import pytest

from newton_chaos import (
    AffineMap,
    Interval,
    Itinerary,
    SweepSpec,
    alternating_pattern,
    build_bands,
    divergence_witness,
    enumerate_prime_seeds,
    estimate_order,
    find_periodic,
    find_roots,
    make_closed_form,
    make_polynomial,
    map_callable,
    pullback,
    scaling_samples,
    step_third_order,
    verify_scaling_newton,
    verify_scaling_third_order,
)
from newton_chaos.cli import main as cli_main
from newton_chaos.iteration import newton_map, third_order_map

from conftest import dense_fixed_points

QUINTIC_COEFFS = [0, 4, 0, -5, 0, 1]
SEED = 20260810


def report(num, name, t0):
    print(f"\nCRITERION {num} ({name}): PASS  [{time.time() - t0:.2f}s]")


def certify_periods(g, bands, periods, cert_tol=1e-9):
    """Certificates per period for both valid seeds, with the distinctness
    and residual requirements of the periodic-point criterion."""
    out = {}
    for n in periods:
        seeds = enumerate_prime_seeds(2, n)
        assert len(seeds) == 2  # k (k-1)^(n-1), k = 2
        certs = [find_periodic(g, bands, s, cert_tol) for s in seeds]
        for cert, seed in zip(certs, seeds):
            assert cert.residual <= 1e-9
            assert cert.prime
            assert cert.visited_bands == seed.symbols
        points = [c.point for c in certs]
        assert min(abs(a - b) for i, a in enumerate(points)
                   for b in points[i + 1:]) > 1e-9
        out[n] = certs
    return out


def run_pullback_targets(bands, g, n_targets=1000):
    rng = np.random.default_rng(SEED)
    w1, w2 = bands.i1.width, bands.i2.width
    for _ in range(n_targets):
        if rng.uniform() < w1 / (w1 + w2):
            src = bands.i1
        else:
            src = bands.i2
        y = float(rng.uniform(src.lo, src.hi))
        for band in bands.intervals:
            L = pullback(g, band, Interval(y, y))
            assert band.contains(L.lo)
            assert abs(float(g(L.lo)) - y) <= 1e-9 * (1.0 + abs(y))


def test_criterion_1_fixed_point_suite():
    t0 = time.time()
    for coeffs in ([-1, 0, 1], [0, -1, 0, 1], QUINTIC_COEFFS):
        F = make_polynomial(coeffs, Interval(-10, 10))
        roots = find_roots(F)
        assert roots
        for lam in (0.5, 1.0, 2.0):
            for r in roots:
                assert abs(step_third_order(F, r, lam) - r) <= 1e-12 * (1.0 + abs(r))
    assert time.time() - t0 < 1.0
    report(1, "fixed points of the damped two-stage map", t0)


def test_criterion_2_convergence_order():
    t0 = time.time()
    seeds = [1.0 + d for d in np.logspace(-2.1, -3.0, 8)]
    parab = make_polynomial([-1, 0, 1], Interval(-10, 10))
    cubic = make_polynomial([0, -1, 0, 1], Interval(-10, 10))
    assert abs(estimate_order(parab, newton_map(), 1.0, seeds) - 2.0) <= 0.3
    assert abs(estimate_order(parab, third_order_map(), 1.0, seeds) - 3.0) <= 0.3
    assert abs(estimate_order(cubic, newton_map(), 1.0, seeds) - 2.0) <= 0.3
    assert abs(estimate_order(cubic, third_order_map(), 1.0, seeds) - 3.0) <= 0.3
    assert time.time() - t0 < 1.0
    report(2, "convergence orders 2 and 3", t0)


def test_criterion_3_scaling_randomized():
    t0 = time.time()
    rng = np.random.default_rng(SEED)
    checked = 0
    while checked < 200:
        deg = int(rng.integers(1, 6))
        coeffs = rng.uniform(-3, 3, deg + 1)
        if abs(coeffs[-1]) < 0.3:
            coeffs[-1] = 0.3 if coeffs[-1] >= 0 else -0.3
        F = make_polynomial(coeffs.tolist(), Interval(-10, 10))
        a = float(rng.uniform(0.1, 10.0)) * (1.0 if rng.uniform() < 0.5 else -1.0)
        T = AffineMap(a, float(rng.uniform(-5, 5)))
        lam = (0.5, 1.0, 2.0)[int(rng.integers(0, 3))]
        try:
            samples = scaling_samples(F, T, 1, rng)
        except RuntimeError:
            continue
        assert verify_scaling_newton(F, T, samples, lam, tol=1e-9).passed
        assert verify_scaling_third_order(F, T, samples, lam, tol=1e-9).passed
        checked += 1
    # one non-polynomial differentiable function
    wavy = make_closed_form(lambda x: x + np.sin(x), lambda x: 1 + np.cos(x),
                            lambda x: -np.sin(x), Interval(-10, 10))
    T = AffineMap(2.0, 3.0)
    samples = scaling_samples(wavy, T, 20, rng)
    for lam in (0.5, 1.0, 2.0):
        assert verify_scaling_newton(wavy, T, samples, lam, tol=1e-9).passed
        assert verify_scaling_third_order(wavy, T, samples, lam, tol=1e-9).passed
    assert time.time() - t0 < 5.0
    report(3, "affine conjugation identity, 200+ random tuples", t0)


def test_criterion_4_band_certification(quintic, bands_l1, gmap_l1):
    t0 = time.time()
    assert bands_l1.certified
    assert bands_l1.i1.nondegenerate() and bands_l1.i2.nondegenerate()
    assert not bands_l1.i1.intersects(bands_l1.i2)
    run_pullback_targets(bands_l1, gmap_l1, 1000)
    assert time.time() - t0 < 30.0
    report(4, "band covering certified + 1000 pullback targets", t0)


def test_criterion_5_periodic_lower_bound(quintic, bands_l1, gmap_l1):
    t0 = time.time()
    certs = certify_periods(gmap_l1, bands_l1, (1, 2, 3, 4, 5, 6))
    # cross-check: a dense scan over both bands recovers every certified
    # point of period 1..3 within 1e-6
    for n in (1, 2, 3):
        scan = np.concatenate([
            dense_fixed_points(gmap_l1, n, bands_l1.i1, grid=1_000_000),
            dense_fixed_points(gmap_l1, n, bands_l1.i2, grid=1_000_000),
        ])
        for cert in certs[n]:
            assert np.min(np.abs(scan - cert.point)) <= 1e-6
    assert time.time() - t0 < 120.0
    report(5, "2 certified points per prime period 1..6 + scan cross-check", t0)


def test_criterion_6_divergence_witness(bands_l1, gmap_l1):
    t0 = time.time()
    w = divergence_witness(gmap_l1, bands_l1, 10, alternating_pattern(1, 2))
    assert w.verified_prefix >= 8
    other = divergence_witness(gmap_l1, bands_l1, 10, [1, 2, 2, 1, 2, 1, 2, 1, 2, 1])
    assert w.symbols[2] != other.symbols[2]
    assert w.point != other.point
    assert time.time() - t0 < 30.0
    report(6, "divergence witness, 8+ verified memberships", t0)


def test_criterion_7_damping_robustness(quintic):
    t0 = time.time()
    for lam in (0.5, 2.0):
        bands = build_bands(quintic, lam=lam)
        assert bands.certified
        assert bands.i1.nondegenerate() and bands.i2.nondegenerate()
        assert not bands.i1.intersects(bands.i2)
        g = map_callable(quintic, third_order_map(lam))
        run_pullback_targets(bands, g, 1000)
        certify_periods(g, bands, (1, 2, 3))
    assert time.time() - t0 < 240.0
    report(7, "criteria 4-5 under damping 0.5 and 2", t0)


def test_criterion_8_negative_controls(capsys):
    t0 = time.time()
    assert cli_main(["classify", "--f", "poly:-1,0,1"]) == 3
    assert cli_main(["classify", "--f", "poly:4,0,-5,0,1"]) == 3
    code = cli_main(["classify", "--f", "poly:0,0,1", "--json"])
    out = capsys.readouterr().out.splitlines()[-1]
    assert code == 3
    doc = json.loads(out)
    w = doc["newton_class"]["witnesses"]
    assert any(e["condition"] == "nf2" and abs(e["x"]) <= 1e-8 for e in w)
    code = cli_main(["classify", "--f", "poly:0,0,0,1", "--json"])
    out = capsys.readouterr().out.splitlines()[-1]
    assert code == 3
    doc = json.loads(out)
    w = doc["newton_class"]["witnesses"]
    assert any(e["condition"] == "nf3" and abs(e["x"]) <= 1e-8 for e in w)
    report(8, "negative controls rejected with exit 3 + witnesses", t0)


def test_criterion_9_determinism(capsys, tmp_path):
    t0 = time.time()
    json_cmds = [
        ["classify", "--f", "poly:0,4,0,-5,0,1", "--json"],
        ["verify-scaling", "--f", "poly:-1,0,1", "--affine", "2,3",
         "--samples", "100", "--seed", "11", "--json"],
        ["periodic", "--f", "poly:0,4,0,-5,0,1", "--period", "3", "--json"],
        ["witness", "--f", "poly:0,4,0,-5,0,1", "--pattern", "alt",
         "--depth", "10", "--json"],
    ]
    for argv in json_cmds:
        cli_main(argv)
        first = capsys.readouterr().out
        cli_main(argv)
        second = capsys.readouterr().out
        assert first == second and first.strip()
    csvs = []
    for name in ("a.csv", "b.csv"):
        path = tmp_path / name
        cli_main(["sweep", "--f", "poly:0,4,0,-5,0,1", "--vary", "lambda",
                  "--range", "0.5:2:4", "--seeds=-3:3:25", "--burn-in", "40",
                  "--tail", "5", "--seed", "11", "--out", str(path)])
        csvs.append(path.read_bytes())
    assert csvs[0] == csvs[1]
    report(9, "byte-identical JSON/CSV reruns", t0)
