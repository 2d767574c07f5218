"""Command-line entry point wiring all modules.

Subcommands: orbit, bands, periodic, witness, verify-scaling, classify,
sweep.  Function specs follow the grammar ``poly:c0,c1,...,cn`` (ascending
coefficients).  All floating output is printed with 17 significant digits so
repeated runs diff cleanly; ``--json`` switches every subcommand to a
machine-readable document carrying a schema version.

Exit codes: 0 success, 2 parse error, 3 hypotheses failure, 4 certification
failure, 1 other failures.
"""

from __future__ import annotations

import argparse
import io
import json
import os
import sys
from dataclasses import dataclass

import numpy as np

from .bands import BandSystem, HypothesesError, build_bands, check_hypotheses, limits_at_band_edges
from .conjugacy import AffineMap, scaling_samples, verify_scaling_newton, verify_scaling_third_order
from .functions import DEFAULT_WINDOW, Interval, SmoothFunction, make_polynomial
from .iteration import (
    ConvergedToRoot,
    DerivativeBlowup,
    Escaped,
    MapKind,
    MapVariant,
    MaxIter,
    PeriodicSuspect,
    iterate,
    map_callable,
)
from .sweep import SweepSpec, run_sweep, write_csv
from .symbolic import (
    CertificationError,
    Itinerary,
    RefinementError,
    alternating_pattern,
    divergence_witness,
    enumerate_prime_seeds,
    find_periodic,
)

__all__ = ["main", "parse_function_spec", "canonical_spec", "FunctionSpecError", "RunConfig"]

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_PARSE = 2
EXIT_HYPOTHESES = 3
EXIT_CERTIFICATION = 4


class FunctionSpecError(ValueError):
    """Malformed function spec; ``column`` is the 1-based offending position."""

    def __init__(self, message: str, column: int):
        super().__init__(f"{message} (column {column})")
        self.column = column


def fmt(x: float) -> str:
    return "%.17g" % float(x)


def parse_function_spec(s: str, window: Interval | None = None) -> SmoothFunction:
    """Parse ``poly:c0,c1,...,cn`` into a polynomial function."""
    prefix = "poly:"
    if not s.startswith(prefix):
        raise FunctionSpecError(f"unknown function spec {s!r}, expected 'poly:...'", 1)
    body = s[len(prefix):]
    if body == "":
        raise FunctionSpecError("empty coefficient list", len(prefix) + 1)
    coeffs = []
    col = len(prefix) + 1
    for tok in body.split(","):
        if tok.strip() == "":
            raise FunctionSpecError("empty coefficient literal", col)
        try:
            coeffs.append(float(tok))
        except ValueError:
            raise FunctionSpecError(f"bad coefficient literal {tok!r}", col) from None
        col += len(tok) + 1
    if coeffs[-1] == 0.0:
        raise FunctionSpecError("zero leading coefficient", col - len(tok) - 1)
    return make_polynomial(coeffs, window)


def canonical_spec(F: SmoothFunction) -> str:
    if F.kind != "polynomial" or F.coeffs is None:
        raise ValueError("only polynomial functions have a canonical spec string")
    return "poly:" + ",".join(fmt(c) for c in F.coeffs)


def _parse_window(s: str) -> Interval:
    try:
        lo, hi = s.split(":")
        return Interval(float(lo), float(hi))
    except (ValueError, TypeError):
        raise FunctionSpecError(f"bad window {s!r}, expected 'lo:hi'", 1) from None


# --- deterministic JSON with 17-significant-digit floats --------------------

def _json_scalar(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if f != f:
            return '"nan"'
        if f == float("inf"):
            return '"inf"'
        if f == float("-inf"):
            return '"-inf"'
        return fmt(f)
    if isinstance(v, str):
        return json.dumps(v)
    raise TypeError(f"unsupported JSON value {v!r}")


def to_json(obj) -> str:
    if isinstance(obj, dict):
        items = ",".join(f"{json.dumps(str(k))}:{to_json(v)}" for k, v in sorted(obj.items()))
        return "{" + items + "}"
    if isinstance(obj, (list, tuple)):
        return "[" + ",".join(to_json(v) for v in obj) + "]"
    return _json_scalar(obj)


def _classification_doc(c) -> dict:
    if isinstance(c, ConvergedToRoot):
        return {"kind": "converged", "root": c.root}
    if isinstance(c, PeriodicSuspect):
        return {"kind": "periodic", "period": c.period}
    if isinstance(c, Escaped):
        return {"kind": "escaped"}
    if isinstance(c, DerivativeBlowup):
        return {"kind": "blowup", "at": c.at}
    if isinstance(c, MaxIter):
        return {"kind": "maxiter"}
    raise TypeError(f"unknown classification {c!r}")


def _bands_doc(b: BandSystem) -> dict:
    return {
        "roots": list(b.roots),
        "critical_points": list(b.crits),
        "epsilon": b.epsilon,
        "i1": [b.i1.lo, b.i1.hi],
        "i2": [b.i2.lo, b.i2.hi],
        "cover_target": [b.cover_target.lo, b.cover_target.hi],
        "certified": b.certified,
        "lambda": b.lam,
    }


# --- configuration -----------------------------------------------------------

@dataclass(frozen=True)
class RunConfig:
    """Shared run configuration resolved from flags and an optional config file."""

    spec: str
    window: Interval
    variant: MapVariant
    lam: float
    tol: float
    cert_tol: float
    seed: int
    threads: int
    json_out: bool
    out: str | None

    @property
    def kind(self) -> MapKind:
        return MapKind(self.variant, self.lam)


def _read_config_file(path: str) -> dict[str, str]:
    cfg: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise FunctionSpecError(f"bad config line {line!r}, expected key=value", 1)
            k, v = line.split("=", 1)
            cfg[k.strip()] = v.strip()
    return cfg


def _resolve_config(args: argparse.Namespace) -> RunConfig:
    cfg = _read_config_file(args.config) if getattr(args, "config", None) else {}

    def pick(flag: str, key: str, default, cast):
        v = getattr(args, flag, None)
        if v is not None:
            return v if cast is None else cast(v)
        if key in cfg:
            return cast(cfg[key]) if cast else cfg[key]
        return default

    spec = pick("f", "f", None, str)
    if spec is None:
        raise FunctionSpecError("no function spec given (use --f or a config file)", 1)
    window = pick("window", "window", Interval(*DEFAULT_WINDOW), _parse_window)
    variant = MapVariant(pick("map", "map", "m3", str))
    lam = pick("lam", "lambda", 1.0, float)
    tol = pick("tol", "tol", 1e-9, float)
    cert_tol = pick("cert_tol", "cert-tol", 1e-9, float)
    seed = pick("seed", "seed", 0, int)
    threads = pick("threads", "threads", None, int)
    if threads is None:
        env = os.environ.get("NEWTON_CHAOS_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    if tol <= 0 or cert_tol <= 0:
        raise FunctionSpecError("tolerances must be positive", 1)
    return RunConfig(
        spec=spec,
        window=window,
        variant=variant,
        lam=lam,
        tol=tol,
        cert_tol=cert_tol,
        seed=seed,
        threads=threads,
        json_out=bool(getattr(args, "json", False)),
        out=getattr(args, "out", None),
    )


def _emit(text: str, out_path: str | None) -> None:
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# --- subcommands --------------------------------------------------------------

def cmd_orbit(args) -> int:
    cfg = _resolve_config(args)
    F = parse_function_spec(cfg.spec, cfg.window)
    rec = iterate(F, cfg.kind, args.start, max_iter=args.max_iter,
                  escape_radius=args.escape, tol=cfg.tol)
    if cfg.json_out:
        doc = {
            "schema_version": SCHEMA_VERSION,
            "command": "orbit",
            "f": canonical_spec(F),
            "map": cfg.variant.value,
            "lambda": cfg.lam,
            "start": rec.start,
            "iterates": list(rec.iterates),
            "classification": _classification_doc(rec.classification),
        }
        _emit(to_json(doc) + "\n", cfg.out)
        return EXIT_OK
    buf = io.StringIO()
    buf.write("n,x,fx\n")
    for n, x in enumerate(rec.iterates):
        buf.write(f"{n},{fmt(x)},{fmt(float(F.eval_f(x)))}\n")
    buf.write(f"# classification: {to_json(_classification_doc(rec.classification))}\n")
    _emit(buf.getvalue(), cfg.out)
    return EXIT_OK


def cmd_classify(args) -> int:
    cfg = _resolve_config(args)
    F = parse_function_spec(cfg.spec, cfg.window)
    hyp = check_hypotheses(F)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "classify",
        "f": canonical_spec(F),
        "lambda": cfg.lam,
        "window": [cfg.window.lo, cfg.window.hi],
        "newton_class": {
            "nf2_ok": hyp.newton_class.nf2_ok,
            "nf3_ok": hyp.newton_class.nf3_ok,
            "witnesses": [{"condition": w[0], "x": w[1], "derivative": w[2]}
                          for w in hyp.newton_class.witnesses],
        },
        "roots": list(hyp.roots),
        "critical_points": list(hyp.critical_points),
        "hypotheses": {
            "newton_class": hyp.newton_class_ok,
            "opposite_infinite_limits": hyp.opposite_limits_ok,
            "at_least_four_roots": hyp.enough_roots,
        },
    }

    def finish(code: int, verdict: str, bands: BandSystem | None) -> int:
        doc["verdict"] = verdict
        doc["exit_code"] = code
        if bands is not None:
            doc["bands"] = _bands_doc(bands)
        if cfg.json_out:
            _emit(to_json(doc) + "\n", cfg.out)
        else:
            lines = [
                f"function: {doc['f']}",
                f"window: [{fmt(cfg.window.lo)}, {fmt(cfg.window.hi)}]",
                f"newton class: {'OK' if hyp.newton_class_ok else 'VIOLATED'}"
                + "".join(f"\n  witness {w[0]} at x={fmt(w[1])} (derivative {fmt(w[2])})"
                          for w in hyp.newton_class.witnesses),
                f"roots ({len(hyp.roots)}): " + ", ".join(fmt(r) for r in hyp.roots),
                f"critical points ({len(hyp.critical_points)}): "
                + ", ".join(fmt(c) for c in hyp.critical_points),
                "hypotheses: (i) %s (ii) %s (iii) %s" % tuple(
                    "OK" if v else "FAIL"
                    for v in (hyp.newton_class_ok, hyp.opposite_limits_ok, hyp.enough_roots)),
            ]
            if bands is not None:
                lines.append(
                    f"bands: certified={bands.certified} eps={fmt(bands.epsilon)} "
                    f"I1={bands.i1} I2={bands.i2}")
            lines.append(verdict)
            _emit("\n".join(lines) + "\n", cfg.out)
        return code

    if not hyp.ok:
        return finish(EXIT_HYPOTHESES, "hypotheses failed: " + "; ".join(hyp.failures), None)
    bands = build_bands(F, lam=cfg.lam)
    if not bands.certified:
        return finish(EXIT_CERTIFICATION, "band covering not certified", bands)
    return finish(EXIT_OK, "chaotic regime certified", bands)


def cmd_bands(args) -> int:
    cfg = _resolve_config(args)
    F = parse_function_spec(cfg.spec, cfg.window)
    try:
        bands = build_bands(F, lam=cfg.lam)
    except HypothesesError as e:
        msg = f"hypotheses failed: {e}"
        _emit((to_json({"schema_version": SCHEMA_VERSION, "command": "bands", "error": msg})
               if cfg.json_out else msg) + "\n", cfg.out)
        return EXIT_HYPOTHESES
    doc = {"schema_version": SCHEMA_VERSION, "command": "bands",
           "f": canonical_spec(F), **_bands_doc(bands)}
    if cfg.json_out:
        _emit(to_json(doc) + "\n", cfg.out)
    else:
        edge = limits_at_band_edges(F, bands.crits[0], bands.crits[1], lam=cfg.lam)
        text = [
            f"function: {doc['f']}  lambda={fmt(cfg.lam)}",
            f"roots: " + ", ".join(fmt(r) for r in bands.roots),
            f"critical points: " + ", ".join(fmt(c) for c in bands.crits),
            f"epsilon: {fmt(bands.epsilon)}  certified: {bands.certified}",
            f"I1: {bands.i1}  I2: {bands.i2}  target: {bands.cover_target}",
            f"edge divergence signs (band 1): left={edge.sign_left} right={edge.sign_right}"
            f" conclusive={edge.conclusive}",
            "---",
            to_json({"roots": list(bands.roots)}),
            to_json({"critical_points": list(bands.crits)}),
            to_json({"epsilon": bands.epsilon, "certified": bands.certified}),
        ]
        _emit("\n".join(text) + "\n", cfg.out)
    return EXIT_OK if bands.certified else EXIT_CERTIFICATION


def _certified_bands(F, cfg):
    bands = build_bands(F, lam=cfg.lam)
    if not bands.certified:
        raise CertificationError("band covering not certified; cannot refine itineraries")
    return bands


def cmd_periodic(args) -> int:
    cfg = _resolve_config(args)
    F = parse_function_spec(cfg.spec, cfg.window)
    try:
        bands = _certified_bands(F, cfg)
    except HypothesesError as e:
        sys.stderr.write(f"hypotheses failed: {e}\n")
        return EXIT_HYPOTHESES
    except CertificationError as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_CERTIFICATION
    g = map_callable(F, cfg.kind)
    if args.itinerary:
        seeds = [Itinerary.periodic(int(t) for t in args.itinerary.split(","))]
        if len(seeds[0].symbols) != args.period:
            sys.stderr.write(f"--itinerary length {len(seeds[0].symbols)} "
                             f"does not match --period {args.period}\n")
            return EXIT_FAILURE
    else:
        seeds = enumerate_prime_seeds(2, args.period)
    certs, failures = [], []
    for seed in seeds:
        try:
            certs.append(find_periodic(g, bands, seed, cfg.cert_tol))
        except (RefinementError, CertificationError) as e:
            failures.append({"itinerary": list(seed.symbols), "error": str(e)})
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "periodic",
        "f": canonical_spec(F),
        "lambda": cfg.lam,
        "period": args.period,
        "certificates": [
            {"point": c.point, "period": c.period, "residual": c.residual,
             "prime": c.prime, "bands": list(c.visited_bands), "orbit": list(c.orbit)}
            for c in certs
        ],
        "failures": failures,
    }
    if cfg.json_out:
        _emit(to_json(doc) + "\n", cfg.out)
    else:
        lines = ["point                     period  residual      prime  bands"]
        for c in certs:
            lines.append(f"{fmt(c.point):<25} {c.period:<7} {c.residual:<13.3e} "
                         f"{str(c.prime):<6} {','.join(map(str, c.visited_bands))}")
        for fdoc in failures:
            lines.append(f"failed: itinerary {fdoc['itinerary']}: {fdoc['error']}")
        _emit("\n".join(lines) + "\n", cfg.out)
    return EXIT_OK if certs and not failures else EXIT_FAILURE


def cmd_witness(args) -> int:
    cfg = _resolve_config(args)
    F = parse_function_spec(cfg.spec, cfg.window)
    try:
        bands = _certified_bands(F, cfg)
    except HypothesesError as e:
        sys.stderr.write(f"hypotheses failed: {e}\n")
        return EXIT_HYPOTHESES
    except CertificationError as e:
        sys.stderr.write(f"{e}\n")
        return EXIT_CERTIFICATION
    g = map_callable(F, cfg.kind)
    if args.pattern == "alt":
        pattern = alternating_pattern(1, 2)
    elif args.pattern == "alt21":
        pattern = alternating_pattern(2, 1)
    else:
        pattern = [int(t) for t in args.pattern.split(",")]
    w = divergence_witness(g, bands, args.depth, pattern, cfg.cert_tol)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "witness",
        "f": canonical_spec(F),
        "lambda": cfg.lam,
        "depth": args.depth,
        "point": w.point,
        "verified_prefix": w.verified_prefix,
        "symbols": list(w.symbols),
    }
    if cfg.json_out:
        _emit(to_json(doc) + "\n", cfg.out)
    else:
        _emit(f"witness point: {fmt(w.point)}\n"
              f"itinerary: {','.join(map(str, w.symbols))}\n"
              f"verified prefix: {w.verified_prefix} of {args.depth}\n", cfg.out)
    return EXIT_OK


def cmd_verify_scaling(args) -> int:
    cfg = _resolve_config(args)
    F = parse_function_spec(cfg.spec, cfg.window)
    try:
        a_str, b_str = args.affine.split(",")
        T = AffineMap(float(a_str), float(b_str))
    except (ValueError, TypeError):
        sys.stderr.write(f"bad affine map {args.affine!r}, expected 'a,b'\n")
        return EXIT_PARSE
    rng = np.random.default_rng(cfg.seed)
    samples = scaling_samples(F, T, args.samples, rng)
    rep_n = verify_scaling_newton(F, T, samples, cfg.lam, args.tol_scaling)
    rep_m = verify_scaling_third_order(F, T, samples, cfg.lam, args.tol_scaling)
    doc = {
        "schema_version": SCHEMA_VERSION,
        "command": "verify-scaling",
        "f": canonical_spec(F),
        "affine": [T.a, T.b],
        "lambda": cfg.lam,
        "seed": cfg.seed,
        "samples": len(samples),
        "reports": [
            {"map": r.map_label, "max_rel_err": r.max_rel_err, "worst_x": r.worst_x,
             "checked": r.checked, "skipped": len(r.skipped), "passed": r.passed}
            for r in (rep_n, rep_m)
        ],
    }
    ok = rep_n.passed and rep_m.passed
    if cfg.json_out:
        _emit(to_json(doc) + "\n", cfg.out)
    else:
        lines = []
        for r in (rep_n, rep_m):
            lines.append(f"{r.map_label}: {'PASS' if r.passed else 'FAIL'} "
                         f"max_rel_err={r.max_rel_err:.3e} at x={fmt(r.worst_x or 0.0)} "
                         f"({r.checked} checked, {len(r.skipped)} skipped)")
        _emit("\n".join(lines) + "\n", cfg.out)
    return EXIT_OK if ok else EXIT_FAILURE


def cmd_sweep(args) -> int:
    cfg = _resolve_config(args)
    F = parse_function_spec(cfg.spec, cfg.window)
    try:
        lo, hi, steps = args.range.split(":")
        slo, shi, sn = args.seeds.split(":")
    except ValueError:
        sys.stderr.write("bad --range or --seeds, expected 'lo:hi:n'\n")
        return EXIT_PARSE
    seeds = tuple(float(v) for v in np.linspace(float(slo), float(shi), int(sn)))
    if args.vary == "lambda":
        vary, idx = "lambda", None
    elif args.vary.startswith("c") and args.vary[1:].isdigit():
        vary, idx = "coeff", int(args.vary[1:])
    else:
        sys.stderr.write(f"bad --vary {args.vary!r}, expected 'lambda' or 'c<k>'\n")
        return EXIT_PARSE
    spec = SweepSpec(base=F, vary=vary, lo=float(lo), hi=float(hi), steps=int(steps),
                     seeds=seeds, coeff_index=idx, burn_in=args.burn_in, tail=args.tail,
                     escape_radius=args.escape)
    rows = run_sweep(spec, cfg.kind, cfg.tol)
    buf = io.StringIO()
    write_csv(rows, spec.tail, buf)
    _emit(buf.getvalue(), cfg.out)
    return EXIT_OK


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--f", "-f", dest="f", help="function spec, e.g. poly:-1,0,1")
    p.add_argument("--window", help="search window as lo:hi (default -50:50)")
    p.add_argument("--map", choices=[v.value for v in MapVariant], help="iteration map (default m3)")
    p.add_argument("--lambda", dest="lam", type=float, help="damping parameter (default 1)")
    p.add_argument("--tol", type=float, help="root residual tolerance (default 1e-9)")
    p.add_argument("--cert-tol", dest="cert_tol", type=float, help="certification tolerance (default 1e-9)")
    p.add_argument("--seed", type=int, help="RNG seed (default 0)")
    p.add_argument("--threads", type=int, help="cap on internal parallelism")
    p.add_argument("--config", help="key=value config file merged under the flags")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.add_argument("--out", help="write output to this path instead of stdout")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="newton-chaos",
                                 description="dynamics of the two-stage third-order Newton iteration")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("orbit", help="iterate one seed and print the orbit as CSV")
    _add_common(p)
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--max-iter", dest="max_iter", type=int, default=500)
    p.add_argument("--escape", type=float, default=1e8)
    p.set_defaults(fn=cmd_orbit)

    p = sub.add_parser("classify", help="hypotheses check plus band certification")
    _add_common(p)
    p.set_defaults(fn=cmd_classify)

    p = sub.add_parser("bands", help="build and certify the covering bands")
    _add_common(p)
    p.set_defaults(fn=cmd_bands)

    p = sub.add_parser("periodic", help="certify periodic points of a prime period")
    _add_common(p)
    p.add_argument("--period", type=int, required=True)
    p.add_argument("--itinerary", help="explicit seed like 1,2,2 (default: enumerate)")
    p.set_defaults(fn=cmd_periodic)

    p = sub.add_parser("witness", help="divergence witness for a band itinerary")
    _add_common(p)
    p.add_argument("--pattern", default="alt", help="'alt', 'alt21', or explicit 1,2,1,...")
    p.add_argument("--depth", type=int, default=10)
    p.set_defaults(fn=cmd_witness)

    p = sub.add_parser("verify-scaling", help="affine conjugation identity on random samples")
    _add_common(p)
    p.add_argument("--affine", required=True, help="affine map as a,b")
    p.add_argument("--samples", type=int, default=200)
    p.add_argument("--tol-scaling", dest="tol_scaling", type=float, default=1e-9)
    p.set_defaults(fn=cmd_verify_scaling)

    p = sub.add_parser("sweep", help="parameter sweep emitting tail iterates as CSV")
    _add_common(p)
    p.add_argument("--vary", required=True, help="'lambda' or 'c<k>' (coefficient index)")
    p.add_argument("--range", required=True, help="parameter grid lo:hi:steps")
    p.add_argument("--seeds", required=True, help="seed grid lo:hi:n")
    p.add_argument("--burn-in", dest="burn_in", type=int, default=200)
    p.add_argument("--tail", type=int, default=100)
    p.add_argument("--escape", type=float, default=1e8)
    p.set_defaults(fn=cmd_sweep)

    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.fn(args)
    except FunctionSpecError as e:
        sys.stderr.write(f"parse error: {e}\n")
        return EXIT_PARSE
    except HypothesesError as e:
        sys.stderr.write(f"hypotheses failed: {e}\n")
        return EXIT_HYPOTHESES
    except (RefinementError, CertificationError) as e:
        sys.stderr.write(f"certification failed: {e}\n")
        return EXIT_CERTIFICATION
    except ValueError as e:
        sys.stderr.write(f"error: {e}\n")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
