"""Command line entry point: ``sarith <subcommand> [options]``."""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from fractions import Fraction
from pathlib import Path

import jsonschema

from . import __version__, report
from .complex import (build_ladder, build_slab, essential_triviality, flow_witness,
                      witness_class, witness_sphere)
from .cones import (INDETERMINATE, cocharacter_direction, conv_m_member, conv_mS_member, finiteness_report,
                    is_m_tame, normal_subgroup_certificate, sigma_bound_classify, sl_diagonal_pairings)
from .moufang import (AutomorphismWord, DirectedEnumeration, coverage_window, directed_enumeration_of_range,
                      extend_directed_enumeration, seed_enumeration, verify_covering, verify_directedness)
from .rational import fmt_vec, frac, parse_vec
from .root_data import PlaceSpec, build_root_system, restricted_systems
from .scenarios import Outcome, compare_certificates, emit, load_config, run_scenario, strip_timing
from .schema import validate
from .trees import TreeParams, build_truncation, standard_vertex

EXIT_OK, EXIT_INVALID, EXIT_INDETERMINATE, EXIT_INTERNAL = 0, 2, 3, 4
OUT_ENV = "SARITH_OUT"


# ---------------------------------------------------------------------------
# argument helpers

def _rational(text: str) -> Fraction:
    try:
        return frac(text)
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not an exact rational: {text!r} ({exc})") from None


def _vector(text: str) -> tuple:
    try:
        return parse_vec(text.split(","))
    except (ValueError, ZeroDivisionError) as exc:
        raise argparse.ArgumentTypeError(f"not a rational vector: {text!r} ({exc})") from None


def _forms(text: str) -> list[tuple]:
    return [_vector(part) for part in text.split(";") if part.strip()]


def _interval(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) == 1:
        return (_rational(parts[0]),) * 2
    if len(parts) != 2:
        raise argparse.ArgumentTypeError(f"interval must be 'lo,hi' or a single level, got {text!r}")
    lo, hi = map(_rational, parts)
    if lo > hi:
        raise argparse.ArgumentTypeError(f"empty interval {text!r}")
    return lo, hi


def _u64(text: str) -> int:
    n = int(text)
    if not 0 <= n < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must fit in an unsigned 64-bit integer")
    return n


def _positive(text: str) -> int:
    n = int(text)
    if n < 1:
        raise argparse.ArgumentTypeError("expected a positive integer")
    return n


def _places(args) -> list[PlaceSpec]:
    degrees = args.degrees or [1] * args.places
    if len(degrees) != args.places:
        raise ValueError(f"--degrees needs {args.places} entries, got {len(degrees)}")
    return [PlaceSpec(f"p{i + 1}", d, args.field_size) for i, d in enumerate(degrees)]


def _trees(args):
    a, b = args.window
    if a > b:
        raise ValueError(f"window [{a}, {b}] is empty")
    weights = args.weights or [1] * args.factors
    if len(weights) != args.factors:
        raise ValueError(f"--weights needs {args.factors} entries")
    return [build_truncation(TreeParams(args.q, w, f"T{i + 1}"), (a, b), standard_vertex(a))
            for i, w in enumerate(weights)]


def _digest(doc) -> str:
    return hashlib.sha256(json.dumps(doc, sort_keys=True, default=str).encode()).hexdigest()


def _out_dir(args) -> Path:
    return Path(args.out or os.environ.get(OUT_ENV) or "sarith-out")


# ---------------------------------------------------------------------------
# subcommands; each returns (name, Outcome, digest inputs)

def _system_forms(args):
    rs = build_root_system(args.type, args.rank)
    return restricted_systems(rs, _places(args))


def cmd_tame(args):
    forms = args.forms if args.forms else list(_system_forms(args).negative.forms)
    ok, cert = is_m_tame(forms, args.m)
    doc = {"query": [], "verdict": ok, "witness": cert.to_json(),
           "inputs_digest": _digest({"forms": [fmt_vec(f) for f in forms], "m": args.m})}
    validate(doc, "cone_certificate")
    return Outcome({"tame": ok}, {"forms": len(forms), "m": args.m}, {"answer": doc})


def cmd_conv(args):
    if args.lower:
        sys_ = _system_forms(args)
        cert = conv_mS_member(sys_.base_by_place(), args.m, args.query)
        inputs = {"base_by_place": [[fmt_vec(f) for f in fs] for fs in sys_.base_by_place()]}
    else:
        forms = args.forms if args.forms else list(_system_forms(args).negative.forms)
        cert = conv_m_member(forms, args.m, args.query)
        inputs = {"forms": [fmt_vec(f) for f in forms]}
    doc = {"query": fmt_vec(args.query), "verdict": cert.member, "witness": cert.to_json(),
           "inputs_digest": _digest({**inputs, "m": args.m, "query": fmt_vec(args.query)})}
    validate(doc, "cone_certificate")
    return Outcome({"member": cert.member}, {"m": args.m}, {"answer": doc})


def _bound_doc(v, query, inputs) -> dict:
    doc = {"query": fmt_vec(query), **v.to_json(), "notes": list(v.notes), "inputs_digest": _digest(inputs)}
    validate(doc, "cone_certificate")
    return doc


def cmd_sigma(args):
    rs = build_root_system(args.type, args.rank)
    places = _places(args)
    v = sigma_bound_classify(rs, places, args.m, args.query)
    doc = _bound_doc(v, args.query, {"type": args.type, "rank": args.rank, "places": [p.degree for p in places],
                                     "m": args.m, "query": fmt_vec(args.query)})
    return Outcome({"verdict": v.verdict}, {"m": args.m}, {"answer": doc}, indeterminate=v.verdict == INDETERMINATE)


def cmd_normal(args):
    rs = build_root_system(args.type, args.rank)
    places = _places(args)
    if args.direction:
        basis = args.direction
    elif args.exponents is not None:
        if args.valuations is None or len(args.valuations) != len(places):
            raise ValueError("--exponents needs --valuations with one entry per place")
        basis = [cocharacter_direction(sl_diagonal_pairings(args.exponents), args.valuations, places)]
    else:
        basis = []
    v = normal_subgroup_certificate(rs, places, basis, args.m)
    doc = _bound_doc(v, [], {"type": args.type, "rank": args.rank, "places": [p.degree for p in places],
                             "m": args.m, "basis": [fmt_vec(u) for u in basis]})
    return Outcome({"verdict": v.verdict}, {"m": args.m, "directions": [fmt_vec(u) for u in basis]},
                   {"answer": doc}, indeterminate=v.verdict == INDETERMINATE)


def cmd_finiteness(args):
    rep = finiteness_report(args.places)
    return Outcome(dict(rep), {"places": args.places})


def cmd_homology(args):
    slab = build_slab(_trees(args), args.interval, args.slack)
    summ = slab.summary().to_json()
    validate(summ, "homology")
    header, rows = report.betti_rows({"slab": summ})
    return Outcome({"boundary_squared_zero": slab.check_boundary_squared(),
                    "vanishing_through": len(slab.trees) - 2,
                    "vanishes": slab.summary().vanishes_through(len(slab.trees) - 2)},
                   {"slab": summ}, tables={"betti": (header, rows)},
                   figures=[lambda d: report.betti_figure({"slab": summ}, d / "homology_betti.png")])


def cmd_witness(args):
    trees = _trees(args)
    tau = tuple(t.vertices[0] for t in trees)
    w = witness_sphere(trees, tau, args.radius)
    verdicts = {"level": str(w.level)}
    measurements = {}
    if args.interval is not None:
        slab = build_slab(trees, args.interval, args.slack)
        free, tors = witness_class(w, slab)
        verdicts["nonzero_class"] = bool(any(free) or any(tors))
        measurements["class"] = {"free": free, "torsion": tors}
    if args.radius >= 2 and all(t.params.weight == 1 for t in trees):
        verdicts["flow_matches_smaller"] = flow_witness(w, trees) == witness_sphere(trees, tau, args.radius - 1).chain
    return Outcome(verdicts, measurements, {"sphere": w.dump()})


def cmd_ladder(args):
    system, _ = build_ladder(_trees(args), args.intervals, args.degree, args.slack)
    rep = essential_triviality(system)
    return Outcome(rep.to_json(), {"ranks": system.ranks, "maps": system.maps,
                                   "stages": [s.to_json() for s in system.stages]})


def cmd_kernel_slab(args):
    from .scenarios import run_kernel_slab
    return run_kernel_slab(build_root_system(args.type, args.rank), _places(args), args.width, args.bottom,
                           args.slack)


def cmd_enumerate(args):
    if args.radius is not None:
        enum = directed_enumeration_of_range(args.radius, args.q)
    else:
        enum = seed_enumeration(args.q)
        for _ in range(args.steps):
            enum = extend_directed_enumeration(enum)
    doc = enum.to_json()
    validate(doc, "enumeration")
    return Outcome({"directed": enum.audit.passed}, {"words": len(enum), "range": [enum.r, enum.s]},
                   {"enumeration": doc})


def cmd_audit(args):
    doc = json.loads(Path(args.enumeration).read_text())
    if "witnesses" in doc:  # a certificate written by `enumerate`
        doc = doc["witnesses"]["enumeration"]
    validate(doc, "enumeration")
    r, s = doc["range"]
    words = [AutomorphismWord.from_pairs(map(tuple, p), r, s, doc["q"]) for p in doc["words"]]
    audit = verify_directedness(DirectedEnumeration(r, s, doc["q"], words))
    return Outcome({"directed": audit.passed, "first_failure": audit.first_failure},
                   {"words": len(words)}, {"audit": audit.to_json()})


def cmd_coverage(args):
    enum = directed_enumeration_of_range(args.radius, args.q)
    window_radius = args.window_radius if args.window_radius is not None else args.radius
    rep = verify_covering(enum, coverage_window(window_radius, args.q))
    total = len(coverage_window(window_radius, args.q).edges)
    return Outcome({"covered": rep.covered, "monotone": rep.monotone},
                   {"words": len(enum), "window_chambers": total, "minimal_prefix": rep.minimal_prefix,
                    "uncovered": len(rep.uncovered)}, {"coverage": rep.to_json()},
                   figures=[lambda d: report.coverage_figure({f"r={args.radius}": (rep.covered_counts, total)},
                                                             d / "coverage.png")])


# ---------------------------------------------------------------------------

def _add_common(p):
    p.add_argument("--out", help=f"output directory (default ${OUT_ENV} or ./sarith-out)")
    p.add_argument("--seed", type=_u64, default=0)
    p.add_argument("--jobs", type=_positive, default=1, help="recorded; stages run serially")
    p.add_argument("--format", choices=("json", "csv"), default="json")


def _add_system(p, rank_default=2):
    p.add_argument("--type", default="A")
    p.add_argument("--rank", type=int, default=rank_default)
    p.add_argument("--places", type=int, default=2, help="|S|")
    p.add_argument("--degrees", type=lambda t: [int(x) for x in t.split(",")])
    p.add_argument("--field-size", type=int, default=2)


def _add_trees(p):
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--factors", type=int, default=2)
    p.add_argument("--window", type=int, nargs=2, default=[0, 5], metavar=("BOTTOM", "TOP"))
    p.add_argument("--weights", type=lambda t: [_rational(x) for x in t.split(",")])
    p.add_argument("--slack", type=_rational, default=Fraction(2))


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sarith", description=__doc__)
    ap.add_argument("--version", action="version", version=f"sarith {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, help_):
        p = sub.add_parser(name, help=help_)
        p.set_defaults(func=func)
        _add_common(p)
        return p

    p = add("tame", cmd_tame, "is a form set m-tame")
    _add_system(p)
    p.add_argument("--forms", type=_forms, help="explicit forms 'a,b;c,d' instead of the negative system")
    p.add_argument("--m", type=int, required=True)

    p = add("conv", cmd_conv, "cardinality-bounded cone membership")
    _add_system(p)
    p.add_argument("--forms", type=_forms)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--query", type=_vector, required=True)
    p.add_argument("--lower", action="store_true", help="use base roots at distinct places")

    p = add("sigma-classify", cmd_sigma, "place a character against both cone bounds")
    _add_system(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--query", type=_vector, required=True)

    p = add("normal-subgroup", cmd_normal, "finiteness verdict for the kernel of a torus direction")
    _add_system(p)
    p.add_argument("--m", type=int, required=True)
    p.add_argument("--direction", type=_vector, action="append", help="ambient vector in H (repeatable)")
    p.add_argument("--exponents", type=lambda t: [int(x) for x in t.split(",")],
                   help="diagonal exponents of an SL_n cocharacter")
    p.add_argument("--valuations", type=lambda t: [int(x) for x in t.split(",")],
                   help="valuations of the S-unit, one per place")

    p = add("finiteness", cmd_finiteness, "finiteness length of the Borel group")
    p.add_argument("--places", type=_positive, required=True)

    p = add("homology", cmd_homology, "reduced homology of a sliced tree product")
    _add_trees(p)
    p.add_argument("--interval", type=_interval, required=True)

    p = add("witness", cmd_witness, "witness sphere and its class")
    _add_trees(p)
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--interval", type=_interval)

    p = add("ladder", cmd_ladder, "essential triviality of nested slabs")
    _add_trees(p)
    p.add_argument("--intervals", type=_interval, nargs="+", required=True)
    p.add_argument("--degree", type=int, default=1)

    p = add("kernel-slab", cmd_kernel_slab, "connectivity of a kernel slab (rank one)")
    _add_system(p, rank_default=1)
    p.add_argument("--width", type=_rational, default=Fraction(1, 2))
    p.add_argument("--bottom", type=int, default=-1)
    p.add_argument("--slack", type=_rational, default=Fraction(2))

    p = add("enumerate", cmd_enumerate, "directed enumeration of root-group products")
    p.add_argument("--q", type=int, default=2)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--steps", type=int, default=2, help="extensions from the identity seed")
    g.add_argument("--radius", type=int, help="extend U_0 until the range is [-r, r]")

    p = add("audit-directed", cmd_audit, "coconvexity audit of an enumeration file")
    p.add_argument("enumeration", help="JSON written by `enumerate`")

    p = add("coverage", cmd_coverage, "apartment coverage of a chamber window")
    p.add_argument("--q", type=int, default=2)
    p.add_argument("--radius", type=int, default=2)
    p.add_argument("--window-radius", type=int)

    p = sub.add_parser("run", help="run a declarative scenario")
    p.set_defaults(func=None)
    _add_common(p)
    p.add_argument("--config", required=True)
    p.add_argument("--no-figures", action="store_true")

    p = sub.add_parser("compare", help="diff two certificates")
    p.set_defaults(func=None)
    p.add_argument("a")
    p.add_argument("b")
    p.add_argument("--out")
    return ap


def _dispatch(args) -> int:
    if args.command == "compare":
        a, b = (json.loads(Path(x).read_text()) for x in (args.a, args.b))
        diff = compare_certificates(a, b)
        text = json.dumps(diff, indent=2, sort_keys=True)
        if args.out:
            Path(args.out).parent.mkdir(parents=True, exist_ok=True)
            Path(args.out).write_text(text + "\n")
        print(text)
        return EXIT_OK
    if args.command == "run":
        cfg = load_config(args.config)
        out = Path(args.out or os.environ.get(OUT_ENV) or cfg.output.get("dir", "sarith-out"))
        seed = args.seed if args.seed else cfg.seed
        cfg.seed = seed
        cert, outcome = run_scenario(cfg, out, args.format, args.jobs, figures=not args.no_figures)
    else:
        started = time.perf_counter()
        outcome = args.func(args)
        digest = _digest({k: v for k, v in vars(args).items() if k not in ("func", "out", "jobs", "format")})
        cert = emit(args.command, outcome, _out_dir(args), args.format, digest, args.seed, args.jobs, started) \
            if args.command in ("kernel-slab", "finiteness") else \
            _emit_plain(args.command, outcome, _out_dir(args), args.format, digest, args.seed, args.jobs, started)
    print(json.dumps(strip_timing(cert), indent=2, sort_keys=True))
    return EXIT_INDETERMINATE if outcome.indeterminate else EXIT_OK


def _emit_plain(name, outcome, out_dir, fmt, digest, seed, jobs, started) -> dict:
    """Like scenario certificates, but for single operations (not validated as scenarios)."""
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = name.replace("-", "_")
    artifacts = [f"{stem}.json"]
    if fmt == "csv":
        for tname, (header, rows) in outcome.tables.items():
            report.write_csv(out_dir / f"{stem}_{tname}.csv", header, rows)
            artifacts.append(f"{stem}_{tname}.csv")
    for fig in outcome.figures:
        artifacts.append(fig(out_dir).name)
    cert = {"command": name, "tool_version": __version__, "config_digest": digest, "seed": seed, "jobs": jobs,
            "verdicts": outcome.verdicts, "measurements": outcome.measurements, "witnesses": outcome.witnesses,
            "artifacts": sorted(artifacts), "wall_clock": {"seconds": round(time.perf_counter() - started, 3)}}
    (out_dir / f"{stem}.json").write_text(json.dumps(cert, indent=2, sort_keys=True, default=str) + "\n")
    return cert


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code or 0)
    try:
        return _dispatch(args)
    except (AssertionError, ArithmeticError, jsonschema.ValidationError) as exc:
        print(f"internal invariant violated: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except (ValueError, KeyError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
