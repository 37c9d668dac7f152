"""Declarative experiment configs, scenario pipelines and certificates."""
from __future__ import annotations

import hashlib
import json
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

from . import __version__
from . import report
from .complex import (build_slab, common_refinement, flow_witness, inclusion_induced_map,
                      is_zero_matrix, kernel_slab_trees, verify_witness_nontrivial, witness_class,
                      witness_sphere)
from .cones import (INDETERMINATE, cocharacter_direction, finiteness_report, normal_subgroup_certificate,
                    sigma_bound_classify, sl_diagonal_pairings)
from .moufang import coverage_window, directed_enumeration_of_range, verify_covering
from .rational import fmt_vec, frac, vec
from .root_data import PlaceSpec, build_root_system, restricted_systems
from .trees import TreeParams, build_truncation, standard_vertex

SCENARIOS = ("baumprodukt", "sigma", "moufang-cover", "kernel-slab", "finiteness")
TIMING_KEYS = ("wall_clock",)


class ConfigError(ValueError):
    pass


def _frac(x) -> Fraction:
    try:
        return frac(x)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise ConfigError(f"not an exact rational: {x!r} ({exc})") from None


@dataclass
class ExperimentConfig:
    scenario: str
    raw: dict
    seed: int = 0
    root_system: dict = field(default_factory=dict)
    places: list = field(default_factory=list)
    trees: dict = field(default_factory=dict)
    section: dict = field(default_factory=dict)
    output: dict = field(default_factory=dict)

    @classmethod
    def from_dict(cls, doc: dict) -> ExperimentConfig:
        if "scenario" not in doc:
            raise ConfigError("config lacks a 'scenario' key")
        name = doc["scenario"]
        if name not in SCENARIOS:
            raise ConfigError(f"unknown scenario {name!r}; expected one of {', '.join(SCENARIOS)}")
        seed = doc.get("seed", 0)
        if not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {seed!r}")
        cfg = cls(name, doc, seed, doc.get("root_system", {}), doc.get("places", []),
                  doc.get("trees", {}), doc.get(name.replace("-", "_"), {}), doc.get("output", {}))
        cfg.validate()
        return cfg

    def place_specs(self) -> list[PlaceSpec]:
        if not self.places:
            raise ConfigError("at least one [[places]] entry is required")
        out = []
        for i, p in enumerate(self.places):
            try:
                out.append(PlaceSpec(str(p.get("label", f"p{i + 1}")), int(p.get("degree", 1)),
                                     int(p.get("base_field_size", 2))))
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
        return out

    def root(self):
        try:
            return build_root_system(str(self.root_system.get("type", "A")), int(self.root_system.get("rank", 1)))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def validate(self) -> None:
        s = self.scenario
        if s in ("sigma", "kernel-slab", "finiteness"):
            self.place_specs()
        if s in ("sigma", "kernel-slab"):
            self.root()
        if s == "baumprodukt":
            t = self.trees
            win = t.get("window")
            if not (isinstance(win, list) and len(win) == 2 and all(isinstance(x, int) for x in win) and win[0] <= win[1]):
                raise ConfigError(f"trees.window must be [bottom, top] integers with bottom <= top, got {win!r}")
            if int(t.get("q", 2)) < 2:
                raise ConfigError("trees.q must be >= 2")
            if int(t.get("factors", 2)) < 1:
                raise ConfigError("trees.factors must be >= 1")
            for key in ("inner", "outer"):
                iv = self.section.get(key)
                if not (isinstance(iv, list) and len(iv) == 2):
                    raise ConfigError(f"baumprodukt.{key} must be a two-element interval")
                a, b = map(_frac, iv)
                if a > b:
                    raise ConfigError(f"baumprodukt.{key} is empty")
            ia, ib = map(_frac, self.section["inner"])
            oa, ob = map(_frac, self.section["outer"])
            if ia < oa or ib > ob:
                raise ConfigError("baumprodukt.inner must lie inside baumprodukt.outer")
        if s == "sigma":
            m = self.section.get("m")
            if not isinstance(m, int) or not 1 <= m < len(self.places):
                raise ConfigError(f"sigma.m must satisfy 1 <= m < |S| = {len(self.places)}, got {m!r}")
        if s == "moufang-cover":
            q = self.section.get("q", 2)
            radii = self.section.get("radii", [1, 2])
            if not isinstance(q, int) or q < 2:
                raise ConfigError("moufang_cover.q must be an integer >= 2")
            if not radii or any(not isinstance(r, int) or r < 0 for r in radii):
                raise ConfigError("moufang_cover.radii must be non-negative integers")

    def digest(self) -> str:
        doc = {k: v for k, v in self.raw.items() if k != "output"}
        return hashlib.sha256(json.dumps(doc, sort_keys=True, default=str).encode()).hexdigest()


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        import tomllib
    except ModuleNotFoundError:  # Python < 3.11
        import tomli as tomllib
    with open(path, "rb") as fh:
        try:
            doc = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    return ExperimentConfig.from_dict(doc)


@dataclass
class Outcome:
    verdicts: dict
    measurements: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)  # name -> (header, rows)
    figures: list = field(default_factory=list)  # callables taking an output dir, returning a path
    indeterminate: bool = False


def certificate(name: str, outcome: Outcome, digest: str, seed: int, jobs: int, seconds: float,
                artifacts: list[str]) -> dict:
    return {
        "scenario": name,
        "tool_version": __version__,
        "config_digest": digest,
        "seed": seed,
        "jobs": jobs,
        "verdicts": outcome.verdicts,
        "measurements": outcome.measurements,
        "witnesses": outcome.witnesses,
        "artifacts": artifacts,
        "wall_clock": {"seconds": round(seconds, 3)},
    }


def emit(name: str, outcome: Outcome, out_dir: Path, fmt: str, digest: str, seed: int, jobs: int,
         started: float, figures: bool = True) -> dict:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = name.replace("-", "_")
    artifacts = [f"{stem}.json"]
    if fmt == "csv":
        for tname, (header, rows) in outcome.tables.items():
            report.write_csv(out_dir / f"{stem}_{tname}.csv", header, rows)
            artifacts.append(f"{stem}_{tname}.csv")
    if figures:
        for fig in outcome.figures:
            artifacts.append(fig(out_dir).name)
    cert = certificate(name, outcome, digest, seed, jobs, time.perf_counter() - started, sorted(artifacts))
    from .schema import validate
    validate(cert, "certificate")
    (out_dir / f"{stem}.json").write_text(json.dumps(cert, indent=2, sort_keys=True) + "\n")
    return cert


# ---------------------------------------------------------------------------
# pipelines

def _trees_from(t: dict):
    q = int(t.get("q", 2))
    m = int(t.get("factors", 2))
    a, b = t["window"]
    weights = t.get("weights", [1] * m)
    if len(weights) != m:
        raise ConfigError("trees.weights needs one entry per factor")
    return [build_truncation(TreeParams(q, _frac(w), f"T{i + 1}"), (a, b), standard_vertex(a))
            for i, w in enumerate(weights)]


def run_baumprodukt(trees, inner, outer, slack=2, radius: int | None = None) -> Outcome:
    m = len(trees)
    small, large = common_refinement(build_slab(trees, inner, slack), build_slab(trees, outer, slack))
    s_small, s_large = small.summary(), large.summary()
    deg = m - 1
    M = inclusion_induced_map(small, large, deg)
    verdicts: dict[str, Any] = {
        "vanishing_through": m - 2,
        "inner_vanishes": s_small.vanishes_through(m - 2),
        "outer_vanishes": s_large.vanishes_through(m - 2),
        "inclusion_nonzero": not is_zero_matrix(M),
        "boundary_squared_zero": small.check_boundary_squared() and large.check_boundary_squared(),
    }
    measurements = {
        "inner": {"interval": [str(small.lo), str(small.hi)], **s_small.to_json()},
        "outer": {"interval": [str(large.lo), str(large.hi)], **s_large.to_json()},
        "inclusion_map": {"degree": deg, "matrix": M},
    }
    witnesses: dict = {}
    if radius:
        tau = tuple(t.vertices[0] for t in trees)
        w = witness_sphere(trees, tau, radius)
        free, tors = witness_class(w, large)
        verdicts["witness_nonzero_in_outer"] = bool(any(free) or any(tors))
        if radius >= 2 and all(t.params.weight == 1 for t in trees):
            smaller = witness_sphere(trees, tau, radius - 1)
            verdicts["flow_matches_smaller_witness"] = flow_witness(w, trees) == smaller.chain
            if smaller.level == large.lo:
                verdicts["flowed_witness_nonzero_at_outer_bottom"] = verify_witness_nontrivial(
                    smaller, build_slab(trees, large.lo, slack))
        witnesses["sphere"] = {"radius": radius, "level": str(w.level), "cells": w.dump()}
        measurements["witness_class"] = {"free": free, "torsion": tors}
    named = {"inner": s_small.to_json(), "outer": s_large.to_json()}
    header, rows = report.betti_rows(named)
    return Outcome(verdicts, measurements, witnesses, {"betti": (header, rows)},
                   [lambda d: report.betti_figure(named, d / "baumprodukt_betti.png")])


def _scenario_baumprodukt(cfg: ExperimentConfig) -> Outcome:
    trees = _trees_from(cfg.trees)
    sec = cfg.section
    return run_baumprodukt(trees, tuple(map(_frac, sec["inner"])), tuple(map(_frac, sec["outer"])),
                           sec.get("slack", 2), sec.get("radius"))


def run_sigma(rs, places, m: int, queries: list, torus: dict | None = None) -> Outcome:
    sys = restricted_systems(rs, places)
    verdicts: dict = {"queries": {}}
    witnesses: dict = {"queries": {}}
    points = {}
    indeterminate = False
    for q in queries:
        qv = vec(q)
        v = sigma_bound_classify(rs, places, m, qv)
        key = ",".join(fmt_vec(qv))
        verdicts["queries"][key] = v.verdict
        witnesses["queries"][key] = v.to_json()
        points[key] = (qv, v.verdict)
        indeterminate |= v.verdict == INDETERMINATE
    if torus:
        pair = sl_diagonal_pairings(torus["exponents"]) if "exponents" in torus else tuple(torus["pairings"])
        u = cocharacter_direction(pair, torus["valuations"], places)
        v = normal_subgroup_certificate(rs, places, [u], m)
        verdicts["torus_direction"] = v.verdict
        witnesses["torus_direction"] = {"direction": fmt_vec(u), **v.to_json(), "notes": list(v.notes)}
        indeterminate |= v.verdict == INDETERMINATE
    measurements = {"kernel_dim": sys.kernel.dim,
                    "restricted_negative": [fmt_vec(f) for f in sys.negative.forms],
                    "restricted_base": [fmt_vec(f) for f in sys.base.forms],
                    "finiteness": finiteness_report(len(places))}
    rows = [[k, verdicts["queries"][k]] for k in verdicts["queries"]]
    figs = []
    if sys.kernel.dim in (1, 2):
        figs.append(lambda d: report.cone_figure(sys.negative.forms, points, d / "sigma_cone.png", sys.base.forms))
    return Outcome(verdicts, measurements, witnesses, {"verdicts": (["query", "verdict"], rows)}, figs, indeterminate)


def _scenario_sigma(cfg: ExperimentConfig) -> Outcome:
    sec = cfg.section
    return run_sigma(cfg.root(), cfg.place_specs(), sec["m"], sec.get("queries", []), sec.get("torus"))


def run_moufang_cover(q: int, radii: list[int]) -> Outcome:
    big = max(radii)
    window = coverage_window(big, q)
    total = len(window.edges)
    verdicts = {"directed": {}, "covers_own_window": {}, "uncovered_on_largest_window": {}}
    curves = {}
    rows = []
    for r in radii:
        enum = directed_enumeration_of_range(r, q)
        own = verify_covering(enum, coverage_window(r, q))
        rep = verify_covering(enum, window)
        verdicts["directed"][str(r)] = enum.audit.passed
        verdicts["covers_own_window"][str(r)] = own.covered
        verdicts["uncovered_on_largest_window"][str(r)] = len(rep.uncovered)
        curves[f"range [-{r}, {r}]"] = (rep.covered_counts, total)
        rows.append([r, len(enum), own.covered, own.minimal_prefix, len(rep.uncovered)])
    seq = [verdicts["uncovered_on_largest_window"][str(r)] for r in sorted(radii)]
    verdicts["shrinking_to_empty"] = all(a > b for a, b in zip(seq, seq[1:])) and seq[-1] == 0
    measurements = {"window_radius": big, "window_chambers": total}
    return Outcome(verdicts, measurements, {}, {"coverage": (["radius", "words", "covers_own", "minimal_prefix",
                                                             "uncovered_on_largest"], rows)},
                   [lambda d: report.coverage_figure(curves, d / "moufang_coverage.png")])


def _scenario_moufang(cfg: ExperimentConfig) -> Outcome:
    return run_moufang_cover(int(cfg.section.get("q", 2)), list(cfg.section.get("radii", [1, 2])))


def run_kernel_slab(rs, places, width=Fraction(1, 2), bottom: int = -1, slack=2) -> Outcome:
    if rs.rank != 1:
        raise ConfigError("kernel slabs are modelled for rank one only")
    trees = kernel_slab_trees(places, width, bottom, slack)
    slab = build_slab(trees, (-frac(width), frac(width)), slack)
    summ = slab.summary()
    verdicts = {"vanishing_through": len(places) - 2,
                "vanishes": summ.vanishes_through(len(places) - 2)}
    measurements = {"slab": summ.to_json(), "windows": [list(t.window) for t in trees]}
    named = {"kernel": summ.to_json()}
    header, rows = report.betti_rows(named)
    return Outcome(verdicts, measurements, {}, {"betti": (header, rows)},
                   [lambda d: report.betti_figure(named, d / "kernel_slab_betti.png")])


def _scenario_kernel(cfg: ExperimentConfig) -> Outcome:
    sec = cfg.section
    return run_kernel_slab(cfg.root(), cfg.place_specs(), _frac(sec.get("width", "1/2")),
                           int(sec.get("bottom", -1)), sec.get("slack", 2))


def run_finiteness(num_places: int) -> Outcome:
    rep = finiteness_report(num_places)
    return Outcome({"f_type": rep["f_type"], "not_fp": rep["not_fp"]}, {"places": num_places},
                   tables={"finiteness": (["places", "f_type", "not_fp"], [[num_places, rep["f_type"], rep["not_fp"]]])})


def _scenario_finiteness(cfg: ExperimentConfig) -> Outcome:
    return run_finiteness(len(cfg.place_specs()))


PIPELINES: dict[str, Callable[[ExperimentConfig], Outcome]] = {
    "baumprodukt": _scenario_baumprodukt,
    "sigma": _scenario_sigma,
    "moufang-cover": _scenario_moufang,
    "kernel-slab": _scenario_kernel,
    "finiteness": _scenario_finiteness,
}


def run_scenario(cfg: ExperimentConfig, out_dir: Path, fmt: str = "json", jobs: int = 1,
                 figures: bool = True) -> tuple[dict, Outcome]:
    started = time.perf_counter()
    outcome = PIPELINES[cfg.scenario](cfg)
    cert = emit(cfg.scenario, outcome, out_dir, fmt, cfg.digest(), cfg.seed, jobs, started, figures)
    return cert, outcome


# ---------------------------------------------------------------------------
# comparison

def _diff(a, b, path: str, out: list) -> None:
    if isinstance(a, dict) and isinstance(b, dict):
        for k in sorted(set(a) | set(b), key=str):
            _diff(a.get(k), b.get(k), f"{path}.{k}" if path else str(k), out)
    elif isinstance(a, list) and isinstance(b, list) and len(a) == len(b):
        for i, (x, y) in enumerate(zip(a, b)):
            _diff(x, y, f"{path}[{i}]", out)
    elif a != b:
        out.append({"path": path, "a": a, "b": b})


def compare_certificates(a: dict, b: dict) -> dict:
    if a.get("scenario") != b.get("scenario"):
        raise ValueError(f"cannot compare scenario {a.get('scenario')!r} with {b.get('scenario')!r}")
    report_doc: dict = {"scenario": a["scenario"],
                        "tool_versions": [a.get("tool_version"), b.get("tool_version")]}
    for section in ("verdicts", "measurements", "witnesses"):
        out: list = []
        _diff(a.get(section, {}), b.get(section, {}), "", out)
        report_doc[section] = out
    report_doc["same_config"] = a.get("config_digest") == b.get("config_digest")
    report_doc["equal_verdicts"] = not report_doc["verdicts"]
    report_doc["identical"] = not (report_doc["verdicts"] or report_doc["measurements"] or report_doc["witnesses"])
    return report_doc


def strip_timing(cert: dict) -> dict:
    return {k: v for k, v in cert.items() if k not in TIMING_KEYS}
