"""Cardinality-bounded cone membership, tameness and the two Sigma bounds.

Every answer carries a certificate that can be checked with nothing but
exact rational arithmetic: a reproducing positive combination, or one
separating functional per candidate support.

Both bounds use closed cones, so a query on a cone boundary counts as a
member; verdicts at boundary points are conservative.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations, product
from math import comb
from typing import Sequence

from .lp import farkas_certificate, feasible_nonneg
from .rational import Vector, add, dot, is_zero, nullspace, primitive, scale, vec
from .root_data import (FormSet, PlaceSpec, RootSystem, restricted_systems)

SUPPORT_CAP = 10 ** 6

CERTIFIED_NOT_FM = "CERTIFIED_NOT_Fm"
CERTIFIED_FM = "CERTIFIED_Fm"
INDETERMINATE = "INDETERMINATE"


class ConeError(ValueError):
    pass


@dataclass(frozen=True)
class ConeCertificate:
    member: bool
    combination: tuple = ()  # (index, coefficient) pairs, coefficients > 0
    separating_functional: Vector | None = None  # single global separator
    separators: tuple = ()  # (support, functional) per candidate support
    degenerate: bool = False

    def to_json(self) -> dict:
        from .rational import fmt, fmt_vec
        out: dict = {"member": self.member, "degenerate": self.degenerate}
        if self.combination:
            out["combination"] = [[_jsonable(i), fmt(c)] for i, c in self.combination]
        if self.separating_functional is not None:
            out["separator"] = fmt_vec(self.separating_functional)
        if self.separators:
            out["separators"] = [
                {"support": [_jsonable(i) for i in s], "functional": fmt_vec(y)}
                for s, y in self.separators
            ]
        return out


def _jsonable(i):
    return list(i) if isinstance(i, tuple) else i


@dataclass(frozen=True)
class BoundVerdict:
    verdict: str
    witness: ConeCertificate
    lower: ConeCertificate | None = None
    upper: ConeCertificate | None = None
    notes: tuple = field(default=())

    def to_json(self) -> dict:
        out = {"verdict": self.verdict, "witness": self.witness.to_json()}
        if self.lower is not None:
            out["lower"] = self.lower.to_json()
        if self.upper is not None:
            out["upper"] = self.upper.to_json()
        return out


def _forms(form_set) -> list[Vector]:
    if isinstance(form_set, FormSet):
        return list(form_set.forms)
    return [vec(f) for f in form_set]


def _supports(n: int, m: int):
    k = min(m, n)
    count = comb(n, k)
    if count > SUPPORT_CAP:
        raise ConeError(f"{n} choose {k} = {count} supports exceeds the cap of {SUPPORT_CAP}")
    return combinations(range(n), k)


def _cone_solve(gens: Sequence[Vector], query: Vector):
    """(mu, None) with sum mu_j gens_j = query, mu >= 0; else (None, separator)."""
    dim = len(query)
    A = [[g[i] for g in gens] for i in range(dim)]
    mu = feasible_nonneg(A, query)
    if mu is not None:
        return mu, None
    return None, farkas_certificate(A, query)


def _combination(indices, mu) -> tuple:
    return tuple((i, c) for i, c in zip(indices, mu) if c != 0)


# ---------------------------------------------------------------------------
# tameness and Conv_m

def _vanishing(gens: Sequence[Vector]):
    """mu >= 0, sum mu = 1, sum mu_j gens_j = 0; else a y positive on every gen."""
    dim = len(gens[0])
    A = [[g[i] for g in gens] for i in range(dim)] + [[Fraction(1)] * len(gens)]
    b = [Fraction(0)] * dim + [Fraction(1)]
    mu = feasible_nonneg(A, b)
    if mu is not None:
        return mu, None
    y = farkas_certificate(A, b)
    # y[:dim] . g_j + y[dim] >= 0 with y[dim] = -1, so y[:dim] . g_j >= 1
    return None, tuple(y[:dim])


def is_m_tame(form_set, m: int) -> tuple[bool, ConeCertificate]:
    """True iff no positive combination of at most m forms vanishes."""
    if not isinstance(m, int) or m < 1:
        raise ConeError(f"m must be a positive integer, got {m!r}")
    forms = _forms(form_set)
    if not forms:
        return True, ConeCertificate(member=False)
    for i, f in enumerate(forms):
        if is_zero(f):
            return False, ConeCertificate(member=True, combination=((i, Fraction(1)),), degenerate=True)
    mu, y = _vanishing(forms)
    if mu is None:
        return True, ConeCertificate(member=False, separating_functional=y)
    separators = []
    for support in _supports(len(forms), m):
        mu, y = _vanishing([forms[i] for i in support])
        if mu is not None:
            return False, ConeCertificate(member=True, combination=_combination(support, mu))
        separators.append((support, y))
    return True, ConeCertificate(member=False, separators=tuple(separators))


def conv_m_member(form_set, m: int, query) -> ConeCertificate:
    """Is ``query`` a positive combination of at most m forms of the set?"""
    query = vec(query)
    if is_zero(query):
        raise ConeError("the zero form is excluded from cone queries")
    if not isinstance(m, int) or m < 0:
        raise ConeError(f"m must be a non-negative integer, got {m!r}")
    forms = _forms(form_set)
    for f in forms:
        if len(f) != len(query):
            raise ConeError(f"query has length {len(query)}, forms have length {len(f)}")
    if m == 0 or not forms:
        return ConeCertificate(member=False)
    mu, y = _cone_solve(forms, query)
    if mu is None:
        return ConeCertificate(member=False, separating_functional=y)
    if m >= len(forms):
        return ConeCertificate(member=True, combination=_combination(range(len(forms)), mu))
    separators = []
    for support in _supports(len(forms), m):
        mu, y = _cone_solve([forms[i] for i in support], query)
        if mu is not None:
            return ConeCertificate(member=True, combination=_combination(support, mu))
        separators.append((support, y))
    return ConeCertificate(member=False, separators=tuple(separators))


def conv_mS_member(base_forms_by_place: Sequence[Sequence], m: int, query) -> ConeCertificate:
    """Positive combination of base roots at <= m distinct places, one root each.

    Combination entries are ((place index, root index), coefficient).
    """
    query = vec(query)
    if is_zero(query):
        raise ConeError("the zero form is excluded from cone queries")
    places = [[vec(f) for f in fs] for fs in base_forms_by_place]
    if not isinstance(m, int) or m < 0:
        raise ConeError(f"m must be a non-negative integer, got {m!r}")
    if m > len(places):
        raise ConeError(f"m = {m} exceeds the number of places {len(places)}")
    if m == 0:
        return ConeCertificate(member=False)
    everything = [(p, r) for p, fs in enumerate(places) for r in range(len(fs))]
    mu, y = _cone_solve([places[p][r] for p, r in everything], query)
    if mu is None:
        return ConeCertificate(member=False, separating_functional=y)
    k = min(m, len(places))
    selections = []
    for subset in combinations(range(len(places)), k):
        for roots in product(*(range(len(places[p])) for p in subset)):
            selections.append(tuple(zip(subset, roots)))
    if len(selections) > SUPPORT_CAP:
        raise ConeError(f"{len(selections)} place selections exceed the cap of {SUPPORT_CAP}")
    separators = []
    for sel in selections:
        mu, y = _cone_solve([places[p][r] for p, r in sel], query)
        if mu is not None:
            return ConeCertificate(member=True, combination=_combination(sel, mu))
        separators.append((sel, y))
    return ConeCertificate(member=False, separators=tuple(separators))


def check_certificate(cert: ConeCertificate, generators: dict, query) -> bool:
    """Re-verify a membership certificate against ``generators[index]``."""
    query = vec(query)
    if cert.member:
        total = tuple(Fraction(0) for _ in query)
        for idx, c in cert.combination:
            if c <= 0:
                return False
            total = add(total, scale(c, generators[idx]))
        return total == query and bool(cert.combination)
    seps = []
    if cert.separating_functional is not None:
        seps.append((tuple(generators), cert.separating_functional))
    seps.extend(cert.separators)
    if not seps:
        return False
    for support, y in seps:
        if dot(y, query) >= 0:
            return False
        if any(dot(y, generators[i]) < 0 for i in support):
            return False
    return True


# ---------------------------------------------------------------------------
# Sigma bounds

def _systems(root_system: RootSystem, places: Sequence[PlaceSpec]):
    return restricted_systems(root_system, places)


def sigma_bound_classify(root_system: RootSystem, places: Sequence[PlaceSpec], m: int, query) -> BoundVerdict:
    """Three-valued placement of a character against the lower and upper cones."""
    places = tuple(places)
    if not isinstance(m, int) or m < 1:
        raise ConeError(f"m must be >= 1, got {m!r}")
    if m >= len(places):
        raise ConeError(f"the bounds hold only for m < |S| = {len(places)}; got m = {m}")
    sys = _systems(root_system, places)
    query = vec(query)
    if len(query) != sys.kernel.dim:
        raise ConeError(f"query must have {sys.kernel.dim} coordinates on H, got {len(query)}")
    lower = conv_mS_member(sys.base_by_place(), m, query)
    if lower.member:
        return BoundVerdict(CERTIFIED_NOT_FM, lower, lower=lower)
    upper = conv_m_member(sys.negative, m, query)
    if not upper.member:
        return BoundVerdict(CERTIFIED_FM, upper, lower=lower, upper=upper)
    return BoundVerdict(INDETERMINATE, upper, lower=lower, upper=upper)


def restrict_to_kernel(form_set, lam) -> list[Vector]:
    """Literal restriction of each form to ker(lam), in a fixed basis of ker(lam)."""
    lam = vec(lam)
    basis = nullspace([lam], len(lam))
    return [tuple(dot(f, b) for b in basis) for f in _forms(form_set)]


def restriction_tame(form_set, lam, m: int) -> bool:
    """Criterion for m-tameness on ker(lam): neither lam nor -lam lies in Conv_m."""
    lam = vec(lam)
    if is_zero(lam):
        raise ConeError("lambda must be non-zero")
    return (not conv_m_member(form_set, m, lam).member
            and not conv_m_member(form_set, m, scale(-1, lam)).member)


def _meets_nontrivially(gen_sets, constraints: Sequence[Vector]):
    """Search gen_sets for mu >= 0 with v = sum mu g nonzero and c.v = 0 for c in constraints."""
    for key, gens in gen_sets:
        dim = len(gens[0])
        cons_rows = [[dot(c, g) for g in gens] + [Fraction(0)] for c in constraints]
        for j in range(dim):
            for sign in (1, -1):
                row = [sign * g[j] for g in gens] + [Fraction(-1)]
                sol = feasible_nonneg(cons_rows + [row], [Fraction(0)] * len(cons_rows) + [Fraction(1)])
                if sol is not None:
                    mu = sol[:-1]
                    v = tuple(Fraction(0) for _ in range(dim))
                    for c, g in zip(mu, gens):
                        v = add(v, scale(c, g))
                    return key, mu, v
    return None


def normal_subgroup_certificate(root_system: RootSystem, places: Sequence[PlaceSpec],
                                torus_direction_basis: Sequence, m: int) -> BoundVerdict:
    """Decide F_m for the kernel of a torus direction via the annihilator of its span.

    ``torus_direction_basis`` lists ambient vectors (length |S|*n) spanning the
    direction inside H.
    """
    places = tuple(places)
    if not isinstance(m, int) or m < 1 or m >= len(places):
        raise ConeError(f"need 1 <= m < |S| = {len(places)}, got m = {m}")
    sys = _systems(root_system, places)
    coords = []
    for u in torus_direction_basis:
        u = vec(u)
        if len(u) != sys.kernel.ambient_dim:
            raise ConeError(f"direction vector has length {len(u)}, expected {sys.kernel.ambient_dim}")
        if not sys.kernel.contains(u):
            raise ConeError(f"direction {list(map(str, u))} does not lie in the kernel H")
        coords.append(sys.kernel.coordinates(u))
    annihilator = nullspace(coords, sys.kernel.dim) if coords else nullspace([], sys.kernel.dim)
    notes = (f"annihilator dimension {len(annihilator)}",)
    if not annihilator:
        cert = ConeCertificate(member=False)
        return BoundVerdict(CERTIFIED_FM, cert, notes=notes + ("annihilator is {0}",))

    base = sys.base_by_place()
    k = min(m, len(places))
    lower_sets = []
    for subset in combinations(range(len(places)), k):
        for roots in product(*(range(len(base[p])) for p in subset)):
            sel = tuple(zip(subset, roots))
            lower_sets.append((sel, [base[p][r] for p, r in sel]))
    hit = _meets_nontrivially(lower_sets, coords)
    if hit is not None:
        sel, mu, v = hit
        cert = ConeCertificate(member=True, combination=_combination(sel, mu))
        return BoundVerdict(CERTIFIED_NOT_FM, cert, lower=cert, notes=notes + (f"lower-cone point {_show(v)}",))

    neg = list(sys.negative.forms)
    upper_sets = [(s, [neg[i] for i in s]) for s in _supports(len(neg), m)]
    hit = _meets_nontrivially(upper_sets, coords)
    if hit is None:
        cert = ConeCertificate(member=False)
        return BoundVerdict(CERTIFIED_FM, cert, notes=notes + ("upper cone meets the annihilator only at 0",))
    sel, mu, v = hit
    cert = ConeCertificate(member=True, combination=_combination(sel, mu))
    return BoundVerdict(INDETERMINATE, cert, upper=cert, notes=notes + (f"upper-cone point {_show(v)}",))


def _show(v) -> str:
    return "(" + ", ".join(str(x) for x in primitive(v)) + ")"


# ---------------------------------------------------------------------------
# torus directions and the finiteness lookup

def sl_diagonal_pairings(exponents: Sequence[int]) -> tuple[int, ...]:
    """Pairings of the cocharacter diag(t^e_1, ..., t^e_n) with the simple roots of A_{n-1}."""
    return tuple(exponents[i] - exponents[i + 1] for i in range(len(exponents) - 1))


def cocharacter_direction(pairings: Sequence[int], unit_valuations: Sequence[int],
                          places: Sequence[PlaceSpec]) -> Vector:
    """Translation vector in the product apartment of a cocharacter evaluated at an S-unit."""
    if len(unit_valuations) != len(places):
        raise ConeError("one valuation per place required")
    out = []
    for v, p in zip(unit_valuations, places):
        out.extend(Fraction(p.degree * v * a) for a in pairings)
    return tuple(out)


def complete_combination(sys) -> tuple[list, Vector]:
    """The first base root at every place, each with coefficient 1, and its restricted sum."""
    base = sys.base_by_place()
    picks = [(p, 0) for p in range(len(base))]
    total = tuple(Fraction(0) for _ in range(sys.kernel.dim))
    for p, r in picks:
        total = add(total, base[p][r])
    return picks, total


def finiteness_report(num_places: int) -> dict:
    if not isinstance(num_places, int) or num_places < 1:
        raise ConeError(f"|S| must be a positive integer, got {num_places!r}")
    return {"f_type": num_places - 1, "not_fp": num_places}
