"""Root groups of the horocyclic tree along the standard apartment.

The root group attached to the cut level i acts by translation x -> x + a t^i
on F_q((t)): it adds a to the digit at position i of every vertex whose level
exceeds i and fixes everything at level <= i.  The half apartment it fixes is
the down ray of chambers [n, n+1] with n + 1 <= i.  Chambers of the standard
apartment are indexed by the level of their lower vertex.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations
from typing import Iterable, Sequence

from .trees import HVertex, TreeParams, TreeTruncation, build_truncation, standard_vertex

NEG_INF = -math.inf
POS_INF = math.inf


class MoufangError(ValueError):
    pass


# ---------------------------------------------------------------------------
# residue alphabet

def _prime_power(q: int) -> tuple[int, int]:
    p = next(d for d in range(2, q + 1) if q % d == 0)
    k, n = 0, q
    while n % p == 0:
        n //= p
        k += 1
    if n != 1:
        raise MoufangError(f"residue size {q} is not a prime power")
    return p, k


def digit_add(a: int, b: int, q: int) -> int:
    """Addition in the additive group of F_q on the labels 0..q-1 (base-p digit vectors)."""
    p, k = _prime_power(q)
    out, place = 0, 1
    for _ in range(k):
        out += ((a % p + b % p) % p) * place
        a //= p
        b //= p
        place *= p
    return out


def digit_neg(a: int, q: int) -> int:
    p, k = _prime_power(q)
    out, place = 0, 1
    for _ in range(k):
        out += ((-(a % p)) % p) * place
        a //= p
        place *= p
    return out


# ---------------------------------------------------------------------------
# chamber sets on the standard apartment

@dataclass(frozen=True)
class ChamberSet:
    """Finite union of integer intervals [a, b]; bounds may be infinite."""
    intervals: tuple = ()

    @staticmethod
    def of(intervals: Iterable[tuple]) -> ChamberSet:
        ivs = sorted((a, b) for a, b in intervals if a <= b)
        merged: list = []
        for a, b in ivs:
            if merged and a <= merged[-1][1] + 1:
                merged[-1] = (merged[-1][0], max(merged[-1][1], b))
            else:
                merged.append((a, b))
        return ChamberSet(tuple(merged))

    @staticmethod
    def everything() -> ChamberSet:
        return ChamberSet(((NEG_INF, POS_INF),))

    @staticmethod
    def down_ray(top) -> ChamberSet:
        return ChamberSet(((NEG_INF, top),))

    @staticmethod
    def from_indices(indices: Iterable[int]) -> ChamberSet:
        return ChamberSet.of((n, n) for n in indices)

    def __contains__(self, n) -> bool:
        return any(a <= n <= b for a, b in self.intervals)

    @property
    def is_empty(self) -> bool:
        return not self.intervals

    @property
    def is_convex(self) -> bool:
        return len(self.intervals) <= 1

    def union(self, other: ChamberSet) -> ChamberSet:
        return ChamberSet.of(self.intervals + other.intervals)

    def intersect(self, other: ChamberSet) -> ChamberSet:
        out = []
        for a, b in self.intervals:
            for c, d in other.intervals:
                lo, hi = max(a, c), min(b, d)
                if lo <= hi:
                    out.append((lo, hi))
        return ChamberSet.of(out)

    def complement(self) -> ChamberSet:
        out, cur = [], NEG_INF
        for a, b in self.intervals:
            if a > cur:
                out.append((cur, a - 1))
            cur = b + 1
        if cur != POS_INF:
            out.append((cur, POS_INF))
        return ChamberSet.of(out)

    def restrict(self, lo: int, hi: int) -> ChamberSet:
        return self.intersect(ChamberSet(((lo, hi),)))

    def indices(self, lo: int, hi: int) -> list[int]:
        return [n for n in range(lo, hi + 1) if n in self]

    @property
    def is_coconvex(self) -> bool:
        return self.complement().is_convex

    def to_json(self) -> list:
        def enc(x):
            return None if x in (NEG_INF, POS_INF) else int(x)
        return [[enc(a), enc(b)] for a, b in self.intervals]


# ---------------------------------------------------------------------------
# half apartments, root groups, words

@dataclass(frozen=True)
class HalfApartment:
    side: str
    cut_level: int

    def __post_init__(self):
        if self.side not in ("up", "down"):
            raise MoufangError(f"side must be 'up' or 'down', got {self.side!r}")

    def chambers(self) -> ChamberSet:
        if self.side == "down":
            return ChamberSet.down_ray(self.cut_level - 1)
        return ChamberSet(((self.cut_level, POS_INF),))

    @property
    def contains_descending_end(self) -> bool:
        return self.side == "down"


def beta(i: int) -> HalfApartment:
    """Half apartment containing chamber i-1 but not chamber i, on the side of the end."""
    return HalfApartment("down", i)


@dataclass(frozen=True)
class RootGroupElement:
    half_apartment: HalfApartment
    parameter: int
    q: int

    def act(self, v: HVertex) -> HVertex:
        i = self.half_apartment.cut_level
        if self.parameter == 0 or v.level <= i:
            return v
        digits = list(v.digits) + [0] * max(0, v.level - i - len(v.digits))
        k = v.level - 1 - i
        digits[k] = digit_add(digits[k], self.parameter, self.q)
        return HVertex(v.level, tuple(digits))


def root_group(half_apartment: HalfApartment, q: int) -> list[RootGroupElement]:
    if half_apartment.side != "down":
        raise MoufangError(
            "root groups are modelled for half apartments containing the descending end; "
            "the opposite side does not fix that end in the horocyclic model")
    _prime_power(q)
    return [RootGroupElement(half_apartment, a, q) for a in range(q)]


@dataclass(frozen=True)
class AutomorphismWord:
    """u_r u_{r+1} ... u_s with u_i in the root group of beta_i; stored as parameters."""
    r: int
    s: int
    params: tuple
    q: int

    def __post_init__(self):
        if len(self.params) != max(0, self.s - self.r + 1):
            raise MoufangError("one parameter per index in the range is required")
        if any(not 0 <= a < self.q for a in self.params):
            raise MoufangError(f"parameters must lie in 0..{self.q - 1}")

    @staticmethod
    def identity(r: int, s: int, q: int) -> AutomorphismWord:
        return AutomorphismWord(r, s, (0,) * max(0, s - r + 1), q)

    @staticmethod
    def from_pairs(pairs: Iterable[tuple[int, int]], r: int, s: int, q: int) -> AutomorphismWord:
        params = [0] * max(0, s - r + 1)
        for i, a in pairs:
            if not r <= i <= s:
                raise MoufangError(f"index {i} outside the range [{r}, {s}]")
            params[i - r] = a
        return AutomorphismWord(r, s, tuple(params), q)

    def param(self, i: int) -> int:
        return self.params[i - self.r] if self.r <= i <= self.s else 0

    def factors(self) -> list[RootGroupElement]:
        return [RootGroupElement(beta(i), a, self.q) for i, a in zip(range(self.r, self.s + 1), self.params) if a]

    def pairs(self) -> list[list[int]]:
        return [[i, a] for i, a in zip(range(self.r, self.s + 1), self.params)]

    def widen(self, r: int, s: int) -> AutomorphismWord:
        if self.r <= self.s and (r > self.r or s < self.s):
            raise MoufangError("widening cannot shrink the range")
        return AutomorphismWord(r, s, tuple(self.param(i) for i in range(r, s + 1)), self.q)

    def act(self, v: HVertex) -> HVertex:
        for f in self.factors():
            v = f.act(v)
        return v

    def compose(self, other: AutomorphismWord) -> AutomorphismWord:
        """self after other (root groups commute, so this is digitwise addition)."""
        r, s = min(self.r, other.r), max(self.s, other.s)
        return AutomorphismWord(r, s, tuple(digit_add(self.param(i), other.param(i), self.q)
                                            for i in range(r, s + 1)), self.q)

    def inverse(self) -> AutomorphismWord:
        return AutomorphismWord(self.r, self.s, tuple(digit_neg(a, self.q) for a in self.params), self.q)

    @property
    def is_identity(self) -> bool:
        return not any(self.params)


def all_words(r: int, s: int, q: int) -> list[AutomorphismWord]:
    """U^{(r,s)} via unique factorization, in lexicographic parameter order."""
    out = [AutomorphismWord.identity(r, s, q)]
    for i in range(r, s + 1):
        nxt = []
        for w in out:
            for a in range(q):
                p = list(w.params)
                p[i - r] = a
                nxt.append(AutomorphismWord(r, s, tuple(p), q))
        out = nxt
    return sorted(set(out), key=lambda w: w.params)


# ---------------------------------------------------------------------------
# fixed sets

def fixed_chamber_set(word: AutomorphismWord) -> ChamberSet:
    """Intersection of beta_i over the nontrivial factors."""
    out = ChamberSet.everything()
    for f in word.factors():
        out = out.intersect(f.half_apartment.chambers())
    return out


def fixed_chambers_by_action(word: AutomorphismWord, lo: int, hi: int) -> ChamberSet:
    """Chambers [n, n+1] of the standard apartment, lo <= n <= hi, fixed pointwise by the word."""
    fixed = []
    for n in range(lo, hi + 1):
        a, b = standard_vertex(n), standard_vertex(n + 1)
        if word.act(a) == a and word.act(b) == b:
            fixed.append(n)
    return ChamberSet.from_indices(fixed)


def image_intersection(word: AutomorphismWord, lo: int, hi: int) -> ChamberSet:
    """Chambers of the standard apartment lying in its image under the word, within [lo, hi]."""
    image_top = set()
    for n in range(lo, hi + 1):
        e = (word.act(standard_vertex(n)), word.act(standard_vertex(n + 1)))
        if e[0].on_standard_apartment and e[1].on_standard_apartment:
            image_top.add(e[0].level)
    return ChamberSet.from_indices(image_top)


# ---------------------------------------------------------------------------
# directed enumerations

@dataclass
class PrefixAudit:
    index: int
    union: ChamberSet
    coconvex: bool
    ends_ok: bool

    def to_json(self) -> dict:
        return {"index": self.index, "union": self.union.to_json(),
                "complement": self.union.complement().to_json(),
                "coconvex": self.coconvex, "contains_end": self.ends_ok}


@dataclass
class AuditReport:
    prefixes: list

    @property
    def passed(self) -> bool:
        return all(p.coconvex and p.ends_ok for p in self.prefixes)

    @property
    def first_failure(self) -> int | None:
        return next((p.index for p in self.prefixes if not (p.coconvex and p.ends_ok)), None)

    def to_json(self) -> dict:
        return {"passed": self.passed, "first_failure": self.first_failure,
                "prefixes": [p.to_json() for p in self.prefixes]}


@dataclass
class DirectedEnumeration:
    r: int
    s: int
    q: int
    words: list
    audit: AuditReport | None = None

    def __len__(self) -> int:
        return len(self.words)

    def to_json(self) -> dict:
        return {"range": [self.r, self.s], "q": self.q,
                "words": [w.pairs() for w in self.words],
                "audit": None if self.audit is None else self.audit.to_json()}


def audit_unions(unions: Sequence[ChamberSet], ends_ok: Sequence[bool] | None = None) -> AuditReport:
    """Coconvexity verdict for a precomputed sequence of prefix unions."""
    ends_ok = ends_ok or [True] * len(unions)
    return AuditReport([PrefixAudit(j + 1, u, u.is_coconvex, e) for j, (u, e) in enumerate(zip(unions, ends_ok))])


def verify_directedness(words: Sequence[AutomorphismWord] | DirectedEnumeration) -> AuditReport:
    """For each j >= 1, the union over i < j of the fixed sets of g_j^-1 g_i must be coconvex."""
    if isinstance(words, DirectedEnumeration):
        words = words.words
    words = list(words)
    if words:
        r = min(w.r for w in words if w.r <= w.s) if any(w.r <= w.s for w in words) else 0
        s = max(w.s for w in words if w.r <= w.s) if any(w.r <= w.s for w in words) else -1
        words = [w.widen(r, s) for w in words]
        if len(set(words)) != len(words):
            dup = next(j for j, w in enumerate(words) if w in words[:j])
            raise MoufangError(f"enumeration repeats the word at position {dup}")
    unions, ends = [], []
    for j in range(1, len(words)):
        # g_j^-1 g_i has a nontrivial factor exactly where the parameters differ,
        # so its fixed set is the down ray below the first differing index
        pj = words[j].params
        top = None
        for i in range(j):
            k = next(k for k, (a, b) in enumerate(zip(pj, words[i].params)) if a != b)
            if top is None or k > top:
                top = k
        u = fixed_chamber_set(AutomorphismWord.from_pairs([(r + top, 1)], r, s, words[j].q))
        unions.append(u)
        ends.append(beta(r + top).contains_descending_end)
    return audit_unions(unions, ends)


def seed_enumeration(q: int, at: int = 0) -> DirectedEnumeration:
    """The identity alone, over the empty range (at+1, at)."""
    w = AutomorphismWord.identity(at + 1, at, q)
    return DirectedEnumeration(at + 1, at, q, [w], verify_directedness([w]))


def enumerate_root_group(i: int, q: int) -> DirectedEnumeration:
    words = [AutomorphismWord(i, i, (a,), q) for a in range(q)]
    return DirectedEnumeration(i, i, q, words, verify_directedness(words))


def _block_extend(words: list, index: int, r: int, s: int, q: int) -> list:
    out = []
    for a in range(q):  # identity first
        u = AutomorphismWord.from_pairs([(index, a)], r, s, q)
        for w in words:
            out.append(u.compose(w.widen(r, s)))
    return out


def extend_directed_enumeration(enum: DirectedEnumeration) -> DirectedEnumeration:
    """Blocks over U_{s+1}, then over U_{r-1}; each block is a translate of the previous list."""
    report = enum.audit or verify_directedness(enum.words)
    if not report.passed:
        raise MoufangError(f"input enumeration fails directedness at prefix {report.first_failure}")
    if not enum.words or not enum.words[0].is_identity:
        raise MoufangError("enumeration must start with the identity")
    r, s, q = enum.r, enum.s, enum.q
    if r > s:  # empty range: the only word is the identity
        r, s = s + 1, s
    step1 = _block_extend(enum.words, s + 1, r, s + 1, q)
    step2 = _block_extend(step1, r - 1, r - 1, s + 1, q)
    out = DirectedEnumeration(r - 1, s + 1, q, step2, verify_directedness(step2))
    if not out.audit.passed:
        raise AssertionError(f"extension lost directedness at prefix {out.audit.first_failure}")
    return out


def counterexample_search(r: int, s: int, q: int, limit: int | None = None):
    """Look for an identity-first ordering of U^{(r,s)} that fails the audit; None if none exists."""
    words = all_words(r, s, q)
    ident, rest = words[0], words[1:]
    for count, perm in enumerate(permutations(rest)):
        if limit is not None and count >= limit:
            break
        seq = [ident, *perm]
        if not verify_directedness(seq).passed:
            return seq
    return None


# ---------------------------------------------------------------------------
# commutators

def commutator_trivial(u: RootGroupElement, v: RootGroupElement, window: TreeTruncation) -> bool:
    q = u.q
    ui = RootGroupElement(u.half_apartment, digit_neg(u.parameter, q), q)
    vi = RootGroupElement(v.half_apartment, digit_neg(v.parameter, q), q)
    for x in window.vertices:
        if u.act(v.act(ui.act(vi.act(x)))) != x:
            return False
    return True


# ---------------------------------------------------------------------------
# covering

def coverage_window(radius: int, q: int) -> TreeTruncation:
    """Descendants of the standard vertex at level -radius, up to level radius + 1."""
    return build_truncation(TreeParams(q), (-radius, radius + 1), standard_vertex(-radius))


def apartment_edges(word: AutomorphismWord, window: TreeTruncation) -> set[tuple[HVertex, HVertex]]:
    lo, hi = window.window
    out = set()
    for n in range(lo, hi):
        a, b = word.act(standard_vertex(n)), word.act(standard_vertex(n + 1))
        if a in window and b in window:
            out.add((a, b))
    return out


@dataclass
class CoverageReport:
    covered: bool
    uncovered: list
    minimal_prefix: int | None
    covered_counts: list

    @property
    def monotone(self) -> bool:
        return all(a <= b for a, b in zip(self.covered_counts, self.covered_counts[1:]))

    def to_json(self) -> dict:
        return {
            "covered": self.covered,
            "uncovered": [[a.encode(), b.encode()] for a, b in self.uncovered],
            "minimal_prefix": self.minimal_prefix,
            "covered_counts": self.covered_counts,
        }


def verify_covering(words: Sequence[AutomorphismWord] | DirectedEnumeration, window: TreeTruncation) -> CoverageReport:
    if isinstance(words, DirectedEnumeration):
        words = words.words
    targets = set(window.iter_edges())
    seen: set = set()
    counts = []
    minimal = None if targets else 0
    for j, w in enumerate(words):
        seen |= apartment_edges(w, window) & targets
        counts.append(len(seen))
        if minimal is None and len(seen) == len(targets):
            minimal = j + 1
    uncovered = sorted(targets - seen)
    return CoverageReport(not uncovered, uncovered, minimal, counts)


def directed_enumeration_of_range(radius: int, q: int) -> DirectedEnumeration:
    """Start from U_0 (identity first) and extend until the range is [-radius, radius]."""
    enum = enumerate_root_group(0, q)
    for _ in range(radius):
        enum = extend_directed_enumeration(enum)
    return enum


# ---------------------------------------------------------------------------
# sheets

def apartment_path(word: AutomorphismWord, window: TreeTruncation) -> list[HVertex]:
    lo, hi = window.window
    return [word.act(standard_vertex(n)) for n in range(lo, hi + 1)]


def v_line(apex: HVertex, window: TreeTruncation, digits: tuple[int, int] = (0, 1)) -> list[HVertex]:
    """Two ascending rays from apex that leave it through different upper neighbours."""
    top = window.window[1]
    rays = []
    for d in digits:
        ray = []
        v = apex
        first = True
        while v.level < top:
            v = HVertex(v.level + 1, ((d if first else 0),) + v.digits)
            first = False
            ray.append(v)
        rays.append(ray)
    return list(reversed(rays[1])) + [apex] + rays[0]


@dataclass
class SheetAudit:
    new_pieces: list  # per apartment: sorted edges
    upward: list  # per apartment: bool
    uncovered: list

    @property
    def passed(self) -> bool:
        return all(self.upward)

    @property
    def covers(self) -> bool:
        return not self.uncovered

    def to_json(self) -> dict:
        return {
            "passed": self.passed, "covers": self.covers,
            "pieces": [{"edges": [[a.encode(), b.encode()] for a, b in p], "upward_ray": ok}
                       for p, ok in zip(self.new_pieces, self.upward)],
            "uncovered": [[a.encode(), b.encode()] for a, b in self.uncovered],
        }


def _path_edges(path: Sequence[HVertex], window: TreeTruncation) -> set:
    out = set()
    for a, b in zip(path, path[1:]):
        lo, hi = (a, b) if a.level < b.level else (b, a)
        if hi.lower() != lo:
            raise MoufangError(f"{a.encode()} and {b.encode()} are not adjacent")
        if lo in window and hi in window:
            out.add((lo, hi))
    return out


def sheet_sequence_check(apartments: Sequence[Sequence[HVertex]], window: TreeTruncation) -> SheetAudit:
    """Each new piece must be {x in the current apartment : h(x) >= t}."""
    seen: set = set()
    pieces, ok = [], []
    for path in apartments:
        edges = _path_edges(path, window)
        new = edges - seen
        if new:
            t = min(a.level for a, _ in new)
            upper = {e for e in edges if e[0].level >= t}
            ok.append(new == upper)
        else:
            ok.append(True)
        pieces.append(sorted(new))
        seen |= edges
    uncovered = sorted(set(window.iter_edges()) - seen)
    return SheetAudit(pieces, ok, uncovered)
