"""Height slabs in finite products of tree truncations.

A product cell is a tuple with one vertex or edge per factor.  The summed
height h is affine on every product cell, so cutting the relatively open
cell by the cut levels of a band gives relatively open convex pieces.  Each
piece is keyed by (product cell, part) where a part is ``("at", c)`` or
``("in", c1, c2)``; ``c2`` is ``None`` for a halfspace.  Keys do not depend
on the band, only on the cut levels, so slabs built with shared cuts have
shared keys and inclusions are identities on keys.

Orientations are explicit tangent bases in level coordinates.  Full pieces
use the product orientation by factor index; pieces inside a level set use
a basis B of the level tangent space with (grad h, B) positive.  Incidence
numbers come from the sign of det(outward vector, facet basis) in the
coordinates of the cell basis, which is the cellular boundary of the
underlying polyhedral complex.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct
from math import ceil
from typing import Callable, Iterable, Mapping, Sequence

from .homology import ChainHomology
from .rational import frac
from .trees import HVertex, TreeParams, TreeTruncation, build_truncation, standard_vertex

EMPTY = ("empty",)
DEFAULT_SLACK = 2
DEFAULT_CELL_CAP = 1_500_000

VERTEX, EDGE = 0, 1


class SlabError(ValueError):
    pass


class RetractError(ValueError):
    pass


def _det(rows: list[list[Fraction]]) -> Fraction:
    n = len(rows)
    if n == 0:
        return Fraction(1)
    if n == 1:
        return rows[0][0]
    if n == 2:
        return rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]
    m = [list(r) for r in rows]
    det = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if m[i][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            m[c], m[p] = m[p], m[c]
            det = -det
        det *= m[c][c]
        for i in range(c + 1, n):
            if m[i][c]:
                f = m[i][c] / m[c][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[c])]
    return det


def _sign(x) -> int:
    return (x > 0) - (x < 0)


# ---------------------------------------------------------------------------
# geometry of pieces

class PieceGeometry:
    """Nonemptiness, dimension, orientation and incidence of pieces over fixed trees."""

    def __init__(self, trees: Sequence[TreeTruncation]):
        self.trees = list(trees)
        self.m = len(self.trees)
        self.w = [t.params.weight for t in self.trees]
        self.o = [t.params.offset for t in self.trees]
        self._basis_cache: dict = {}
        self._point_cache: dict = {}

    # levels of the endpoints of a factor cell
    def levels(self, i: int, elem) -> tuple[int, int]:
        t = self.trees[i]
        if elem[0] == VERTEX:
            lv = t.vertices[elem[1]].level
            return lv, lv
        a, _ = t.edges[elem[1]]
        lv = t.vertices[a].level
        return lv, lv + 1

    def range_of(self, sigma) -> tuple[Fraction, Fraction, Fraction]:
        """(h at the lowest corner, h at the highest corner, total positive edge weight)."""
        lo = Fraction(0)
        W = Fraction(0)
        for i, elem in enumerate(sigma):
            a, b = self.levels(i, elem)
            lo += self.w[i] * a + self.o[i]
            if b != a:
                W += self.w[i]
        return lo, lo + W, W

    def edges_of(self, sigma) -> list[int]:
        return [i for i, e in enumerate(sigma) if e[0] == EDGE]

    def nonempty(self, sigma, part) -> bool:
        hmin, hmax, W = self.range_of(sigma)
        if W == 0:
            if part[0] == "at":
                return hmin == part[1]
            return part[1] < hmin and (part[2] is None or hmin < part[2])
        if part[0] == "at":
            return hmin < part[1] < hmax
        return hmin < (part[2] if part[2] is not None else hmax + 1) and hmax > part[1]

    def dim(self, sigma, part) -> int:
        k = len(self.edges_of(sigma))
        if part[0] == "at" and self.range_of(sigma)[2] > 0:
            return k - 1
        return k

    def point(self, key) -> tuple:
        if key in self._point_cache:
            return self._point_cache[key]
        sigma, part = key
        hmin, hmax, W = self.range_of(sigma)
        if part[0] == "at":
            t = part[1]
        elif W == 0:
            t = hmin
        else:
            lo = max(hmin, part[1])
            hi = hmax if part[2] is None else min(hmax, part[2])
            t = (lo + hi) / 2
        theta = (t - hmin) / W if W else Fraction(1, 2)
        pt = []
        for i, elem in enumerate(sigma):
            a, b = self.levels(i, elem)
            if a == b:
                pt.append(Fraction(a))
            elif self.w[i] == 0:
                pt.append(Fraction(a) + Fraction(1, 2))
            else:
                pt.append(a + theta)
        self._point_cache[key] = tuple(pt)
        return self._point_cache[key]

    def basis(self, key):
        """(explicit basis vectors, coordinate extractor [(column, sign)])."""
        if key in self._basis_cache:
            return self._basis_cache[key]
        sigma, part = key
        E = self.edges_of(sigma)
        W = sum((self.w[i] for i in E), Fraction(0))
        m = self.m
        if part[0] == "at" and W > 0:
            p = next(i for i in E if self.w[i] > 0)
            vecs, cols = [], []
            for j in E:
                if j == p:
                    continue
                v = [Fraction(0)] * m
                v[j] = Fraction(1)
                v[p] = -self.w[j] / self.w[p]
                vecs.append(v)
                cols.append(j)
            # orient so that (grad h, basis) is positive
            rows = [[self.w[i] for i in E]] + [[v[i] for i in E] for v in vecs]
            signs = [1] * len(vecs)
            if _det(rows) < 0:
                vecs[0] = [-x for x in vecs[0]]
                signs[0] = -1
            out = (vecs, list(zip(cols, signs)))
        else:
            vecs = []
            for j in E:
                v = [Fraction(0)] * m
                v[j] = Fraction(1)
                vecs.append(v)
            out = (vecs, [(j, 1) for j in E])
        self._basis_cache[key] = out
        return out

    def coords(self, key, x) -> list[Fraction]:
        _, ext = self.basis(key)
        return [s * x[c] for c, s in ext]

    def faces_of_cube(self, sigma) -> Iterable[tuple]:
        choices = []
        for i, elem in enumerate(sigma):
            if elem[0] == VERTEX:
                choices.append((elem,))
            else:
                a, b = self.trees[i].edges[elem[1]]
                choices.append((elem, (VERTEX, a), (VERTEX, b)))
        return iproduct(*choices)

    @staticmethod
    def closure_parts(part) -> list:
        if part[0] == "at":
            return [part]
        out = [part, ("at", part[1])]
        if part[2] is not None:
            out.append(("at", part[2]))
        return out

    def facets(self, key) -> list:
        sigma, part = key
        d = self.dim(sigma, part)
        out = []
        for tau in self.faces_of_cube(sigma):
            for pp in self.closure_parts(part):
                if (tau, pp) == key:
                    continue
                if self.nonempty(tau, pp) and self.dim(tau, pp) == d - 1:
                    out.append((tau, pp))
        return out

    def incidence(self, key, facet) -> int:
        vecs_f, _ = self.basis(facet)
        p_cell = self.point(key)
        p_face = self.point(facet)
        out = [a - b for a, b in zip(p_face, p_cell)]
        rows = [self.coords(key, out)] + [self.coords(key, v) for v in vecs_f]
        s = _sign(_det(rows))
        if s == 0:
            raise ArithmeticError(f"degenerate incidence between {key!r} and {facet!r}")
        return s

    def boundary(self, key) -> dict:
        sigma, part = key
        if self.dim(sigma, part) == 0:
            return {EMPTY: 1}
        return {f: self.incidence(key, f) for f in self.facets(key)}

    def corners(self, key) -> list[tuple]:
        """Cube corners (as level tuples with tree vertices) lying in the closed piece."""
        sigma, part = key
        out = []
        for tau in self.faces_of_cube(sigma):
            if all(e[0] == VERTEX for e in tau) and self.nonempty(tau, part if part[0] == "at" else ("in", part[1], part[2])):
                out.append(tau)
        return out


# ---------------------------------------------------------------------------
# slabs

def _band(interval) -> tuple[Fraction, Fraction | None]:
    if isinstance(interval, (tuple, list)):
        lo = frac(interval[0])
        hi = None if interval[1] is None else frac(interval[1])
    else:
        lo = hi = frac(interval)
    if hi is not None and hi < lo:
        raise SlabError(f"empty interval [{lo}, {hi}]")
    return lo, hi


def _parts(lo, hi, cuts) -> list:
    parts = [("at", c) for c in cuts]
    for a, b in zip(cuts, cuts[1:]):
        parts.append(("in", a, b))
    if hi is None:
        parts.append(("in", cuts[-1], None))
    return parts


@dataclass
class HomologySummary:
    betti: dict
    torsion: dict
    cells_per_dim: dict
    euler_from_cells: int
    euler_from_betti: int

    def vanishes_through(self, degree: int) -> bool:
        return all(self.betti.get(d, 0) == 0 and not self.torsion.get(d) for d in range(0, degree + 1))

    def to_json(self) -> dict:
        return {
            "cells_per_dim": {str(d): c for d, c in sorted(self.cells_per_dim.items())},
            "betti": {str(d): b for d, b in sorted(self.betti.items())},
            "torsion": {str(d): t for d, t in sorted(self.torsion.items())},
            "euler_from_cells": self.euler_from_cells,
            "euler_from_betti": self.euler_from_betti,
        }


class SlabComplex:
    def __init__(self, trees, lo, hi, cuts, slack, cells, boundary, geometry):
        self.trees = list(trees)
        self.lo, self.hi = lo, hi
        self.cuts = tuple(cuts)
        self.slack = slack
        self.cells = cells  # dim -> list of keys
        self.boundary = boundary  # key -> {facet: coef}
        self.geometry = geometry
        self.dim_of = {k: d for d, ks in cells.items() for k in ks}
        self._homology = None

    @property
    def m(self) -> int:
        return len(self.trees)

    @property
    def is_level_set(self) -> bool:
        return self.hi is not None and self.lo == self.hi

    @property
    def cells_per_dim(self) -> dict:
        return {d: len(ks) for d, ks in sorted(self.cells.items())}

    @property
    def size(self) -> int:
        return len(self.dim_of)

    def __contains__(self, key) -> bool:
        return key in self.dim_of

    def chain_cells(self) -> dict:
        out = {-1: [EMPTY]}
        out.update(self.cells)
        return out

    def homology(self) -> ChainHomology:
        if self._homology is None:
            bd = dict(self.boundary)
            bd[EMPTY] = {}
            self._homology = ChainHomology(self.chain_cells(), bd)
        return self._homology

    def boundary_of(self, chain: Mapping) -> dict:
        out: dict = {}
        for c, v in chain.items():
            for f, s in self.boundary[c].items():
                nv = out.get(f, 0) + v * s
                if nv:
                    out[f] = nv
                else:
                    out.pop(f, None)
        return out

    def check_boundary_squared(self) -> bool:
        for d, ks in self.cells.items():
            if d < 1:
                continue
            for k in ks:
                if self.boundary_of(self.boundary[k]):
                    return False
        return True

    def summary(self) -> HomologySummary:
        H = self.homology()
        cpd = self.cells_per_dim
        euler_cells = sum((-1) ** d * c for d, c in cpd.items()) - 1
        betti = H.betti()
        euler_betti = sum((-1) ** d * b for d, b in betti.items())
        return HomologySummary(betti, H.torsion(), cpd, euler_cells, euler_betti)

    def spec(self) -> dict:
        return {
            "factors": [
                {"q": t.q, "weight": str(t.params.weight), "window": list(t.window), "seed": t.seed.encode()}
                for t in self.trees
            ],
            "interval": [str(self.lo), None if self.hi is None else str(self.hi)],
            "cuts": [str(c) for c in self.cuts],
            "slack": str(self.slack),
        }


def check_slack(trees: Sequence[TreeTruncation], lo: Fraction, slack) -> None:
    """Every vertex with a positive-weight factor at its window top sits >= lo + slack."""
    slack = frac(slack)
    bottoms = [t.params.weight * t.window[0] + t.params.offset for t in trees]
    for i, t in enumerate(trees):
        if t.params.weight == 0:
            continue
        top = t.params.weight * t.window[1] + t.params.offset
        h = top + sum(b for j, b in enumerate(bottoms) if j != i)
        if h < lo + slack:
            corner = [f"{tr.params.label}:{tr.vertices[0].encode()}" for tr in trees]
            top_vertex = next(v for v in t.vertices if v.level == t.window[1])
            corner[i] = f"{t.params.label}:{top_vertex.encode()}"
            raise SlabError(
                f"insufficient slack: boundary vertex ({', '.join(corner)}) has height {h} "
                f"< {lo} + {slack}; raise the window top of factor {i}")


def build_slab(trees: Sequence[TreeTruncation], interval, slack=DEFAULT_SLACK,
               extra_cuts: Iterable = (), cell_cap: int = DEFAULT_CELL_CAP) -> SlabComplex:
    """Sliced product cells meeting the band; ``interval`` is (lo, hi), (lo, None) or a level."""
    trees = list(trees)
    if not trees:
        raise SlabError("at least one factor tree is required")
    lo, hi = _band(interval)
    check_slack(trees, lo, slack)
    cuts = {lo} | ({hi} if hi is not None else set())
    for c in extra_cuts:
        c = frac(c)
        if c >= lo and (hi is None or c <= hi):
            cuts.add(c)
    cuts = sorted(cuts)
    parts = _parts(lo, hi, cuts)
    geo = PieceGeometry(trees)

    factor_cells = []
    for i, t in enumerate(trees):
        w, o = t.params.weight, t.params.offset
        cs = [((VERTEX, k), w * v.level + o, w * v.level + o) for k, v in enumerate(t.vertices)]
        for k, (a, _) in enumerate(t.edges):
            lv = t.vertices[a].level
            cs.append(((EDGE, k), w * lv + o, w * (lv + 1) + o))
        cs.sort(key=lambda c: c[1])
        factor_cells.append(cs)
    m = len(trees)
    suf_min = [Fraction(0)] * (m + 1)
    suf_max = [Fraction(0)] * (m + 1)
    for i in range(m - 1, -1, -1):
        suf_min[i] = suf_min[i + 1] + min(c[1] for c in factor_cells[i])
        suf_max[i] = suf_max[i + 1] + max(c[2] for c in factor_cells[i])

    keys = []

    def rec(i, amin, amax, chosen):
        if i == m:
            sigma = tuple(chosen)
            for part in parts:
                if geo.nonempty(sigma, part):
                    keys.append((sigma, part))
                    if len(keys) > cell_cap:
                        raise SlabError(f"slab exceeds the cell cap of {cell_cap}")
            return
        for elem, cmin, cmax in factor_cells[i]:
            nmin = amin + cmin
            if hi is not None and nmin + suf_min[i + 1] > hi:
                break
            if amax + cmax + suf_max[i + 1] < lo:
                continue
            chosen.append(elem)
            rec(i + 1, nmin, amax + cmax, chosen)
            chosen.pop()

    rec(0, Fraction(0), Fraction(0), [])
    if not keys:
        raise SlabError(f"the slab over [{lo}, {hi}] is empty for these windows")
    cells: dict = {}
    for k in keys:
        cells.setdefault(geo.dim(*k), []).append(k)
    index = set(keys)
    boundary = {}
    for k in keys:
        bd = geo.boundary(k)
        for f in bd:
            if f != EMPTY and f not in index:
                raise AssertionError(f"facet {f!r} of {k!r} missing from the slab")
        boundary[k] = bd
    slab = SlabComplex(trees, lo, hi, cuts, frac(slack), dict(sorted(cells.items())), boundary, geo)
    if slab.is_level_set and all(w > 0 for w in geo.w) and slab.cells.get(m):
        raise AssertionError("a level set acquired top-dimensional cells")
    return slab


def refine(slab: SlabComplex, cuts: Iterable) -> SlabComplex:
    """Same slab with additional cut levels (a subdivision, so homology is unchanged)."""
    extra = set(slab.cuts) | {frac(c) for c in cuts}
    if all(c in slab.cuts for c in extra if c >= slab.lo and (slab.hi is None or c <= slab.hi)):
        return slab
    return build_slab(slab.trees, (slab.lo, slab.hi), slab.slack, extra)


def unconstrained_product(trees: Sequence[TreeTruncation]) -> SlabComplex:
    lo = sum(t.params.weight * t.window[0] + t.params.offset for t in trees)
    hi = sum(t.params.weight * t.window[1] + t.params.offset for t in trees)
    return build_slab(trees, (lo, hi), slack=0)


# ---------------------------------------------------------------------------
# maps in homology

def _same_trees(a: SlabComplex, b: SlabComplex) -> bool:
    if len(a.trees) != len(b.trees):
        return False
    for s, t in zip(a.trees, b.trees):
        if s is t:
            continue
        if (s.params, s.window, s.seed.ancestor(s.window[0])) != (t.params, t.window, t.seed.ancestor(t.window[0])):
            return False
    return True


def common_refinement(small: SlabComplex, large: SlabComplex) -> tuple[SlabComplex, SlabComplex]:
    if not _same_trees(small, large):
        raise SlabError("slabs are built over different factor trees")
    if small.lo < large.lo or (large.hi is not None and (small.hi is None or small.hi > large.hi)):
        raise SlabError("the first slab's band is not contained in the second's")
    cuts = set(small.cuts) | set(large.cuts)
    return refine(small, cuts), refine(large, cuts)


def map_matrix(src: SlabComplex, dst: SlabComplex, degree: int,
               cell_map: Callable[[tuple], Mapping] | None = None) -> list[list[int]]:
    """Matrix of a chain map on the free part of reduced homology (rows: target basis)."""
    Hs, Hd = src.homology(), dst.homology()
    cols = []
    for g in Hs.generators(degree):
        if cell_map is None:
            img = g
        else:
            img = {}
            for c, v in g.items():
                for c2, v2 in cell_map(c).items():
                    img[c2] = img.get(c2, 0) + v * v2
        cols.append(Hd.class_of(img, degree)[0])
    nrows = Hd.data[degree].betti if degree in Hd.data else 0
    return [[col[i] for col in cols] for i in range(nrows)]


def inclusion_induced_map(slab_small: SlabComplex, slab_large: SlabComplex, degree: int) -> list[list[int]]:
    small, large = common_refinement(slab_small, slab_large)
    return map_matrix(small, large, degree)


def is_zero_matrix(M) -> bool:
    return all(not any(row) for row in M)


def matmul_int(A, B, inner: int | None = None) -> list[list[int]]:
    if inner is None:
        inner = len(B)
    cols = len(B[0]) if B else 0
    return [[sum(A[i][k] * B[k][j] for k in range(inner)) for j in range(cols)] for i in range(len(A))]


# ---------------------------------------------------------------------------
# witness spheres

@dataclass
class WitnessSphere:
    base: tuple
    base_height: Fraction
    radius: int
    level: Fraction
    lines: tuple  # per factor: (plus ray, minus ray) as vertex lists starting at base
    chain: dict
    dim: int

    def is_zero(self) -> bool:
        return not self.chain

    def dump(self) -> list:
        return [{"cell": _key_json(k), "coefficient": v} for k, v in sorted(self.chain.items(), key=lambda kv: repr(kv[0]))]


def _key_json(key) -> dict:
    sigma, part = key
    return {
        "cube": [[e[0], e[1]] for e in sigma],
        "part": [part[0]] + [None if x is None else str(x) for x in part[1:]],
    }


def _ray(t: TreeTruncation, start: HVertex, first_digit: int, length: int) -> list[HVertex]:
    out = [start]
    for step in range(length):
        d = first_digit if step == 0 else 0
        nxt = HVertex(out[-1].level + 1, (d,) + out[-1].digits)
        if nxt not in t:
            raise SlabError(
                f"truncation of factor {t.params.label} (window {t.window}) too small for a ray of length {length}")
        out.append(nxt)
    return out


def witness_sphere(trees: Sequence[TreeTruncation], tau: Sequence[HVertex], radius: int) -> WitnessSphere:
    """Boundary of the norm ball of the given radius in the product of V-shaped lines through tau."""
    trees = list(trees)
    if len(tau) != len(trees):
        raise SlabError("one base vertex per factor required")
    if not isinstance(radius, int) or radius < 0:
        raise SlabError(f"radius must be a non-negative integer, got {radius!r}")
    m = len(trees)
    geo = PieceGeometry(trees)
    if any(w <= 0 for w in geo.w):
        raise SlabError("witness spheres need positive weights")
    base_h = sum(t.height(v) for t, v in zip(trees, tau))
    lines = []
    for t, v in zip(trees, tau):
        if v not in t:
            raise SlabError(f"base vertex {v.encode()} not in factor {t.params.label}")
        reach = int(ceil(Fraction(radius) / t.params.weight))
        lines.append((_ray(t, v, 0, reach), _ray(t, v, 1, reach)))
    level = base_h + radius
    if radius == 0:
        return WitnessSphere(tuple(tau), base_h, 0, level, tuple(lines), {}, m - 1)
    part = ("in", base_h, level)
    chain: dict = {}
    # full cells of the product of lines: each factor contributes one line edge
    per_factor = []
    for i, (plus, minus) in enumerate(lines):
        t = trees[i]
        es = []
        for ray, sign in ((plus, 1), (minus, -1)):
            for a, b in zip(ray, ray[1:]):
                es.append(((EDGE, t.edge_index[(t.index[a], t.index[b])]), sign))
        per_factor.append(es)
    for combo in iproduct(*per_factor):
        sigma = tuple(e for e, _ in combo)
        if not geo.nonempty(sigma, part):
            continue
        sign = 1
        for _, s in combo:
            sign *= s
        for f, c in geo.boundary((sigma, part)).items():
            if f[1] == part:
                continue
            nv = chain.get(f, 0) + sign * c
            if nv:
                chain[f] = nv
            else:
                chain.pop(f, None)
    stray = [k for k in chain if k[1] != ("at", level)]
    if stray:
        raise AssertionError(f"ball boundary has cells off the top level: {stray[:3]!r}")
    return WitnessSphere(tuple(tau), base_h, radius, level, tuple(lines), chain, m - 1)


def _simplex_sign(geo: PieceGeometry, key, verts: Sequence[tuple]) -> int:
    p0 = verts[0]
    rows = [geo.coords(key, [a - b for a, b in zip(v, p0)]) for v in verts[1:]]
    return _sign(_det(rows))


def flow_witness(witness: WitnessSphere, trees: Sequence[TreeTruncation]) -> dict:
    """Push the sphere one level down: the coordinate farthest from the base moves one step downhill.

    Realized as a simplicial chain map; needs unit weights so level-set cells are simplices.
    """
    geo = PieceGeometry(trees)
    if any(w != 1 for w in geo.w):
        raise SlabError("the downhill flow map is implemented for unit weights")
    tau = witness.base
    out: dict = {}
    for key, coef in witness.chain.items():
        sigma, part = key
        corner_cells = geo.corners(key)
        d = geo.dim(sigma, part)
        if len(corner_cells) != d + 1:
            raise SlabError(f"level cell {key!r} is not a simplex")
        verts = []
        for tau_cell in corner_cells:
            verts.append(tuple(trees[i].vertices[e[1]] for i, e in enumerate(tau_cell)))
        verts.sort()
        src_pts = [tuple(Fraction(v.level) for v in vt) for vt in verts]
        s_src = _simplex_sign(geo, key, src_pts)
        images = []
        for vt in verts:
            dist = [vt[i].level - tau[i].level for i in range(len(vt))]
            j = max(range(len(vt)), key=lambda i: (dist[i], -i))
            moved = list(vt)
            moved[j] = vt[j].lower()
            images.append(tuple(moved))
        if len(set(images)) < len(images):
            continue
        sigma2 = []
        for i, t in enumerate(trees):
            vs = sorted({im[i] for im in images})
            if len(vs) == 1:
                sigma2.append((VERTEX, t.index[vs[0]]))
            elif len(vs) == 2 and vs[1].lower() == vs[0]:
                sigma2.append((EDGE, t.edge_index[(t.index[vs[0]], t.index[vs[1]])]))
            else:
                raise SlabError(f"image of {key!r} is not a cell")
        key2 = (tuple(sigma2), ("at", part[1] - 1))
        if not geo.nonempty(*key2) or geo.dim(*key2) != d:
            raise SlabError(f"image of {key!r} is not a top cell of the lower level set")
        tgt_pts = [tuple(Fraction(v.level) for v in im) for im in images]
        s_tgt = _simplex_sign(geo, key2, tgt_pts)
        nv = out.get(key2, 0) + coef * s_src * s_tgt
        if nv:
            out[key2] = nv
        else:
            out.pop(key2, None)
    return out


def verify_witness_nontrivial(witness: WitnessSphere, slab_at_level: SlabComplex) -> bool:
    """Nonzero cycle in a level set with no top cells, hence not a boundary."""
    if not slab_at_level.is_level_set:
        raise SlabError("the target slab must be a level set")
    if slab_at_level.lo != witness.level:
        raise SlabError(f"witness level {witness.level} differs from slab level {slab_at_level.lo}")
    if witness.dim != slab_at_level.m - 1:
        raise SlabError("witness dimension does not match the slab")
    if slab_at_level.cells.get(slab_at_level.m):
        raise SlabError("level set carries top-dimensional cells; the structural argument does not apply")
    missing = [k for k in witness.chain if k not in slab_at_level]
    if missing:
        raise SlabError(f"witness cell {missing[0]!r} is not in the slab")
    if slab_at_level.boundary_of(witness.chain):
        raise AssertionError("witness chain is not a cycle")
    return bool(witness.chain)


def witness_class(witness: WitnessSphere, slab: SlabComplex) -> tuple[list[int], list[int]]:
    """Homology class of the witness cycle inside any slab containing its level."""
    slab = refine(slab, [witness.level])
    return slab.homology().class_of(witness.chain, witness.dim)


# ---------------------------------------------------------------------------
# directed systems

@dataclass
class DirectedSystem:
    degree: int
    ranks: list
    maps: list  # maps[i]: stage i -> stage i+1, rows = ranks[i+1]
    stages: list = field(default_factory=list)  # HomologySummary per stage when built from slabs
    long_range: dict = field(default_factory=dict)  # (i, j) -> directly computed map

    def composite(self, i: int, j: int) -> list[list[int]]:
        M = [[int(r == c) for c in range(self.ranks[i])] for r in range(self.ranks[i])]
        for k in range(i, j):
            M = matmul_int(self.maps[k], M, inner=self.ranks[k])
        return M

    def check_composites(self) -> bool:
        return all(self.composite(i, j) == M for (i, j), M in self.long_range.items())

    @classmethod
    def from_matrices(cls, ranks: Sequence[int], maps: Sequence, degree: int = 0) -> DirectedSystem:
        if len(maps) != len(ranks) - 1:
            raise ValueError("need one map between each pair of consecutive stages")
        for k, M in enumerate(maps):
            if len(M) != ranks[k + 1] or any(len(r) != ranks[k] for r in M):
                raise ValueError(f"map {k} has the wrong shape")
        return cls(degree, list(ranks), [list(map(list, M)) for M in maps])


@dataclass
class EssentialTrivialityReport:
    essentially_trivial: bool
    horizon: int
    killing_stage: dict  # stage -> first later stage with zero composite, or None

    def to_json(self) -> dict:
        return {
            "essentially_trivial": self.essentially_trivial,
            "horizon": self.horizon,
            "finite_horizon": True,
            "killing_stage": {str(k): v for k, v in self.killing_stage.items()},
        }


def essential_triviality(system: DirectedSystem, degree: int | None = None) -> EssentialTrivialityReport:
    """Every stage but the last must reach a later stage through a zero composite."""
    if degree is not None and degree != system.degree:
        raise ValueError(f"system is recorded in degree {system.degree}, not {degree}")
    n = len(system.ranks)
    if n < 2:
        raise ValueError("at least two stages are required")
    killing = {}
    for i in range(n - 1):
        killing[i] = next((j for j in range(i + 1, n) if is_zero_matrix(system.composite(i, j))), None)
    return EssentialTrivialityReport(all(v is not None for v in killing.values()), n - 1, killing)


def build_ladder(trees: Sequence[TreeTruncation], intervals: Sequence, degree: int,
                 slack=DEFAULT_SLACK) -> tuple[DirectedSystem, list[SlabComplex]]:
    """Directed system of nested slabs; all stages share the union of cut levels."""
    bands = [_band(iv) for iv in intervals]
    for (a0, b0), (a1, b1) in zip(bands, bands[1:]):
        if a1 > a0 or (b1 is not None and (b0 is None or b0 > b1)):
            raise SlabError("intervals must be nested increasingly")
    cuts = set()
    for a, b in bands:
        cuts.add(a)
        if b is not None:
            cuts.add(b)
    slabs = [build_slab(trees, band, slack, cuts) for band in bands]
    ranks = [s.homology().data[degree].betti for s in slabs]
    maps = [map_matrix(slabs[k], slabs[k + 1], degree) for k in range(len(slabs) - 1)]
    system = DirectedSystem(degree, ranks, maps, [s.summary() for s in slabs])
    for i in range(len(slabs)):
        for j in range(i + 2, len(slabs)):
            system.long_range[(i, j)] = map_matrix(slabs[i], slabs[j], degree)
    if not system.check_composites():
        raise AssertionError("composite of consecutive maps differs from the direct map")
    return system, slabs


# ---------------------------------------------------------------------------
# retract diagrams

@dataclass
class ChainMap:
    source: SlabComplex
    target: SlabComplex
    func: Callable[[tuple], dict]
    name: str = "map"

    def __call__(self, key) -> dict:
        return self.func(key)

    def apply(self, chain: Mapping) -> dict:
        out: dict = {}
        for c, v in chain.items():
            for c2, v2 in self.func(c).items():
                nv = out.get(c2, 0) + v * v2
                if nv:
                    out[c2] = nv
                else:
                    out.pop(c2, None)
        return out


def identity_map(slab: SlabComplex) -> ChainMap:
    return ChainMap(slab, slab, lambda k: {k: 1}, "identity")


def _transport_sign(src_geo, src_key, dst_geo, dst_key, embed) -> int:
    vecs, _ = src_geo.basis(src_key)
    rows = [dst_geo.coords(dst_key, embed(v)) for v in vecs]
    return _sign(_det(rows)) if rows else 1


def collapse_factor(big: SlabComplex, small: SlabComplex, factor: int) -> ChainMap:
    """Projection forgetting one factor; cells extended along it map to zero."""
    def func(key):
        sigma, part = key
        if sigma[factor][0] == EDGE:
            return {}
        k2 = (sigma[:factor] + sigma[factor + 1:], part)
        if big.geometry.dim(*key) != small.geometry.dim(*k2):
            return {}
        s = _transport_sign(big.geometry, key, small.geometry, k2,
                            lambda v: v[:factor] + v[factor + 1:])
        return {k2: s}
    return ChainMap(big, small, func, f"collapse factor {factor}")


def constant_section(small: SlabComplex, big: SlabComplex, factor: int, vertex: HVertex) -> ChainMap:
    """Embed the small slab at a fixed vertex of the extra factor."""
    t = big.trees[factor]
    vi = t.index[vertex]

    def func(key):
        sigma, part = key
        k2 = (sigma[:factor] + ((VERTEX, vi),) + sigma[factor:], part)
        s = _transport_sign(small.geometry, key, big.geometry, k2,
                            lambda v: v[:factor] + [Fraction(0)] + v[factor:])
        return {k2: s}
    return ChainMap(small, big, func, f"section at {vertex.encode()}")


@dataclass
class RetractDiagram:
    big: tuple  # (stage 1 slab, stage 2 slab)
    small: tuple
    projection: tuple  # ChainMap per stage, big -> small
    section: tuple  # ChainMap per stage, small -> big
    degree: int


@dataclass
class RetractReport:
    small_map: list
    big_map: list
    small_nonzero: bool
    big_nonzero: bool
    retract_identity: bool

    @property
    def transfers(self) -> bool:
        return (not self.small_nonzero) or self.big_nonzero

    def to_json(self) -> dict:
        return {
            "small_map": self.small_map, "big_map": self.big_map,
            "small_nonzero": self.small_nonzero, "big_nonzero": self.big_nonzero,
            "retract_identity": self.retract_identity, "transfers": self.transfers,
        }


def _check_chain_map(f: ChainMap) -> None:
    for key in f.source.dim_of:
        lhs = f.target.boundary_of(f(key)) if f(key) else {}
        rhs = f.apply({k: v for k, v in f.source.boundary[key].items() if k != EMPTY})
        lhs = {k: v for k, v in lhs.items() if k != EMPTY}
        if lhs != rhs:
            raise RetractError(f"{f.name} does not commute with the boundary at cell {key!r}")


def retract_transfer(diagram: RetractDiagram) -> RetractReport:
    """Verify the retract square and compare the vertical maps in homology."""
    B1, B2 = diagram.big
    S1, S2 = diagram.small
    p1, p2 = diagram.projection
    s1, s2 = diagram.section
    for f in (p1, p2, s1, s2):
        _check_chain_map(f)
    for S, p, s in ((S1, p1, s1), (S2, p2, s2)):
        for key in S.dim_of:
            if p.apply(s(key)) != {key: 1}:
                raise RetractError(f"projection after section is not the identity at cell {key!r}")
    for key in B1.dim_of:
        if key not in B2:
            raise RetractError(f"stage-1 big cell {key!r} missing from stage 2 (refine the cuts)")
        if p1(key) != p2(key):
            raise RetractError(f"square with the projection does not commute at cell {key!r}")
    for key in S1.dim_of:
        if key not in S2:
            raise RetractError(f"stage-1 small cell {key!r} missing from stage 2 (refine the cuts)")
        if s1(key) != s2(key):
            raise RetractError(f"square with the section does not commute at cell {key!r}")
    deg = diagram.degree
    small_map = map_matrix(S1, S2, deg)
    big_map = map_matrix(B1, B2, deg)
    ident = True
    for S, B, p, s in ((S1, B1, p1, s1), (S2, B2, p2, s2)):
        P = map_matrix(B, S, deg, p)
        Sm = map_matrix(S, B, deg, s)
        n = S.homology().data[deg].betti
        inner = B.homology().data[deg].betti
        prod = matmul_int(P, Sm, inner=inner) if n else []
        if prod != [[int(i == j) for j in range(n)] for i in range(n)]:
            ident = False
    if not ident:
        raise RetractError("projection after section is not the identity in homology")
    return RetractReport(small_map, big_map, not is_zero_matrix(small_map), not is_zero_matrix(big_map), ident)


# ---------------------------------------------------------------------------
# kernel slabs (rank one)

def kernel_slab_trees(places, width=Fraction(1, 2), bottom: int = -1, slack=DEFAULT_SLACK) -> list[TreeTruncation]:
    width = frac(width)
    lo = -width
    weights = [Fraction(p.degree) for p in places]
    trees = []
    for i, p in enumerate(places):
        others = sum(w * bottom for j, w in enumerate(weights) if j != i)
        top = int(ceil((lo + frac(slack) - others) / weights[i]))
        top = max(top, bottom)
        params = TreeParams(p.residue_size, weights[i], p.label)
        trees.append(build_truncation(params, (bottom, top), standard_vertex(bottom)))
    return trees


def kernel_slab_connectivity(root_system, places, width=Fraction(1, 2), bottom: int = -1,
                             slack=DEFAULT_SLACK) -> HomologySummary:
    """Reduced homology of {|weighted height sum| <= width} in the product of the place trees."""
    if root_system.rank != 1:
        raise SlabError("kernel slabs are modelled for rank one only (trees); higher rank is out of scope")
    if len(places) < 2:
        raise SlabError("need at least two places")
    width = frac(width)
    trees = kernel_slab_trees(places, width, bottom, slack)
    return build_slab(trees, (-width, width), slack).summary()
