"""Integer homology of finite based chain complexes.

Pairs (a, b) with a unit incidence are cancelled first (a chain-homotopy
equivalence that keeps integrality); the small residual is finished with a
dense Smith normal form.  The cancellation records are kept so cycles can be
carried both ways between the original and the residual complex.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Mapping, Sequence

Chain = dict  # cell key -> int


# ---------------------------------------------------------------------------
# Smith normal form

@dataclass
class SNFResult:
    diagonal: list
    U: list
    V: list
    U_inv: list
    V_inv: list
    shape: tuple

    @property
    def rank(self) -> int:
        return sum(1 for d in self.diagonal if d != 0)


def _identity(n: int) -> list[list[int]]:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matmul(A: Sequence[Sequence[int]], B: Sequence[Sequence[int]]) -> list[list[int]]:
    if not A:
        return []
    inner = len(B)
    cols = len(B[0]) if B else 0
    out = []
    for row in A:
        r = [0] * cols
        for k in range(inner):
            a = row[k]
            if a:
                bk = B[k]
                for j in range(cols):
                    if bk[j]:
                        r[j] += a * bk[j]
        out.append(r)
    return out


def smith_normal_form(A: Sequence[Sequence[int]], ncols: int | None = None) -> SNFResult:
    """U A V = D with U, V unimodular and d_1 | d_2 | ... on the diagonal."""
    m = len(A)
    n = len(A[0]) if m else (ncols or 0)
    D = [list(map(int, r)) for r in A]
    U, Ui, V, Vi = _identity(m), _identity(m), _identity(n), _identity(n)

    def swap_rows(i, j):
        D[i], D[j] = D[j], D[i]
        U[i], U[j] = U[j], U[i]
        for row in Ui:
            row[i], row[j] = row[j], row[i]

    def swap_cols(i, j):
        for row in D:
            row[i], row[j] = row[j], row[i]
        for row in V:
            row[i], row[j] = row[j], row[i]
        Vi[i], Vi[j] = Vi[j], Vi[i]

    def add_row(i, j, c):  # row_i += c row_j
        D[i] = [x + c * y for x, y in zip(D[i], D[j])]
        U[i] = [x + c * y for x, y in zip(U[i], U[j])]
        for row in Ui:
            row[j] -= c * row[i]

    def add_col(i, j, c):  # col_j += c col_i
        for row in D:
            row[j] += c * row[i]
        for row in V:
            row[j] += c * row[i]
        Vi[i] = [x - c * y for x, y in zip(Vi[i], Vi[j])]

    def negate_row(i):
        D[i] = [-x for x in D[i]]
        U[i] = [-x for x in U[i]]
        for row in Ui:
            row[i] = -row[i]

    for t in range(min(m, n)):
        best = None
        for i in range(t, m):
            for j in range(t, n):
                if D[i][j] and (best is None or abs(D[i][j]) < abs(D[best[0]][best[1]])):
                    best = (i, j)
        if best is None:
            break
        swap_rows(t, best[0])
        swap_cols(t, best[1])
        while True:
            dirty = False
            for i in range(t + 1, m):
                if D[i][t]:
                    add_row(i, t, -(D[i][t] // D[t][t]))
                    if D[i][t]:
                        dirty = True
            for j in range(t + 1, n):
                if D[t][j]:
                    add_col(t, j, -(D[t][j] // D[t][t]))
                    if D[t][j]:
                        dirty = True
            if dirty:
                best = None
                for i in range(t, m):
                    if D[i][t] and (best is None or abs(D[i][t]) < abs(D[best][t])):
                        best = i
                swap_rows(t, best)
                bc = None
                for j in range(t, n):
                    if D[t][j] and (bc is None or abs(D[t][j]) < abs(D[t][bc])):
                        bc = j
                swap_cols(t, bc)
                continue
            p = D[t][t]
            bad = next(((i, j) for i in range(t + 1, m) for j in range(t + 1, n) if D[i][j] % p), None)
            if bad is None:
                break
            add_row(t, bad[0], 1)
        if D[t][t] < 0:
            negate_row(t)
    diag = [D[i][i] for i in range(min(m, n))]
    return SNFResult(diag, U, V, Ui, Vi, (m, n))


# ---------------------------------------------------------------------------
# cancellation of unit pairs

@dataclass
class Elimination:
    dim: int  # dimension of a; b has dimension dim + 1
    a: Hashable
    b: Hashable
    u: int
    boundary_b: dict
    coboundary_a: dict


class ReducedComplex:
    """Cancel unit incidences in a based complex given as dim -> cells and cell -> boundary."""

    def __init__(self, cells: Mapping[int, Sequence], boundary: Mapping[Hashable, Mapping]):
        self.dim_of = {}
        for d, cs in cells.items():
            for c in cs:
                self.dim_of[c] = d
        self.order = {c: i for i, c in enumerate(self.dim_of)}
        self.bd = {c: {f: v for f, v in boundary.get(c, {}).items() if v} for c in self.dim_of}
        self.cobd = {c: {} for c in self.dim_of}
        for c, fs in self.bd.items():
            for f, v in fs.items():
                self.cobd[f][c] = v
        self.records: list[Elimination] = []
        self._reduce()
        self.alive = {}
        for c, d in self.dim_of.items():
            if c in self.bd:
                self.alive.setdefault(d, []).append(c)
        for d in cells:
            self.alive.setdefault(d, [])
        self.alive_index = {d: {c: i for i, c in enumerate(cs)} for d, cs in self.alive.items()}

    def _reduce(self):
        bd, cobd = self.bd, self.cobd
        progress = True
        while progress:
            progress = False
            for b in sorted(bd, key=lambda c: (-self.dim_of[c], self.order[c])):
                if b not in bd:
                    continue
                best = None
                for a, v in bd[b].items():
                    if v in (1, -1) and (best is None or len(cobd[a]) < len(cobd[best])):
                        best = a
                if best is None:
                    continue
                self._eliminate(best, b)
                progress = True

    def _eliminate(self, a, b):
        bd, cobd = self.bd, self.cobd
        u = bd[b][a]
        bb = dict(bd[b])
        ca = dict(cobd[a])
        self.records.append(Elimination(self.dim_of[a], a, b, u, bb, ca))
        for x, c in ca.items():
            if x == b:
                continue
            k = c * u
            bx = bd[x]
            for f, cf in bb.items():
                nv = bx.get(f, 0) - k * cf
                if nv:
                    bx[f] = nv
                    cobd[f][x] = nv
                else:
                    bx.pop(f, None)
                    cobd[f].pop(x, None)
        for f in bd[b]:
            cobd[f].pop(b, None)
        for y in cobd[b]:
            bd[y].pop(b, None)
        for f in bd[a]:
            cobd[f].pop(a, None)
        del bd[b], cobd[b], bd[a], cobd[a]

    def project(self, chain: Mapping, dim: int) -> Chain:
        """Image of an original chain in the residual complex."""
        z = {c: v for c, v in chain.items() if v}
        for e in self.records:
            if e.dim == dim:
                c = z.pop(e.a, 0)
                if c:
                    k = c * e.u
                    for f, cf in e.boundary_b.items():
                        if f == e.a:
                            continue
                        nv = z.get(f, 0) - k * cf
                        if nv:
                            z[f] = nv
                        else:
                            z.pop(f, None)
            elif e.dim + 1 == dim:
                z.pop(e.b, None)
        return z

    def lift(self, chain: Mapping, dim: int) -> Chain:
        """Image of a residual chain in the original complex."""
        x = {c: v for c, v in chain.items() if v}
        for e in reversed(self.records):
            if e.dim + 1 == dim:
                s = sum(v * e.coboundary_a.get(y, 0) for y, v in x.items())
                if s:
                    x[e.b] = x.get(e.b, 0) - s * e.u
        return x

    def matrix(self, dim: int) -> list[list[int]]:
        """Residual boundary from dim to dim - 1 (rows: dim-1 cells)."""
        rows = self.alive.get(dim - 1, [])
        cols = self.alive.get(dim, [])
        ri = self.alive_index.get(dim - 1, {})
        M = [[0] * len(cols) for _ in rows]
        for j, c in enumerate(cols):
            for f, v in self.bd[c].items():
                M[ri[f]][j] = v
        return M

    def vector(self, chain: Mapping, dim: int) -> list[int]:
        idx = self.alive_index.get(dim, {})
        out = [0] * len(idx)
        for c, v in chain.items():
            if c not in idx:
                raise KeyError(f"cell {c!r} is not in the residual complex")
            out[idx[c]] = v
        return out


# ---------------------------------------------------------------------------
# homology

@dataclass
class DegreeHomology:
    degree: int
    betti: int
    torsion: list
    kernel_rank: int
    snf_boundary: SNFResult  # SNF of the residual boundary out of this degree
    snf_quotient: SNFResult  # SNF of incoming boundaries in kernel coordinates
    free_generators: list = field(default_factory=list)  # residual vectors
    torsion_generators: list = field(default_factory=list)


def _column(M, j):
    return [row[j] for row in M]


class ChainHomology:
    """Reduced integer homology of a based complex with an augmentation cell in dim -1."""

    def __init__(self, cells: Mapping[int, Sequence], boundary: Mapping[Hashable, Mapping]):
        self.reduced = ReducedComplex(cells, boundary)
        self.cells = cells
        self.boundary = boundary
        self.degrees = sorted(d for d in cells if d >= 0)
        self.top = max(self.degrees) if self.degrees else -1
        self.data: dict[int, DegreeHomology] = {}
        for d in range(-1, self.top + 1):
            self.data[d] = self._degree(d)

    def _degree(self, d: int) -> DegreeHomology:
        R = self.reduced
        n_d = len(R.alive.get(d, []))
        out_mat = R.matrix(d) if d >= 0 else []
        snf_out = smith_normal_form(out_mat, ncols=n_d)
        r = snf_out.rank if d >= 0 else 0
        k = n_d - r
        n_up = len(R.alive.get(d + 1, []))
        in_mat = R.matrix(d + 1) if n_up else [[] for _ in range(n_d)]
        # incoming boundaries in kernel coordinates
        inv = snf_out.V_inv if d >= 0 else _identity(n_d)
        coords = matmul(inv, in_mat) if n_d else []
        for row in coords[:r]:
            if any(row):
                raise ArithmeticError(f"boundary of boundary is nonzero in degree {d}")
        M = coords[r:]
        snf_in = smith_normal_form(M, ncols=n_up)
        rank_in = snf_in.rank
        V = snf_out.V if d >= 0 else _identity(n_d)
        K = [row[r:] for row in V]  # columns span ker
        Kg = matmul(K, snf_in.U_inv) if k else [[] for _ in range(n_d)]
        free = [_column(Kg, j) for j in range(rank_in, k)]
        tors_vals, tors_gens = [], []
        for i in range(rank_in):
            dv = snf_in.diagonal[i]
            if dv > 1:
                tors_vals.append(dv)
                tors_gens.append(_column(Kg, i))
        return DegreeHomology(d, k - rank_in, tors_vals, k, snf_out, snf_in, free, tors_gens)

    def betti(self) -> dict[int, int]:
        return {d: self.data[d].betti for d in self.degrees}

    def torsion(self) -> dict[int, list]:
        return {d: list(self.data[d].torsion) for d in self.degrees}

    def generators(self, degree: int) -> list[Chain]:
        """Original-complex cycles representing a basis of the free part."""
        R = self.reduced
        cells = R.alive.get(degree, [])
        gens = []
        for g in self.data[degree].free_generators:
            ch = {cells[i]: v for i, v in enumerate(g) if v}
            gens.append(R.lift(ch, degree))
        return gens

    def class_of(self, chain: Mapping, degree: int) -> tuple[list[int], list[int]]:
        """(free coordinates, torsion residues) of an original cycle."""
        R = self.reduced
        if degree >= 0:
            image: dict = {}
            for c, v in chain.items():
                for f, s in self.boundary.get(c, {}).items():
                    image[f] = image.get(f, 0) + v * s
            if any(image.values()):
                raise ValueError(f"chain is not a cycle in degree {degree}")
        z = R.project(chain, degree)
        vec = R.vector(z, degree)
        data = self.data[degree]
        if degree >= 0:
            bdry = R.matrix(degree)
            img = [sum(a * b for a, b in zip(row, vec)) for row in bdry]
            if any(img):
                raise ValueError(f"chain is not a cycle in degree {degree}")
            y = [sum(a * b for a, b in zip(row, vec)) for row in data.snf_boundary.V_inv]
        else:
            y = vec
        r = data.snf_boundary.rank if degree >= 0 else 0
        yk = y[r:]
        w = [sum(a * b for a, b in zip(row, yk)) for row in data.snf_quotient.U] if yk else []
        rank_in = data.snf_quotient.rank
        free = w[rank_in:]
        tors = []
        for i in range(rank_in):
            dv = data.snf_quotient.diagonal[i]
            if dv > 1:
                tors.append(w[i] % dv)
        return free, tors

    def is_boundary(self, chain: Mapping, degree: int) -> bool:
        free, tors = self.class_of(chain, degree)
        return not any(free) and not any(tors)
