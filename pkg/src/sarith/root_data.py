"""Root systems, place data, the weighted coordinate map and its kernel.

Roots are integer vectors in the basis of simple roots.  A root read as a
linear form on an apartment is the same vector read as a covector in the
coordinates dual to the simple roots, so no separate representation is
needed.  Negative roots are those with all coordinates <= 0; the designated
base roots are the negatives of the simple roots.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .rational import Vector, dot, fmt_vec, is_zero, nullspace, parse_vec, vec


# ---------------------------------------------------------------------------
# Dynkin data

# Each entry: (squared lengths of simple roots, {(i, j): (alpha_i, alpha_j)})
def _gram(type_letter: str, n: int) -> tuple[list[int], dict[tuple[int, int], int]]:
    chain = {(i, i + 1): -1 for i in range(n - 1)}
    if type_letter == "A":
        return [2] * n, chain
    if type_letter == "B":
        lengths = [4] * (n - 1) + [2]
        prods = {(i, i + 1): -2 for i in range(n - 1)}
        return lengths, prods
    if type_letter == "C":
        lengths = [2] * (n - 1) + [4]
        prods = {(i, i + 1): -1 for i in range(n - 2)}
        prods[(n - 2, n - 1)] = -2
        return lengths, prods
    if type_letter == "D":
        prods = {(i, i + 1): -1 for i in range(n - 2)}
        prods[(n - 3, n - 1)] = -1
        return [2] * n, prods
    if type_letter == "E":
        # Bourbaki labelling: 1-3-4-5-6-7-8 with 2 attached to 4.
        edges = [(0, 2), (2, 3), (3, 4), (1, 3)] + [(k, k + 1) for k in range(4, n - 1)]
        return [2] * n, {e: -1 for e in edges}
    if type_letter == "F":
        return [4, 4, 2, 2], {(0, 1): -2, (1, 2): -2, (2, 3): -1}
    if type_letter == "G":
        return [2, 6], {(0, 1): -3}
    raise ValueError(f"unknown type letter {type_letter!r}")


_MIN_RANK = {"A": 1, "B": 2, "C": 3, "D": 4}
_FIXED_RANKS = {"E": (6, 7, 8), "F": (4,), "G": (2,)}

CLASSICAL_COUNT = {
    "A": lambda n: n * (n + 1),
    "B": lambda n: 2 * n * n,
    "C": lambda n: 2 * n * n,
    "D": lambda n: 2 * n * (n - 1),
    "E": lambda n: {6: 72, 7: 126, 8: 240}[n],
    "F": lambda n: 48,
    "G": lambda n: 12,
}


def validate_type(type_letter: str, rank: int) -> None:
    if type_letter in _MIN_RANK:
        if not isinstance(rank, int) or rank < _MIN_RANK[type_letter]:
            raise ValueError(
                f"type {type_letter}_n requires n >= {_MIN_RANK[type_letter]}, got n={rank}")
    elif type_letter in _FIXED_RANKS:
        if rank not in _FIXED_RANKS[type_letter]:
            allowed = ", ".join(str(r) for r in _FIXED_RANKS[type_letter])
            raise ValueError(f"type {type_letter} exists only in rank {allowed}, got {rank}")
    else:
        raise ValueError(f"unknown Dynkin type letter {type_letter!r}; expected one of A..G")


def cartan_matrix(type_letter: str, rank: int) -> tuple[tuple[int, ...], ...]:
    """Cartan matrix with entries <alpha_i^vee, alpha_j> = 2(a_i, a_j)/(a_i, a_i)."""
    validate_type(type_letter, rank)
    lengths, prods = _gram(type_letter, rank)
    gram = [[0] * rank for _ in range(rank)]
    for i in range(rank):
        gram[i][i] = lengths[i]
    for (i, j), v in prods.items():
        gram[i][j] = gram[j][i] = v
    return tuple(tuple(2 * gram[i][j] // gram[i][i] for j in range(rank)) for i in range(rank))


def simple_reflection(cartan, i: int, root: Sequence[int]) -> tuple[int, ...]:
    pairing = sum(cartan[i][j] * root[j] for j in range(len(root)))
    out = list(root)
    out[i] -= pairing
    return tuple(out)


def _height(r: Sequence[int]) -> int:
    return sum(abs(c) for c in r)


@dataclass(frozen=True)
class RootSystem:
    type_letter: str
    rank: int
    cartan: tuple
    roots: tuple
    base_negative: tuple
    negative: tuple

    @property
    def positive(self) -> tuple:
        return tuple(tuple(-c for c in r) for r in self.negative)

    def base(self, positive: bool = False) -> tuple:
        """Designated base roots; negative convention unless ``positive``."""
        if positive:
            return tuple(tuple(-c for c in r) for r in self.base_negative)
        return self.base_negative

    @property
    def name(self) -> str:
        return f"{self.type_letter}{self.rank}"


def build_root_system(type_letter: str, rank: int) -> RootSystem:
    """Close the simple roots under simple reflections."""
    type_letter = type_letter.upper()
    cartan = cartan_matrix(type_letter, rank)
    simple = [tuple(int(i == j) for j in range(rank)) for i in range(rank)]
    seen = set(simple)
    frontier = list(simple)
    while frontier:
        nxt = []
        for r in frontier:
            for i in range(rank):
                s = simple_reflection(cartan, i, r)
                if s not in seen:
                    seen.add(s)
                    nxt.append(s)
        frontier = nxt
    positive = sorted((r for r in seen if all(c >= 0 for c in r)), key=lambda r: (_height(r), r[::-1]))
    negative = tuple(tuple(-c for c in r) for r in positive)
    if len(positive) * 2 != len(seen):
        raise AssertionError(f"root closure of {type_letter}{rank} is not sign-symmetric")
    base_negative = tuple(tuple(-int(i == j) for j in range(rank)) for i in range(rank))
    return RootSystem(
        type_letter=type_letter,
        rank=rank,
        cartan=cartan,
        roots=tuple(positive) + negative,
        base_negative=base_negative,
        negative=negative,
    )


# ---------------------------------------------------------------------------
# Places

def _is_prime_power(n: int) -> bool:
    if n < 2:
        return False
    p = next(d for d in range(2, n + 1) if n % d == 0)
    while n % p == 0:
        n //= p
    return n == 1


@dataclass(frozen=True)
class PlaceSpec:
    label: str
    degree: int = 1
    base_field_size: int = 2

    def __post_init__(self):
        if not isinstance(self.degree, int) or self.degree < 1:
            raise ValueError(f"place {self.label}: degree must be a positive integer, got {self.degree!r}")
        if not _is_prime_power(self.base_field_size):
            raise ValueError(f"place {self.label}: base field size {self.base_field_size} is not a prime power")

    @property
    def residue_size(self) -> int:
        return self.base_field_size ** self.degree


def unit_places(count: int, base_field_size: int = 2) -> list[PlaceSpec]:
    return [PlaceSpec(f"p{i + 1}", 1, base_field_size) for i in range(count)]


# ---------------------------------------------------------------------------
# Coordinate map, kernel, form systems

@dataclass(frozen=True)
class CoordinateMap:
    places: tuple
    rank: int
    weights: tuple
    matrix: tuple  # rank x (|S| * rank)

    @property
    def ambient_dim(self) -> int:
        return len(self.places) * self.rank

    def __call__(self, x: Sequence) -> Vector:
        x = vec(x)
        return tuple(dot(row, x) for row in self.matrix)


def coordinate_map(places: Sequence[PlaceSpec], rank: int) -> CoordinateMap:
    places = tuple(places)
    if not places:
        raise ValueError("the set of places must be non-empty")
    weights = tuple(Fraction(p.degree) for p in places)
    rows = []
    for i in range(rank):
        row = []
        for w in weights:
            row.extend(w if j == i else Fraction(0) for j in range(rank))
        rows.append(tuple(row))
    return CoordinateMap(places, rank, weights, tuple(rows))


@dataclass(frozen=True)
class KernelSubspace:
    ambient_dim: int
    basis: tuple

    @property
    def dim(self) -> int:
        return len(self.basis)

    def coordinates(self, x: Sequence) -> Vector:
        """Coordinates of an ambient vector lying in the subspace."""
        from .rational import solve
        y = solve(self.basis, vec(x))
        if y is None:
            raise ValueError("vector does not lie in the kernel subspace")
        return y

    def contains(self, x: Sequence) -> bool:
        from .rational import solve
        x = vec(x)
        if is_zero(x):
            return True
        return bool(self.basis) and solve(self.basis, x) is not None


def kernel_subspace(cmap: CoordinateMap) -> KernelSubspace:
    basis = nullspace(cmap.matrix, cmap.ambient_dim)
    return KernelSubspace(cmap.ambient_dim, tuple(basis))


@dataclass(frozen=True)
class FormSet:
    space_dim: int
    forms: tuple
    tags: tuple = field(default=())

    def __post_init__(self):
        forms = tuple(vec(f) for f in self.forms)
        object.__setattr__(self, "forms", forms)
        tags = tuple(self.tags) if self.tags else tuple((None, i) for i in range(len(forms)))
        object.__setattr__(self, "tags", tags)
        if len(tags) != len(forms):
            raise ValueError("one tag per form required")
        for f in forms:
            if len(f) != self.space_dim:
                raise ValueError(f"form of length {len(f)} on a {self.space_dim}-dimensional space")
        if len(set(zip(forms, tags))) != len(forms):
            raise ValueError("duplicate (covector, tag) pair in form set")

    def __len__(self) -> int:
        return len(self.forms)

    def __iter__(self):
        return iter(self.forms)

    @property
    def zero_flags(self) -> tuple:
        return tuple(is_zero(f) for f in self.forms)

    @property
    def places(self) -> tuple:
        seen = []
        for label, _ in self.tags:
            if label not in seen:
                seen.append(label)
        return tuple(seen)


def _lift(root_system: RootSystem, places: Sequence[PlaceSpec], roots_with_index) -> FormSet:
    n = root_system.rank
    places = tuple(places)
    if not places:
        raise ValueError("the set of places must be non-empty")
    dim = n * len(places)
    forms, tags = [], []
    for k, p in enumerate(places):
        for idx, root in roots_with_index:
            f = [Fraction(0)] * dim
            for i, c in enumerate(root):
                f[k * n + i] = Fraction(p.degree * c)
            forms.append(tuple(f))
            tags.append((p.label, idx))
    return FormSet(dim, tuple(forms), tuple(tags))


def product_form_system(root_system: RootSystem, places: Sequence[PlaceSpec]) -> FormSet:
    """Every negative root at every place, lifted (d_p-weighted) to the product."""
    return _lift(root_system, places, list(enumerate(root_system.negative)))


def base_form_system(root_system: RootSystem, places: Sequence[PlaceSpec]) -> FormSet:
    """The negative base roots at every place; tags index into ``negative``."""
    index = {r: i for i, r in enumerate(root_system.negative)}
    return _lift(root_system, places, [(index[r], r) for r in root_system.base_negative])


def restrict_forms(form_set: FormSet, kernel: KernelSubspace) -> FormSet:
    """Express each form in kernel-basis coordinates (f(b_1), ..., f(b_k))."""
    if form_set.space_dim != kernel.ambient_dim:
        raise ValueError(
            f"dimension mismatch: forms live on dim {form_set.space_dim}, "
            f"kernel on dim {kernel.ambient_dim}")
    forms = tuple(tuple(dot(f, b) for b in kernel.basis) for f in form_set.forms)
    return FormSet(kernel.dim, forms, form_set.tags)


@dataclass(frozen=True)
class RestrictedSystems:
    """Phi~- and Delta~ on H together with the data used to build them."""
    root_system: RootSystem
    places: tuple
    cmap: CoordinateMap
    kernel: KernelSubspace
    negative: FormSet  # restricted negative roots
    base: FormSet  # restricted negative base roots

    def base_by_place(self) -> list[list[Vector]]:
        out: dict = {p.label: [] for p in self.places}
        for f, (label, _) in zip(self.base.forms, self.base.tags):
            out[label].append(f)
        return [out[p.label] for p in self.places]


def restricted_systems(root_system: RootSystem, places: Sequence[PlaceSpec]) -> RestrictedSystems:
    places = tuple(places)
    cmap = coordinate_map(places, root_system.rank)
    kernel = kernel_subspace(cmap)
    neg = restrict_forms(product_form_system(root_system, places), kernel)
    base = restrict_forms(base_form_system(root_system, places), kernel)
    return RestrictedSystems(root_system, places, cmap, kernel, neg, base)


# ---------------------------------------------------------------------------
# JSON

def to_json(root_system: RootSystem, places: Sequence[PlaceSpec] = (), forms: FormSet | None = None) -> dict:
    doc = {
        "type": root_system.type_letter,
        "rank": root_system.rank,
        "roots": [list(r) for r in root_system.roots],
        "places": [
            {"label": p.label, "degree": p.degree, "base_field_size": p.base_field_size}
            for p in places
        ],
        "forms": [],
    }
    if forms is not None:
        doc["forms"] = [
            {"coeffs": fmt_vec(f), "place": tag[0], "root_index": tag[1]}
            for f, tag in zip(forms.forms, forms.tags)
        ]
    return doc


def from_json(doc: dict) -> tuple[RootSystem, list[PlaceSpec], FormSet | None]:
    rs = build_root_system(doc["type"], int(doc["rank"]))
    if sorted(map(tuple, doc.get("roots", rs.roots))) != sorted(rs.roots):
        raise ValueError("serialized roots disagree with the regenerated root system")
    places = [PlaceSpec(p["label"], int(p["degree"]), int(p["base_field_size"])) for p in doc.get("places", [])]
    forms = None
    if doc.get("forms"):
        vecs = [parse_vec(f["coeffs"]) for f in doc["forms"]]
        tags = [(f["place"], f["root_index"]) for f in doc["forms"]]
        forms = FormSet(len(vecs[0]), tuple(vecs), tuple(tags))
    return rs, places, forms
