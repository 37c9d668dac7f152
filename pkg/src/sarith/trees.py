"""Horocyclic model of the (q+1)-regular tree.

A vertex at level n is a finite digit word (d_{n-1}, d_{n-2}, ...) over
{0, ..., q-1}; equivalently a coset x + t^n O in F_q((t)) / t^n O.  Dropping
the leading digit moves one level down, prepending a digit moves up.  All
downward paths eventually merge, which is the descending end.  The vertices
with all digits zero form the standard apartment.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterator

from .rational import frac

DEFAULT_VERTEX_CAP = 250_000


def _trim(digits) -> tuple[int, ...]:
    digits = tuple(digits)
    end = len(digits)
    while end and digits[end - 1] == 0:
        end -= 1
    return digits[:end]


@dataclass(frozen=True, order=True)
class HVertex:
    level: int
    digits: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "digits", _trim(self.digits))

    @property
    def height(self) -> int:
        """Unweighted level; weighted heights come from :func:`height`."""
        return self.level

    def digit(self, position: int) -> int:
        """Digit at absolute position ``position`` (< level)."""
        if position >= self.level:
            raise ValueError(f"vertex at level {self.level} has no digit at position {position}")
        k = self.level - 1 - position
        return self.digits[k] if k < len(self.digits) else 0

    def lower(self) -> HVertex:
        return HVertex(self.level - 1, self.digits[1:])

    def uppers(self, q: int) -> list[HVertex]:
        return [HVertex(self.level + 1, (d,) + self.digits) for d in range(q)]

    def ancestor(self, level: int) -> HVertex:
        if level > self.level:
            raise ValueError(f"ancestor level {level} above vertex level {self.level}")
        return HVertex(level, self.digits[self.level - level:])

    @property
    def on_standard_apartment(self) -> bool:
        return not self.digits

    def encode(self) -> str:
        return f"{self.level}|" + ".".join(map(str, self.digits))

    @classmethod
    def decode(cls, text: str) -> HVertex:
        level, _, rest = text.partition("|")
        return cls(int(level), tuple(int(d) for d in rest.split(".")) if rest else ())


def standard_vertex(level: int) -> HVertex:
    return HVertex(level, ())


@dataclass(frozen=True)
class TreeParams:
    q: int
    weight: Fraction = Fraction(1)
    label: str = "p"
    offset: Fraction = Fraction(0)

    def __post_init__(self):
        if not isinstance(self.q, int) or self.q < 2:
            raise ValueError(f"branching q must be an integer >= 2, got {self.q!r}")
        object.__setattr__(self, "weight", frac(self.weight))
        object.__setattr__(self, "offset", frac(self.offset))
        if self.weight < 0:
            raise ValueError(f"height weight must be non-negative, got {self.weight}")


def height(vertex: HVertex, params: TreeParams) -> Fraction:
    return params.weight * vertex.level + params.offset


def downhill_flow(vertex: HVertex, target_level: int) -> list[HVertex]:
    if target_level > vertex.level:
        raise ValueError(f"target level {target_level} lies above the start level {vertex.level}")
    path = [vertex]
    while path[-1].level > target_level:
        path.append(path[-1].lower())
    return path


def meeting_level(u: HVertex, v: HVertex) -> int:
    """Highest level at which the downhill flows of u and v coincide."""
    lvl = min(u.level, v.level)
    while u.ancestor(lvl) != v.ancestor(lvl):
        lvl -= 1
    return lvl


@dataclass(frozen=True)
class LinkInfo:
    descending: tuple
    ascending: tuple
    partial_descending: bool
    partial_ascending: bool

    @property
    def partial(self) -> bool:
        return self.partial_descending or self.partial_ascending


@dataclass
class TreeTruncation:
    params: TreeParams
    window: tuple
    seed: HVertex
    vertices: list = field(default_factory=list)
    edges: list = field(default_factory=list)  # (lower index, upper index)

    def __post_init__(self):
        self.index = {v: i for i, v in enumerate(self.vertices)}
        self.edge_index = {e: k for k, e in enumerate(self.edges)}

    @property
    def q(self) -> int:
        return self.params.q

    def __contains__(self, v) -> bool:
        return v in self.index

    def height(self, v: HVertex) -> Fraction:
        return height(v, self.params)

    def links(self, v: HVertex) -> LinkInfo:
        if v not in self.index:
            raise ValueError(f"vertex {v.encode()} is not in the truncation")
        low = v.lower()
        down = (low,) if low in self.index else ()
        up = tuple(u for u in v.uppers(self.q) if u in self.index)
        return LinkInfo(down, up, len(down) != 1, len(up) != self.q)

    def vertices_at(self, level: int) -> list[HVertex]:
        return [v for v in self.vertices if v.level == level]

    def iter_edges(self) -> Iterator[tuple[HVertex, HVertex]]:
        for a, b in self.edges:
            yield self.vertices[a], self.vertices[b]

    def to_json(self) -> dict:
        return {
            "q": self.q,
            "weight": str(self.params.weight),
            "window": list(self.window),
            "vertices": [{"height": v.level, "digits": list(v.digits)} for v in self.vertices],
            "edges": [list(e) for e in self.edges],
        }

    def to_dot(self) -> str:
        lines = [f'graph "{self.params.label}" {{', "  rankdir=BT;"]
        for i, v in enumerate(self.vertices):
            style = ", style=bold" if v.on_standard_apartment else ""
            lines.append(f'  v{i} [label="{v.encode()}"{style}];')
        for a, b in self.edges:
            lines.append(f"  v{a} -- v{b};")
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_truncation(params: TreeParams, window: tuple[int, int], seed: HVertex | None = None,
                     vertex_cap: int = DEFAULT_VERTEX_CAP) -> TreeTruncation:
    """All descendants of the seed's ancestor at the window bottom, up to the window top."""
    a, b = (int(window[0]), int(window[1]))
    if a > b:
        raise ValueError(f"window [{a}, {b}] is degenerate")
    seed = seed if seed is not None else standard_vertex(a)
    if not a <= seed.level <= b:
        raise ValueError(f"seed level {seed.level} outside window [{a}, {b}]")
    count = sum(params.q ** k for k in range(b - a + 1))
    if count > vertex_cap:
        raise ValueError(f"window [{a}, {b}] with q={params.q} has {count} vertices, over the cap {vertex_cap}")
    root = seed.ancestor(a)
    vertices = [root]
    edges = []
    layer = [0]
    for _ in range(a, b):
        nxt = []
        for i in layer:
            for u in vertices[i].uppers(params.q):
                vertices.append(u)
                edges.append((i, len(vertices) - 1))
                nxt.append(len(vertices) - 1)
        layer = nxt
    return TreeTruncation(params, (a, b), seed, vertices, edges)
