"""Link-lattice geometry: square lattices and two-leg ladders.

Links point along +x or +y. At a vertex, a link entering it carries Gauss
sign +1 and a link leaving it carries -1. Plaquettes are traversed
counter-clockwise from their lower-left corner: bottom, right, top, left.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import DomainError

STRING_CONVENTIONS = ("uniform", "alternating")


@dataclass(frozen=True)
class Link:
    tail: int
    head: int
    direction: str  # "x" or "y"


@dataclass(frozen=True)
class Path:
    steps: tuple  # ((link index, exponent sign), ...)
    kind: str  # "wilson_loop" or "thooft_string"
    convention: str = "signed"

    @property
    def links(self) -> list[int]:
        return [l for l, _ in self.steps]

    @property
    def signs(self) -> list[int]:
        return [s for _, s in self.steps]

    def __len__(self):
        return len(self.steps)


@dataclass(frozen=True)
class LatticeGeometry:
    kind: str
    shape: tuple
    boundary: str
    coords: tuple  # vertex -> (x, y)
    links: tuple
    vertex_star: tuple  # vertex -> ((link, sign), ...)
    plaquettes: tuple  # plaquette -> ((link, traversal sign), x4)
    plaquette_corner: tuple
    nn_pairs: tuple

    @property
    def n_links(self) -> int:
        return len(self.links)

    @property
    def n_vertices(self) -> int:
        return len(self.coords)

    @property
    def n_plaquettes(self) -> int:
        return len(self.plaquettes)

    def link_index(self, tail: int, direction: str) -> int:
        for i, lk in enumerate(self.links):
            if lk.tail == tail and lk.direction == direction:
                return i
        raise KeyError((tail, direction))

    def vertex_parity(self, v: int) -> int:
        x, y = self.coords[v]
        return (x + y) % 2

    def perpendicular_pairs(self) -> tuple:
        return tuple(p for p in self.nn_pairs
                     if self.links[p[0]].direction != self.links[p[1]].direction)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "shape": list(self.shape),
            "boundary": self.boundary,
            "vertices": [{"index": i, "x": c[0], "y": c[1]} for i, c in enumerate(self.coords)],
            "links": [{"index": i, "tail": l.tail, "head": l.head, "direction": l.direction}
                      for i, l in enumerate(self.links)],
            "vertex_star": [[[l, s] for l, s in star] for star in self.vertex_star],
            "plaquettes": [[[l, s] for l, s in p] for p in self.plaquettes],
            "nn_pairs": [list(p) for p in self.nn_pairs],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1, sort_keys=True)


def _assemble(kind, shape, boundary, nx, ny, periodic) -> LatticeGeometry:
    vid = lambda x, y: y * nx + x
    coords = tuple((x, y) for y in range(ny) for x in range(nx))
    links = []
    lidx = {}
    for y in range(ny):
        for x in range(nx):
            if x + 1 < nx or periodic:
                lidx[(x, y, "x")] = len(links)
                links.append(Link(vid(x, y), vid((x + 1) % nx, y), "x"))
            if y + 1 < ny or periodic:
                lidx[(x, y, "y")] = len(links)
                links.append(Link(vid(x, y), vid(x, (y + 1) % ny), "y"))
    star = [[] for _ in coords]
    for i, lk in enumerate(links):
        star[lk.tail].append((i, -1))
        star[lk.head].append((i, +1))
    plaqs, corners = [], []
    for y in range(ny if periodic else ny - 1):
        for x in range(nx if periodic else nx - 1):
            plaqs.append(((lidx[(x, y, "x")], +1),
                          (lidx[((x + 1) % nx, y, "y")], +1),
                          (lidx[(x, (y + 1) % ny, "x")], -1),
                          (lidx[(x, y, "y")], -1)))
            corners.append(vid(x, y))
    pairs = set()
    for st in star:
        for (a, _), (b, _) in combinations(sorted(st), 2):
            if a != b:
                pairs.add((min(a, b), max(a, b)))
    return LatticeGeometry(kind, shape, boundary, coords, tuple(links),
                           tuple(tuple(sorted(s)) for s in star), tuple(plaqs),
                           tuple(corners), tuple(sorted(pairs)))


def build_square(nx: int, ny: int, boundary: str = "open") -> LatticeGeometry:
    if nx < 2 or ny < 2:
        raise DomainError("square lattice needs nx, ny >= 2")
    if boundary not in ("open", "periodic"):
        raise DomainError(f"unknown boundary {boundary!r}")
    return _assemble("square", (nx, ny), boundary, nx, ny, boundary == "periodic")


def build_ladder(l: int) -> LatticeGeometry:
    """Two rails of l-1 x-links and l rungs; rung k sits at x = k."""
    if l < 2:
        raise DomainError("ladder needs l >= 2")
    return _assemble("ladder", (l,), "open", l, 2, False)


def ladder_rungs(g: LatticeGeometry) -> list[int]:
    if g.kind != "ladder":
        raise DomainError("rungs are defined for ladders")
    return [g.link_index(x, "y") for x in range(g.shape[0])]


def thooft_path(g: LatticeGeometry, target_plaquette: int, convention: str = "alternating") -> Path:
    """Rungs from the left boundary up to the left edge of the target plaquette.

    ``uniform`` gives every rung exponent +1; ``alternating`` gives -1, +1, -1, ...
    """
    if not 0 <= target_plaquette < g.n_plaquettes:
        raise DomainError(f"plaquette {target_plaquette} out of range")
    if convention not in STRING_CONVENTIONS:
        raise DomainError(f"unknown string convention {convention!r}")
    rungs = ladder_rungs(g)[: target_plaquette + 1]
    if convention == "uniform":
        signs = [1] * len(rungs)
    else:
        signs = [-1 if k % 2 == 0 else 1 for k in range(len(rungs))]
    return Path(tuple(zip(rungs, signs)), "thooft_string", convention)


def middle_plaquette(g: LatticeGeometry) -> int:
    return g.n_plaquettes // 2


def wilson_path(g: LatticeGeometry, corner: int, width: int, height: int,
                convention: str = "signed") -> Path:
    """Counter-clockwise rectangular loop starting at ``corner``.

    Under the signed Gauss convention the exponent on a link is its traversal
    sign (raise when walked along its orientation). Under the unsigned one the
    exponents alternate along the loop.
    """
    if width < 1 or height < 1:
        raise DomainError("rectangle needs width, height >= 1")
    if not 0 <= corner < g.n_vertices:
        raise DomainError("corner out of range")
    nx = g.shape[0]
    ny = 2 if g.kind == "ladder" else g.shape[1]
    periodic = g.boundary == "periodic"
    x0, y0 = g.coords[corner]
    if periodic:
        if width >= nx or height >= ny:
            raise DomainError("rectangle wraps onto itself")
    elif x0 + width > nx - 1 or y0 + height > ny - 1:
        raise DomainError("rectangle out of bounds")
    vid = lambda x, y: (y % ny) * nx + (x % nx)
    steps = []
    for k in range(width):
        steps.append((g.link_index(vid(x0 + k, y0), "x"), +1))
    for k in range(height):
        steps.append((g.link_index(vid(x0 + width, y0 + k), "y"), +1))
    for k in reversed(range(width)):
        steps.append((g.link_index(vid(x0 + k, y0 + height), "x"), -1))
    for k in reversed(range(height)):
        steps.append((g.link_index(vid(x0, y0 + k), "y"), -1))
    if convention == "unsigned":
        steps = [(l, s * relabel_sign(g, l)) for l, s in steps]
    elif convention != "signed":
        raise DomainError(f"unknown Gauss convention {convention!r}")
    return Path(tuple(steps), "wilson_loop", convention)


def relabel_sign(g: LatticeGeometry, link: int) -> int:
    """-1 for links whose tail vertex has even parity.

    Flipping m on these links maps the signed Gauss law onto the unsigned one
    (up to an overall sign per vertex) on bipartite lattices.
    """
    return -1 if g.vertex_parity(g.links[link].tail) == 0 else 1


def plaquette_exponents(g: LatticeGeometry, p: int, gauss: str = "signed") -> tuple:
    """Raise/lower exponents of the ring exchange on plaquette p.

    Chosen so the product commutes with every Gauss operator: the traversal
    sign for the signed law, the relabelled (alternating) pattern otherwise.
    """
    if gauss == "signed":
        return tuple((l, s) for l, s in g.plaquettes[p])
    if gauss == "unsigned":
        return tuple((l, s * relabel_sign(g, l)) for l, s in g.plaquettes[p])
    raise DomainError(f"unknown Gauss convention {gauss!r}")


def string_flux(g: LatticeGeometry, path: Path, gauss: str = "signed") -> np.ndarray:
    """Per-plaquette flux charge inserted by a string of e^{i phi s_l S^z_l}.

    Conjugating the ring exchange of plaquette p by the string multiplies it by
    exp(i phi q_p); q_p is returned. A string that measures flux at one
    plaquette only has a single nonzero entry.
    """
    sgn = dict(path.steps)
    q = np.zeros(g.n_plaquettes, dtype=int)
    for p in range(g.n_plaquettes):
        for l, e in plaquette_exponents(g, p, gauss):
            if l in sgn:
                q[p] += sgn[l] * e
    return q


def matching_string_convention(g: LatticeGeometry, target_plaquette: int, gauss: str = "signed") -> str:
    """The string convention whose flux profile is nonzero only at the target."""
    for conv in STRING_CONVENTIONS:
        q = string_flux(g, thooft_path(g, target_plaquette, conv), gauss)
        if np.count_nonzero(q) == 1 and q[target_plaquette] != 0:
            return conv
    raise DomainError("no string convention isolates the target plaquette")


def star_arrays(g: LatticeGeometry, unsigned: bool = False) -> np.ndarray:
    """Dense (n_vertices, n_links) matrix of Gauss signs (all +1 if unsigned)."""
    a = np.zeros((g.n_vertices, g.n_links), dtype=np.int64)
    for v, star in enumerate(g.vertex_star):
        for l, s in star:
            a[v, l] += 1 if unsigned else s
    return a
