"""Structured meshes of axis-aligned boxes with entity tables and incidence."""

import json
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product

from .refelem import reference_entities


class MeshError(ValueError):
    pass


@dataclass(frozen=True)
class EntityFrame:
    """Orientation and affine data of a global entity.

    Tangents and normals are positive coordinate axes; ``lo``/``hi`` give the
    physical bounding box of the entity.
    """
    id: int
    dim: int
    tangents: tuple
    normals: tuple
    lo: tuple
    hi: tuple


class CubicalMesh:
    """Tensor-product box mesh.

    A global entity of dimension d is identified by its free axes and the
    lattice index of its lowest corner; ids are assigned lexicographically
    in that (free axes, corner) order.
    """

    def __init__(self, n, cells_per_axis, box):
        if n not in (2, 3):
            raise MeshError("only 2D and 3D meshes are supported")
        cells_per_axis = tuple(int(c) for c in cells_per_axis)
        box = tuple((Fraction(lo), Fraction(hi)) for lo, hi in box)
        if len(cells_per_axis) != n or len(box) != n:
            raise MeshError("cells_per_axis and box must have one entry per axis")
        if min(cells_per_axis) < 1:
            raise MeshError("need at least one cell per axis")
        if any(lo >= hi for lo, hi in box):
            raise MeshError("degenerate box")
        self.n = n
        self.N = cells_per_axis
        self.box = box
        self.h = tuple((hi - lo) / N for (lo, hi), N in zip(box, cells_per_axis))
        self._ids = []
        self._keys = []
        for d in range(n + 1):
            ids, keys = {}, []
            for free in combinations(range(n), d):
                ranges = [range(self.N[a]) if a in free else range(self.N[a] + 1)
                          for a in range(n)]
                for corner in product(*ranges):
                    ids[(free, corner)] = len(keys)
                    keys.append((free, corner))
            self._ids.append(ids)
            self._keys.append(keys)
        self._cells_of = None

    @classmethod
    def from_json(cls, text):
        cfg = json.loads(text) if isinstance(text, str) else text
        return cls(cfg["n"], cfg["cells_per_axis"], cfg["box"])

    def num_entities(self, d):
        return len(self._keys[d])

    @property
    def num_cells(self):
        return self.num_entities(self.n)

    def entity_key(self, d, gid):
        return self._keys[d][gid]

    def entity_id(self, free, corner):
        return self._ids[len(free)][(tuple(free), tuple(corner))]

    def is_boundary(self, d, gid):
        if d == self.n:
            return False
        free, corner = self._keys[d][gid]
        return any(corner[a] in (0, self.N[a]) for a in range(self.n) if a not in free)

    def cell_corner(self, cell):
        return self._keys[self.n][cell][1]

    def cell_entity(self, cell, local):
        """Global id of the reference entity ``local`` (an Entity) of a cell."""
        c = self.cell_corner(cell)
        corner = list(c)
        for ax, s in local.fixed:
            corner[ax] = c[ax] + (1 if s > 0 else 0)
        return self._ids[local.dim][(local.free, tuple(corner))]

    def cell_entities(self, cell):
        """{(d, local id): global id} for all entities of a cell."""
        return {e.key: self.cell_entity(cell, e)
                for ents in reference_entities(self.n) for e in ents}

    def cells_of(self, d, gid):
        if self._cells_of is None:
            table = [dict() for _ in range(self.n + 1)]
            for K in range(self.num_cells):
                for (dd, _), g in self.cell_entities(K).items():
                    table[dd].setdefault(g, []).append(K)
            self._cells_of = table
        return self._cells_of[d].get(gid, [])

    def cell_map(self, cell):
        """(shift, scale) with x = shift + scale * xhat on the reference cell."""
        c = self.cell_corner(cell)
        shift, scale = [], []
        for a in range(self.n):
            lo = self.box[a][0] + self.h[a] * c[a]
            shift.append(lo + self.h[a] / 2)
            scale.append(self.h[a] / 2)
        return tuple(shift), tuple(scale)

    def frame(self, d, gid):
        free, corner = self._keys[d][gid]
        lo = tuple(self.box[a][0] + self.h[a] * corner[a] for a in range(self.n))
        hi = tuple(l + (self.h[a] if a in free else 0) for a, l in enumerate(lo))
        normals = tuple(a for a in range(self.n) if a not in free)
        return EntityFrame(gid, d, tuple(free), normals, lo, hi)

    def vertex_coords(self, gid):
        return self.frame(0, gid).lo

    def euler_characteristic(self):
        return sum((-1) ** d * self.num_entities(d) for d in range(self.n + 1))

    def tables(self):
        return {"n": self.n, "cells_per_axis": list(self.N),
                "entities": [[[list(f), list(c)] for f, c in keys] for keys in self._keys]}


def build_mesh(n, cells_per_axis, box=None):
    if box is None:
        box = [(0, 1)] * n
    return CubicalMesh(n, cells_per_axis, box)


def jump_pairs(mesh):
    """Interior facets with (left, right) cells; left lies on the negative side."""
    n = mesh.n
    out = []
    for gid in range(mesh.num_entities(n - 1)):
        if mesh.is_boundary(n - 1, gid):
            continue
        free, corner = mesh.entity_key(n - 1, gid)
        normal = next(a for a in range(n) if a not in free)
        right = tuple(corner)
        left = list(corner)
        left[normal] -= 1
        allfree = tuple(range(n))
        out.append((gid, mesh.entity_id(allfree, tuple(left)), mesh.entity_id(allfree, right)))
    return out


def parse_mesh_spec(spec):
    """'2x3' -> (2, 3)."""
    try:
        parts = tuple(int(p) for p in spec.lower().split("x"))
    except ValueError:
        raise MeshError(f"bad mesh spec {spec!r}")
    if len(parts) not in (2, 3) or min(parts) < 1:
        raise MeshError(f"bad mesh spec {spec!r}")
    return parts
