"""Global spaces on box meshes, exact discrete differentials, cohomology, and
quadrature-based assembly of mass and (broken) stiffness matrices."""

from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.sparse as sp

from . import exact
from .polyform import FormField, differential, span_contains
from .refelem import dof_matrix, nodal_basis, reference_entities


class AssemblyError(ValueError):
    pass


class QuadratureError(AssemblyError):
    pass


# ---------------------------------------------------------------- global spaces

class GlobalSpace:
    """Element on a mesh with DoFs shared across cells through global entities.

    Global DoFs are numbered entity by entity, (dimension, global id)
    ascending, and within an entity in the element's local DoF order.  All
    local-to-global signs are +1 because every entity is oriented along the
    positive coordinate axes.
    """

    def __init__(self, mesh, element):
        if mesh.n != element.n:
            raise AssemblyError("element and mesh dimensions differ")
        self.mesh = mesh
        self.element = element
        self.nodal = nodal_basis(element)
        ents = reference_entities(mesh.n)
        local_on = {e.key: element.dofs_on(e.key) for ds in ents for e in ds}
        counts = {}
        cell_maps = []
        for K in range(mesh.num_cells):
            cmap = mesh.cell_entities(K)
            cell_maps.append(cmap)
            for key, g in cmap.items():
                c = len(local_on[key])
                gk = (key[0], g)
                if counts.setdefault(gk, c) != c:
                    raise AssemblyError(f"entity {gk} carries different DoF counts in different cells")
        self.offsets = {}
        total = 0
        for gk in sorted(counts):
            self.offsets[gk] = (total, counts[gk])
            total += counts[gk]
        self.ndofs = total
        l2g = np.zeros((mesh.num_cells, element.dim), dtype=np.int64)
        for K, cmap in enumerate(cell_maps):
            for key, g in cmap.items():
                start, _ = self.offsets[(key[0], g)]
                for pos, i in enumerate(local_on[key]):
                    l2g[K, i] = start + pos
        self.l2g = l2g
        self.dof_entity = [None] * total
        for gk, (start, c) in self.offsets.items():
            for j in range(c):
                self.dof_entity[start + j] = gk
        self.boundary = np.array([mesh.is_boundary(*gk) for gk in self.dof_entity], dtype=bool)

    @property
    def dim(self):
        return self.ndofs

    def interior_dofs(self):
        return np.flatnonzero(~self.boundary)

    def component_scale(self):
        """Factors s_c with u_c = s_c * (uhat_c o F^{-1}) for the pushforward."""
        n, k = self.mesh.n, self.element.field_order
        return component_scale(n, k, self.mesh.h)


def component_scale(n, k, h):
    half = [Fraction(x) / 2 for x in h]
    det = Fraction(1)
    for x in half:
        det *= x
    if k == 0 or k == n:
        return [Fraction(1)]
    if n == 3 and k == 1:
        return [1 / half[c] for c in range(n)]
    return [half[c] / det for c in range(n)]


def build_global(mesh, element):
    return GlobalSpace(mesh, element)


# ---------------------------------------------------------------- exact interpolation

def pullback(space, u, cell):
    """Reference-cell field whose pushforward to ``cell`` is the physical field u."""
    shift, scale = space.mesh.cell_map(cell)
    s = space.component_scale()
    comps = [p.compose_affine(shift, scale) * (1 / s[c]) for c, p in enumerate(u.comps)]
    return FormField(u.dim, u.order, comps)


def interpolate_exact(space, u):
    """Global coefficient vector (Fractions) of the interpolant of a polynomial field."""
    e = space.element
    if u.order != e.field_order:
        raise AssemblyError("form order mismatch")
    vals = [None] * space.ndofs
    for K in range(space.mesh.num_cells):
        uh = pullback(space, u, K)
        col = dof_matrix(e.dofs, [uh], e.n)
        for i, g in enumerate(space.l2g[K]):
            v = col[i][0]
            if vals[g] is None:
                vals[g] = v
            elif vals[g] != v:
                raise AssemblyError(f"DoF {g} is not single valued for the given field")
    return vals


# ---------------------------------------------------------------- differentials

@dataclass
class DiffMatrix:
    source: GlobalSpace
    target: GlobalSpace
    entries: dict  # {(row, col): Fraction}
    shape: tuple

    def rows(self):
        dense = [[Fraction(0)] * self.shape[1] for _ in range(self.shape[0])]
        for (i, j), v in self.entries.items():
            dense[i][j] = v
        return dense

    def rank(self):
        if not self.entries:
            return 0
        return exact.rank(self.rows())

    def apply(self, vec):
        out = [Fraction(0)] * self.shape[0]
        for (i, j), v in self.entries.items():
            if vec[j]:
                out[i] += v * vec[j]
        return out

    def compose_is_zero(self, other):
        """True if other * self == 0, with other mapping from self.target."""
        by_row = {}
        for (i, j), v in self.entries.items():
            by_row.setdefault(i, []).append((j, v))
        prod = {}
        for (a, i), w in other.entries.items():
            for j, v in by_row.get(i, ()):
                prod[(a, j)] = prod.get((a, j), 0) + w * v
        return all(v == 0 for v in prod.values())

    def to_scipy(self):
        if not self.entries:
            return sp.csr_matrix(self.shape)
        keys = sorted(self.entries)
        r = [k[0] for k in keys]
        c = [k[1] for k in keys]
        v = [float(self.entries[k]) for k in keys]
        return sp.csr_matrix((v, (r, c)), shape=self.shape)


@lru_cache(maxsize=None)
def local_diff(source, target):
    """Reference matrix of d: target DoFs applied to d of the source duals."""
    if target.field_order != source.field_order + 1 or target.n != source.n:
        raise AssemblyError("elements are not consecutive in a complex")
    duals = nodal_basis(source).duals
    dd = [differential(f) for f in duals]
    if not span_contains(target.shape_basis, dd):
        for j, f in enumerate(dd):
            if not span_contains(target.shape_basis, [f]):
                raise AssemblyError(
                    f"d of basis function {j} of {source.name} leaves {target.name}")
    return dof_matrix(target.dofs, dd, source.n)


def diff_matrix(V, W):
    if V.mesh is not W.mesh:
        raise AssemblyError("spaces live on different meshes")
    mesh = V.mesh
    D = local_diff(V.element, W.element)
    # d commutes with the pushforwards except into top forms, which are
    # pushed forward by composition and pick up 1/det J
    factor = Fraction(1)
    if W.element.field_order == mesh.n:
        for x in mesh.h:
            factor *= 2 / Fraction(x)
    nz = [(i, j, v * factor) for i, row in enumerate(D) for j, v in enumerate(row) if v]
    seen = {}
    for K in range(mesh.num_cells):
        rg, cg = W.l2g[K], V.l2g[K]
        for i, j, v in nz:
            seen.setdefault((int(rg[i]), int(cg[j])), {})[K] = v
    entries = {}
    for (I, J), per_cell in seen.items():
        vals = set(per_cell.values())
        ncells = len(mesh.cells_of(*W.dof_entity[I]))
        if len(vals) != 1 or len(per_cell) != ncells:
            raise AssemblyError(
                f"d of global basis function {J} is not single valued at target DoF {I}")
        entries[(I, J)] = vals.pop()
    return DiffMatrix(V, W, entries, (W.ndofs, V.ndofs))


@dataclass
class CohomologyReport:
    dims: list
    ranks: list
    betti: list
    dd_zero: bool
    constants_in_kernel: bool

    @property
    def exact(self):
        return (self.dd_zero and self.constants_in_kernel
                and self.betti == [1] + [0] * (len(self.betti) - 1))

    def to_dict(self):
        return {"dims": self.dims, "ranks": self.ranks, "betti": self.betti,
                "dd_zero": self.dd_zero, "constants_in_kernel": self.constants_in_kernel,
                "exact": self.exact}


def cohomology_report(spaces):
    ds = [diff_matrix(a, b) for a, b in zip(spaces, spaces[1:])]
    dims = [s.ndofs for s in spaces]
    ranks = [d.rank() for d in ds]
    betti = []
    for k, dim in enumerate(dims):
        rk_out = ranks[k] if k < len(ranks) else 0
        rk_in = ranks[k - 1] if k > 0 else 0
        betti.append(dim - rk_out - rk_in)
    dd_zero = all(a.compose_is_zero(b) for a, b in zip(ds, ds[1:]))
    one = FormField.scalar(_const(spaces[0].mesh.n))
    c = interpolate_exact(spaces[0], one)
    const_ok = bool(ds) and all(v == 0 for v in ds[0].apply(c)) and any(c)
    return CohomologyReport(dims, ranks, betti, dd_zero, const_ok)


def cohomology(spaces):
    return cohomology_report(spaces).betti


def _const(n):
    from .polyform import Polynomial
    return Polynomial.const(n, 1)


# ---------------------------------------------------------------- quadrature

@dataclass(frozen=True)
class Quadrature:
    """Tensor Gauss-Legendre rule on [-1, 1]^n exact to degree ``order`` per axis."""
    n: int
    order: int
    points: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=None)
def quadrature(n, order):
    m = order // 2 + 1
    x, w = np.polynomial.legendre.leggauss(m)
    grids = np.meshgrid(*([x] * n), indexing="ij")
    wg = np.meshgrid(*([w] * n), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=1)
    wts = np.prod(np.stack([g.ravel() for g in wg], axis=1), axis=1)
    return Quadrature(n, order, pts, wts)


def max_axis_degree(fields):
    return max((p.axis_degree(i) for f in fields for p in f.comps for i in range(p.dim)),
               default=0)


def tabulate(fields, points):
    """Values (nb, ncomp, npts) and gradients (nb, ncomp, n, npts) at points."""
    fields = list(fields)
    n = points.shape[1]
    ncomp = len(fields[0].comps)
    monos = {}
    for f in fields:
        for p in f.comps:
            for e in p.terms:
                monos.setdefault(e, len(monos))
    mlist = list(monos)
    E = np.array(mlist, dtype=np.int64).reshape(len(mlist), n)

    def powers(E):
        out = np.ones((E.shape[0], points.shape[0]))
        for a in range(n):
            out *= points[:, a][None, :] ** E[:, a][:, None]
        return out

    C = np.zeros((len(fields), ncomp, len(mlist)))
    for b, f in enumerate(fields):
        for c, p in enumerate(f.comps):
            for e, v in p.terms.items():
                C[b, c, monos[e]] = float(v)
    vals = C @ powers(E)
    grads = np.zeros((len(fields), ncomp, n, points.shape[0]))
    for a in range(n):
        Ea = E.copy()
        coef = Ea[:, a].astype(float)
        Ea[:, a] = np.maximum(Ea[:, a] - 1, 0)
        grads[:, :, a, :] = (C * coef[None, None, :]) @ powers(Ea)
    return vals, grads


class CellTables:
    """Physical basis values/gradients on a reference cell of a uniform mesh."""

    def __init__(self, space, order):
        e = space.element
        n = e.n
        quad = quadrature(n, order)
        self.quad = quad
        vals, grads = tabulate(space.nodal.duals, quad.points)
        s = np.array([float(x) for x in space.component_scale()])
        inv_half = np.array([2.0 / float(x) for x in space.mesh.h])
        self.vals = vals * s[None, :, None]
        self.grads = grads * s[None, :, None, None] * inv_half[None, None, :, None]
        self.detJ = float(np.prod([float(x) / 2 for x in space.mesh.h]))
        self.wts = quad.weights * self.detJ


def physical_points(space, quad):
    """Quadrature points mapped to every cell: (ncells, npts, n)."""
    mesh = space.mesh
    out = np.zeros((mesh.num_cells, len(quad.points), mesh.n))
    for K in range(mesh.num_cells):
        shift, scale = mesh.cell_map(K)
        out[K] = np.array([float(x) for x in shift]) + quad.points * np.array(
            [float(x) for x in scale])
    return out


def _check_order(space, order):
    need = 2 * max_axis_degree(space.element.shape_basis)
    if order is None:
        return need
    if order < need:
        raise QuadratureError(f"quadrature order {order} below required {need}")
    return order


def local_matrix(space, form, order=None):
    order = _check_order(space, order)
    t = CellTables(space, order)
    if form == "mass":
        A = np.einsum("icq,jcq,q->ij", t.vals, t.vals, t.wts)
    elif form == "broken_grad":
        A = np.einsum("icaq,jcaq,q->ij", t.grads, t.grads, t.wts)
    elif form == "broken_sym_grad":
        if t.vals.shape[1] != space.mesh.n:
            raise AssemblyError("symmetric gradient needs a vector field")
        eps = 0.5 * (t.grads + np.swapaxes(t.grads, 1, 2))
        A = np.einsum("icaq,jcaq,q->ij", eps, eps, t.wts)
    else:
        raise AssemblyError(f"unknown bilinear form {form}")
    return 0.5 * (A + A.T)


def scatter_matrix(space, local):
    """Global sparse matrix from one local matrix shared by every cell."""
    nl = local.shape[0]
    rows = np.repeat(space.l2g, nl, axis=1).ravel()
    cols = np.tile(space.l2g, (1, nl)).ravel()
    data = np.tile(local.ravel(), space.mesh.num_cells)
    A = sp.coo_matrix((data, (rows, cols)), shape=(space.ndofs, space.ndofs))
    return A.tocsr()


def assemble_bilinear(space, form, order=None):
    return scatter_matrix(space, local_matrix(space, form, order))


def assemble_load(space, f, order=None):
    """Load vector sum_K int_K f . phi_J for a vectorized callable f(points)->(ncomp, npts)."""
    order = _check_order(space, order)
    t = CellTables(space, order)
    X = physical_points(space, t.quad)
    b = np.zeros(space.ndofs)
    for K in range(space.mesh.num_cells):
        fv = np.atleast_2d(f(X[K]))
        loc = np.einsum("icq,cq,q->i", t.vals, fv, t.wts)
        np.add.at(b, space.l2g[K], loc)
    return b


def evaluate(space, coeffs, order):
    """Values and gradients of a global function at all cell quadrature points."""
    t = CellTables(space, order)
    C = coeffs[space.l2g]
    vals = np.einsum("ki,icq->kcq", C, t.vals)
    grads = np.einsum("ki,icaq->kcaq", C, t.grads)
    return t, vals, grads


# ---------------------------------------------------------------- complexes

def complex_elements(family, n, r):
    """Elements of a finite element de Rham complex indexed by its 0-form degree."""
    from .refelem import build_element
    if family in ("Qminus", "Hermite", "Sminus", "TrimmedAdini"):
        return [build_element(family, n, k, r) for k in range(n + 1)]
    if family in ("S", "Adini"):
        return [build_element(family, n, k, r - k) for k in range(n + 1)]
    if family == "ReducedAdini":
        if n != 2 or r != 3:
            raise AssemblyError("the reduced complex exists only for n=2, r=3")
        return [build_element("Adini", 2, 0, 3), build_element("ReducedAdini", 2, 1, 2),
                build_element("ReducedAdini", 2, 2, 1)]
    raise AssemblyError(f"no complex for family {family}")


def build_complex(mesh, family, r):
    return [GlobalSpace(mesh, e) for e in complex_elements(family, mesh.n, r)]
