"""Reference elements on [-1, 1]^n: entities, DoF functionals, the element
families, Vandermonde matrices, nodal bases and bubble spaces."""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations, product

from . import exact
from .polyform import (FormField, Polynomial, differential, exps_box, exps_homogeneous,
                       exps_total, full_P, glex_key, homogeneous_forms, num_components,
                       qminus_space, reduce_span, serendipity_space, sigma, span_basis,
                       SpaceSpec, trimmed_space)

FAMILIES = ("Qminus", "S", "Sminus", "Hermite", "Adini", "TrimmedAdini",
            "ReducedAdini", "ComponentPx")


class ElementError(ValueError):
    pass


class UnisolvenceError(ElementError):
    def __init__(self, message, kernel=None):
        super().__init__(message)
        self.kernel = kernel


# ---------------------------------------------------------------- entities

@dataclass(frozen=True)
class Entity:
    dim: int
    id: int
    free: tuple
    fixed: tuple  # ((axis, +-1), ...)

    @property
    def key(self):
        return (self.dim, self.id)

    def fixed_map(self):
        return dict(self.fixed)

    def point(self):
        """Coordinates of a vertex (dim 0 only)."""
        f = self.fixed_map()
        return tuple(f[a] for a in range(len(self.free) + len(self.fixed)))

    def contains(self, other):
        """True if ``other`` lies in the closure of this entity."""
        if not set(other.free) <= set(self.free):
            return False
        of = other.fixed_map()
        return all(of.get(a) == v for a, v in self.fixed)


@lru_cache(maxsize=None)
def reference_entities(n):
    """Entities of [-1,1]^n grouped by dimension, with deterministic ids."""
    out = []
    for d in range(n + 1):
        ents = []
        for free in combinations(range(n), d):
            fixed_axes = [a for a in range(n) if a not in free]
            for signs in product((-1, 1), repeat=len(fixed_axes)):
                ents.append(Entity(d, len(ents), free, tuple(zip(fixed_axes, signs))))
        out.append(tuple(ents))
    return tuple(out)


def entity(n, key):
    return reference_entities(n)[key[0]][key[1]]


def trace_components(n, k, free):
    """Proxy components of a k-form whose trace on the entity is nonzero."""
    s = set(free)
    return tuple(c for c in range(num_components(n, k)) if set(sigma(n, k, c)) <= s)


# ---------------------------------------------------------------- Legendre

@lru_cache(maxsize=None)
def legendre(m):
    """Legendre polynomial of degree m in one variable."""
    if m == 0:
        return Polynomial.const(1, 1)
    t = Polynomial.var(1, 0)
    p0, p1 = Polynomial.const(1, 1), t
    for j in range(1, m):
        p0, p1 = p1, (t * p1 * (2 * j + 1) - p0 * j) * Fraction(1, j + 1)
    return p1


def legendre_product(exps):
    d = len(exps)
    out = Polynomial.const(d, 1)
    for i, a in enumerate(exps):
        out = out * legendre(a).embed((i,), d)
    return out


def legendre_box(degrees):
    return [legendre_product(e) for e in exps_box(degrees)]


def legendre_total(d, r):
    return [legendre_product(e) for e in exps_total(d, r)]


# ---------------------------------------------------------------- DoFs

KIND_RANK = {"VertexEval": 0, "VertexDeriv": 1, "VertexVecEval": 2,
             "EdgeMoment": 3, "FaceMoment": 3, "InteriorMoment": 3}


@dataclass(frozen=True)
class DofFunctional:
    """One linear functional on FormFields.

    For vertex kinds ``axis`` is the derivative direction or vector component.
    For moments ``comps`` lists the proxy components paired with ``weights``
    (polynomials in the entity's intrinsic coordinates, free axes ascending)
    and the value is sum_j int_entity u[comps[j]] * weights[j].
    ``degree`` records the Legendre degree of edge weights.
    """
    kind: str
    entity: tuple
    axis: int = None
    comps: tuple = ()
    weights: tuple = ()
    trace: str = "scalar"
    degree: int = None

    def describe(self):
        out = {"kind": self.kind, "entity": list(self.entity)}
        if self.axis is not None:
            out["axis"] = self.axis + 1
        if self.weights:
            out["trace"] = self.trace
            out["components"] = list(self.comps)
            out["weights"] = [w.to_json() for w in self.weights]
        return out


def moment_kind(d, n):
    if d == 1:
        return "EdgeMoment"
    if d == n:
        return "InteriorMoment"
    return "FaceMoment"


def _monomial_integral(e):
    v = Fraction(1)
    for a in e:
        if a % 2:
            return Fraction(0)
        v *= Fraction(2, a + 1)
    return v


def dof_on_monomial(n, dof, comp, e):
    ent = entity(n, dof.entity)
    if dof.kind in ("VertexEval", "VertexVecEval", "VertexDeriv"):
        want = dof.axis if dof.kind == "VertexVecEval" else 0
        if comp != want:
            return Fraction(0)
        pt = ent.point()
        e = list(e)
        coef = Fraction(1)
        if dof.kind == "VertexDeriv":
            i = dof.axis
            if e[i] == 0:
                return Fraction(0)
            coef = Fraction(e[i])
            e[i] -= 1
        for x, a in zip(pt, e):
            if a % 2 and x < 0:
                coef = -coef
        return coef
    total = Fraction(0)
    for c, w in zip(dof.comps, dof.weights):
        if c != comp:
            continue
        base = Fraction(1)
        for ax, val in ent.fixed:
            if e[ax] % 2 and val < 0:
                base = -base
        inner = [e[a] for a in ent.free]
        for f, q in w.terms.items():
            total += base * q * _monomial_integral([a + b for a, b in zip(inner, f)])
    return total


def apply_dof(dof, u, n=None):
    n = u.dim if n is None else n
    if u.dim != n:
        raise ElementError("dimension mismatch")
    if dof.kind in ("VertexVecEval",) and dof.axis >= len(u.comps):
        raise ElementError("vector evaluation of a scalar field")
    if dof.kind != "VertexVecEval" and dof.kind.startswith("Vertex") and len(u.comps) != 1:
        raise ElementError("scalar DoF applied to a vector field")
    for c in dof.comps:
        if c >= len(u.comps):
            raise ElementError("moment component out of range")
    return sum((c * dof_on_monomial(n, dof, i, e) for (i, e), c in u.coords().items()),
               Fraction(0))


def _moments(n, ent, comps, vectors, trace, degrees=None):
    """DoFs pairing ``comps`` with each weight vector, normalized by the entity measure."""
    scale = Fraction(1, 2 ** ent.dim)
    out = []
    for i, vec in enumerate(vectors):
        out.append(DofFunctional(moment_kind(ent.dim, n), ent.key, comps=tuple(comps),
                                 weights=tuple(w * scale for w in vec), trace=trace,
                                 degree=None if degrees is None else degrees[i]))
    return out


def _trace_name(n, k, d):
    if k == 0 or k == n:
        return "scalar"
    if d == n:
        return "interior"
    if (n, k) == (3, 1):
        return "tangential" if d == 1 else "tangential-cross"
    return "normal"


def _scalar_per_comp(ncomp, scalars):
    """Vectors with one scalar weight in a single component slot."""
    out = []
    d = scalars[0].dim if scalars else 0
    for j in range(ncomp):
        for s in scalars:
            vec = [Polynomial(d)] * ncomp
            vec[j] = s
            out.append(vec)
    return out


def _independent(vectors, d):
    """Canonical basis of the span of weight vectors (tuples of d-variate polys)."""
    if not vectors:
        return []
    m = len(vectors[0])
    fields = [FormField(d, 1 if m > 1 else 0, list(v)) if m in (1, d) else None
              for v in vectors]
    basis, _ = reduce_span(fields)
    return [list(f.comps) for f in basis]


# weight rules: each returns a list of vectors (one polynomial per trace comp)

def _w_qminus(n, k, r, ent, comps):
    vecs = []
    m = len(comps)
    for j, c in enumerate(comps):
        s = set(sigma(n, k, c))
        degs = [r - 1 if a in s else r - 2 for a in ent.free]
        for w in legendre_box(degs):
            vec = [Polynomial(ent.dim)] * m
            vec[j] = w
            vecs.append(vec)
    return vecs


def _w_S(n, k, r, ent, comps):
    j = ent.dim - k
    return _scalar_per_comp(len(comps), legendre_total(ent.dim, r - 2 * j))


def _dH_vectors(n, k, r, ent):
    """Weights from d H_{r-2j+1} Lambda^{j-1}(f), paired through the wedge product."""
    d = ent.dim
    j = d - k
    deg = r - 2 * j + 1
    if j < 1 or deg < 0:
        return []
    if j == 1:
        hs = [Polynomial.monomial(e) for e in exps_homogeneous(d, deg)]
        grads = [[h.diff(i) for i in range(d)] for h in hs]
        if d == 2 and n == 3:
            # tangential trace wedge grad h
            return [[g[1], -g[0]] for g in grads]
        if d == 1:
            return [[g[0]] for g in grads]
        return grads
    if j == 2:
        if d == 2:
            # rot of a 1-form: all homogeneous scalars of degree deg - 1
            return [[Polynomial.monomial(e)] for e in exps_homogeneous(d, deg - 1)]
        # d == 3, k == 1: weights curl h
        return [list(differential(f).comps) for f in homogeneous_forms(3, 1, deg)]
    if j == 3:
        return [[Polynomial.monomial(e)] for e in exps_homogeneous(d, deg - 1)]
    return []


def _w_Sminus(n, k, r, ent, comps):
    if k == 0:
        return _w_S(n, k, r, ent, comps)
    j = ent.dim - k
    base = _scalar_per_comp(len(comps), legendre_total(ent.dim, r - 2 * j - 1))
    extra = _dH_vectors(n, k, r, ent)
    if not extra:
        return base
    return base + _independent(extra, ent.dim)


def _edge_weights(ent, comps, deg):
    ws = legendre_total(1, deg)
    return [[w] for w in ws], list(range(len(ws)))


def _vertex_dofs(n, k, ent, derivs):
    if k == 0:
        out = [DofFunctional("VertexEval", ent.key)]
        if derivs:
            out += [DofFunctional("VertexDeriv", ent.key, axis=i) for i in range(n)]
        return out
    if k == 1 and derivs:
        return [DofFunctional("VertexVecEval", ent.key, axis=i) for i in range(n)]
    return []


def assemble_dofs(n, k, rule, r, vertex_derivs=False, edge_degree=None):
    """DoF list from a weight rule.

    ``vertex_derivs`` adds the Hermite-type vertex DoFs (derivatives for
    k = 0, vector values for k = 1); ``edge_degree`` overrides the edge index
    space by Legendre weights of that degree.
    """
    dofs = []
    ents = reference_entities(n)
    for d in range(n + 1):
        for ent in ents[d]:
            if d == 0:
                dofs += _vertex_dofs(n, k, ent, vertex_derivs)
                continue
            comps = trace_components(n, k, ent.free)
            if not comps:
                continue
            trace = _trace_name(n, k, d)
            if d == 1 and (edge_degree is not None or rule in (_w_qminus, _w_S, _w_Sminus)):
                if edge_degree is None:
                    vecs = rule(n, k, r, ent, comps)
                    degs = None
                    if rule is _w_qminus:
                        degs = list(range(len(vecs)))
                    else:
                        degs = [max((sum(e) for e in v[0].terms), default=0) for v in vecs]
                    dofs += _moments(n, ent, comps, vecs, trace, degs)
                else:
                    vecs, degs = _edge_weights(ent, comps, edge_degree)
                    dofs += _moments(n, ent, comps, vecs, trace, degs)
                continue
            dofs += _moments(n, ent, comps, rule(n, k, r, ent, comps), trace)
    return dofs


def sort_dofs(dofs):
    return sorted(dofs, key=lambda d: (d.entity, KIND_RANK[d.kind],
                                       -1 if d.axis is None else d.axis))


# ---------------------------------------------------------------- elements

@dataclass(frozen=True)
class ElementDef:
    family: str
    n: int
    k: int
    r: int
    shape_basis: tuple
    dofs: tuple
    field_order: int = None

    def __post_init__(self):
        if self.field_order is None:
            object.__setattr__(self, "field_order", self.k)
        if len(self.dofs) != len(self.shape_basis):
            raise ElementError(
                f"{len(self.dofs)} DoFs for a {len(self.shape_basis)}-dimensional shape space")
        nents = [len(x) for x in reference_entities(self.n)]
        for d in self.dofs:
            if not (0 <= d.entity[0] <= self.n and 0 <= d.entity[1] < nents[d.entity[0]]):
                raise ElementError(f"DoF on nonexistent entity {d.entity}")

    @property
    def name(self):
        return f"{self.family}[n={self.n},k={self.k},r={self.r}]"

    @property
    def dim(self):
        return len(self.shape_basis)

    def dofs_on(self, key):
        return [i for i, d in enumerate(self.dofs) if d.entity == key]

    def dof_table(self):
        ents = reference_entities(self.n)
        return [[len(self.dofs_on(e.key)) for e in ents[d]] for d in range(self.n + 1)]

    def interior_count(self):
        return sum(1 for d in self.dofs if d.entity[0] == self.n)


def legal_degrees(family, n, k):
    """Smallest legal degree for a family at (n, k), or None if undefined."""
    if n not in (2, 3) or not 0 <= k <= n:
        return None
    if family == "Qminus":
        return 1
    if family == "S":
        return 0 if k == n else 1
    if family == "Sminus":
        return 1
    if family == "Hermite":
        return 3
    if family == "Adini":
        return max(3 - k, 0) if k < n else 0
    if family == "TrimmedAdini":
        return 3
    if family == "ReducedAdini":
        return {1: 2, 2: 1}.get(k) if n == 2 else None
    if family == "ComponentPx":
        return 2 if k == 1 else None
    return None


def check_legal(family, n, k, r):
    if family not in FAMILIES:
        raise ElementError(f"unknown family {family}")
    lo = legal_degrees(family, n, k)
    if lo is None:
        raise ElementError(f"{family} undefined for n={n}, k={k}")
    if r < lo:
        raise ElementError(f"{family} needs r >= {lo} for n={n}, k={k}")
    if family == "ReducedAdini" and r != lo:
        raise ElementError("ReducedAdini exists only at (k=1, r=2) and (k=2, r=1)")
    if family == "ComponentPx" and r != 2:
        raise ElementError("ComponentPx exists only at r=2")


def reduced_adini_shape():
    x, y = Polynomial.var(2, 0), Polynomial.var(2, 1)
    curl = lambda p: differential(FormField.scalar(p))
    gens = full_P(2, 1, 1) + [curl(p) for p in (x ** 3, y ** 3, x * x * y, x * y * y,
                                                x ** 3 * y, x * y ** 3)]
    return reduce_span(gens)[0]


@lru_cache(maxsize=None)
def build_element(family, n, k, r):
    check_legal(family, n, k, r)
    if family == "ComponentPx":
        from .nonconform import build_component_element
        return build_component_element(n)
    top = k == n
    if family == "Qminus":
        shape = qminus_space(n, k, r)
        dofs = assemble_dofs(n, k, _w_qminus, r)
    elif family == "S":
        shape = serendipity_space(n, k, r)
        dofs = assemble_dofs(n, k, _w_S, r)
    elif family == "Sminus":
        shape = trimmed_space(n, k, r)
        dofs = assemble_dofs(n, k, _w_Sminus, r)
    elif family == "Hermite":
        shape = qminus_space(n, k, r)
        if k == 0:
            dofs = assemble_dofs(n, k, _w_qminus, r, True, r - 4)
        elif k == 1:
            dofs = assemble_dofs(n, k, _w_qminus, r, True, r - 3)
        else:
            dofs = assemble_dofs(n, k, _w_qminus, r)
    elif family == "Adini":
        shape = serendipity_space(n, k, r)
        if k == 0:
            dofs = assemble_dofs(n, k, _w_S, r, True, r - 4)
        elif k == 1:
            dofs = assemble_dofs(n, k, _w_S, r, True, r - 2)
        else:
            dofs = assemble_dofs(n, k, _w_S, r)
    elif family == "TrimmedAdini":
        if k == 0:
            return _relabel(build_element("Adini", n, 0, r), "TrimmedAdini")
        shape = trimmed_space(n, k, r)
        if k == 1:
            dofs = assemble_dofs(n, k, _w_Sminus, r, True, r - 3)
        else:
            dofs = assemble_dofs(n, k, _w_Sminus, r)
    elif family == "ReducedAdini":
        if k == 1:
            shape = reduced_adini_shape()
            dofs = assemble_dofs(2, 1, _w_S, 0, True, 0)
            dofs = [d for d in dofs if d.entity[0] < 2]
        else:
            shape = full_P(2, 2, 0)
            dofs = assemble_dofs(2, 2, _w_S, 0)
    else:
        raise ElementError(family)
    del top
    return ElementDef(family, n, k, r, tuple(shape), tuple(sort_dofs(dofs)))


def _relabel(e, family):
    return ElementDef(family, e.n, e.k, e.r, e.shape_basis, e.dofs, e.field_order)


# ---------------------------------------------------------------- linear algebra

def dof_matrix(dofs, fields, n):
    """M[i][j] = dofs[i](fields[j])."""
    coords = [f.coords() for f in fields]
    return [[sum((c * dof_on_monomial(n, d, i, e) for (i, e), c in cf.items()), Fraction(0))
             for cf in coords] for d in dofs]


def vandermonde(e):
    if len(e.dofs) != len(e.shape_basis):
        raise ElementError("non-square Vandermonde")
    return dof_matrix(e.dofs, e.shape_basis, e.n)


def combine(fields, coeffs):
    fields = list(fields)
    out = None
    for f, c in zip(fields, coeffs):
        if c:
            out = f * c if out is None else out + f * c
    if out is None:
        out = FormField.zero(fields[0].dim, fields[0].order)
    return out


@dataclass(frozen=True)
class NodalBasis:
    element: ElementDef
    duals: tuple


@lru_cache(maxsize=None)
def nodal_basis(e):
    M = vandermonde(e)
    if e.dim == 0:
        return NodalBasis(e, ())
    if exact.rank(M) < e.dim:
        ker = exact.nullspace(M)[0]
        v = combine(e.shape_basis, ker)
        raise UnisolvenceError(f"{e.name} is not unisolvent; kernel vector {v}", v)
    Minv = exact.inverse(M)
    duals = tuple(combine(e.shape_basis, [Minv[j][i] for j in range(e.dim)])
                  for i in range(e.dim))
    return NodalBasis(e, duals)


def is_unisolvent(e):
    return exact.rank(vandermonde(e)) == e.dim


def bubble_space(e):
    rows = [row for d, row in zip(e.dofs, vandermonde(e)) if d.entity[0] < e.n]
    if not rows:
        return list(reduce_span(e.shape_basis)[0])
    ker = exact.nullspace(rows)
    return reduce_span([combine(e.shape_basis, v) for v in ker])[0] if ker else []


def interior_weight_vectors(e, key):
    """Weight vectors of the moment DoFs on an entity, as FormFields where possible."""
    return [d for d in e.dofs if d.entity == key]


# ---------------------------------------------------------------- reports

def element_info(e):
    return {
        "family": e.family, "n": e.n, "k": e.k, "r": e.r, "dim": e.dim,
        "dof_table": {str(d): counts for d, counts in enumerate(e.dof_table())},
        "dofs": [d.describe() for d in e.dofs],
        "shape_basis": [f.to_json() for f in e.shape_basis],
    }
