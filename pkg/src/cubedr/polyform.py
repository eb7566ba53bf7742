"""Exact polynomials, vector-proxy forms, d and the Koszul operator, and the
polynomial spaces used by the cubical element families.

Conventions
-----------
Reference cell is [-1, 1]^n with n in {2, 3}.  Forms are stored as vector
proxies:

* n = 2:  0-form (scalar) --curl--> 1-form (vector, div proxy) --div--> 2-form
* n = 3:  0-form --grad--> 1-form --curl--> 2-form --div--> 3-form

with ``curl u = (-d_y u, d_x u)`` in 2D.
"""

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations, product
from math import comb

from . import exact


def glex_key(e):
    return (sum(e), tuple(e))


class Polynomial:
    """Multivariate polynomial with rational coefficients.

    ``terms`` maps exponent tuples to nonzero ``Fraction`` coefficients.
    Instances are treated as immutable.
    """

    __slots__ = ("dim", "terms", "_hash")

    def __init__(self, dim, terms=None):
        self.dim = dim
        clean = {}
        if terms:
            for e, c in terms.items():
                e = tuple(int(a) for a in e)
                if len(e) != dim or min(e, default=0) < 0:
                    raise ValueError(f"bad exponent {e} for dim {dim}")
                c = Fraction(c)
                if c:
                    clean[e] = clean.get(e, 0) + c
            clean = {e: c for e, c in clean.items() if c}
        self.terms = clean
        self._hash = None

    @classmethod
    def monomial(cls, e, coeff=1):
        return cls(len(e), {tuple(e): coeff})

    @classmethod
    def const(cls, dim, c):
        return cls(dim, {(0,) * dim: c})

    @classmethod
    def var(cls, dim, i):
        e = [0] * dim
        e[i] = 1
        return cls(dim, {tuple(e): 1})

    def is_zero(self):
        return not self.terms

    def degree(self):
        return max((sum(e) for e in self.terms), default=-1)

    def axis_degree(self, i):
        return max((e[i] for e in self.terms), default=-1)

    def __eq__(self, other):
        if isinstance(other, Polynomial):
            return self.dim == other.dim and self.terms == other.terms
        if isinstance(other, (int, Fraction)):
            return self == Polynomial.const(self.dim, other)
        return NotImplemented

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.dim, frozenset(self.terms.items())))
        return self._hash

    def __repr__(self):
        if not self.terms:
            return "0"
        names = "xyz" if self.dim <= 3 else [f"x{i}" for i in range(self.dim)]
        parts = []
        for e in sorted(self.terms, key=glex_key):
            c = self.terms[e]
            mono = "*".join(f"{names[i]}^{a}" if a > 1 else names[i]
                            for i, a in enumerate(e) if a)
            parts.append(f"{c}*{mono}" if mono else str(c))
        return " + ".join(parts)

    def _coerce(self, other):
        if isinstance(other, Polynomial):
            if other.dim != self.dim:
                raise ValueError("dimension mismatch")
            return other
        return Polynomial.const(self.dim, other)

    def __add__(self, other):
        other = self._coerce(other)
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, 0) + c
        return Polynomial(self.dim, t)

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(self.dim, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        if not isinstance(other, Polynomial):
            other = Fraction(other)
            return Polynomial(self.dim, {e: c * other for e, c in self.terms.items()})
        other = self._coerce(other)
        t = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                t[e] = t.get(e, 0) + c1 * c2
        return Polynomial(self.dim, t)

    __rmul__ = __mul__

    def __pow__(self, m):
        out = Polynomial.const(self.dim, 1)
        for _ in range(m):
            out = out * self
        return out

    def diff(self, i):
        t = {}
        for e, c in self.terms.items():
            if e[i]:
                f = list(e)
                f[i] -= 1
                t[tuple(f)] = c * e[i]
        return Polynomial(self.dim, t)

    def __call__(self, *point):
        if len(point) == 1 and isinstance(point[0], (tuple, list)):
            point = point[0]
        total = Fraction(0)
        for e, c in self.terms.items():
            v = c
            for x, a in zip(point, e):
                if a:
                    v *= Fraction(x) ** a
            total += v
        return total

    def compose_affine(self, shift, scale):
        """Return p(shift + scale * x) as a polynomial in x."""
        out = Polynomial(self.dim)
        lin = [Polynomial(self.dim, {(0,) * self.dim: shift[i]}) +
               Polynomial.var(self.dim, i) * scale[i] for i in range(self.dim)]
        for e, c in self.terms.items():
            term = Polynomial.const(self.dim, c)
            for i, a in enumerate(e):
                if a:
                    term = term * lin[i] ** a
            out = out + term
        return out

    def restrict(self, free, fixed):
        """Trace on the entity with free axes ``free`` and ``fixed`` = {axis: value}.

        The result is a polynomial in ``len(free)`` intrinsic variables.
        """
        t = {}
        for e, c in self.terms.items():
            v = c
            for ax, val in fixed.items():
                if e[ax]:
                    v *= Fraction(val) ** e[ax]
            if v:
                f = tuple(e[a] for a in free)
                t[f] = t.get(f, 0) + v
        return Polynomial(len(free), t)

    def embed(self, free, dim):
        """Lift a polynomial in intrinsic variables to ``dim`` variables."""
        t = {}
        for e, c in self.terms.items():
            f = [0] * dim
            for a, ax in zip(e, free):
                f[ax] = a
            t[tuple(f)] = c
        return Polynomial(dim, t)

    def integrate_cube(self):
        """Exact integral over [-1, 1]^dim."""
        total = Fraction(0)
        for e, c in self.terms.items():
            if all(a % 2 == 0 for a in e):
                v = c
                for a in e:
                    v *= Fraction(2, a + 1)
                total += v
        return total

    def to_json(self):
        return [{"exponents": list(e), "num": str(c.numerator), "den": str(c.denominator)}
                for e, c in sorted(self.terms.items(), key=lambda kv: glex_key(kv[0]))]

    @classmethod
    def from_json(cls, dim, data):
        return cls(dim, {tuple(d["exponents"]): Fraction(int(d["num"]), int(d["den"]))
                         for d in data})


def cube_monomial_integral(e):
    v = Fraction(1)
    for a in e:
        if a % 2:
            return Fraction(0)
        v *= Fraction(2, a + 1)
    return v


def num_components(dim, order):
    if order in (0, dim):
        return 1
    return dim


def sigma(dim, order, comp):
    """Axes of the basis form dx_sigma attached to a proxy component."""
    if order == 0:
        return ()
    if order == dim:
        return tuple(range(dim))
    if dim == 3 and order == 1:
        return (comp,)
    if dim == 3 and order == 2:
        return tuple(a for a in range(3) if a != comp)
    if dim == 2 and order == 1:
        # div proxy: u = u0 dy - u1 dx
        return (1 - comp,)
    raise ValueError((dim, order))


def free_axes(dim, order, comp):
    s = sigma(dim, order, comp)
    return tuple(a for a in range(dim) if a not in s)


class FormField:
    """A k-form on R^n stored as a tuple of Polynomial components."""

    __slots__ = ("dim", "order", "comps", "_hash")

    def __init__(self, dim, order, comps):
        comps = tuple(comps)
        if not 0 <= order <= dim:
            raise ValueError(f"order {order} invalid for dim {dim}")
        if len(comps) != num_components(dim, order):
            raise ValueError(f"{len(comps)} components for a {order}-form in {dim}D")
        for c in comps:
            if c.dim != dim:
                raise ValueError("component dimension mismatch")
        self.dim = dim
        self.order = order
        self.comps = comps
        self._hash = None

    @classmethod
    def scalar(cls, p, order=0):
        return cls(p.dim, order, [p])

    @classmethod
    def zero(cls, dim, order):
        return cls(dim, order, [Polynomial(dim)] * num_components(dim, order))

    @classmethod
    def unit(cls, dim, order, comp, p):
        comps = [Polynomial(dim)] * num_components(dim, order)
        comps[comp] = p
        return cls(dim, order, comps)

    def is_zero(self):
        return all(c.is_zero() for c in self.comps)

    def degree(self):
        return max(c.degree() for c in self.comps)

    def __eq__(self, other):
        return (isinstance(other, FormField) and self.dim == other.dim
                and self.order == other.order and self.comps == other.comps)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.dim, self.order, self.comps))
        return self._hash

    def __repr__(self):
        return f"FormField({self.dim}, {self.order}, {list(self.comps)})"

    def _check(self, other):
        if (self.dim, self.order) != (other.dim, other.order):
            raise ValueError("form shape mismatch")

    def __add__(self, other):
        self._check(other)
        return FormField(self.dim, self.order, [a + b for a, b in zip(self.comps, other.comps)])

    def __sub__(self, other):
        self._check(other)
        return FormField(self.dim, self.order, [a - b for a, b in zip(self.comps, other.comps)])

    def __neg__(self):
        return FormField(self.dim, self.order, [-a for a in self.comps])

    def __mul__(self, s):
        return FormField(self.dim, self.order, [a * s for a in self.comps])

    __rmul__ = __mul__

    def coords(self):
        """Sparse coordinate dict {(comp, exponent): coeff}."""
        return {(i, e): c for i, p in enumerate(self.comps) for e, c in p.terms.items()}

    def to_json(self):
        return {"dim": self.dim, "order": self.order,
                "components": [c.to_json() for c in self.comps]}

    @classmethod
    def from_json(cls, data):
        return cls(data["dim"], data["order"],
                   [Polynomial.from_json(data["dim"], c) for c in data["components"]])


def differential(u):
    n, k = u.dim, u.order
    if k >= n:
        raise ValueError("d of a top-degree form")
    c = u.comps
    if n == 2:
        if k == 0:
            return FormField(2, 1, [-c[0].diff(1), c[0].diff(0)])
        return FormField(2, 2, [c[0].diff(0) + c[1].diff(1)])
    if k == 0:
        return FormField(3, 1, [c[0].diff(i) for i in range(3)])
    if k == 1:
        return FormField(3, 2, [c[2].diff(1) - c[1].diff(2),
                                c[0].diff(2) - c[2].diff(0),
                                c[1].diff(0) - c[0].diff(1)])
    return FormField(3, 3, [c[0].diff(0) + c[1].diff(1) + c[2].diff(2)])


def koszul(u):
    n, k = u.dim, u.order
    if k == 0:
        raise ValueError("Koszul of a 0-form")
    X = [Polynomial.var(n, i) for i in range(n)]
    c = u.comps
    if k == n:
        if n == 2:
            return FormField(2, 1, [X[0] * c[0], X[1] * c[0]])
        return FormField(3, 2, [X[i] * c[0] for i in range(3)])
    if n == 2:
        # contraction of u0 dy - u1 dx with the position vector
        return FormField(2, 0, [X[0] * c[1] - X[1] * c[0]])
    if k == 1:
        return FormField(3, 0, [sum((X[i] * c[i] for i in range(3)), Polynomial(3))])
    # u x X
    return FormField(3, 1, [c[1] * X[2] - c[2] * X[1],
                            c[2] * X[0] - c[0] * X[2],
                            c[0] * X[1] - c[1] * X[0]])


def superlinear_degree(e):
    if any(a < 0 for a in e):
        raise ValueError("negative exponent")
    return sum(a for a in e if a >= 2)


def linear_degree(dim, order, comp, e):
    return sum(1 for a in free_axes(dim, order, comp) if e[a] == 1)


# ---------------------------------------------------------------- exponents

def exps_total(dim, r):
    if r < 0:
        return []
    out = [e for e in product(range(r + 1), repeat=dim) if sum(e) <= r]
    return sorted(out, key=glex_key)


def exps_homogeneous(dim, r):
    return [e for e in exps_total(dim, r) if sum(e) == r]


def exps_box(degrees):
    if min(degrees, default=0) < 0:
        return []
    return sorted(product(*[range(d + 1) for d in degrees]), key=glex_key)


def exps_superlinear(dim, r):
    if r < 0:
        return []
    bound = max(r, 1)
    out = [e for e in product(range(bound + 1), repeat=dim) if superlinear_degree(e) <= r]
    return sorted(out, key=glex_key)


@dataclass(frozen=True)
class SpaceSpec:
    """Description of a scalar polynomial space.

    kind is one of "P", "Q", "Pmixed", "S", "H", "span".
    """
    kind: str
    degrees: tuple = ()
    polys: tuple = ()

    def __post_init__(self):
        if self.kind not in ("P", "Q", "Pmixed", "S", "H", "span"):
            raise ValueError(f"unknown space kind {self.kind}")
        if any(d < 0 for d in self.degrees):
            raise ValueError("negative degree")
        if self.kind in ("P", "Q", "S", "H") and len(self.degrees) != 1:
            raise ValueError(f"{self.kind} takes one degree")


def span_basis(spec, dim):
    k = spec.kind
    if k == "P":
        ex = exps_total(dim, spec.degrees[0])
    elif k == "Q":
        ex = exps_box([spec.degrees[0]] * dim)
    elif k == "Pmixed":
        if len(spec.degrees) != dim:
            raise ValueError("Pmixed needs one degree per axis")
        ex = exps_box(spec.degrees)
    elif k == "S":
        ex = exps_superlinear(dim, spec.degrees[0])
    elif k == "H":
        ex = exps_homogeneous(dim, spec.degrees[0])
    else:
        fields = [FormField.scalar(p) for p in spec.polys]
        if any(p.dim != dim for p in spec.polys):
            raise ValueError("span polynomials have the wrong dimension")
        basis, rank = reduce_span(fields)
        if rank != len(fields):
            raise ValueError("explicit span is linearly dependent")
        return [f.comps[0] for f in basis]
    return [Polynomial.monomial(e) for e in ex]


# ---------------------------------------------------------------- spans

def coord_key(key):
    comp, e = key
    return (-sum(e), tuple(-a for a in e), comp)


def coord_matrix(fields, keys=None):
    """Rows of coefficients of ``fields`` over a sorted coordinate list."""
    coords = [f.coords() for f in fields]
    if keys is None:
        ks = set()
        for c in coords:
            ks.update(c)
        keys = sorted(ks, key=coord_key)
    index = {k: j for j, k in enumerate(keys)}
    rows = []
    for c in coords:
        row = [Fraction(0)] * len(keys)
        for k, v in c.items():
            row[index[k]] = v
        rows.append(row)
    return rows, keys


def _fields_from_rows(rows, keys, dim, order):
    out = []
    nc = num_components(dim, order)
    for row in rows:
        comps = [dict() for _ in range(nc)]
        for (comp, e), v in zip(keys, row):
            if v:
                comps[comp][e] = v
        out.append(FormField(dim, order, [Polynomial(dim, c) for c in comps]))
    return out


def _shape(fields):
    shapes = {(f.dim, f.order) for f in fields}
    if len(shapes) > 1:
        raise ValueError("mixed form shapes in span")
    return shapes.pop() if shapes else None


def reduce_span(vectors):
    """Row-reduce a list of FormFields; returns (canonical basis, dimension).

    The basis is the nonzero rows of the reduced row echelon form, so it is
    unique for a given span.
    """
    vectors = list(vectors)
    shape = _shape(vectors)
    if shape is None:
        return [], 0
    rows, keys = coord_matrix(vectors)
    if not keys:
        return [], 0
    R = exact.rref_rows(rows)
    return _fields_from_rows(R, keys, *shape), len(R)


def span_rank(vectors):
    vectors = list(vectors)
    if not vectors:
        return 0
    _shape(vectors)
    rows, keys = coord_matrix(vectors)
    if not keys:
        return 0
    return exact.rank(rows)


def span_contains(big, small):
    big, small = list(big), list(small)
    if not small:
        return True
    return span_rank(big) == span_rank(big + small)


def span_equal(a, b):
    a, b = list(a), list(b)
    ra, rb = span_rank(a), span_rank(b)
    return ra == rb and span_rank(a + b) == ra


def field_span_key(fields):
    """Hashable canonical form of a span (its RREF)."""
    basis, _ = reduce_span(fields)
    return tuple(tuple(sorted(f.coords().items())) for f in basis)


# ---------------------------------------------------------------- form spaces

def _forms_from_pattern(dim, order, comp_exps):
    out = []
    for comp, exps in enumerate(comp_exps):
        for e in exps:
            out.append(FormField.unit(dim, order, comp, Polynomial.monomial(e)))
    return out


def full_P(dim, order, r):
    """P_r Lambda^k: every component in P_r."""
    nc = num_components(dim, order)
    return _forms_from_pattern(dim, order, [exps_total(dim, r)] * nc)


def homogeneous_forms(dim, order, r):
    nc = num_components(dim, order)
    return _forms_from_pattern(dim, order, [exps_homogeneous(dim, r)] * nc)


def qminus_degrees(dim, order, comp, r):
    """Per-axis degree of Q^-_r Lambda^k component ``comp``."""
    s = sigma(dim, order, comp)
    return tuple(r - 1 if a in s else r for a in range(dim))


def qminus_space(dim, order, r):
    if r < 1:
        raise ValueError("Q^-_r needs r >= 1")
    nc = num_components(dim, order)
    return _forms_from_pattern(
        dim, order, [exps_box(qminus_degrees(dim, order, c, r)) for c in range(nc)])


def J_space(dim, order, r):
    """J_r Lambda^k = sum_{l>=1} kappa H_{r+l-1,l} Lambda^{k+1}."""
    if order >= dim:
        return []
    up = order + 1
    out = []
    nc = num_components(dim, up)
    for l in range(1, dim + 1):
        deg = r + l - 1
        if deg < 0:
            continue
        for comp in range(nc):
            for e in exps_homogeneous(dim, deg):
                if linear_degree(dim, up, comp, e) >= l:
                    f = koszul(FormField.unit(dim, up, comp, Polynomial.monomial(e)))
                    if not f.is_zero():
                        out.append(f)
    return out


def serendipity_space(dim, order, r):
    """S_r Lambda^k = P_r + J_r + d J_{r+1} Lambda^{k-1} (canonical basis)."""
    if r < 0:
        raise ValueError(f"S_{r} Lambda^{order} undefined")
    gens = full_P(dim, order, r) + J_space(dim, order, r)
    if order > 0:
        gens += [differential(f) for f in J_space(dim, order - 1, r + 1)]
    gens = [g for g in gens if not g.is_zero()]
    basis, _ = reduce_span(gens)
    return basis


def trimmed_space(dim, order, r):
    """S^-_r Lambda^k = S_{r-1} Lambda^k + kappa S_{r-1} Lambda^{k+1}."""
    if r < 1:
        raise ValueError("S^-_r needs r >= 1")
    if order == 0:
        return serendipity_space(dim, 0, r)
    gens = list(serendipity_space(dim, order, r - 1)) if r - 1 >= 0 else []
    if order < dim:
        gens += [koszul(f) for f in serendipity_space(dim, order + 1, r - 1)]
    gens = [g for g in gens if not g.is_zero()]
    basis, _ = reduce_span(gens)
    return basis


def serendipity_dim(dim, order, r):
    return len(serendipity_space(dim, order, r))


def binom(n, k):
    return comb(n, k) if 0 <= k <= n else 0


def axis_subsets(dim, d):
    return list(combinations(range(dim), d))
