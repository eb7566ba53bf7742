"""The scalar component element, its interpolation operators, and the
nonconforming Poisson and Korn studies."""

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

from . import exact
from .assembly import (CellTables, GlobalSpace, assemble_bilinear, assemble_load, evaluate,
                       max_axis_degree, physical_points)
from .cubemesh import build_mesh
from .polyform import FormField, Polynomial, reduce_span
from .refelem import (DofFunctional, ElementDef, _moments, bubble_space, build_element,
                      combine, dof_matrix, nodal_basis, reference_entities, sort_dofs)


def _mono(*e):
    return Polynomial.monomial(e)


@lru_cache(maxsize=None)
def component_spaces(dim):
    """P^x, Q^x, B^x and A^x = Q^x + B^x on (-1, 1)^dim as lists of polynomials."""
    if dim == 3:
        Q = [_mono(a, b, c) for a in range(3) for b in range(2) for c in range(2)]
        extra = [_mono(*e) for e in [(0, 2, 0), (0, 0, 2), (0, 2, 1), (0, 1, 2),
                                     (0, 3, 0), (0, 0, 3), (0, 3, 1), (0, 1, 3)]]
        x, y, z = (Polynomial.var(3, i) for i in range(3))
        bx = x * x - 1
        B = [bx * (y * y - 1), bx * (y * y - 1) * z, bx * (z * z - 1), bx * y * (z * z - 1)]
    elif dim == 2:
        Q = [_mono(a, b) for a in range(3) for b in range(2)]
        extra = [_mono(0, 2), _mono(0, 3)]
        B = []
    else:
        raise ValueError("dim must be 2 or 3")
    return {"P": Q + extra, "Q": Q, "B": B, "A": Q + B}


def x_entities(dim, d):
    """Reference entities of dimension d parallel to the x-axis."""
    return [e for e in reference_entities(dim)[d] if 0 in e.free]


def _vertex_dofs(dim):
    return [DofFunctional("VertexEval", v.key) for v in reference_entities(dim)[0]]


def _mean_dofs(dim, d):
    out = []
    for ent in x_entities(dim, d):
        out += _moments(dim, ent, (0,), [[Polynomial.const(d, 1)]], "scalar", [0])
    return out


def _scalar_fields(polys):
    return tuple(FormField.scalar(p) for p in polys)


def boundary_dofs(dim):
    dofs = _vertex_dofs(dim) + _mean_dofs(dim, 1)
    if dim == 3:
        dofs += _mean_dofs(dim, 2)
    return dofs


@lru_cache(maxsize=None)
def build_component_element(dim):
    P = _scalar_fields(component_spaces(dim)["P"])
    bdofs = boundary_dofs(dim)
    rows = dof_matrix(bdofs, P, dim)
    bubbles = reduce_span([combine(P, v) for v in exact.nullspace(rows)])[0]
    cell = reference_entities(dim)[dim][0]
    inner = _moments(dim, cell, (0,), [[b.comps[0]] for b in bubbles], "scalar")
    return ElementDef("ComponentPx", dim, 1, 2, P, tuple(sort_dofs(bdofs + inner)), 0)


@lru_cache(maxsize=None)
def build_aux_element(dim):
    """A^x with the vertex, x-edge and x-face DoFs (globally C^0)."""
    A = _scalar_fields(component_spaces(dim)["A"])
    return ElementDef("ComponentAux", dim, 1, 2, A, tuple(sort_dofs(boundary_dofs(dim))), 0)


@lru_cache(maxsize=None)
def interp_element(dim, op):
    sp = component_spaces(dim)
    if op == "Q":
        return ElementDef("InterpQ", dim, 1, 2, _scalar_fields(sp["Q"]),
                          tuple(sort_dofs(_vertex_dofs(dim) + _mean_dofs(dim, 1))), 0)
    if op == "B":
        if not sp["B"]:
            return ElementDef("InterpB", dim, 1, 2, (), (), 0)
        return ElementDef("InterpB", dim, 1, 2, _scalar_fields(sp["B"]),
                          tuple(_mean_dofs(dim, 2)), 0)
    if op == "A":
        return build_aux_element(dim)
    raise ValueError(f"unknown interpolation {op}")


def interpolate(op, u, dim=None):
    """Interpolant of a polynomial u by matching the DoFs of Pi_op."""
    dim = u.dim if dim is None else dim
    e = interp_element(dim, op)
    if e.dim == 0:
        return Polynomial(dim)
    duals = nodal_basis(e).duals
    vals = dof_matrix(e.dofs, [FormField.scalar(u)], dim)
    return combine(duals, [v[0] for v in vals]).comps[0]


# ---------------------------------------------------------------- identities

def pi_q_table():
    """Rows (u, Pi_Q u, u - Pi_Q u) for the eight non-tensor shape functions."""
    names = ["y^2", "z^2", "y^3", "y^2z", "yz^2", "z^3", "y^3z", "yz^3"]
    exps = [(0, 2, 0), (0, 0, 2), (0, 3, 0), (0, 2, 1), (0, 1, 2), (0, 0, 3), (0, 3, 1),
            (0, 1, 3)]
    rows = []
    for name, e in zip(names, exps):
        u = Polynomial.monomial(e)
        q = interpolate("Q", u)
        rows.append((name, u, q, u - q))
    return rows


PI_Q_EXPECTED = {
    "y^2": "1", "z^2": "1", "y^3": "y", "y^2z": "z", "yz^2": "y", "z^3": "z",
    "y^3z": "y*z", "yz^3": "y*z",
}


def _expected_poly(text):
    y, z = Polynomial.var(3, 1), Polynomial.var(3, 2)
    return {"1": Polynomial.const(3, 1), "y": y, "z": z, "y*z": y * z}[text]


def split_residual(u):
    """(Pi_A - Pi_B)(I - Pi_Q) u."""
    w = u - interpolate("Q", u)
    return interpolate("A", w) - interpolate("B", w)


def face_integral(p, ent):
    return p.restrict(ent.free, ent.fixed_map()).integrate_cube()


def boundary_flux(v):
    """Components of int_{dK} (v - Pi_A v) n ds."""
    w = v - interpolate("A", v)
    out = []
    for axis in range(3):
        total = Fraction(0)
        for ent in reference_entities(3)[2]:
            (ax, s), = ent.fixed
            if ax == axis:
                total += s * face_integral(w, ent)
        out.append(total)
    return out


def face_pair_integrals(v):
    """For each axis, (int over the face at -1, int over the face at +1) of v - Pi_A v."""
    w = v - interpolate("A", v)
    pairs = []
    for axis in range(3):
        vals = {}
        for ent in reference_entities(3)[2]:
            (ax, s), = ent.fixed
            if ax == axis:
                vals[s] = face_integral(w, ent)
        pairs.append((vals[-1], vals[1]))
    return pairs


# ---------------------------------------------------------------- studies

@dataclass
class StudyResult:
    h: list = field(default_factory=list)
    err_H1h: list = field(default_factory=list)
    err_L2: list = field(default_factory=list)
    consistency: list = field(default_factory=list)
    conforming_consistency: list = field(default_factory=list)

    @staticmethod
    def _rates(h, e):
        return [float(np.log(e[i] / e[i + 1]) / np.log(h[i] / h[i + 1]))
                for i in range(len(e) - 1)]

    @property
    def rate_H1h(self):
        return self._rates(self.h, self.err_H1h)

    @property
    def rate_L2(self):
        return self._rates(self.h, self.err_L2)

    @property
    def rate_consistency(self):
        return self._rates(self.h, self.consistency)

    def rows(self):
        out = []
        for i, h in enumerate(self.h):
            out.append({
                "h": h, "err_H1h": self.err_H1h[i], "err_L2": self.err_L2[i],
                "rate_H1h": self.rate_H1h[i - 1] if i else None,
                "rate_L2": self.rate_L2[i - 1] if i else None,
                "consistency": self.consistency[i] if self.consistency else None,
            })
        return out


class SinProblem:
    """u = prod_i sin(pi x_i) on [0,1]^n, copied into each vector component."""

    def __init__(self, n, ncomp):
        self.n, self.ncomp = n, ncomp

    def u(self, X):
        s = np.prod(np.sin(np.pi * X), axis=1)
        return np.tile(s, (self.ncomp, 1))

    def grad(self, X):
        g = np.zeros((self.ncomp, self.n, X.shape[0]))
        for a in range(self.n):
            t = np.pi * np.cos(np.pi * X[:, a])
            for b in range(self.n):
                if b != a:
                    t = t * np.sin(np.pi * X[:, b])
            g[:, a, :] = t
        return g

    def f(self, X):
        return self.n * np.pi ** 2 * self.u(X)


def error_order(space):
    m = max_axis_degree(space.element.shape_basis) + 3
    return 2 * m - 1


def solve_poisson(space, problem):
    """Solve the broken Poisson problem on V_h0; returns (coeffs, err_H1h, err_L2)."""
    order = error_order(space)
    A = assemble_bilinear(space, "broken_grad", order)
    b = assemble_load(space, problem.f, order)
    free = space.interior_dofs()
    if len(free) == 0:
        raise ValueError("no interior degrees of freedom")
    Aff = A[free][:, free].tocsc()
    x = np.zeros(space.ndofs)
    x[free] = spla.spsolve(Aff, b[free])
    if not np.all(np.isfinite(x)):
        raise np.linalg.LinAlgError("singular stiffness matrix")
    e1, e0 = errors(space, x, problem, order)
    return x, e1, e0


def errors(space, x, problem, order):
    t, vals, grads = evaluate(space, x, order)
    X = physical_points(space, t.quad)
    e0 = e1 = 0.0
    for K in range(space.mesh.num_cells):
        du = problem.u(X[K]) - vals[K]
        dg = problem.grad(X[K]) - grads[K]
        e0 += np.sum(du ** 2 * t.wts)
        e1 += np.sum(dg ** 2 * t.wts)
    return float(np.sqrt(e1)), float(np.sqrt(e0))


def consistency_probe(space, problem, order=None):
    """max over V_h0 basis functions of |(grad u, grad_h phi) - (f, phi)| / ||phi||_{1,h}."""
    if order is None:
        order = error_order(space) + 4
    t = CellTables(space, order)
    X = physical_points(space, t.quad)
    r = np.zeros(space.ndofs)
    for K in range(space.mesh.num_cells):
        g = problem.grad(X[K])
        fv = problem.f(X[K])
        loc = (np.einsum("icaq,caq,q->i", t.grads, g, t.wts)
               - np.einsum("icq,cq,q->i", t.vals, fv, t.wts))
        np.add.at(r, space.l2g[K], loc)
    M = assemble_bilinear(space, "mass", order)
    S = assemble_bilinear(space, "broken_grad", order)
    norms = np.sqrt(M.diagonal() + S.diagonal())
    free = space.interior_dofs()
    return float(np.max(np.abs(r[free]) / norms[free]))


def poisson_space(dim, family, N):
    mesh = build_mesh(dim, (N,) * dim)
    if family == "component":
        return GlobalSpace(mesh, build_component_element(dim))
    if family == "adini1":
        return GlobalSpace(mesh, build_element("Adini", dim, 1, 2))
    if family == "aux":
        return GlobalSpace(mesh, build_aux_element(dim))
    raise ValueError(f"unknown Poisson family {family}")


def poisson_study(dim, family, Ns, probe=True, control=False):
    res = StudyResult()
    for N in Ns:
        space = poisson_space(dim, family, N)
        prob = SinProblem(dim, space.nodal.duals[0].comps.__len__())
        _, e1, e0 = solve_poisson(space, prob)
        res.h.append(1.0 / N)
        res.err_H1h.append(e1)
        res.err_L2.append(e0)
        if probe:
            res.consistency.append(consistency_probe(space, prob))
        if control:
            aux = poisson_space(dim, "aux", N)
            res.conforming_consistency.append(consistency_probe(aux, SinProblem(dim, 1)))
    return res


def galerkin_residual(space, x, problem):
    """max |(grad_h u_h, grad_h v) - (f, v)| over V_h0 basis functions, relative to |b|."""
    order = error_order(space)
    A = assemble_bilinear(space, "broken_grad", order)
    b = assemble_load(space, problem.f, order)
    free = space.interior_dofs()
    res = A @ x - b
    return float(np.max(np.abs(res[free])) / max(np.max(np.abs(b[free])), 1e-300))


def korn_quotient(space, order=None):
    """Smallest eigenvalue of (eps, eps) against the broken H^1 norm on V_h0."""
    free = space.interior_dofs()
    if len(free) == 0:
        raise ValueError("zero-dimensional masked space")
    S = assemble_bilinear(space, "broken_sym_grad", order)
    N = assemble_bilinear(space, "mass", order) + assemble_bilinear(space, "broken_grad", order)
    Sd = S[free][:, free].toarray()
    Nd = N[free][:, free].toarray()
    w = sla.eigh(Sd, Nd, eigvals_only=True, subset_by_index=[0, 0])
    return float(w[0])


def korn_study(Ns, dim=2):
    out = []
    for N in Ns:
        mesh = build_mesh(dim, (N,) * dim)
        out.append(korn_quotient(GlobalSpace(mesh, build_element("Adini", dim, 1, 2))))
    return out
