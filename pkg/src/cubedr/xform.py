"""The serendipity operation Q and the DoF-transfer operation T acting on
reference elements, plus the checks that they commute and keep bubbles."""

import hashlib
import json
from dataclasses import dataclass

from . import exact
from .polyform import FormField, reduce_span, span_contains, span_equal
from .refelem import (DofFunctional, ElementDef, ElementError, bubble_space, build_element,
                      combine, dof_matrix, is_unisolvent, reference_entities, sort_dofs,
                      trace_components)


class TransferError(ElementError):
    pass


class SerendipityError(ElementError):
    pass


@dataclass(frozen=True)
class OpReport:
    input_id: str
    output_id: str
    removed_shape_dim: int
    moved_edge_dofs: int
    added_vertex_dofs: int
    merged_vertex_dofs: int = 0


TRANSFER_NAMES = {"Qminus": "Hermite", "S": "Adini", "Sminus": "TrimmedAdini"}


def _edge_degree(d):
    if d.degree is not None:
        return d.degree
    return max(w.degree() for w in d.weights)


def dof_transfer(e):
    """Move the two highest-degree moments on every edge to the endpoints."""
    if e.field_order not in (0, 1) or e.k not in (0, 1):
        raise TransferError(f"DoF transfer is defined for 0- and 1-forms, not k={e.k}")
    for d in e.dofs:
        if d.kind not in ("VertexEval", "EdgeMoment", "FaceMoment", "InteriorMoment"):
            raise TransferError(f"{e.name} already has {d.kind} DoFs")
    ents = reference_entities(e.n)
    keep = [d for d in e.dofs if d.entity[0] != 1]
    added, generated, moved = [], 0, 0
    seen = set()
    for edge in ents[1]:
        on_edge = [d for d in e.dofs if d.entity == edge.key]
        if len(on_edge) < 2:
            raise TransferError(
                f"edge {edge.id} of {e.name} has {len(on_edge)} DoFs; not enough degrees of "
                "freedom to ensure the requisite continuity")
        ranked = sorted(range(len(on_edge)), key=lambda i: (_edge_degree(on_edge[i]), i))
        drop = set(ranked[-2:])
        keep += [d for i, d in enumerate(on_edge) if i not in drop]
        moved += 2
        if e.k == 0:
            kind, axis = "VertexDeriv", edge.free[0]
        else:
            kind, axis = "VertexVecEval", trace_components(e.n, 1, edge.free)[0]
        for v in ents[0]:
            if edge.contains(v):
                generated += 1
                dof = DofFunctional(kind, v.key, axis=axis)
                if dof not in seen:
                    seen.add(dof)
                    added.append(dof)
    family = TRANSFER_NAMES.get(e.family, f"T({e.family})")
    out = ElementDef(family, e.n, e.k, e.r, e.shape_basis, tuple(sort_dofs(keep + added)),
                     e.field_order)
    if not is_unisolvent(out):
        raise TransferError(f"transfer of {e.name} is not unisolvent")
    report = OpReport(e.name, out.name, 0, moved, len(added), generated - len(added))
    return out, report


SERENDIPITY_MAP = {
    ("Qminus", "S"): ("S", "S", -1),
    ("Hermite", "S"): ("Adini", "S", -1),
    ("S", "S"): ("S", "S", 0),
    ("Adini", "S"): ("Adini", "S", 0),
    ("Qminus", "Sminus"): ("Sminus", "Sminus", 0),
    ("Hermite", "Sminus"): ("TrimmedAdini", "Sminus", 0),
    ("Sminus", "Sminus"): ("Sminus", "Sminus", 0),
    ("TrimmedAdini", "Sminus"): ("TrimmedAdini", "Sminus", 0),
}


def _weight_rows(dofs):
    rows, keys = [], {}
    for d in dofs:
        row = {}
        for c, w in zip(d.comps, d.weights):
            for ex, v in w.terms.items():
                row[(c, ex)] = row.get((c, ex), 0) + v
        rows.append(row)
        for k in row:
            keys.setdefault(k, len(keys))
    return [[r.get(k, 0) for k in keys] for r in rows]


def _weights_contained(big, small):
    if not small:
        return True
    rb = exact.rank(_weight_rows(big)) if big else 0
    return exact.rank(_weight_rows(list(big) + list(small))) == rb


def serendipity_reduce(e, target):
    """Replace the shape space and the face/interior index spaces by the target's."""
    try:
        family, base, shift = SERENDIPITY_MAP[(e.family, target)]
    except KeyError:
        raise SerendipityError(f"no serendipity reduction from {e.family} to {target}")
    r = e.r + shift * e.k
    tgt = build_element(base, e.n, e.k, r)
    if not span_contains(e.shape_basis, tgt.shape_basis):
        raise SerendipityError(f"shape space of {tgt.name} is not contained in {e.name}")
    ents = reference_entities(e.n)
    for d in range(2, e.n + 1):
        for ent in ents[d]:
            mine = [x for x in e.dofs if x.entity == ent.key]
            theirs = [x for x in tgt.dofs if x.entity == ent.key]
            if not _weights_contained(mine, theirs):
                raise SerendipityError(
                    f"index space of {tgt.name} on entity {ent.key} is not contained in {e.name}")
    dofs = [x for x in e.dofs if x.entity[0] < 2] + [x for x in tgt.dofs if x.entity[0] >= 2]
    out = ElementDef(family, e.n, e.k, r, tgt.shape_basis, tuple(sort_dofs(dofs)),
                     e.field_order)
    if not is_unisolvent(out):
        raise SerendipityError(f"serendipity reduction of {e.name} is not unisolvent")
    return out, OpReport(e.name, out.name, e.dim - out.dim, 0, 0)


# ---------------------------------------------------------------- equality

def _canonical(e):
    basis, _ = reduce_span(e.shape_basis)
    return basis


def _entity_actions(e, basis):
    ents = reference_entities(e.n)
    out = {}
    for d in range(e.n + 1):
        for ent in ents[d]:
            dofs = [x for x in e.dofs if x.entity == ent.key]
            out[ent.key] = exact.rref_rows(dof_matrix(dofs, basis, e.n)) if dofs else []
    return out


def elements_equal(a, b):
    """Equal shape spans and, entity by entity, equal spans of DoF functionals."""
    if (a.n, a.field_order) != (b.n, b.field_order) or a.dim != b.dim:
        return False
    if not span_equal(a.shape_basis, b.shape_basis):
        return False
    basis = _canonical(a)
    return _entity_actions(a, basis) == _entity_actions(b, basis)


def fingerprint(e):
    basis = _canonical(e)
    acts = _entity_actions(e, basis)
    payload = {
        "n": e.n, "order": e.field_order,
        "span": [sorted([[c, list(ex), str(v)] for (c, ex), v in f.coords().items()])
                 for f in basis],
        "dofs": [[list(k), [[str(v) for v in row] for row in rows]]
                 for k, rows in sorted(acts.items())],
    }
    blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def commute_paths(base, target):
    """Return (T(Q(base)), Q(T(base))); T acts as the identity for k >= 2."""
    def T(x):
        return dof_transfer(x)[0] if x.k in (0, 1) else _rename(x)

    def _rename(x):
        fam = TRANSFER_NAMES.get(x.family, x.family)
        return ElementDef(fam, x.n, x.k, x.r, x.shape_basis, x.dofs, x.field_order)

    p1 = T(serendipity_reduce(base, target)[0])
    p2 = serendipity_reduce(T(base), target)[0]
    return p1, p2


def check_commute(base, target):
    try:
        p1, p2 = commute_paths(base, target)
    except ElementError:
        return False
    return elements_equal(p1, p2)


# ---------------------------------------------------------------- bubbles

def _depends_on_trace(n, dof, ent, k):
    if dof.kind == "VertexDeriv":
        return dof.axis in ent.free
    if dof.kind == "VertexVecEval":
        return dof.axis in trace_components(n, k, ent.free)
    return True


def _trace_field(u, ent, comps):
    fixed = ent.fixed_map()
    polys = [u.comps[c].restrict(ent.free, fixed) for c in comps]
    d = len(ent.free)
    order = 0 if len(polys) == 1 else 1
    return FormField(d, order, polys)


def face_bubble_space(e, ent):
    """Traces on ``ent`` of shape functions whose trace DoFs on its boundary vanish."""
    ents = reference_entities(e.n)
    subs = {g.key for d in range(ent.dim) for g in ents[d] if ent.contains(g)}
    dofs = [d for d in e.dofs if d.entity in subs and _depends_on_trace(e.n, d, ent, e.k)]
    comps = trace_components(e.n, e.field_order, ent.free)
    if not comps:
        return []
    rows = dof_matrix(dofs, e.shape_basis, e.n)
    ker = exact.nullspace(rows, len(e.shape_basis)) if rows else [
        [1 if i == j else 0 for i in range(e.dim)] for j in range(e.dim)]
    traces = [_trace_field(combine(e.shape_basis, v), ent, comps) for v in ker]
    traces = [t for t in traces if not t.is_zero()]
    return reduce_span(traces)[0] if traces else []


def _same_span(a, b):
    return len(a) == len(b) and (not a or span_equal(a, b))


def check_bubble_preservation(e):
    """Cell bubbles and, in 3D, face trace bubbles are unchanged by T."""
    t, _ = dof_transfer(e)
    if not _same_span(bubble_space(e), bubble_space(t)):
        return False
    for d in range(2, e.n):
        for ent in reference_entities(e.n)[d]:
            if not _same_span(face_bubble_space(e, ent), face_bubble_space(t, ent)):
                return False
    return True
