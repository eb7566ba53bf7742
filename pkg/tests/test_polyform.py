from fractions import Fraction
from math import comb

import numpy as np
import pytest

from cubedr.polyform import (FormField, J_space, Polynomial, SpaceSpec, differential,
                             exps_total, full_P, koszul, num_components, qminus_space,
                             reduce_span, serendipity_space, span_basis, span_contains,
                             span_equal, span_rank, superlinear_degree, trimmed_space)
from cubedr.refelem import reduced_adini_shape


def random_poly(rng, dim, deg=3, nterms=4):
    exps = exps_total(dim, deg)
    terms = {}
    for i in rng.choice(len(exps), size=nterms, replace=False):
        terms[exps[i]] = Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 5)))
    return Polynomial(dim, terms)


def random_form(rng, dim, order):
    return FormField(dim, order, [random_poly(rng, dim) for _ in range(num_components(dim, order))])


def aa_dim(n, k, r):
    # Arnold-Awanou count of S_r Lambda^k on the n-cube
    top = min(n, r // 2 + k)
    return sum(2 ** (n - d) * comb(n, d) * comb(r - d + 2 * k, d) * comb(d, k)
               for d in range(k, top + 1))


def test_superlinear_degree_examples():
    assert superlinear_degree((2, 3, 1)) == 5
    assert superlinear_degree((1, 1, 1)) == 0
    assert superlinear_degree((4, 0)) == 4
    with pytest.raises(ValueError):
        superlinear_degree((-1, 2))


def test_polynomial_invariants():
    p = Polynomial(2, {(1, 0): 1, (0, 1): 0})
    assert list(p.terms) == [(1, 0)]
    with pytest.raises(ValueError):
        Polynomial(2, {(1, 0, 0): 1})
    x, y = Polynomial.var(2, 0), Polynomial.var(2, 1)
    assert (x - x).is_zero()
    assert (x * y)(1, 1) == 1
    assert (x * x).integrate_cube() == Fraction(4, 3)


def test_polynomial_json_roundtrip():
    p = Polynomial(3, {(2, 0, 1): Fraction(-3, 7), (0, 0, 0): 5})
    data = p.to_json()
    assert data[0] == {"exponents": [0, 0, 0], "num": "5", "den": "1"}
    assert Polynomial.from_json(3, data) == p


def test_span_basis_examples():
    assert len(span_basis(SpaceSpec("Q", (3,)), 2)) == 16
    s3 = span_basis(SpaceSpec("S", (3,)), 2)
    assert len(s3) == 12
    assert {tuple(p.terms)[0] for p in s3} >= {(3, 1), (1, 3)}
    # S_3 in 3D coincides with Q_1 + x_i^2 Q_1
    q1 = span_basis(SpaceSpec("Q", (1,)), 3)
    gens = list(q1)
    for i in range(3):
        xi2 = Polynomial.var(3, i) ** 2
        gens += [xi2 * q for q in q1]
    s3d = [FormField.scalar(p) for p in span_basis(SpaceSpec("S", (3,)), 3)]
    assert span_equal(s3d, [FormField.scalar(p) for p in gens])


def test_span_basis_is_graded_lex_and_deterministic():
    b = span_basis(SpaceSpec("P", (2,)), 2)
    keys = [next(iter(p.terms)) for p in b]
    assert keys == sorted(keys, key=lambda e: (sum(e), e))
    assert b == span_basis(SpaceSpec("P", (2,)), 2)


def test_span_spec_errors():
    with pytest.raises(ValueError):
        SpaceSpec("P", (-1,))
    with pytest.raises(ValueError):
        SpaceSpec("Z", (1,))
    x = Polynomial.var(2, 0)
    with pytest.raises(ValueError):
        span_basis(SpaceSpec("span", polys=(x, x * 2)), 2)
    with pytest.raises(ValueError):
        span_basis(SpaceSpec("Pmixed", (1, 2)), 3)


def test_differential_examples():
    x, y = Polynomial.var(2, 0), Polynomial.var(2, 1)
    assert differential(FormField.scalar(x * y)) == FormField(2, 1, [-x, y])
    assert differential(FormField(2, 1, [x, Polynomial(2)])) == FormField(2, 2, [Polynomial.const(2, 1)])
    X, Y = Polynomial.var(3, 0), Polynomial.var(3, 1)
    g = differential(FormField.scalar(X ** 3 * Y))
    assert differential(g).is_zero()
    with pytest.raises(ValueError):
        differential(FormField(2, 2, [x]))


def test_koszul_examples():
    x, y = Polynomial.var(2, 0), Polynomial.var(2, 1)
    assert koszul(FormField(2, 2, [Polynomial.const(2, 1)])) == FormField(2, 1, [x, y])
    with pytest.raises(ValueError):
        koszul(FormField.scalar(x))


@pytest.mark.parametrize("dim", [2, 3])
def test_d_squared_and_kappa_squared_vanish(dim):
    rng = np.random.default_rng(1234 + dim)
    for k in range(dim + 1):
        for _ in range(200):
            if k <= dim - 2:
                u = random_form(rng, dim, k)
                assert differential(differential(u)).is_zero()
            if k >= 2:
                u = random_form(rng, dim, k)
                assert koszul(koszul(u)).is_zero()


@pytest.mark.parametrize("dim", [2, 3])
def test_homotopy_formula_on_homogeneous_forms(dim):
    # (d kappa + kappa d) u = (r + k) u for homogeneous u of degree r
    rng = np.random.default_rng(7)
    for k in range(dim + 1):
        for r in range(3):
            exps = [e for e in exps_total(dim, r) if sum(e) == r]
            comps = [Polynomial(dim, {exps[int(rng.integers(len(exps)))]: int(rng.integers(1, 5))})
                     for _ in range(num_components(dim, k))]
            u = FormField(dim, k, comps)
            lhs = FormField.zero(dim, k)
            if k > 0:
                lhs = lhs + differential(koszul(u))
            if k < dim:
                lhs = lhs + koszul(differential(u))
            assert lhs == u * (r + k)


def test_linearity():
    rng = np.random.default_rng(3)
    for dim in (2, 3):
        for k in range(1, dim):
            a, b = random_form(rng, dim, k), random_form(rng, dim, k)
            c = Fraction(3, 5)
            assert differential(a * c + b) == differential(a) * c + differential(b)
            assert koszul(a * c + b) == koszul(a) * c + koszul(b)


def test_trimmed_dimension_17():
    assert len(trimmed_space(2, 1, 3)) == 17


def test_reduce_span_examples():
    x = Polynomial.var(2, 0)
    basis, d = reduce_span([FormField.scalar(x), FormField.scalar(x * 2)])
    assert d == 1 and basis[0] == FormField.scalar(x)
    with pytest.raises(ValueError):
        reduce_span([FormField.scalar(x), FormField(2, 1, [x, x])])


def test_adini_one_form_decomposition_dim_48():
    P2 = full_P(3, 1, 2)
    J2 = J_space(3, 1, 2)
    dJ3 = [differential(f) for f in J_space(3, 0, 3)]
    assert len(P2) == 30
    assert span_rank(J2) == 6
    assert span_rank(dJ3) == 12
    _, d = reduce_span(P2 + J2 + dJ3)
    assert d == 48


def test_reduced_adini_shape_dim_12():
    assert len(reduced_adini_shape()) == 12


def test_serendipity_dims_match_counting_formula():
    for n in (2, 3):
        for k in range(n + 1):
            lo = 0 if k == n else 1
            for r in range(lo, 5 if n == 2 else 4):
                assert len(serendipity_space(n, k, r)) == aa_dim(n, k, r), (n, k, r)


def test_known_space_dims():
    assert [len(serendipity_space(3, 0, r)) for r in (1, 2, 3, 4)] == [8, 20, 32, 50]
    assert [len(serendipity_space(3, 1, r)) for r in (1, 2, 3, 4)] == [24, 48, 84, 135]
    assert [len(serendipity_space(3, 2, r)) for r in (1, 2, 3)] == [18, 39, 72]
    assert [len(serendipity_space(2, 1, r)) for r in range(1, 5)] == [(r + 1) * (r + 2) + 2 for r in range(1, 5)]
    assert len(trimmed_space(3, 1, 3)) == 66
    assert len(trimmed_space(3, 2, 3)) == 45
    assert len(qminus_space(2, 1, 3)) == 24


def test_nesting_P_S_Q():
    for dim in (2, 3):
        for r in range(1, 6 if dim == 2 else 5):
            P = [FormField.scalar(p) for p in span_basis(SpaceSpec("P", (r,)), dim)]
            S = [FormField.scalar(p) for p in span_basis(SpaceSpec("S", (r,)), dim)]
            Q = [FormField.scalar(p) for p in span_basis(SpaceSpec("Q", (r,)), dim)]
            assert span_contains(S, P) and span_contains(Q, S)


def test_trimmed_identities_at_extreme_orders():
    for dim in (2, 3):
        for r in range(1, 4):
            assert span_equal(trimmed_space(dim, 0, r), serendipity_space(dim, 0, r))
            assert span_equal(trimmed_space(dim, dim, r), serendipity_space(dim, dim, r - 1))


def test_serendipity_zero_form_equals_superlinear_space():
    for dim in (2, 3):
        for r in range(1, 5):
            mono = [FormField.scalar(p) for p in span_basis(SpaceSpec("S", (r,)), dim)]
            assert span_equal(serendipity_space(dim, 0, r), mono)


def test_formfield_shape_checks():
    x = Polynomial.var(2, 0)
    with pytest.raises(ValueError):
        FormField(2, 1, [x])
    with pytest.raises(ValueError):
        FormField(3, 2, [x, x, x])
    f = FormField(2, 1, [x, x * 3])
    assert FormField.from_json(f.to_json()) == f
