import numpy as np
import pytest

from cubedr.assembly import (AssemblyError, QuadratureError, assemble_bilinear, assemble_load,
                             build_complex, build_global, cohomology_report, diff_matrix,
                             interpolate_exact, local_diff, local_matrix, quadrature)
from cubedr.cubemesh import build_mesh
from cubedr.polyform import FormField, Polynomial
from cubedr.refelem import build_element


def test_global_dims_2d():
    mesh = build_mesh(2, (2, 2))
    assert build_global(mesh, build_element("Hermite", 2, 0, 3)).ndofs == 43
    assert build_global(mesh, build_element("Adini", 2, 0, 3)).ndofs == 27
    one = build_mesh(2, (1, 1))
    assert build_global(one, build_element("ReducedAdini", 2, 1, 2)).ndofs == 12


@pytest.mark.parametrize("fam", ["Hermite", "Adini", "TrimmedAdini", "ReducedAdini"])
@pytest.mark.parametrize("N", [1, 2, 3])
def test_exactness_2d(fam, N):
    rep = cohomology_report(build_complex(build_mesh(2, (N, N)), fam, 3))
    assert rep.dd_zero and rep.constants_in_kernel
    assert rep.betti == [1, 0, 0]
    assert rep.exact


def test_hermite_ranks_2x2():
    rep = cohomology_report(build_complex(build_mesh(2, (2, 2)), "Hermite", 3))
    assert rep.dims[0] == 43
    assert rep.ranks[0] == 42
    assert rep.ranks[1] == rep.dims[2]


def test_exactness_3d_single_cell():
    for fam in ("Adini", "TrimmedAdini"):
        rep = cohomology_report(build_complex(build_mesh(3, (1, 1, 1)), fam, 3))
        assert rep.betti == [1, 0, 0, 0] and rep.dd_zero


def test_interpolation_of_polynomial_is_single_valued():
    mesh = build_mesh(2, (2, 2))
    V = build_global(mesh, build_element("Hermite", 2, 0, 3))
    x, y = Polynomial.var(2, 0), Polynomial.var(2, 1)
    c = interpolate_exact(V, FormField.scalar(x * x * y + 3 * y))
    assert len(c) == 43 and all(v is not None for v in c)


def test_local_diff_containment_failure():
    with pytest.raises(AssemblyError):
        local_diff(build_element("Hermite", 2, 0, 3), build_element("Adini", 2, 1, 2))
    with pytest.raises(AssemblyError):
        local_diff(build_element("Hermite", 2, 0, 3), build_element("Hermite", 2, 2, 3))


def test_diff_matrix_requires_same_mesh():
    a = build_global(build_mesh(2, (1, 1)), build_element("Adini", 2, 0, 3))
    b = build_global(build_mesh(2, (1, 1)), build_element("Adini", 2, 1, 2))
    with pytest.raises(AssemblyError):
        diff_matrix(a, b)


def test_quadrature_rule():
    q = quadrature(2, 5)
    assert q.points.shape == (9, 2)
    assert np.isclose(q.weights.sum(), 4.0)
    assert np.isclose(np.sum(q.weights * q.points[:, 0] ** 4), 2 / 5 * 2)


def test_mass_of_piecewise_constants():
    mesh = build_mesh(2, (2, 2))
    V = build_global(mesh, build_element("S", 2, 2, 0))
    M = assemble_bilinear(V, "mass").toarray()
    assert np.allclose(M, np.eye(4) / 4)


def test_broken_grad_kills_constants():
    mesh = build_mesh(2, (3, 3))
    V = build_global(mesh, build_element("Adini", 2, 0, 3))
    one = np.array([float(v) for v in interpolate_exact(V, FormField.scalar(Polynomial.const(2, 1)))])
    A = assemble_bilinear(V, "broken_grad")
    assert np.abs(A @ one).max() < 1e-12


def test_rigid_rotation_has_zero_symmetric_energy():
    mesh = build_mesh(2, (2, 2))
    V = build_global(mesh, build_element("Adini", 2, 1, 2))
    x, y = Polynomial.var(2, 0), Polynomial.var(2, 1)
    c = np.array([float(v) for v in interpolate_exact(V, FormField(2, 1, [-y, x]))])
    E = assemble_bilinear(V, "broken_sym_grad")
    G = assemble_bilinear(V, "broken_grad")
    assert abs(c @ (E @ c)) < 1e-12
    assert c @ (G @ c) > 0.5


def test_stiffness_symmetric_and_positive_on_interior():
    mesh = build_mesh(2, (3, 3))
    V = build_global(mesh, build_element("Hermite", 2, 0, 3))
    A = assemble_bilinear(V, "broken_grad").toarray()
    assert np.allclose(A, A.T)
    idx = V.interior_dofs()
    np.linalg.cholesky(A[np.ix_(idx, idx)])


def test_quadrature_order_too_low():
    V = build_global(build_mesh(2, (1, 1)), build_element("Hermite", 2, 0, 3))
    with pytest.raises(QuadratureError):
        local_matrix(V, "mass", order=2)
    with pytest.raises(AssemblyError):
        local_matrix(V, "broken_sym_grad")


def test_load_vector_integrates_constants():
    mesh = build_mesh(2, (2, 2))
    V = build_global(mesh, build_element("S", 2, 2, 0))
    b = assemble_load(V, lambda X: np.ones((1, len(X))))
    assert np.allclose(b, 0.25)
