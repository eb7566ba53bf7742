import json
from fractions import Fraction

import pytest

from cubedr.cubemesh import CubicalMesh, MeshError, build_mesh, jump_pairs, parse_mesh_spec
from cubedr.refelem import reference_entities


def counts(mesh):
    return [mesh.num_entities(d) for d in range(mesh.n + 1)]


def test_entity_counts_2d():
    assert counts(build_mesh(2, (2, 2))) == [9, 12, 4]
    assert counts(build_mesh(2, (3, 1))) == [8, 10, 3]


def test_entity_counts_3d():
    assert counts(build_mesh(3, (2, 2, 2))) == [27, 54, 36, 8]


@pytest.mark.parametrize("shape", [(1, 1), (3, 2), (1, 1, 1), (2, 3, 1)])
def test_euler_characteristic_of_box_is_one(shape):
    assert build_mesh(len(shape), shape).euler_characteristic() == 1


def test_shared_entities_have_consistent_incidence():
    mesh = build_mesh(2, (2, 2))
    centre = mesh.entity_id((), (1, 1))
    assert sorted(mesh.cells_of(0, centre)) == [0, 1, 2, 3]
    edges = [mesh.cells_of(1, g) for g in range(mesh.num_entities(1))]
    assert sum(len(c) == 2 for c in edges) == 4
    assert sum(len(c) == 1 for c in edges) == 8


def test_cell_entity_matches_vertex_coordinates():
    mesh = build_mesh(3, (2, 1, 2), box=[(0, 2), (0, 1), (1, 3)])
    for K in range(mesh.num_cells):
        shift, scale = mesh.cell_map(K)
        for v in reference_entities(3)[0]:
            g = mesh.cell_entity(K, v)
            phys = tuple(s + h * p for s, h, p in zip(shift, scale, v.point()))
            assert mesh.vertex_coords(g) == phys


def test_boundary_flags():
    mesh = build_mesh(2, (2, 2))
    assert sum(mesh.is_boundary(0, g) for g in range(9)) == 8
    assert sum(mesh.is_boundary(1, g) for g in range(12)) == 8
    assert not any(mesh.is_boundary(2, g) for g in range(4))


def test_frames_use_positive_axes():
    mesh = build_mesh(2, (2, 2))
    for g in range(mesh.num_entities(1)):
        f = mesh.frame(1, g)
        assert len(f.tangents) == 1 and len(f.normals) == 1
        assert f.hi[f.tangents[0]] - f.lo[f.tangents[0]] == Fraction(1, 2)


def test_jump_pairs():
    mesh = build_mesh(2, (3, 3))
    pairs = jump_pairs(mesh)
    assert len(pairs) == 12
    for gid, left, right in pairs:
        assert left != right
        assert set(mesh.cells_of(1, gid)) == {left, right}


def test_json_config_and_tables():
    mesh = CubicalMesh.from_json(json.dumps({"n": 2, "cells_per_axis": [2, 1],
                                             "box": [[0, 1], [0, 1]]}))
    t = mesh.tables()
    assert t["cells_per_axis"] == [2, 1] and len(t["entities"][0]) == 6
    assert mesh.tables() == t


def test_mesh_errors():
    with pytest.raises(MeshError):
        build_mesh(2, (0, 1))
    with pytest.raises(MeshError):
        build_mesh(2, (1, 1), box=[(0, 0), (0, 1)])
    with pytest.raises(MeshError):
        build_mesh(4, (1, 1, 1, 1))
    with pytest.raises(MeshError):
        build_mesh(2, (1, 1, 1))


def test_parse_mesh_spec():
    assert parse_mesh_spec("2x3") == (2, 3)
    assert parse_mesh_spec("2x2x2") == (2, 2, 2)
    for bad in ("2", "ax2", "0x1"):
        with pytest.raises(MeshError):
            parse_mesh_spec(bad)
