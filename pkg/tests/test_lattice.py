import itertools

from fccfold.lattice import (
    BASIS,
    BASIS_INDEX,
    OPPOSITE,
    apply,
    common_offsets,
    is_contact,
    is_lattice_point,
    lattice_rotations,
    lattice_symmetries,
    neighbors,
    rotation_tables,
    sqdist,
)

EXPECTED = [
    (1, 1, 0), (-1, -1, 0), (-1, 1, 0), (1, -1, 0), (0, 1, 1), (0, 1, -1),
    (1, 0, 1), (1, 0, -1), (0, -1, 1), (-1, 0, 1), (0, -1, -1), (-1, 0, -1),
]


def test_basis_order_and_length():
    assert list(BASIS) == EXPECTED
    assert all(sqdist(v, (0, 0, 0)) == 2 for v in BASIS)


def test_basis_is_every_vector_of_squared_length_two():
    found = {
        v for v in itertools.product((-1, 0, 1), repeat=3) if sum(c * c for c in v) == 2
    }
    assert found == set(BASIS)


def test_negation_pairs():
    # 1-based pairs v1=-v2, v3=-v4, v5=-v11, v6=-v9, v7=-v12, v8=-v10
    pairs = [(1, 2), (3, 4), (5, 11), (6, 9), (7, 12), (8, 10)]
    for a, b in pairs:
        assert OPPOSITE[a - 1] == b - 1
        assert OPPOSITE[b - 1] == a - 1


def test_neighbors_and_contact():
    p = (2, 0, 4)
    nb = neighbors(p)
    assert len(set(nb)) == 12
    assert all(is_contact(p, q) and is_lattice_point(q) for q in nb)
    assert not is_contact(p, (4, 0, 4))


def test_common_offsets_are_shared_neighbours():
    for delta in BASIS:
        for u in common_offsets(delta):
            assert is_contact((0, 0, 0), u)
            assert is_contact(u, delta)
        assert len(common_offsets(delta)) == 4


def test_rotations():
    rots = lattice_rotations()
    assert len(rots) == 24
    assert rots[0] == ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    assert len(lattice_symmetries(False)) == 48
    for m in rots:
        assert {apply(m, v) for v in BASIS} == set(BASIS)
    tables = rotation_tables()
    assert len(set(tables)) == 24
    for t in tables:
        assert sorted(t) == list(range(12))


def test_basis_index_roundtrip():
    for k, v in enumerate(BASIS):
        assert BASIS_INDEX[v] == k
