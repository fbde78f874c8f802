"""Face-centred-cubic lattice geometry.

Points are integer triples whose coordinate sum is even. Each point has 12
nearest neighbours at squared distance 2; the displacement vectors are kept
in a fixed order and every direction encoding in the package indexes into
``BASIS`` (index 0 is ``(1, 1, 0)``).
"""

from __future__ import annotations

import itertools
from functools import lru_cache

Point = tuple[int, int, int]
Matrix = tuple[tuple[int, int, int], tuple[int, int, int], tuple[int, int, int]]

BASIS: tuple[Point, ...] = (
    (1, 1, 0),
    (-1, -1, 0),
    (-1, 1, 0),
    (1, -1, 0),
    (0, 1, 1),
    (0, 1, -1),
    (1, 0, 1),
    (1, 0, -1),
    (0, -1, 1),
    (-1, 0, 1),
    (0, -1, -1),
    (-1, 0, -1),
)

BASIS_INDEX: dict[Point, int] = {v: k for k, v in enumerate(BASIS)}

# OPPOSITE[k] is the index of -BASIS[k]
OPPOSITE: tuple[int, ...] = tuple(BASIS_INDEX[(-x, -y, -z)] for x, y, z in BASIS)

ORIGIN: Point = (0, 0, 0)


def add(p: Point, q: Point) -> Point:
    return (p[0] + q[0], p[1] + q[1], p[2] + q[2])


def sub(p: Point, q: Point) -> Point:
    return (p[0] - q[0], p[1] - q[1], p[2] - q[2])


def sqdist(p: Point, q: Point) -> int:
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    dz = p[2] - q[2]
    return dx * dx + dy * dy + dz * dz


def is_lattice_point(p: Point) -> bool:
    return (p[0] + p[1] + p[2]) % 2 == 0


def neighbors(p: Point) -> list[Point]:
    """The 12 lattice neighbours of ``p`` in basis order."""
    x, y, z = p
    return [(x + dx, y + dy, z + dz) for dx, dy, dz in BASIS]


def is_contact(p: Point, q: Point) -> bool:
    return sqdist(p, q) == 2


@lru_cache(maxsize=None)
def common_offsets(delta: Point) -> tuple[Point, ...]:
    """Basis vectors ``u`` such that ``delta - u`` is also a basis vector.

    For chain neighbours ``a`` and ``c = a + delta`` these are the offsets
    (from ``a``) of every lattice point adjacent to both, in basis order.
    """
    return tuple(u for u in BASIS if sub(delta, u) in BASIS_INDEX)


def apply(m: Matrix, p: Point) -> Point:
    return (
        m[0][0] * p[0] + m[0][1] * p[1] + m[0][2] * p[2],
        m[1][0] * p[0] + m[1][1] * p[1] + m[1][2] * p[2],
        m[2][0] * p[0] + m[2][1] * p[1] + m[2][2] * p[2],
    )


def _det(m: Matrix) -> int:
    (a, b, c), (d, e, f), (g, h, i) = m
    return a * (e * i - f * h) - b * (d * i - f * g) + c * (d * h - e * g)


@lru_cache(maxsize=None)
def lattice_symmetries(proper: bool = True) -> tuple[Matrix, ...]:
    """Signed permutation matrices preserving the basis set.

    With ``proper=True`` only the 24 rotations (determinant +1) are
    returned, identity first; otherwise all 48 including reflections.
    """
    out = []
    for perm in itertools.permutations(range(3)):
        for signs in itertools.product((1, -1), repeat=3):
            rows = []
            for r in range(3):
                row = [0, 0, 0]
                row[perm[r]] = signs[r]
                rows.append(tuple(row))
            m = tuple(rows)
            if proper and _det(m) != 1:
                continue
            if all(apply(m, v) in BASIS_INDEX for v in BASIS):
                out.append(m)
    identity = ((1, 0, 0), (0, 1, 0), (0, 0, 1))
    out.sort(key=lambda m: m != identity)
    return tuple(out)


def lattice_rotations() -> list[Matrix]:
    """The 24 proper rotations of the cube, each mapping ``BASIS`` onto itself."""
    return list(lattice_symmetries(True))


@lru_cache(maxsize=None)
def rotation_tables() -> tuple[tuple[int, ...], ...]:
    """Per rotation, the permutation it induces on basis indices."""
    return tuple(
        tuple(BASIS_INDEX[apply(m, v)] for v in BASIS) for m in lattice_symmetries(True)
    )
