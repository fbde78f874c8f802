"""Sequences and lattice conformations.

A conformation stores both the absolute direction encoding (basis indices,
length N-1) and the coordinates it produces from the origin. The two views
are kept in step by every constructor in this package.
"""

from __future__ import annotations

import random
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence as Seq

from .lattice import BASIS, BASIS_INDEX, ORIGIN, Point, add, is_lattice_point, sub

AMINO_ACIDS = "ACDEFGHIKLMNPQRSTVWY"
HYDROPHOBIC = frozenset("GAPVLIMFYW")

# Alternating v1, v4: (0,0,0) (1,1,0) (2,0,0) (3,1,0) ... never revisits a point.
ZIGZAG = (0, 3)


class SequenceError(ValueError):
    pass


class StructureError(ValueError):
    pass


class SelfCollision(StructureError):
    def __init__(self, residue: int):
        super().__init__(f"self-collision at residue {residue}")
        self.residue = residue


@dataclass(frozen=True)
class Residue:
    code: str
    klass: str  # "H" or "P"


@dataclass(frozen=True)
class Sequence:
    codes: str
    id: str = "query"
    classes: str = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(
            self, "classes", "".join("H" if c in HYDROPHOBIC else "P" for c in self.codes)
        )

    def __len__(self) -> int:
        return len(self.codes)

    @property
    def residues(self) -> list[Residue]:
        return [Residue(c, k) for c, k in zip(self.codes, self.classes)]

    @property
    def h_count(self) -> int:
        return self.classes.count("H")


@dataclass(slots=True)
class Conformation:
    directions: tuple[int, ...]
    coords: tuple[Point, ...]
    energy: Optional[float] = None

    def __len__(self) -> int:
        return len(self.coords)

    @property
    def key(self) -> tuple[int, ...]:
        return self.directions

    @classmethod
    def from_directions(cls, directions: Iterable[int]) -> "Conformation":
        directions = tuple(directions)
        return cls(directions, rebuild_coords(directions))

    @classmethod
    def from_coords(cls, coords: Seq[Point]) -> "Conformation":
        """Build from coordinates, validating and translating to the origin."""
        coords = [tuple(int(v) for v in p) for p in coords]
        if not coords:
            raise StructureError("empty structure")
        x0 = coords[0]
        coords = [sub(p, x0) for p in coords]
        dirs = []
        for i in range(1, len(coords)):
            d = sub(coords[i], coords[i - 1])
            k = BASIS_INDEX.get(d)
            if k is None:
                raise StructureError(
                    f"residues {i - 1} and {i} are not lattice neighbours (step {d})"
                )
            dirs.append(k)
        seen = {}
        for i, p in enumerate(coords):
            if p in seen:
                raise StructureError(f"residues {seen[p]} and {i} occupy the same point {p}")
            seen[p] = i
        return cls(tuple(dirs), tuple(coords))


def duplicate_key(c: Conformation) -> tuple[int, ...]:
    return c.directions


def parse_sequence(text: str, id: Optional[str] = None) -> Sequence:
    """Parse a raw residue string or a single FASTA record."""
    lines = text.strip().splitlines()
    name = id
    body = []
    for line in lines:
        line = line.strip()
        if line.startswith(">"):
            if name is None:
                name = line[1:].split()[0] if line[1:].split() else None
            continue
        if line.startswith(";"):
            continue
        body.append(line)
    codes = "".join("".join(body).split()).upper()
    for pos, ch in enumerate(codes, 1):
        if ch not in AMINO_ACIDS:
            raise SequenceError(f"invalid residue {ch!r} at position {pos}")
    if len(codes) < 3:
        raise SequenceError(f"sequence must have at least 3 residues, got {len(codes)}")
    return Sequence(codes, name or "query")


def read_sequence(source: str) -> Sequence:
    """Read from a path, ``-`` for stdin, or treat ``source`` as residues."""
    if source == "-":
        return parse_sequence(sys.stdin.read())
    path = Path(source)
    if path.exists():
        return parse_sequence(path.read_text(), None if _is_fasta(path) else path.stem)
    if source.isalpha():
        return parse_sequence(source)
    raise SequenceError(f"sequence file not found: {source}")


def _is_fasta(path: Path) -> bool:
    with open(path) as fh:
        return fh.read(1) == ">"


def walk(directions: Seq[int]) -> Optional[list[Point]]:
    """Coordinates for ``directions`` or None if the walk revisits a point."""
    p = ORIGIN
    coords = [p]
    occupied = {p}
    for k in directions:
        d = BASIS[k]
        p = (p[0] + d[0], p[1] + d[1], p[2] + d[2])
        if p in occupied:
            return None
        occupied.add(p)
        coords.append(p)
    return coords


def rebuild_coords(directions: Seq[int]) -> tuple[Point, ...]:
    """Coordinates from the origin; raises :class:`SelfCollision` on revisit."""
    p = ORIGIN
    coords = [p]
    occupied = {p}
    for i, k in enumerate(directions, 1):
        p = add(p, BASIS[k])
        if p in occupied:
            raise SelfCollision(i)
        occupied.add(p)
        coords.append(p)
    return tuple(coords)


def zigzag(n: int) -> Conformation:
    return Conformation.from_directions(ZIGZAG[i % 2] for i in range(n - 1))


def initialise(seq: Sequence | int, rng: random.Random, attempt_cap: int = 1000) -> Conformation:
    """Random self-avoiding walk from the origin.

    Each step picks uniformly among the free neighbours of the previous
    residue; a walk that reaches a point with no free neighbour is abandoned
    and restarted. After ``attempt_cap`` abandoned walks the extended
    zig-zag is returned instead.
    """
    if attempt_cap < 1:
        raise ValueError("attempt_cap must be >= 1")
    n = seq if isinstance(seq, int) else len(seq)
    for _ in range(attempt_cap):
        p = ORIGIN
        occupied = {p}
        coords = [p]
        dirs = []
        for _i in range(1, n):
            free = []
            for k, d in enumerate(BASIS):
                q = (p[0] + d[0], p[1] + d[1], p[2] + d[2])
                if q not in occupied:
                    free.append((k, q))
            if not free:
                break
            k, p = free[rng.randrange(len(free))]
            occupied.add(p)
            coords.append(p)
            dirs.append(k)
        else:
            return Conformation(tuple(dirs), tuple(coords))
    return zigzag(n)


def is_valid(coords: Seq[Point]) -> bool:
    """Self-avoiding, chain-connected and on the lattice."""
    if len(set(coords)) != len(coords):
        return False
    for a, b in zip(coords, coords[1:]):
        if sub(b, a) not in BASIS_INDEX:
            return False
    return all(is_lattice_point(p) for p in coords)


# --- structure text format --------------------------------------------------
#
#   # id=<sequence id> energy=<float repr> [model=<HP|BM>]
#   <index> <code> <x> <y> <z>
#   ...


def format_structure(
    c: Conformation, seq: Sequence, energy: Optional[float] = None, model: Optional[str] = None
) -> str:
    if len(c) != len(seq):
        raise StructureError("conformation and sequence lengths differ")
    e = c.energy if energy is None else energy
    head = f"# id={seq.id} energy={e!r}"
    if model:
        head += f" model={model}"
    lines = [head]
    for i, (code, p) in enumerate(zip(seq.codes, c.coords)):
        lines.append(f"{i} {code} {p[0]} {p[1]} {p[2]}")
    return "\n".join(lines) + "\n"


def parse_structure(text: str) -> tuple[Sequence, Conformation, Optional[float]]:
    seq_id = "query"
    energy = None
    codes = []
    coords = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            for tok in line[1:].split():
                key, _, val = tok.partition("=")
                if key == "id":
                    seq_id = val
                elif key == "energy" and val not in ("", "None"):
                    energy = float(val)
            continue
        parts = line.split()
        if len(parts) != 5:
            raise StructureError(f"line {lineno}: expected 'index code x y z'")
        idx, code, *xyz = parts
        try:
            idx = int(idx)
            p = tuple(int(v) for v in xyz)
        except ValueError:
            raise StructureError(f"line {lineno}: non-integer field") from None
        if idx != len(codes):
            raise StructureError(f"line {lineno}: expected index {len(codes)}, got {idx}")
        codes.append(code)
        coords.append(p)
    seq = parse_sequence("".join(codes), seq_id)
    return seq, Conformation.from_coords(coords), energy


def write_structure(path: Path | str, c: Conformation, seq: Sequence, energy=None, model=None) -> None:
    Path(path).write_text(format_structure(c, seq, energy, model))


def read_structure(path: Path | str) -> tuple[Sequence, Conformation, Optional[float]]:
    return parse_structure(Path(path).read_text())
