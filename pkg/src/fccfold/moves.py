"""Conformation operators.

Every operator returns a new :class:`Conformation` (or a failed outcome)
and never mutates its input. Results are always self-avoiding walks with
the same number of residues; energies are left unset for the caller.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Optional, Sequence as Seq

from .chain import Conformation, Sequence, walk
from .energy import Energy, hcc
from .lattice import BASIS, BASIS_INDEX, OPPOSITE, Point, common_offsets, rotation_tables, sub


class MoveKind(str, Enum):
    CROSSOVER = "Crossover"
    ROTATION = "Rotation"
    DIAGONAL = "Diagonal"
    PULL = "Pull"
    TILT = "Tilt"
    MACRO = "MacroMutation"


class Guidance(str, Enum):
    HCC = "HCC"
    ENERGY = "BM-energy"


@dataclass(frozen=True)
class PullSpec:
    """A fully determined pull.

    Residue ``pos`` moves to ``target``. With ``span >= 2`` the next residue
    in ``direction`` moves to ``corner`` and the following ``span - 2``
    residues each take the old position of the residue two places back
    toward ``pos``.
    """

    pos: int
    direction: int
    target: Point
    corner: Optional[Point]
    span: int


@dataclass
class MoveOutcome:
    result: Optional[Conformation]
    kind: MoveKind
    site: int
    inverse: Optional[PullSpec] = None

    @property
    def ok(self) -> bool:
        return self.result is not None


def _from_coords(coords: list[Point]) -> Optional[Conformation]:
    """Validate moved coordinates and re-anchor them at the origin."""
    if len(set(coords)) != len(coords):
        return None
    x0 = coords[0]
    if x0 != (0, 0, 0):
        coords = [(p[0] - x0[0], p[1] - x0[1], p[2] - x0[2]) for p in coords]
    dirs = []
    for a, b in zip(coords, coords[1:]):
        k = BASIS_INDEX.get((b[0] - a[0], b[1] - a[1], b[2] - a[2]))
        if k is None:
            return None
        dirs.append(k)
    return Conformation(tuple(dirs), tuple(coords))


def _adjacent(p: Point, q: Point) -> bool:
    dx = p[0] - q[0]
    dy = p[1] - q[1]
    dz = p[2] - q[2]
    return dx * dx + dy * dy + dz * dz == 2


def _nbrs(p: Point):
    x, y, z = p
    return [(x + dx, y + dy, z + dz) for dx, dy, dz in BASIS]


# --- crossover ---------------------------------------------------------------


def crossover(a: Conformation, b: Conformation, pos: int) -> Optional[tuple[Conformation, Conformation]]:
    """Single-point crossover of the direction encodings at ``pos``.

    Returns None if either child is not self-avoiding.
    """
    n = len(a)
    if len(b) != n:
        raise ValueError("parents have different lengths")
    if not 1 <= pos <= n - 2:
        raise ValueError(f"crossover point {pos} outside 1..{n - 2}")
    d1 = a.directions[:pos] + b.directions[pos:]
    d2 = b.directions[:pos] + a.directions[pos:]
    c1 = walk(d1)
    if c1 is None:
        return None
    c2 = walk(d2)
    if c2 is None:
        return None
    return Conformation(d1, tuple(c1)), Conformation(d2, tuple(c2))


# --- rotation ----------------------------------------------------------------


def rotation(c: Conformation, pos: int, rot_index: int) -> MoveOutcome:
    """Rotate residues ``pos..`` about residue ``pos - 1``."""
    n = len(c)
    if not 1 <= pos <= n - 1:
        raise ValueError(f"rotation site {pos} outside 1..{n - 1}")
    perm = rotation_tables()[rot_index]
    dirs = c.directions[: pos - 1] + tuple(perm[k] for k in c.directions[pos - 1 :])
    coords = list(c.coords[:pos])
    occupied = set(coords)
    p = coords[-1]
    for k in dirs[pos - 1 :]:
        d = BASIS[k]
        p = (p[0] + d[0], p[1] + d[1], p[2] + d[2])
        if p in occupied:
            return MoveOutcome(None, MoveKind.ROTATION, pos)
        occupied.add(p)
        coords.append(p)
    return MoveOutcome(Conformation(dirs, tuple(coords)), MoveKind.ROTATION, pos)


# --- diagonal ----------------------------------------------------------------


def diagonal_candidates(coords: Seq[Point], pos: int) -> list[Point]:
    """Lattice points adjacent to both chain neighbours of ``pos``, in basis order."""
    a = coords[pos - 1]
    c = coords[pos + 1]
    b = coords[pos]
    out = []
    for u in common_offsets(sub(c, a)):
        q = (a[0] + u[0], a[1] + u[1], a[2] + u[2])
        if q != b:
            out.append(q)
    return out


def _set_residue(c: Conformation, pos: int, q: Point) -> Conformation:
    coords = c.coords[:pos] + (q,) + c.coords[pos + 1 :]
    dirs = list(c.directions)
    dirs[pos - 1] = BASIS_INDEX[sub(q, coords[pos - 1])]
    dirs[pos] = BASIS_INDEX[sub(coords[pos + 1], q)]
    return Conformation(tuple(dirs), coords)


def diagonal_move(
    c: Conformation,
    pos: int,
    occupied: Optional[set] = None,
    accept: Optional[Callable[[Point], bool]] = None,
) -> MoveOutcome:
    """Move residue ``pos`` to the first free common neighbour of its chain neighbours.

    ``accept`` may veto candidates; the first free candidate it accepts is used.
    """
    n = len(c)
    if not 1 <= pos <= n - 2:
        return MoveOutcome(None, MoveKind.DIAGONAL, pos)
    if occupied is None:
        occupied = set(c.coords)
    for q in diagonal_candidates(c.coords, pos):
        if q in occupied:
            continue
        if accept is not None and not accept(q):
            continue
        return MoveOutcome(_set_residue(c, pos, q), MoveKind.DIAGONAL, pos)
    return MoveOutcome(None, MoveKind.DIAGONAL, pos)


# --- pull --------------------------------------------------------------------
#
# Pull moves are defined on the square lattice; this is an FCC reading of
# them. Residue i moves to a free neighbour L of its anchor (the chain
# neighbour on the side opposite to the pull direction). If the next residue
# is not adjacent to L it moves to a free point C adjacent to both L and the
# old position of i, and every further residue takes the old position of the
# residue two places back, until one is already adjacent to its moved
# neighbour or the chain ends. End residues have no anchor and may move to
# any free L next to a free C adjacent to their old position.


def _span(coords: Seq[Point], i: int, d: int, corner: Point) -> int:
    n = len(coords)
    prev_new = corner
    k = 2
    while True:
        j = i + k * d
        if not 0 <= j < n or _adjacent(coords[j], prev_new):
            return k
        prev_new = coords[i + (k - 2) * d]
        k += 1


def _raw_candidates(coords: Seq[Point], pos: int, occupied: set) -> list[tuple[int, Point, Optional[Point]]]:
    # (direction, target, corner) triples; corner None means span 1
    n = len(coords)
    here = coords[pos]
    out = []
    for d in (-1, 1):
        anchor = pos - d
        nxt = pos + d
        if not 0 <= nxt < n:
            # nothing to drag: plain relocation next to the anchor
            if 0 <= anchor < n:
                for L in _nbrs(coords[anchor]):
                    if L not in occupied:
                        out.append((d, L, None))
            continue
        x_next = coords[nxt]
        if 0 <= anchor < n:
            for L in _nbrs(coords[anchor]):
                if L in occupied:
                    continue
                if _adjacent(L, x_next):
                    out.append((d, L, None))
                    continue
                for u in common_offsets((here[0] - L[0], here[1] - L[1], here[2] - L[2])):
                    C = (L[0] + u[0], L[1] + u[1], L[2] + u[2])
                    if C not in occupied:
                        out.append((d, L, C))
        else:
            for C in _nbrs(here):
                if C in occupied:
                    continue
                for L in _nbrs(C):
                    if L in occupied or _adjacent(L, x_next):
                        continue
                    out.append((d, L, C))
    return out


def _spec(coords: Seq[Point], pos: int, cand) -> PullSpec:
    d, L, C = cand
    return PullSpec(pos, d, L, C, 1 if C is None else _span(coords, pos, d, C))


def pull_candidates(c: Conformation, pos: int, occupied: Optional[set] = None) -> list[PullSpec]:
    coords = c.coords
    if not 0 <= pos < len(coords):
        raise ValueError(f"pull site {pos} outside 0..{len(coords) - 1}")
    if occupied is None:
        occupied = set(coords)
    return [_spec(coords, pos, cand) for cand in _raw_candidates(coords, pos, occupied)]


def _pulled_coords(c: Conformation, spec: PullSpec) -> Optional[list[Point]]:
    old = c.coords
    n = len(old)
    i, d, s = spec.pos, spec.direction, spec.span
    last = i + (s - 1) * d
    if s < 1 or not 0 <= i < n or not 0 <= last < n:
        return None
    new = list(old)
    new[i] = spec.target
    if s >= 2:
        if spec.corner is None:
            return None
        new[i + d] = spec.corner
    for k in range(2, s):
        new[i + k * d] = old[i + (k - 2) * d]
    return new


def apply_pull(c: Conformation, spec: PullSpec) -> Optional[Conformation]:
    """Apply an explicit pull; None if the result is not a valid walk."""
    new = _pulled_coords(c, spec)
    return None if new is None else _from_coords(new)


def pull_inverse(c: Conformation, spec: PullSpec, result: Conformation) -> PullSpec:
    """The pull that takes ``result`` back to ``c``, in ``result``'s frame."""
    old = c.coords
    raw = _pulled_coords(c, spec)
    shift = raw[0]  # result = raw - shift
    i, d, s = spec.pos, spec.direction, spec.span

    def here(p):
        return (p[0] - shift[0], p[1] - shift[1], p[2] - shift[2])

    if s == 1:
        n = len(old)
        d_back = d if 0 <= i - d < n else -d
        return PullSpec(i, d_back, here(old[i]), None, 1)
    j = i + (s - 1) * d
    return PullSpec(j, -d, here(old[j]), here(old[j - d]), s)


def pull_move(c: Conformation, pos: int, rng: random.Random, occupied: Optional[set] = None) -> MoveOutcome:
    """Apply a pull at ``pos`` chosen uniformly among the feasible ones."""
    coords = c.coords
    if not 0 <= pos < len(coords):
        raise ValueError(f"pull site {pos} outside 0..{len(coords) - 1}")
    cands = _raw_candidates(coords, pos, set(coords) if occupied is None else occupied)
    if not cands:
        return MoveOutcome(None, MoveKind.PULL, pos)
    spec = _spec(coords, pos, cands[rng.randrange(len(cands))])
    result = apply_pull(c, spec)
    if result is None:  # candidates are valid by construction
        return MoveOutcome(None, MoveKind.PULL, pos)
    return MoveOutcome(result, MoveKind.PULL, pos, pull_inverse(c, spec, result))


# --- tilt --------------------------------------------------------------------


def tilt_move(
    c: Conformation,
    pos: int,
    rng: random.Random,
    length: Optional[int] = None,
    occupied: Optional[set] = None,
) -> MoveOutcome:
    """Shift a straight run of residues starting at ``pos`` onto a parallel line.

    The run is the maximal straight segment from ``pos`` unless ``length``
    (in residues, at least 2) is given, in which case those residues must
    be collinear. Each translation by a basis vector not along the run is
    tried; flanking residues on both sides are dragged into vacated points
    until the chain closes. One successful translation is picked at random.
    """
    dirs = c.directions
    old = c.coords
    n = len(old)
    fail = MoveOutcome(None, MoveKind.TILT, pos)
    if not 0 <= pos <= n - 2:
        return fail
    u = dirs[pos]
    if length is None:
        e = pos + 1
        while e < n - 1 and dirs[e] == u:
            e += 1
    else:
        if length < 2 or pos + length - 1 > n - 1:
            return fail
        e = pos + length - 1
        if any(k != u for k in dirs[pos:e]):
            return fail
    if occupied is None:
        occupied = set(old)
    results = []
    for k, t in enumerate(BASIS):
        if k == u or k == OPPOSITE[u]:
            continue
        seg = [(p[0] + t[0], p[1] + t[1], p[2] + t[2]) for p in old[pos : e + 1]]
        if any(q in occupied for q in seg):
            continue
        new = list(old)
        new[pos : e + 1] = seg
        j = pos - 1
        while j >= 0 and not _adjacent(old[j], new[j + 1]):
            new[j] = old[j + 1]
            j -= 1
        j = e + 1
        while j < n and not _adjacent(old[j], new[j - 1]):
            new[j] = old[j - 1]
            j += 1
        conf = _from_coords(new)
        if conf is not None:
            results.append(conf)
    if not results:
        return fail
    return MoveOutcome(results[rng.randrange(len(results))], MoveKind.TILT, pos)


# --- macro-mutation ----------------------------------------------------------


def _dist(p: Point, q) -> float:
    return math.sqrt((p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2 + (p[2] - q[2]) ** 2)


def macro_mutation(
    c: Conformation,
    seq: Sequence,
    repeat: int = 5,
    p: float = 0.2,
    rng: Optional[random.Random] = None,
    guidance: Guidance | str = Guidance.HCC,
    energy: Optional[Energy] = None,
    on_accept: Optional[Callable[[int, str, float, float], None]] = None,
) -> Conformation:
    """Composite sequence of diagonal moves that pulls the chain around its H core.

    Each sweep picks the residue class (P with probability ``p``) and walks
    every residue of that class once. P residues take their first free
    diagonal position. H residues take the first one that does not move
    them away from the hydrophobic centroid (``Guidance.HCC``) or does not
    raise the contact energy (``Guidance.ENERGY``, needs ``energy``). The
    centroid is computed once per sweep.
    """
    if repeat < 1:
        raise ValueError("repeat must be >= 1")
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    guidance = Guidance(guidance)
    if guidance is Guidance.ENERGY and energy is None:
        raise ValueError("energy guidance needs an Energy function")
    rng = rng or random.Random()
    classes = seq.classes
    n = len(c)
    coords = list(c.coords)
    occupied = {q: i for i, q in enumerate(coords)}
    moved = False
    for _ in range(repeat):
        target = "P" if rng.random() < p else "H"
        center = hcc(coords, seq)
        for j in range(1, n - 1):
            if classes[j] != target:
                continue
            cur = coords[j]
            d_old = _dist(cur, center)
            for q in diagonal_candidates(coords, j):
                if q in occupied:
                    continue
                d_new = _dist(q, center)
                if target == "H":
                    if guidance is Guidance.HCC:
                        if d_new > d_old:
                            continue
                    elif energy.residue_term(coords, j, q, occupied) > energy.residue_term(
                        coords, j, cur, occupied
                    ):
                        continue
                del occupied[cur]
                occupied[q] = j
                coords[j] = q
                moved = True
                if on_accept is not None:
                    on_accept(j, target, d_old, d_new)
                break
    if not moved:
        return c
    return _from_coords(coords)
