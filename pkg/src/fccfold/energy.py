"""Contact energy models on the lattice.

Two models are supported: the two-class hydrophobic-polar model (each
non-consecutive H-H contact scores -1) and a 20x20 empirical contact matrix
where every non-consecutive contact scores the pair's matrix entry.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Optional, Sequence as Seq

import numpy as np

from .chain import AMINO_ACIDS, Conformation, Sequence
from .lattice import BASIS, Point

MATRIX_ENV = "FCCFOLD_MATRIX"
CHECK_ENV = "FCCFOLD_CHECK_ENERGY"


class EnergyModel(str, Enum):
    HP = "HP"
    BM = "BM"


class MatrixError(ValueError):
    pass


@dataclass(frozen=True)
class ContactMatrix:
    values: np.ndarray  # indexed in AMINO_ACIDS order
    name: str = "matrix"

    def __post_init__(self):
        self.values.setflags(write=False)

    def __getitem__(self, pair: tuple[str, str]) -> float:
        a, b = pair
        return float(self.values[_AA_INDEX[a], _AA_INDEX[b]])


_AA_INDEX = {c: i for i, c in enumerate(AMINO_ACIDS)}


@dataclass(frozen=True)
class ContactCensus:
    hh: int
    hp: int
    pp: int

    @property
    def total(self) -> int:
        return self.hh + self.hp + self.pp


def load_matrix(source, name: Optional[str] = None, tol: float = 1e-9) -> ContactMatrix:
    """Load a 20x20 contact matrix from CSV.

    ``source`` may be a path or an open text stream. The first non-comment
    row lists the 20 one-letter codes; the following 20 rows hold the
    values in the same order. Lines starting with ``#`` are ignored.
    """
    if isinstance(source, (str, Path)):
        path = Path(source)
        text = path.read_text()
        name = name or path.stem
    else:
        text = source.read()
        name = name or "matrix"
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].lstrip().startswith("#")]
    rows = [[cell.strip() for cell in r] for r in rows]
    if not rows:
        raise MatrixError("empty matrix file")
    header = rows[0]
    if sorted(header) != sorted(AMINO_ACIDS):
        missing = sorted(set(AMINO_ACIDS) - set(header))
        extra = sorted(set(header) - set(AMINO_ACIDS))
        raise MatrixError(f"header must list the 20 amino acids once; missing={missing} extra={extra}")
    if len(rows) - 1 != 20:
        raise MatrixError(f"expected 20 value rows, got {len(rows) - 1}")
    values = np.zeros((20, 20))
    for r, row in enumerate(rows[1:]):
        if len(row) != 20:
            raise MatrixError(f"row {header[r]}: expected 20 values, got {len(row)}")
        for c, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise MatrixError(f"non-numeric cell at ({header[r]},{header[c]}): {cell!r}") from None
            if not np.isfinite(v):
                raise MatrixError(f"non-finite cell at ({header[r]},{header[c]})")
            values[_AA_INDEX[header[r]], _AA_INDEX[header[c]]] = v
    for i in range(20):
        for j in range(i + 1, 20):
            if abs(values[i, j] - values[j, i]) > tol:
                a, b = AMINO_ACIDS[i], AMINO_ACIDS[j]
                raise MatrixError(
                    f"asymmetric entry for pair {a}-{b}: {values[i, j]} vs {values[j, i]}"
                )
    return ContactMatrix(values, name)


def default_matrix() -> ContactMatrix:
    """Matrix named by ``$FCCFOLD_MATRIX``, else the bundled Berrera table."""
    override = os.environ.get(MATRIX_ENV)
    if override:
        return load_matrix(override)
    ref = resources.files("fccfold") / "data" / "berrera.csv"
    with ref.open() as fh:
        return load_matrix(fh, name="berrera")


def zero_matrix() -> ContactMatrix:
    return ContactMatrix(np.zeros((20, 20)), "zero")


def pair_table(seq: Sequence, model: EnergyModel | str, matrix: Optional[ContactMatrix] = None) -> np.ndarray:
    """N x N table of contact energies for every residue pair of ``seq``."""
    model = EnergyModel(model)
    if model is EnergyModel.HP:
        h = np.array([k == "H" for k in seq.classes])
        return -np.outer(h, h).astype(float)
    if matrix is None:
        raise ValueError("BM model needs a contact matrix")
    idx = np.array([_AA_INDEX[c] for c in seq.codes])
    return matrix.values[np.ix_(idx, idx)].copy()


def evaluate(
    c: Conformation | Seq[Point],
    seq: Sequence,
    model: EnergyModel | str,
    matrix: Optional[ContactMatrix] = None,
) -> float:
    """Sum of contact energies over all non-consecutive pairs at squared distance 2."""
    coords = c.coords if isinstance(c, Conformation) else c
    model = EnergyModel(model)
    if model is EnergyModel.BM and matrix is None:
        raise ValueError("BM model needs a contact matrix")
    codes = seq.codes
    classes = seq.classes
    n = len(coords)
    total = 0.0
    for i in range(n):
        xi, yi, zi = coords[i]
        for j in range(i + 2, n):
            xj, yj, zj = coords[j]
            if (xi - xj) ** 2 + (yi - yj) ** 2 + (zi - zj) ** 2 == 2:
                if model is EnergyModel.HP:
                    if classes[i] == "H" and classes[j] == "H":
                        total -= 1.0
                else:
                    total += matrix[codes[i], codes[j]]
    return total


def contact_pairs(coords: Seq[Point]) -> list[tuple[int, int]]:
    n = len(coords)
    out = []
    for i in range(n):
        for j in range(i + 2, n):
            a, b = coords[i], coords[j]
            if (a[0] - b[0]) ** 2 + (a[1] - b[1]) ** 2 + (a[2] - b[2]) ** 2 == 2:
                out.append((i, j))
    return out


def contact_census(c: Conformation | Seq[Point], seq: Sequence) -> ContactCensus:
    coords = c.coords if isinstance(c, Conformation) else c
    counts = {"HH": 0, "HP": 0, "PH": 0, "PP": 0}
    for i, j in contact_pairs(coords):
        counts[seq.classes[i] + seq.classes[j]] += 1
    return ContactCensus(counts["HH"], counts["HP"] + counts["PH"], counts["PP"])


def hcc(c: Conformation | Seq[Point], seq: Sequence) -> tuple[float, float, float]:
    """Centroid of the hydrophobic residues."""
    coords = c.coords if isinstance(c, Conformation) else c
    pts = [p for p, k in zip(coords, seq.classes) if k == "H"]
    if not pts:
        raise ValueError("sequence has no hydrophobic residues")
    n = len(pts)
    return (
        sum(p[0] for p in pts) / n,
        sum(p[1] for p in pts) / n,
        sum(p[2] for p in pts) / n,
    )


class Energy:
    """Energy function bound to one sequence and model.

    Calls do the same full pair scan as :func:`evaluate`, vectorised. Set
    ``FCCFOLD_CHECK_ENERGY=1`` to cross-check every call against it.
    """

    def __init__(self, seq: Sequence, model: EnergyModel | str, matrix: Optional[ContactMatrix] = None):
        self.seq = seq
        self.model = EnergyModel(model)
        self.matrix = matrix
        self.table = pair_table(seq, self.model, matrix)
        n = len(seq)
        self._mask = np.triu(np.ones((n, n), dtype=bool), k=2)
        self._check = os.environ.get(CHECK_ENV, "") not in ("", "0")
        self.calls = 0

    def __call__(self, coords: Seq[Point]) -> float:
        self.calls += 1
        x = np.asarray(coords, dtype=np.int64)
        d = x[:, None, :] - x[None, :, :]
        contact = (np.einsum("ijk,ijk->ij", d, d) == 2) & self._mask
        e = float(self.table[contact].sum())
        if self._check:
            ref = evaluate(coords, self.seq, self.model, self.matrix)
            assert abs(ref - e) <= 1e-9, (ref, e)
        return e

    def residue_term(self, coords: Seq[Point], i: int, p: Point, occupied: dict[Point, int]) -> float:
        """Contact energy residue ``i`` would have at ``p`` with the others held fixed."""
        e = 0.0
        row = self.table[i]
        for d in BASIS:
            j = occupied.get((p[0] + d[0], p[1] + d[1], p[2] + d[2]))
            if j is not None and j != i and abs(j - i) > 1:
                e += row[j]
        return float(e)

    def score(self, c: Conformation) -> float:
        if c.energy is None:
            c.energy = self(c.coords)
        return c.energy
