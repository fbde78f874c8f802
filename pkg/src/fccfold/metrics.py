"""Structure quality and experiment statistics."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence as Seq

import numpy as np
from scipy.stats import norm, rankdata

from .chain import Conformation, Sequence
from .energy import contact_census

ANGSTROM_PER_STEP = 3.8
# one lattice step has Euclidean length sqrt(2) lattice units
SCALE = ANGSTROM_PER_STEP / math.sqrt(2.0)


class ReferenceFormatError(ValueError):
    pass


@dataclass(frozen=True)
class ReferenceStructure:
    distances: np.ndarray  # N x N, Angstrom

    def __post_init__(self):
        d = self.distances
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ReferenceFormatError("distance matrix must be square")
        if not np.allclose(d, d.T, atol=1e-6):
            raise ReferenceFormatError("distance matrix is not symmetric")
        if np.any(np.diag(d) != 0) or np.any(d < 0):
            raise ReferenceFormatError("distance matrix needs a zero diagonal and non-negative entries")
        d.setflags(write=False)

    def __len__(self) -> int:
        return self.distances.shape[0]

    @classmethod
    def from_coords(cls, coords: Seq[Seq[float]]) -> "ReferenceStructure":
        x = np.asarray(coords, dtype=float)
        return cls(np.linalg.norm(x[:, None, :] - x[None, :, :], axis=-1))


def load_reference(path: Path | str) -> ReferenceStructure:
    """Read a CSV distance matrix or an ``index x y z`` coordinate file (Angstrom)."""
    lines = [
        ln.strip()
        for ln in Path(path).read_text().splitlines()
        if ln.strip() and not ln.lstrip().startswith("#")
    ]
    if not lines:
        raise ReferenceFormatError(f"{path}: empty reference file")
    if "," in lines[0]:
        try:
            rows = [[float(v) for v in ln.split(",")] for ln in lines]
        except ValueError as exc:
            raise ReferenceFormatError(f"{path}: {exc}") from None
        if any(len(r) != len(rows) for r in rows):
            raise ReferenceFormatError(f"{path}: distance matrix must be square")
        return ReferenceStructure(np.array(rows))
    coords = []
    for lineno, ln in enumerate(lines, 1):
        parts = ln.split()
        if len(parts) != 4:
            raise ReferenceFormatError(f"{path}:{lineno}: expected 'index x y z'")
        try:
            coords.append([float(v) for v in parts[1:]])
        except ValueError:
            raise ReferenceFormatError(f"{path}:{lineno}: non-numeric coordinate") from None
    return ReferenceStructure.from_coords(coords)


def predicted_distances(c: Conformation | Seq) -> np.ndarray:
    coords = c.coords if isinstance(c, Conformation) else c
    x = np.asarray(coords, dtype=float) * SCALE
    return np.linalg.norm(x[:, None, :] - x[None, :, :], axis=-1)


def rmsd(c: Conformation | Seq, ref: ReferenceStructure) -> float:
    """Root mean square difference of all pairwise distances, in Angstrom.

    No superposition is involved, so the value is invariant under any
    rotation or translation of ``c``.
    """
    dp = predicted_distances(c)
    n = dp.shape[0]
    if n != len(ref):
        raise ReferenceFormatError(f"reference has {len(ref)} residues, conformation has {n}")
    if n < 2:
        return 0.0
    iu = np.triu_indices(n, k=1)
    diff = dp[iu] - ref.distances[iu]
    return float(math.sqrt(float(np.sum(diff * diff)) / (n * (n - 1) / 2)))


def relative_improvement(target: float, reference: float, kind: str = "energy") -> float:
    """Percent improvement of ``target`` over ``reference``.

    Energies are negative and lower is better: (t - r) / r * 100.
    RMSD is positive and lower is better: (r - t) / r * 100.
    """
    if reference == 0:
        raise ValueError("reference value must be non-zero")
    if kind == "energy":
        return (target - reference) / reference * 100.0 + 0.0  # no negative zero
    if kind == "rmsd":
        return (reference - target) / reference * 100.0 + 0.0
    raise ValueError(f"unknown kind {kind!r}")


@dataclass(frozen=True)
class SampleSet:
    label: str
    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values:
            raise ValueError(f"sample {self.label!r} is empty")


@dataclass(frozen=True)
class MannWhitney:
    u_a: float
    u_b: float
    p: float
    significant: bool
    exact: bool


def _values(x) -> list[float]:
    if isinstance(x, SampleSet):
        return list(x.values)
    vals = [float(v) for v in x]
    if not vals:
        raise ValueError("empty sample")
    return vals


def _exact_p(ranks2: np.ndarray, n1: int, stat2: int, mean2: float) -> float:
    # ranks2 are doubled midranks (integers); count subsets of size n1 by rank sum
    total = int(ranks2.sum())
    counts = np.zeros((n1 + 1, total + 1), dtype=object)
    counts[0, 0] = 1
    for r in ranks2:
        r = int(r)
        for k in range(n1, 0, -1):
            counts[k, r:] = counts[k, r:] + counts[k - 1, : total + 1 - r]
    dist = counts[n1]
    dev = abs(stat2 - mean2)
    hits = sum(int(dist[s]) for s in range(total + 1) if dist[s] and abs(s - mean2) >= dev - 1e-9)
    return hits / math.comb(len(ranks2), n1)


def mann_whitney_u(a, b, alpha: float = 0.05, exact_limit: int = 20) -> MannWhitney:
    """Two-sided rank-sum test with midranks for ties.

    The null distribution is enumerated exactly when the pooled size is at
    most ``exact_limit``; otherwise the tie-corrected normal approximation
    with continuity correction is used.
    """
    xa, xb = _values(a), _values(b)
    n1, n2 = len(xa), len(xb)
    n = n1 + n2
    ranks = rankdata(xa + xb)
    r1 = float(ranks[:n1].sum())
    u_a = r1 - n1 * (n1 + 1) / 2.0
    u_b = n1 * n2 - u_a
    mean = n1 * n2 / 2.0
    if n <= exact_limit:
        ranks2 = np.rint(ranks * 2).astype(np.int64)
        p = _exact_p(ranks2, n1, int(round(2 * r1)), float(ranks2.sum()) * n1 / n)
        exact = True
    else:
        _, counts = np.unique(ranks, return_counts=True)
        ties = float(np.sum(counts**3 - counts))
        var = n1 * n2 / 12.0 * ((n + 1) - ties / (n * (n - 1)))
        if var <= 0:
            p = 1.0
        else:
            z = max(abs(u_a - mean) - 0.5, 0.0) / math.sqrt(var)
            p = float(2.0 * norm.sf(z))
        exact = False
    p = min(1.0, p)
    return MannWhitney(u_a, u_b, p, p < alpha, exact)


@dataclass(frozen=True)
class SummaryRow:
    seq: str
    size: int
    h: int
    variant: str
    best: float
    avg: float
    best_rmsd: Optional[float]
    avg_rmsd: Optional[float]
    hh: int
    hp: int
    pp: int
    total: int

    FIELDS = ("seq", "size", "h", "variant", "best", "avg", "best_rmsd", "avg_rmsd", "hh", "hp", "pp", "total")

    def as_row(self) -> list:
        return [getattr(self, f) for f in self.FIELDS]


def summarize(runs: Seq, ref: Optional[ReferenceStructure] = None) -> SummaryRow:
    """Best and average BM-reported energy and RMSD over runs, census of the best."""
    if not runs:
        raise ValueError("need at least one run")
    first = runs[0]
    seq = Sequence(first.sequence, first.sequence_id)
    energies = [r.best_bm_energy for r in runs]
    i_best = int(np.argmin(energies))
    best_run = runs[i_best]
    census = contact_census(best_run.best, seq)
    if ref is not None:
        rs = [rmsd(r.best, ref) for r in runs]
        best_rmsd, avg_rmsd = min(rs), float(np.mean(rs))
    else:
        best_rmsd = avg_rmsd = None
    return SummaryRow(
        seq=seq.id,
        size=len(seq),
        h=seq.h_count,
        variant=first.config["variant"],
        best=float(energies[i_best]),
        avg=float(np.mean(energies)),
        best_rmsd=best_rmsd,
        avg_rmsd=avg_rmsd,
        hh=census.hh,
        hp=census.hp,
        pp=census.pp,
        total=census.total,
    )


def trace_at(trace: Seq, t: float, column: int = 2) -> float:
    """Best-so-far value of a trace at time ``t`` (first entry if ``t`` precedes it)."""
    value = trace[0][column]
    for row in trace:
        if row[0] > t:
            break
        value = row[column]
    return value


def average_traces(traces: Iterable[Seq], interval: float, budget: float, column: int = 2) -> list[tuple[float, float]]:
    """Mean best-so-far value across traces sampled every ``interval`` seconds."""
    traces = list(traces)
    if interval <= 0:
        raise ValueError("interval must be > 0")
    out = []
    k = 0
    while True:
        t = min(k * interval, budget)
        out.append((t, float(np.mean([trace_at(tr, t, column) for tr in traces]))))
        if t >= budget:
            break
        k += 1
    return out
