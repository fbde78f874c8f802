"""Bundled benchmark proteins."""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Optional

from .chain import Sequence, parse_sequence


@dataclass(frozen=True)
class BenchmarkEntry:
    id: str
    sequence: str
    declared_size: int
    declared_h: int
    ref: Optional[Path] = None

    @property
    def seq(self) -> Sequence:
        return parse_sequence(self.sequence, self.id)

    @property
    def length(self) -> int:
        return len(self.sequence)

    @property
    def h_count(self) -> int:
        return self.seq.h_count

    def mismatch(self) -> Optional[str]:
        """Description of any disagreement between the sequence and the declared counts."""
        if self.length == self.declared_size and self.h_count == self.declared_h:
            return None
        return (
            f"{self.id}: sequence gives length {self.length}, h {self.h_count}; "
            f"declared {self.declared_size}, {self.declared_h}"
        )


def load_suite(source=None) -> list[BenchmarkEntry]:
    """Entries from a CSV with columns ``id,size,h,sequence[,ref]`` (bundled file by default)."""
    if source is None:
        text = (resources.files("fccfold") / "data" / "benchmarks.csv").read_text()
    else:
        text = Path(source).read_text()
    rows = [r for r in csv.reader(io.StringIO(text)) if r and not r[0].startswith("#")]
    header = [h.strip() for h in rows[0]]
    out = []
    for row in rows[1:]:
        rec = dict(zip(header, (c.strip() for c in row)))
        ref = rec.get("ref") or None
        out.append(
            BenchmarkEntry(
                id=rec["id"],
                sequence=rec["sequence"],
                declared_size=int(rec["size"]),
                declared_h=int(rec["h"]),
                ref=Path(ref) if ref else None,
            )
        )
    return out


def self_check(entries: list[BenchmarkEntry]) -> list[str]:
    return [m for m in (e.mismatch() for e in entries) if m]


def select(entries: list[BenchmarkEntry], ids: Optional[list[str]]) -> list[BenchmarkEntry]:
    if not ids:
        return list(entries)
    by_id = {e.id.upper(): e for e in entries}
    missing = [i for i in ids if i.upper() not in by_id]
    if missing:
        raise KeyError(f"unknown benchmark ids: {', '.join(missing)}")
    return [by_id[i.upper()] for i in ids]
