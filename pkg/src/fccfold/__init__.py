"""Genetic-algorithm protein structure prediction on the FCC lattice."""

from .chain import Conformation, Sequence, initialise, parse_sequence, read_sequence
from .energy import ContactMatrix, Energy, EnergyModel, default_matrix, evaluate, load_matrix
from .engine import Population, RunConfig, RunRecord, Variant, make_variant, run
from .metrics import mann_whitney_u, relative_improvement, rmsd, summarize

__version__ = "0.1.0"

__all__ = [
    "Conformation",
    "ContactMatrix",
    "Energy",
    "EnergyModel",
    "Population",
    "RunConfig",
    "RunRecord",
    "Sequence",
    "Variant",
    "default_matrix",
    "evaluate",
    "initialise",
    "load_matrix",
    "make_variant",
    "mann_whitney_u",
    "parse_sequence",
    "read_sequence",
    "relative_improvement",
    "rmsd",
    "run",
    "summarize",
]
