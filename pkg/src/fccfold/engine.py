"""Generational genetic algorithm with exhaustive operator application.

Each generation draws one operator and applies it to the whole population:
mutation operators are tried at every residue of every member (best result
or the parent survives), crossover is tried at every split point of random
parent pairs (best two of parents plus children survive). Populations never
hold two identical direction encodings. After ``rwt`` generations without a
new best, every member is perturbed by a pull-move random walk.
"""

from __future__ import annotations

import dataclasses
import json
import logging
import math
import random
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Optional

from .chain import Conformation, Sequence, format_structure, initialise, parse_structure
from .energy import ContactMatrix, Energy, EnergyModel, default_matrix
from .moves import (
    Guidance,
    MoveKind,
    crossover,
    diagonal_move,
    macro_mutation,
    pull_move,
    rotation,
    tilt_move,
)

log = logging.getLogger(__name__)

MUTATIONS = (MoveKind.ROTATION, MoveKind.DIAGONAL, MoveKind.PULL, MoveKind.TILT, MoveKind.MACRO)
ALL_OPERATORS = (MoveKind.CROSSOVER,) + MUTATIONS

# Nominal cost of one work unit (an operator application or an energy
# evaluation) for the deterministic clock: WORK_BASE + WORK_PER_RESIDUE * N
# seconds, fitted to single-core wall time.
WORK_BASE = 20e-6
WORK_PER_RESIDUE = 1.5e-6


class Variant(str, Enum):
    BH = "BH"
    BD = "BD"
    BM = "BM"
    HP = "HP"


@dataclass(frozen=True)
class VariantSpec:
    variant: Variant
    search_model: EnergyModel
    guidance: Optional[Guidance]
    operators: tuple[MoveKind, ...]


def make_variant(variant: Variant | str) -> VariantSpec:
    v = Variant(variant)
    if v is Variant.BH:
        return VariantSpec(v, EnergyModel.BM, Guidance.HCC, ALL_OPERATORS)
    if v is Variant.BD:
        return VariantSpec(v, EnergyModel.BM, Guidance.ENERGY, ALL_OPERATORS)
    if v is Variant.BM:
        ops = tuple(op for op in ALL_OPERATORS if op is not MoveKind.MACRO)
        return VariantSpec(v, EnergyModel.BM, None, ops)
    return VariantSpec(v, EnergyModel.HP, Guidance.HCC, ALL_OPERATORS)


@dataclass
class RunConfig:
    variant: str = "BH"
    pop_size: int = 100
    time_budget: float = 60.0
    rwt: int = 20
    macro_p: float = 0.2
    macro_repeat: int = 5
    seed: int = 0
    weights: Optional[dict[str, float]] = None
    first_improvement: bool = False
    clock: str = "work"
    max_generations: Optional[int] = None
    walk_fraction: float = 1.0
    walk_sweeps: int = 5
    walk_energy_min: float = 0.05  # recorded, not enforced
    walk_energy_max: float = 0.10
    walk_struct_min: float = 0.10
    walk_struct_max: float = 0.75
    attempt_cap: int = 1000
    matrix: str = "berrera"

    def __post_init__(self):
        self.variant = Variant(self.variant).value
        if self.pop_size < 2:
            raise ValueError("pop_size must be >= 2")
        if self.rwt < 1:
            raise ValueError("rwt must be >= 1")
        if not self.time_budget > 0:
            raise ValueError("time_budget must be > 0")
        if not 0.0 <= self.macro_p <= 1.0:
            raise ValueError("macro_p must be in [0, 1]")
        if self.macro_repeat < 1:
            raise ValueError("macro_repeat must be >= 1")
        if self.clock not in ("work", "wall"):
            raise ValueError("clock must be 'work' or 'wall'")
        if not 0.0 < self.walk_fraction <= 1.0:
            raise ValueError("walk_fraction must be in (0, 1]")
        if self.weights is not None:
            known = {op.value for op in ALL_OPERATORS}
            bad = set(self.weights) - known
            if bad:
                raise ValueError(f"unknown operators in weights: {sorted(bad)}")


@dataclass
class RunRecord:
    config: dict[str, Any]
    operators: list[str]
    sequence_id: str
    sequence: str
    best: Conformation
    best_energy: float
    best_bm_energy: float
    trace: list[tuple[float, float, float]]
    generations: int
    stagnation_events: list[int]
    history: list[float]
    improved: list[bool] = field(default_factory=list)
    walk_failures: int = 0

    def structure_text(self) -> str:
        seq = Sequence(self.sequence, self.sequence_id)
        model = make_variant(self.config["variant"]).search_model.value
        return format_structure(self.best, seq, self.best_energy, model)

    def to_dict(self) -> dict[str, Any]:
        return {
            "config": self.config,
            "operators": self.operators,
            "sequence_id": self.sequence_id,
            "sequence": self.sequence,
            "search_model": make_variant(self.config["variant"]).search_model.value,
            "best_energy": self.best_energy,
            "best_bm_energy": self.best_bm_energy,
            "generations": self.generations,
            "stagnation_events": self.stagnation_events,
            "walk_failures": self.walk_failures,
            "trace": [list(t) for t in self.trace],
            "history": self.history,
            "improved": self.improved,
            "structure": self.structure_text(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=1)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "RunRecord":
        _, conf, _ = parse_structure(d["structure"])
        conf.energy = d["best_energy"]
        return cls(
            config=d["config"],
            operators=d["operators"],
            sequence_id=d["sequence_id"],
            sequence=d["sequence"],
            best=conf,
            best_energy=d["best_energy"],
            best_bm_energy=d["best_bm_energy"],
            trace=[tuple(t) for t in d["trace"]],
            generations=d["generations"],
            stagnation_events=d["stagnation_events"],
            history=d["history"],
            improved=d.get("improved", []),
            walk_failures=d.get("walk_failures", 0),
        )

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        return cls.from_dict(json.loads(text))


class Population:
    """Fixed-capacity list of conformations with distinct direction encodings."""

    def __init__(self, capacity: int, members: Iterable[Conformation] = ()):
        self.capacity = capacity
        self.members: list[Conformation] = []
        self._keys: set = set()
        for m in members:
            self.add(m)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, c: Conformation) -> bool:
        return c.key in self._keys

    @property
    def full(self) -> bool:
        return len(self.members) >= self.capacity

    def add(self, c: Conformation) -> bool:
        if self.full or c.key in self._keys:
            return False
        self.members.append(c)
        self._keys.add(c.key)
        return True

    def replace(self, i: int, c: Conformation) -> bool:
        old = self.members[i]
        if c.key != old.key and c.key in self._keys:
            return False
        self._keys.discard(old.key)
        self._keys.add(c.key)
        self.members[i] = c
        return True

    def best(self) -> Conformation:
        return min(self.members, key=lambda c: c.energy)


def add_unique(pop: Population, c: Conformation) -> bool:
    return pop.add(c)


class Context:
    """Per-run state shared by the generation steps."""

    def __init__(self, seq: Sequence, config: RunConfig, matrix: ContactMatrix, rng: random.Random):
        self.seq = seq
        self.config = config
        self.spec = make_variant(config.variant)
        self.matrix = matrix
        self.energy = Energy(seq, self.spec.search_model, matrix)
        self.report = (
            self.energy
            if self.spec.search_model is EnergyModel.BM
            else Energy(seq, EnergyModel.BM, matrix)
        )
        # the energy-guided macro-mutation always scores with the contact matrix
        self.guide_energy = Energy(seq, EnergyModel.BM, matrix)
        self.rng = rng
        self.moves = 0
        self.walk_failures = 0
        self._t0 = time.perf_counter()
        self._unit_cost = WORK_BASE + WORK_PER_RESIDUE * len(seq)

    def score(self, c: Conformation) -> float:
        if c.energy is None:
            c.energy = self.energy(c.coords)
        return c.energy

    def elapsed(self) -> float:
        if self.config.clock == "wall":
            return time.perf_counter() - self._t0
        return (self.moves + self.energy.calls) * self._unit_cost

    def expired(self) -> bool:
        return self.elapsed() >= self.config.time_budget


def _apply(op: MoveKind, c: Conformation, pos: int, ctx: Context, occupied: set):
    rng = ctx.rng
    n = len(c)
    if op is MoveKind.ROTATION:
        if pos < 1:
            return None
        return rotation(c, pos, rng.randrange(24)).result
    if op is MoveKind.DIAGONAL:
        return diagonal_move(c, pos, occupied).result
    if op is MoveKind.PULL:
        return pull_move(c, pos, rng, occupied).result
    if op is MoveKind.TILT:
        if pos > n - 2:
            return None
        return tilt_move(c, pos, rng, occupied=occupied).result
    raise ValueError(f"{op} is not a positional mutation")


def exhaustive_mutate(c: Conformation, op: MoveKind | str, ctx: Context) -> Conformation:
    """Best of the parent and the operator applied at every residue.

    Ties keep the earlier candidate, so the parent survives unless beaten.
    With ``first_improvement`` the scan stops at the first better mutant.
    """
    op = MoveKind(op)
    best = c
    best_e = ctx.score(c)
    if op is MoveKind.MACRO:
        cfg = ctx.config
        m = macro_mutation(
            c,
            ctx.seq,
            repeat=cfg.macro_repeat,
            p=cfg.macro_p,
            rng=ctx.rng,
            guidance=ctx.spec.guidance or Guidance.HCC,
            energy=ctx.guide_energy,
        )
        ctx.moves += 1
        if m is not c and ctx.score(m) < best_e:
            return m
        return c
    occupied = set(c.coords)
    for pos in range(len(c)):
        ctx.moves += 1
        m = _apply(op, c, pos, ctx, occupied)
        if m is None:
            continue
        e = ctx.score(m)
        if e < best_e:
            best, best_e = m, e
            if ctx.config.first_improvement:
                break
    return best


def exhaustive_crossover(a: Conformation, b: Conformation, ctx: Context) -> tuple[Conformation, Conformation]:
    """Best two distinct conformations among both parents and all crossover children."""
    pool = [a, b]
    for pos in range(1, len(a) - 1):
        ctx.moves += 1
        kids = crossover(a, b, pos)
        if kids is not None:
            pool.extend(kids)
    for c in pool:
        ctx.score(c)
    pool.sort(key=lambda c: c.energy)
    first = pool[0]
    for c in pool[1:]:
        if c.key != first.key:
            return first, c
    return a, b


def _structure_diff(a: tuple[int, ...], b: tuple[int, ...]) -> float:
    if not a:
        return 0.0
    return sum(x != y for x, y in zip(a, b)) / len(a)


def walk_member(c: Conformation, ctx: Context) -> Optional[Conformation]:
    """Pull-move random walk from ``c`` until energy and structure bands are met.

    Sweeps a random pull over every residue; after each pull the
    conformation is a candidate if its energy is within ``walk_energy_max``
    (relative) of the start and its direction encoding differs in a
    fraction of entries inside ``[walk_struct_min, walk_struct_max]``. At
    the end of the first sweep that produced candidates, the one differing
    most from ``c`` is returned. None if no sweep within the cap qualifies.
    """
    cfg = ctx.config
    e0 = ctx.score(c)
    d0 = c.directions
    cur = c
    for _ in range(cfg.walk_sweeps):
        chosen = None
        chosen_diff = -1.0
        for pos in range(len(c)):
            ctx.moves += 1
            out = pull_move(cur, pos, ctx.rng)
            if not out.ok:
                continue
            cur = out.result
            diff = _structure_diff(cur.directions, d0)
            if not cfg.walk_struct_min <= diff <= cfg.walk_struct_max:
                continue
            e = ctx.score(cur)
            if e0 == 0:
                ok = e == 0
            else:
                ok = abs(e - e0) <= cfg.walk_energy_max * abs(e0)
            if ok and diff > chosen_diff:
                chosen, chosen_diff = cur, diff
        if chosen is not None:
            return chosen
    return None


def random_walk(pop: Population, ctx: Context) -> int:
    """Random-walk the targeted members in place; returns how many changed."""
    n = len(pop)
    k = max(1, math.ceil(ctx.config.walk_fraction * n))
    order = sorted(range(n), key=lambda i: pop.members[i].energy, reverse=True)[:k]
    changed = 0
    for i in sorted(order):
        new = walk_member(pop.members[i], ctx)
        if new is None:
            ctx.walk_failures += 1
            log.debug("random walk found no acceptable conformation for member %d", i)
            continue
        if pop.replace(i, new):
            changed += 1
    return changed


def _init_population(ctx: Context) -> Population:
    cfg = ctx.config
    pop = Population(cfg.pop_size)
    tries = 0
    while not pop.full and tries < 10 * cfg.pop_size:
        tries += 1
        c = initialise(ctx.seq, ctx.rng, cfg.attempt_cap)
        ctx.score(c)
        pop.add(c)
    return pop


def _select_operator(ctx: Context, rng: random.Random) -> MoveKind:
    ops = ctx.spec.operators
    w = ctx.config.weights
    if not w:
        return ops[rng.randrange(len(ops))]
    weights = [float(w.get(op.value, 1.0)) for op in ops]
    return rng.choices(ops, weights)[0]


def run(seq: Sequence, config: RunConfig, matrix: Optional[ContactMatrix] = None) -> RunRecord:
    """Fold ``seq`` under ``config``; a KeyboardInterrupt ends the run early."""
    if seq.h_count == 0:
        raise ValueError("sequence has no hydrophobic residues")
    matrix = matrix if matrix is not None else default_matrix()
    rng = random.Random(config.seed)
    ctx = Context(seq, config, matrix, rng)

    cur = _init_population(ctx)
    best = cur.best()
    trace = [(ctx.elapsed(), best.energy, ctx.report(best.coords))]
    history: list[float] = []
    flags: list[bool] = []
    events: list[int] = []
    stagnant = 0
    gen = 0

    def improve(pop: Population) -> bool:
        nonlocal best
        cand = pop.best()
        if cand.energy < best.energy:
            best = cand
            trace.append((ctx.elapsed(), best.energy, ctx.report(best.coords)))
            return True
        return False

    try:
        while not ctx.expired():
            if config.max_generations is not None and gen >= config.max_generations:
                break
            ctx.rng = random.Random(rng.getrandbits(64))
            op = _select_operator(ctx, ctx.rng)
            new = Population(config.pop_size)
            if op is MoveKind.CROSSOVER:
                members = cur.members
                attempts = 0
                while not new.full and attempts < 10 * config.pop_size and not ctx.expired():
                    attempts += 1
                    a = members[ctx.rng.randrange(len(members))]
                    b = members[ctx.rng.randrange(len(members))]
                    for child in exhaustive_crossover(a, b, ctx):
                        new.add(child)
                for m in members:
                    if new.full:
                        break
                    new.add(m)
            else:
                for c in cur:
                    new.add(exhaustive_mutate(c, op, ctx))
                    if ctx.expired():
                        break
            better = improve(new)
            flags.append(better)
            if better:
                stagnant = 0
            else:
                stagnant += 1
            if stagnant >= config.rwt:
                random_walk(new, ctx)
                events.append(gen)
                stagnant = 0
                improve(new)
            cur = new
            history.append(best.energy)
            gen += 1
    except KeyboardInterrupt:
        log.warning("interrupted after %d generations", gen)

    return RunRecord(
        config=dataclasses.asdict(config),
        operators=[op.value for op in ctx.spec.operators],
        sequence_id=seq.id,
        sequence=seq.codes,
        best=best,
        best_energy=best.energy,
        best_bm_energy=ctx.report(best.coords),
        trace=trace,
        generations=gen,
        stagnation_events=events,
        history=history,
        improved=flags,
        walk_failures=ctx.walk_failures,
    )


# --- config files ------------------------------------------------------------
#
#   # comment
#   variant = BH
#   pop_size = 100
#   time_budget = 2m
#   weights = Crossover:1, Rotation:1, Diagonal:2


def parse_duration(text: str | float) -> float:
    if isinstance(text, (int, float)):
        return float(text)
    s = str(text).strip().lower()
    units = {"s": 1.0, "m": 60.0, "h": 3600.0}
    if s and s[-1] in units:
        return float(s[:-1]) * units[s[-1]]
    return float(s)


def _coerce(name: str, raw: str):
    fields = {f.name: f for f in dataclasses.fields(RunConfig)}
    if name not in fields:
        raise ValueError(f"unknown config key: {name}")
    raw = raw.strip()
    if name == "time_budget":
        return parse_duration(raw)
    if name == "weights":
        out = {}
        for part in raw.split(","):
            k, _, v = part.partition(":")
            out[k.strip()] = float(v)
        return out
    default = fields[name].default
    if name == "max_generations":
        return None if raw.lower() in ("", "none") else int(raw)
    if isinstance(default, bool):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"{name}: expected a boolean, got {raw!r}")
    if isinstance(default, int):
        return int(raw)
    if isinstance(default, float):
        return float(raw)
    return raw


def read_config(text: str) -> dict[str, Any]:
    """Parse ``key = value`` lines into RunConfig keyword arguments."""
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise ValueError(f"config line {lineno}: expected 'key = value'")
        key = key.strip().replace("-", "_")
        out[key] = _coerce(key, value)
    return out
