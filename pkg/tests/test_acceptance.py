"""Acceptance criteria, one test each.

Every test records a PASS/FAIL line that is printed in the terminal summary.
The variant ablation reuses run files under ``results/ablation`` when their
configuration matches; otherwise it runs the full benchmark (hours on one core).
"""

from __future__ import annotations

import json
import os
import random
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from acceptance_log import criterion
from fccfold.chain import AMINO_ACIDS, Conformation, Sequence, initialise, is_valid
from fccfold.cli import main as cli_main
from fccfold.energy import Energy, default_matrix, evaluate
from fccfold.engine import RunConfig, RunRecord, run
from fccfold.lattice import BASIS, apply, is_lattice_point, lattice_rotations, neighbors
from fccfold.metrics import mann_whitney_u, relative_improvement
from fccfold.moves import (
    Guidance,
    apply_pull,
    crossover,
    diagonal_move,
    macro_mutation,
    pull_move,
    rotation,
    tilt_move,
)
from oracles import FCC, all_h_optimum, brute_energy

ROOT = Path(__file__).resolve().parents[1]
ABLATION_DIR = Path(os.environ.get("FCCFOLD_ABLATION_DIR", ROOT / "results" / "ablation"))

# records produced by criteria 4 and 6, re-checked by criterion 8
RECORDS: dict[str, list[RunRecord]] = {}


def _valid_walk(c: Conformation, n: int) -> bool:
    return (
        len(c) == n
        and is_valid(c.coords)
        and Conformation.from_directions(c.directions).coords == c.coords
    )


def test_criterion_1_geometry():
    with criterion(1, "lattice geometry and parity") as notes:
        t0 = time.perf_counter()
        expected = [tuple(int(v) for v in row) for row in FCC]
        for p in [(0, 0, 0), (3, -1, 2), (-7, 5, 4)]:
            assert [tuple(q[k] - p[k] for k in range(3)) for q in neighbors(p)] == expected
        rots = lattice_rotations()
        assert len(rots) == 24 and len(set(rots)) == 24
        for m in rots:
            assert sorted(apply(m, v) for v in BASIS) == sorted(BASIS)

        rng = np.random.default_rng(0)
        basis = np.array(BASIS)
        walks, steps = 1_000_000, 12
        pts = np.cumsum(basis[rng.integers(0, 12, size=(walks, steps))], axis=1)
        assert not np.any(pts.sum(axis=2) % 2)
        sample = pts[rng.integers(0, walks, 1000), rng.integers(0, steps, 1000)]
        assert all(is_lattice_point(tuple(int(v) for v in p)) for p in sample)
        elapsed = time.perf_counter() - t0
        notes.append(f"{walks} walks")
        assert elapsed < 10, f"took {elapsed:.1f}s"


def test_criterion_2_energy_oracle():
    with criterion(2, "energy matches brute-force oracle") as notes:
        t0 = time.perf_counter()
        rng = random.Random(2)
        matrix = default_matrix()
        table = {(a, b): matrix[a, b] for a in AMINO_ACIDS for b in AMINO_ACIDS}
        worst = 0.0
        for _ in range(1000):
            n = rng.randint(4, 40)
            seq = Sequence("".join(rng.choice(AMINO_ACIDS) for _ in range(n)))
            c = initialise(seq, rng)
            for model in ("HP", "BM"):
                ref = brute_energy(c.coords, seq.codes, seq.classes, model, table)
                worst = max(worst, abs(evaluate(c, seq, model, matrix) - ref))
                worst = max(worst, abs(Energy(seq, model, matrix)(c.coords) - ref))
        elapsed = time.perf_counter() - t0
        notes.append(f"max deviation {worst:.2e}")
        assert worst <= 1e-9
        assert elapsed < 30, f"took {elapsed:.1f}s"


def test_criterion_3_move_validity():
    with criterion(3, "operators keep valid walks; pull inverses replay") as notes:
        t0 = time.perf_counter()
        rng = random.Random(3)
        applications = 100_000
        seqs = {n: Sequence("".join(rng.choice(AMINO_ACIDS) for _ in range(n))) for n in range(4, 31)}

        def fresh():
            return initialise(rng.randint(4, 30), rng)

        counts = {}
        partners: dict[int, Conformation] = {}
        inverses = replayed = 0
        ops = ["crossover", "rotation", "diagonal", "pull", "tilt", "macro"]
        for op in ops:
            pool = [fresh() for _ in range(64)]
            ok = bad = 0
            for i in range(applications):
                k = i % len(pool)
                c = pool[k]
                n = len(c)
                if op == "crossover":
                    other = pool[(k + 1) % len(pool)]
                    if len(other) != n:
                        if n not in partners:
                            partners[n] = initialise(n, rng)
                        other = partners[n]
                    kids = crossover(c, other, rng.randint(1, n - 2))
                    results = list(kids) if kids else []
                    if kids:
                        partners[n] = kids[1]
                elif op == "rotation":
                    out = rotation(c, rng.randint(1, n - 1), rng.randrange(24))
                    results = [out.result] if out.ok else []
                elif op == "diagonal":
                    out = diagonal_move(c, rng.randrange(n))
                    results = [out.result] if out.ok else []
                elif op == "pull":
                    out = pull_move(c, rng.randrange(n), rng)
                    results = [out.result] if out.ok else []
                    if out.ok:
                        inverses += 1
                        back = apply_pull(out.result, out.inverse)
                        replayed += back is not None and back.key == c.key
                elif op == "tilt":
                    out = tilt_move(c, rng.randrange(n - 1), rng)
                    results = [out.result] if out.ok else []
                else:
                    seq = seqs[n]
                    if seq.h_count == 0:
                        results = []
                    else:
                        results = [macro_mutation(c, seq, repeat=1, rng=rng)]
                for r in results:
                    if _valid_walk(r, n):
                        ok += 1
                    else:
                        bad += 1
                if results:
                    pool[k] = results[0]
                if rng.random() < 0.01:
                    pool[k] = fresh()
            counts[op] = (ok, bad)
        elapsed = time.perf_counter() - t0
        notes.append(" ".join(f"{op}={ok}" for op, (ok, _) in counts.items()))
        notes.append(f"pull inverse {replayed}/{inverses}")
        assert all(bad == 0 for _, bad in counts.values()), counts
        assert inverses > 0 and replayed == inverses
        assert elapsed < 60, f"took {elapsed:.1f}s"


def test_criterion_4_toy_optimality():
    with criterion(4, "HP variant reaches exhaustive optimum on all-H chains") as notes:
        records = []
        for n in (8, 9, 10):
            optimum = all_h_optimum(n)
            seq = Sequence("A" * n, f"allH{n}")
            hits = 0
            for seed in range(10):
                rec = run(seq, RunConfig(variant="HP", time_budget=10.0, seed=seed))
                records.append(rec)
                assert rec.best_energy >= optimum, f"length {n} seed {seed} below optimum"
                hits += rec.best_energy == optimum
            notes.append(f"n={n} opt={optimum:g} hits={hits}/10")
            assert hits >= 8
        RECORDS["toy"] = records


def test_criterion_5_table_arithmetic():
    # target and reference averages with the printed improvement columns
    rows = {
        "4RXN": (-162.72, -156.32, 5.41, 6.29, 4.09, 13.99),
        "1ENH": (-151.65, -146.69, 5.22, 6.61, 3.01, 21.03),
        "4PTI": (-204.56, -198.42, 6.46, 7.07, 3.09, 36.92),
        "2IGD": (-176.83, -174.19, 7.81, 9.33, 1.12, 16.26),
        "1YPA": (-253.09, -239.98, 6.29, 7.53, 5.46, 16.47),
        "1R69": (-208.79, -204.17, 5.17, 6.47, 2.26, 20.09),
        "1CTF": (-225.43, -213.81, 5.28, 7.23, 5.43, 26.97),
        "3MX7": (-325.45, -311.56, 7.94, 8.18, 4.46, 2.93),
        "3NBM": (-419.25, -401.99, 6.46, 8.58, 4.29, 24.71),
        "3MQO": (-472.78, -455.27, 6.84, 8.86, 3.85, 22.80),
        "3MRO": (-447.77, -430.29, 8.72, 10.02, 4.06, 12.97),
        "3PNX": (-592.25, -571.13, 8.51, 9.38, 3.70, 9.28),
    }
    with criterion(5, "relative improvement columns within 0.01 points") as notes:
        bad = []
        for sid, (et, er, rt, rr, ri_e, ri_r) in rows.items():
            e = relative_improvement(et, er, "energy")
            r = relative_improvement(rt, rr, "rmsd")
            if sid == "1ENH":
                # printed 3.01 cannot come from the printed averages
                assert e == pytest.approx(3.38, abs=0.01)
                assert abs(e - ri_e) > 0.01
            elif abs(e - ri_e) > 0.01:
                bad.append(f"{sid} energy {e:.2f} vs {ri_e:.2f}")
            if abs(r - ri_r) > 0.01:
                bad.append(f"{sid} rmsd {r:.2f} vs {ri_r:.2f}")
        notes.append("1ENH energy 3.38 vs printed 3.01 (known)")
        assert not bad, "mismatched cells: " + ", ".join(bad)


ABLATION_ARGS = [
    "bench", "--suite", "4RXN,1ENH", "--variant", "BH,BD,BM,HP", "--seeds", "20", "--seed", "0",
    "--time", "120s", "--trace-interval", "10s", "--out", str(ABLATION_DIR), "--resume",
]


def test_criterion_6_variant_ablation():
    import csv

    with criterion(6, "variant ordering BH<=BM, BH<=BD<=HP and BH vs HP significant") as notes:
        assert cli_main(ABLATION_ARGS) == 0
        runs = list(csv.DictReader(open(ABLATION_DIR / "runs.csv")))
        records = [RunRecord.from_json(p.read_text()) for p in sorted((ABLATION_DIR / "runs").glob("*.json"))]
        RECORDS["ablation"] = records
        problems = []
        for sid in ("4RXN", "1ENH"):
            e = {v: [float(r["energy"]) for r in runs if r["seq"] == sid and r["variant"] == v]
                 for v in ("BH", "BD", "BM", "HP")}
            assert all(len(x) == 20 for x in e.values())
            m = {v: float(np.mean(x)) for v, x in e.items()}
            u = mann_whitney_u(e["BH"], e["HP"])
            notes.append(f"{sid} " + " ".join(f"{v}={m[v]:.2f}" for v in m) + f" p(BH,HP)={u.p:.2g}")
            if not m["BH"] <= m["BM"]:
                problems.append(f"{sid}: BH > BM")
            if not m["BH"] <= m["BD"]:
                problems.append(f"{sid}: BH > BD")
            if not m["BD"] <= m["HP"]:
                problems.append(f"{sid}: BD > HP")
            if not u.significant:
                problems.append(f"{sid}: BH vs HP not significant")
        assert not problems, "; ".join(problems)


def test_criterion_7_macro_mutation_invariant():
    with criterion(7, "no outward H move under centroid guidance") as notes:
        rng = random.Random(7)
        seqs = [Sequence("".join(rng.choice(AMINO_ACIDS) for _ in range(rng.randint(10, 60)))) for _ in range(20)]
        seqs = [s for s in seqs if s.h_count]
        accepted = {"H": 0, "P": 0}
        outward = 0
        sweeps = 0

        def hook(j, klass, d_old, d_new):
            nonlocal outward
            accepted[klass] += 1
            if klass == "H" and d_new > d_old:
                outward += 1

        while sweeps < 10_000:
            seq = seqs[sweeps % len(seqs)]
            c = initialise(seq, rng)
            for _ in range(10):
                c = macro_mutation(c, seq, repeat=5, rng=rng, guidance=Guidance.HCC, on_accept=hook)
                sweeps += 5
        notes.append(f"{sweeps} sweeps, {accepted['H']} H and {accepted['P']} P moves accepted")
        assert accepted["H"] > 0
        assert outward == 0


def _check_record(rec: RunRecord) -> list[str]:
    errs = []
    es = [t[1] for t in rec.trace]
    if any(b > a for a, b in zip(es, es[1:])):
        errs.append("trace increases")
    rwt = rec.config["rwt"]
    stagnant, expected = 0, []
    for g, better in enumerate(rec.improved):
        stagnant = 0 if better else stagnant + 1
        if stagnant >= rwt:
            expected.append(g)
            stagnant = 0
    if expected != rec.stagnation_events:
        errs.append("stagnation events do not follow the non-improving count")
    prev = rec.trace[0][1]
    events = set(rec.stagnation_events)
    for g, (better, best) in enumerate(zip(rec.improved, rec.history)):
        if better and not best < prev:
            errs.append(f"generation {g} flagged improved without a lower best")
        if not better and g not in events and best != prev:
            errs.append(f"generation {g} changed best without an improvement")
        prev = best
    return errs


def test_criterion_8_trace_invariants():
    with criterion(8, "monotone traces and stagnation timing") as notes:
        if "toy" not in RECORDS:
            pytest.fail("records from criterion 4 unavailable")
        if "ablation" not in RECORDS:
            pytest.fail("records from criterion 6 unavailable")
        total = events = 0
        errs = []
        for group, recs in RECORDS.items():
            for rec in recs:
                total += 1
                events += len(rec.stagnation_events)
                errs += [f"{group}/{rec.sequence_id}/{rec.config['variant']}/{rec.config['seed']}: {e}"
                         for e in _check_record(rec)]
        notes.append(f"{total} records, {events} stagnation events")
        assert events > 0
        assert not errs, errs[:5]


def test_criterion_9_determinism(tmp_path):
    with criterion(9, "identical JSON from two executions") as notes:
        outs = []
        for name in ("a", "b"):
            cmd = [sys.executable, "-m", "fccfold.cli", "fold", "--seq", "GAVLIF", "--variant", "BH",
                   "--seed", "7", "--time", "5s", "--out", str(tmp_path / name)]
            subprocess.run(cmd, check=True, capture_output=True)
            outs.append((tmp_path / name / "query_BH_s7.json").read_bytes())
        notes.append(f"{len(outs[0])} bytes")
        assert outs[0] == outs[1]
