"""Command-line entry point: fold, bench, eval, stats."""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import logging
import multiprocessing
import os
import sys
from collections import defaultdict
from pathlib import Path
from typing import Optional

import numpy as np

from .chain import SequenceError, StructureError, parse_structure, read_sequence, write_structure
from .energy import EnergyModel, MatrixError, contact_census, default_matrix, evaluate, load_matrix
from .engine import RunConfig, RunRecord, make_variant, parse_duration, read_config, run
from .metrics import (
    ReferenceFormatError,
    SummaryRow,
    average_traces,
    load_reference,
    mann_whitney_u,
    relative_improvement,
    rmsd,
    summarize,
)
from .suite import load_suite, select, self_check

log = logging.getLogger("fccfold")

VARIANTS = ("BH", "BD", "BM", "HP")
FULL_SCALE_TIME = 3600.0
FULL_SCALE_RUNS = 50
RUN_FIELDS = ("seq", "variant", "seed", "search_energy", "energy", "rmsd", "generations", "stagnation_events")


class UsageError(Exception):
    pass


# --- config assembly ---------------------------------------------------------


def _add_run_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value config file; flags override it")
    p.add_argument("--time", help="time budget per run, e.g. 90, 30s, 2m, 1h (default 60s)")
    p.add_argument("--pop", type=int, help="population size (default 100)")
    p.add_argument("--rwt", type=int, help="non-improving generations before a random walk (default 20)")
    p.add_argument("--macro-p", type=float, help="probability a macro-mutation sweep targets P residues")
    p.add_argument("--macro-repeat", type=int, help="macro-mutation sweeps per application")
    p.add_argument("--first-improvement", action="store_true", default=None,
                   help="stop exhaustive mutation at the first improving site")
    p.add_argument("--clock", choices=("work", "wall"),
                   help="'work' (default) counts evaluations for reproducible budgets")
    p.add_argument("--max-generations", type=int)
    p.add_argument("--matrix", help="contact matrix CSV (default: $FCCFOLD_MATRIX or bundled)")
    p.add_argument("--paper-scale", action="store_true", help="60 minute budget and 50 runs")
    p.add_argument("--out", default="results", help="output directory")


def _config_kwargs(args) -> dict:
    kw = {}
    if args.config:
        try:
            kw.update(read_config(Path(args.config).read_text()))
        except OSError as exc:
            raise UsageError(f"cannot read config file: {exc}") from None
        except ValueError as exc:
            raise UsageError(f"{args.config}: {exc}") from None
    if args.paper_scale:
        kw["time_budget"] = FULL_SCALE_TIME
    flags = {
        "time_budget": args.time,
        "pop_size": args.pop,
        "rwt": args.rwt,
        "macro_p": args.macro_p,
        "macro_repeat": args.macro_repeat,
        "first_improvement": args.first_improvement,
        "clock": args.clock,
        "max_generations": args.max_generations,
    }
    for k, v in flags.items():
        if v is not None:
            kw[k] = v
    if "time_budget" in kw:
        try:
            kw["time_budget"] = parse_duration(kw["time_budget"])
        except ValueError:
            raise UsageError(f"bad time budget: {kw['time_budget']!r}") from None
    if args.matrix:
        kw["matrix"] = str(Path(args.matrix).resolve())
    return kw


def _make_config(kw: dict, **extra) -> RunConfig:
    try:
        return RunConfig(**{**kw, **extra})
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from None


def _load_matrix(name: str):
    try:
        return default_matrix() if name == "berrera" else load_matrix(name)
    except (OSError, MatrixError) as exc:
        raise UsageError(f"cannot load contact matrix: {exc}") from None


def derive_seeds(master: int, n: int) -> list[int]:
    """``n`` child seeds derived deterministically from ``master``."""
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(master).spawn(n)]


# --- fold ----------------------------------------------------------------------


def cmd_fold(args) -> int:
    seq = read_sequence(args.seq)
    if seq.h_count == 0:
        raise UsageError("sequence has no hydrophobic residues")
    kw = _config_kwargs(args)
    if args.variant:
        kw["variant"] = args.variant
    if args.seed is not None:
        kw["seed"] = args.seed
    config = _make_config(kw)
    matrix = _load_matrix(config.matrix)
    ref = _read_ref(args.ref) if args.ref else None

    record = run(seq, config, matrix)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{seq.id}_{config.variant}_s{config.seed}"
    (out / f"{stem}.json").write_text(record.to_json())
    (out / f"{stem}.struct").write_text(record.structure_text())

    spec = make_variant(config.variant)
    print(f"search energy ({spec.search_model.value}): {record.best_energy:.4f}")
    print(f"BM energy: {record.best_bm_energy:.4f}")
    print(f"generations: {record.generations}")
    print(f"random walks: {len(record.stagnation_events)}")
    if ref is not None:
        print(f"RMSD: {rmsd(record.best, ref):.4f}")
    print(f"wrote {out / (stem + '.json')}")
    return 0


def _read_ref(path: str):
    try:
        return load_reference(path)
    except OSError as exc:
        raise UsageError(f"cannot read reference: {exc}") from None
    except ReferenceFormatError as exc:
        raise UsageError(str(exc)) from None


# --- bench ---------------------------------------------------------------------


def _bench_job(job):
    seq, config, path = job
    try:
        matrix = default_matrix() if config.matrix == "berrera" else load_matrix(config.matrix)
        record = run(seq, config, matrix)
        path.write_text(record.to_json())
        return path, None
    except Exception as exc:  # reported by the collector
        return path, f"{type(exc).__name__}: {exc}"


def _cached(path: Path, config: RunConfig) -> Optional[RunRecord]:
    if not path.exists():
        return None
    try:
        rec = RunRecord.from_json(path.read_text())
    except (ValueError, KeyError, StructureError):
        return None
    return rec if rec.config == dataclasses.asdict(config) else None


def cmd_bench(args) -> int:
    entries = load_suite(args.suite_file)
    for msg in self_check(entries):
        log.warning("benchmark self-check: %s", msg)
    targets = []
    if args.seq:
        for src in args.seq:
            targets.append((read_sequence(src), None))
    if args.suite is not None or not args.seq:
        ids = [s for s in (args.suite or "").split(",") if s]
        try:
            chosen = select(entries, ids)
        except KeyError as exc:
            raise UsageError(str(exc.args[0])) from None
        targets.extend((e.seq, e.ref) for e in chosen)

    variants = [v.strip().upper() for v in args.variant.split(",")]
    for v in variants:
        if v not in VARIANTS:
            raise UsageError(f"unknown variant {v!r}")
    kw = _config_kwargs(args)
    runs = args.seeds if args.seeds is not None else (FULL_SCALE_RUNS if args.paper_scale else 3)
    seeds = derive_seeds(args.seed, runs)
    interval = parse_duration(args.trace_interval)

    refs = {}
    for item in args.ref or []:
        key, sep, path = item.partition("=")
        if not sep:
            raise UsageError("--ref for bench takes ID=PATH")
        refs[key.upper()] = _read_ref(path)
    for seq, ref_path in targets:
        if seq.id.upper() not in refs and ref_path is not None:
            refs[seq.id.upper()] = _read_ref(str(ref_path))

    out = Path(args.out)
    (out / "runs").mkdir(parents=True, exist_ok=True)
    jobs, paths = [], []
    for seq, _ in targets:
        if seq.h_count == 0:
            raise UsageError(f"{seq.id}: sequence has no hydrophobic residues")
        # seed-major order so partial results compare variants on equal seeds
        for s in seeds:
            for v in variants:
                config = _make_config(kw, variant=v, seed=s)
                path = out / "runs" / f"{seq.id}_{v}_s{s}.json"
                paths.append((seq, v, s, path))
                if args.resume and _cached(path, config) is not None:
                    continue
                jobs.append((seq, config, path))
    _load_matrix(kw.get("matrix", "berrera"))

    failures = 0
    workers = max(1, args.workers or os.cpu_count() or 1)
    log.info("%d runs to execute (%d cached), %d workers", len(jobs), len(paths) - len(jobs), workers)
    if jobs:
        if workers == 1:
            results = map(_bench_job, jobs)
            pool = None
        else:
            pool = multiprocessing.get_context("spawn").Pool(workers)
            results = pool.imap(_bench_job, jobs)
        try:
            for done, (path, err) in enumerate(results, 1):
                if err:
                    failures += 1
                    log.error("%s failed: %s", path.name, err)
                else:
                    log.info("[%d/%d] %s", done, len(jobs), path.name)
        finally:
            if pool is not None:
                pool.close()
                pool.join()

    records = defaultdict(list)
    run_rows = []
    for seq, v, s, path in paths:
        if not path.exists():
            continue
        rec = RunRecord.from_json(path.read_text())
        records[(seq.id, v)].append(rec)
        ref = refs.get(seq.id.upper())
        r = rmsd(rec.best, ref) if ref is not None else None
        run_rows.append([seq.id, v, s, rec.best_energy, rec.best_bm_energy, r, rec.generations,
                         len(rec.stagnation_events)])
        struct = path.with_suffix(".struct")
        struct.write_text(rec.structure_text())

    _write_csv(out / "runs.csv", RUN_FIELDS, run_rows)
    summary = []
    for seq, _ in targets:
        for v in variants:
            recs = records.get((seq.id, v))
            if recs:
                summary.append(summarize(recs, refs.get(seq.id.upper())))
    _write_csv(out / "summary.csv", SummaryRow.FIELDS, [row.as_row() for row in summary])

    # averages per protein with one column per variant
    by_seq = defaultdict(dict)
    for row in summary:
        by_seq[(row.seq, row.size, row.h)][row.variant] = row.avg
    _write_csv(out / "table4.csv", ("seq", "size", "h", *variants),
               [[*k, *(by_seq[k].get(v) for v in variants)] for k in by_seq])
    _write_csv(out / "table5.csv", ("seq", "variant", "hh", "hp", "pp", "total"),
               [[r.seq, r.variant, r.hh, r.hp, r.pp, r.total] for r in summary])

    trace_rows = []
    for (sid, v), recs in records.items():
        budget = recs[0].config["time_budget"]
        for t, e in average_traces([r.trace for r in recs], interval, budget):
            trace_rows.append([sid, v, t, e])
    _write_csv(out / "traces.csv", ("seq", "variant", "t", "energy"), trace_rows)

    print(f"{len(run_rows)} runs, summary in {out / 'summary.csv'}")
    if failures:
        print(f"{failures} runs failed", file=sys.stderr)
        return 1
    return 0


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow(["" if v is None else v for v in row])


# --- eval ----------------------------------------------------------------------


def cmd_eval(args) -> int:
    try:
        seq, conf, stored = parse_structure(Path(args.structure).read_text())
    except OSError as exc:
        raise UsageError(f"cannot read structure: {exc}") from None
    if args.seq:
        other = read_sequence(args.seq)
        if other.codes != seq.codes:
            raise UsageError("sequence does not match the residues in the structure file")
        seq = other
    models = ("HP", "BM") if args.model == "both" else (args.model,)
    matrix = None
    if "BM" in models:
        matrix = load_matrix(args.matrix) if args.matrix else default_matrix()
    for m in models:
        print(f"{m} energy: {evaluate(conf, seq, EnergyModel(m), matrix):.6f}")
    c = contact_census(conf, seq)
    print(f"contacts: hh={c.hh} hp={c.hp} pp={c.pp} total={c.total}")
    if args.ref:
        print(f"RMSD: {rmsd(conf, _read_ref(args.ref)):.4f}")
    return 0


# --- stats ---------------------------------------------------------------------


def _read_results(path: str, variant: Optional[str]) -> dict[str, dict]:
    """Per protein: mean energy, mean RMSD and per-run samples when available."""
    try:
        with open(path, newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from None
    if not rows:
        raise UsageError(f"{path}: no rows")
    if variant:
        rows = [r for r in rows if r.get("variant", "").upper() == variant.upper()]
        if not rows:
            raise UsageError(f"{path}: no rows for variant {variant}")
    per_run = "seed" in rows[0]
    groups = defaultdict(list)
    for r in rows:
        groups[r["seq"]].append(r)
    out = {}
    for sid, rs in groups.items():
        vs = {r.get("variant") for r in rs}
        if len(vs) > 1:
            raise UsageError(f"{path}: {sid} has several variants {sorted(vs)}; choose one")
        if per_run:
            e = [float(r["energy"]) for r in rs]
            m = [float(r["rmsd"]) for r in rs if r.get("rmsd")]
            out[sid] = {"energy": float(np.mean(e)), "rmsd": float(np.mean(m)) if m else None,
                        "energies": e, "rmsds": m or None}
        else:
            r = rs[0]
            out[sid] = {"energy": float(r["avg"]),
                        "rmsd": float(r["avg_rmsd"]) if r.get("avg_rmsd") else None,
                        "energies": None, "rmsds": None}
    return out


def cmd_stats(args) -> int:
    target = _read_results(args.target, args.target_variant)
    reference = _read_results(args.reference, args.reference_variant)
    if set(target) != set(reference):
        only_t = sorted(set(target) - set(reference))
        only_r = sorted(set(reference) - set(target))
        raise UsageError(f"protein ids differ: only in target {only_t}, only in reference {only_r}")
    header = ("seq", "ri_energy", "ri_rmsd", "energy_p", "energy_significant", "rmsd_p", "rmsd_significant")
    rows = []
    for sid in target:
        t, r = target[sid], reference[sid]
        ri_e = relative_improvement(t["energy"], r["energy"], "energy")
        ri_r = None
        if t["rmsd"] is not None and r["rmsd"] is not None:
            ri_r = relative_improvement(t["rmsd"], r["rmsd"], "rmsd")
        e_p = e_sig = r_p = r_sig = None
        if t["energies"] and r["energies"]:
            u = mann_whitney_u(t["energies"], r["energies"])
            e_p, e_sig = u.p, u.significant
        if t["rmsds"] and r["rmsds"]:
            u = mann_whitney_u(t["rmsds"], r["rmsds"])
            r_p, r_sig = u.p, u.significant
        rows.append([sid, ri_e, ri_r, e_p, e_sig, r_p, r_sig])

    def fmt(v, pct=False):
        if v is None:
            return "n/a"
        if isinstance(v, bool):
            return "yes" if v else "no"
        return f"{v:.2f}%" if pct else f"{v:.4g}"

    print(f"{'seq':<8}{'RI energy':>11}{'RI RMSD':>10}{'p(E)':>10}{'sig':>5}{'p(RMSD)':>10}{'sig':>5}")
    for sid, ri_e, ri_r, e_p, e_sig, r_p, r_sig in rows:
        print(f"{sid:<8}{fmt(ri_e, True):>11}{fmt(ri_r, True):>10}{fmt(e_p):>10}{fmt(e_sig):>5}"
              f"{fmt(r_p):>10}{fmt(r_sig):>5}")
    if args.out:
        _write_csv(Path(args.out), header, rows)
    return 0


# --- entry point ---------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="fccfold", description="Protein folding on the FCC lattice.")
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fold", help="fold one sequence")
    f.add_argument("--seq", required=True, help="sequence file, FASTA, '-' for stdin, or residue letters")
    f.add_argument("--variant", choices=VARIANTS)
    f.add_argument("--seed", type=int)
    f.add_argument("--ref", help="native reference structure for RMSD")
    _add_run_flags(f)
    f.set_defaults(func=cmd_fold)

    b = sub.add_parser("bench", help="run variants over benchmark proteins")
    b.add_argument("--suite", help="comma-separated benchmark ids (default: all unless --seq)")
    b.add_argument("--suite-file", help="benchmark CSV replacing the bundled one")
    b.add_argument("--seq", action="append", help="extra sequence source (repeatable)")
    b.add_argument("--variant", default="BH", help="comma-separated variants (default BH)")
    b.add_argument("--seed", type=int, default=0, help="master seed")
    b.add_argument("--seeds", type=int, help="runs per protein and variant (default 3)")
    b.add_argument("--trace-interval", default="2m", help="sampling interval of averaged traces")
    b.add_argument("--workers", type=int, help="parallel runs (default: CPU count)")
    b.add_argument("--ref", action="append", help="ID=PATH native reference (repeatable)")
    b.add_argument("--resume", action="store_true", help="reuse run files with matching config")
    _add_run_flags(b)
    b.set_defaults(func=cmd_bench)

    e = sub.add_parser("eval", help="energy and contacts of a structure file")
    e.add_argument("structure")
    e.add_argument("--seq", help="sequence to check against the structure")
    e.add_argument("--model", choices=("HP", "BM", "both"), default="both")
    e.add_argument("--matrix")
    e.add_argument("--ref")
    e.set_defaults(func=cmd_eval)

    s = sub.add_parser("stats", help="relative improvement and U tests between two result CSVs")
    s.add_argument("target")
    s.add_argument("reference")
    s.add_argument("--target-variant")
    s.add_argument("--reference-variant")
    s.add_argument("--out", help="write the table as CSV")
    s.set_defaults(func=cmd_stats)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (UsageError, SequenceError, StructureError, MatrixError, ReferenceFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
