"""Monte Carlo trials and (alpha, nu, n) sweeps.

Each trial draws its own seed from (master_seed, cell, trial index) via
``numpy.random.SeedSequence``, so results do not depend on execution order or
on how trials are spread over worker processes.

Output files for ``sweep(config)`` with ``config.out = "runs/x.csv"``:

* ``runs/x.csv``: schema comment, column header, one row per trial, then a
  ``# complete`` marker once every trial has been written.
* ``runs/x.tails.jsonl``: per-trial demand tail counts by layer.
* ``runs/x.summary.json``: per-cell rates and phase estimates.
"""
from __future__ import annotations

import csv
import io
import json
import os
import struct
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .graphcore import build_pruned
from .hamilton import construct, verify_cycle
from .matching import (certify_no_matching, matching_from_cycle,
                       obstruction_counts, verify_matching)
from .sampler import MODEL_KINDS, ModelParams, sample
from .tiling import TilingError

SCHEMA = "# kpkvb-sweep schema=1"
COMPLETE = "# complete"
TAIL_MAX = 10

DEFAULT_ALPHAS = (0.1, 0.2, 0.3, 0.4)
DEFAULT_NUS = (0.05, 0.1, 0.2, 0.5, 1, 2, 4, 8, 16, 32, 64)
DEFAULT_NS = (1000, 10000, 100000)


@dataclass
class TrialRecord:
    n: int
    alpha: float
    nu: float
    R: float
    model: str
    trial: int
    seed: int
    ham_status: str  # success | failure | skipped
    fallback_used: bool = False
    residual_count: int = 0
    vertices: int = 0
    Ns: int | None = None
    Ms: int | None = None
    certified_near_perfect: bool | None = None
    edge_count: int = 0
    mean_degree: float = 0.0
    note: str = ""
    wall_time_ms: float = 0.0
    demand_tail: list | None = field(default=None, repr=False)

    @property
    def key(self) -> tuple:
        return trial_key(self.n, self.alpha, self.nu, self.model, self.trial)


COLUMNS = [f for f in TrialRecord.__dataclass_fields__ if f != "demand_tail"]


def trial_key(n, alpha, nu, model, trial) -> tuple:
    """Canonical identity and sort key of a trial."""
    return (float(alpha), int(n), float(nu), str(model), int(trial))


@dataclass(frozen=True)
class SweepConfig:
    alphas: tuple = DEFAULT_ALPHAS
    nus: tuple = DEFAULT_NUS
    ns: tuple = DEFAULT_NS
    trials: int = 20
    master_seed: int = 0
    model_kind: str = "poisson"
    out: str = "sweep.csv"
    parallel: int = 1

    def __post_init__(self):
        if not (self.alphas and self.nus and self.ns):
            raise ValueError("grids must be non-empty")
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if self.model_kind not in MODEL_KINDS:
            raise ValueError(f"unknown model kind {self.model_kind!r}")
        if self.parallel < 1:
            raise ValueError("parallel must be at least 1")

    def cells(self):
        return [(n, a, nu) for a in self.alphas for n in self.ns for nu in self.nus]

    def tasks(self):
        return [(n, a, nu, t, self.master_seed, self.model_kind)
                for n, a, nu in self.cells() for t in range(self.trials)]


def _float_bits(x: float) -> int:
    return struct.unpack("<Q", struct.pack("<d", float(x)))[0]


def trial_seed(n, alpha, nu, trial, master_seed, model_kind) -> int:
    key = (int(n), _float_bits(alpha), _float_bits(nu), MODEL_KINDS.index(model_kind), int(trial))
    ss = np.random.SeedSequence(int(master_seed), spawn_key=key)
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def run_trial(cell, trial_index: int, master_seed: int, model_kind: str = "poisson") -> TrialRecord:
    """Sample, build, construct and check one instance. Failures are data."""
    n, alpha, nu = cell
    seed = trial_seed(n, alpha, nu, trial_index, master_seed, model_kind)
    t0 = time.perf_counter()
    base = dict(n=int(n), alpha=float(alpha), nu=float(nu), model=model_kind,
                trial=int(trial_index), seed=seed)
    try:
        params = ModelParams(n, alpha, nu)
    except ValueError as exc:
        return TrialRecord(R=float("nan"), ham_status="skipped", note=str(exc), **base)
    pts = sample(params, seed, model_kind)
    rec = TrialRecord(R=params.R, ham_status="failure", vertices=len(pts), **base)
    graph = build_pruned(pts)
    rec.edge_count = graph.edge_count
    rec.mean_degree = 2.0 * graph.edge_count / len(pts) if len(pts) else 0.0
    try:
        res = construct(pts)
    except TilingError as exc:
        rec.ham_status, rec.note = "skipped", str(exc)
        res = None
    if res is not None:
        rec.fallback_used = res.fallback_used
        rec.residual_count = len(res.residual)
        if res.demand_table is not None:
            dt = res.demand_table
            rec.demand_tail = [dt.tail_counts(i, TAIL_MAX).tolist() for i in range(dt.i_max + 1)]
        if res.success:
            v = verify_cycle(pts, res.cycle)
            m = matching_from_cycle(res.cycle)
            vm = verify_matching(pts, m)
            if v and vm and m.near_perfect:
                rec.ham_status = "success"
            else:
                rec.note = f"output rejected: {v.reason or vm.reason}"
        else:
            rec.note = res.reason
    if 1.0 / alpha < params.R:
        obs = obstruction_counts(pts, graph)
        rec.Ns, rec.Ms = obs.Ns, obs.Ms
        rec.certified_near_perfect = certify_no_matching(obs, len(pts))
    rec.wall_time_ms = round(1000.0 * (time.perf_counter() - t0), 3)
    return rec


def _run_task(task) -> TrialRecord:
    n, a, nu, t, master, model = task
    return run_trial((n, a, nu), t, master, model)


# --- CSV --------------------------------------------------------------------

def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def format_row(rec: TrialRecord) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerow([_cell(getattr(rec, c)) for c in COLUMNS])
    return buf.getvalue()


def read_rows(path) -> list[dict]:
    """Data rows of a sweep CSV (comments and a torn last line are ignored)."""
    text = Path(path).read_text()
    if text and not text.endswith("\n"):
        text = text[: text.rfind("\n") + 1]
    lines = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    rows = list(csv.DictReader(lines))
    return [r for r in rows if len(r) == len(COLUMNS) and None not in r.values()]


def row_key(row: dict) -> tuple:
    return trial_key(row["n"], row["alpha"], row["nu"], row["model"], row["trial"])


def _sidecar(path: Path, suffix: str) -> Path:
    return path.with_name(path.stem + suffix)


def _prepare(out: Path) -> set:
    """Start a fresh file or keep only complete rows of an earlier run."""
    header = ",".join(COLUMNS) + "\n"
    done = set()
    kept = []
    if out.exists():
        first = out.read_text().split("\n", 1)[0]
        if first != SCHEMA:
            raise ValueError(f"{out} exists but is not a schema-1 sweep file")
        for row in read_rows(out):
            k = row_key(row)
            if k not in done:
                done.add(k)
                kept.append(row)
    tmp = out.with_name(out.name + ".tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write(SCHEMA + "\n" + header)
        w = csv.writer(fh, lineterminator="\n")
        for row in kept:
            w.writerow([row[c] for c in COLUMNS])
    os.replace(tmp, out)
    return done


def sweep(config: SweepConfig) -> dict:
    """Run every pending trial of ``config`` and return the summary."""
    out = Path(config.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    done = _prepare(out)
    tails_path = _sidecar(out, ".tails.jsonl")
    tasks = [t for t in config.tasks()
             if trial_key(t[0], t[1], t[2], t[5], t[3]) not in done]
    if config.parallel > 1 and len(tasks) > 1:
        pool = ProcessPoolExecutor(config.parallel)
        results = pool.map(_run_task, tasks, chunksize=1)
    else:
        pool = None
        results = map(_run_task, tasks)
    try:
        with open(out, "a", newline="") as fh, open(tails_path, "a") as tf:
            for rec in results:
                fh.write(format_row(rec))
                fh.flush()
                if rec.demand_tail is not None:
                    tf.write(json.dumps({"key": list(rec.key), "tail": rec.demand_tail}) + "\n")
                    tf.flush()
            fh.write(COMPLETE + "\n")
    finally:
        if pool is not None:
            pool.shutdown()
    summary = summarize(read_rows(out), _read_tails(tails_path))
    _sidecar(out, ".summary.json").write_text(json.dumps(summary, indent=2) + "\n")
    return summary


def _read_tails(path: Path) -> dict:
    tails = {}
    if path.exists():
        for ln in path.read_text().splitlines():
            try:
                obj = json.loads(ln)
            except json.JSONDecodeError:
                continue  # torn final line of an interrupted run
            tails[tuple(obj["key"])] = obj["tail"]
    return tails


def _rate(flags) -> float | None:
    return float(np.mean(flags)) if flags else None


def summarize(rows: list[dict], tails: dict | None = None) -> dict:
    """Per-cell rates, demand tails and per-(alpha, n, model) phase estimates."""
    tails = tails or {}
    cells: dict[tuple, list] = {}
    for row in rows:
        k = row_key(row)
        cells.setdefault(k[:4], []).append(row)
    out_cells = []
    for (alpha, n, nu, model), rs in sorted(cells.items()):
        run = [r for r in rs if r["ham_status"] != "skipped"]
        cert = [r["certified_near_perfect"] == "True" for r in run if r["certified_near_perfect"]]
        entry = {
            "alpha": alpha, "n": n, "nu": nu, "model": model,
            "trials": len(rs), "skipped": len(rs) - len(run),
            "success_rate": _rate([r["ham_status"] == "success" for r in run]),
            "fallback_rate": _rate([r["fallback_used"] == "True" for r in run]),
            "certified_rate": _rate(cert),
            "mean_Ns": _rate([int(r["Ns"]) for r in run if r["Ns"]]),
            "mean_Ms": _rate([int(r["Ms"]) for r in run if r["Ms"]]),
            "mean_degree": _rate([float(r["mean_degree"]) for r in run]),
        }
        layer_tails = [tails[row_key(r)] for r in run if row_key(r) in tails]
        if layer_tails:
            depth = min(len(t) for t in layer_tails)
            entry["demand_tail"] = [
                (np.sum([t[i] for t in layer_tails], axis=0)
                 / max(sum(t[i][0] for t in layer_tails), 1)).tolist()
                for i in range(depth)
            ]
        out_cells.append(entry)
    phases = {}
    for c in out_cells:
        phases.setdefault((c["alpha"], c["n"], c["model"]), []).append(c)
    estimates = []
    for (alpha, n, model), cs in sorted(phases.items()):
        ok = [c["nu"] for c in cs if c["success_rate"] is not None and c["success_rate"] >= 0.5]
        cert = [c["nu"] for c in cs if c["certified_rate"] is not None and c["certified_rate"] >= 0.5]
        estimates.append({
            "alpha": alpha, "n": n, "model": model,
            "nu_success_50": min(ok) if ok else None,
            "nu_certified_50": max(cert) if cert else None,
        })
    return {"cells": out_cells, "phase_estimates": estimates}
