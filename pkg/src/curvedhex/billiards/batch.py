"""Independent seeded simulator runs and their pattern-frequency table."""
from __future__ import annotations

import csv
import io
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from ..analysis import analyze
from ..geometry import Packing, group_congruent
from .sim import RunStats, SimConfig, run

log = logging.getLogger(__name__)

PATTERN_TOL = 1e-6  # diameters, for grouping simulator output


@dataclass
class RunResult:
    seed: int
    packing: Packing | None
    stats: RunStats | None
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class PatternClass:
    label: int
    count: int
    seeds: list[int]
    best_density: float
    best_ratio: float
    rattlers: int
    rigid: bool
    curved_hex: str | None


@dataclass
class BatchResult:
    config: SimConfig
    runs: list[RunResult]
    patterns: list[PatternClass] = field(default_factory=list)
    labels: dict[int, int] = field(default_factory=dict)  # seed -> pattern label

    @property
    def succeeded(self) -> list[RunResult]:
        return [r for r in self.runs if r.ok]

    @property
    def failures(self) -> list[RunResult]:
        return [r for r in self.runs if not r.ok]

    def best(self) -> RunResult | None:
        """Densest run; ties go to the lowest seed."""
        ok = self.succeeded
        return max(ok, key=lambda r: (r.packing.density, -r.seed)) if ok else None

    def stats_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["seed", "status", "collisions", "events", "sim_time", "wall_clock",
                    "ratio", "density", "pattern", "error"])
        for r in self.runs:
            if r.ok:
                s = r.stats
                w.writerow([r.seed, s.status, s.collisions, s.events, f"{s.sim_time:.17g}",
                            f"{s.wall_clock:.3f}", f"{s.ratio:.17g}", f"{s.density:.17g}",
                            self.labels.get(r.seed, ""), ""])
            else:
                w.writerow([r.seed, "failed", "", "", "", "", "", "", "", r.error])
        return out.getvalue()


def _one(config: SimConfig) -> RunResult:
    try:
        packing, stats = run(config)
        return RunResult(config.seed, packing, stats)
    except Exception as exc:  # recorded, the batch goes on
        log.warning("run seed=%d failed: %s", config.seed, exc)
        return RunResult(config.seed, None, None,
                         f"{type(exc).__name__}: {exc}".replace("\n", " "))


def _jammed_part(p: Packing, rattlers: list[int]) -> Packing:
    keep = np.setdiff1d(np.arange(p.n), rattlers)
    return Packing(p.container_radius, p.disk_radius, p.centers[keep], {})


def classify_runs(runs: list[RunResult], tol: float = PATTERN_TOL):
    """Group successful runs by congruence of their jammed (rattler-free) parts."""
    ok = [r for r in runs if r.ok]
    reports = [analyze(r.packing, threshold="auto", match_tol=tol) for r in ok]
    cores = [_jammed_part(r.packing, rep.rattlers) for r, rep in zip(ok, reports)]
    labels = group_congruent(cores, tol)
    patterns: dict[int, PatternClass] = {}
    for r, rep, lab in zip(ok, reports, labels):
        pc = patterns.get(lab)
        if pc is None:
            patterns[lab] = PatternClass(lab, 1, [r.seed], rep.density, rep.ratio,
                                         len(rep.rattlers), rep.rigid, rep.curved_hex)
        else:
            pc.count += 1
            pc.seeds.append(r.seed)
            if rep.density > pc.best_density:
                pc.best_density, pc.best_ratio = rep.density, rep.ratio
    ordered = sorted(patterns.values(), key=lambda c: (-c.best_density, c.label))
    return ordered, {r.seed: lab for r, lab in zip(ok, labels)}


def batch(config: SimConfig, run_count: int | None = None, parallelism: int = 1,
          seeds: list[int] | None = None) -> BatchResult:
    """Run ``run_count`` simulations with seeds config.seed, config.seed+1, ...
    (or the explicit ``seeds``) and tabulate the jammed patterns found.

    Results depend only on the seed list, not on ``parallelism``.
    """
    if seeds is None:
        if run_count is None or run_count < 1:
            raise ValueError("run_count must be >= 1")
        seeds = [config.seed + i for i in range(run_count)]
    if not seeds:
        raise ValueError("need at least one seed")
    configs = [config.with_(seed=s) for s in seeds]
    if parallelism > 1 and len(configs) > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            runs = list(pool.map(_one, configs))
    else:
        runs = [_one(c) for c in configs]
    patterns, labels = classify_runs(runs)
    return BatchResult(config, runs, patterns, labels)
