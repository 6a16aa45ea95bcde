"""Growing-disk billiards: n elastic disks inflate inside a fixed circle
until they jam.

Time is measured so that the mean disk speed is 1; the common radius grows
linearly, r(t) = r0 + g t, with g the growth-to-speed ratio.
"""
from __future__ import annotations

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from ..geometry import Packing, pair_gaps, wall_gaps
from . import _kernel as K

log = logging.getLogger(__name__)


class SimulationError(RuntimeError):
    """The event loop starved or produced non-finite numbers."""


@dataclass(frozen=True)
class SimConfig:
    n: int
    container_radius: float = 1.0
    growth_to_speed_ratio: float = 1e-3
    seed: int = 0
    convergence_window: int = 1_000_000
    convergence_rel_tol: float = 1e-15
    max_collisions: int = 500_000_000
    initial_density: float = 0.1
    renorm_interval: int | None = None  # collisions between speed resets; default 2n
    growth_stages: int = 3       # >1: after each converged stage, continue with g * growth_stage_factor
    growth_stage_factor: float = 0.1
    debug: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise ValueError("n must be >= 1")
        if not self.growth_to_speed_ratio > 0:
            raise ValueError("growth_to_speed_ratio must be positive")
        if self.convergence_rel_tol < np.finfo(float).eps:
            raise ValueError("convergence_rel_tol must be >= machine epsilon")
        if not 0 < self.initial_density < 0.5:
            raise ValueError("initial_density must be in (0, 0.5)")
        if self.growth_stages < 1 or not 0 < self.growth_stage_factor < 1:
            raise ValueError("growth_stages must be >= 1 and growth_stage_factor in (0, 1)")

    def with_(self, **kw) -> "SimConfig":
        return SimConfig(**{**asdict(self), **kw})

    @property
    def renorm_every(self) -> int:
        return self.renorm_interval if self.renorm_interval is not None else max(2 * self.n, 8)


@dataclass
class RunStats:
    seed: int
    n: int
    collisions: int
    events: int
    renormalizations: int
    sim_time: float
    wall_clock: float
    ratio: float
    density: float
    status: str
    min_gap: float | None = None
    gap_decades: dict[str, int] = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.status == "converged"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["converged"] = self.converged
        return d


def random_initial_state(n: int, R: float, density: float, rng: np.random.Generator):
    """Non-overlapping uniform positions at packing fraction ``density`` and
    unit speeds in uniformly random directions."""
    r0 = R * math.sqrt(density / n)
    pos = np.zeros((n, 2))
    placed = 0
    attempts = 0
    while placed < n:
        attempts += 1
        if attempts > 10_000 * n:
            raise SimulationError("could not place initial disks without overlap")
        rho = (R - r0) * math.sqrt(rng.random())
        phi = 2 * math.pi * rng.random()
        cand = np.array([rho * math.cos(phi), rho * math.sin(phi)])
        if placed and np.min(np.hypot(*(pos[:placed] - cand).T)) < 2 * r0:
            continue
        pos[placed] = cand
        placed += 1
    theta = rng.uniform(0, 2 * math.pi, n)
    vel = np.column_stack([np.cos(theta), np.sin(theta)])
    return pos, vel, r0


class SimState:
    """Mutable event-loop state; see the kernel module for the array layout."""

    def __init__(self, pos: np.ndarray, vel: np.ndarray, r0: float, g: float, R: float):
        n = len(pos)
        self.pos = np.ascontiguousarray(pos, dtype=np.float64).copy()
        self.vel = np.ascontiguousarray(vel, dtype=np.float64).copy()
        self.tl = np.zeros(n)
        self.stamp = np.zeros(n, dtype=np.int64)
        size = 1 << max(1, (n - 1).bit_length())
        self.ev_t = np.full(size, np.inf)
        self.ev_p = np.full(size, K.NONE, dtype=np.int64)
        self.ev_ps = np.zeros(size, dtype=np.int64)
        self.tree = np.zeros(2 * size, dtype=np.int64)
        self.fs = np.array([0.0, r0, g, R, R / r0, np.inf])
        self.ist = np.zeros(6, dtype=np.int64)
        K.schedule_all(self.pos, self.vel, self.tl, self.stamp, self.ev_t,
                       self.ev_p, self.ev_ps, self.tree, self.fs)

    @classmethod
    def from_config(cls, config: SimConfig) -> "SimState":
        rng = np.random.default_rng(config.seed)
        pos, vel, r0 = random_initial_state(config.n, config.container_radius,
                                            config.initial_density, rng)
        return cls(pos, vel, r0, config.growth_to_speed_ratio, config.container_radius)

    @property
    def n(self) -> int:
        return len(self.pos)

    @property
    def time(self) -> float:
        return float(self.fs[K.NOW])

    @property
    def radius(self) -> float:
        return float(self.fs[K.R0] + self.fs[K.GROWTH] * self.fs[K.NOW])

    @property
    def growth(self) -> float:
        return float(self.fs[K.GROWTH])

    @property
    def container_radius(self) -> float:
        return float(self.fs[K.CONTAINER])

    @property
    def collision_count(self) -> int:
        return int(self.ist[K.COLLISIONS])

    def positions(self, t: float | None = None) -> np.ndarray:
        t = self.time if t is None else t
        return self.pos + self.vel * (t - self.tl)[:, None]

    def pending_events(self) -> list[tuple[float, int, int]]:
        """(due_time, owner, partner) for every disk; partner -1 is the wall."""
        return [(float(self.ev_t[i]), i, int(self.ev_p[i])) for i in range(self.n)]

    # single-step primitives, exposed for inspection and testing

    def predict_disk_disk(self, i: int, j: int) -> float | None:
        if i == j:
            raise ValueError("a disk cannot collide with itself")
        t = K.predict_pair(self.pos, self.vel, self.tl, i, j, self.fs[K.R0], self.growth)
        return None if t == np.inf else max(t, self.time)

    def predict_disk_wall(self, i: int) -> float | None:
        t = K.predict_wall(self.pos, self.vel, self.tl, i, self.fs[K.R0], self.growth,
                           self.container_radius)
        return None if t == np.inf else max(t, self.time)

    def resolve_collision(self, i: int, partner: int, t: float) -> None:
        """Move the participants to time t and apply the collision law.

        Does not touch the event schedule; intended for standalone use.
        """
        K.commit(self.pos, self.vel, self.tl, self.stamp, i, partner, t, self.growth)
        self.fs[K.NOW] = max(self.fs[K.NOW], t)

    def set_growth(self, g: float) -> None:
        """Change the growth rate from now on, keeping the current radius."""
        r = self.radius
        self.fs[K.GROWTH] = g
        self.fs[K.R0] = r - g * self.time
        self.fs[K.WIN_RATIO] = self.container_radius / r
        self.ist[K.WIN_START] = self.ist[K.COLLISIONS]
        self.stamp += 1
        K.schedule_all(self.pos, self.vel, self.tl, self.stamp, self.ev_t,
                       self.ev_p, self.ev_ps, self.tree, self.fs)

    def advance(self, stop_at: int, window: int, rel_tol: float, renorm_every: int,
                debug: bool = False, trace: np.ndarray | None = None) -> int:
        if trace is None:
            trace = np.zeros((0, 3))
        return K.run_events(self.pos, self.vel, self.tl, self.stamp, self.ev_t,
                            self.ev_p, self.ev_ps, self.tree, self.fs, self.ist,
                            stop_at, window, rel_tol, renorm_every, debug, trace)


def snapshot(state: SimState, metadata: dict | None = None) -> Packing:
    return Packing(state.container_radius, state.radius, state.positions(),
                   {"collisions": state.collision_count, **(metadata or {})})


def gap_decades(p: Packing, upto: float = 1e-2) -> dict[str, int]:
    """Histogram of near-contact gaps (diameters) by decade; '<=0' for overlaps."""
    gaps = np.concatenate([pair_gaps(p)[np.triu_indices(p.n, 1)], wall_gaps(p)])
    gaps = gaps[gaps < upto]
    out: dict[str, int] = {}
    for gap in np.sort(gaps):
        key = "<=0" if gap <= 0 else f"1e{math.floor(math.log10(gap))}"
        out[key] = out.get(key, 0) + 1
    return out


_STATUS = {K.STOPPED: "max_collisions", K.CONVERGED: "converged",
           K.STARVED: "starved", K.NUMERIC: "numeric"}


def run(config: SimConfig, snapshots_at: tuple[int, ...] = (),
        trace: np.ndarray | None = None) -> tuple[Packing, RunStats] | tuple[Packing, RunStats, list[Packing]]:
    """Simulate until D/d stops changing or the collision budget is spent.

    With ``snapshots_at``, also returns packings captured at those collision
    counts (those not reached are omitted).
    """
    start = time.perf_counter()
    state = SimState.from_config(config)
    snaps = []
    targets = sorted(c for c in snapshots_at if c >= 0)
    status = K.STOPPED
    stages_left = config.growth_stages - 1
    while True:
        while targets and targets[0] <= state.collision_count:
            snaps.append(snapshot(state))
            targets.pop(0)
        stop = min([config.max_collisions] + targets[:1])
        status = state.advance(stop, config.convergence_window, config.convergence_rel_tol,
                               config.renorm_every, config.debug,
                               trace if trace is not None else None)
        if status == K.CONVERGED and stages_left > 0:
            stages_left -= 1
            state.set_growth(state.growth * config.growth_stage_factor)
            continue
        if status != K.STOPPED or state.collision_count >= config.max_collisions:
            break
    if status in (K.STARVED, K.NUMERIC):
        raise SimulationError(
            f"{_STATUS[status]} after {state.collision_count} collisions "
            f"(seed {config.seed}, n {config.n}, t {state.time!r}, r {state.radius!r})")
    packing = snapshot(state, {"source": "billiards", "seed": config.seed})
    stats = RunStats(
        seed=config.seed,
        n=config.n,
        collisions=state.collision_count,
        events=int(state.ist[K.EVENTS]),
        renormalizations=int(state.ist[K.RENORMS]),
        sim_time=state.time,
        wall_clock=time.perf_counter() - start,
        ratio=packing.ratio,
        density=packing.density,
        status=_STATUS[status],
        min_gap=float(state.fs[K.MIN_GAP]) if config.debug else None,
        gap_decades=gap_decades(packing),
    )
    log.debug("n=%d seed=%d: %s after %d collisions, D/d=%.15g",
              config.n, config.seed, stats.status, stats.collisions, stats.ratio)
    if snapshots_at:
        return packing, stats, snaps
    return packing, stats


def manifest(config: SimConfig) -> str:
    return json.dumps(asdict(config), indent=2, sort_keys=True) + "\n"
