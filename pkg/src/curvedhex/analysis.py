"""Contact graphs, rattlers, first-order rigidity and pattern classification."""
from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from functools import lru_cache

import numpy as np

from .construct import MAX_ENUMERATE_K, PathSpec, enumerate_all
from .geometry import (
    Packing,
    _jsonable,
    congruent,
    curved_hex_ratio,
    layers_for,
    pair_gaps,
    wall_gaps,
)

BOND_THRESHOLD = 1e-13        # converged simulator output
CONSTRUCTED_THRESHOLD = 1e-9  # closed-form constructions
DISTINCT_THRESHOLD = 1e-5     # near-contacts at least this far apart are not bonds
RANK_TOL = 1e-8
ANGLE_TOL = 1e-9
WALL = -1


@dataclass(frozen=True, eq=False)
class ContactGraph:
    """Bonds of a packing; gaps are in disk diameters, ``centers`` too."""

    centers: np.ndarray
    pairs: np.ndarray        # (m, 2) with i < j
    pair_gaps: np.ndarray
    wall: np.ndarray         # disk ids touching the container
    wall_gaps: np.ndarray
    threshold: float
    ambiguous_pairs: np.ndarray
    ambiguous_wall: np.ndarray
    min_nonbond_gap: float

    @property
    def n(self) -> int:
        return len(self.centers)

    def neighbors(self, i: int) -> list[int]:
        """Bonded disks of i; the wall appears as WALL (-1)."""
        a = self.pairs
        out = a[a[:, 0] == i, 1].tolist() + a[a[:, 1] == i, 0].tolist()
        if i in self._wall_set:
            out.append(WALL)
        return sorted(out)

    @property
    def _wall_set(self) -> set[int]:
        return set(self.wall.tolist())

    def adjacency(self) -> list[set[int]]:
        adj: list[set[int]] = [set() for _ in range(self.n)]
        for i, j in self.pairs.tolist():
            adj[i].add(j)
            adj[j].add(i)
        return adj

    def degree(self) -> np.ndarray:
        deg = np.zeros(self.n, dtype=int)
        np.add.at(deg, self.pairs.ravel(), 1)
        deg[self.wall] += 1
        return deg


def contact_graph(p: Packing, threshold: float = BOND_THRESHOLD,
                  distinct: float = DISTINCT_THRESHOLD) -> ContactGraph:
    """Bond every disk-disk or disk-wall pair whose gap is below ``threshold``.

    Gaps in [threshold, distinct) are reported as ambiguous; they are not bonds.
    """
    x = p.in_diameters()
    wg = wall_gaps(p)
    if p.n > 1:
        gaps = pair_gaps(p)
        upper = np.triu(np.ones_like(gaps, dtype=bool), 1)
        ii, jj = np.nonzero(upper & (gaps < threshold))
        ai, aj = np.nonzero(upper & (gaps >= threshold) & (gaps < distinct))
        pairs = np.column_stack([ii, jj]).astype(int)
        pg = gaps[ii, jj]
        amb = np.column_stack([ai, aj]).astype(int)
        nonbond = gaps[upper & (gaps >= threshold)]
    else:
        pairs = amb = np.zeros((0, 2), dtype=int)
        pg = nonbond = np.zeros(0)
    wall = np.nonzero(wg < threshold)[0]
    amb_wall = np.nonzero((wg >= threshold) & (wg < distinct))[0]
    nonbond = np.concatenate([nonbond, wg[wg >= threshold]])
    return ContactGraph(
        centers=x,
        pairs=pairs,
        pair_gaps=pg,
        wall=wall,
        wall_gaps=wg[wall],
        threshold=threshold,
        ambiguous_pairs=amb,
        ambiguous_wall=amb_wall,
        min_nonbond_gap=float(nonbond.min()) if nonbond.size else math.inf,
    )


def split_threshold(p: Packing, floor: float = DISTINCT_THRESHOLD,
                    minimum: float = BOND_THRESHOLD) -> float:
    """Bond threshold at the widest gap-size jump below ``floor``.

    Sorts all disk-disk and disk-wall gaps under ``floor`` and cuts at the
    largest ratio between consecutive ones, so converged contacts (residual
    gaps near roundoff) separate from genuine near-misses.  Never returns
    less than ``minimum``; returns ``floor`` if every small gap is a contact.
    """
    gaps = wall_gaps(p)
    if p.n > 1:
        gaps = np.concatenate([pair_gaps(p)[np.triu_indices(p.n, 1)], gaps])
    small = np.sort(np.maximum(gaps[gaps < floor], minimum / 10))
    if small.size == 0:
        return minimum
    edges = np.append(small, floor)
    jumps = np.log(edges[1:]) - np.log(edges[:-1])
    cut = int(np.argmax(jumps))
    return max(minimum, math.sqrt(edges[cut] * edges[cut + 1]))


def _contact_normals(g: ContactGraph, i: int, active: np.ndarray, adj) -> list[np.ndarray]:
    x = g.centers
    normals = [x[j] - x[i] for j in adj[i] if active[j]]
    if i in g._wall_set:
        r = math.hypot(*x[i])
        normals.append(x[i] / r if r > 0 else np.array([1.0, 0.0]))
    return normals


def _is_blocked(normals: list[np.ndarray]) -> bool:
    """True when the contact normals fit in no closed half-plane."""
    if len(normals) < 3:
        return False
    ang = np.sort([math.atan2(v[1], v[0]) for v in normals])
    gaps = np.diff(np.append(ang, ang[0] + 2 * math.pi))
    return bool(gaps.max() < math.pi - ANGLE_TOL)


def find_rattlers(g: ContactGraph, order=None) -> set[int]:
    """Disks that are not locally blocked, peeled off until nothing changes.

    A disk is removed if it has fewer than 3 contacts (the wall counts as
    one) or all its contact normals lie in a closed half-plane; contacts with
    removed disks no longer count.  ``order`` optionally fixes the scan order.
    """
    adj = g.adjacency()
    active = np.ones(g.n, dtype=bool)
    scan = list(range(g.n)) if order is None else list(order)
    changed = True
    while changed:
        changed = False
        for i in scan:
            if active[i] and not _is_blocked(_contact_normals(g, i, active, adj)):
                active[i] = False
                changed = True
    return set(np.nonzero(~active)[0].tolist())


def rigidity_matrix(g: ContactGraph, keep: np.ndarray) -> np.ndarray:
    """First-order contact constraints over the disks flagged in ``keep``.

    One row per bond between kept disks (relative normal motion) and one
    per kept wall contact (radial motion); columns are (x, y) per kept disk.
    """
    idx = -np.ones(g.n, dtype=int)
    idx[keep] = np.arange(int(keep.sum()))
    x = g.centers
    rows = []
    for i, j in g.pairs.tolist():
        if keep[i] and keep[j]:
            d = x[i] - x[j]
            d = d / math.hypot(*d)
            row = np.zeros(2 * int(keep.sum()))
            row[2 * idx[i]:2 * idx[i] + 2] = d
            row[2 * idx[j]:2 * idx[j] + 2] = -d
            rows.append(row)
    for i in g.wall.tolist():
        if keep[i]:
            r = math.hypot(*x[i])
            row = np.zeros(2 * int(keep.sum()))
            if r > 0:
                row[2 * idx[i]:2 * idx[i] + 2] = x[i] / r
            rows.append(row)
    return np.array(rows).reshape(len(rows), 2 * int(keep.sum()))


def rigidity_test(p: Packing, g: ContactGraph, rattlers: set[int] | None = None) -> tuple[bool, int]:
    """First-order rigidity of the jammed subset.

    Returns (rigid, flex_dimension) where flex_dimension counts infinitesimal
    motions other than the global rotation about the container center.
    """
    if rattlers is None:
        rattlers = find_rattlers(g)
    keep = np.ones(g.n, dtype=bool)
    keep[list(rattlers)] = False
    m = int(keep.sum())
    if m == 0 or (len(g.pairs) == 0 and len(g.wall) == 0):
        return False, 2 * m
    M = rigidity_matrix(g, keep)
    if M.shape[0] == 0:
        return False, 2 * m
    s = np.linalg.svd(M, compute_uv=False)
    nullity = 2 * m - int(np.sum(s > RANK_TOL))
    x = g.centers[keep]
    rot = np.column_stack([-x[:, 1], x[:, 0]]).ravel()
    norm = np.linalg.norm(rot)
    rotation_free = norm > 0 and np.linalg.norm(M @ rot) <= RANK_TOL * norm
    flex = nullity - (1 if rotation_free and nullity > 0 else 0)
    return flex == 0, flex


def _bfs_layers(adj: list[set[int]], source: int) -> np.ndarray:
    dist = -np.ones(len(adj), dtype=int)
    dist[source] = 0
    queue = deque([source])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if dist[v] < 0:
                dist[v] = dist[u] + 1
                queue.append(v)
    return dist


def classify_regular(p: Packing, g: ContactGraph) -> tuple[bool, list[int] | None]:
    """Look for a k-segment bond path from the central disk to a wall disk
    whose every segment has a common bonded neighbor (a bond triangle)."""
    k = layers_for(p.n)
    if k is None or p.n == 0:
        return False, None
    adj = g.adjacency()
    center = int(np.argmin(np.hypot(*g.centers.T)))
    dist = _bfs_layers(adj, center)
    wall = g._wall_set

    def in_triangle(u, v):
        return bool(adj[u] & adj[v])

    parent = {center: None}
    frontier = [center]
    for step in range(1, k + 1):
        nxt = []
        for u in frontier:
            for v in sorted(adj[u]):
                if dist[v] == step and v not in parent and in_triangle(u, v):
                    parent[v] = u
                    nxt.append(v)
        frontier = sorted(nxt)
    ends = [v for v in frontier if v in wall]
    if not ends:
        return False, None
    path = [ends[0]]
    while parent[path[-1]] is not None:
        path.append(parent[path[-1]])
    return True, path[::-1]


@lru_cache(maxsize=None)
def _catalogue(k: int):
    return tuple(enumerate_all(k))


def match_curved_hex(p: Packing, tol: float = 1e-6) -> PathSpec | None:
    """Canonical PathSpec of the curved hexagonal class congruent to p, if any."""
    k = layers_for(p.n)
    if k is None or k > MAX_ENUMERATE_K:
        return None
    if abs(p.ratio - curved_hex_ratio(k)) > 2 * tol:
        return None
    for spec, rep in _catalogue(k):
        if congruent(rep, p, tol):
            return spec
    return None


def tightness_ratio(best_minus: Packing, best_center: Packing, best_plus: Packing) -> float:
    """Decrease of D/d when a disk is removed over its increase when one is added."""
    if not (best_minus.n + 1 == best_center.n == best_plus.n - 1):
        raise ValueError("packings must have h-1, h and h+1 disks")
    num = best_center.ratio - best_minus.ratio
    den = best_plus.ratio - best_center.ratio
    if den <= 0:
        raise ValueError(f"non-positive D/d increase {den:.3e} for the added disk")
    return num / den


@dataclass
class AnalysisReport:
    n: int
    density: float
    ratio: float
    threshold: float
    bonds: int
    wall_bonds: int
    ambiguous: int
    min_nonbond_gap: float
    rattlers: list[int] = field(default_factory=list)
    jammed: list[int] = field(default_factory=list)
    rigid: bool = False
    flex_dimension: int = 0
    regular: bool = False
    witness: list[int] | None = None
    curved_hex: str | None = None

    def to_json(self) -> str:
        d = asdict(self)
        if math.isinf(d["min_nonbond_gap"]):
            d["min_nonbond_gap"] = None
        return json.dumps(_jsonable(d), indent=2, sort_keys=True) + "\n"


def analyze(p: Packing, threshold: float | str = BOND_THRESHOLD, match_tol: float = 1e-6) -> AnalysisReport:
    """Full report; ``threshold="auto"`` picks it with ``split_threshold``."""
    if threshold == "auto":
        threshold = split_threshold(p)
    g = contact_graph(p, threshold)
    rattlers = find_rattlers(g)
    rigid, flex = rigidity_test(p, g, rattlers)
    match = match_curved_hex(p, match_tol)
    regular, witness = classify_regular(p, g) if match is not None else (False, None)
    return AnalysisReport(
        n=p.n,
        density=p.density,
        ratio=p.ratio,
        threshold=threshold,
        bonds=len(g.pairs),
        wall_bonds=len(g.wall),
        ambiguous=len(g.ambiguous_pairs) + len(g.ambiguous_wall),
        min_nonbond_gap=g.min_nonbond_gap,
        rattlers=sorted(rattlers),
        jammed=sorted(set(range(p.n)) - rattlers),
        rigid=rigid,
        flex_dimension=flex,
        regular=regular,
        witness=witness,
        curved_hex=str(match) if match is not None else None,
    )
