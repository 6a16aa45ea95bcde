"""Closed-form curved-hexagonal quantities, the Packing model, validation,
JSON interchange and congruence fingerprints.

Lengths inside a :class:`Packing` are in arbitrary units; every gap or
tolerance reported by this module is expressed in disk diameters.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable

import numpy as np

PLANE_HEX_DENSITY = math.pi / (2.0 * math.sqrt(3.0))
CURVED_HEX_LIMIT_DENSITY = math.pi ** 2 / 12.0

# variant_count refuses k whose (k-1)!/2 does not fit in a signed 64-bit int
_MAX_VARIANT_K = 21


class InvalidPackingError(ValueError):
    """Raised when a packing violates its geometric invariants."""


def _check_layers(k: int) -> int:
    if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
        raise TypeError(f"k must be an integer, got {k!r}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    return int(k)


def hex_number(k: int) -> int:
    """Number of disks in a k-layer hexagonal arrangement, 3k(k+1)+1."""
    k = _check_layers(k)
    return 3 * k * (k + 1) + 1


def layers_for(n: int) -> int | None:
    """Inverse of :func:`hex_number`; None when n is not hexagonal."""
    if n < 7:
        return None
    k = int(round((-3 + math.sqrt(9 + 12 * (n - 1))) / 6))
    return k if k >= 1 and hex_number(k) == n else None


def variant_count(k: int) -> int:
    """Number of non-congruent curved hexagonal packings, max((k-1)!/2, 1).

    Raises OverflowError for k > 21, where the count leaves int64 range.
    """
    k = _check_layers(k)
    if k > _MAX_VARIANT_K:
        raise OverflowError(f"variant_count({k}) exceeds the 64-bit range")
    return max(math.factorial(k - 1) // 2, 1)


def path_radius(k: int) -> float:
    """Distance from the central disk to an outer-layer center, in diameters."""
    k = _check_layers(k)
    return 1.0 / (2.0 * math.sin(math.pi / (6 * k)))


def curved_hex_ratio(k: int) -> float:
    """Container-to-disk diameter ratio D/d of the curved hexagonal packing."""
    return 1.0 + 2.0 * path_radius(k)


def curved_hex_density(k: int) -> float:
    return hex_number(k) / curved_hex_ratio(k) ** 2


@dataclass(frozen=True, eq=False)
class Packing:
    """Equal disks of radius ``disk_radius`` inside a circle centered at the origin."""

    container_radius: float
    disk_radius: float
    centers: np.ndarray
    metadata: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        centers = np.array(self.centers, dtype=np.float64).reshape(-1, 2)
        centers.setflags(write=False)
        object.__setattr__(self, "centers", centers)
        object.__setattr__(self, "container_radius", float(self.container_radius))
        object.__setattr__(self, "disk_radius", float(self.disk_radius))
        object.__setattr__(self, "metadata", dict(self.metadata))
        if not self.disk_radius > 0:
            raise InvalidPackingError("disk_radius must be positive")
        if not self.container_radius > self.disk_radius:
            raise InvalidPackingError("container_radius must exceed disk_radius")
        if not np.all(np.isfinite(centers)):
            raise InvalidPackingError("centers must be finite")

    @property
    def n(self) -> int:
        return len(self.centers)

    @property
    def ratio(self) -> float:
        return self.container_radius / self.disk_radius

    @property
    def density(self) -> float:
        return self.n * (self.disk_radius / self.container_radius) ** 2

    def in_diameters(self) -> np.ndarray:
        """Centers rescaled so that the disk diameter is 1."""
        return self.centers / (2.0 * self.disk_radius)

    def with_metadata(self, **extra) -> "Packing":
        return Packing(self.container_radius, self.disk_radius, self.centers,
                       {**self.metadata, **extra})

    def transformed(self, angle: float = 0.0, reflect: bool = False) -> "Packing":
        """Reflect about the x-axis (optionally), then rotate about the origin."""
        pts = self.centers.copy()
        if reflect:
            pts[:, 1] = -pts[:, 1]
        c, s = math.cos(angle), math.sin(angle)
        pts = pts @ np.array([[c, s], [-s, c]])
        return Packing(self.container_radius, self.disk_radius, pts, self.metadata)

    # interchange format

    def to_json(self) -> str:
        coords = ",\n    ".join(f"[{x:.17g}, {y:.17g}]" for x, y in self.centers)
        body = f"[\n    {coords}\n  ]" if len(self.centers) else "[]"
        meta = json.dumps(_jsonable(self.metadata), sort_keys=True)
        return (
            "{\n"
            f'  "container_radius": {self.container_radius:.17g},\n'
            f'  "disk_radius": {self.disk_radius:.17g},\n'
            f'  "centers": {body},\n'
            f'  "metadata": {meta}\n'
            "}\n"
        )

    @classmethod
    def from_json(cls, text: str) -> "Packing":
        data = json.loads(text)
        try:
            return cls(data["container_radius"], data["disk_radius"],
                       np.array(data["centers"], dtype=np.float64).reshape(-1, 2),
                       data.get("metadata", {}))
        except KeyError as exc:
            raise InvalidPackingError(f"missing field {exc}") from None

    def save(self, path: str | Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.to_json())
        return path

    @classmethod
    def load(cls, path: str | Path) -> "Packing":
        return cls.from_json(Path(path).read_text())


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    return obj


@dataclass(frozen=True)
class Violation:
    kind: str  # "overlap" or "wall"
    i: int
    j: int | None
    gap: float  # diameters, negative


def pair_gaps(p: Packing) -> np.ndarray:
    """Symmetric matrix of disk-disk gaps in diameters (diagonal = +inf)."""
    x = p.in_diameters()
    d = np.sqrt(((x[:, None, :] - x[None, :, :]) ** 2).sum(-1)) - 1.0
    np.fill_diagonal(d, np.inf)
    return d


def wall_gaps(p: Packing) -> np.ndarray:
    """Gap between each disk and the container wall, in diameters."""
    return (p.container_radius - p.disk_radius - np.hypot(*p.centers.T)) / (2.0 * p.disk_radius)


def validate(p: Packing, tol_overlap: float = 1e-9) -> list[Violation]:
    if tol_overlap < 0:
        raise ValueError("tol_overlap must be non-negative")
    out = []
    if p.n > 1:
        gaps = pair_gaps(p)
        ii, jj = np.nonzero(np.triu(gaps < -tol_overlap, 1))
        out.extend(Violation("overlap", int(i), int(j), float(gaps[i, j]))
                   for i, j in zip(ii, jj))
    wg = wall_gaps(p)
    out.extend(Violation("wall", int(i), None, float(wg[i]))
               for i in np.nonzero(wg < -tol_overlap)[0])
    return out


def measure(p: Packing, tol_overlap: float = 1e-9) -> tuple[float, float]:
    """Return (density, D/d); invalid packings are rejected."""
    bad = validate(p, tol_overlap)
    if bad:
        raise InvalidPackingError(f"{len(bad)} violations, first: {bad[0]}")
    return p.density, p.ratio


# congruence

@dataclass(frozen=True)
class CongruenceFingerprint:
    """Rotation/reflection invariant summary of a packing's center set.

    ``radii`` are the sorted center distances from the origin and ``points``
    the canonically aligned centers, both quantized to integer multiples of
    the quantum (diameter units).  ``edges`` index into ``points``.
    """

    n: int
    ratio: int
    radii: tuple[int, ...]
    degrees: tuple[int, ...]
    points: tuple[tuple[int, int], ...]
    edges: tuple[tuple[int, int], ...]

    @property
    def digest(self) -> str:
        h = hashlib.sha1(repr((self.n, self.ratio, self.points, self.edges)).encode())
        return h.hexdigest()[:12]


def _lex_less(a: np.ndarray, b: np.ndarray) -> bool:
    diff = np.nonzero(a != b)[0]
    return bool(diff.size) and a[diff[0]] < b[diff[0]]


def _canonical_alignment(x: np.ndarray, quantum: float) -> tuple[np.ndarray, np.ndarray]:
    """Quantized centers under the lexicographically smallest anchor alignment.

    Returns the sorted integer coordinates and the permutation that produced
    them.  Anchors are the outermost centers; ties between equivalent anchors
    yield identical coordinate arrays, so the choice among them is immaterial.
    """
    r = np.hypot(*x.T)
    if len(x) == 0 or r.max() <= quantum:
        q = np.rint(x / quantum).astype(np.int64)
        order = np.lexsort((q[:, 1], q[:, 0]))
        return q[order], order
    anchors = np.nonzero(r >= r.max() - 10 * quantum)[0]
    best = best_order = None
    for a in anchors:
        theta = math.atan2(x[a, 1], x[a, 0])
        for sign in (1.0, -1.0):
            y = x.copy()
            y[:, 1] *= sign
            c, s = math.cos(sign * theta), math.sin(sign * theta)
            y = y @ np.array([[c, -s], [s, c]])
            q = np.rint(y / quantum).astype(np.int64)
            order = np.lexsort((q[:, 1], q[:, 0]))
            q = q[order]
            if best is None or _lex_less(q.ravel(), best.ravel()):
                best, best_order = q, order
    return best, best_order


def fingerprint(p: Packing, quantum: float = 1e-8, bond_tol: float | None = None) -> CongruenceFingerprint:
    """Congruence fingerprint in diameter units.

    Bonds (for ``degrees``/``edges``) are gaps below ``bond_tol``, which
    defaults to the quantum.
    """
    bond_tol = quantum if bond_tol is None else bond_tol
    x = p.in_diameters()
    pts, order = _canonical_alignment(x, quantum)
    radii = np.sort(np.rint(np.hypot(*x.T) / quantum).astype(np.int64))
    edges: list[tuple[int, int]] = []
    deg = np.zeros(p.n, dtype=int)
    if p.n > 1:
        gaps = pair_gaps(p)[np.ix_(order, order)]
        ii, jj = np.nonzero(np.triu(gaps < bond_tol, 1))
        edges = sorted(zip(ii.tolist(), jj.tolist()))
        np.add.at(deg, ii, 1)
        np.add.at(deg, jj, 1)
    deg += (wall_gaps(p)[order] < bond_tol).astype(int)
    return CongruenceFingerprint(
        n=p.n,
        ratio=int(round(p.ratio / quantum)),
        radii=tuple(radii.tolist()),
        degrees=tuple(sorted(deg.tolist())),
        points=tuple(map(tuple, pts.tolist())),
        edges=tuple(edges),
    )


def congruent(a: Packing, b: Packing, tol: float = 1e-8) -> bool:
    """Explicit check that ``b`` is a rotation and/or reflection of ``a``.

    Works in diameter units: compares D/d and sorted radial distances first,
    then tries to map one outermost center of ``a`` onto every candidate
    center of ``b`` at the same radius.
    """
    if a.n != b.n or abs(a.ratio - b.ratio) > tol * max(1.0, a.ratio):
        return False
    if a.n == 0:
        return True
    xa, xb = a.in_diameters(), b.in_diameters()
    ra, rb = np.hypot(*xa.T), np.hypot(*xb.T)
    if np.max(np.abs(np.sort(ra) - np.sort(rb))) > tol:
        return False
    anchor = int(np.argmax(ra))
    if ra[anchor] <= tol:
        return True
    za = xa[:, 0] + 1j * xa[:, 1]
    zb = xb[:, 0] + 1j * xb[:, 1]
    for cand in np.nonzero(np.abs(rb - ra[anchor]) <= tol)[0]:
        for src in (za, np.conj(za)):
            rot = zb[cand] / src[anchor]
            moved = src * (rot / abs(rot))
            dist = np.abs(moved[:, None] - zb[None, :])
            if np.all(dist.min(axis=1) <= tol) and np.all(dist.min(axis=0) <= tol):
                return True
    return False


def group_congruent(packings: Iterable[Packing], tol: float = 1e-8) -> list[int]:
    """Label each packing with the index of its congruence class (first-seen order)."""
    reps: list[Packing] = []
    labels = []
    for p in packings:
        for idx, rep in enumerate(reps):
            if congruent(rep, p, tol):
                labels.append(idx)
                break
        else:
            reps.append(p)
            labels.append(len(reps) - 1)
    return labels
