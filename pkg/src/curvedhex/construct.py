"""Deterministic construction and enumeration of curved hexagonal packings.

Everything is built in disk-diameter units (d = 1) with the central disk at
the origin.  Disk order in the returned packings is: central disk, then
layer 1, layer 2, ..., layer k, each layer listed counterclockwise (for
counterclockwise chirality).
"""
from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    Packing,
    fingerprint,
    path_radius,
    variant_count,
)

CCW, CW = "ccw", "cw"
PLACEMENT_TOL = 1e-12
CLOSURE_TOL = 1e-9
MAX_ENUMERATE_K = 8


class ConstructionError(RuntimeError):
    """A layer could not be placed or did not close up."""

    def __init__(self, message: str, layer: int | None = None, index: int | None = None):
        super().__init__(message)
        self.layer = layer
        self.index = index


def _turn_angle(k: int) -> float:
    return math.pi / (3 * k)


@dataclass(frozen=True)
class PathSpec:
    """One curved hexagonal packing, identified by the order of the path turns.

    The path from the central disk to the rim takes k unit steps.  The first
    step points along +x; step t+1 points at angle ``order[t-1]`` times the
    turn angle pi/(3k), measured counterclockwise for ``ccw`` chirality.
    """

    k: int
    order: tuple[int, ...] = ()
    chirality: str = CCW

    def __post_init__(self):
        object.__setattr__(self, "order", tuple(int(i) for i in self.order))
        if self.k < 1:
            raise ValueError(f"k must be >= 1, got {self.k}")
        if sorted(self.order) != list(range(1, self.k)):
            raise ValueError(
                f"order {self.order} is not a permutation of 1..{self.k - 1}")
        if self.chirality not in (CCW, CW):
            raise ValueError(f"chirality must be {CCW!r} or {CW!r}")

    @classmethod
    def basic(cls, k: int) -> "PathSpec":
        return cls(k, tuple(range(1, k)))

    def reflection(self) -> "PathSpec":
        """The order producing the mirror-image pattern."""
        return PathSpec(self.k, tuple(self.k - i for i in self.order), self.chirality)

    def canonical(self) -> "PathSpec":
        return PathSpec(self.k, min(self.order, self.reflection().order), CCW)

    @property
    def exponents(self) -> tuple[int, ...]:
        return (0, *self.order)

    def __str__(self):
        s = f"k={self.k};order={','.join(map(str, self.order))}"
        return s if self.chirality == CCW else s + f";chirality={self.chirality}"


@dataclass(frozen=True)
class FlipSpec:
    """Basic pattern with the sense of rotation reversed on some layers."""

    k: int
    flipped_layers: frozenset[int] = field(default_factory=frozenset)

    def __post_init__(self):
        object.__setattr__(self, "flipped_layers", frozenset(int(x) for x in self.flipped_layers))
        bad = [x for x in self.flipped_layers if not 2 <= x <= self.k - 1]
        if bad:
            raise ValueError(f"only layers 2..{self.k - 1} may be flipped, got {sorted(bad)}")

    def __str__(self):
        return f"k={self.k};flips={','.join(map(str, sorted(self.flipped_layers)))}"


@dataclass(frozen=True)
class AttachmentSpec:
    """Notch choices for the outward-in construction.

    ``first_disk_choices[j]`` is the notch used by layer ``k-2-j``: a value c
    attaches that layer's first disk to disks c and c+1 of the completed
    layer just outside it, so layer i admits choices 0..i.
    """

    k: int
    first_disk_choices: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "first_disk_choices", tuple(int(c) for c in self.first_disk_choices))
        if len(self.first_disk_choices) != max(self.k - 2, 0):
            raise ValueError(f"k={self.k} needs {max(self.k - 2, 0)} choices")
        for layer, c in zip(range(self.k - 2, 0, -1), self.first_disk_choices):
            if not 0 <= c <= layer:
                raise ValueError(f"choice {c} out of range 0..{layer} for layer {layer}")

    @classmethod
    def all(cls, k: int):
        ranges = [range(i + 1) for i in range(k - 2, 0, -1)]
        for choice in itertools.product(*ranges):
            yield cls(k, choice)


def layer_index(k: int) -> np.ndarray:
    """Layer number of every disk in the construction order (0 = center)."""
    return np.concatenate([[0]] + [np.full(6 * i, i) for i in range(1, k + 1)])


def build_path(spec: PathSpec) -> np.ndarray:
    """Centers of the k+1 path disks, from the origin out to the rim."""
    sign = 1.0 if spec.chirality == CCW else -1.0
    angles = sign * np.array(spec.exponents, dtype=float) * _turn_angle(spec.k)
    steps = np.column_stack([np.cos(angles), np.sin(angles)])
    return np.vstack([np.zeros((1, 2)), np.cumsum(steps, axis=0)])


def build_outer_layer(k: int, phase: float = 0.0) -> np.ndarray:
    """The 6k rim disks, equally spaced on the circle of radius path_radius(k)."""
    theta = phase + np.arange(6 * k) * _turn_angle(k)
    return path_radius(k) * np.column_stack([np.cos(theta), np.sin(theta)])


def _tangent_points(a: complex, b: complex) -> list[complex]:
    """Points at unit distance from both a and b (inner one first)."""
    d = b - a
    length = abs(d)
    if length > 2.0 or length == 0.0:
        return []
    h = math.sqrt(max(1.0 - length * length / 4.0, 0.0))
    mid = (a + b) / 2.0
    perp = d * 1j / length * h
    p, q = mid + perp, mid - perp
    return [p, q] if abs(p) <= abs(q) else [q, p]


def _tangent_chain(outer: np.ndarray, count: int, start: np.ndarray, touched: int,
                   direction: int, layer: int) -> np.ndarray:
    """Greedy chain of ``count`` unit disks rolling along ``outer``.

    Each new disk touches its predecessor and one outer disk, scanning outer
    disks in the chain direction from the last one touched; the first
    placement clearing every placed disk by -PLACEMENT_TOL is kept.
    """
    m = len(outer)
    ring = outer[:, 0] + 1j * outer[:, 1]
    placed_all = np.empty(m + count, dtype=complex)
    placed_all[:m] = ring
    chain = placed_all[m:]
    chain[0] = complex(start[0], start[1])
    for idx in range(1, count):
        prev = complex(chain[idx - 1])
        others = placed_all[:m + idx - 1]
        for dq in range(m):
            q = (touched + direction * dq) % m
            hit = None
            rim = complex(ring[q])
            for cand in _tangent_points(prev, rim):
                # must advance around the ring and stay inside the outer layer
                if direction * (prev.real * cand.imag - prev.imag * cand.real) <= 0.0:
                    continue
                if abs(cand) >= abs(rim):
                    continue
                if np.abs(others - cand).min() - 1.0 < -PLACEMENT_TOL:
                    continue
                hit = cand
                break
            if hit is not None:
                chain[idx] = hit
                touched = q
                break
        else:
            raise ConstructionError(
                f"no tangent position for disk {idx} of layer {layer}", layer, idx)
    residual = abs(abs(chain[-1] - chain[0]) - 1.0) if count > 1 else 0.0
    if count > 1 and residual > CLOSURE_TOL:
        raise ConstructionError(
            f"layer {layer} does not close (residual {residual:.3e})", layer, count - 1)
    return np.column_stack([chain.real, chain.imag])


def _rotate_to_start(chain: np.ndarray, direction: int) -> np.ndarray:
    """Re-list a ring counterclockwise starting from its first disk."""
    return chain if direction > 0 else np.vstack([chain[:1], chain[:0:-1]])


def fill_layer_inward(outer: np.ndarray, i: int, first_choice: int = 0,
                      direction: int = 1) -> np.ndarray:
    """Fill layer ``i`` against the completed layer ``outer`` (layer i+1).

    The first disk sits in the notch between ``outer[first_choice]`` and its
    successor; the remaining 6i-1 disks follow the greedy tangent chain.
    ``outer`` must be listed counterclockwise.
    """
    if len(outer) != 6 * (i + 1):
        raise ValueError(f"layer {i + 1} must have {6 * (i + 1)} disks, got {len(outer)}")
    a = outer[first_choice % len(outer)]
    b = outer[(first_choice + 1) % len(outer)]
    cands = _tangent_points(complex(*a), complex(*b))
    if not cands:
        raise ConstructionError(f"notch {first_choice} of layer {i + 1} is open", i, 0)
    start = np.array([cands[0].real, cands[0].imag])
    touched = (first_choice + 1) % len(outer) if direction > 0 else first_choice % len(outer)
    chain = _tangent_chain(outer, 6 * i, start, touched, direction, i)
    return _rotate_to_start(chain, direction)


def _assemble(k: int, rings_outside_in: list[np.ndarray], metadata: dict) -> Packing:
    centers = np.vstack([np.zeros((1, 2))] + rings_outside_in[::-1])
    return Packing(path_radius(k) + 0.5, 0.5, centers, {"k": k, **metadata})


def build_packing_outward_in(spec: AttachmentSpec) -> Packing:
    k = spec.k
    rings = [build_outer_layer(k)]
    notches = (0, *spec.first_disk_choices)
    for i, notch in zip(range(k - 1, 0, -1), notches):
        rings.append(fill_layer_inward(rings[-1], i, notch))
    if k >= 1:
        inner = rings[-1]
        residual = np.max(np.abs(np.hypot(*inner.T) - 1.0))
        if residual > CLOSURE_TOL:
            raise ConstructionError(f"central disk does not fit (residual {residual:.3e})", 0, 0)
    return _assemble(k, rings, {"source": "outward-in",
                                "choices": list(spec.first_disk_choices)})


def build_packing_from_path(spec: PathSpec, direction: int = 1) -> Packing:
    """Complete the path of ``spec`` into a full packing, layer by layer inward."""
    k = spec.k
    path = build_path(PathSpec(k, spec.order, CCW))
    rim = path[k]
    rings = [build_outer_layer(k, math.atan2(rim[1], rim[0]))]
    for i in range(k - 1, 0, -1):
        outer = rings[-1]
        touched = int(np.argmin(np.hypot(*(outer - path[i + 1]).T)))
        chain = _tangent_chain(outer, 6 * i, path[i], touched, direction, i)
        rings.append(_rotate_to_start(chain, direction))
    p = _assemble(k, rings, {"source": "path", "order": list(spec.order),
                             "chirality": spec.chirality})
    if spec.chirality == CW:
        p = p.transformed(reflect=True)
    return p


def flip_to_permutation(f: FlipSpec) -> PathSpec:
    """Turn order of the regular packing obtained by flipping layers.

    Reading the path outward, an unflipped layer takes the smallest remaining
    turn and a flipped layer the largest; the rim layer takes what is left.
    """
    remaining = list(range(1, f.k))
    order = []
    for layer in range(2, f.k + 1):
        pick = remaining.pop(-1 if layer in f.flipped_layers else 0)
        order.append(pick)
    return PathSpec(f.k, tuple(order))


def regular_orders(k: int) -> set[tuple[int, ...]]:
    """Canonical turn orders of all regular packings for k layers."""
    layers = range(2, k)
    out = set()
    for r in range(len(layers) + 1):
        for flips in itertools.combinations(layers, r):
            out.add(flip_to_permutation(FlipSpec(k, frozenset(flips))).canonical().order)
    return out


def enumerate_all(k: int, quantum: float = 1e-8) -> list[tuple[PathSpec, Packing]]:
    """One representative per congruence class, deduplicated by fingerprint.

    Every turn order is built; classes are keyed by fingerprint and labelled
    with the lexicographically smallest member order.  Raises
    ConstructionError if the class count differs from variant_count(k) or a
    class is not exactly an order/reflection pair.
    """
    if not 1 <= k <= MAX_ENUMERATE_K:
        raise ValueError(f"enumerate_all supports 1 <= k <= {MAX_ENUMERATE_K}")
    classes: dict = {}
    for order in itertools.permutations(range(1, k)):
        spec = PathSpec(k, order)
        p = build_packing_from_path(spec)
        key = fingerprint(p, quantum)
        members = classes.setdefault(key, [])
        members.append((spec, p))
    if len(classes) != variant_count(k):
        raise ConstructionError(
            f"k={k}: {len(classes)} congruence classes, expected {variant_count(k)}")
    out = []
    for members in classes.values():
        orders = {m[0].order for m in members}
        spec = min(members, key=lambda m: m[0].order)[0]
        if orders != {spec.order, spec.reflection().order}:
            raise ConstructionError(f"k={k}: class {sorted(orders)} is not a reflection pair")
        rep = dict((m[0].order, m[1]) for m in members)[spec.order]
        out.append((spec, rep))
    out.sort(key=lambda item: item[0].order)
    return out


_SPEC_RE = re.compile(r"^\s*k\s*=\s*(\d+)\s*((?:;\s*\w+\s*=\s*[^;]*)*)$")


def parse_spec(text: str) -> PathSpec | FlipSpec:
    """Parse ``k=<k>[;order=i1,i2,...|;flips=l1,l2,...][;chirality=cw|ccw]``."""
    m = _SPEC_RE.match(text)
    if not m:
        raise ValueError(f"cannot parse packing spec {text!r}")
    k = int(m.group(1))
    fields = {}
    for part in filter(None, (s.strip() for s in m.group(2).split(";"))):
        key, _, value = part.partition("=")
        fields[key.strip()] = value.strip()
    unknown = set(fields) - {"order", "flips", "chirality"}
    if unknown:
        raise ValueError(f"unknown fields {sorted(unknown)} in {text!r}")
    if "order" in fields and "flips" in fields:
        raise ValueError("give either order or flips, not both")

    def ints(s):
        return tuple(int(x) for x in s.split(",") if x.strip())

    try:
        if "flips" in fields:
            return FlipSpec(k, frozenset(ints(fields["flips"])))
        order = ints(fields["order"]) if "order" in fields else tuple(range(1, k))
        if len(set(order)) != len(order) or sorted(order) != list(range(1, k)):
            raise ValueError(f"order {','.join(map(str, order))} is not a permutation of 1..{k - 1}")
        return PathSpec(k, order, fields.get("chirality", CCW))
    except ValueError as exc:
        raise ValueError(str(exc)) from None


def build(spec: PathSpec | FlipSpec) -> Packing:
    if isinstance(spec, FlipSpec):
        p = build_packing_from_path(flip_to_permutation(spec))
        return p.with_metadata(flips=sorted(spec.flipped_layers))
    return build_packing_from_path(spec)
