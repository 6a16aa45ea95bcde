"""Naive O(n^2)-per-event engine: re-predicts every disk before each event.

No queue, no stamps and no staleness logic, so it checks the bookkeeping of
the main engine.  It shares the compiled prediction and collision law, which
makes trajectories comparable number for number.
"""
from __future__ import annotations

import math

import numpy as np

from . import _kernel as K
from .sim import SimState


def run_reference(state: SimState, collisions: int, renorm_every: int) -> np.ndarray:
    """Advance ``state`` by ``collisions`` events; returns the (t, a, b) trace
    in the same format as the main engine (b = -1 for the wall)."""
    fs = state.fs
    g, R = fs[K.GROWTH], fs[K.CONTAINER]
    trace = np.zeros((collisions, 3))
    since = 0
    for c in range(collisions):
        best, owner, partner = math.inf, -1, K.NONE
        for i in range(state.n):
            t, p = K.predict_disk(state.pos, state.vel, state.tl, i, fs[K.R0], g, R)
            if owner < 0 or K.earlier(t, i, p, best, owner, partner):
                best, owner, partner = t, i, p
        if best == math.inf:
            raise RuntimeError("no future event")
        t = max(best, fs[K.NOW])
        fs[K.NOW] = t
        K.commit(state.pos, state.vel, state.tl, state.stamp, owner, partner, t, g)
        state.ist[K.COLLISIONS] += 1
        if partner >= 0:
            trace[c] = (t, min(owner, partner), max(owner, partner))
        else:
            trace[c] = (t, owner, K.WALL)
        since += 1
        if renorm_every > 0 and since >= renorm_every:
            K.renormalize(state.pos, state.vel, state.tl, state.stamp, t)
            since = 0
    return trace
