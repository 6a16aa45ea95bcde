"""Compiled core of the growing-disk event-driven simulation.

State layout (all arrays owned by the caller):

* ``pos``, ``vel``: (n, 2); ``tl``: time at which ``pos`` was last synced.
  Disk i sits at ``pos[i] + vel[i] * (t - tl[i])`` at time t.
* ``stamp``: per-disk epoch, bumped whenever the disk's trajectory changes.
* ``ev_t``, ``ev_p``, ``ev_ps``: the earliest event owned by each disk, its
  partner (``WALL`` or a disk id, ``NONE`` if nothing is predicted) and the
  partner's stamp at prediction time.
* ``tree``: tournament tree over ``ev_t`` (leaf for disk i at ``size + i``);
  simultaneous events are ordered by ``event_key``.
* ``fs``: [now, r0, g, R, window_ratio, min_gap]; radius is r0 + g * t.
* ``ist``: [collisions, events, window_start, since_renorm, renorms, trace_len].

Prediction functions depend only on the stored state of the disks involved,
so any scheduler that picks the same events reproduces the same numbers.
"""
import math

import numpy as np
from numba import njit

WALL = -1
NONE = -2

# fs slots
NOW, R0, GROWTH, CONTAINER, WIN_RATIO, MIN_GAP = range(6)
# ist slots
COLLISIONS, EVENTS, WIN_START, SINCE_RENORM, RENORMS, TRACE_LEN = range(6)

# run_events status codes
STOPPED, CONVERGED, STARVED, NUMERIC = range(4)


@njit(cache=True)
def first_root(A, B, C):
    """Earliest s >= 0 with A s^2 + 2 B s + C = 0, approached from C > 0.

    C <= 0 means the pair already touches (or overlaps by roundoff); it
    collides now unless it is separating (B >= 0).
    """
    if C <= 0.0:
        if B < 0.0:
            return 0.0
        if A >= 0.0:
            return np.inf
        disc = B * B - A * C
        if disc < 0.0:
            return 0.0
        return (-B - math.sqrt(disc)) / A
    disc = B * B - A * C
    if disc < 0.0:
        return np.inf
    if B < 0.0:
        return C / (-B + math.sqrt(disc))
    if A < 0.0:
        return (-B - math.sqrt(disc)) / A
    return np.inf


@njit(cache=True)
def predict_pair(pos, vel, tl, i, j, r0, g):
    t0 = max(tl[i], tl[j])
    dti = t0 - tl[i]
    dtj = t0 - tl[j]
    dx = (pos[i, 0] + vel[i, 0] * dti) - (pos[j, 0] + vel[j, 0] * dtj)
    dy = (pos[i, 1] + vel[i, 1] * dti) - (pos[j, 1] + vel[j, 1] * dtj)
    dvx = vel[i, 0] - vel[j, 0]
    dvy = vel[i, 1] - vel[j, 1]
    sigma = 2.0 * (r0 + g * t0)
    A = dvx * dvx + dvy * dvy - 4.0 * g * g
    B = dx * dvx + dy * dvy - sigma * 2.0 * g
    C = dx * dx + dy * dy - sigma * sigma
    return t0 + first_root(A, B, C)


@njit(cache=True)
def predict_wall(pos, vel, tl, i, r0, g, R):
    t0 = tl[i]
    L = R - (r0 + g * t0)
    px, py = pos[i, 0], pos[i, 1]
    vx, vy = vel[i, 0], vel[i, 1]
    A = g * g - (vx * vx + vy * vy)
    B = -g * L - (px * vx + py * vy)
    C = L * L - (px * px + py * py)
    return t0 + first_root(A, B, C)


@njit(cache=True)
def advance(pos, vel, tl, i, t):
    dt = t - tl[i]
    pos[i, 0] += vel[i, 0] * dt
    pos[i, 1] += vel[i, 1] * dt
    tl[i] = t


@njit(cache=True)
def resolve_pair(pos, vel, i, j, g):
    """Elastic exchange of normal velocities plus g outward for each disk.

    Both disks must be synced to the collision time.
    """
    nx = pos[i, 0] - pos[j, 0]
    ny = pos[i, 1] - pos[j, 1]
    d = math.sqrt(nx * nx + ny * ny)
    nx /= d
    ny /= d
    w = (vel[i, 0] - vel[j, 0]) * nx + (vel[i, 1] - vel[j, 1]) * ny
    if w < 0.0:
        vel[i, 0] -= w * nx
        vel[i, 1] -= w * ny
        vel[j, 0] += w * nx
        vel[j, 1] += w * ny
    vel[i, 0] += g * nx
    vel[i, 1] += g * ny
    vel[j, 0] -= g * nx
    vel[j, 1] -= g * ny


@njit(cache=True)
def resolve_wall(pos, vel, i, g):
    px, py = pos[i, 0], pos[i, 1]
    d = math.sqrt(px * px + py * py)
    if d == 0.0:
        return
    nx, ny = px / d, py / d
    w = vel[i, 0] * nx + vel[i, 1] * ny
    if w > 0.0:
        vel[i, 0] -= 2.0 * w * nx
        vel[i, 1] -= 2.0 * w * ny
    vel[i, 0] -= g * nx
    vel[i, 1] -= g * ny


@njit(cache=True)
def event_key(i, p):
    """Tie-break for simultaneous events: (lower id, higher id), wall as -1."""
    if p >= 0:
        return min(i, p), max(i, p)
    return i, WALL


@njit(cache=True)
def earlier(ta, a, pa, tb, b, pb):
    if ta != tb:
        return ta < tb
    a0, a1 = event_key(a, pa)
    b0, b1 = event_key(b, pb)
    if a0 != b0:
        return a0 < b0
    if a1 != b1:
        return a1 < b1
    return a <= b


@njit(cache=True)
def predict_disk(pos, vel, tl, i, r0, g, R):
    """Earliest event of disk i against the wall and every other disk.

    Simultaneous candidates are ordered by ``event_key``.
    """
    best = predict_wall(pos, vel, tl, i, r0, g, R)
    partner = WALL
    for j in range(pos.shape[0]):
        if j != i:
            t = predict_pair(pos, vel, tl, i, j, r0, g)
            if t < best or (t == best and t < np.inf and earlier(t, i, j, best, i, partner)):
                best = t
                partner = j
    if best == np.inf:
        partner = NONE
    return best, partner


@njit(cache=True)
def _winner(ev_t, ev_p, a, b):
    return a if earlier(ev_t[a], a, ev_p[a], ev_t[b], b, ev_p[b]) else b


@njit(cache=True)
def tree_update(tree, ev_t, ev_p, size, i):
    node = (size + i) // 2
    while node >= 1:
        tree[node] = _winner(ev_t, ev_p, tree[2 * node], tree[2 * node + 1])
        node //= 2


@njit(cache=True)
def tree_build(tree, ev_t, ev_p, size):
    for i in range(size):
        tree[size + i] = i
    for node in range(size - 1, 0, -1):
        tree[node] = _winner(ev_t, ev_p, tree[2 * node], tree[2 * node + 1])


@njit(cache=True)
def schedule(pos, vel, tl, stamp, ev_t, ev_p, ev_ps, i, fs):
    t, p = predict_disk(pos, vel, tl, i, fs[R0], fs[GROWTH], fs[CONTAINER])
    ev_t[i] = t
    ev_p[i] = p
    ev_ps[i] = stamp[p] if p >= 0 else 0


@njit(cache=True)
def schedule_all(pos, vel, tl, stamp, ev_t, ev_p, ev_ps, tree, fs):
    n = pos.shape[0]
    size = tree.shape[0] // 2
    for i in range(n):
        schedule(pos, vel, tl, stamp, ev_t, ev_p, ev_ps, i, fs)
    for i in range(n, size):
        ev_t[i] = np.inf
    tree_build(tree, ev_t, ev_p, size)


@njit(cache=True)
def renormalize(pos, vel, tl, stamp, now):
    """Sync every disk to ``now`` and rescale velocities to mean speed 1."""
    n = pos.shape[0]
    total = 0.0
    for i in range(n):
        advance(pos, vel, tl, i, now)
        total += math.sqrt(vel[i, 0] ** 2 + vel[i, 1] ** 2)
    mean = total / n
    if mean > 0.0:
        for i in range(n):
            vel[i, 0] /= mean
            vel[i, 1] /= mean
    for i in range(n):
        stamp[i] += 1


@njit(cache=True)
def min_gap(pos, vel, tl, t, r0, g, R):
    """Smallest disk-disk or disk-wall gap at time t, in diameters."""
    n = pos.shape[0]
    r = r0 + g * t
    best = np.inf
    for i in range(n):
        xi = pos[i, 0] + vel[i, 0] * (t - tl[i])
        yi = pos[i, 1] + vel[i, 1] * (t - tl[i])
        gw = R - r - math.sqrt(xi * xi + yi * yi)
        if gw < best:
            best = gw
        for j in range(i + 1, n):
            xj = pos[j, 0] + vel[j, 0] * (t - tl[j])
            yj = pos[j, 1] + vel[j, 1] * (t - tl[j])
            gp = math.sqrt((xi - xj) ** 2 + (yi - yj) ** 2) - 2.0 * r
            if gp < best:
                best = gp
    return best / (2.0 * r)


@njit(cache=True)
def commit(pos, vel, tl, stamp, i, p, t, g):
    """Process a collision of disk i with partner p (WALL or a disk) at t."""
    if p == WALL:
        advance(pos, vel, tl, i, t)
        resolve_wall(pos, vel, i, g)
        stamp[i] += 1
    else:
        a, b = (i, p) if i < p else (p, i)
        advance(pos, vel, tl, a, t)
        advance(pos, vel, tl, b, t)
        resolve_pair(pos, vel, a, b, g)
        stamp[a] += 1
        stamp[b] += 1


@njit(cache=True)
def run_events(pos, vel, tl, stamp, ev_t, ev_p, ev_ps, tree, fs, ist,
               stop_at, window, rel_tol, renorm_every, debug, trace):
    """Process events until ``stop_at`` collisions, convergence or failure."""
    size = tree.shape[0] // 2
    g = fs[GROWTH]
    R = fs[CONTAINER]
    while ist[COLLISIONS] < stop_at:
        i = tree[1]
        t = ev_t[i]
        if t == np.inf:
            return STARVED
        if t != t:
            return NUMERIC
        ist[EVENTS] += 1
        p = ev_p[i]
        if p >= 0 and stamp[p] != ev_ps[i]:
            # partner moved since prediction; only the owner needs a new event
            schedule(pos, vel, tl, stamp, ev_t, ev_p, ev_ps, i, fs)
            tree_update(tree, ev_t, ev_p, size, i)
            continue
        if t < fs[NOW]:
            t = fs[NOW]
        fs[NOW] = t
        commit(pos, vel, tl, stamp, i, p, t, g)
        ist[COLLISIONS] += 1
        ist[SINCE_RENORM] += 1
        if trace.shape[0] > 0 and ist[TRACE_LEN] < trace.shape[0]:
            k = ist[TRACE_LEN]
            trace[k, 0] = t
            trace[k, 1] = min(i, p) if p >= 0 else i
            trace[k, 2] = max(i, p) if p >= 0 else WALL
            ist[TRACE_LEN] += 1
        if debug:
            mg = min_gap(pos, vel, tl, t, fs[R0], g, R)
            if mg < fs[MIN_GAP]:
                fs[MIN_GAP] = mg
        if renorm_every > 0 and ist[SINCE_RENORM] >= renorm_every:
            renormalize(pos, vel, tl, stamp, t)
            ist[SINCE_RENORM] = 0
            ist[RENORMS] += 1
            schedule_all(pos, vel, tl, stamp, ev_t, ev_p, ev_ps, tree, fs)
        else:
            schedule(pos, vel, tl, stamp, ev_t, ev_p, ev_ps, i, fs)
            tree_update(tree, ev_t, ev_p, size, i)
            if p >= 0:
                schedule(pos, vel, tl, stamp, ev_t, ev_p, ev_ps, p, fs)
                tree_update(tree, ev_t, ev_p, size, p)
        if ist[COLLISIONS] - ist[WIN_START] >= window:
            ratio = R / (fs[R0] + g * fs[NOW])
            if abs(ratio - fs[WIN_RATIO]) <= rel_tol * ratio:
                return CONVERGED
            fs[WIN_RATIO] = ratio
            ist[WIN_START] = ist[COLLISIONS]
    return STOPPED
