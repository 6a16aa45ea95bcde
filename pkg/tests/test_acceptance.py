"""Acceptance gates.  Each test prints one PASS/FAIL line with its measurement.

Run alone with ``pytest tests/test_acceptance.py -v``; the simulator batches
take about 1.5 hours on one core (criterion 6 dominates).
"""
import math
import time

import numpy as np
import pytest

from curvedhex.analysis import CONSTRUCTED_THRESHOLD, contact_graph, find_rattlers, rigidity_test
from curvedhex.billiards.batch import batch
from curvedhex.billiards.reference import run_reference
from curvedhex.billiards.sim import SimConfig, SimState, run
from curvedhex.construct import AttachmentSpec, PathSpec, build, build_packing_outward_in, enumerate_all
from curvedhex.geometry import (
    CURVED_HEX_LIMIT_DENSITY,
    Packing,
    congruent,
    curved_hex_density,
    curved_hex_ratio,
    fingerprint,
    validate,
)
from curvedhex.analysis import classify_regular

TABLE1 = {6: ("0.81622935362082", "12.473713245670"),
          7: ("0.81710701192903", "14.381489999655"),
          8: ("0.81776562948873", "16.289788298679")}


@pytest.fixture
def report(capsys):
    def emit(label, ok, detail):
        with capsys.disabled():
            print(f"\n{'PASS' if ok else 'FAIL'}  {label}: {detail}")
    return emit


def test_criterion_1_formula_fidelity(report):
    t = time.perf_counter()
    values = {k: (curved_hex_density(k), curved_hex_ratio(k)) for k in TABLE1}
    elapsed = time.perf_counter() - t
    worst = max(abs(v - float(s)) / float(s)
                for k, pair in TABLE1.items() for v, s in zip(values[k], pair))
    ok = worst <= 1e-12 and elapsed < 1e-3
    report("1 formula fidelity", ok, f"worst relative error {worst:.2e}, {elapsed * 1e3:.3f} ms")
    assert ok


def test_criterion_2_below_limit(report):
    t = time.perf_counter()
    k = np.arange(1, 10**4 + 1, dtype=float)
    h = 3 * k * (k + 1) + 1
    dens = h / (1 + 1 / np.sin(np.pi / (6 * k))) ** 2
    below = bool(np.all(dens < CURVED_HEX_LIMIT_DENSITY))
    spot = all(curved_hex_density(int(j)) < CURVED_HEX_LIMIT_DENSITY for j in (1, 10, 100, 9999, 10**4))
    elapsed = time.perf_counter() - t
    ok = below and spot and elapsed < 1.0
    report("2a density below pi^2/12 for k <= 1e4", ok, f"{elapsed:.3f} s")
    assert ok


@pytest.mark.xfail(strict=True, reason="the true gap at k=1e4 is 3.88e-6; the 1e-7 bound cannot hold")
def test_criterion_2_gap_at_1e4(report):
    gap = abs(curved_hex_density(10**4) - math.pi**2 / 12)
    ok = gap < 1e-7
    report("2b |density(1e4) - pi^2/12| < 1e-7", ok, f"gap {gap:.4e}")
    assert ok


def test_criterion_3_enumeration_counts(report):
    t = time.perf_counter()
    counts, regular, agree = [], [], []
    for k in range(1, 6):
        classes = enumerate_all(k)
        counts.append(len(classes))
        regular.append(sum(classify_regular(p, contact_graph(p, CONSTRUCTED_THRESHOLD))[0]
                           for _, p in classes))
        perm = {fingerprint(p) for _, p in classes}
        outward = {fingerprint(build_packing_outward_in(s)) for s in AttachmentSpec.all(k)}
        agree.append(perm == outward)
    elapsed = time.perf_counter() - t
    ok = counts == [1, 1, 1, 3, 12] and regular == [1, 1, 1, 2, 4] and all(agree) and elapsed < 60
    report("3 enumeration counts", ok,
           f"classes {counts}, regular {regular}, methods agree {all(agree)}, {elapsed:.1f} s")
    assert ok


def _sixfold(p: Packing, tol=1e-9) -> bool:
    z = p.in_diameters() @ np.array([1, 1j])
    w = z * np.exp(1j * math.pi / 3)
    return bool(np.all(np.abs(w[:, None] - z[None, :]).min(axis=1) < tol))


def test_criterion_4_construction_validity(report):
    t = time.perf_counter()
    bad = []
    total = 0
    for k in range(1, 9):
        for spec, p in enumerate_all(k):
            total += 1
            g = contact_graph(p, CONSTRUCTED_THRESHOLD)
            if (validate(p, 1e-9) or abs(p.ratio - curved_hex_ratio(k)) > 1e-9 or not _sixfold(p)
                    or rigidity_test(p, g) != (True, 0) or find_rattlers(g)):
                bad.append(str(spec))
    elapsed = time.perf_counter() - t
    ok = not bad and elapsed < 300
    report("4 construction validity k <= 8", ok,
           f"{total} packings, {len(bad)} failing, {elapsed:.0f} s")
    assert ok


def test_criterion_5_simulator_ground_truth(report):
    slowest = 0.0
    hits7 = 0
    for seed in range(10):
        p, s = run(SimConfig(7, seed=seed))
        slowest = max(slowest, s.wall_clock)
        hits7 += abs(p.ratio - 3.0) <= 1e-9
    target = 1 + 1 / math.sin(math.pi / 12)
    fp = fingerprint(build(PathSpec(2, (1,))))
    hits19 = 0
    for seed in range(20):
        p, s = run(SimConfig(19, seed=seed))
        slowest = max(slowest, s.wall_clock)
        hits19 += abs(p.ratio - target) <= 1e-9 and fingerprint(p) == fp
    ok = hits7 >= 8 and hits19 >= 5 and slowest < 60
    report("5 simulator ground truth", ok,
           f"n=7 {hits7}/10 at D/d=3, n=19 {hits19}/20 curved-hex, slowest run {slowest:.1f} s")
    assert ok


@pytest.mark.slow
def test_criterion_6_transition_at_k6(report):
    budget = 3 * 3600
    t = time.perf_counter()
    res = batch(SimConfig(127), 20)
    elapsed = time.perf_counter() - t
    threshold = float(TABLE1[6][0])
    better = [r for r in res.succeeded if r.packing.density > threshold]
    best = res.best()
    ok = bool(better) and elapsed < budget
    report("6 transition at k=6", ok,
           f"{len(better)}/20 runs denser than curved-hex, best density "
           f"{best.packing.density:.14f} D/d {best.packing.ratio:.14g}, "
           f"{len(res.failures)} failed, {elapsed / 60:.0f} min (budget {budget // 3600} h)")
    assert ok


@pytest.mark.slow
def test_criterion_7_tightness_k2(report):
    best = {}
    for n in (18, 19):
        res = batch(SimConfig(n), 30)
        best[n] = res.best().packing.ratio
    diff = abs(best[18] - best[19])
    ok = diff <= 1e-6
    report("7 tightness k=2", ok,
           f"best D/d n=18 {best[18]:.14g}, n=19 {best[19]:.14g}, difference {diff:.2e}")
    assert ok


def test_criterion_8_property_suites(report):
    # no overlap at any committed event
    worst = math.inf
    for n, seed in ((5, 0), (12, 1), (19, 2)):
        _, s = run(SimConfig(n, seed=seed, debug=True, max_collisions=100_000, growth_stages=1))
        worst = min(worst, s.min_gap)
    no_overlap = worst >= -1e-12

    # energy conservation without growth
    st = SimState.from_config(SimConfig(10, seed=3))
    st.set_growth(0.0)
    e0 = np.sum(st.vel**2)
    drift = 0.0
    for _ in range(200):
        st.advance(st.collision_count + 50, 10**9, 1e-15, 0)
        drift = max(drift, abs(np.sum(st.vel**2) - e0) / e0)
    energy = drift <= 1e-12

    # queued engine against the naive reference
    cfg = SimConfig(5, seed=7)
    a, b = SimState.from_config(cfg), SimState.from_config(cfg)
    trace = np.zeros((100_000, 3))
    a.advance(100_000, 10**9, 1e-15, cfg.renorm_every, False, trace)
    ref = run_reference(b, 100_000, cfg.renorm_every)
    engine_dev = float(np.max(np.abs(a.positions() - b.positions())))
    engines = np.array_equal(trace[:, 1:], ref[:, 1:]) and engine_dev <= 1e-9

    # fingerprint invariance under random rigid motions
    rng = np.random.default_rng(0)
    p = build(PathSpec(5, (2, 4, 1, 3)))
    fp = fingerprint(p)
    invariant = all(fingerprint(p.transformed(rng.uniform(0, 2 * math.pi), bool(rng.integers(2)))) == fp
                    and congruent(p, p.transformed(rng.uniform(0, 7), True), 1e-9)
                    for _ in range(50))

    # interchange round trip
    q = Packing.from_json(p.to_json())
    round_trip = (np.array_equal(q.centers, p.centers) and q.disk_radius == p.disk_radius
                  and q.container_radius == p.container_radius and q.metadata == p.metadata)

    ok = no_overlap and energy and engines and invariant and round_trip
    report("8 property suites", ok,
           f"min gap {worst:.1e}, energy drift {drift:.1e}, engine deviation {engine_dev:.1e}, "
           f"fingerprint invariant {invariant}, round trip {round_trip}")
    assert ok
