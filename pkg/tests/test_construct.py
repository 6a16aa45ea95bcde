import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from curvedhex.analysis import CONSTRUCTED_THRESHOLD, classify_regular, contact_graph
from curvedhex.construct import (
    CCW,
    CW,
    AttachmentSpec,
    ConstructionError,
    FlipSpec,
    PathSpec,
    build,
    build_outer_layer,
    build_packing_from_path,
    build_packing_outward_in,
    build_path,
    enumerate_all,
    fill_layer_inward,
    flip_to_permutation,
    layer_index,
    parse_spec,
    regular_orders,
)
from curvedhex.geometry import (
    congruent,
    curved_hex_ratio,
    fingerprint,
    path_radius,
    validate,
    variant_count,
)


def lattice_packing(k, order):
    """Independent closed form: layer-i disk m of the first sector sits at
    sum_t z^(e_t + k [rank of e_t among e_1..e_i < m]), z = exp(i pi/(3k))."""
    e = (0, *order)
    z = np.exp(1j * math.pi / (3 * k))
    pts = [0j]
    for i in range(1, k + 1):
        ex = np.array(e[:i])
        ranks = np.argsort(np.argsort(ex))
        for m in range(i):
            c = sum(z ** (ex[t] + k * (ranks[t] < m)) for t in range(i))
            pts.extend(c * z ** (k * s) for s in range(6))
    return np.array(pts)


def same_point_set(a, b, tol=1e-9):
    d = np.abs(a[:, None] - b[None, :])
    return bool(np.all(d.min(axis=1) < tol) and np.all(d.min(axis=0) < tol))


def as_complex(p):
    x = p.in_diameters()
    return x[:, 0] + 1j * x[:, 1]


def test_path_k1():
    assert np.allclose(build_path(PathSpec(1)), [[0, 0], [1, 0]], atol=0)


@pytest.mark.parametrize("order", list(itertools.permutations((1, 2, 3))))
def test_path_rim_distance_independent_of_order(order):
    c = build_path(PathSpec(4, order))
    assert abs(np.hypot(*c[-1]) - 1 / (2 * math.sin(math.pi / 24))) < 1e-12


def test_path_chirality_mirrors():
    a = build_path(PathSpec(5, (2, 4, 1, 3), CCW))
    b = build_path(PathSpec(5, (2, 4, 1, 3), CW))
    assert np.allclose(a[:, 0], b[:, 0]) and np.allclose(a[:, 1], -b[:, 1])


@pytest.mark.parametrize("k", [1, 2, 5, 9])
def test_outer_layer(k):
    ring = build_outer_layer(k)
    assert len(ring) == 6 * k
    assert np.allclose(np.hypot(*ring.T), path_radius(k), atol=1e-12)
    side = np.hypot(*(ring - np.roll(ring, -1, axis=0)).T)
    assert np.all(np.abs(side - 1.0) < 1e-12)


def test_pathspec_validation():
    with pytest.raises(ValueError):
        PathSpec(4, (1, 1, 3))
    with pytest.raises(ValueError):
        PathSpec(0)
    with pytest.raises(ValueError):
        PathSpec(3, (1, 2), "sideways")


def test_reflection_partner():
    assert PathSpec(5, (1, 3, 2, 4)).reflection().order == (4, 2, 3, 1)
    assert PathSpec(4, (2, 3, 1)).canonical().order == (2, 1, 3)


def test_flipspec_rejects_outer_layers():
    with pytest.raises(ValueError):
        FlipSpec(5, frozenset({1}))
    with pytest.raises(ValueError):
        FlipSpec(5, frozenset({5}))


def test_attachment_spec_ranges():
    assert len(list(AttachmentSpec.all(5))) == 4 * 3 * 2
    with pytest.raises(ValueError):
        AttachmentSpec(5, (4, 0, 0))
    with pytest.raises(ValueError):
        AttachmentSpec(5, (0, 0))


@pytest.mark.parametrize("k", range(1, 6))
def test_every_order_matches_lattice_model(k):
    for order in itertools.permutations(range(1, k)):
        p = build_packing_from_path(PathSpec(k, order))
        assert same_point_set(as_complex(p), lattice_packing(k, order))


@pytest.mark.parametrize("k", range(1, 7))
def test_constructions_are_valid_and_tight(k):
    for order in itertools.permutations(range(1, k)):
        p = build_packing_from_path(PathSpec(k, order))
        assert p.n == 3 * k * (k + 1) + 1
        assert validate(p, 1e-9) == []
        assert abs(p.ratio - curved_hex_ratio(k)) < 1e-9


def test_direction_of_chain_is_irrelevant():
    for order in itertools.permutations(range(1, 5)):
        a = build_packing_from_path(PathSpec(5, order), direction=1)
        b = build_packing_from_path(PathSpec(5, order), direction=-1)
        assert same_point_set(as_complex(a), as_complex(b))


@pytest.mark.parametrize("k", [2, 3, 4])
def test_sixfold_symmetry(k):
    for order in itertools.permutations(range(1, k)):
        z = as_complex(build_packing_from_path(PathSpec(k, order)))
        assert same_point_set(z, z * np.exp(1j * math.pi / 3))


def test_reflection_order_gives_mirror_image():
    a = build(PathSpec(5, (1, 3, 2, 4)))
    b = build(PathSpec(5, (4, 2, 3, 1)))
    assert congruent(a, b, 1e-9)
    za, zb = as_complex(a), as_complex(b)
    rim = layer_index(5) == 5
    mirrored = np.conj(za)
    # the mirror image of a is a pure rotation of b
    assert any(same_point_set(mirrored * np.exp(1j * (np.angle(w) - np.angle(mirrored[rim][0]))), zb)
               for w in zb[rim])


def test_known_reflection_pairs_k4():
    assert congruent(build(PathSpec(4, (1, 3, 2))), build(PathSpec(4, (3, 1, 2))), 1e-9)
    assert congruent(build(PathSpec(4, (2, 3, 1))), build(PathSpec(4, (2, 1, 3))), 1e-9)


@pytest.mark.parametrize("k", range(1, 7))
def test_enumeration_counts(k):
    classes = enumerate_all(k)
    assert len(classes) == variant_count(k)
    assert len({fingerprint(p) for _, p in classes}) == variant_count(k)


@pytest.mark.parametrize("k", range(1, 6))
def test_outward_in_matches_permutation_method(k):
    perm = {fingerprint(p) for _, p in enumerate_all(k)}
    outward = set()
    for spec in AttachmentSpec.all(k):
        p = build_packing_outward_in(spec)
        assert validate(p, 1e-9) == []
        outward.add(fingerprint(p))
    assert outward == perm


def test_fill_layer_inward_closes():
    ring = build_outer_layer(4)
    for choice in range(4):
        inner = fill_layer_inward(ring, 3, choice)
        assert len(inner) == 18
        side = np.hypot(*(inner - np.roll(inner, -1, axis=0)).T)
        assert np.all(np.abs(side - 1.0) < 1e-9)


def test_fill_layer_inward_rejects_wrong_size():
    with pytest.raises(ValueError):
        fill_layer_inward(build_outer_layer(4), 2)


def test_fill_layer_inward_reports_open_notch():
    ring = build_outer_layer(4) * 2.0  # neighbours 2 diameters apart
    with pytest.raises(ConstructionError):
        fill_layer_inward(ring, 3)


@pytest.mark.parametrize("k", range(1, 7))
def test_flip_family_is_regular_family(k):
    regular = {spec.order for spec, p in enumerate_all(k)
               if classify_regular(p, contact_graph(p, CONSTRUCTED_THRESHOLD))[0]}
    assert regular == regular_orders(k)
    assert len(regular) == (1 if k < 3 else 2 ** (k - 3))


def ring_rotated(k, layer, sign=-1):
    """Basic packing with rings layer..k rotated by sign * turn angle."""
    z = as_complex(build(PathSpec.basic(k)))
    lay = layer_index(k)
    z = z.copy()
    z[lay >= layer] *= np.exp(1j * sign * math.pi / (3 * k))
    return z


@pytest.mark.parametrize("k,layer", [(3, 2), (4, 2), (4, 3), (5, 3), (6, 4)])
def test_single_flip_equals_ring_rotation(k, layer):
    # reversing the twist of one layer rotates everything outside it back by one turn
    flipped = as_complex(build(FlipSpec(k, frozenset({layer}))))
    rotated = ring_rotated(k, layer)
    ok = False
    for ang in np.angle(flipped[layer_index(k) == k]):
        for z in (rotated, np.conj(rotated)):
            base = z[layer_index(k) == k][0]
            if same_point_set(z * np.exp(1j * (ang - np.angle(base))), flipped):
                ok = True
                break
        if ok:
            break
    assert ok


def test_flip_to_permutation_examples():
    assert flip_to_permutation(FlipSpec(4)).order == (1, 2, 3)
    assert flip_to_permutation(FlipSpec(4, frozenset({2}))).order == (3, 1, 2)
    assert flip_to_permutation(FlipSpec(5, frozenset({2, 3}))).order == (4, 3, 1, 2)


def test_parse_spec():
    assert parse_spec("k=5;order=1,2,3,4") == PathSpec(5, (1, 2, 3, 4))
    assert parse_spec("k=2") == PathSpec(2, (1,))
    assert parse_spec("k=6;flips=2,4") == FlipSpec(6, frozenset({2, 4}))
    assert parse_spec("k=3;order=2,1;chirality=cw") == PathSpec(3, (2, 1), CW)
    for bad in ["k=4;order=1,1,3", "k=4;order=1,2", "x=4", "k=4;order=1,2,3;flips=2", "k=4;foo=1"]:
        with pytest.raises(ValueError):
            parse_spec(bad)


def test_k13_flip_figure_builds():
    p = build(FlipSpec(13, frozenset({6, 7, 8, 9})))
    assert p.n == 547
    assert validate(p, 1e-9) == []
    assert abs(p.ratio - curved_hex_ratio(13)) < 1e-9


@settings(max_examples=15, deadline=None)
@given(st.permutations(range(1, 6)))
def test_random_k6_orders_match_lattice(order):
    p = build_packing_from_path(PathSpec(6, tuple(order)))
    assert same_point_set(as_complex(p), lattice_packing(6, tuple(order)))
