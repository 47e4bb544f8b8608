import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from cauchyborn.geometry import (AdmissiblePartition, CellGrid, GeometryError, Region, causal_relation, grow,
                                 lower_surface, project_partition, region_from_json, shrink)
from cauchyborn.geometry.catalog import flat, sine

TWO_PI = 2 * math.pi
X = np.linspace(0, TWO_PI, 20000, endpoint=False)


def periodic_dist_to_interval(x, a, b):
    """Distance on the circle of length 2*pi from x to [a, b]."""
    d = np.zeros_like(x)
    for shift in (-TWO_PI, 0.0, TWO_PI):
        y = x + shift
        dd = np.where(y < a, a - y, np.where(y > b, y - b, 0.0))
        d = dd if shift == -TWO_PI else np.minimum(d, dd)
    return d


def cone_oracle_grow(a, b, target, source_height=0.0):
    """x' is in Gr([a,b]) iff its distance to [a,b] is at most the time gap."""
    return periodic_dist_to_interval(X, a, b) <= np.abs(target.evaluate(X) - source_height)


def members(region):
    return region.contains(X[:, None])


def test_grow_interval_example():
    g = grow(Region.interval(0, 1, flat()), flat(height=0.5))
    inside = members(g)
    want = periodic_dist_to_interval(X, 0, 1) <= 0.5
    assert np.all(inside[want])                       # never under-covers
    assert not np.any(inside & (periodic_dist_to_interval(X, 0, 1) > 0.5 + 0.01))


def test_grow_same_surface_is_identity():
    s = sine()
    a = Region.interval(1, 2, s)
    assert grow(a, s).boxes == a.boxes
    assert shrink(a, s).boxes == a.boxes


def test_shrink_examples():
    t = flat(height=0.5)
    s2 = members(shrink(Region.interval(0, 2, flat()), t))
    assert not np.any(s2 & ((X < 0.5) | (X > 1.5)))    # never over-covers
    assert np.all(s2[(X > 0.51) & (X < 1.49)])
    s1 = shrink(Region.interval(0, 1, flat()), t)
    assert s1.volume() < 0.01
    whole = shrink(Region.whole(flat()), sine())
    assert np.all(members(whole))


def test_grow_sine_target_matches_cone_crossings():
    target = sine()
    inside = members(grow(Region.interval(0, 1, flat()), target))
    oracle = cone_oracle_grow(0, 1, target)
    assert np.all(inside[oracle])
    loose = periodic_dist_to_interval(X, 0, 1) > np.abs(target.evaluate(X)) + 0.01
    assert not np.any(inside & loose)


def test_shrink_sine_target_inner():
    target = sine()
    inside = members(shrink(Region.interval(1, 3, flat()), target))
    # x' is in Sr iff its cone footprint [x'-|f|, x'+|f|] lies in [1, 3]
    rad = np.abs(target.evaluate(X))
    exact = (X - rad >= 1) & (X + rad <= 3)
    assert not np.any(inside & ~exact)
    strict = (X - rad >= 1.01) & (X + rad <= 2.99)
    assert np.all(inside[strict])


@settings(max_examples=20, deadline=None)
@given(st.floats(0, 5), st.floats(0.3, 1.5), st.floats(0.05, 0.8))
def test_footprint_inclusions(a, width, lift):
    src = lower_surface(sine(), lift)
    region = Region.interval(a, a + width, src)
    g, s = members(grow(region, sine())), members(shrink(region, sine()))
    base = members(region)
    assert np.all(~s | base)
    assert np.all(~base | g)


@settings(max_examples=10, deadline=None)
@given(st.floats(0, 5), st.floats(0.5, 1.5), st.floats(0.05, 0.5))
def test_shrink_of_grow_contains_a(a, width, lift):
    sigma = sine()
    other = lower_surface(sigma, lift)
    region = Region.interval(a, a + width, sigma)
    back = members(shrink(grow(region, other), sigma))
    interior = periodic_dist_to_interval(X, a + 0.02, a + width - 0.02) == 0
    assert np.all(back[interior])
    assert np.all(members(grow(grow(region, other), sigma))[members(region)])


def test_monotone_as_surfaces_rise():
    sigma = sine()
    prev_g, prev_s = None, None
    for lift in (0.6, 0.3, 0.1, 0.03):
        ups = lower_surface(sigma, lift)
        b = Region.interval(1, 2.5, ups)
        g, s = members(grow(b, sigma)), members(shrink(b, sigma))
        if prev_g is not None:
            assert np.all(~g | prev_g)
            assert np.all(~prev_s | s)
        prev_g, prev_s = g, s
    # with slopes at most 0.3 a cone of time gap 0.03 spans at most 0.03 / 0.7
    edge = prev_g & ~prev_s
    assert np.all(np.minimum(np.abs(X[edge] - 1), np.abs(X[edge] - 2.5)) < 0.03 / 0.7 + 0.01)


def test_relation_transpose_symmetry():
    grid = CellGrid.for_surface(sine(), 256)
    a, b = sine(), lower_surface(sine(), 0.4)
    assert np.array_equal(causal_relation(a, b, grid), causal_relation(b, a, grid).T)
    c = flat(height=0.1)
    assert np.array_equal(causal_relation(a, c, grid), causal_relation(c, a, grid).T)


def test_grow_2d_disk_like():
    src, tgt = flat(dim=2, samples=32), flat(dim=2, height=0.5, samples=32)
    a = Region(((((2.0, 2.0), (2.5, 2.5))),), src)
    g = grow(a, tgt, CellGrid.for_surface(tgt, 64))
    pts = np.array([[2.25, 1.45], [2.25, 3.05], [1.9, 1.9], [2.25, 2.25]])
    assert np.all(g.contains(pts))
    assert not g.contains(np.array([[1.4, 1.4]]))


def test_project_partition_examples():
    sigma = sine()
    p = AdmissiblePartition([Region.interval(0, 1, sigma), Region.interval(2, 3, sigma),
                             Region.interval(4, 4.5, sigma)])
    ups = lower_surface(sigma, 0.3)
    b = project_partition(p, ups)
    assert len(b) == 3
    assert [r.boxes for r in b.regions] == [r.boxes for r in p.regions]
    assert all(r.surface is ups for r in b.regions)
    with pytest.raises(GeometryError):
        AdmissiblePartition([Region.interval(0, 1, sigma), Region.interval(0.5, 2, sigma)])
    with pytest.raises(GeometryError):
        AdmissiblePartition([Region.interval(6, 6.5, sigma), Region.interval(0, 0.5, sigma),
                             Region.interval(6.2, 6.25, sigma)])


def test_periodic_wrap_overlap():
    sigma = sine()
    with pytest.raises(GeometryError):
        AdmissiblePartition([Region.interval(6.0, 6.6, sigma), Region.interval(0.0, 0.2, sigma)])


def test_region_json_and_validation():
    r = Region.interval(0.5, 1.25)
    assert region_from_json(r.to_json()).boxes == r.boxes
    with pytest.raises(GeometryError):
        Region.interval(2, 1)
    with pytest.raises(GeometryError):
        grow(Region.interval(0, 1), sine())
    with pytest.raises(GeometryError):
        grow(Region.interval(0, 1, sine()), flat(hi=3.0))
