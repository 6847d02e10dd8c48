import math

import numpy as np
import pytest

from vpmoti.bxtree import BxTree, GridConfig, LocatorError, VelocityHistogram, bucket_for, enlarge_query, new_pool
from vpmoti.core import Circle, Domain, MovingPoint, RangeQuery, Rect, Vec2, contains, position_at
from vpmoti.oracle import oracle_range

EXTENT = Domain().extent


def random_objects(rng, n, t_ref=0.0, vmax=100.0):
    pos = rng.uniform(0, 100_000, (n, 2))
    ang = rng.uniform(0, 2 * math.pi, n)
    spd = rng.uniform(0, vmax, n)
    return [
        MovingPoint(i, Vec2(*pos[i]), Vec2(spd[i] * math.cos(ang[i]), spd[i] * math.sin(ang[i])), t_ref)
        for i in range(n)
    ]


def random_query(rng, now, kind="slice", shape="circle"):
    c = Vec2(*rng.uniform(0, 100_000, 2))
    region = Circle(c, rng.uniform(100, 2000)) if shape == "circle" else Rect(c - Vec2(700, 400), c + Vec2(700, 400))
    t1 = now + rng.uniform(0, 120)
    if kind == "slice":
        return RangeQuery.slice(region, t1)
    t2 = t1 + rng.uniform(1, 20)
    if kind == "interval":
        return RangeQuery.interval(region, t1, t2)
    return RangeQuery.moving(region, t1, t2, Vec2(*rng.uniform(-80, 80, 2)))


@pytest.fixture(scope="module")
def loaded():
    """10K objects spread over both active buckets."""
    rng = np.random.default_rng(99)
    tree = BxTree(EXTENT)
    objs = {}
    for o in random_objects(rng, 10_000):
        tree.insert(o, 0.0)
        objs[o.id] = o
    # move a third of the objects to the next bucket
    for oid in range(0, 10_000, 3):
        t = float(rng.uniform(60, 100))
        p = position_at(objs[oid], t)
        p = Vec2(min(max(p.x, 0), 1e5), min(max(p.y, 0), 1e5))
        o = MovingPoint(oid, p, objs[oid].vel, t)
        tree.update(o, t)
        objs[oid] = o
    return tree, objs


def test_bucket_examples():
    b = bucket_for(0.0, 120)
    assert (b.bucket_id, b.label_time) == (0, 60)
    b = bucket_for(60.0, 120)
    assert (b.bucket_id, b.label_time) == (1, 120)


def test_label_gap_property(rng):
    for t in rng.uniform(0, 10_000, 2000):
        gap = bucket_for(float(t), 120).label_time - t
        assert 0 < gap <= 60


def test_two_buckets_active(loaded):
    tree, _ = loaded
    assert len(tree.buckets()) == 2


def test_insert_lookup_delete(rng):
    tree = BxTree(EXTENT)
    objs = random_objects(rng, 1000)
    for o in objs:
        tree.insert(o, 5.0)
    for o in objs:
        assert tree.lookup(o.id) == o
    with pytest.raises(LocatorError):
        tree.insert(objs[0], 5.0)
    for o in objs:
        assert tree.delete(o.id) == o
    assert len(tree) == 0 and tree.buckets() == []
    with pytest.raises(LocatorError):
        tree.delete(0)
    tree.check()


def test_insert_then_delete_restores_occupancy(rng):
    tree = BxTree(EXTENT)
    for o in random_objects(rng, 300):
        tree.insert(o, 0.0)
    before = [len(tree.tree.pool.peek(p).keys) for p in tree.tree.leaf_pages()]
    extra = MovingPoint(10_000, Vec2(500, 500), Vec2(1, 1), 0.0)
    tree.insert(extra, 0.0)
    tree.delete(extra.id)
    after = [len(tree.tree.pool.peek(p).keys) for p in tree.tree.leaf_pages()]
    assert before == after


def test_histogram_matches_brute_force(rng):
    tree = BxTree(EXTENT, grid=GridConfig(hist_cells=16))
    objs = random_objects(rng, 2000, t_ref=3.0)
    for o in objs:
        tree.insert(o, 3.0)
    (bucket,) = tree.buckets()
    hist = tree.histogram(bucket.bucket_id)
    want_max = np.full((16, 16, 2), -np.inf)
    want_min = np.full((16, 16, 2), np.inf)
    for o in objs:
        p = position_at(o, bucket.label_time)
        i = min(max(int(p.x // (1e5 / 16)), 0), 15)
        j = min(max(int(p.y // (1e5 / 16)), 0), 15)
        want_max[i, j] = np.maximum(want_max[i, j], o.vel)
        want_min[i, j] = np.minimum(want_min[i, j], o.vel)
    assert np.array_equal(hist.vmax, want_max)
    assert np.array_equal(hist.vmin, want_min)


def _full_hist(v=(0.0, 0.0), cells=8):
    h = VelocityHistogram(EXTENT, cells)
    w = 1e5 / cells
    for i in range(cells):
        for j in range(cells):
            h.add((i + 0.5) * w, (j + 0.5) * w, *v)
    return h


def test_enlarge_stationary_and_zero_gap():
    q = RangeQuery.slice(Circle(Vec2(40_000, 30_000), 500), 80.0)
    assert enlarge_query(q, 60.0, _full_hist()) == q.shape.bbox()
    moving = _full_hist((30.0, -10.0))
    assert enlarge_query(q, 80.0, moving) == q.shape.bbox()


def test_enlarge_single_object_shift():
    h = VelocityHistogram(EXTENT, 64)
    v, label, tq = 25.0, 60.0, 100.0
    o = MovingPoint(0, Vec2(50_000, 50_000), Vec2(v, 0), label)
    h.add(o.pos.x, o.pos.y, v, 0.0)
    at_q = position_at(o, tq)
    q = RangeQuery.slice(Circle(at_q, 500), tq)
    w = enlarge_query(q, label, h)
    assert w.contains_point(o.pos)
    expected_lo = q.shape.bbox().lo.x - v * (tq - label)
    assert w.lo.x >= expected_lo - 1e-6
    assert w.lo.x - expected_lo <= h.cw + 1e-6


def test_enlarge_empty_histogram():
    q = RangeQuery.slice(Circle(Vec2(1, 1), 5), 1.0)
    assert enlarge_query(q, 60.0, VelocityHistogram(EXTENT)) is None


@pytest.mark.parametrize("kind", ["slice", "interval", "moving"])
@pytest.mark.parametrize("shape", ["circle", "rect"])
def test_queries_match_oracle(loaded, kind, shape):
    tree, objs = loaded
    rng = np.random.default_rng(["slice", "interval", "moving"].index(kind) * 2 + (shape == "rect"))
    n = 500 if (kind, shape) == ("slice", "circle") else 100
    table = list(objs.values())
    for _ in range(n):
        q = random_query(rng, 100.0, kind, shape)
        want = oracle_range(table, q)
        cands = {o.id for o in tree.candidates(q)}
        assert want <= cands
        assert tree.range_query(q) == want


def test_query_io_monotone_in_radius(loaded):
    tree, _ = loaded
    rng = np.random.default_rng(4)
    pool = tree.pool
    for _ in range(50):
        c = Vec2(*rng.uniform(0, 1e5, 2))
        t = 100 + rng.uniform(0, 60)
        last = -1
        for r in (100, 300, 900, 2700):
            before = pool.stats.logical_accesses
            tree.range_query(RangeQuery.slice(Circle(c, r), t))
            cost = pool.stats.logical_accesses - before
            assert cost >= last
            last = cost


def test_structure_check(loaded):
    tree, objs = loaded
    tree.check()
    assert {o.id for o in tree.objects()} == set(objs)


def test_key_layout():
    tree = BxTree(EXTENT, new_pool())
    o = MovingPoint(7, Vec2(0, 0), Vec2(0, 0), 0.0)
    (b0, b1) = bucket_for(0.0), bucket_for(60.0)
    assert tree.key_for(o, b0) < tree.key_for(o, b1)
    assert tree.key_for(o, b0) & 0xFFFFFFFF == 7


def test_prefixed_trees_share_storage(rng):
    pool = new_pool()
    a = BxTree(EXTENT, pool)
    b = BxTree(EXTENT, tree=a.tree, prefix=1)
    c = BxTree(EXTENT, tree=a.tree, prefix=2)
    assert a.key_hi < b.key_lo and b.key_hi < c.key_lo
    objs = random_objects(rng, 600)
    for o in objs[:200]:
        a.insert(o, 0.0)
    for o in objs[:300]:
        # the same ids may live under another prefix without clashing
        b.insert(o, 30.0)
    for o in objs[300:]:
        c.insert(o, 70.0)
    for t in (a, b, c):
        t.check()
    assert len(a.tree) == 800
    assert {o.id for o in b.objects()} == set(range(300))
    q = RangeQuery.interval(Circle(Vec2(5e4, 5e4), 2e4), 70, 80)
    assert c.range_query(q) == oracle_range(objs[300:], q)
    assert b.range_query(q) == oracle_range(objs[:300], q)
    with pytest.raises(ValueError):
        BxTree(EXTENT, new_pool(), tree=a.tree)
    with pytest.raises(ValueError):
        BxTree(EXTENT, tree=a.tree, prefix=1 << 20)
