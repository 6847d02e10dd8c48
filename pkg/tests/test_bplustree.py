import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from vpmoti.bxtree import BPlusTree, new_pool
from vpmoti.bxtree.bplustree import Leaf, NodeCodec, inner_capacity, leaf_capacity
from vpmoti.storage import CorruptIndexError


def small_tree(page_size=256, capacity=8):
    # leaf capacity (256-8)//48 = 5, inner capacity 16
    return BPlusTree(new_pool(page_size, capacity), width=5)


def val(k):
    return (float(k), 0.0, 1.0, -1.0, 2.0)


def test_capacities():
    assert leaf_capacity(4096, 5) == 85
    assert inner_capacity(4096) == 256
    t = small_tree()
    assert t.leaf_cap == 5 and t.inner_cap == 16


def test_codec_round_trip():
    codec = NodeCodec(5)
    leaf = Leaf([3, 9, 2**63 + 5], [val(3), val(9), val(1)])
    back = codec.decode(codec.encode(leaf, 4096))
    assert back.keys == leaf.keys and back.vals == leaf.vals
    with pytest.raises(ValueError):
        codec.encode(Leaf(list(range(200)), [val(i) for i in range(200)]), 4096)


def test_random_operations_keep_invariants():
    rng = random.Random(7)
    t = small_tree()
    ref = {}
    for step in range(10_000):
        op = rng.random()
        if op < 0.5 or not ref:
            k = rng.randrange(1 << 40)
            if k in ref:
                continue
            t.insert(k, val(k))
            ref[k] = val(k)
        elif op < 0.8:
            k = rng.choice(list(ref))
            assert t.delete(k) == ref.pop(k)
        else:
            k = rng.choice(list(ref))
            t.delete(k)
            k2 = rng.randrange(1 << 40)
            while k2 in ref and k2 != k:
                k2 = rng.randrange(1 << 40)
            del ref[k]
            t.insert(k2, val(k2))
            ref[k2] = val(k2)
        if step % 1000 == 0:
            assert t.check() == len(ref)
    assert t.check() == len(ref) == len(t)
    assert [k for k, _ in t.items()] == sorted(ref)
    for k in rng.sample(sorted(ref), 200):
        assert t.get(k) == ref[k]


def test_delete_everything_collapses_root():
    t = small_tree()
    keys = list(range(500))
    random.Random(1).shuffle(keys)
    for k in keys:
        t.insert(k, val(k))
    assert t.height >= 3
    for k in keys:
        t.delete(k)
    assert len(t) == 0 and t.height == 1
    assert t.check() == 0


def test_duplicate_and_missing_keys():
    t = small_tree()
    t.insert(5, val(5))
    with pytest.raises(KeyError):
        t.insert(5, val(5))
    with pytest.raises(KeyError):
        t.delete(6)
    assert t.get(6) is None


@given(st.sets(st.integers(0, 10_000), max_size=300), st.lists(st.tuples(st.integers(0, 10_000), st.integers(0, 500)), max_size=8))
def test_scan_ranges_matches_filter(keys, raw_ranges):
    t = small_tree()
    for k in keys:
        t.insert(k, val(k))
    # sorted, disjoint ranges
    ranges, last = [], -1
    for lo, width in sorted(raw_ranges):
        lo = max(lo, last + 1)
        ranges.append((lo, lo + width))
        last = lo + width
    got = [k for k, _ in t.scan_ranges(ranges)]
    want = sorted(k for k in keys if any(lo <= k <= hi for lo, hi in ranges))
    assert got == want


def test_scan_fetches_each_node_once_per_stretch():
    t = small_tree(capacity=1000)
    for k in range(400):
        t.insert(k, val(k))
    t.pool.reset_stats()
    list(t.scan_ranges([(0, 399)]))
    assert t.pool.stats.logical_accesses == len(t.leaf_pages()) + _inner_count(t)


def _inner_count(t):
    n = 0
    stack = [t.root]
    while stack:
        node = t.pool.peek(stack.pop())
        if not isinstance(node, Leaf):
            n += 1
            stack.extend(node.children)
    return n


def test_check_detects_corruption():
    t = small_tree()
    for k in range(50):
        t.insert(k, val(k))
    leaf_pid = t.leaf_pages()[1]
    node = t.pool.get(leaf_pid)
    node.keys.reverse()
    t.pool.put(leaf_pid, node)
    with pytest.raises(CorruptIndexError):
        t.check()
